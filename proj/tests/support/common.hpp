#pragma once

#include "wana/loader.hpp"
#include "wana/solver.hpp"

#include <chrono>
#include <cstdlib>
#include <memory>
#include <string>

namespace testing_support {

inline std::string fixture(const std::string& relative)
{
    return std::string{WANA_FIXTURE_DIR} + "/" + relative;
}

inline wana::Module load_fixture(const std::string& relative)
{
    return wana::decode_module(wana::read_file(fixture(relative)));
}

inline std::string solver_path()
{
    if (const char* env = std::getenv("WANA_SOLVER"); env && *env)
        return env;
    return WANA_TEST_SOLVER;
}

inline std::unique_ptr<wana::SmtProcessSolver> make_solver(std::chrono::milliseconds timeout = std::chrono::seconds{5})
{
    return std::make_unique<wana::SmtProcessSolver>(solver_path(), timeout);
}

}  // namespace testing_support
