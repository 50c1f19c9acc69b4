#pragma once

#include "wana/detectors.hpp"

#include <memory>
#include <string>

namespace wana::detail {

/// Host models, engine and initial state for one exploration.
struct Session
{
    Session(const Module& module, Solver& solver, const ExploreConfig& config) : engine{module, solver, config, &host}
    {
    }

    HostModels host;
    Engine engine;
    PathState initial;
    uint32_t entry = 0;
};

enum class ApplyMode
{
    symbolic,
    fake_transfer_seeds,
    dispatch_probe,
};

/// The exported `apply` if it is a defined function taking three i64 parameters.
std::optional<uint32_t> apply_entry(const Module& module, std::string& note);
std::optional<uint32_t> main_entry(const Module& module, std::string& note);

std::unique_ptr<Session> apply_session(const Module& module, Solver& solver, const ExploreConfig& config,
                                       uint32_t entry, ApplyMode mode);
std::unique_ptr<Session> handler_session(const Module& module, Solver& solver, const ExploreConfig& config,
                                         uint32_t handler);
std::unique_ptr<Session> main_session(const Module& module, Solver& solver, const ExploreConfig& config,
                                      uint32_t entry);

bool usable(const PathState& p);  ///< finished or budget-exhausted; trapped paths roll back
void set_witness(Finding& finding, uint32_t entry, const PathState& path, std::vector<WitnessSite> sites,
                 const Model* model = nullptr);
bool exploration_incomplete(const ExploreStats& stats);

/// Sites of the first block-info read and a later send of the given flavor.
std::optional<std::vector<WitnessSite>> block_info_then_send(const PathState& p, bool eth);

}  // namespace wana::detail
