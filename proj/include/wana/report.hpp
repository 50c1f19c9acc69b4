#pragma once

#include "wana/detectors.hpp"

#include <json.hpp>

#include <chrono>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace wana {

inline constexpr const char* report_version = "0.1.0";

enum class PlatformChoice : uint8_t
{
    automatic,
    eosio,
    ethereum,
};

std::string_view to_string(PlatformChoice p) noexcept;
std::optional<PlatformChoice> platform_choice_from_string(std::string_view s) noexcept;

struct UsageError : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

struct RunConfig
{
    std::vector<std::string> inputs;
    PlatformChoice platform = PlatformChoice::automatic;
    uint32_t loop_depth = 10;
    uint64_t seed = 0;
    std::string solver_path;  ///< empty: resolve from WANA_SOLVER, then PATH
    uint32_t solver_timeout_ms = 5000;
    uint32_t timeout_ms = 60000;  ///< per contract
    uint32_t max_paths = 2000;
    std::string format = "text";
    unsigned jobs = 1;
    bool omit_timing = false;

    bool operator==(const RunConfig&) const = default;
};

struct ModuleStats
{
    uint32_t functions = 0;
    uint64_t instructions = 0;

    bool operator==(const ModuleStats&) const = default;
};

struct Timing
{
    double decode_ms = 0;
    double explore_ms = 0;
    double solve_ms = 0;
    double total_ms = 0;

    bool operator==(const Timing&) const = default;
};

struct EngineDiagnostics
{
    uint64_t paths = 0;
    uint64_t solver_queries = 0;
    uint64_t unsupported_instructions = 0;
    uint64_t unknown_verdicts = 0;
    uint64_t budget_exhausted = 0;
    bool path_limit_reached = false;
    std::vector<std::string> messages;

    bool operator==(const EngineDiagnostics&) const = default;
};

enum class ContractStatus : uint8_t
{
    ok,
    timed_out,
    error,
};

std::string_view to_string(ContractStatus s) noexcept;

struct ContractReport
{
    std::string file;
    std::optional<Platform> platform;
    ContractStatus status = ContractStatus::ok;
    std::string error;
    ModuleStats stats;
    std::vector<Finding> findings;
    Timing timing;
    EngineDiagnostics diagnostics;

    bool operator==(const ContractReport&) const = default;
};

struct KindSummary
{
    uint64_t count = 0;
    double percentage = 0;

    bool operator==(const KindSummary&) const = default;
};

struct Summary
{
    uint64_t analyzed = 0;
    uint64_t failed = 0;
    std::map<std::string, KindSummary> per_kind;
    std::map<std::string, uint64_t> per_platform;

    bool operator==(const Summary&) const = default;
};

struct Report
{
    std::string version = report_version;
    RunConfig config;
    std::vector<ContractReport> contracts;
    Summary summary;

    bool operator==(const Report&) const = default;
};

/// Resolves the platform from import namespaces; nothing when ambiguous.
std::optional<Platform> detect_platform(const Module& module);

ContractReport run_file(const std::string& path, const RunConfig& config, Solver& solver);
ContractReport run_file(const std::string& path, const RunConfig& config);

/// All `.wasm` files below the inputs (directories are scanned, sorted by path).
std::vector<std::string> collect_inputs(const std::vector<std::string>& inputs);

Report run_corpus(const std::string& directory, const RunConfig& config);
Report run_inputs(const RunConfig& config);

Summary summarize(const std::vector<ContractReport>& contracts);

/// 0: clean, 1: findings, 2: operational errors.
int exit_code(const Report& report);

nlohmann::json to_json(const Report& report);
Report report_from_json(const nlohmann::json& j);
std::string to_text(const Report& report);

}  // namespace wana
