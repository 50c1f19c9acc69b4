#pragma once

#include "wana/engine.hpp"
#include "wana/host.hpp"
#include "wana/module.hpp"
#include "wana/solver.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace wana {

enum class FindingKind : uint8_t
{
    fake_eos_transfer,
    forged_transfer_notification,
    block_info_dependency,
    greedy,
    dangerous_delegatecall,
    eth_block_info_dependency,
};

inline constexpr FindingKind all_finding_kinds[] = {
    FindingKind::fake_eos_transfer,  FindingKind::forged_transfer_notification, FindingKind::block_info_dependency,
    FindingKind::greedy,             FindingKind::dangerous_delegatecall,       FindingKind::eth_block_info_dependency,
};

std::string_view to_string(FindingKind k) noexcept;
std::optional<FindingKind> finding_kind_from_string(std::string_view s) noexcept;
Platform platform_of(FindingKind k) noexcept;

enum class Confidence : uint8_t
{
    high,
    low,
};

std::string_view to_string(Confidence c) noexcept;

struct WitnessSite
{
    std::string label;
    Site site;

    bool operator==(const WitnessSite&) const = default;
};

struct Witness
{
    uint32_t entry = 0;  ///< function the exploration started from
    Model model;
    std::vector<WitnessSite> sites;  ///< in trace order

    bool operator==(const Witness&) const = default;
};

struct Finding
{
    FindingKind kind = FindingKind::fake_eos_transfer;
    bool verdict = false;
    Confidence confidence = Confidence::high;
    std::optional<Witness> witness;
    std::vector<std::string> notes;

    bool operator==(const Finding&) const = default;
};

/// Finding plus the exploration it was derived from.
struct DetectorResult
{
    Finding finding;
    ExploreStats stats;
    std::vector<PathState> paths;
};

/// Exact values used by the EOSIO detectors.
uint64_t eosio_token_name();
uint64_t transfer_name();
uint64_t test_receiver_name();

DetectorResult detect_fake_eos_transfer(const Module& module, Solver& solver, const ExploreConfig& config);
DetectorResult detect_forged_notification(const Module& module, Solver& solver, const ExploreConfig& config);
DetectorResult detect_bid_eosio(const Module& module, Solver& solver, const ExploreConfig& config);

struct PayabilityInfo
{
    uint64_t total = 0;        ///< finished paths of `main`
    uint64_t non_payable = 0;  ///< finished paths that cannot complete with a nonzero call value

    uint64_t payable() const noexcept { return total - non_payable; }
};

DetectorResult detect_greedy(const Module& module, Solver& solver, const ExploreConfig& config,
                             PayabilityInfo* payability = nullptr);
DetectorResult detect_dangerous_delegatecall(const Module& module, Solver& solver, const ExploreConfig& config);
DetectorResult detect_bid_eth(const Module& module, Solver& solver, const ExploreConfig& config);

DetectorResult run_detector(FindingKind kind, const Module& module, Solver& solver, const ExploreConfig& config);

/// Re-executes the exploration behind a finding with every fresh value fixed to the witness
/// model and reports whether some path visits the witness sites in order.
bool replay_witness(const Module& module, Solver& solver, const ExploreConfig& config, const Finding& finding);

/// True when `sites` occur in `trace` as an ordered subsequence of event sites.
bool trace_visits(const std::vector<TraceEvent>& trace, const std::vector<WitnessSite>& sites);

}  // namespace wana
