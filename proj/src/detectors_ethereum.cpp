#include "wana/detectors.hpp"

#include "detector_session.hpp"

#include <fmt/format.h>

namespace wana {

using namespace detail;

namespace {

bool preferred(const PathState* current, const PathState& p)
{
    auto score = [](const PathState& s) {
        return (s.status == PathStatus::finished ? 0 : 2) + (s.low_confidence || !s.model_valid ? 1 : 0);
    };
    return current == nullptr || score(p) < score(*current);
}

struct MainExploration
{
    std::unique_ptr<Session> session;
    ExploreResult result;
};

std::optional<MainExploration> explore_main(const Module& module, Solver& solver, const ExploreConfig& config,
                                            DetectorResult& r)
{
    std::string note;
    const auto entry = main_entry(module, note);
    if (!entry)
    {
        r.finding.notes.push_back(note);
        return std::nullopt;
    }
    MainExploration m;
    m.session = main_session(module, solver, config, *entry);
    m.result = m.session->engine.explore(std::move(m.session->initial));
    r.stats = m.result.stats;
    return m;
}

}  // namespace

DetectorResult detect_greedy(const Module& module, Solver& solver, const ExploreConfig& config,
                             PayabilityInfo* payability)
{
    DetectorResult r;
    r.finding.kind = FindingKind::greedy;
    auto m = explore_main(module, solver, config, r);
    if (!m)
        return r;
    auto& engine = m->session->engine;
    const auto& ctx = *m->session->host.eth();

    const BoolExpr value_nonzero =
        logical_or(compare(Relation::ne, ctx.call_value_low, SymExpr::constant(64, 0)),
                   compare(Relation::ne, ctx.call_value_high, SymExpr::constant(64, 0)));

    PayabilityInfo info;
    const PathState* receiving = nullptr;
    Model receiving_model;
    bool unknown_payability = false;
    for (const auto& p : m->result.paths)
    {
        if (p.status != PathStatus::finished)
            continue;
        ++info.total;
        const auto f = engine.check(p, value_nonzero);
        if (!f.possible())
        {
            ++info.non_payable;
            continue;
        }
        if (f.status == SatStatus::unknown)
            unknown_payability = true;
        if (preferred(receiving, p))
        {
            receiving = &p;
            receiving_model = f.model;
        }
    }
    if (payability)
        *payability = info;
    r.finding.notes.push_back(
        fmt::format("paths reaching completion: {}, non-payable: {}, payable: {}", info.total, info.non_payable,
                    info.payable()));

    bool sends = false;
    if (!module.imports_function("ethereum", "call"))
    {
        r.finding.notes.push_back("no ethereum.call import");
    }
    else
    {
        for (const auto& p : m->result.paths)
        {
            if (!usable(p))
                continue;
            for (const auto& e : p.trace)
                if (e.kind == EventKind::send && e.mechanism == SendMechanism::eth_call)
                {
                    sends = true;
                    r.finding.notes.push_back(
                        fmt::format("ether can be sent at {}:{}", e.site.function, e.site.offset));
                    break;
                }
            if (sends)
                break;
        }
    }

    if (receiving && !sends)
    {
        r.finding.verdict = true;
        set_witness(r.finding, m->session->entry, *receiving,
                    {{"payable_completion", receiving->trace.back().site}}, &receiving_model);
        if (unknown_payability || exploration_incomplete(r.stats))
            r.finding.confidence = Confidence::low;
    }
    else if (!sends && exploration_incomplete(r.stats))
    {
        r.finding.confidence = Confidence::low;
    }
    r.paths = std::move(m->result.paths);
    return r;
}

DetectorResult detect_dangerous_delegatecall(const Module& module, Solver& solver, const ExploreConfig& config)
{
    DetectorResult r;
    r.finding.kind = FindingKind::dangerous_delegatecall;
    r.finding.notes.push_back("callDelegate classified on its address and data arguments");
    auto m = explore_main(module, solver, config, r);
    if (!m)
        return r;

    const PathState* best = nullptr;
    Site site;
    bool storage_only = false;
    for (const auto& p : m->result.paths)
    {
        if (!usable(p))
            continue;
        for (const auto& e : p.trace)
        {
            if (e.kind != EventKind::delegate_call || e.constant_argument)
                continue;
            if (!e.argument_origins.contains(Origin::call_data))
            {
                storage_only = storage_only || e.argument_origins.contains(Origin::storage);
                continue;
            }
            if (preferred(best, p))
            {
                best = &p;
                site = e.site;
            }
            break;
        }
    }
    if (best)
    {
        r.finding.verdict = true;
        set_witness(r.finding, m->session->entry, *best, {{"delegate_call", site}});
    }
    else
    {
        if (storage_only)
            r.finding.notes.push_back("non-constant delegate arguments derive from storage only");
        if (exploration_incomplete(r.stats))
            r.finding.confidence = Confidence::low;
    }
    r.paths = std::move(m->result.paths);
    return r;
}

DetectorResult detect_bid_eth(const Module& module, Solver& solver, const ExploreConfig& config)
{
    DetectorResult r;
    r.finding.kind = FindingKind::eth_block_info_dependency;
    auto m = explore_main(module, solver, config, r);
    if (!m)
        return r;

    const PathState* best = nullptr;
    std::vector<WitnessSite> sites;
    for (const auto& p : m->result.paths)
    {
        if (!usable(p))
            continue;
        if (auto s = block_info_then_send(p, true); s && preferred(best, p))
        {
            best = &p;
            sites = *s;
        }
    }
    if (best)
    {
        r.finding.verdict = true;
        set_witness(r.finding, m->session->entry, *best, sites);
    }
    else if (exploration_incomplete(r.stats))
    {
        r.finding.confidence = Confidence::low;
    }
    r.paths = std::move(m->result.paths);
    return r;
}

}  // namespace wana
