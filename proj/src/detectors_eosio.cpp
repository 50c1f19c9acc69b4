#include "wana/detectors.hpp"

#include "detector_session.hpp"

#include <fmt/format.h>

namespace wana {

using namespace detail;

namespace {

struct Candidate
{
    const PathState* path = nullptr;
    std::vector<WitnessSite> sites;
};

bool better(const Candidate& a, const PathState& p)
{
    auto score = [](const PathState& s) {
        return (s.status == PathStatus::finished ? 0 : 2) + (s.low_confidence || !s.model_valid ? 1 : 0);
    };
    return a.path == nullptr || score(p) < score(*a.path);
}

/// Sites of a successful transfer-name comparison followed by an in-module call.
std::optional<std::vector<WitnessSite>> transfer_sink(const PathState& p)
{
    const auto& trace = p.trace;
    for (std::size_t i = 0; i < trace.size(); ++i)
    {
        const auto& e = trace[i];
        if (e.kind != EventKind::name_compare || e.constant != transfer_name() ||
            !e.subject.origins().contains(Origin::apply_action))
            continue;
        if (p.model_valid && evaluate(e.subject, p.model) != transfer_name())
            continue;
        for (std::size_t j = i + 1; j < trace.size(); ++j)
            if (trace[j].kind == EventKind::call || trace[j].kind == EventKind::indirect_call)
                return std::vector<WitnessSite>{{"transfer_compare", e.site}, {"transfer_call", trace[j].site}};
    }
    return std::nullopt;
}

std::optional<std::vector<WitnessSite>> read_then_send(const PathState& p, bool eth)
{
    const auto& trace = p.trace;
    for (std::size_t i = 0; i < trace.size(); ++i)
    {
        if (trace[i].kind != EventKind::block_info_read)
            continue;
        for (std::size_t j = i + 1; j < trace.size(); ++j)
        {
            const auto& e = trace[j];
            if (e.kind != EventKind::send)
                continue;
            if (eth != (e.mechanism == SendMechanism::eth_call))
                continue;
            return std::vector<WitnessSite>{{"block_info_read", trace[i].site}, {"send", e.site}};
        }
        break;
    }
    return std::nullopt;
}

}  // namespace

namespace detail {

std::optional<std::vector<WitnessSite>> block_info_then_send(const PathState& p, bool eth)
{
    return read_then_send(p, eth);
}

}  // namespace detail

DetectorResult detect_fake_eos_transfer(const Module& module, Solver& solver, const ExploreConfig& config)
{
    DetectorResult r;
    r.finding.kind = FindingKind::fake_eos_transfer;
    std::string note;
    const auto entry = apply_entry(module, note);
    if (!entry)
    {
        r.finding.notes.push_back(note);
        return r;
    }

    auto session = apply_session(module, solver, config, *entry, ApplyMode::fake_transfer_seeds);
    if (session->initial.status != PathStatus::running)
    {
        r.finding.notes.push_back("seed constraints unsatisfiable");
        return r;
    }
    auto ex = session->engine.explore(std::move(session->initial));
    r.stats = ex.stats;

    Candidate best;
    for (const auto& p : ex.paths)
    {
        if (!usable(p))
            continue;
        if (auto sites = transfer_sink(p); sites && better(best, p))
            best = Candidate{&p, *sites};
    }

    if (best.path)
    {
        r.finding.verdict = true;
        set_witness(r.finding, *entry, *best.path, best.sites);
        const auto& ctx = *session->host.action();
        const auto& m = r.finding.witness->model;
        r.finding.notes.push_back(evaluate(ctx.code, m) == evaluate(ctx.receiver, m)
                                      ? "witness has code equal to receiver"
                                      : "witness has code different from receiver");
    }
    else if (exploration_incomplete(r.stats))
    {
        r.finding.confidence = Confidence::low;
    }
    r.paths = std::move(ex.paths);
    return r;
}

DetectorResult detect_forged_notification(const Module& module, Solver& solver, const ExploreConfig& config)
{
    DetectorResult r;
    r.finding.kind = FindingKind::forged_transfer_notification;
    std::string note;
    const auto entry = apply_entry(module, note);
    if (!entry)
    {
        r.finding.notes.push_back(note);
        return r;
    }

    std::optional<uint32_t> handler;
    {
        auto probe = apply_session(module, solver, config, *entry, ApplyMode::dispatch_probe);
        auto ex = probe->engine.explore(std::move(probe->initial));
        r.stats += ex.stats;
        for (const auto& p : ex.paths)
        {
            for (const auto& e : p.trace)
                if (e.kind == EventKind::indirect_call)
                {
                    handler = static_cast<uint32_t>(e.constant);
                    break;
                }
            if (handler)
                break;
        }
    }
    if (!handler)
    {
        r.finding.notes.push_back("DispatchUnresolved: no indirect call reached for a transfer from eosio.token");
        return r;
    }
    r.finding.notes.push_back(fmt::format("transfer handler is function {}", *handler));

    auto session = handler_session(module, solver, config, *handler);
    auto ex = session->engine.explore(std::move(session->initial));
    r.stats += ex.stats;

    std::optional<Site> check_site;
    for (const auto& p : ex.paths)
    {
        for (const auto& e : p.trace)
        {
            if (e.kind != EventKind::tagged_compare)
                continue;
            const bool self_to = e.lhs_origins.contains(Origin::apply_receiver) &&
                                 e.rhs_origins.contains(Origin::transfer_to);
            const bool to_self = e.lhs_origins.contains(Origin::transfer_to) &&
                                 e.rhs_origins.contains(Origin::apply_receiver);
            if (self_to || to_self)
            {
                check_site = e.site;
                break;
            }
        }
        if (check_site)
            break;
    }

    if (check_site)
    {
        r.finding.notes.push_back(
            fmt::format("recipient checked against receiver at {}:{}", check_site->function, check_site->offset));
    }
    else
    {
        r.finding.verdict = true;
        Candidate best;
        for (const auto& p : ex.paths)
            if (!p.trace.empty() && better(best, p))
                best = Candidate{&p, {{p.status == PathStatus::trapped ? "handler_trap" : "handler_exit",
                                       p.trace.back().site}}};
        if (best.path)
            set_witness(r.finding, *handler, *best.path, best.sites);
        if (exploration_incomplete(ex.stats))
            r.finding.confidence = Confidence::low;
    }
    r.paths = std::move(ex.paths);
    return r;
}

DetectorResult detect_bid_eosio(const Module& module, Solver& solver, const ExploreConfig& config)
{
    DetectorResult r;
    r.finding.kind = FindingKind::block_info_dependency;

    const bool reads = module.imports_function("env", "tapos_block_prefix") ||
                       module.imports_function("env", "tapos_block_num");
    const bool sends = module.imports_function("env", "send_inline") || module.imports_function("env", "send_deferred");
    if (!reads || !sends)
    {
        r.finding.notes.push_back(!reads ? "no tapos_block_prefix/tapos_block_num import"
                                         : "no send_inline/send_deferred import");
        return r;
    }

    std::string note;
    const auto entry = apply_entry(module, note);
    if (!entry)
    {
        r.finding.notes.push_back(note);
        return r;
    }
    auto session = apply_session(module, solver, config, *entry, ApplyMode::symbolic);
    auto ex = session->engine.explore(std::move(session->initial));
    r.stats = ex.stats;

    Candidate best;
    for (const auto& p : ex.paths)
    {
        if (!usable(p))
            continue;
        if (auto sites = read_then_send(p, false); sites && better(best, p))
            best = Candidate{&p, *sites};
    }
    if (best.path)
    {
        r.finding.verdict = true;
        set_witness(r.finding, *entry, *best.path, best.sites);
    }
    else if (exploration_incomplete(r.stats))
    {
        r.finding.confidence = Confidence::low;
    }
    r.paths = std::move(ex.paths);
    return r;
}

}  // namespace wana
