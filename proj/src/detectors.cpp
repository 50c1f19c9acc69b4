#include "wana/detectors.hpp"
#include "wana/names.hpp"

#include "detector_session.hpp"

namespace wana {

std::string_view to_string(FindingKind k) noexcept
{
    switch (k)
    {
    case FindingKind::fake_eos_transfer: return "fake_eos_transfer";
    case FindingKind::forged_transfer_notification: return "forged_transfer_notification";
    case FindingKind::block_info_dependency: return "block_info_dependency";
    case FindingKind::greedy: return "greedy";
    case FindingKind::dangerous_delegatecall: return "dangerous_delegatecall";
    case FindingKind::eth_block_info_dependency: return "eth_block_info_dependency";
    }
    return "?";
}

std::optional<FindingKind> finding_kind_from_string(std::string_view s) noexcept
{
    for (auto k : all_finding_kinds)
        if (to_string(k) == s)
            return k;
    return std::nullopt;
}

Platform platform_of(FindingKind k) noexcept
{
    switch (k)
    {
    case FindingKind::fake_eos_transfer:
    case FindingKind::forged_transfer_notification:
    case FindingKind::block_info_dependency: return Platform::eosio;
    default: return Platform::ethereum;
    }
}

std::string_view to_string(Confidence c) noexcept
{
    return c == Confidence::high ? "high" : "low";
}

uint64_t eosio_token_name()
{
    static const uint64_t v = encode_name("eosio.token");
    return v;
}

uint64_t transfer_name()
{
    static const uint64_t v = encode_name("transfer");
    return v;
}

uint64_t test_receiver_name()
{
    static const uint64_t v = encode_name("testacc");
    return v;
}

bool trace_visits(const std::vector<TraceEvent>& trace, const std::vector<WitnessSite>& sites)
{
    std::size_t next = 0;
    for (const auto& e : trace)
    {
        if (next == sites.size())
            break;
        if (e.site == sites[next].site)
            ++next;
    }
    return next == sites.size();
}

DetectorResult run_detector(FindingKind kind, const Module& module, Solver& solver, const ExploreConfig& config)
{
    switch (kind)
    {
    case FindingKind::fake_eos_transfer: return detect_fake_eos_transfer(module, solver, config);
    case FindingKind::forged_transfer_notification: return detect_forged_notification(module, solver, config);
    case FindingKind::block_info_dependency: return detect_bid_eosio(module, solver, config);
    case FindingKind::greedy: return detect_greedy(module, solver, config);
    case FindingKind::dangerous_delegatecall: return detect_dangerous_delegatecall(module, solver, config);
    case FindingKind::eth_block_info_dependency: return detect_bid_eth(module, solver, config);
    }
    return {};
}

bool replay_witness(const Module& module, Solver& solver, const ExploreConfig& config, const Finding& finding)
{
    if (!finding.witness)
        return false;
    ExploreConfig replay = config;
    replay.replay = finding.witness->model;

    std::string note;
    std::unique_ptr<detail::Session> session;
    switch (finding.kind)
    {
    case FindingKind::fake_eos_transfer:
    case FindingKind::block_info_dependency: {
        const auto entry = detail::apply_entry(module, note);
        if (!entry)
            return false;
        session = detail::apply_session(module, solver, replay, *entry,
                                        finding.kind == FindingKind::fake_eos_transfer
                                            ? detail::ApplyMode::fake_transfer_seeds
                                            : detail::ApplyMode::symbolic);
        break;
    }
    case FindingKind::forged_transfer_notification:
        session = detail::handler_session(module, solver, replay, finding.witness->entry);
        break;
    case FindingKind::greedy:
    case FindingKind::dangerous_delegatecall:
    case FindingKind::eth_block_info_dependency: {
        const auto entry = detail::main_entry(module, note);
        if (!entry)
            return false;
        session = detail::main_session(module, solver, replay, *entry);
        break;
    }
    }
    if (session->initial.status != PathStatus::running)
        return false;
    const auto result = session->engine.explore(std::move(session->initial));
    for (const auto& p : result.paths)
        if (trace_visits(p.trace, finding.witness->sites))
            return true;
    return false;
}

namespace detail {

std::optional<uint32_t> apply_entry(const Module& module, std::string& note)
{
    const auto entry = export_lookup(module, "apply");
    if (!entry || module.is_imported_function(*entry))
    {
        note = "NoApplyExport: module does not export a defined apply function";
        return std::nullopt;
    }
    const auto& type = module.function_type(*entry);
    if (type.params != std::vector<ValType>{ValType::i64, ValType::i64, ValType::i64})
    {
        note = "NoApplyExport: apply does not take exactly three i64 parameters";
        return std::nullopt;
    }
    return entry;
}

std::optional<uint32_t> main_entry(const Module& module, std::string& note)
{
    const auto entry = export_lookup(module, "main");
    if (!entry || module.is_imported_function(*entry))
    {
        note = "NoMainExport: module does not export a defined main function";
        return std::nullopt;
    }
    return entry;
}

std::unique_ptr<Session> apply_session(const Module& module, Solver& solver, const ExploreConfig& config,
                                       uint32_t entry, ApplyMode mode)
{
    auto s = std::make_unique<Session>(module, solver, config);
    s->entry = entry;
    s->initial = s->engine.instantiate();
    auto& st = s->initial;

    ActionContext ctx;
    if (mode == ApplyMode::dispatch_probe)
    {
        ctx.receiver = SymExpr::constant(64, test_receiver_name(), Origin::apply_receiver);
        ctx.code = SymExpr::constant(64, eosio_token_name(), Origin::apply_code);
        ctx.action = SymExpr::constant(64, transfer_name(), Origin::apply_action);
        ctx.action_data.assign(16, SymExpr::constant(64, 0));
    }
    else
    {
        ctx = make_action_context(s->engine, st);
    }
    s->host = HostModels{ctx};

    if (mode == ApplyMode::fake_transfer_seeds)
    {
        s->engine.assume(st, compare(Relation::ne, ctx.code, SymExpr::constant(64, eosio_token_name())));
        if (st.status == PathStatus::running)
            s->engine.assume(st, compare(Relation::eq, ctx.action, SymExpr::constant(64, transfer_name())));
    }
    s->engine.enter(st, entry, {ctx.receiver, ctx.code, ctx.action});
    return s;
}

std::unique_ptr<Session> handler_session(const Module& module, Solver& solver, const ExploreConfig& config,
                                         uint32_t handler)
{
    auto s = std::make_unique<Session>(module, solver, config);
    s->entry = handler;
    s->initial = s->engine.instantiate();
    auto& st = s->initial;

    ActionContext ctx;
    ctx.receiver = s->engine.fresh(st, 64, Origin::apply_receiver);
    ctx.code = SymExpr::constant(64, eosio_token_name(), Origin::apply_code);
    ctx.action = SymExpr::constant(64, transfer_name(), Origin::apply_action);
    for (int i = 0; i < 16; ++i)
    {
        auto w = s->engine.fresh(st, 64, Origin::action_data);
        if (i == 1)
            w = w.with_origins(OriginSet{Origin::action_data} | OriginSet{Origin::transfer_to});
        ctx.action_data.push_back(std::move(w));
    }
    s->host = HostModels{ctx};

    std::vector<SymExpr> args;
    const auto& type = module.function_type(handler);
    for (std::size_t i = 0; i < type.params.size(); ++i)
    {
        const auto t = type.params[i];
        if (i == 0 && t == ValType::i64)
            args.push_back(ctx.receiver);
        else if (i == 2 && t == ValType::i64)
            args.push_back(s->engine.fresh(st, 64, Origin::transfer_to));
        else
            args.push_back(s->engine.fresh(st, bit_width(t), Origin::other));
    }
    s->engine.enter(st, handler, std::move(args));
    return s;
}

std::unique_ptr<Session> main_session(const Module& module, Solver& solver, const ExploreConfig& config,
                                      uint32_t entry)
{
    auto s = std::make_unique<Session>(module, solver, config);
    s->entry = entry;
    s->initial = s->engine.instantiate();
    auto& st = s->initial;
    s->host = HostModels{make_eth_context(s->engine, st)};
    std::vector<SymExpr> args;
    for (const auto t : module.function_type(entry).params)
        args.push_back(s->engine.fresh(st, bit_width(t), Origin::other));
    s->engine.enter(st, entry, std::move(args));
    return s;
}

bool usable(const PathState& p)
{
    return p.status == PathStatus::finished || p.status == PathStatus::budget_exhausted;
}

void set_witness(Finding& finding, uint32_t entry, const PathState& path, std::vector<WitnessSite> sites,
                 const Model* model)
{
    finding.witness = Witness{entry, model ? *model : path.model, std::move(sites)};
    if (path.low_confidence || !path.model_valid || path.status == PathStatus::budget_exhausted)
        finding.confidence = Confidence::low;
}

bool exploration_incomplete(const ExploreStats& stats)
{
    return stats.truncated || stats.timed_out || stats.unknown_verdicts > 0;
}

}  // namespace detail

}  // namespace wana
