#include "wana/engine.hpp"

#include "wana/numeric.hpp"

#include <algorithm>
#include <fmt/format.h>

namespace wana {

std::string_view to_string(PathStatus s) noexcept
{
    switch (s)
    {
    case PathStatus::running: return "running";
    case PathStatus::finished: return "finished";
    case PathStatus::trapped: return "trapped";
    case PathStatus::pruned: return "pruned";
    case PathStatus::budget_exhausted: return "budget_exhausted";
    }
    return "?";
}

std::string_view to_string(EventKind k) noexcept
{
    switch (k)
    {
    case EventKind::host_call: return "host_call";
    case EventKind::name_compare: return "name_compare";
    case EventKind::tagged_compare: return "tagged_compare";
    case EventKind::send: return "send";
    case EventKind::block_info_read: return "block_info_read";
    case EventKind::delegate_call: return "delegate_call";
    case EventKind::indirect_call: return "indirect_call";
    case EventKind::call: return "call";
    case EventKind::assert_fork: return "assert_fork";
    case EventKind::finished: return "finished";
    case EventKind::trapped: return "trapped";
    }
    return "?";
}

std::string_view to_string(SendMechanism m) noexcept
{
    switch (m)
    {
    case SendMechanism::inline_action: return "inline";
    case SendMechanism::deferred: return "deferred";
    case SendMechanism::eth_call: return "eth_call";
    }
    return "?";
}

uint32_t PathState::max_loop_count() const
{
    uint32_t m = 0;
    for (const auto& [site, count] : loop_counters)
        m = std::max(m, count);
    return m;
}

ExploreStats& ExploreStats::operator+=(const ExploreStats& o)
{
    paths += o.paths;
    forks += o.forks;
    pruned += o.pruned;
    finished += o.finished;
    trapped += o.trapped;
    budget_exhausted += o.budget_exhausted;
    unsupported += o.unsupported;
    unknown_verdicts += o.unknown_verdicts;
    solver_queries += o.solver_queries;
    instructions += o.instructions;
    truncated = truncated || o.truncated;
    timed_out = timed_out || o.timed_out;
    return *this;
}

namespace {

struct Unsupported : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

SymExpr zero_of(ValType t)
{
    return SymExpr::constant(bit_width(t), 0);
}

SymExpr pop(PathState& s)
{
    if (s.stack.size() <= s.frames.back().stack_base)
        throw std::runtime_error{"operand stack underflow"};
    SymExpr v = std::move(s.stack.back());
    s.stack.pop_back();
    return v;
}

SymExpr pop_width(PathState& s, unsigned width)
{
    SymExpr v = pop(s);
    if (v.width() != width)
        throw WidthMismatch{"operand width does not match instruction"};
    return v;
}

constexpr OriginSet name_tags = OriginSet{Origin::apply_action} | OriginSet{Origin::apply_code};

struct LoadSpec
{
    unsigned bytes;
    unsigned width;
    bool sign;
};

LoadSpec load_spec(Opcode op)
{
    switch (op)
    {
    case Opcode::i32_load: return {4, 32, false};
    case Opcode::i64_load: return {8, 64, false};
    case Opcode::f32_load: return {4, 32, false};
    case Opcode::f64_load: return {8, 64, false};
    case Opcode::i32_load8_s: return {1, 32, true};
    case Opcode::i32_load8_u: return {1, 32, false};
    case Opcode::i32_load16_s: return {2, 32, true};
    case Opcode::i32_load16_u: return {2, 32, false};
    case Opcode::i64_load8_s: return {1, 64, true};
    case Opcode::i64_load8_u: return {1, 64, false};
    case Opcode::i64_load16_s: return {2, 64, true};
    case Opcode::i64_load16_u: return {2, 64, false};
    case Opcode::i64_load32_s: return {4, 64, true};
    case Opcode::i64_load32_u: return {4, 64, false};
    default: throw std::logic_error{"not a load"};
    }
}

struct StoreSpec
{
    unsigned bytes;
    unsigned width;
};

StoreSpec store_spec(Opcode op)
{
    switch (op)
    {
    case Opcode::i32_store: return {4, 32};
    case Opcode::i64_store: return {8, 64};
    case Opcode::f32_store: return {4, 32};
    case Opcode::f64_store: return {8, 64};
    case Opcode::i32_store8: return {1, 32};
    case Opcode::i32_store16: return {2, 32};
    case Opcode::i64_store8: return {1, 64};
    case Opcode::i64_store16: return {2, 64};
    case Opcode::i64_store32: return {4, 64};
    default: throw std::logic_error{"not a store"};
    }
}

struct FloatShape
{
    unsigned operands;
    unsigned operand_width;
    unsigned result_width;
    bool predicate;
};

FloatShape float_shape(Opcode op)
{
    const auto b = static_cast<uint8_t>(op);
    if (b >= 0x5B && b <= 0x60) return {2, 32, 32, true};
    if (b >= 0x61 && b <= 0x66) return {2, 64, 32, true};
    if (b >= 0x8B && b <= 0x91) return {1, 32, 32, false};
    if (b >= 0x92 && b <= 0x98) return {2, 32, 32, false};
    if (b >= 0x99 && b <= 0x9F) return {1, 64, 64, false};
    if (b >= 0xA0 && b <= 0xA6) return {2, 64, 64, false};
    switch (op)
    {
    case Opcode::i32_trunc_f32_s:
    case Opcode::i32_trunc_f32_u: return {1, 32, 32, false};
    case Opcode::i32_trunc_f64_s:
    case Opcode::i32_trunc_f64_u: return {1, 64, 32, false};
    case Opcode::i64_trunc_f32_s:
    case Opcode::i64_trunc_f32_u: return {1, 32, 64, false};
    case Opcode::i64_trunc_f64_s:
    case Opcode::i64_trunc_f64_u: return {1, 64, 64, false};
    case Opcode::f32_convert_i32_s:
    case Opcode::f32_convert_i32_u: return {1, 32, 32, false};
    case Opcode::f32_convert_i64_s:
    case Opcode::f32_convert_i64_u: return {1, 64, 32, false};
    case Opcode::f32_demote_f64: return {1, 64, 32, false};
    case Opcode::f64_convert_i32_s:
    case Opcode::f64_convert_i32_u: return {1, 32, 64, false};
    case Opcode::f64_convert_i64_s:
    case Opcode::f64_convert_i64_u: return {1, 64, 64, false};
    case Opcode::f64_promote_f32: return {1, 32, 64, false};
    default: throw std::logic_error{"not a float instruction"};
    }
}

std::optional<std::pair<BinaryOp, unsigned>> binary_op(Opcode op)
{
    const auto b = static_cast<uint8_t>(op);
    static constexpr BinaryOp order[] = {BinaryOp::add,     BinaryOp::sub,    BinaryOp::mul,    BinaryOp::div_s,
                                         BinaryOp::div_u,   BinaryOp::rem_s,  BinaryOp::rem_u,  BinaryOp::bit_and,
                                         BinaryOp::bit_or,  BinaryOp::bit_xor, BinaryOp::shl,   BinaryOp::shr_s,
                                         BinaryOp::shr_u,   BinaryOp::rotl,   BinaryOp::rotr};
    if (b >= 0x6A && b <= 0x78)
        return std::pair{order[b - 0x6A], 32u};
    if (b >= 0x7C && b <= 0x8A)
        return std::pair{order[b - 0x7C], 64u};
    return std::nullopt;
}

std::optional<std::pair<Relation, unsigned>> relation_op(Opcode op)
{
    const auto b = static_cast<uint8_t>(op);
    static constexpr Relation order[] = {Relation::eq,   Relation::ne,   Relation::lt_s, Relation::lt_u,
                                         Relation::gt_s, Relation::gt_u, Relation::le_s, Relation::le_u,
                                         Relation::ge_s, Relation::ge_u};
    if (b >= 0x46 && b <= 0x4F)
        return std::pair{order[b - 0x46], 32u};
    if (b >= 0x51 && b <= 0x5A)
        return std::pair{order[b - 0x51], 64u};
    return std::nullopt;
}

std::optional<std::pair<UnaryOp, unsigned>> unary_op(Opcode op)
{
    switch (op)
    {
    case Opcode::i32_clz: return std::pair{UnaryOp::clz, 32u};
    case Opcode::i32_ctz: return std::pair{UnaryOp::ctz, 32u};
    case Opcode::i32_popcnt: return std::pair{UnaryOp::popcnt, 32u};
    case Opcode::i64_clz: return std::pair{UnaryOp::clz, 64u};
    case Opcode::i64_ctz: return std::pair{UnaryOp::ctz, 64u};
    case Opcode::i64_popcnt: return std::pair{UnaryOp::popcnt, 64u};
    default: return std::nullopt;
    }
}

}  // namespace

Engine::Engine(const Module& module, Solver& solver, ExploreConfig config, HostInterface* host)
    : module_{module}, solver_{solver}, config_{std::move(config)}, host_{host}
{
    if (config_.loop_bound < 1)
        throw std::invalid_argument{"loop bound must be at least 1"};
}

namespace {

SymExpr eval_const(const ConstExpr& e, const std::vector<SymExpr>& globals)
{
    switch (e.op)
    {
    case Opcode::i32_const:
    case Opcode::f32_const: return SymExpr::constant(32, e.literal & 0xFFFFFFFFu);
    case Opcode::i64_const:
    case Opcode::f64_const: return SymExpr::constant(64, e.literal);
    case Opcode::global_get:
        if (e.index < globals.size())
            return globals[e.index];
        break;
    default: break;
    }
    throw InstantiationError{InstantiationErrorKind::non_const_initializer,
                             fmt::format("unsupported initializer {}", opcode_name(e.op))};
}

}  // namespace

PathState Engine::instantiate() const
{
    PathState s;
    s.prng.seed(config_.seed);

    if (auto mem = module_.memory())
        s.memory = Memory{mem->min, mem->max};

    for (const auto& imp : module_.imports)
        if (imp.kind == ExternKind::global)
        {
            s.globals.push_back(zero_of(imp.global.type));
            s.diagnostics.push_back(fmt::format("imported global {}.{} initialized to zero", imp.module, imp.name));
        }
    for (const auto& g : module_.globals)
    {
        auto v = eval_const(g.init, s.globals);
        if (v.width() != bit_width(g.type.type))
            throw InstantiationError{InstantiationErrorKind::non_const_initializer, "global initializer type mismatch"};
        s.globals.push_back(std::move(v));
    }

    auto table = std::make_shared<std::vector<std::optional<uint32_t>>>();
    if (auto t = module_.table())
        table->resize(t->limits.min);
    for (const auto& seg : module_.elements)
    {
        const auto offset = eval_const(seg.offset, s.globals);
        if (offset.width() != 32 || !offset.is_concrete())
            throw InstantiationError{InstantiationErrorKind::non_const_initializer, "element offset is not i32"};
        const uint64_t base = offset.bits();
        if (base + seg.functions.size() > table->size())
            throw InstantiationError{InstantiationErrorKind::offset_out_of_bounds,
                                     fmt::format("element segment at {} exceeds table size {}", base, table->size())};
        for (std::size_t i = 0; i < seg.functions.size(); ++i)
            (*table)[base + i] = seg.functions[i];
    }
    s.table = std::move(table);

    for (const auto& seg : module_.data)
    {
        const auto offset = eval_const(seg.offset, s.globals);
        if (offset.width() != 32 || !offset.is_concrete())
            throw InstantiationError{InstantiationErrorKind::non_const_initializer, "data offset is not i32"};
        if (!s.memory.in_bounds(offset.bits(), seg.bytes.size()))
            throw InstantiationError{InstantiationErrorKind::offset_out_of_bounds,
                                     fmt::format("data segment at {} exceeds memory size {}", offset.bits(),
                                                 s.memory.size())};
        s.memory.write_bytes(offset.bits(), seg.bytes);
    }

    if (module_.start)
        s.diagnostics.push_back("start function present but not executed");
    return s;
}

SymExpr Engine::fresh(PathState& state, unsigned width, Origin origin) const
{
    const uint32_t id = state.next_variable++;
    if (config_.replay)
    {
        const auto it = config_.replay->find(id);
        const uint64_t v = it == config_.replay->end() ? 0 : it->second;
        return SymExpr::constant(width, v & width_mask(width), OriginSet{origin});
    }
    return SymExpr::variable(width, id, origin);
}

SymExpr Engine::random_value(PathState& state, ValType type) const
{
    const unsigned w = bit_width(type);
    return SymExpr::constant(w, state.prng() & width_mask(w));
}

void Engine::enter(PathState& state, uint32_t func, std::vector<SymExpr> args) const
{
    if (module_.is_imported_function(func))
        throw std::invalid_argument{"cannot enter an imported function"};
    const auto& type = module_.function_type(func);
    if (args.size() != type.params.size())
        throw std::invalid_argument{"argument count does not match function type"};
    for (std::size_t i = 0; i < args.size(); ++i)
        if (args[i].width() != bit_width(type.params[i]))
            throw WidthMismatch{"argument width does not match parameter type"};

    const auto& fn = module_.defined_function(func);
    Frame f;
    f.function = func;
    f.locals = std::move(args);
    for (const auto& decl : fn.locals)
        f.locals.insert(f.locals.end(), decl.count, zero_of(decl.type));
    f.return_arity = static_cast<uint32_t>(type.results.size());
    f.stack_base = static_cast<uint32_t>(state.stack.size());
    f.labels.push_back(Label{LabelKind::function, f.return_arity, static_cast<uint32_t>(fn.body.size() - 1),
                             f.stack_base});
    f.pc = 0;
    state.frames.push_back(std::move(f));
}

Feasibility Engine::check(const PathState& state, const BoolExpr& c)
{
    if (c.is_true())
        return {SatStatus::sat, state.model};
    if (c.is_false())
        return {SatStatus::unsat, {}};
    if (state.model_valid && evaluate(c, state.model))
        return {SatStatus::sat, state.model};

    std::vector<BoolExpr> query(state.condition.conjuncts().begin(), state.condition.conjuncts().end());
    query.push_back(c);
    ++stats_.solver_queries;
    auto verdict = solver_.check(query);
    if (verdict.status == SatStatus::sat)
        return {SatStatus::sat, verdict.model.value_or(Model{})};
    if (verdict.status == SatStatus::unknown)
        return {SatStatus::unknown, state.model};
    return {SatStatus::unsat, {}};
}

void Engine::apply_check(PathState& s, const BoolExpr& c, const Feasibility& f)
{
    s.condition.append(c);
    if (f.status == SatStatus::sat)
    {
        s.model = f.model;
        s.model_valid = true;
    }
    else
    {
        s.low_confidence = true;
        s.model_valid = false;
        ++stats_.unknown_verdicts;
    }
}

bool Engine::assume(PathState& state, const BoolExpr& c)
{
    const auto f = check(state, c);
    if (!f.possible())
    {
        terminate(state, PathStatus::pruned);
        return false;
    }
    if (!c.is_constant())
        apply_check(state, c, f);
    return true;
}

uint64_t Engine::concretize(PathState& state, const SymExpr& value)
{
    if (value.is_concrete())
        return value.bits();
    if (!state.model_valid)
    {
        ++stats_.solver_queries;
        auto verdict = solver_.check(state.condition);
        if (verdict.status == SatStatus::sat)
        {
            state.model = verdict.model.value_or(Model{});
            state.model_valid = true;
        }
    }
    const uint64_t v = evaluate(value, state.model);
    state.condition.append(compare(Relation::eq, value, SymExpr::constant(value.width(), v)));
    return v;
}

void Engine::trap(PathState& s, std::string why)
{
    TraceEvent e;
    e.kind = EventKind::trapped;
    e.site = s.last_site;
    e.name = std::move(why);
    s.trace.push_back(std::move(e));
    s.status = PathStatus::trapped;
}

void Engine::terminate(PathState& s, PathStatus status)
{
    if (status == PathStatus::finished)
    {
        TraceEvent e;
        e.kind = EventKind::finished;
        e.site = s.last_site;
        s.trace.push_back(std::move(e));
    }
    s.status = status;
}

bool Engine::back_edge_at_bound(const PathState& s, uint32_t depth) const
{
    const auto& f = s.frames.back();
    if (depth >= f.labels.size())
        return false;
    const auto& label = f.labels[f.labels.size() - 1 - depth];
    if (label.kind != LabelKind::loop)
        return false;
    const auto it = s.loop_counters.find(Site{f.function, label.target});
    return it != s.loop_counters.end() && it->second >= config_.loop_bound;
}

void Engine::branch_to(PathState& s, uint32_t depth)
{
    auto& f = s.frames.back();
    if (depth >= f.labels.size())
        throw std::runtime_error{"branch depth exceeds label stack"};
    const Label label = f.labels[f.labels.size() - 1 - depth];
    if (label.kind == LabelKind::function)
    {
        do_return(s);
        return;
    }
    const uint32_t arity = label.kind == LabelKind::loop ? 0 : label.arity;
    if (s.stack.size() < label.height + arity)
        throw std::runtime_error{"operand stack underflow at branch"};
    std::vector<SymExpr> carried(s.stack.end() - arity, s.stack.end());
    s.stack.resize(label.height);
    s.stack.insert(s.stack.end(), carried.begin(), carried.end());
    if (label.kind == LabelKind::loop)
    {
        f.labels.resize(f.labels.size() - depth);
        ++s.loop_counters[Site{f.function, label.target}];
    }
    else
    {
        f.labels.resize(f.labels.size() - depth - 1);
    }
    f.pc = label.target + 1;
}

void Engine::do_return(PathState& s)
{
    const auto& f = s.frames.back();
    if (s.stack.size() < f.stack_base + f.return_arity)
        throw std::runtime_error{"operand stack underflow at return"};
    std::vector<SymExpr> results(s.stack.end() - f.return_arity, s.stack.end());
    s.stack.resize(f.stack_base);
    s.stack.insert(s.stack.end(), results.begin(), results.end());
    s.frames.pop_back();
    if (s.frames.empty())
        terminate(s, PathStatus::finished);
}

void Engine::call_function(PathState& s, uint32_t func)
{
    if (func >= module_.function_count())
        throw std::runtime_error{"call target out of range"};
    const auto& type = module_.function_type(func);
    const auto n = type.params.size();
    if (s.stack.size() < s.frames.back().stack_base + n)
        throw std::runtime_error{"call arity mismatch"};
    std::vector<SymExpr> args(s.stack.end() - static_cast<std::ptrdiff_t>(n), s.stack.end());
    s.stack.resize(s.stack.size() - n);
    for (std::size_t i = 0; i < n; ++i)
        if (args[i].width() != bit_width(type.params[i]))
            throw WidthMismatch{"call argument width mismatch"};

    if (module_.is_imported_function(func))
    {
        const auto& imp = module_.function_import(func);
        std::optional<SymExpr> result;
        if (host_)
        {
            result = host_->call_import(*this, s, imp, type, args, s.last_site);
        }
        else
        {
            TraceEvent e;
            e.kind = EventKind::host_call;
            e.site = s.last_site;
            e.name = imp.module + "." + imp.name;
            e.args = args;
            s.trace.push_back(std::move(e));
        }
        if (s.status != PathStatus::running)
            return;
        if (!type.results.empty())
        {
            const unsigned w = bit_width(type.results[0]);
            if (!result)
                result = random_value(s, type.results[0]);
            else if (result->width() < w)
                result = zero_extend(w, *result);
            else if (result->width() > w)
                result = extract(w - 1, 0, *result);
            s.stack.push_back(std::move(*result));
        }
        return;
    }

    if (s.frames.size() >= config_.max_call_depth)
    {
        s.diagnostics.push_back(fmt::format("call depth limit {} reached at {}:{}", config_.max_call_depth,
                                            s.last_site.function, s.last_site.offset));
        terminate(s, PathStatus::budget_exhausted);
        return;
    }
    TraceEvent e;
    e.kind = EventKind::call;
    e.site = s.last_site;
    e.constant = func;
    s.trace.push_back(std::move(e));
    enter(s, func, std::move(args));
}

void Engine::call_indirect(PathState& s, const Instruction& ins, std::vector<PathState>& forks)
{
    const SymExpr index = pop_width(s, 32);
    const auto& expected = module_.types.at(ins.index);
    const auto& table = *s.table;

    auto invoke = [&](PathState& st, uint64_t slot) {
        if (slot >= table.size() || !table[slot])
        {
            trap(st, "undefined table element");
            return;
        }
        const uint32_t func = *table[slot];
        TraceEvent e;
        e.kind = EventKind::indirect_call;
        e.site = st.last_site;
        e.constant = func;
        st.trace.push_back(std::move(e));
        if (module_.function_type(func) != expected)
        {
            trap(st, "indirect call type mismatch");
            return;
        }
        call_function(st, func);
    };

    if (index.is_concrete())
    {
        invoke(s, index.bits());
        return;
    }

    const PathState base = s;
    std::vector<PathState> alternatives;
    bool first = true;
    uint32_t considered = 0;
    for (uint32_t slot = 0; slot < table.size() && considered < config_.max_indirect_targets; ++slot)
    {
        if (!table[slot])
            continue;
        ++considered;
        const auto c = compare(Relation::eq, index, SymExpr::constant(32, slot));
        const auto f = check(base, c);
        if (!f.possible())
            continue;
        if (first)
        {
            apply_check(s, c, f);
            invoke(s, slot);
            first = false;
        }
        else
        {
            PathState alt = base;
            apply_check(alt, c, f);
            invoke(alt, slot);
            alternatives.push_back(std::move(alt));
        }
    }
    if (first)
    {
        trap(s, "no feasible table element");
        return;
    }
    stats_.forks += alternatives.size();
    for (auto it = alternatives.rbegin(); it != alternatives.rend(); ++it)
        forks.push_back(std::move(*it));
}

void Engine::br_table(PathState& s, const Instruction& ins, std::vector<PathState>& forks)
{
    const auto& fn = module_.defined_function(s.frames.back().function);
    const auto& bt = fn.branch_tables.at(ins.index);
    const SymExpr index = pop_width(s, 32);

    auto take = [&](PathState& st, uint32_t depth) {
        if (back_edge_at_bound(st, depth))
        {
            st.diagnostics.push_back(fmt::format("loop bound reached at {}:{}", st.last_site.function,
                                                 st.last_site.offset));
            terminate(st, PathStatus::budget_exhausted);
            return;
        }
        branch_to(st, depth);
    };

    if (index.is_concrete())
    {
        const uint64_t i = index.bits();
        take(s, i < bt.labels.size() ? bt.labels[i] : bt.default_label);
        return;
    }

    // One condition per distinct target depth, in first-appearance order.
    std::vector<std::pair<uint32_t, BoolExpr>> targets;
    auto add = [&](uint32_t depth, BoolExpr c) {
        for (auto& [d, cond] : targets)
            if (d == depth)
            {
                cond = logical_or(cond, c);
                return;
            }
        targets.emplace_back(depth, std::move(c));
    };
    for (uint32_t i = 0; i < bt.labels.size(); ++i)
        add(bt.labels[i], compare(Relation::eq, index, SymExpr::constant(32, i)));
    add(bt.default_label,
        compare(Relation::ge_u, index, SymExpr::constant(32, static_cast<uint32_t>(bt.labels.size()))));

    const PathState base = s;
    std::vector<PathState> alternatives;
    bool first = true;
    bool dropped_at_bound = false;
    for (const auto& [depth, cond] : targets)
    {
        const auto f = check(base, cond);
        if (!f.possible())
            continue;
        if (back_edge_at_bound(base, depth))
        {
            dropped_at_bound = true;
            continue;
        }
        if (first)
        {
            apply_check(s, cond, f);
            branch_to(s, depth);
            first = false;
        }
        else
        {
            PathState alt = base;
            apply_check(alt, cond, f);
            branch_to(alt, depth);
            alternatives.push_back(std::move(alt));
        }
    }
    if (first)
    {
        if (dropped_at_bound)
        {
            s.diagnostics.push_back(
                fmt::format("loop bound reached at {}:{}", s.last_site.function, s.last_site.offset));
            terminate(s, PathStatus::budget_exhausted);
        }
        else
        {
            terminate(s, PathStatus::pruned);
        }
        return;
    }
    stats_.forks += alternatives.size();
    for (auto it = alternatives.rbegin(); it != alternatives.rend(); ++it)
        forks.push_back(std::move(*it));
}

void Engine::conditional(PathState& s, const BoolExpr& c, std::vector<PathState>& forks, bool is_br_if,
                         const Instruction& ins)
{
    auto on_true = [&](PathState& st) {
        if (is_br_if)
        {
            branch_to(st, ins.index);
            return;
        }
        auto& f = st.frames.back();
        f.labels.push_back(Label{LabelKind::if_, ins.block_type.arity(), ins.end_pc,
                                 static_cast<uint32_t>(st.stack.size())});
        ++f.pc;
    };
    auto on_false = [&](PathState& st) {
        auto& f = st.frames.back();
        if (is_br_if)
        {
            ++f.pc;
            return;
        }
        if (ins.else_pc != ins.end_pc)
        {
            f.labels.push_back(Label{LabelKind::if_, ins.block_type.arity(), ins.end_pc,
                                     static_cast<uint32_t>(st.stack.size())});
            f.pc = ins.else_pc + 1;
        }
        else
        {
            f.pc = ins.end_pc + 1;
        }
    };

    const bool at_bound = is_br_if && back_edge_at_bound(s, ins.index);
    const BoolExpr not_c = logical_not(c);
    const auto pos = at_bound ? Feasibility{} : check(s, c);
    const auto neg = check(s, not_c);

    if (pos.possible() && neg.possible())
    {
        PathState other = s;
        apply_check(other, not_c, neg);
        on_false(other);
        forks.push_back(std::move(other));
        apply_check(s, c, pos);
        on_true(s);
        ++stats_.forks;
    }
    else if (pos.possible())
    {
        apply_check(s, c, pos);
        on_true(s);
    }
    else if (neg.possible())
    {
        apply_check(s, not_c, neg);
        on_false(s);
    }
    else if (at_bound && check(s, c).possible())
    {
        s.diagnostics.push_back(fmt::format("loop bound reached at {}:{}", s.last_site.function, s.last_site.offset));
        terminate(s, PathStatus::budget_exhausted);
    }
    else
    {
        terminate(s, PathStatus::pruned);
    }
}

uint64_t Engine::effective_address(PathState& s, const Instruction& ins, unsigned nbytes)
{
    const SymExpr addr = pop_width(s, 32);
    const uint64_t ea = concretize(s, addr) + uint64_t{ins.offset};
    if (!s.memory.in_bounds(ea, nbytes))
    {
        trap(s, "out of bounds memory access");
        return UINT64_MAX;
    }
    return ea;
}

void Engine::execute(PathState& s, std::vector<PathState>& forks)
{
    auto& frame = s.frames.back();
    const auto& fn = module_.defined_function(frame.function);
    if (frame.pc >= fn.body.size())
        throw std::runtime_error{"program counter past function end"};
    const Instruction& ins = fn.body[frame.pc];
    s.last_site = Site{frame.function, frame.pc};

    auto push = [&](SymExpr v) { s.stack.push_back(std::move(v)); };
    auto next = [&] { ++s.frames.back().pc; };

    switch (ins.op)
    {
    case Opcode::unreachable: trap(s, "unreachable"); return;
    case Opcode::nop: next(); return;
    case Opcode::block:
        frame.labels.push_back(
            Label{LabelKind::block, ins.block_type.arity(), ins.end_pc, static_cast<uint32_t>(s.stack.size())});
        next();
        return;
    case Opcode::loop:
        frame.labels.push_back(Label{LabelKind::loop, 0, frame.pc, static_cast<uint32_t>(s.stack.size())});
        s.loop_counters[Site{frame.function, frame.pc}] = 0;
        next();
        return;
    case Opcode::if_: {
        const SymExpr v = pop_width(s, 32);
        const BoolExpr c = is_nonzero(v);
        if (c.is_constant())
        {
            if (c.is_true())
            {
                frame.labels.push_back(Label{LabelKind::if_, ins.block_type.arity(), ins.end_pc,
                                             static_cast<uint32_t>(s.stack.size())});
                next();
            }
            else if (ins.else_pc != ins.end_pc)
            {
                frame.labels.push_back(Label{LabelKind::if_, ins.block_type.arity(), ins.end_pc,
                                             static_cast<uint32_t>(s.stack.size())});
                frame.pc = ins.else_pc + 1;
            }
            else
            {
                frame.pc = ins.end_pc + 1;
            }
            return;
        }
        conditional(s, c, forks, false, ins);
        return;
    }
    case Opcode::else_: branch_to(s, 0); return;
    case Opcode::end:
        if (frame.labels.back().kind == LabelKind::function)
        {
            do_return(s);
        }
        else
        {
            frame.labels.pop_back();
            next();
        }
        return;
    case Opcode::br:
        if (back_edge_at_bound(s, ins.index))
        {
            s.diagnostics.push_back(
                fmt::format("loop bound reached at {}:{}", s.last_site.function, s.last_site.offset));
            terminate(s, PathStatus::budget_exhausted);
            return;
        }
        branch_to(s, ins.index);
        return;
    case Opcode::br_if: {
        const SymExpr v = pop_width(s, 32);
        const BoolExpr c = is_nonzero(v);
        if (c.is_false())
        {
            next();
        }
        else if (c.is_true())
        {
            if (back_edge_at_bound(s, ins.index))
            {
                s.diagnostics.push_back(
                    fmt::format("loop bound reached at {}:{}", s.last_site.function, s.last_site.offset));
                terminate(s, PathStatus::budget_exhausted);
                return;
            }
            branch_to(s, ins.index);
        }
        else
        {
            conditional(s, c, forks, true, ins);
        }
        return;
    }
    case Opcode::br_table: br_table(s, ins, forks); return;
    case Opcode::return_: do_return(s); return;
    case Opcode::call:
        next();
        call_function(s, ins.index);
        return;
    case Opcode::call_indirect:
        next();
        call_indirect(s, ins, forks);
        return;
    case Opcode::drop:
        pop(s);
        next();
        return;
    case Opcode::select: {
        const SymExpr c = pop_width(s, 32);
        SymExpr b = pop(s);
        SymExpr a = pop(s);
        if (a.width() != b.width())
            throw WidthMismatch{"select operands differ in width"};
        if (c.is_concrete())
            push(c.bits() != 0 ? std::move(a) : std::move(b));
        else
            push(ite(is_nonzero(c), a, b));
        next();
        return;
    }
    case Opcode::local_get: push(frame.locals.at(ins.index)); next(); return;
    case Opcode::local_set: {
        SymExpr v = pop(s);
        auto& slot = frame.locals.at(ins.index);
        if (v.width() != slot.width())
            throw WidthMismatch{"local type mismatch"};
        slot = std::move(v);
        next();
        return;
    }
    case Opcode::local_tee: {
        if (s.stack.size() <= frame.stack_base)
            throw std::runtime_error{"operand stack underflow"};
        auto& slot = frame.locals.at(ins.index);
        if (s.stack.back().width() != slot.width())
            throw WidthMismatch{"local type mismatch"};
        slot = s.stack.back();
        next();
        return;
    }
    case Opcode::global_get: push(s.globals.at(ins.index)); next(); return;
    case Opcode::global_set: {
        SymExpr v = pop(s);
        auto& slot = s.globals.at(ins.index);
        if (v.width() != slot.width())
            throw WidthMismatch{"global type mismatch"};
        slot = std::move(v);
        next();
        return;
    }
    case Opcode::i32_load:
    case Opcode::i64_load:
    case Opcode::f32_load:
    case Opcode::f64_load:
    case Opcode::i32_load8_s:
    case Opcode::i32_load8_u:
    case Opcode::i32_load16_s:
    case Opcode::i32_load16_u:
    case Opcode::i64_load8_s:
    case Opcode::i64_load8_u:
    case Opcode::i64_load16_s:
    case Opcode::i64_load16_u:
    case Opcode::i64_load32_s:
    case Opcode::i64_load32_u: {
        const auto spec = load_spec(ins.op);
        const uint64_t ea = effective_address(s, ins, spec.bytes);
        if (s.status != PathStatus::running)
            return;
        SymExpr v = s.memory.load(ea, spec.bytes);
        if (v.width() < spec.width)
            v = spec.sign ? sign_extend(spec.width, v) : zero_extend(spec.width, v);
        push(std::move(v));
        next();
        return;
    }
    case Opcode::i32_store:
    case Opcode::i64_store:
    case Opcode::f32_store:
    case Opcode::f64_store:
    case Opcode::i32_store8:
    case Opcode::i32_store16:
    case Opcode::i64_store8:
    case Opcode::i64_store16:
    case Opcode::i64_store32: {
        const auto spec = store_spec(ins.op);
        const SymExpr v = pop_width(s, spec.width);
        const uint64_t ea = effective_address(s, ins, spec.bytes);
        if (s.status != PathStatus::running)
            return;
        s.memory.store(ea, v, spec.bytes);
        next();
        return;
    }
    case Opcode::memory_size: push(SymExpr::constant(32, s.memory.pages())); next(); return;
    case Opcode::memory_grow: {
        const SymExpr d = pop_width(s, 32);
        const auto delta = static_cast<uint32_t>(concretize(s, d));
        const auto old = s.memory.grow(delta, config_.max_memory_pages);
        push(SymExpr::constant(32, old ? *old : 0xFFFFFFFFu));
        next();
        return;
    }
    case Opcode::i32_const:
    case Opcode::f32_const: push(SymExpr::constant(32, ins.literal & 0xFFFFFFFFu)); next(); return;
    case Opcode::i64_const:
    case Opcode::f64_const: push(SymExpr::constant(64, ins.literal)); next(); return;
    case Opcode::i32_eqz:
    case Opcode::i64_eqz: {
        const unsigned w = ins.op == Opcode::i32_eqz ? 32 : 64;
        const SymExpr a = pop_width(s, w);
        push(bool_to_i32(compare(Relation::eq, a, SymExpr::constant(w, 0))));
        next();
        return;
    }
    case Opcode::i32_wrap_i64: push(extract(31, 0, pop_width(s, 64))); next(); return;
    case Opcode::i64_extend_i32_s: push(sign_extend(64, pop_width(s, 32))); next(); return;
    case Opcode::i64_extend_i32_u: push(zero_extend(64, pop_width(s, 32))); next(); return;
    case Opcode::i32_reinterpret_f32:
    case Opcode::f32_reinterpret_i32: push(pop_width(s, 32)); next(); return;
    case Opcode::i64_reinterpret_f64:
    case Opcode::f64_reinterpret_i64: push(pop_width(s, 64)); next(); return;
    default: break;
    }

    if (auto rel = relation_op(ins.op))
    {
        const auto [r, w] = *rel;
        const SymExpr b = pop_width(s, w);
        const SymExpr a = pop_width(s, w);
        if (r == Relation::eq || r == Relation::ne)
        {
            if (w == 64)
            {
                for (const auto& [k, x] : {std::pair{&a, &b}, std::pair{&b, &a}})
                {
                    if (k->is_concrete() && (k->origins() & name_tags).empty() && !(x->origins() & name_tags).empty())
                    {
                        TraceEvent e;
                        e.kind = EventKind::name_compare;
                        e.site = s.last_site;
                        e.subject = *x;
                        e.constant = k->bits();
                        e.relation = r;
                        s.trace.push_back(std::move(e));
                        break;
                    }
                }
            }
            if (!a.origins().empty() && !b.origins().empty())
            {
                TraceEvent e;
                e.kind = EventKind::tagged_compare;
                e.site = s.last_site;
                e.relation = r;
                e.lhs_origins = a.origins();
                e.rhs_origins = b.origins();
                s.trace.push_back(std::move(e));
            }
        }
        push(bool_to_i32(compare(r, a, b)));
        next();
        return;
    }

    if (auto un = unary_op(ins.op))
    {
        push(eval_unary(un->first, pop_width(s, un->second)));
        next();
        return;
    }

    if (auto bin = binary_op(ins.op))
    {
        const auto [op, w] = *bin;
        const SymExpr b = pop_width(s, w);
        const SymExpr a = pop_width(s, w);
        const bool divides =
            op == BinaryOp::div_s || op == BinaryOp::div_u || op == BinaryOp::rem_s || op == BinaryOp::rem_u;
        if (divides)
        {
            BoolExpr bad = compare(Relation::eq, b, SymExpr::constant(w, 0));
            if (op == BinaryOp::div_s)
            {
                const uint64_t min = uint64_t{1} << (w - 1);
                bad = logical_or(bad, logical_and(compare(Relation::eq, a, SymExpr::constant(w, min)),
                                                  compare(Relation::eq, b, SymExpr::constant(w, width_mask(w)))));
            }
            const char* why = "integer divide by zero or overflow";
            if (bad.is_true())
            {
                trap(s, why);
                return;
            }
            if (!bad.is_false())
            {
                const BoolExpr ok = logical_not(bad);
                const auto f_bad = check(s, bad);
                const auto f_ok = check(s, ok);
                if (f_bad.possible() && f_ok.possible())
                {
                    PathState t = s;
                    apply_check(t, bad, f_bad);
                    trap(t, why);
                    forks.push_back(std::move(t));
                    apply_check(s, ok, f_ok);
                    ++stats_.forks;
                }
                else if (f_bad.possible())
                {
                    apply_check(s, bad, f_bad);
                    trap(s, why);
                    return;
                }
                else if (f_ok.possible())
                {
                    apply_check(s, ok, f_ok);
                }
                else
                {
                    terminate(s, PathStatus::pruned);
                    return;
                }
            }
        }
        push(eval_binary(op, a, b));
        next();
        return;
    }

    if (is_float_op(ins.op))
    {
        const auto shape = float_shape(ins.op);
        SymExpr rhs = shape.operands == 2 ? pop_width(s, shape.operand_width) : SymExpr{};
        SymExpr lhs = pop_width(s, shape.operand_width);
        if (lhs.is_concrete() && (!rhs.valid() || rhs.is_concrete()))
        {
            const auto r = eval_float_op(ins.op, lhs.bits(), rhs.valid() ? rhs.bits() : 0);
            if (r.trap)
            {
                trap(s, "invalid conversion to integer");
                return;
            }
            push(SymExpr::constant(shape.result_width, r.bits & width_mask(shape.result_width)));
        }
        else if (shape.predicate)
        {
            push(zero_extend(32, fresh(s, 1, Origin::host_fresh)));
        }
        else
        {
            push(fresh(s, shape.result_width, Origin::host_fresh));
        }
        next();
        return;
    }

    throw Unsupported{fmt::format("unsupported instruction {}", opcode_name(ins.op))};
}

void Engine::run(PathState& s, std::vector<PathState>& forks)
{
    // checked when a path (re)starts and every 256 steps after that
    uint32_t until_clock = 0;
    while (s.status == PathStatus::running)
    {
        if (++s.instructions > config_.max_instructions)
        {
            s.diagnostics.push_back(fmt::format("instruction budget {} exhausted", config_.max_instructions));
            terminate(s, PathStatus::budget_exhausted);
            break;
        }
        ++stats_.instructions;
        if (config_.deadline && until_clock-- == 0 && std::chrono::steady_clock::now() > *config_.deadline)
        {
            s.diagnostics.push_back("wall-clock deadline reached");
            stats_.timed_out = true;
            terminate(s, PathStatus::budget_exhausted);
            break;
        }
        if (until_clock == UINT32_MAX)
            until_clock = 255;
        try
        {
            execute(s, forks);
        }
        catch (const SolverUnavailable&)
        {
            throw;
        }
        catch (const Unsupported& e)
        {
            s.diagnostics.push_back(fmt::format("{} at {}:{}", e.what(), s.last_site.function, s.last_site.offset));
            ++stats_.unsupported;
            terminate(s, PathStatus::budget_exhausted);
        }
        catch (const std::exception& e)
        {
            s.diagnostics.push_back(
                fmt::format("malformed execution at {}:{}: {}", s.last_site.function, s.last_site.offset, e.what()));
            trap(s, e.what());
        }
    }
}

std::vector<PathState> Engine::step(PathState state)
{
    std::vector<PathState> forks;
    if (state.status == PathStatus::running)
    {
        ++state.instructions;
        try
        {
            execute(state, forks);
        }
        catch (const SolverUnavailable&)
        {
            throw;
        }
        catch (const Unsupported& e)
        {
            state.diagnostics.push_back(e.what());
            ++stats_.unsupported;
            terminate(state, PathStatus::budget_exhausted);
        }
        catch (const std::exception& e)
        {
            trap(state, e.what());
        }
    }
    std::vector<PathState> out;
    if (state.status != PathStatus::pruned)
        out.push_back(std::move(state));
    for (auto it = forks.rbegin(); it != forks.rend(); ++it)
        if (it->status != PathStatus::pruned)
            out.push_back(std::move(*it));
    return out;
}

ExploreResult Engine::explore(PathState initial)
{
    const ExploreStats saved = stats_;
    stats_ = {};
    ExploreResult result;
    std::vector<PathState> work;
    work.push_back(std::move(initial));
    while (!work.empty())
    {
        if (result.paths.size() >= config_.max_paths || stats_.timed_out)
        {
            stats_.truncated = true;
            break;
        }
        PathState s = std::move(work.back());
        work.pop_back();
        std::vector<PathState> forks;
        run(s, forks);
        for (auto& f : forks)
            work.push_back(std::move(f));
        switch (s.status)
        {
        case PathStatus::pruned: ++stats_.pruned; continue;
        case PathStatus::finished: ++stats_.finished; break;
        case PathStatus::trapped: ++stats_.trapped; break;
        case PathStatus::budget_exhausted: ++stats_.budget_exhausted; break;
        case PathStatus::running: break;
        }
        ++stats_.paths;
        result.paths.push_back(std::move(s));
    }
    result.stats = stats_;
    stats_ = saved;
    stats_ += result.stats;
    return result;
}

ExploreResult Engine::explore(uint32_t entry, std::vector<SymExpr> args)
{
    PathState s = instantiate();
    enter(s, entry, std::move(args));
    return explore(std::move(s));
}

}  // namespace wana
