#include "wana/engine.hpp"
#include "wana/loader.hpp"

#include "common.hpp"
#include "wasm_builder.hpp"

#include <doctest.h>

#include <cstring>
#include <set>

using namespace wana;
using testing_support::make_solver;

namespace {

Module decode(const tw::ModuleBuilder& b)
{
    return decode_module(b.build());
}

/// Runs single steps until the next instruction to execute is `op`.
PathState step_until(Engine& engine, PathState s, Opcode op)
{
    for (int guard = 0; guard < 1000; ++guard) {
        const auto& f = s.frames.back();
        if (engine.module().defined_function(f.function).body[f.pc].op == op)
            return s;
        auto next = engine.step(std::move(s));
        REQUIRE(next.size() == 1);
        s = std::move(next.front());
    }
    FAIL("instruction not reached");
    return s;
}

uint64_t value_of(const Model& m, uint32_t id)
{
    auto it = m.find(id);
    return it == m.end() ? 0 : it->second;
}

const Frame& top(const PathState& s)
{
    return s.frames.back();
}

}  // namespace

TEST_CASE("instantiate: data, globals, table")
{
    tw::ModuleBuilder b;
    auto t = b.type({}, {});
    for (int i = 0; i < 6; ++i)
        b.func(t, {}, tw::Code{});
    b.memory(1);
    b.table(10);
    b.data(16, "eosio.token");
    b.global(tw::I64, false, tw::Code{}.i64(42));
    b.global(tw::I32, true, tw::Code{}.i32(-7));
    b.elem(3, {5});
    Module m = decode(b);
    auto solver = make_solver();
    Engine engine{m, *solver, {}};
    PathState s = engine.instantiate();

    auto bytes = s.memory.concrete_bytes(16, 11);
    REQUIRE(bytes);
    CHECK(std::string(bytes->begin(), bytes->end()) == "eosio.token");
    CHECK(s.memory.load(27, 1).bits() == 0);

    REQUIRE(s.globals.size() == 2);
    CHECK(s.globals[0].is_concrete());
    CHECK(s.globals[0].width() == 64);
    CHECK(s.globals[0].bits() == 42);
    CHECK(s.globals[1].bits() == 0xFFFFFFF9u);

    REQUIRE(s.table->size() == 10);
    CHECK((*s.table)[3] == 5u);
    CHECK_FALSE((*s.table)[2]);
    CHECK(s.stack.empty());
    CHECK(s.trace.empty());
}

TEST_CASE("instantiate: offsets out of bounds")
{
    auto solver = make_solver();
    SUBCASE("data")
    {
        tw::ModuleBuilder b;
        b.memory(1);
        b.data(65530, "0123456789");
        Module m = decode(b);
        Engine engine{m, *solver, {}};
        try {
            engine.instantiate();
            FAIL("expected an instantiation error");
        } catch (const InstantiationError& e) {
            CHECK(e.kind == InstantiationErrorKind::offset_out_of_bounds);
        }
    }
    SUBCASE("element")
    {
        tw::ModuleBuilder b;
        auto t = b.type({}, {});
        b.func(t, {}, tw::Code{});
        b.table(2);
        b.elem(2, {0});
        Module m = decode(b);
        Engine engine{m, *solver, {}};
        try {
            engine.instantiate();
            FAIL("expected an instantiation error");
        } catch (const InstantiationError& e) {
            CHECK(e.kind == InstantiationErrorKind::offset_out_of_bounds);
        }
    }
}

TEST_CASE("instantiate: non-constant initializer")
{
    // hand-assembled: one global whose initializer is global.get 0 (itself)
    tw::Bytes bytes{0x00, 0x61, 0x73, 0x6D, 0x01, 0x00, 0x00, 0x00, 0x06, 0x06, 0x01, 0x7F, 0x00, 0x23, 0x00, 0x0B};
    Module m = decode_module(bytes);
    auto solver = make_solver();
    Engine engine{m, *solver, {}};
    try {
        engine.instantiate();
        FAIL("expected an instantiation error");
    } catch (const InstantiationError& e) {
        CHECK(e.kind == InstantiationErrorKind::non_const_initializer);
    }
}

TEST_CASE("br_if successors")
{
    tw::ModuleBuilder b;
    auto t = b.type({tw::I32}, {});
    b.func(t, {}, tw::Code{}.block().get(0).br_if(0).op(0x01).end());
    Module m = decode(b);
    auto solver = make_solver();
    Engine engine{m, *solver, {}};

    SUBCASE("concrete zero falls through")
    {
        PathState s = engine.instantiate();
        engine.enter(s, 0, {SymExpr::constant(32, 0)});
        s = step_until(engine, std::move(s), Opcode::br_if);
        const uint32_t pc = top(s).pc;
        auto next = engine.step(std::move(s));
        REQUIRE(next.size() == 1);
        CHECK(top(next[0]).pc == pc + 1);
        CHECK(next[0].condition.empty());
    }
    SUBCASE("symbolic condition forks into c and not c")
    {
        PathState s = engine.instantiate();
        auto x = engine.fresh(s, 32, Origin::other);
        engine.enter(s, 0, {x});
        s = step_until(engine, std::move(s), Opcode::br_if);
        auto next = engine.step(std::move(s));
        REQUIRE(next.size() == 2);
        const BoolExpr c = is_nonzero(x);
        std::multiset<std::string> appended, expected{to_string(c), to_string(logical_not(c))};
        for (const auto& n : next) {
            REQUIRE(n.condition.size() == 1);
            appended.insert(to_string(n.condition.back()));
        }
        CHECK(appended == expected);
        // taken side first
        CHECK(to_string(next[0].condition.back()) == to_string(c));
        CHECK(next[0].condition.holds(next[0].model));
        CHECK(next[1].condition.holds(next[1].model));
    }
    SUBCASE("infeasible side is pruned")
    {
        PathState s = engine.instantiate();
        auto x = engine.fresh(s, 32, Origin::other);
        s.condition.append(compare(Relation::eq, x, SymExpr::constant(32, 0)));
        s.model = {{x.node().var_id, 0}};
        engine.enter(s, 0, {x});
        s = step_until(engine, std::move(s), Opcode::br_if);
        const uint32_t pc = top(s).pc;
        auto next = engine.step(std::move(s));
        REQUIRE(next.size() == 1);
        CHECK(top(next[0]).pc == pc + 1);
        CHECK(next[0].condition.size() == 2);
    }
    SUBCASE("infeasible side is pruned even without a usable model")
    {
        PathState s = engine.instantiate();
        auto x = engine.fresh(s, 32, Origin::other);
        s.condition.append(compare(Relation::eq, x, SymExpr::constant(32, 0)));
        s.model_valid = false;
        engine.enter(s, 0, {x});
        s = step_until(engine, std::move(s), Opcode::br_if);
        auto next = engine.step(std::move(s));
        REQUIRE(next.size() == 1);
        CHECK(next[0].model_valid);
    }
}

TEST_CASE("memory instructions")
{
    tw::ModuleBuilder b;
    b.memory(1);
    auto t_byte = b.type({}, {tw::I32});
    auto t_sym = b.type({tw::I64}, {tw::I64});
    auto t_low = b.type({tw::I64}, {tw::I32});
    b.func(t_byte, {}, tw::Code{}.i32(0).i32(0x04030201).mem(0x36, 2, 0).i32(0).mem(0x2D, 0, 0));
    b.func(t_sym, {}, tw::Code{}.i32(8).get(0).mem(0x37, 3, 0).i32(8).mem(0x29, 3, 0));
    b.func(t_low, {}, tw::Code{}.i32(0).get(0).mem(0x37, 3, 8).i32(8).mem(0x28, 2, 0));
    Module m = decode(b);
    auto solver = make_solver();
    Engine engine{m, *solver, {}};

    auto r = engine.explore(0, {});
    REQUIRE(r.paths.size() == 1);
    REQUIRE(r.paths[0].stack.size() == 1);
    CHECK(r.paths[0].stack[0].bits() == 0x01);

    PathState s = engine.instantiate();
    auto v = engine.fresh(s, 64, Origin::other);
    engine.enter(s, 1, {v});
    r = engine.explore(std::move(s));
    REQUIRE(r.paths.size() == 1);
    CHECK(r.paths[0].stack[0].get() == v.get());

    s = engine.instantiate();
    v = engine.fresh(s, 64, Origin::other);
    engine.enter(s, 2, {v});
    r = engine.explore(std::move(s));
    REQUIRE(r.paths.size() == 1);
    const auto& low = r.paths[0].stack[0];
    REQUIRE(low.kind() == ExprKind::extract);
    CHECK(low.node().hi == 31);
    CHECK(low.node().lo == 0);
    CHECK(low.node().a.get() == v.get());
}

TEST_CASE("out of bounds access traps")
{
    tw::ModuleBuilder b;
    b.memory(1);
    auto t = b.type({}, {tw::I32});
    b.func(t, {}, tw::Code{}.i32(65534).mem(0x28, 2, 0));
    Module m = decode(b);
    auto solver = make_solver();
    Engine engine{m, *solver, {}};
    auto r = engine.explore(0, {});
    REQUIRE(r.paths.size() == 1);
    CHECK(r.paths[0].status == PathStatus::trapped);
}

TEST_CASE("symbolic addresses are concretized through a model")
{
    tw::ModuleBuilder b;
    b.memory(1);
    auto t = b.type({tw::I32}, {tw::I32});
    b.func(t, {}, tw::Code{}.get(0).i32(0xFF).op(0x71).i32(77).mem(0x36, 2, 0).get(0).i32(0xFF).op(0x71).mem(0x28, 2, 0));
    Module m = decode(b);
    auto solver = make_solver();
    Engine engine{m, *solver, {}};
    PathState s = engine.instantiate();
    auto x = engine.fresh(s, 32, Origin::other);
    engine.enter(s, 0, {x});
    auto r = engine.explore(std::move(s));
    REQUIRE(r.paths.size() == 1);
    const auto& p = r.paths[0];
    CHECK(p.status == PathStatus::finished);
    REQUIRE(p.condition.size() >= 1);
    CHECK(p.condition.back().node().relation == Relation::eq);
    CHECK(p.condition.holds(p.model));
    CHECK(evaluate(p.stack[0], p.model) == 77);
}

TEST_CASE("calls")
{
    tw::ModuleBuilder b;
    auto t_i64 = b.type({tw::I64}, {tw::I64});
    auto t_db = b.type({}, {tw::I32});
    auto t_main = b.type({}, {tw::I32});
    auto db = b.import_func("env", "some_db_fn", t_db);
    auto callee = b.func(t_i64, {tw::I32}, tw::Code{}.get(0).i64(1).op(0x7C));
    b.func(t_main, {}, tw::Code{}.i64(41).call(callee).op(0xA7).call(db).op(0x6A));
    Module m = decode(b);
    auto solver = make_solver();

    SUBCASE("in-module call pushes a frame")
    {
        Engine engine{m, *solver, {}};
        PathState s = engine.instantiate();
        engine.enter(s, 2, {});
        s = step_until(engine, std::move(s), Opcode::call);
        auto next = engine.step(std::move(s));
        REQUIRE(next.size() == 1);
        REQUIRE(next[0].frames.size() == 2);
        CHECK(top(next[0]).function == callee);
        REQUIRE(top(next[0]).locals.size() == 2);
        CHECK(top(next[0]).locals[0].bits() == 41);
        CHECK(top(next[0]).locals[1].bits() == 0);
        CHECK(top(next[0]).locals[1].width() == 32);
    }
    SUBCASE("unknown import falls back to a seeded value")
    {
        auto run = [&](uint64_t seed) {
            ExploreConfig cfg;
            cfg.seed = seed;
            Engine engine{m, *solver, cfg};
            auto r = engine.explore(2, {});
            REQUIRE(r.paths.size() == 1);
            const auto& p = r.paths[0];
            REQUIRE(p.stack.size() == 1);
            REQUIRE(p.stack[0].is_concrete());
            bool recorded = false;
            for (const auto& e : p.trace)
                recorded = recorded || (e.kind == EventKind::host_call && e.name == "env.some_db_fn");
            CHECK(recorded);
            return p.stack[0].bits();
        };
        CHECK(run(0) == run(0));
        CHECK(run(0) != run(1));
    }
}

TEST_CASE("call_indirect")
{
    tw::ModuleBuilder b;
    auto t_void = b.type({}, {});
    auto t_idx = b.type({tw::I32}, {});
    auto t_other = b.type({tw::I64}, {});
    for (int i = 0; i < 5; ++i)
        b.func(t_void, {}, tw::Code{});
    b.func(t_void, {}, tw::Code{});                                      // 5
    b.func(t_other, {}, tw::Code{});                                     // 6
    auto entry = b.func(t_idx, {}, tw::Code{}.get(0).call_indirect(t_void));  // 7
    b.table(10);
    b.elem(3, {5, 6});
    b.elem(7, {2});
    Module m = decode(b);
    auto solver = make_solver();
    Engine engine{m, *solver, {}};

    auto indirect_target = [](const PathState& p) -> std::optional<uint64_t> {
        for (const auto& e : p.trace)
            if (e.kind == EventKind::indirect_call)
                return e.constant;
        return std::nullopt;
    };

    auto r = engine.explore(entry, {SymExpr::constant(32, 3)});
    REQUIRE(r.paths.size() == 1);
    CHECK(r.paths[0].status == PathStatus::finished);
    CHECK(indirect_target(r.paths[0]) == 5u);

    r = engine.explore(entry, {SymExpr::constant(32, 99)});
    REQUIRE(r.paths.size() == 1);
    CHECK(r.paths[0].status == PathStatus::trapped);

    r = engine.explore(entry, {SymExpr::constant(32, 4)});
    REQUIRE(r.paths.size() == 1);
    CHECK(r.paths[0].status == PathStatus::trapped);  // type mismatch

    PathState s = engine.instantiate();
    auto x = engine.fresh(s, 32, Origin::other);
    engine.enter(s, entry, {x});
    r = engine.explore(std::move(s));
    std::set<uint64_t> targets;
    for (const auto& p : r.paths) {
        auto tgt = indirect_target(p);
        REQUIRE(tgt);
        targets.insert(*tgt);
        CHECK(p.condition.holds(p.model));
    }
    CHECK(targets == std::set<uint64_t>{2, 5, 6});
    CHECK(r.paths.size() == 3);
}

TEST_CASE("explore examples")
{
    auto solver = make_solver();

    SUBCASE("single return")
    {
        tw::ModuleBuilder b;
        auto t = b.type({}, {});
        b.func(t, {}, tw::Code{}.op(0x0F));
        Module m = decode(b);
        Engine engine{m, *solver, {}};
        auto r = engine.explore(0, {});
        REQUIRE(r.paths.size() == 1);
        CHECK(r.paths[0].status == PathStatus::finished);
        CHECK(r.paths[0].condition.empty());
    }
    SUBCASE("one symbolic br_if and two leaf returns")
    {
        tw::ModuleBuilder b;
        auto t = b.type({tw::I32}, {tw::I32});
        b.func(t, {}, tw::Code{}.block().get(0).br_if(0).i32(1).op(0x0F).end().i32(2).op(0x0F));
        Module m = decode(b);
        Engine engine{m, *solver, {}};
        PathState s = engine.instantiate();
        engine.enter(s, 0, {engine.fresh(s, 32, Origin::other)});
        auto r = engine.explore(std::move(s));
        REQUIRE(r.paths.size() == 2);
        std::set<uint64_t> results;
        for (const auto& p : r.paths) {
            CHECK(p.status == PathStatus::finished);
            results.insert(p.stack.at(0).bits());
        }
        CHECK(results == std::set<uint64_t>{1, 2});
        CHECK(r.stats.forks == 1);
    }
}

TEST_CASE("unconditional loop stops exactly at the bound")
{
    tw::ModuleBuilder b;
    auto t = b.type({}, {});
    b.func(t, {}, tw::Code{}.loop().br(0).end());
    Module m = decode(b);
    auto solver = make_solver();
    for (uint32_t bound : {1u, 2u, 10u, 50u}) {
        ExploreConfig cfg;
        cfg.loop_bound = bound;
        Engine engine{m, *solver, cfg};
        auto r = engine.explore(0, {});
        REQUIRE(r.paths.size() == 1);
        CHECK(r.paths[0].status == PathStatus::budget_exhausted);
        CHECK(r.paths[0].max_loop_count() == bound);
        REQUIRE_FALSE(r.paths[0].diagnostics.empty());
        CHECK(r.paths[0].diagnostics.back().find("loop bound reached") != std::string::npos);
    }
    CHECK_THROWS_AS((Engine{m, *solver, ExploreConfig{.loop_bound = 0}}), std::invalid_argument);
}

TEST_CASE("loop counters reset on fresh entry")
{
    // outer loop runs 3 times; the inner loop runs 4 iterations each time
    tw::ModuleBuilder b;
    auto t = b.type({}, {});
    tw::Code c;
    c.i32(3).set(0);
    c.loop();
    c.i32(4).set(1);
    c.loop().get(1).i32(1).op(0x6B).tee(1).br_if(0).end();
    c.get(0).i32(1).op(0x6B).tee(0).br_if(0);
    c.end();
    b.func(t, {tw::I32, tw::I32}, c);
    Module m = decode(b);
    auto solver = make_solver();
    ExploreConfig cfg;
    cfg.loop_bound = 3;
    Engine engine{m, *solver, cfg};
    auto r = engine.explore(0, {});
    REQUIRE(r.paths.size() == 1);
    CHECK(r.paths[0].status == PathStatus::finished);
    CHECK(r.paths[0].max_loop_count() == 3);
}

TEST_CASE("symbolic loop: raising the bound only adds deeper paths")
{
    // while (i < n) i++ with symbolic n
    tw::ModuleBuilder b;
    auto t = b.type({tw::I32}, {tw::I32});
    tw::Code c;
    c.block().loop();
    c.get(1).get(0).op(0x4F).br_if(1);  // i >= n: exit
    c.get(1).i32(1).op(0x6A).set(1).br(0);
    c.end().end().get(1);
    b.func(t, {tw::I32}, c);
    Module m = decode(b);
    auto solver = make_solver();

    auto finished = [&](uint32_t bound) {
        ExploreConfig cfg;
        cfg.loop_bound = bound;
        Engine engine{m, *solver, cfg};
        PathState s = engine.instantiate();
        engine.enter(s, 0, {engine.fresh(s, 32, Origin::other)});
        auto r = engine.explore(std::move(s));
        std::set<std::string> out;
        for (const auto& p : r.paths) {
            REQUIRE(p.max_loop_count() <= bound);
            if (p.status == PathStatus::finished) {
                std::string key;
                for (const auto& cj : p.condition.conjuncts())
                    key += to_string(cj) + ";";
                out.insert(key);
            }
        }
        return out;
    };
    for (uint32_t bound : {1u, 3u, 6u}) {
        auto lo = finished(bound), hi = finished(bound + 1);
        CHECK(lo.size() == bound + 1);
        CHECK(hi.size() == lo.size() + 1);
        for (const auto& k : lo)
            CHECK(hi.count(k) == 1);
    }
}

TEST_CASE("division by a symbolic divisor forks a trap")
{
    tw::ModuleBuilder b;
    auto t = b.type({tw::I32}, {tw::I32});
    b.func(t, {}, tw::Code{}.i32(100).get(0).op(0x6E));
    b.func(t, {}, tw::Code{}.i32(INT32_MIN).get(0).op(0x6D));
    Module m = decode(b);
    auto solver = make_solver();
    Engine engine{m, *solver, {}};

    PathState s = engine.instantiate();
    engine.enter(s, 0, {engine.fresh(s, 32, Origin::other)});
    auto r = engine.explore(std::move(s));
    REQUIRE(r.paths.size() == 2);
    int trapped = 0;
    for (const auto& p : r.paths) {
        if (p.status == PathStatus::trapped) {
            ++trapped;
            CHECK(value_of(p.model, 0) == 0);
        }
    }
    CHECK(trapped == 1);

    // div_s also traps on INT_MIN / -1
    s = engine.instantiate();
    engine.enter(s, 1, {engine.fresh(s, 32, Origin::other)});
    r = engine.explore(std::move(s));
    std::set<uint64_t> trap_divisors;
    for (const auto& p : r.paths)
        if (p.status == PathStatus::trapped)
            trap_divisors.insert(value_of(p.model, 0));
    CHECK(!trap_divisors.empty());
    for (auto d : trap_divisors)
        CHECK((d == 0 || d == 0xFFFFFFFFu));

    r = engine.explore(0, {SymExpr::constant(32, 0)});
    REQUIRE(r.paths.size() == 1);
    CHECK(r.paths[0].status == PathStatus::trapped);
}

TEST_CASE("name comparisons are recorded")
{
    tw::ModuleBuilder b;
    auto t = b.type({tw::I64, tw::I64, tw::I64}, {});
    tw::Code c;
    c.get(2).i64(static_cast<int64_t>(0xCDCD3C2D57000000ull)).op(0x51).if_().op(0x01).end();
    c.get(0).get(1).op(0x52).if_().op(0x01).end();
    c.get(0).i64(5).op(0x51).if_().op(0x01).end();  // receiver is not a name-tagged operand
    b.func(t, {}, c);
    Module m = decode(b);
    auto solver = make_solver();
    Engine engine{m, *solver, {}};
    PathState s = engine.instantiate();
    auto receiver = engine.fresh(s, 64, Origin::apply_receiver);
    auto code = engine.fresh(s, 64, Origin::apply_code);
    auto action = engine.fresh(s, 64, Origin::apply_action);
    engine.enter(s, 0, {receiver, code, action});
    auto r = engine.explore(std::move(s));
    REQUIRE_FALSE(r.paths.empty());
    for (const auto& p : r.paths) {
        int names = 0, tagged = 0;
        for (const auto& e : p.trace) {
            if (e.kind == EventKind::name_compare) {
                ++names;
                CHECK(e.constant == 0xCDCD3C2D57000000ull);
                CHECK(e.subject.get() == action.get());
                CHECK(e.relation == Relation::eq);
            }
            if (e.kind == EventKind::tagged_compare) {
                ++tagged;
                CHECK(e.relation == Relation::ne);
                CHECK(e.lhs_origins.contains(Origin::apply_receiver));
                CHECK(e.rhs_origins.contains(Origin::apply_code));
            }
        }
        CHECK(names == 1);
        CHECK(tagged == 1);
    }
}

TEST_CASE("floats: exact when concrete, fresh when symbolic")
{
    tw::ModuleBuilder b;
    auto t = b.type({tw::I32}, {tw::I32});
    float one = 1.5f, two = 2.25f;
    uint32_t a, c;
    std::memcpy(&a, &one, 4);
    std::memcpy(&c, &two, 4);
    // reinterpret(f32(a) + f32(c))
    b.func(t, {},
           tw::Code{}.i32(static_cast<int32_t>(a)).op(0xBE).i32(static_cast<int32_t>(c)).op(0xBE).op(0x92).op(0xBC));
    b.func(t, {}, tw::Code{}.get(0).op(0xBE).i32(static_cast<int32_t>(c)).op(0xBE).op(0x92).op(0xBC));
    Module m = decode(b);
    auto solver = make_solver();
    Engine engine{m, *solver, {}};

    auto r = engine.explore(0, {SymExpr::constant(32, 0)});
    REQUIRE(r.paths.size() == 1);
    float sum;
    uint32_t bits = static_cast<uint32_t>(r.paths[0].stack.at(0).bits());
    std::memcpy(&sum, &bits, 4);
    CHECK(sum == 3.75f);

    PathState s = engine.instantiate();
    engine.enter(s, 1, {engine.fresh(s, 32, Origin::call_data)});
    r = engine.explore(std::move(s));
    REQUIRE(r.paths.size() == 1);
    const auto& v = r.paths[0].stack.at(0);
    CHECK(v.kind() == ExprKind::variable);
    CHECK(v.origins().contains(Origin::host_fresh));
}

TEST_CASE("memory.size and memory.grow")
{
    tw::ModuleBuilder b;
    b.memory(1, 4);
    auto t = b.type({}, {tw::I32});
    // grow by 2 (returns 1), then size (3), grow by 5 fails (-1); result = 1 + 3 + (-1) = 3
    b.func(t, {}, tw::Code{}.i32(2).op(0x40).op(0x00).op(0x3F).op(0x00).op(0x6A).i32(5).op(0x40).op(0x00).op(0x6A));
    Module m = decode(b);
    auto solver = make_solver();
    Engine engine{m, *solver, {}};
    auto r = engine.explore(0, {});
    REQUIRE(r.paths.size() == 1);
    CHECK(r.paths[0].stack.at(0).bits() == 3);
    CHECK(r.paths[0].memory.pages() == 3);
}

TEST_CASE("budgets")
{
    auto solver = make_solver();
    tw::ModuleBuilder b;
    auto t = b.type({tw::I32}, {});
    // eight sequential symbolic ifs: 256 paths
    tw::Code c;
    for (int i = 0; i < 8; ++i)
        c.get(0).i32(1 << i).op(0x71).if_().op(0x01).end();
    b.func(t, {}, c);
    auto spin = b.type({}, {});
    b.func(spin, {}, tw::Code{}.loop().op(0x01).br(0).end());
    Module m = decode(b);

    ExploreConfig cfg;
    cfg.max_paths = 10;
    Engine engine{m, *solver, cfg};
    PathState s = engine.instantiate();
    engine.enter(s, 0, {engine.fresh(s, 32, Origin::other)});
    auto r = engine.explore(std::move(s));
    CHECK(r.paths.size() == 10);
    CHECK(r.stats.truncated);

    cfg.max_paths = 1000;
    Engine full{m, *solver, cfg};
    s = full.instantiate();
    full.enter(s, 0, {full.fresh(s, 32, Origin::other)});
    r = full.explore(std::move(s));
    CHECK(r.paths.size() == 256);
    CHECK_FALSE(r.stats.truncated);

    cfg.loop_bound = 1000000;
    cfg.max_instructions = 500;
    Engine limited{m, *solver, cfg};
    r = limited.explore(1, {});
    REQUIRE(r.paths.size() == 1);
    CHECK(r.paths[0].status == PathStatus::budget_exhausted);
    CHECK(r.paths[0].instructions <= 501);
}

TEST_CASE("unreachable traps")
{
    tw::ModuleBuilder b;
    auto t = b.type({}, {});
    b.func(t, {}, tw::Code{}.op(0x00));
    Module m = decode(b);
    auto solver = make_solver();
    Engine engine{m, *solver, {}};
    auto r = engine.explore(0, {});
    REQUIRE(r.paths.size() == 1);
    CHECK(r.paths[0].status == PathStatus::trapped);
    REQUIRE_FALSE(r.paths[0].trace.empty());
    CHECK(r.paths[0].trace.back().kind == EventKind::trapped);
}

TEST_CASE("replay mode pins fresh values")
{
    tw::ModuleBuilder b;
    auto t = b.type({tw::I32}, {tw::I32});
    b.func(t, {}, tw::Code{}.block().get(0).i32(7).op(0x46).br_if(0).i32(1).op(0x0F).end().i32(2));
    Module m = decode(b);
    auto solver = make_solver();
    ExploreConfig cfg;
    cfg.replay = Model{{0, 7}};
    Engine engine{m, *solver, cfg};
    PathState s = engine.instantiate();
    auto x = engine.fresh(s, 32, Origin::call_data);
    CHECK(x.is_concrete());
    CHECK(x.origins().contains(Origin::call_data));
    engine.enter(s, 0, {x});
    auto r = engine.explore(std::move(s));
    REQUIRE(r.paths.size() == 1);
    CHECK(r.paths[0].stack.at(0).bits() == 2);
}
