#include "wana/loader.hpp"
#include "wana/opcode.hpp"

#include "common.hpp"
#include "wasm_builder.hpp"

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <set>

using namespace wana;
using testing_support::fixture;
using testing_support::load_fixture;

namespace {

DecodeErrorKind decode_error(const std::vector<uint8_t>& bytes)
{
    try {
        decode_module(bytes);
    } catch (const DecodeError& e) {
        return e.kind;
    }
    FAIL("module decoded unexpectedly");
    return DecodeErrorKind::bad_magic;
}

std::vector<std::string> all_fixtures()
{
    std::vector<std::string> out;
    for (const auto& e : std::filesystem::recursive_directory_iterator(WANA_FIXTURE_DIR))
        if (e.path().extension() == ".wasm")
            out.push_back(e.path().string());
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

TEST_CASE("header-only module is empty")
{
    tw::Bytes header{0x00, 0x61, 0x73, 0x6D, 0x01, 0x00, 0x00, 0x00};
    Module m = decode_module(header);
    CHECK(m.types.empty());
    CHECK(m.imports.empty());
    CHECK(m.functions.empty());
    CHECK(m.tables.empty());
    CHECK(m.memories.empty());
    CHECK(m.globals.empty());
    CHECK(m.exports.empty());
    CHECK(m.elements.empty());
    CHECK(m.data.empty());
    CHECK_FALSE(m.start);
}

TEST_CASE("corrupted headers")
{
    CHECK(decode_error({0x00, 0x61, 0x73, 0x6E, 0x01, 0x00, 0x00, 0x00}) == DecodeErrorKind::bad_magic);
    CHECK(decode_error({0x00, 0x61, 0x73}) == DecodeErrorKind::bad_magic);
    CHECK(decode_error({0x00, 0x61, 0x73, 0x6D, 0x02, 0x00, 0x00, 0x00}) == DecodeErrorKind::bad_version);
}

TEST_CASE("malformed sections")
{
    tw::Bytes header{0x00, 0x61, 0x73, 0x6D, 0x01, 0x00, 0x00, 0x00};

    SUBCASE("length beyond input")
    {
        auto b = header;
        b.insert(b.end(), {0x01, 0x10, 0x00});
        CHECK(decode_error(b) == DecodeErrorKind::malformed_section);
    }
    SUBCASE("payload shorter than declared contents")
    {
        auto b = header;
        // type section claims one entry but the payload holds none
        b.insert(b.end(), {0x01, 0x01, 0x01});
        CHECK(decode_error(b) == DecodeErrorKind::malformed_section);
    }
    SUBCASE("out of order")
    {
        tw::ModuleBuilder m;
        m.memory(1);
        m.type({}, {});
        auto b = m.build();  // type(1), memory(5)
        // swap into memory before type by hand
        tw::Bytes swapped = header;
        swapped.insert(swapped.end(), {0x05, 0x03, 0x01, 0x00, 0x01});
        swapped.insert(swapped.end(), {0x01, 0x04, 0x01, 0x60, 0x00, 0x00});
        CHECK_NOTHROW(decode_module(b));
        CHECK(decode_error(swapped) == DecodeErrorKind::malformed_section);
    }
    SUBCASE("varint errors propagate")
    {
        auto b = header;
        b.insert(b.end(), {0x01, 0x80, 0x80, 0x80, 0x80, 0x80, 0x00});
        CHECK(decode_error(b) == DecodeErrorKind::malformed_varint);
    }
    SUBCASE("function and code counts disagree")
    {
        auto b = header;
        b.insert(b.end(), {0x01, 0x04, 0x01, 0x60, 0x00, 0x00});  // type
        b.insert(b.end(), {0x03, 0x02, 0x01, 0x00});              // one function, no code section
        CHECK(decode_error(b) == DecodeErrorKind::malformed_section);
    }
    SUBCASE("two memories")
    {
        auto b = header;
        b.insert(b.end(), {0x05, 0x05, 0x02, 0x00, 0x01, 0x00, 0x01});
        CHECK(decode_error(b) == DecodeErrorKind::malformed_section);
    }
    SUBCASE("export index out of range")
    {
        tw::ModuleBuilder m;
        m.export_func("f", 3);
        CHECK(decode_error(m.build()) == DecodeErrorKind::malformed_section);
    }
    SUBCASE("branch depth out of range")
    {
        tw::ModuleBuilder m;
        auto t = m.type({}, {});
        m.func(t, {}, tw::Code{}.br(1));
        CHECK(decode_error(m.build()) == DecodeErrorKind::malformed_section);
    }
    SUBCASE("unmatched else")
    {
        tw::ModuleBuilder m;
        auto t = m.type({}, {});
        m.func(t, {}, tw::Code{}.block().else_().end());
        CHECK(decode_error(m.build()) == DecodeErrorKind::malformed_section);
    }
}

TEST_CASE("every section kind")
{
    tw::ModuleBuilder m;
    auto t_void = m.type({}, {});
    auto t_apply = m.type({tw::I64, tw::I64, tw::I64}, {});
    m.import_func("env", "prints", t_void);
    auto f1 = m.func(t_void, {tw::I32, tw::I32, tw::I64}, tw::Code{}.i32(1).if_().op(0x01).end());
    (void)f1;
    auto f2 = m.func(t_apply, {}, tw::Code{}.call(0));
    m.table(4);
    m.memory(1, 3);
    m.global(tw::I64, false, tw::Code{}.i64(42));
    m.export_func("apply", f2);
    m.elem(1, {f1, f2});
    m.data(16, "eosio.token");
    m.start(f1);
    m.custom("name", {0x01, 0x02});

    Module mod = decode_module(m.build());
    REQUIRE(mod.types.size() == 2);
    REQUIRE(mod.imports.size() == 1);
    CHECK(mod.imports[0].module == "env");
    CHECK(mod.imports[0].name == "prints");
    REQUIRE(mod.functions.size() == 2);
    CHECK(mod.functions[0].locals == std::vector<LocalDecl>{{2, ValType::i32}, {1, ValType::i64}});
    CHECK(mod.function_count() == 3);
    CHECK(mod.imported_function_count() == 1);
    REQUIRE(mod.table());
    CHECK(mod.table()->limits.min == 4);
    REQUIRE(mod.memory());
    CHECK(mod.memory()->min == 1);
    CHECK(mod.memory()->max == 3u);
    REQUIRE(mod.globals.size() == 1);
    CHECK(mod.globals[0].init.op == Opcode::i64_const);
    CHECK(mod.globals[0].init.literal == 42);
    REQUIRE(mod.elements.size() == 1);
    CHECK(mod.elements[0].functions == std::vector<uint32_t>{1, 2});
    REQUIRE(mod.data.size() == 1);
    CHECK(mod.data[0].offset.literal == 16);
    CHECK(std::string(mod.data[0].bytes.begin(), mod.data[0].bytes.end()) == "eosio.token");
    CHECK(mod.start == 1u);
    REQUIRE(mod.custom_sections.size() == 1);
    CHECK(mod.custom_sections[0].name == "name");
    CHECK(mod.custom_sections[0].payload == std::vector<uint8_t>{0x01, 0x02});

    CHECK(export_lookup(mod, "apply") == 2u);
    CHECK_FALSE(export_lookup(mod, "nonexistent"));
    CHECK(mod.function_type(2).params == std::vector<ValType>(3, ValType::i64));
}

TEST_CASE("structured control offsets")
{
    tw::ModuleBuilder m;
    auto t = m.type({tw::I32}, {tw::I32});
    // 0 get, 1 if, 2 i32.const, 3 else, 4 i32.const, 5 end, 6 end(function)
    m.func(t, {}, tw::Code{}.get(0).if_(tw::I32).i32(1).else_().i32(2).end());
    Module mod = decode_module(m.build());
    const auto& body = mod.functions[0].body;
    REQUIRE(body.size() == 7);
    CHECK(body[1].op == Opcode::if_);
    CHECK(body[1].else_pc == 3);
    CHECK(body[1].end_pc == 5);
    CHECK(body[3].end_pc == 5);
    CHECK(body[1].block_type.result == ValType::i32);
    CHECK(body.back().op == Opcode::end);
}

TEST_CASE("all Wasm 1.0 opcodes decode")
{
    CHECK(opcode_count() == 172);
    tw::ModuleBuilder m;
    auto t = m.type({}, {});
    m.table(1);
    m.memory(1);
    m.global(tw::I32, true, tw::Code{}.i32(0));
    tw::Code c;
    c.op(0x02).op(0x40);  // outer block so branches have a target
    for (unsigned b = 0; b < 256; ++b) {
        auto info = opcode_info(static_cast<uint8_t>(b));
        if (!info)
            continue;
        switch (info->immediate) {
        case Immediate::none:
            if (b == 0x05 || b == 0x0B)
                continue;  // structural, emitted below
            c.op(static_cast<uint8_t>(b));
            break;
        case Immediate::block_type: c.op(static_cast<uint8_t>(b)).op(0x40).op(0x0B); break;
        case Immediate::label: c.op(static_cast<uint8_t>(b)).u(0); break;
        case Immediate::br_table: c.op(0x0E).u(2).u(0).u(0).u(0); break;
        case Immediate::function: c.call(0); break;
        case Immediate::call_indirect: c.call_indirect(0); break;
        case Immediate::local: c.op(static_cast<uint8_t>(b)).u(0); break;
        case Immediate::global: c.op(static_cast<uint8_t>(b)).u(0); break;
        case Immediate::memarg: c.mem(static_cast<uint8_t>(b), 2, 8); break;
        case Immediate::memory_index: c.op(static_cast<uint8_t>(b)).op(0x00); break;
        case Immediate::i32: c.i32(-5); break;
        case Immediate::i64: c.i64(-5); break;
        case Immediate::f32: c.op(0x43).op(0).op(0).op(0x80).op(0x3F); break;
        case Immediate::f64:
            c.op(0x44);
            for (int i = 0; i < 6; ++i)
                c.op(0);
            c.op(0xF0).op(0x3F);
            break;
        }
    }
    c.i32(1).op(0x04).op(0x40).op(0x01).op(0x05).op(0x01).op(0x0B);
    c.end();
    m.func(t, {tw::I32}, c);
    Module mod;
    REQUIRE_NOTHROW(mod = decode_module(m.build()));
    std::set<Opcode> seen;
    for (const auto& ins : mod.functions[0].body)
        seen.insert(ins.op);
    CHECK(seen.size() == opcode_count());

    const auto& f = mod.functions[0];
    auto again = decode_function_body(encode_function_body(f), f.type_index);
    CHECK(again.body == f.body);
    CHECK(again.branch_tables == f.branch_tables);
}

TEST_CASE("fixture corpus decodes and re-encodes")
{
    auto files = all_fixtures();
    REQUIRE(files.size() >= 30);
    for (const auto& path : files) {
        CAPTURE(path);
        auto bytes = read_file(path);
        Module m;
        REQUIRE_NOTHROW(m = decode_module(bytes));
        for (const auto& f : m.functions) {
            auto enc = encode_function_body(f);
            Function again = decode_function_body(enc, f.type_index);
            REQUIRE(again.body == f.body);
            REQUIRE(again.locals == f.locals);
            REQUIRE(again.branch_tables == f.branch_tables);
            REQUIRE(encode_function_body(again) == enc);
        }
    }
}

TEST_CASE("fixture entry points")
{
    Module eos = load_fixture("eosio/fake_eos_vulnerable.wasm");
    auto apply = export_lookup(eos, "apply");
    REQUIRE(apply);
    CHECK(eos.function_type(*apply).params == std::vector<ValType>(3, ValType::i64));
    CHECK(eos.function_type(*apply).results.empty());
    CHECK(eos.imports_namespace("env"));

    Module eth = load_fixture("ethereum/greedy_vault_vulnerable.wasm");
    auto main = export_lookup(eth, "main");
    REQUIRE(main);
    CHECK(eth.function_type(*main).params.empty());
    CHECK(eth.imports_namespace("ethereum"));
    CHECK_FALSE(export_lookup(eth, "nonexistent"));
}
