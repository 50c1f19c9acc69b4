#include "wana/loader.hpp"
#include "wana/leb128.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>

namespace wana {

std::string_view to_string(DecodeErrorKind kind) noexcept
{
    switch (kind)
    {
    case DecodeErrorKind::bad_magic:
        return "BadMagic";
    case DecodeErrorKind::bad_version:
        return "BadVersion";
    case DecodeErrorKind::malformed_section:
        return "MalformedSection";
    case DecodeErrorKind::malformed_varint:
        return "MalformedVarint";
    }
    return "DecodeError";
}

std::string_view to_string(ValType t) noexcept
{
    switch (t)
    {
    case ValType::i32:
        return "i32";
    case ValType::i64:
        return "i64";
    case ValType::f32:
        return "f32";
    case ValType::f64:
        return "f64";
    }
    return "?";
}

namespace {

class Reader
{
public:
    Reader(std::span<const uint8_t> bytes, std::size_t base) : bytes_{bytes}, base_{base} {}

    std::size_t offset() const noexcept { return base_ + pos_; }
    bool at_end() const noexcept { return pos_ >= bytes_.size(); }
    std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

    [[noreturn]] void fail(const std::string& what) const
    {
        throw DecodeError{DecodeErrorKind::malformed_section, what, offset()};
    }

    uint8_t byte()
    {
        if (at_end())
            fail("unexpected end of input");
        return bytes_[pos_++];
    }

    std::span<const uint8_t> take(std::size_t n)
    {
        if (n > remaining())
            fail("length exceeds available bytes");
        auto out = bytes_.subspan(pos_, n);
        pos_ += n;
        return out;
    }

    uint64_t varint(bool is_signed, unsigned bits)
    {
        try
        {
            if (at_end())
                fail("unexpected end of input in varint");
            const auto r = decode_leb128(bytes_.subspan(pos_), is_signed, bits);
            pos_ += r.consumed;
            return r.value;
        }
        catch (const MalformedVarint& e)
        {
            throw DecodeError{DecodeErrorKind::malformed_varint, e.what(), offset()};
        }
    }

    uint32_t u32() { return static_cast<uint32_t>(varint(false, 32)); }

    std::string name()
    {
        const auto len = u32();
        auto raw = take(len);
        return {raw.begin(), raw.end()};
    }

    uint64_t fixed(unsigned nbytes)
    {
        auto raw = take(nbytes);
        uint64_t v = 0;
        for (unsigned i = 0; i < nbytes; ++i)
            v |= static_cast<uint64_t>(raw[i]) << (8 * i);
        return v;
    }

private:
    std::span<const uint8_t> bytes_;
    std::size_t base_;
    std::size_t pos_ = 0;
};

ValType read_valtype(Reader& r)
{
    const auto b = r.byte();
    switch (b)
    {
    case 0x7F:
    case 0x7E:
    case 0x7D:
    case 0x7C:
        return static_cast<ValType>(b);
    default:
        r.fail("invalid value type " + std::to_string(b));
    }
}

Limits read_limits(Reader& r)
{
    Limits l;
    const auto flag = r.byte();
    if (flag > 1)
        r.fail("invalid limits flag");
    l.min = r.u32();
    if (flag == 1)
        l.max = r.u32();
    return l;
}

TableType read_table_type(Reader& r)
{
    TableType t;
    t.element_type = r.byte();
    if (t.element_type != 0x70)
        r.fail("table element type must be funcref");
    t.limits = read_limits(r);
    return t;
}

GlobalType read_global_type(Reader& r)
{
    GlobalType g;
    g.type = read_valtype(r);
    const auto m = r.byte();
    if (m > 1)
        r.fail("invalid global mutability");
    g.is_mutable = m == 1;
    return g;
}

BlockType read_block_type(Reader& r)
{
    const auto b = r.byte();
    if (b == 0x40)
        return {};
    if (b == 0x7F || b == 0x7E || b == 0x7D || b == 0x7C)
        return BlockType{static_cast<ValType>(b)};
    r.fail("unsupported block type " + std::to_string(b));
}

/// Reads one instruction's opcode and immediates. br_table targets go to `tables`.
Instruction read_instruction(Reader& r, std::vector<BranchTable>* tables)
{
    const auto at = r.offset();
    const auto byte = r.byte();
    const auto info = opcode_info(byte);
    if (!info)
        throw DecodeError{DecodeErrorKind::malformed_section, "unknown opcode " + std::to_string(byte), at};

    Instruction ins;
    ins.op = info->op;
    switch (info->immediate)
    {
    case Immediate::none:
        break;
    case Immediate::block_type:
        ins.block_type = read_block_type(r);
        break;
    case Immediate::label:
    case Immediate::function:
    case Immediate::local:
    case Immediate::global:
        ins.index = r.u32();
        break;
    case Immediate::br_table: {
        if (!tables)
            r.fail("br_table outside function body");
        BranchTable t;
        const auto n = r.u32();
        if (n > r.remaining())
            r.fail("br_table length exceeds input");
        t.labels.reserve(n);
        for (uint32_t i = 0; i < n; ++i)
            t.labels.push_back(r.u32());
        t.default_label = r.u32();
        ins.index = static_cast<uint32_t>(tables->size());
        tables->push_back(std::move(t));
        break;
    }
    case Immediate::call_indirect:
        ins.index = r.u32();
        if (r.byte() != 0x00)
            r.fail("call_indirect reserved byte must be zero");
        break;
    case Immediate::memarg:
        ins.align = r.u32();
        ins.offset = r.u32();
        break;
    case Immediate::memory_index:
        if (r.byte() != 0x00)
            r.fail("memory index must be zero");
        break;
    case Immediate::i32:
        ins.literal = static_cast<uint32_t>(r.varint(true, 32));
        break;
    case Immediate::i64:
        ins.literal = r.varint(true, 64);
        break;
    case Immediate::f32:
        ins.literal = r.fixed(4);
        break;
    case Immediate::f64:
        ins.literal = r.fixed(8);
        break;
    }
    return ins;
}

ConstExpr read_const_expr(Reader& r)
{
    auto ins = read_instruction(r, nullptr);
    if (ins.op == Opcode::end)
        r.fail("empty initializer expression");
    if (r.byte() != static_cast<uint8_t>(Opcode::end))
        r.fail("initializer must be a single instruction followed by end");
    return ins;
}

void read_body(Reader& r, Function& fn)
{
    struct Open
    {
        uint32_t pc;
        Opcode op;
        bool seen_else;
    };
    std::vector<Open> control;  // excludes the implicit function block

    while (true)
    {
        if (r.at_end())
            r.fail("function body ends before its final end");
        auto ins = read_instruction(r, &fn.branch_tables);
        const auto pc = static_cast<uint32_t>(fn.body.size());
        const auto depth = static_cast<uint32_t>(control.size());

        switch (ins.op)
        {
        case Opcode::block:
        case Opcode::loop:
        case Opcode::if_:
            control.push_back({pc, ins.op, false});
            break;
        case Opcode::else_: {
            if (control.empty() || control.back().op != Opcode::if_ || control.back().seen_else)
                r.fail("else without matching if");
            control.back().seen_else = true;
            fn.body[control.back().pc].else_pc = pc;
            break;
        }
        case Opcode::end:
            if (control.empty())
            {
                ins.end_pc = pc;
                fn.body.push_back(ins);
                return;
            }
            else
            {
                const auto open = control.back();
                control.pop_back();
                auto& opener = fn.body[open.pc];
                opener.end_pc = pc;
                if (open.op == Opcode::if_)
                {
                    if (!open.seen_else)
                        opener.else_pc = pc;
                    else
                        fn.body[opener.else_pc].end_pc = pc;
                }
            }
            break;
        case Opcode::br:
        case Opcode::br_if:
            if (ins.index > depth)
                r.fail("branch depth out of range");
            break;
        case Opcode::br_table: {
            const auto& t = fn.branch_tables[ins.index];
            const bool ok = t.default_label <= depth &&
                            std::all_of(t.labels.begin(), t.labels.end(), [&](uint32_t l) { return l <= depth; });
            if (!ok)
                r.fail("br_table depth out of range");
            break;
        }
        default:
            break;
        }
        fn.body.push_back(ins);
    }
}

void read_locals(Reader& r, Function& fn)
{
    const auto groups = r.u32();
    uint64_t total = 0;
    for (uint32_t i = 0; i < groups; ++i)
    {
        LocalDecl d;
        d.count = r.u32();
        d.type = read_valtype(r);
        total += d.count;
        if (total > 50000)
            r.fail("too many locals");
        fn.locals.push_back(d);
    }
}

template <typename F>
void read_vector(Reader& r, F&& item)
{
    const auto n = r.u32();
    if (n > r.remaining())
        r.fail("vector length exceeds section");
    for (uint32_t i = 0; i < n; ++i)
        item();
}

void check_structure(const Module& m, std::size_t end_offset, const std::vector<uint32_t>& function_types)
{
    auto fail = [&](const std::string& what) {
        throw DecodeError{DecodeErrorKind::malformed_section, what, end_offset};
    };
    if (function_types.size() != m.functions.size())
        fail("code section count does not match function section count");

    std::size_t tables = m.tables.size(), memories = m.memories.size();
    for (const auto& imp : m.imports)
    {
        tables += imp.kind == ExternKind::table;
        memories += imp.kind == ExternKind::memory;
        if (imp.kind == ExternKind::function && imp.type_index >= m.types.size())
            fail("import type index out of range");
    }
    if (tables > 1)
        fail("more than one table");
    if (memories > 1)
        fail("more than one memory");
    for (const auto& f : m.functions)
        if (f.type_index >= m.types.size())
            fail("function type index out of range");

    const auto nfuncs = m.function_count();
    const auto nglobals = m.imported_global_count() + m.globals.size();
    for (const auto& e : m.exports)
    {
        const std::size_t limit = e.kind == ExternKind::function ? nfuncs
                                  : e.kind == ExternKind::global ? nglobals
                                  : e.kind == ExternKind::table  ? tables
                                                                 : memories;
        if (e.index >= limit)
            fail("export '" + e.name + "' index out of range");
    }
    for (const auto& seg : m.elements)
        for (auto f : seg.functions)
            if (f >= nfuncs)
                fail("element segment function index out of range");
    if (m.start && *m.start >= nfuncs)
        fail("start function index out of range");

    for (const auto& f : m.functions)
        for (const auto& ins : f.body)
        {
            if (ins.op == Opcode::call && ins.index >= nfuncs)
                fail("call target out of range");
            if (ins.op == Opcode::call_indirect && ins.index >= m.types.size())
                fail("call_indirect type index out of range");
        }
}

}  // namespace

Module decode_module(std::span<const uint8_t> bytes)
{
    static constexpr uint8_t magic[] = {0x00, 0x61, 0x73, 0x6D};
    static constexpr uint8_t version[] = {0x01, 0x00, 0x00, 0x00};
    if (bytes.size() < 4 || !std::equal(std::begin(magic), std::end(magic), bytes.begin()))
        throw DecodeError{DecodeErrorKind::bad_magic, "invalid wasm magic", 0};
    if (bytes.size() < 8 || !std::equal(std::begin(version), std::end(version), bytes.begin() + 4))
        throw DecodeError{DecodeErrorKind::bad_version, "unsupported wasm version", 4};

    Module m;
    std::vector<uint32_t> function_types;
    Reader top{bytes.subspan(8), 8};
    uint8_t last_id = 0;

    while (!top.at_end())
    {
        const auto id = top.byte();
        const auto size = top.u32();
        const auto payload_offset = top.offset();
        Reader r{top.take(size), payload_offset};

        if (id != 0)
        {
            if (id > 11)
                r.fail("unknown section id " + std::to_string(id));
            if (id <= last_id)
                r.fail("section id " + std::to_string(id) + " out of order");
            last_id = id;
        }

        switch (id)
        {
        case 0: {
            CustomSection c;
            c.name = r.name();
            auto rest = r.take(r.remaining());
            c.payload.assign(rest.begin(), rest.end());
            m.custom_sections.push_back(std::move(c));
            break;
        }
        case 1:
            read_vector(r, [&] {
                if (r.byte() != 0x60)
                    r.fail("expected 0x60 for functype");
                FuncType t;
                read_vector(r, [&] { t.params.push_back(read_valtype(r)); });
                read_vector(r, [&] { t.results.push_back(read_valtype(r)); });
                if (t.results.size() > 1)
                    r.fail("multiple results are not part of Wasm 1.0");
                m.types.push_back(std::move(t));
            });
            break;
        case 2:
            read_vector(r, [&] {
                Import imp;
                imp.module = r.name();
                imp.name = r.name();
                const auto kind = r.byte();
                switch (kind)
                {
                case 0:
                    imp.kind = ExternKind::function;
                    imp.type_index = r.u32();
                    break;
                case 1:
                    imp.kind = ExternKind::table;
                    imp.table = read_table_type(r);
                    break;
                case 2:
                    imp.kind = ExternKind::memory;
                    imp.memory = read_limits(r);
                    break;
                case 3:
                    imp.kind = ExternKind::global;
                    imp.global = read_global_type(r);
                    break;
                default:
                    r.fail("invalid import kind");
                }
                m.imports.push_back(std::move(imp));
            });
            break;
        case 3:
            read_vector(r, [&] { function_types.push_back(r.u32()); });
            break;
        case 4:
            read_vector(r, [&] { m.tables.push_back(read_table_type(r)); });
            break;
        case 5:
            read_vector(r, [&] { m.memories.push_back(read_limits(r)); });
            break;
        case 6:
            read_vector(r, [&] {
                Global g;
                g.type = read_global_type(r);
                g.init = read_const_expr(r);
                m.globals.push_back(g);
            });
            break;
        case 7:
            read_vector(r, [&] {
                Export e;
                e.name = r.name();
                const auto kind = r.byte();
                if (kind > 3)
                    r.fail("invalid export kind");
                e.kind = static_cast<ExternKind>(kind);
                e.index = r.u32();
                m.exports.push_back(std::move(e));
            });
            break;
        case 8:
            m.start = r.u32();
            break;
        case 9:
            read_vector(r, [&] {
                ElementSegment seg;
                seg.table_index = r.u32();
                if (seg.table_index != 0)
                    r.fail("element segment table index must be zero");
                seg.offset = read_const_expr(r);
                read_vector(r, [&] { seg.functions.push_back(r.u32()); });
                m.elements.push_back(std::move(seg));
            });
            break;
        case 10: {
            const auto n = r.u32();
            if (n != function_types.size())
                r.fail("code section count does not match function section count");
            for (uint32_t i = 0; i < n; ++i)
            {
                const auto body_size = r.u32();
                const auto body_offset = r.offset();
                Reader br{r.take(body_size), body_offset};
                Function fn;
                fn.type_index = function_types[i];
                read_locals(br, fn);
                read_body(br, fn);
                if (!br.at_end())
                    br.fail("trailing bytes after function body");
                m.functions.push_back(std::move(fn));
            }
            break;
        }
        case 11:
            read_vector(r, [&] {
                DataSegment seg;
                seg.memory_index = r.u32();
                if (seg.memory_index != 0)
                    r.fail("data segment memory index must be zero");
                seg.offset = read_const_expr(r);
                const auto len = r.u32();
                auto raw = r.take(len);
                seg.bytes.assign(raw.begin(), raw.end());
                m.data.push_back(std::move(seg));
            });
            break;
        }
        if (!r.at_end())
            r.fail("section size mismatch");
    }

    check_structure(m, bytes.size(), function_types);
    return m;
}

Function decode_function_body(std::span<const uint8_t> bytes, uint32_t type_index)
{
    Reader r{bytes, 0};
    Function fn;
    fn.type_index = type_index;
    read_locals(r, fn);
    read_body(r, fn);
    if (!r.at_end())
        r.fail("trailing bytes after function body");
    return fn;
}

std::vector<uint8_t> read_file(const std::string& path)
{
    std::ifstream in{path, std::ios::binary};
    if (!in)
        throw std::runtime_error{"cannot open " + path};
    return {std::istreambuf_iterator<char>{in}, std::istreambuf_iterator<char>{}};
}

uint32_t Module::imported_function_count() const noexcept
{
    return static_cast<uint32_t>(
        std::count_if(imports.begin(), imports.end(), [](const Import& i) { return i.kind == ExternKind::function; }));
}

uint32_t Module::imported_global_count() const noexcept
{
    return static_cast<uint32_t>(
        std::count_if(imports.begin(), imports.end(), [](const Import& i) { return i.kind == ExternKind::global; }));
}

uint32_t Module::function_count() const noexcept
{
    return imported_function_count() + static_cast<uint32_t>(functions.size());
}

bool Module::is_imported_function(uint32_t func_index) const noexcept
{
    return func_index < imported_function_count();
}

const Import& Module::function_import(uint32_t func_index) const
{
    uint32_t seen = 0;
    for (const auto& imp : imports)
    {
        if (imp.kind != ExternKind::function)
            continue;
        if (seen++ == func_index)
            return imp;
    }
    throw std::out_of_range{"not an imported function: " + std::to_string(func_index)};
}

const FuncType& Module::function_type(uint32_t func_index) const
{
    if (is_imported_function(func_index))
        return types.at(function_import(func_index).type_index);
    return types.at(defined_function(func_index).type_index);
}

const Function& Module::defined_function(uint32_t func_index) const
{
    const auto nimp = imported_function_count();
    if (func_index < nimp)
        throw std::out_of_range{"function " + std::to_string(func_index) + " is imported"};
    return functions.at(func_index - nimp);
}

std::optional<TableType> Module::table() const
{
    for (const auto& imp : imports)
        if (imp.kind == ExternKind::table)
            return imp.table;
    if (!tables.empty())
        return tables.front();
    return std::nullopt;
}

std::optional<Limits> Module::memory() const
{
    for (const auto& imp : imports)
        if (imp.kind == ExternKind::memory)
            return imp.memory;
    if (!memories.empty())
        return memories.front();
    return std::nullopt;
}

bool Module::imports_namespace(std::string_view module_name) const
{
    return std::any_of(imports.begin(), imports.end(), [&](const Import& i) { return i.module == module_name; });
}

bool Module::imports_function(std::string_view module_name, std::string_view name) const
{
    return std::any_of(imports.begin(), imports.end(), [&](const Import& i) {
        return i.kind == ExternKind::function && i.module == module_name && i.name == name;
    });
}

std::size_t Module::instruction_count() const noexcept
{
    std::size_t n = 0;
    for (const auto& f : functions)
        n += f.body.size();
    return n;
}

std::optional<uint32_t> export_lookup(const Module& module, std::string_view name)
{
    for (const auto& e : module.exports)
        if (e.kind == ExternKind::function && e.name == name)
            return e.index;
    return std::nullopt;
}

}  // namespace wana
