#pragma once

#include "wana/opcode.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace wana {

enum class ValType : uint8_t
{
    i32 = 0x7F,
    i64 = 0x7E,
    f32 = 0x7D,
    f64 = 0x7C,
};

constexpr unsigned bit_width(ValType t) noexcept
{
    return (t == ValType::i32 || t == ValType::f32) ? 32 : 64;
}

std::string_view to_string(ValType t) noexcept;

struct FuncType
{
    std::vector<ValType> params;
    std::vector<ValType> results;  // at most one in Wasm 1.0

    bool operator==(const FuncType&) const = default;
};

enum class ExternKind : uint8_t
{
    function = 0,
    table = 1,
    memory = 2,
    global = 3,
};

struct Limits
{
    uint32_t min = 0;
    std::optional<uint32_t> max;

    bool operator==(const Limits&) const = default;
};

struct TableType
{
    uint8_t element_type = 0x70;  // funcref
    Limits limits;

    bool operator==(const TableType&) const = default;
};

struct GlobalType
{
    ValType type = ValType::i32;
    bool is_mutable = false;

    bool operator==(const GlobalType&) const = default;
};

/// Single-result shorthand block type (empty or one value type).
struct BlockType
{
    std::optional<ValType> result;

    unsigned arity() const noexcept { return result ? 1u : 0u; }
    bool operator==(const BlockType&) const = default;
};

/// One decoded instruction. Bodies are kept as flat sequences; structured
/// instructions carry the offsets of their matching `else` and `end`.
struct Instruction
{
    Opcode op = Opcode::nop;
    BlockType block_type;  ///< block, loop, if
    uint32_t index = 0;    ///< label depth, function/type/local/global index, br_table slot
    uint32_t align = 0;    ///< memarg alignment exponent
    uint32_t offset = 0;   ///< memarg offset
    uint64_t literal = 0;  ///< const bits (i32 zero-extended, floats as raw bits)

    uint32_t else_pc = 0;  ///< if: offset of matching else, or of end when absent
    uint32_t end_pc = 0;   ///< block/loop/if/else: offset of matching end

    bool operator==(const Instruction&) const = default;
};

/// Target list of one br_table: `labels` plus the default label.
struct BranchTable
{
    std::vector<uint32_t> labels;
    uint32_t default_label = 0;

    bool operator==(const BranchTable&) const = default;
};

struct LocalDecl
{
    uint32_t count = 0;
    ValType type = ValType::i32;

    bool operator==(const LocalDecl&) const = default;
};

struct Function
{
    uint32_t type_index = 0;
    std::vector<LocalDecl> locals;
    std::vector<Instruction> body;  ///< terminated by the function-level `end`
    std::vector<BranchTable> branch_tables;
};

struct Import
{
    std::string module;
    std::string name;
    ExternKind kind = ExternKind::function;
    uint32_t type_index = 0;  ///< function imports
    TableType table;
    Limits memory;
    GlobalType global;
};

/// Constant initializer: a single const or global.get instruction.
using ConstExpr = Instruction;

struct Global
{
    GlobalType type;
    ConstExpr init;
};

struct Export
{
    std::string name;
    ExternKind kind = ExternKind::function;
    uint32_t index = 0;
};

struct ElementSegment
{
    uint32_t table_index = 0;
    ConstExpr offset;
    std::vector<uint32_t> functions;
};

struct DataSegment
{
    uint32_t memory_index = 0;
    ConstExpr offset;
    std::vector<uint8_t> bytes;
};

struct CustomSection
{
    std::string name;
    std::vector<uint8_t> payload;
};

struct Module
{
    std::vector<FuncType> types;
    std::vector<Import> imports;
    std::vector<Function> functions;  ///< defined (non-imported) functions
    std::vector<TableType> tables;
    std::vector<Limits> memories;
    std::vector<Global> globals;
    std::vector<Export> exports;
    std::vector<ElementSegment> elements;
    std::vector<DataSegment> data;
    std::optional<uint32_t> start;
    std::vector<CustomSection> custom_sections;

    uint32_t imported_function_count() const noexcept;
    uint32_t imported_global_count() const noexcept;
    uint32_t function_count() const noexcept;  ///< imports + defined
    bool is_imported_function(uint32_t func_index) const noexcept;
    /// The import record behind an imported function index.
    const Import& function_import(uint32_t func_index) const;
    const FuncType& function_type(uint32_t func_index) const;
    /// Defined function by absolute function index (must not be an import).
    const Function& defined_function(uint32_t func_index) const;

    std::optional<TableType> table() const;
    std::optional<Limits> memory() const;

    bool imports_namespace(std::string_view module_name) const;
    bool imports_function(std::string_view module_name, std::string_view name) const;

    std::size_t instruction_count() const noexcept;
};

/// Returns the function index exported under `name`, if any.
std::optional<uint32_t> export_lookup(const Module& module, std::string_view name);

}  // namespace wana
