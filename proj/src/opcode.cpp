#include "wana/opcode.hpp"

#include <array>

namespace wana {
namespace {

constexpr std::array<std::optional<OpcodeInfo>, 256> build_table()
{
    std::array<std::optional<OpcodeInfo>, 256> table{};
#define WANA_OPCODE_ROW(name, byte, text, imm) table[byte] = OpcodeInfo{Opcode::name, text, Immediate::imm};
    WANA_OPCODES(WANA_OPCODE_ROW)
#undef WANA_OPCODE_ROW
    return table;
}

constexpr auto opcode_table = build_table();

}  // namespace

std::optional<OpcodeInfo> opcode_info(uint8_t byte) noexcept
{
    return opcode_table[byte];
}

std::string_view opcode_name(Opcode op) noexcept
{
    const auto& info = opcode_table[static_cast<uint8_t>(op)];
    return info ? info->name : std::string_view{"<invalid>"};
}

std::size_t opcode_count() noexcept
{
    std::size_t n = 0;
    for (const auto& entry : opcode_table)
        n += entry.has_value();
    return n;
}

}  // namespace wana
