#pragma once

#include "wana/opcode.hpp"

#include <cstdint>

namespace wana {

/// Concrete result of a float-involving Wasm instruction.
struct FloatResult
{
    uint64_t bits = 0;  ///< result bit pattern (i32 results zero-extended)
    bool trap = false;  ///< invalid conversion (NaN or out of range)
};

/// True for every instruction that consumes or produces a float value,
/// excluding loads, stores, consts and the bit-preserving reinterprets.
bool is_float_op(Opcode op) noexcept;

/// Evaluates a float instruction on raw operand bits. Unary instructions ignore `rhs`.
FloatResult eval_float_op(Opcode op, uint64_t lhs, uint64_t rhs) noexcept;

}  // namespace wana
