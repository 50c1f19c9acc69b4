#include "wana/numeric.hpp"

#include <bit>
#include <cmath>
#include <limits>

namespace wana {
namespace {

float f32(uint64_t bits)
{
    return std::bit_cast<float>(static_cast<uint32_t>(bits));
}

double f64(uint64_t bits)
{
    return std::bit_cast<double>(bits);
}

uint64_t bits_of(float v)
{
    return std::bit_cast<uint32_t>(v);
}

uint64_t bits_of(double v)
{
    return std::bit_cast<uint64_t>(v);
}

template <typename T>
T wasm_min(T a, T b)
{
    if (std::isnan(a) || std::isnan(b))
        return std::numeric_limits<T>::quiet_NaN();
    if (a == b)
        return std::signbit(a) ? a : b;
    return a < b ? a : b;
}

template <typename T>
T wasm_max(T a, T b)
{
    if (std::isnan(a) || std::isnan(b))
        return std::numeric_limits<T>::quiet_NaN();
    if (a == b)
        return std::signbit(a) ? b : a;
    return a > b ? a : b;
}

/// Truncation to an integer range [lo, hi) expressed with exact power-of-two bounds.
FloatResult truncate(double v, double lo_exclusive_or_inclusive, bool lo_inclusive, double hi_exclusive,
                     bool is_signed, unsigned width)
{
    if (std::isnan(v))
        return {0, true};
    const double t = std::trunc(v);
    const bool lo_ok = lo_inclusive ? t >= lo_exclusive_or_inclusive : t > lo_exclusive_or_inclusive;
    if (!lo_ok || !(t < hi_exclusive))
        return {0, true};
    uint64_t out = 0;
    if (is_signed)
        out = static_cast<uint64_t>(static_cast<int64_t>(t));
    else
        out = static_cast<uint64_t>(t);
    if (width == 32)
        out &= 0xffffffffu;
    return {out, false};
}

constexpr double two31 = 2147483648.0;
constexpr double two32 = 4294967296.0;
constexpr double two63 = 9223372036854775808.0;
constexpr double two64 = 18446744073709551616.0;

}  // namespace

bool is_float_op(Opcode op) noexcept
{
    const auto b = static_cast<uint8_t>(op);
    if (b >= 0x5B && b <= 0x66)
        return true;
    if (b >= 0x8B && b <= 0xA6)
        return true;
    switch (op)
    {
    case Opcode::i32_trunc_f32_s:
    case Opcode::i32_trunc_f32_u:
    case Opcode::i32_trunc_f64_s:
    case Opcode::i32_trunc_f64_u:
    case Opcode::i64_trunc_f32_s:
    case Opcode::i64_trunc_f32_u:
    case Opcode::i64_trunc_f64_s:
    case Opcode::i64_trunc_f64_u:
    case Opcode::f32_convert_i32_s:
    case Opcode::f32_convert_i32_u:
    case Opcode::f32_convert_i64_s:
    case Opcode::f32_convert_i64_u:
    case Opcode::f32_demote_f64:
    case Opcode::f64_convert_i32_s:
    case Opcode::f64_convert_i32_u:
    case Opcode::f64_convert_i64_s:
    case Opcode::f64_convert_i64_u:
    case Opcode::f64_promote_f32:
        return true;
    default:
        return false;
    }
}

FloatResult eval_float_op(Opcode op, uint64_t lhs, uint64_t rhs) noexcept
{
    const float a32 = f32(lhs), b32 = f32(rhs);
    const double a64 = f64(lhs), b64 = f64(rhs);
    const auto i32s = static_cast<int32_t>(static_cast<uint32_t>(lhs));
    const auto i32u = static_cast<uint32_t>(lhs);
    const auto i64s = static_cast<int64_t>(lhs);
    switch (op)
    {
    case Opcode::f32_eq:
        return {a32 == b32};
    case Opcode::f32_ne:
        return {a32 != b32};
    case Opcode::f32_lt:
        return {a32 < b32};
    case Opcode::f32_gt:
        return {a32 > b32};
    case Opcode::f32_le:
        return {a32 <= b32};
    case Opcode::f32_ge:
        return {a32 >= b32};
    case Opcode::f64_eq:
        return {a64 == b64};
    case Opcode::f64_ne:
        return {a64 != b64};
    case Opcode::f64_lt:
        return {a64 < b64};
    case Opcode::f64_gt:
        return {a64 > b64};
    case Opcode::f64_le:
        return {a64 <= b64};
    case Opcode::f64_ge:
        return {a64 >= b64};

    case Opcode::f32_abs:
        return {lhs & 0x7fffffffu};
    case Opcode::f32_neg:
        return {(lhs ^ 0x80000000u) & 0xffffffffu};
    case Opcode::f32_ceil:
        return {bits_of(std::ceil(a32))};
    case Opcode::f32_floor:
        return {bits_of(std::floor(a32))};
    case Opcode::f32_trunc:
        return {bits_of(std::trunc(a32))};
    case Opcode::f32_nearest:
        return {bits_of(std::nearbyint(a32))};
    case Opcode::f32_sqrt:
        return {bits_of(std::sqrt(a32))};
    case Opcode::f32_add:
        return {bits_of(a32 + b32)};
    case Opcode::f32_sub:
        return {bits_of(a32 - b32)};
    case Opcode::f32_mul:
        return {bits_of(a32 * b32)};
    case Opcode::f32_div:
        return {bits_of(a32 / b32)};
    case Opcode::f32_min:
        return {bits_of(wasm_min(a32, b32))};
    case Opcode::f32_max:
        return {bits_of(wasm_max(a32, b32))};
    case Opcode::f32_copysign:
        return {(lhs & 0x7fffffffu) | (rhs & 0x80000000u)};

    case Opcode::f64_abs:
        return {lhs & 0x7fffffffffffffffull};
    case Opcode::f64_neg:
        return {lhs ^ 0x8000000000000000ull};
    case Opcode::f64_ceil:
        return {bits_of(std::ceil(a64))};
    case Opcode::f64_floor:
        return {bits_of(std::floor(a64))};
    case Opcode::f64_trunc:
        return {bits_of(std::trunc(a64))};
    case Opcode::f64_nearest:
        return {bits_of(std::nearbyint(a64))};
    case Opcode::f64_sqrt:
        return {bits_of(std::sqrt(a64))};
    case Opcode::f64_add:
        return {bits_of(a64 + b64)};
    case Opcode::f64_sub:
        return {bits_of(a64 - b64)};
    case Opcode::f64_mul:
        return {bits_of(a64 * b64)};
    case Opcode::f64_div:
        return {bits_of(a64 / b64)};
    case Opcode::f64_min:
        return {bits_of(wasm_min(a64, b64))};
    case Opcode::f64_max:
        return {bits_of(wasm_max(a64, b64))};
    case Opcode::f64_copysign:
        return {(lhs & 0x7fffffffffffffffull) | (rhs & 0x8000000000000000ull)};

    case Opcode::i32_trunc_f32_s:
        return truncate(a32, -two31, true, two31, true, 32);
    case Opcode::i32_trunc_f32_u:
        return truncate(a32, -1.0, false, two32, false, 32);
    case Opcode::i32_trunc_f64_s:
        return truncate(a64, -two31, true, two31, true, 32);
    case Opcode::i32_trunc_f64_u:
        return truncate(a64, -1.0, false, two32, false, 32);
    case Opcode::i64_trunc_f32_s:
        return truncate(a32, -two63, true, two63, true, 64);
    case Opcode::i64_trunc_f32_u:
        return truncate(a32, -1.0, false, two64, false, 64);
    case Opcode::i64_trunc_f64_s:
        return truncate(a64, -two63, true, two63, true, 64);
    case Opcode::i64_trunc_f64_u:
        return truncate(a64, -1.0, false, two64, false, 64);

    case Opcode::f32_convert_i32_s:
        return {bits_of(static_cast<float>(i32s))};
    case Opcode::f32_convert_i32_u:
        return {bits_of(static_cast<float>(i32u))};
    case Opcode::f32_convert_i64_s:
        return {bits_of(static_cast<float>(i64s))};
    case Opcode::f32_convert_i64_u:
        return {bits_of(static_cast<float>(lhs))};
    case Opcode::f32_demote_f64:
        return {bits_of(static_cast<float>(a64))};
    case Opcode::f64_convert_i32_s:
        return {bits_of(static_cast<double>(i32s))};
    case Opcode::f64_convert_i32_u:
        return {bits_of(static_cast<double>(i32u))};
    case Opcode::f64_convert_i64_s:
        return {bits_of(static_cast<double>(i64s))};
    case Opcode::f64_convert_i64_u:
        return {bits_of(static_cast<double>(lhs))};
    case Opcode::f64_promote_f32:
        return {bits_of(static_cast<double>(a32))};
    default:
        return {0, true};
    }
}

}  // namespace wana
