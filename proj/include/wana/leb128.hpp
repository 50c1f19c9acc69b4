#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>

namespace wana {

/// Raised for any malformed LEB128 encoding.
struct MalformedVarint : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

struct VarintResult
{
    uint64_t value = 0;  ///< raw two's-complement bits (sign-extended to 64 for signed reads)
    std::size_t consumed = 0;
};

/// Decodes one LEB128 integer of at most `max_bits` (32 or 64) from the front of `bytes`.
/// Encodings longer than ceil(max_bits / 7) bytes, truncated encodings and
/// non-canonical unused high bits in the last byte are rejected.
VarintResult decode_leb128(std::span<const uint8_t> bytes, bool is_signed, unsigned max_bits);

inline int64_t as_signed(const VarintResult& r) noexcept
{
    return static_cast<int64_t>(r.value);
}

}  // namespace wana
