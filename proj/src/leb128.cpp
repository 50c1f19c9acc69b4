#include "wana/leb128.hpp"

namespace wana {

VarintResult decode_leb128(std::span<const uint8_t> bytes, bool is_signed, unsigned max_bits)
{
    if (max_bits != 32 && max_bits != 64)
        throw std::invalid_argument{"leb128 width must be 32 or 64"};
    if (bytes.empty())
        throw MalformedVarint{"empty input"};

    const std::size_t max_len = (max_bits + 6) / 7;
    uint64_t result = 0;
    unsigned shift = 0;
    for (std::size_t i = 0; i < max_len; ++i)
    {
        if (i >= bytes.size())
            throw MalformedVarint{"truncated varint"};
        const uint8_t byte = bytes[i];
        const bool last = (i + 1 == max_len);
        if (last)
        {
            if (byte & 0x80)
                throw MalformedVarint{"varint too long"};
            // bits of the final byte that do not fit into max_bits
            const unsigned used = max_bits - shift;
            if (is_signed)
            {
                // remaining bits must be a sign extension of bit (used-1)
                const uint8_t payload = byte & 0x7f;
                const uint8_t sign_mask = static_cast<uint8_t>((0x7f >> (used - 1)) << (used - 1)) & 0x7f;
                const uint8_t high = payload & sign_mask;
                if (high != 0 && high != sign_mask)
                    throw MalformedVarint{"unused bits are not a sign extension"};
            }
            else if (used < 7 && (byte >> used) != 0)
            {
                throw MalformedVarint{"unused high bits set"};
            }
        }
        result |= static_cast<uint64_t>(byte & 0x7f) << shift;
        shift += 7;
        if ((byte & 0x80) == 0)
        {
            if (is_signed && shift < 64 && (byte & 0x40))
                result |= ~uint64_t{0} << shift;
            if (max_bits == 32)
            {
                result &= 0xffffffffu;
                if (is_signed && (result & 0x80000000u))
                    result |= 0xffffffff00000000ull;
            }
            return {result, i + 1};
        }
    }
    throw MalformedVarint{"varint too long"};
}

}  // namespace wana
