#include "wana/names.hpp"

#include <fmt/format.h>

namespace wana {

namespace {

constexpr std::string_view alphabet = ".12345abcdefghijklmnopqrstuvwxyz";

uint64_t symbol_value(char c)
{
    if (c == '.')
        return 0;
    if (c >= '1' && c <= '5')
        return static_cast<uint64_t>(c - '1' + 1);
    if (c >= 'a' && c <= 'z')
        return static_cast<uint64_t>(c - 'a' + 6);
    throw InvalidNameChar{fmt::format("invalid character '{}' in name", c)};
}

}  // namespace

uint64_t encode_name(std::string_view text)
{
    if (text.size() > 13)
        throw NameTooLong{fmt::format("name '{}' longer than 13 characters", text)};
    uint64_t value = 0;
    for (std::size_t i = 0; i < text.size(); ++i)
    {
        const uint64_t v = symbol_value(text[i]);
        if (i < 12)
        {
            value |= v << (64 - 5 * (i + 1));
        }
        else
        {
            if (v > 0x0F)
                throw InvalidNameChar{fmt::format("character '{}' not allowed in 13th position", text[i])};
            value |= v;
        }
    }
    return value;
}

std::string decode_name(uint64_t value)
{
    std::string out(13, '.');
    uint64_t rest = value;
    for (int i = 0; i < 13; ++i)
    {
        const uint64_t mask = i == 0 ? 0x0F : 0x1F;
        out[12 - i] = alphabet[rest & mask];
        rest >>= i == 0 ? 4 : 5;
    }
    while (!out.empty() && out.back() == '.')
        out.pop_back();
    return out;
}

}  // namespace wana
