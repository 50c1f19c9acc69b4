#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace wana {

struct InvalidNameChar : std::invalid_argument
{
    using std::invalid_argument::invalid_argument;
};

struct NameTooLong : std::invalid_argument
{
    using std::invalid_argument::invalid_argument;
};

/// EOSIO account/action name to its 64-bit base32 packing.
uint64_t encode_name(std::string_view text);

/// Inverse of encode_name with trailing dots trimmed.
std::string decode_name(uint64_t value);

}  // namespace wana
