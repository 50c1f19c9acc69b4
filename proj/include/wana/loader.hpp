#pragma once

#include "wana/module.hpp"

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace wana {

enum class DecodeErrorKind
{
    bad_magic,
    bad_version,
    malformed_section,
    malformed_varint,
};

std::string_view to_string(DecodeErrorKind kind) noexcept;

struct DecodeError : std::runtime_error
{
    DecodeError(DecodeErrorKind k, const std::string& what, std::size_t offset)
      : std::runtime_error{what + " at byte " + std::to_string(offset)}, kind{k}, offset{offset}
    {}

    DecodeErrorKind kind;
    std::size_t offset;
};

/// Decodes a complete Wasm 1.0 binary. Throws DecodeError.
Module decode_module(std::span<const uint8_t> bytes);

std::vector<uint8_t> read_file(const std::string& path);

/// Debug facility: re-encodes a function body (locals + instructions) in the
/// binary code-entry format, without the leading size prefix.
std::vector<uint8_t> encode_function_body(const Function& function);

/// Decodes a single code entry payload produced by encode_function_body.
Function decode_function_body(std::span<const uint8_t> bytes, uint32_t type_index);

}  // namespace wana
