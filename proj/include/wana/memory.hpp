#pragma once

#include "wana/expr.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace wana {

/// Linear memory as a list of cells, each either a concrete byte or a
/// reference to one byte of a stored expression. Storage is split into
/// copy-on-write chunks so forked paths share untouched regions.
class Memory
{
public:
    static constexpr uint32_t page_size = 65536;
    static constexpr uint32_t chunk_size = 4096;

    /// One addressable byte. `expr` invalid means a plain concrete byte.
    struct Cell
    {
        SymExpr expr;
        uint8_t byte = 0;   ///< concrete value when expr is invalid
        uint8_t slice = 0;  ///< byte index within expr (little-endian)

        bool is_concrete() const noexcept { return !expr.valid(); }
    };

    Memory() = default;
    Memory(uint32_t pages, std::optional<uint32_t> max_pages);

    uint32_t pages() const noexcept { return pages_; }
    std::optional<uint32_t> max_pages() const noexcept { return max_pages_; }
    uint64_t size() const noexcept { return uint64_t{pages_} * page_size; }
    bool in_bounds(uint64_t address, uint64_t length) const noexcept;

    /// Grows by `delta` pages unless that exceeds the declared maximum or `hard_limit`.
    /// Returns the previous page count, or nothing on failure.
    std::optional<uint32_t> grow(uint32_t delta, uint32_t hard_limit);

    Cell cell(uint64_t address) const;
    void set_cell(uint64_t address, Cell cell);

    void write_bytes(uint64_t address, std::span<const uint8_t> bytes);

    /// Stores the low `nbytes` bytes of `value` little-endian at `address`.
    void store(uint64_t address, const SymExpr& value, unsigned nbytes);

    /// Loads `nbytes` bytes little-endian as a value of width 8 * nbytes.
    SymExpr load(uint64_t address, unsigned nbytes) const;

    /// Bytes of a fully concrete range; empty when any cell is symbolic.
    std::optional<std::vector<uint8_t>> concrete_bytes(uint64_t address, uint64_t length) const;

private:
    struct Slice
    {
        SymExpr expr;
        uint8_t index = 0;
    };

    struct Chunk
    {
        std::array<uint8_t, chunk_size> bytes{};
        std::map<uint16_t, Slice> symbolic;
    };

    Chunk& writable_chunk(uint64_t address);

    uint32_t pages_ = 0;
    std::optional<uint32_t> max_pages_;
    std::vector<std::shared_ptr<Chunk>> chunks_;
};

}  // namespace wana
