#include "wana/memory.hpp"

#include <stdexcept>

namespace wana {

Memory::Memory(uint32_t pages, std::optional<uint32_t> max_pages) : pages_{pages}, max_pages_{max_pages}
{
    chunks_.resize(size() / chunk_size);
}

bool Memory::in_bounds(uint64_t address, uint64_t length) const noexcept
{
    return address <= size() && length <= size() - address;
}

std::optional<uint32_t> Memory::grow(uint32_t delta, uint32_t hard_limit)
{
    const uint64_t wanted = uint64_t{pages_} + delta;
    const uint64_t limit = std::min<uint64_t>(max_pages_.value_or(65536), hard_limit);
    if (wanted > limit)
        return std::nullopt;
    const auto old = pages_;
    pages_ = static_cast<uint32_t>(wanted);
    chunks_.resize(size() / chunk_size);
    return old;
}

Memory::Cell Memory::cell(uint64_t address) const
{
    if (address >= size())
        throw std::out_of_range{"memory access out of bounds"};
    const auto& chunk = chunks_[address / chunk_size];
    if (!chunk)
        return {};
    const auto local = static_cast<uint16_t>(address % chunk_size);
    if (auto it = chunk->symbolic.find(local); it != chunk->symbolic.end())
        return {it->second.expr, 0, it->second.index};
    return {{}, chunk->bytes[local], 0};
}

Memory::Chunk& Memory::writable_chunk(uint64_t address)
{
    auto& slot = chunks_[address / chunk_size];
    if (!slot)
        slot = std::make_shared<Chunk>();
    else if (slot.use_count() > 1)
        slot = std::make_shared<Chunk>(*slot);
    return *slot;
}

void Memory::set_cell(uint64_t address, Cell cell)
{
    if (address >= size())
        throw std::out_of_range{"memory access out of bounds"};
    auto& chunk = writable_chunk(address);
    const auto local = static_cast<uint16_t>(address % chunk_size);
    if (cell.is_concrete())
    {
        chunk.bytes[local] = cell.byte;
        chunk.symbolic.erase(local);
    }
    else
    {
        chunk.bytes[local] = 0;
        chunk.symbolic[local] = Slice{std::move(cell.expr), cell.slice};
    }
}

void Memory::write_bytes(uint64_t address, std::span<const uint8_t> bytes)
{
    if (!in_bounds(address, bytes.size()))
        throw std::out_of_range{"memory write out of bounds"};
    for (std::size_t i = 0; i < bytes.size(); ++i)
        set_cell(address + i, Cell{{}, bytes[i], 0});
}

void Memory::store(uint64_t address, const SymExpr& value, unsigned nbytes)
{
    if (!in_bounds(address, nbytes))
        throw std::out_of_range{"memory store out of bounds"};
    if (nbytes * 8 > value.width())
        throw WidthMismatch{"store wider than value"};
    // Tagged constants keep their expression so origin tags survive a round trip.
    const bool plain = value.is_concrete() && value.origins().empty();
    for (unsigned i = 0; i < nbytes; ++i)
    {
        if (plain)
            set_cell(address + i, Cell{{}, static_cast<uint8_t>(value.bits() >> (8 * i)), 0});
        else
            set_cell(address + i, Cell{value, 0, static_cast<uint8_t>(i)});
    }
}

SymExpr Memory::load(uint64_t address, unsigned nbytes) const
{
    if (!in_bounds(address, nbytes))
        throw std::out_of_range{"memory load out of bounds"};

    std::vector<Cell> cells;
    cells.reserve(nbytes);
    bool all_plain = true;
    for (unsigned i = 0; i < nbytes; ++i)
    {
        cells.push_back(cell(address + i));
        all_plain = all_plain && cells.back().is_concrete();
    }
    if (all_plain)
    {
        uint64_t v = 0;
        for (unsigned i = 0; i < nbytes; ++i)
            v |= uint64_t{cells[i].byte} << (8 * i);
        return SymExpr::constant(nbytes * 8, v);
    }

    // Group runs of bytes that are consecutive slices of one expression (or plain bytes),
    // then concatenate the runs from the highest address down.
    std::vector<SymExpr> pieces;  // low address first
    unsigned i = 0;
    while (i < nbytes)
    {
        unsigned j = i + 1;
        if (cells[i].is_concrete())
        {
            while (j < nbytes && cells[j].is_concrete())
                ++j;
            uint64_t v = 0;
            for (unsigned k = i; k < j; ++k)
                v |= uint64_t{cells[k].byte} << (8 * (k - i));
            pieces.push_back(SymExpr::constant((j - i) * 8, v));
        }
        else
        {
            while (j < nbytes && !cells[j].is_concrete() && cells[j].expr.get() == cells[i].expr.get() &&
                   cells[j].slice == cells[i].slice + (j - i))
                ++j;
            const unsigned lo = cells[i].slice * 8u;
            const unsigned hi = lo + (j - i) * 8u - 1;
            pieces.push_back(extract(hi, lo, cells[i].expr));
        }
        i = j;
    }
    SymExpr result = pieces.back();
    for (auto it = pieces.rbegin() + 1; it != pieces.rend(); ++it)
        result = concat(result, *it);
    return result;
}

std::optional<std::vector<uint8_t>> Memory::concrete_bytes(uint64_t address, uint64_t length) const
{
    if (!in_bounds(address, length))
        return std::nullopt;
    std::vector<uint8_t> out;
    out.reserve(length);
    for (uint64_t i = 0; i < length; ++i)
    {
        const auto c = cell(address + i);
        if (!c.is_concrete())
        {
            if (c.expr.is_concrete())
            {
                out.push_back(static_cast<uint8_t>(c.expr.bits() >> (8 * c.slice)));
                continue;
            }
            return std::nullopt;
        }
        out.push_back(c.byte);
    }
    return out;
}

}  // namespace wana
