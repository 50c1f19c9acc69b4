#include "wana/loader.hpp"

namespace wana {
namespace {

void put_u(std::vector<uint8_t>& out, uint64_t v)
{
    do
    {
        uint8_t b = v & 0x7f;
        v >>= 7;
        if (v != 0)
            b |= 0x80;
        out.push_back(b);
    } while (v != 0);
}

void put_s(std::vector<uint8_t>& out, int64_t v)
{
    while (true)
    {
        const uint8_t b = v & 0x7f;
        v >>= 7;
        const bool done = (v == 0 && !(b & 0x40)) || (v == -1 && (b & 0x40));
        out.push_back(done ? b : (b | 0x80));
        if (done)
            return;
    }
}

void put_fixed(std::vector<uint8_t>& out, uint64_t v, unsigned n)
{
    for (unsigned i = 0; i < n; ++i)
        out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

}  // namespace

std::vector<uint8_t> encode_function_body(const Function& function)
{
    std::vector<uint8_t> out;
    put_u(out, function.locals.size());
    for (const auto& l : function.locals)
    {
        put_u(out, l.count);
        out.push_back(static_cast<uint8_t>(l.type));
    }

    for (const auto& ins : function.body)
    {
        const auto byte = static_cast<uint8_t>(ins.op);
        out.push_back(byte);
        switch (opcode_info(byte)->immediate)
        {
        case Immediate::none:
            break;
        case Immediate::block_type:
            out.push_back(ins.block_type.result ? static_cast<uint8_t>(*ins.block_type.result) : 0x40);
            break;
        case Immediate::label:
        case Immediate::function:
        case Immediate::local:
        case Immediate::global:
            put_u(out, ins.index);
            break;
        case Immediate::br_table: {
            const auto& t = function.branch_tables.at(ins.index);
            put_u(out, t.labels.size());
            for (auto l : t.labels)
                put_u(out, l);
            put_u(out, t.default_label);
            break;
        }
        case Immediate::call_indirect:
            put_u(out, ins.index);
            out.push_back(0x00);
            break;
        case Immediate::memarg:
            put_u(out, ins.align);
            put_u(out, ins.offset);
            break;
        case Immediate::memory_index:
            out.push_back(0x00);
            break;
        case Immediate::i32:
            put_s(out, static_cast<int32_t>(static_cast<uint32_t>(ins.literal)));
            break;
        case Immediate::i64:
            put_s(out, static_cast<int64_t>(ins.literal));
            break;
        case Immediate::f32:
            put_fixed(out, ins.literal, 4);
            break;
        case Immediate::f64:
            put_fixed(out, ins.literal, 8);
            break;
        }
    }
    return out;
}

}  // namespace wana
