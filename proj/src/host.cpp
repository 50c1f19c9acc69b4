#include "wana/host.hpp"

#include <algorithm>
#include <array>
#include <fmt/format.h>

namespace wana {

std::string_view to_string(Platform p) noexcept
{
    return p == Platform::eosio ? "eosio" : "ethereum";
}

namespace {

constexpr std::array eosio_modeled = {
    "read_action_data", "action_data_size", "current_receiver", "require_recipient", "require_auth",
    "eosio_assert",     "eosio_assert_message", "eosio_assert_code", "send_inline", "send_deferred",
    "tapos_block_prefix", "tapos_block_num", "memcpy", "memmove", "memset", "eosio_exit",
};

constexpr std::array ethereum_modeled = {
    "getCallValue",  "getCallDataSize", "callDataCopy", "call",         "callDelegate", "getBlockNumber",
    "getBlockTimestamp", "getBlockHash", "storageLoad", "storageStore", "finish",       "revert",
    "useGas",
};

const SymExpr& arg(std::span<const SymExpr> args, std::size_t i)
{
    if (i >= args.size())
        throw std::runtime_error{"host call has too few arguments"};
    return args[i];
}

void require_range(Engine& engine, PathState& s, uint64_t address, uint64_t length, bool& ok)
{
    ok = s.memory.in_bounds(address, length);
    if (!ok)
        engine.trap(s, "host memory access out of bounds");
}

std::string storage_key(const PathState& s, uint64_t address)
{
    std::string key;
    for (uint64_t i = 0; i < 32; ++i)
    {
        const auto c = s.memory.cell(address + i);
        if (c.is_concrete())
            key += fmt::format("{:02x}", c.byte);
        else
            key += fmt::format("[{}#{}]", to_string(c.expr), c.slice);
    }
    return key;
}

void write_words(PathState& s, uint64_t address, const std::vector<SymExpr>& words, uint64_t count)
{
    for (uint64_t i = 0; i < count; ++i)
        s.memory.set_cell(address + i, word_buffer_cell(words, i));
}

}  // namespace

bool is_modeled_import(std::string_view module, std::string_view name)
{
    if (module == "env")
        return std::find(eosio_modeled.begin(), eosio_modeled.end(), name) != eosio_modeled.end();
    if (module == "ethereum")
        return std::find(ethereum_modeled.begin(), ethereum_modeled.end(), name) != ethereum_modeled.end();
    return false;
}

Memory::Cell word_buffer_cell(const std::vector<SymExpr>& words, uint64_t index)
{
    if (index / 8 >= words.size())
        return {};
    const auto& w = words[index / 8];
    const auto slice = static_cast<uint8_t>(index % 8);
    if (w.is_concrete() && w.origins().empty())
        return Memory::Cell{{}, static_cast<uint8_t>(w.bits() >> (8 * slice)), 0};
    return Memory::Cell{w, 0, slice};
}

ActionContext make_action_context(Engine& engine, PathState& state, uint32_t size)
{
    ActionContext ctx;
    ctx.receiver = engine.fresh(state, 64, Origin::apply_receiver);
    ctx.code = engine.fresh(state, 64, Origin::apply_code);
    ctx.action = engine.fresh(state, 64, Origin::apply_action);
    ctx.action_data_size = size;
    for (uint32_t i = 0; i < (size + 7) / 8; ++i)
        ctx.action_data.push_back(engine.fresh(state, 64, Origin::action_data));
    return ctx;
}

EthContext make_eth_context(Engine& engine, PathState& state, uint32_t call_data_size)
{
    EthContext ctx;
    ctx.call_value_low = engine.fresh(state, 64, Origin::call_data);
    ctx.call_value_high = engine.fresh(state, 64, Origin::call_data);
    ctx.call_data_size = call_data_size;
    for (uint32_t i = 0; i < (call_data_size + 7) / 8; ++i)
        ctx.call_data.push_back(engine.fresh(state, 64, Origin::call_data));
    return ctx;
}

std::optional<SymExpr> HostModels::call_import(Engine& engine, PathState& state, const Import& import,
                                               const FuncType& type, std::span<const SymExpr> args, Site site)
{
    (void)type;
    TraceEvent e;
    e.kind = EventKind::host_call;
    e.site = site;
    e.name = import.module + "." + import.name;
    e.args.assign(args.begin(), args.end());
    state.trace.push_back(std::move(e));

    if (import.module == "env" && action_)
        return eosio(engine, state, import.name, args, site);
    if (import.module == "ethereum" && eth_)
        return ethereum(engine, state, import.name, args, site);
    return std::nullopt;
}

std::optional<SymExpr> HostModels::eosio(Engine& engine, PathState& s, const std::string& name,
                                         std::span<const SymExpr> args, Site site)
{
    const auto& ctx = *action_;
    bool ok = true;

    if (name == "read_action_data")
    {
        const uint64_t ptr = engine.concretize(s, arg(args, 0));
        const uint64_t len = engine.concretize(s, arg(args, 1));
        const uint64_t n = std::min<uint64_t>(len, ctx.action_data_size);
        require_range(engine, s, ptr, n, ok);
        if (!ok)
            return std::nullopt;
        write_words(s, ptr, ctx.action_data, n);
        return SymExpr::constant(32, n);
    }
    if (name == "action_data_size")
        return SymExpr::constant(32, ctx.action_data_size);
    if (name == "current_receiver")
        return ctx.receiver;
    if (name == "require_recipient" || name == "require_auth")
        return std::nullopt;
    if (name == "eosio_assert" || name == "eosio_assert_message" || name == "eosio_assert_code")
    {
        const SymExpr& cond = arg(args, 0);
        if (cond.is_concrete())
        {
            if (cond.bits() == 0)
                engine.trap(s, name);
            return std::nullopt;
        }
        TraceEvent e;
        e.kind = EventKind::assert_fork;
        e.site = site;
        s.trace.push_back(std::move(e));
        engine.assume(s, is_nonzero(cond));
        return std::nullopt;
    }
    if (name == "send_inline" || name == "send_deferred")
    {
        TraceEvent e;
        e.kind = EventKind::send;
        e.site = site;
        e.name = name;
        e.mechanism = name == "send_inline" ? SendMechanism::inline_action : SendMechanism::deferred;
        e.args.assign(args.begin(), args.end());
        s.trace.push_back(std::move(e));
        return std::nullopt;
    }
    if (name == "tapos_block_prefix" || name == "tapos_block_num")
    {
        TraceEvent e;
        e.kind = EventKind::block_info_read;
        e.site = site;
        e.name = name;
        s.trace.push_back(std::move(e));
        return engine.fresh(s, 32, Origin::block_info);
    }
    if (name == "memcpy" || name == "memmove")
    {
        const uint64_t dst = engine.concretize(s, arg(args, 0));
        const uint64_t src = engine.concretize(s, arg(args, 1));
        const uint64_t len = engine.concretize(s, arg(args, 2));
        require_range(engine, s, dst, len, ok);
        if (ok)
            require_range(engine, s, src, len, ok);
        if (!ok)
            return std::nullopt;
        std::vector<Memory::Cell> cells;
        cells.reserve(len);
        for (uint64_t i = 0; i < len; ++i)
            cells.push_back(s.memory.cell(src + i));
        for (uint64_t i = 0; i < len; ++i)
            s.memory.set_cell(dst + i, cells[i]);
        return arg(args, 0);
    }
    if (name == "memset")
    {
        const uint64_t dst = engine.concretize(s, arg(args, 0));
        const SymExpr& value = arg(args, 1);
        const uint64_t len = engine.concretize(s, arg(args, 2));
        require_range(engine, s, dst, len, ok);
        if (!ok)
            return std::nullopt;
        Memory::Cell cell;
        if (value.is_concrete() && value.origins().empty())
            cell.byte = static_cast<uint8_t>(value.bits());
        else
            cell = Memory::Cell{value, 0, 0};
        for (uint64_t i = 0; i < len; ++i)
            s.memory.set_cell(dst + i, cell);
        return arg(args, 0);
    }
    if (name == "eosio_exit")
    {
        engine.terminate(s, PathStatus::finished);
        return std::nullopt;
    }
    return std::nullopt;
}

std::optional<SymExpr> HostModels::ethereum(Engine& engine, PathState& s, const std::string& name,
                                            std::span<const SymExpr> args, Site site)
{
    const auto& ctx = *eth_;
    bool ok = true;

    auto block_event = [&] {
        TraceEvent e;
        e.kind = EventKind::block_info_read;
        e.site = site;
        e.name = name;
        s.trace.push_back(std::move(e));
    };
    auto cached = [&](const std::string& key) {
        auto it = s.host.block_info.find(key);
        if (it == s.host.block_info.end())
            it = s.host.block_info.emplace(key, engine.fresh(s, 64, Origin::block_info)).first;
        return it->second;
    };

    if (name == "getCallValue")
    {
        const uint64_t ptr = engine.concretize(s, arg(args, 0));
        require_range(engine, s, ptr, 16, ok);
        if (!ok)
            return std::nullopt;
        write_words(s, ptr, {ctx.call_value_low, ctx.call_value_high}, 16);
        return std::nullopt;
    }
    if (name == "getCallDataSize")
        return SymExpr::constant(32, ctx.call_data_size);
    if (name == "callDataCopy")
    {
        const uint64_t dst = engine.concretize(s, arg(args, 0));
        const uint64_t offset = engine.concretize(s, arg(args, 1));
        const uint64_t len = engine.concretize(s, arg(args, 2));
        require_range(engine, s, dst, len, ok);
        if (!ok)
            return std::nullopt;
        for (uint64_t i = 0; i < len; ++i)
        {
            const uint64_t index = offset + i;
            s.memory.set_cell(dst + i,
                              index < ctx.call_data_size ? word_buffer_cell(ctx.call_data, index) : Memory::Cell{});
        }
        return std::nullopt;
    }
    if (name == "call")
    {
        TraceEvent e;
        e.kind = EventKind::send;
        e.site = site;
        e.name = name;
        e.mechanism = SendMechanism::eth_call;
        e.args.assign(args.begin(), args.end());
        s.trace.push_back(std::move(e));
        return engine.fresh(s, 32, Origin::host_fresh);
    }
    if (name == "callDelegate")
    {
        const uint64_t address = engine.concretize(s, arg(args, 1));
        const uint64_t data = engine.concretize(s, arg(args, 2));
        const uint64_t len = engine.concretize(s, arg(args, 3));
        require_range(engine, s, address, 20, ok);
        if (ok)
            require_range(engine, s, data, len, ok);
        if (!ok)
            return std::nullopt;
        TraceEvent e;
        e.kind = EventKind::delegate_call;
        e.site = site;
        e.name = name;
        e.args.assign(args.begin(), args.end());
        auto classify = [&](uint64_t base, uint64_t n) {
            for (uint64_t i = 0; i < n; ++i)
            {
                const auto c = s.memory.cell(base + i);
                if (c.is_concrete())
                    continue;
                if (!c.expr.is_concrete() || !c.expr.origins().empty())
                {
                    e.constant_argument = false;
                    e.argument_origins |= c.expr.origins();
                }
            }
        };
        classify(address, 20);
        classify(data, len);
        s.trace.push_back(std::move(e));
        return engine.fresh(s, 32, Origin::host_fresh);
    }
    if (name == "getBlockNumber" || name == "getBlockTimestamp")
    {
        block_event();
        return cached(name);
    }
    if (name == "getBlockHash")
    {
        const uint64_t ptr = engine.concretize(s, arg(args, 1));
        require_range(engine, s, ptr, 32, ok);
        if (!ok)
            return std::nullopt;
        block_event();
        std::vector<SymExpr> words;
        for (int i = 0; i < 4; ++i)
            words.push_back(cached(fmt::format("getBlockHash.{}", i)));
        write_words(s, ptr, words, 32);
        return SymExpr::constant(32, 0);
    }
    if (name == "storageLoad")
    {
        const uint64_t key_ptr = engine.concretize(s, arg(args, 0));
        const uint64_t out = engine.concretize(s, arg(args, 1));
        require_range(engine, s, key_ptr, 32, ok);
        if (ok)
            require_range(engine, s, out, 32, ok);
        if (!ok)
            return std::nullopt;
        const auto key = storage_key(s, key_ptr);
        auto it = s.host.storage.find(key);
        if (it == s.host.storage.end())
        {
            std::vector<SymExpr> words;
            for (int i = 0; i < 4; ++i)
                words.push_back(engine.fresh(s, 64, Origin::storage));
            std::vector<Memory::Cell> cells;
            for (uint64_t i = 0; i < 32; ++i)
                cells.push_back(word_buffer_cell(words, i));
            it = s.host.storage.emplace(key, std::move(cells)).first;
        }
        for (uint64_t i = 0; i < 32; ++i)
            s.memory.set_cell(out + i, it->second[i]);
        return std::nullopt;
    }
    if (name == "storageStore")
    {
        const uint64_t key_ptr = engine.concretize(s, arg(args, 0));
        const uint64_t value = engine.concretize(s, arg(args, 1));
        require_range(engine, s, key_ptr, 32, ok);
        if (ok)
            require_range(engine, s, value, 32, ok);
        if (!ok)
            return std::nullopt;
        std::vector<Memory::Cell> cells;
        for (uint64_t i = 0; i < 32; ++i)
            cells.push_back(s.memory.cell(value + i));
        s.host.storage[storage_key(s, key_ptr)] = std::move(cells);
        return std::nullopt;
    }
    if (name == "finish")
    {
        engine.terminate(s, PathStatus::finished);
        return std::nullopt;
    }
    if (name == "revert")
    {
        engine.trap(s, "revert");
        return std::nullopt;
    }
    return std::nullopt;
}

}  // namespace wana
