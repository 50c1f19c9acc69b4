#pragma once

#include "wana/engine.hpp"

#include <optional>
#include <string>
#include <vector>

namespace wana {

enum class Platform : uint8_t
{
    eosio,
    ethereum,
};

std::string_view to_string(Platform p) noexcept;

/// EOSIO apply context. Action data is held as 64-bit words, little-endian bytes.
struct ActionContext
{
    SymExpr receiver;
    SymExpr code;
    SymExpr action;
    std::vector<SymExpr> action_data;
    uint32_t action_data_size = 128;
};

struct EthContext
{
    SymExpr call_value_low;   ///< bytes 0..7 of the 128-bit call value
    SymExpr call_value_high;  ///< bytes 8..15
    std::vector<SymExpr> call_data;
    uint32_t call_data_size = 68;
};

/// Builds a symbolic apply context: three 64-bit parameters and `size` bytes of action data.
ActionContext make_action_context(Engine& engine, PathState& state, uint32_t size = 128);
EthContext make_eth_context(Engine& engine, PathState& state, uint32_t call_data_size = 68);

/// Models of `env.*` and `ethereum.*` intrinsics. Anything not modeled falls back to a
/// seeded concrete result.
class HostModels final : public HostInterface
{
public:
    HostModels() = default;
    explicit HostModels(ActionContext ctx) : action_{std::move(ctx)} {}
    explicit HostModels(EthContext ctx) : eth_{std::move(ctx)} {}

    std::optional<SymExpr> call_import(Engine& engine, PathState& state, const Import& import, const FuncType& type,
                                       std::span<const SymExpr> args, Site site) override;

    const std::optional<ActionContext>& action() const noexcept { return action_; }
    const std::optional<EthContext>& eth() const noexcept { return eth_; }

private:
    std::optional<SymExpr> eosio(Engine& engine, PathState& state, const std::string& name,
                                 std::span<const SymExpr> args, Site site);
    std::optional<SymExpr> ethereum(Engine& engine, PathState& state, const std::string& name,
                                    std::span<const SymExpr> args, Site site);

    std::optional<ActionContext> action_;
    std::optional<EthContext> eth_;
};

/// Import names with a dedicated model.
bool is_modeled_import(std::string_view module, std::string_view name);

/// Returns the byte at `index` of a little-endian buffer of 64-bit words as a memory cell.
Memory::Cell word_buffer_cell(const std::vector<SymExpr>& words, uint64_t index);

}  // namespace wana
