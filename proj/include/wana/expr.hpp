#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace wana {

/// Where a symbolic value came from. Tags propagate as a union through every operator.
enum class Origin : uint8_t
{
    apply_receiver,
    apply_code,
    apply_action,
    action_data,
    call_data,
    block_info,
    host_fresh,
    storage,
    other,
    transfer_to,
};

inline constexpr unsigned origin_count = 10;

std::string_view to_string(Origin o) noexcept;

class OriginSet
{
public:
    constexpr OriginSet() = default;
    constexpr OriginSet(Origin o) : bits_{static_cast<uint16_t>(1u << static_cast<unsigned>(o))} {}

    constexpr bool contains(Origin o) const noexcept { return bits_ & OriginSet{o}.bits_; }
    constexpr bool empty() const noexcept { return bits_ == 0; }
    constexpr uint16_t raw() const noexcept { return bits_; }

    constexpr OriginSet operator|(OriginSet other) const noexcept
    {
        OriginSet r;
        r.bits_ = bits_ | other.bits_;
        return r;
    }
    constexpr OriginSet operator&(OriginSet other) const noexcept
    {
        OriginSet r;
        r.bits_ = bits_ & other.bits_;
        return r;
    }
    constexpr OriginSet& operator|=(OriginSet other) noexcept
    {
        bits_ |= other.bits_;
        return *this;
    }
    constexpr bool operator==(const OriginSet&) const = default;

    std::vector<Origin> members() const;

private:
    uint16_t bits_ = 0;
};

enum class UnaryOp : uint8_t
{
    bit_not,
    clz,
    ctz,
    popcnt,
};

enum class BinaryOp : uint8_t
{
    add,
    sub,
    mul,
    div_s,
    div_u,
    rem_s,
    rem_u,
    bit_and,
    bit_or,
    bit_xor,
    shl,
    shr_s,
    shr_u,
    rotl,
    rotr,
};

enum class Relation : uint8_t
{
    eq,
    ne,
    lt_s,
    lt_u,
    gt_s,
    gt_u,
    le_s,
    le_u,
    ge_s,
    ge_u,
};

std::string_view to_string(UnaryOp op) noexcept;
std::string_view to_string(BinaryOp op) noexcept;
std::string_view to_string(Relation r) noexcept;
Relation negate(Relation r) noexcept;

struct WidthMismatch : std::logic_error
{
    using std::logic_error::logic_error;
};

struct ExprNode;
struct BoolNode;

enum class ExprKind : uint8_t
{
    concrete,
    variable,
    unary,
    binary,
    extract,
    concat,
    ite,
    zero_extend,
    sign_extend,
};

enum class BoolKind : uint8_t
{
    true_,
    false_,
    compare,
    not_,
    and_,
    or_,
};

/// Width-tagged bit-vector value: a concrete bit pattern or an immutable expression DAG.
class SymExpr
{
public:
    SymExpr() = default;

    static SymExpr constant(unsigned width, uint64_t bits, OriginSet origins = {});
    static SymExpr variable(unsigned width, uint32_t id, Origin origin);

    bool valid() const noexcept { return node_ != nullptr; }
    unsigned width() const noexcept;
    ExprKind kind() const noexcept;
    bool is_concrete() const noexcept { return kind() == ExprKind::concrete; }
    /// Concrete bits (only meaningful when is_concrete()).
    uint64_t bits() const noexcept;
    int64_t signed_bits() const noexcept;
    OriginSet origins() const noexcept;
    const ExprNode& node() const noexcept { return *node_; }
    const ExprNode* get() const noexcept { return node_.get(); }

    /// Same node, different tag set (used for fixed-value policies that keep a tag).
    SymExpr with_origins(OriginSet origins) const;

private:
    explicit SymExpr(std::shared_ptr<const ExprNode> n) : node_{std::move(n)} {}
    friend SymExpr make_expr(ExprNode&&);

    std::shared_ptr<const ExprNode> node_;
};

class BoolExpr
{
public:
    BoolExpr() = default;

    static BoolExpr literal(bool value);

    bool valid() const noexcept { return node_ != nullptr; }
    BoolKind kind() const noexcept;
    bool is_true() const noexcept { return kind() == BoolKind::true_; }
    bool is_false() const noexcept { return kind() == BoolKind::false_; }
    bool is_constant() const noexcept { return is_true() || is_false(); }
    OriginSet origins() const noexcept;
    const BoolNode& node() const noexcept { return *node_; }
    const BoolNode* get() const noexcept { return node_.get(); }

private:
    explicit BoolExpr(std::shared_ptr<const BoolNode> n) : node_{std::move(n)} {}
    friend BoolExpr make_bool(BoolNode&&);

    std::shared_ptr<const BoolNode> node_;
};

struct ExprNode
{
    ExprKind kind = ExprKind::concrete;
    uint8_t width = 0;
    OriginSet origins;
    uint64_t value = 0;   ///< concrete bits
    uint32_t var_id = 0;  ///< variable
    uint8_t op = 0;       ///< UnaryOp / BinaryOp
    uint8_t hi = 0, lo = 0;
    SymExpr a, b;  ///< operands (ite: then / else)
    BoolExpr cond;
};

struct BoolNode
{
    BoolKind kind = BoolKind::true_;
    Relation relation = Relation::eq;
    OriginSet origins;
    SymExpr lhs, rhs;
    BoolExpr x, y;
};

uint64_t width_mask(unsigned width) noexcept;
int64_t sign_extend_bits(uint64_t bits, unsigned width) noexcept;

/// Exact concrete semantics used for folding and for model evaluation.
/// Division and remainder by zero follow SMT-LIB bit-vector semantics
/// (the engine traps before such a value is ever produced by Wasm code).
uint64_t fold_unary(UnaryOp op, unsigned width, uint64_t a) noexcept;
uint64_t fold_binary(BinaryOp op, unsigned width, uint64_t a, uint64_t b) noexcept;
bool fold_relation(Relation r, unsigned width, uint64_t a, uint64_t b) noexcept;

SymExpr eval_unary(UnaryOp op, const SymExpr& a);
SymExpr eval_binary(BinaryOp op, const SymExpr& a, const SymExpr& b);
SymExpr extract(unsigned hi, unsigned lo, const SymExpr& a);
SymExpr concat(const SymExpr& high, const SymExpr& low);
SymExpr zero_extend(unsigned width, const SymExpr& a);
SymExpr sign_extend(unsigned width, const SymExpr& a);
SymExpr ite(const BoolExpr& cond, const SymExpr& then_value, const SymExpr& else_value);

BoolExpr compare(Relation r, const SymExpr& a, const SymExpr& b);
BoolExpr logical_not(const BoolExpr& x);
BoolExpr logical_and(const BoolExpr& x, const BoolExpr& y);
BoolExpr logical_or(const BoolExpr& x, const BoolExpr& y);

/// Wasm boolean result: 1 when cond holds, else 0, as an i32.
SymExpr bool_to_i32(const BoolExpr& cond);
/// The test `value != 0` used by br_if / if / select / eqz.
BoolExpr is_nonzero(const SymExpr& value);

/// Variable assignment; variables missing from the map evaluate to zero.
using Model = std::map<uint32_t, uint64_t>;

uint64_t evaluate(const SymExpr& e, const Model& model);
bool evaluate(const BoolExpr& e, const Model& model);

/// Variable ids mapped to their widths.
using VariableSet = std::map<uint32_t, unsigned>;
void collect_variables(const SymExpr& e, VariableSet& out);
void collect_variables(const BoolExpr& e, VariableSet& out);

/// Deterministic human-readable rendering (also used as a structural key).
std::string to_string(const SymExpr& e);
std::string to_string(const BoolExpr& e);

}  // namespace wana
