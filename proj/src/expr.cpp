#include "wana/expr.hpp"

#include <bit>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace wana {

std::string_view to_string(Origin o) noexcept
{
    switch (o)
    {
    case Origin::apply_receiver:
        return "apply_receiver";
    case Origin::apply_code:
        return "apply_code";
    case Origin::apply_action:
        return "apply_action";
    case Origin::action_data:
        return "action_data";
    case Origin::call_data:
        return "call_data";
    case Origin::block_info:
        return "block_info";
    case Origin::host_fresh:
        return "host_fresh";
    case Origin::storage:
        return "storage";
    case Origin::other:
        return "other";
    case Origin::transfer_to:
        return "transfer_to";
    }
    return "?";
}

std::vector<Origin> OriginSet::members() const
{
    std::vector<Origin> out;
    for (unsigned i = 0; i < origin_count; ++i)
        if (bits_ & (1u << i))
            out.push_back(static_cast<Origin>(i));
    return out;
}

std::string_view to_string(UnaryOp op) noexcept
{
    switch (op)
    {
    case UnaryOp::bit_not:
        return "not";
    case UnaryOp::clz:
        return "clz";
    case UnaryOp::ctz:
        return "ctz";
    case UnaryOp::popcnt:
        return "popcnt";
    }
    return "?";
}

std::string_view to_string(BinaryOp op) noexcept
{
    static constexpr std::string_view names[] = {"add", "sub", "mul", "div_s", "div_u", "rem_s", "rem_u", "and",
                                                 "or", "xor", "shl", "shr_s", "shr_u", "rotl", "rotr"};
    return names[static_cast<unsigned>(op)];
}

std::string_view to_string(Relation r) noexcept
{
    static constexpr std::string_view names[] = {"eq", "ne", "lt_s", "lt_u", "gt_s", "gt_u", "le_s", "le_u", "ge_s",
                                                 "ge_u"};
    return names[static_cast<unsigned>(r)];
}

Relation negate(Relation r) noexcept
{
    switch (r)
    {
    case Relation::eq:
        return Relation::ne;
    case Relation::ne:
        return Relation::eq;
    case Relation::lt_s:
        return Relation::ge_s;
    case Relation::lt_u:
        return Relation::ge_u;
    case Relation::gt_s:
        return Relation::le_s;
    case Relation::gt_u:
        return Relation::le_u;
    case Relation::le_s:
        return Relation::gt_s;
    case Relation::le_u:
        return Relation::gt_u;
    case Relation::ge_s:
        return Relation::lt_s;
    case Relation::ge_u:
        return Relation::lt_u;
    }
    return r;
}

uint64_t width_mask(unsigned width) noexcept
{
    return width >= 64 ? ~uint64_t{0} : ((uint64_t{1} << width) - 1);
}

int64_t sign_extend_bits(uint64_t bits, unsigned width) noexcept
{
    if (width >= 64)
        return static_cast<int64_t>(bits);
    const uint64_t sign = uint64_t{1} << (width - 1);
    bits &= width_mask(width);
    return static_cast<int64_t>((bits ^ sign) - sign);
}

SymExpr make_expr(ExprNode&& n)
{
    return SymExpr{std::make_shared<const ExprNode>(std::move(n))};
}

BoolExpr make_bool(BoolNode&& n)
{
    return BoolExpr{std::make_shared<const BoolNode>(std::move(n))};
}

namespace {

void check_width(unsigned width)
{
    if (width == 0 || width > 64)
        throw WidthMismatch{"unsupported bit-vector width " + std::to_string(width)};
}

}  // namespace

SymExpr SymExpr::constant(unsigned width, uint64_t bits, OriginSet origins)
{
    check_width(width);
    ExprNode n;
    n.kind = ExprKind::concrete;
    n.width = static_cast<uint8_t>(width);
    n.value = bits & width_mask(width);
    n.origins = origins;
    return make_expr(std::move(n));
}

SymExpr SymExpr::variable(unsigned width, uint32_t id, Origin origin)
{
    check_width(width);
    ExprNode n;
    n.kind = ExprKind::variable;
    n.width = static_cast<uint8_t>(width);
    n.var_id = id;
    n.origins = origin;
    return make_expr(std::move(n));
}

unsigned SymExpr::width() const noexcept
{
    return node_->width;
}

ExprKind SymExpr::kind() const noexcept
{
    return node_->kind;
}

uint64_t SymExpr::bits() const noexcept
{
    return node_->value;
}

int64_t SymExpr::signed_bits() const noexcept
{
    return sign_extend_bits(node_->value, node_->width);
}

OriginSet SymExpr::origins() const noexcept
{
    return node_->origins;
}

SymExpr SymExpr::with_origins(OriginSet origins) const
{
    ExprNode copy = *node_;
    copy.origins = origins;
    return make_expr(std::move(copy));
}

BoolExpr BoolExpr::literal(bool value)
{
    static const BoolExpr t = make_bool(BoolNode{BoolKind::true_, Relation::eq, {}, {}, {}, {}, {}});
    static const BoolExpr f = make_bool(BoolNode{BoolKind::false_, Relation::eq, {}, {}, {}, {}, {}});
    return value ? t : f;
}

BoolKind BoolExpr::kind() const noexcept
{
    return node_->kind;
}

OriginSet BoolExpr::origins() const noexcept
{
    return node_->origins;
}

uint64_t fold_unary(UnaryOp op, unsigned width, uint64_t a) noexcept
{
    const auto mask = width_mask(width);
    a &= mask;
    switch (op)
    {
    case UnaryOp::bit_not:
        return ~a & mask;
    case UnaryOp::clz: {
        if (a == 0)
            return width;
        return static_cast<uint64_t>(std::countl_zero(a) - (64 - static_cast<int>(width)));
    }
    case UnaryOp::ctz:
        return a == 0 ? width : static_cast<uint64_t>(std::countr_zero(a));
    case UnaryOp::popcnt:
        return static_cast<uint64_t>(std::popcount(a));
    }
    return 0;
}

uint64_t fold_binary(BinaryOp op, unsigned width, uint64_t a, uint64_t b) noexcept
{
    const auto mask = width_mask(width);
    a &= mask;
    b &= mask;
    const auto sa = sign_extend_bits(a, width);
    const uint64_t sign_bit = uint64_t{1} << (width - 1);
    switch (op)
    {
    case BinaryOp::add:
        return (a + b) & mask;
    case BinaryOp::sub:
        return (a - b) & mask;
    case BinaryOp::mul:
        return (a * b) & mask;
    case BinaryOp::div_u:
        return b == 0 ? mask : a / b;
    case BinaryOp::rem_u:
        return b == 0 ? a : a % b;
    case BinaryOp::div_s: {
        if (b == 0)
            return (a & sign_bit) ? 1 : mask;
        // magnitudes as unsigned to avoid overflow on the minimum value
        const uint64_t ma = (a & sign_bit) ? ((0 - a) & mask) : a;
        const uint64_t mb = (b & sign_bit) ? ((0 - b) & mask) : b;
        const uint64_t q = ma / mb;
        const bool negative = ((a ^ b) & sign_bit) != 0;
        return (negative ? (0 - q) : q) & mask;
    }
    case BinaryOp::rem_s: {
        if (b == 0)
            return a;
        const uint64_t ma = (a & sign_bit) ? ((0 - a) & mask) : a;
        const uint64_t mb = (b & sign_bit) ? ((0 - b) & mask) : b;
        const uint64_t r = ma % mb;
        return ((a & sign_bit) ? (0 - r) : r) & mask;
    }
    case BinaryOp::bit_and:
        return a & b;
    case BinaryOp::bit_or:
        return a | b;
    case BinaryOp::bit_xor:
        return a ^ b;
    case BinaryOp::shl:
        return (a << (b % width)) & mask;
    case BinaryOp::shr_u:
        return a >> (b % width);
    case BinaryOp::shr_s:
        return static_cast<uint64_t>(sa >> (b % width)) & mask;
    case BinaryOp::rotl: {
        const auto k = b % width;
        return k == 0 ? a : (((a << k) | (a >> (width - k))) & mask);
    }
    case BinaryOp::rotr: {
        const auto k = b % width;
        return k == 0 ? a : (((a >> k) | (a << (width - k))) & mask);
    }
    }
    return 0;
}

bool fold_relation(Relation r, unsigned width, uint64_t a, uint64_t b) noexcept
{
    const auto mask = width_mask(width);
    a &= mask;
    b &= mask;
    const auto sa = sign_extend_bits(a, width);
    const auto sb = sign_extend_bits(b, width);
    switch (r)
    {
    case Relation::eq:
        return a == b;
    case Relation::ne:
        return a != b;
    case Relation::lt_s:
        return sa < sb;
    case Relation::lt_u:
        return a < b;
    case Relation::gt_s:
        return sa > sb;
    case Relation::gt_u:
        return a > b;
    case Relation::le_s:
        return sa <= sb;
    case Relation::le_u:
        return a <= b;
    case Relation::ge_s:
        return sa >= sb;
    case Relation::ge_u:
        return a >= b;
    }
    return false;
}

SymExpr eval_unary(UnaryOp op, const SymExpr& a)
{
    if (a.is_concrete())
        return SymExpr::constant(a.width(), fold_unary(op, a.width(), a.bits()), a.origins());
    // double negation
    if (op == UnaryOp::bit_not && a.kind() == ExprKind::unary &&
        static_cast<UnaryOp>(a.node().op) == UnaryOp::bit_not)
        return a.node().a;
    ExprNode n;
    n.kind = ExprKind::unary;
    n.width = static_cast<uint8_t>(a.width());
    n.op = static_cast<uint8_t>(op);
    n.origins = a.origins();
    n.a = a;
    return make_expr(std::move(n));
}

SymExpr eval_binary(BinaryOp op, const SymExpr& a, const SymExpr& b)
{
    if (a.width() != b.width())
        throw WidthMismatch{"operands of " + std::string{to_string(op)} + " have widths " + std::to_string(a.width()) +
                            " and " + std::to_string(b.width())};
    const auto origins = a.origins() | b.origins();
    if (a.is_concrete() && b.is_concrete())
        return SymExpr::constant(a.width(), fold_binary(op, a.width(), a.bits(), b.bits()), origins);
    ExprNode n;
    n.kind = ExprKind::binary;
    n.width = static_cast<uint8_t>(a.width());
    n.op = static_cast<uint8_t>(op);
    n.origins = origins;
    n.a = a;
    n.b = b;
    return make_expr(std::move(n));
}

SymExpr extract(unsigned hi, unsigned lo, const SymExpr& a)
{
    if (hi < lo || hi >= a.width())
        throw WidthMismatch{"extract [" + std::to_string(hi) + ":" + std::to_string(lo) + "] of width " +
                            std::to_string(a.width())};
    const unsigned width = hi - lo + 1;
    if (width == a.width())
        return a;
    if (a.is_concrete())
        return SymExpr::constant(width, a.bits() >> lo, a.origins());
    ExprNode n;
    n.kind = ExprKind::extract;
    n.width = static_cast<uint8_t>(width);
    n.hi = static_cast<uint8_t>(hi);
    n.lo = static_cast<uint8_t>(lo);
    n.origins = a.origins();
    n.a = a;
    return make_expr(std::move(n));
}

SymExpr concat(const SymExpr& high, const SymExpr& low)
{
    const unsigned width = high.width() + low.width();
    if (width > 64)
        throw WidthMismatch{"concat wider than 64 bits"};
    const auto origins = high.origins() | low.origins();
    if (high.is_concrete() && low.is_concrete())
        return SymExpr::constant(width, (high.bits() << low.width()) | low.bits(), origins);
    ExprNode n;
    n.kind = ExprKind::concat;
    n.width = static_cast<uint8_t>(width);
    n.origins = origins;
    n.a = high;
    n.b = low;
    return make_expr(std::move(n));
}

namespace {

SymExpr extend(ExprKind kind, unsigned width, const SymExpr& a)
{
    if (width < a.width() || width > 64)
        throw WidthMismatch{"cannot extend width " + std::to_string(a.width()) + " to " + std::to_string(width)};
    if (width == a.width())
        return a;
    if (a.is_concrete())
    {
        const uint64_t v = kind == ExprKind::zero_extend ? a.bits()
                                                         : static_cast<uint64_t>(sign_extend_bits(a.bits(), a.width()));
        return SymExpr::constant(width, v, a.origins());
    }
    ExprNode n;
    n.kind = kind;
    n.width = static_cast<uint8_t>(width);
    n.origins = a.origins();
    n.a = a;
    return make_expr(std::move(n));
}

}  // namespace

SymExpr zero_extend(unsigned width, const SymExpr& a)
{
    return extend(ExprKind::zero_extend, width, a);
}

SymExpr sign_extend(unsigned width, const SymExpr& a)
{
    return extend(ExprKind::sign_extend, width, a);
}

SymExpr ite(const BoolExpr& cond, const SymExpr& then_value, const SymExpr& else_value)
{
    if (then_value.width() != else_value.width())
        throw WidthMismatch{"ite branches differ in width"};
    if (cond.is_true())
        return then_value;
    if (cond.is_false())
        return else_value;
    ExprNode n;
    n.kind = ExprKind::ite;
    n.width = static_cast<uint8_t>(then_value.width());
    n.origins = cond.origins() | then_value.origins() | else_value.origins();
    n.a = then_value;
    n.b = else_value;
    n.cond = cond;
    return make_expr(std::move(n));
}

BoolExpr compare(Relation r, const SymExpr& a, const SymExpr& b)
{
    if (a.width() != b.width())
        throw WidthMismatch{"compare operands have widths " + std::to_string(a.width()) + " and " +
                            std::to_string(b.width())};
    if (a.is_concrete() && b.is_concrete())
        return BoolExpr::literal(fold_relation(r, a.width(), a.bits(), b.bits()));
    BoolNode n;
    n.kind = BoolKind::compare;
    n.relation = r;
    n.origins = a.origins() | b.origins();
    n.lhs = a;
    n.rhs = b;
    return make_bool(std::move(n));
}

BoolExpr logical_not(const BoolExpr& x)
{
    if (x.is_true())
        return BoolExpr::literal(false);
    if (x.is_false())
        return BoolExpr::literal(true);
    if (x.kind() == BoolKind::not_)
        return x.node().x;
    BoolNode n;
    n.kind = BoolKind::not_;
    n.origins = x.origins();
    n.x = x;
    return make_bool(std::move(n));
}

BoolExpr logical_and(const BoolExpr& x, const BoolExpr& y)
{
    if (x.is_false() || y.is_false())
        return BoolExpr::literal(false);
    if (x.is_true())
        return y;
    if (y.is_true())
        return x;
    BoolNode n;
    n.kind = BoolKind::and_;
    n.origins = x.origins() | y.origins();
    n.x = x;
    n.y = y;
    return make_bool(std::move(n));
}

BoolExpr logical_or(const BoolExpr& x, const BoolExpr& y)
{
    if (x.is_true() || y.is_true())
        return BoolExpr::literal(true);
    if (x.is_false())
        return y;
    if (y.is_false())
        return x;
    BoolNode n;
    n.kind = BoolKind::or_;
    n.origins = x.origins() | y.origins();
    n.x = x;
    n.y = y;
    return make_bool(std::move(n));
}

SymExpr bool_to_i32(const BoolExpr& cond)
{
    if (cond.is_constant())
        return SymExpr::constant(32, cond.is_true() ? 1 : 0, cond.origins());
    return ite(cond, SymExpr::constant(32, 1), SymExpr::constant(32, 0));
}

BoolExpr is_nonzero(const SymExpr& value)
{
    return compare(Relation::ne, value, SymExpr::constant(value.width(), 0));
}

namespace {

class Evaluator
{
public:
    explicit Evaluator(const Model& m) : model_{m} {}

    uint64_t eval(const SymExpr& e)
    {
        const auto& n = e.node();
        if (n.kind == ExprKind::concrete)
            return n.value;
        if (n.kind == ExprKind::variable)
        {
            auto it = model_.find(n.var_id);
            return it == model_.end() ? 0 : (it->second & width_mask(n.width));
        }
        if (auto it = values_.find(e.get()); it != values_.end())
            return it->second;

        uint64_t v = 0;
        switch (n.kind)
        {
        case ExprKind::unary:
            v = fold_unary(static_cast<UnaryOp>(n.op), n.width, eval(n.a));
            break;
        case ExprKind::binary:
            v = fold_binary(static_cast<BinaryOp>(n.op), n.width, eval(n.a), eval(n.b));
            break;
        case ExprKind::extract:
            v = (eval(n.a) >> n.lo) & width_mask(n.width);
            break;
        case ExprKind::concat:
            v = (eval(n.a) << n.b.width()) | eval(n.b);
            break;
        case ExprKind::ite:
            v = eval(n.cond) ? eval(n.a) : eval(n.b);
            break;
        case ExprKind::zero_extend:
            v = eval(n.a);
            break;
        case ExprKind::sign_extend:
            v = static_cast<uint64_t>(sign_extend_bits(eval(n.a), n.a.width())) & width_mask(n.width);
            break;
        default:
            break;
        }
        values_.emplace(e.get(), v);
        return v;
    }

    bool eval(const BoolExpr& e)
    {
        const auto& n = e.node();
        switch (n.kind)
        {
        case BoolKind::true_:
            return true;
        case BoolKind::false_:
            return false;
        default:
            break;
        }
        if (auto it = bools_.find(e.get()); it != bools_.end())
            return it->second;
        bool v = false;
        switch (n.kind)
        {
        case BoolKind::compare:
            v = fold_relation(n.relation, n.lhs.width(), eval(n.lhs), eval(n.rhs));
            break;
        case BoolKind::not_:
            v = !eval(n.x);
            break;
        case BoolKind::and_:
            v = eval(n.x) && eval(n.y);
            break;
        case BoolKind::or_:
            v = eval(n.x) || eval(n.y);
            break;
        default:
            break;
        }
        bools_.emplace(e.get(), v);
        return v;
    }

private:
    const Model& model_;
    std::unordered_map<const ExprNode*, uint64_t> values_;
    std::unordered_map<const BoolNode*, bool> bools_;
};

class VariableCollector
{
public:
    explicit VariableCollector(VariableSet& out) : out_{out} {}

    void visit(const SymExpr& e)
    {
        if (!e.valid() || !seen_.insert(e.get()).second)
            return;
        const auto& n = e.node();
        if (n.kind == ExprKind::variable)
        {
            out_.emplace(n.var_id, n.width);
            return;
        }
        visit(n.a);
        visit(n.b);
        if (n.cond.valid())
            visit(n.cond);
    }

    void visit(const BoolExpr& e)
    {
        if (!e.valid() || !seen_.insert(e.get()).second)
            return;
        const auto& n = e.node();
        visit(n.lhs);
        visit(n.rhs);
        visit(n.x);
        visit(n.y);
    }

private:
    VariableSet& out_;
    std::unordered_set<const void*> seen_;
};

void render(std::ostream& os, const SymExpr& e);
void render(std::ostream& os, const BoolExpr& e);

void render(std::ostream& os, const SymExpr& e)
{
    const auto& n = e.node();
    switch (n.kind)
    {
    case ExprKind::concrete:
        os << "0x" << std::hex << n.value << std::dec << ":" << unsigned{n.width};
        return;
    case ExprKind::variable:
        os << "v" << n.var_id << ":" << unsigned{n.width};
        return;
    case ExprKind::unary:
        os << "(" << to_string(static_cast<UnaryOp>(n.op)) << " ";
        render(os, n.a);
        os << ")";
        return;
    case ExprKind::binary:
        os << "(" << to_string(static_cast<BinaryOp>(n.op)) << " ";
        render(os, n.a);
        os << " ";
        render(os, n.b);
        os << ")";
        return;
    case ExprKind::extract:
        os << "(extract " << unsigned{n.hi} << " " << unsigned{n.lo} << " ";
        render(os, n.a);
        os << ")";
        return;
    case ExprKind::concat:
        os << "(concat ";
        render(os, n.a);
        os << " ";
        render(os, n.b);
        os << ")";
        return;
    case ExprKind::ite:
        os << "(ite ";
        render(os, n.cond);
        os << " ";
        render(os, n.a);
        os << " ";
        render(os, n.b);
        os << ")";
        return;
    case ExprKind::zero_extend:
    case ExprKind::sign_extend:
        os << (n.kind == ExprKind::zero_extend ? "(zext " : "(sext ") << unsigned{n.width} << " ";
        render(os, n.a);
        os << ")";
        return;
    }
}

void render(std::ostream& os, const BoolExpr& e)
{
    const auto& n = e.node();
    switch (n.kind)
    {
    case BoolKind::true_:
        os << "true";
        return;
    case BoolKind::false_:
        os << "false";
        return;
    case BoolKind::compare:
        os << "(" << to_string(n.relation) << " ";
        render(os, n.lhs);
        os << " ";
        render(os, n.rhs);
        os << ")";
        return;
    case BoolKind::not_:
        os << "(not ";
        render(os, n.x);
        os << ")";
        return;
    case BoolKind::and_:
    case BoolKind::or_:
        os << (n.kind == BoolKind::and_ ? "(and " : "(or ");
        render(os, n.x);
        os << " ";
        render(os, n.y);
        os << ")";
        return;
    }
}

}  // namespace

uint64_t evaluate(const SymExpr& e, const Model& model)
{
    return Evaluator{model}.eval(e);
}

bool evaluate(const BoolExpr& e, const Model& model)
{
    return Evaluator{model}.eval(e);
}

void collect_variables(const SymExpr& e, VariableSet& out)
{
    VariableCollector{out}.visit(e);
}

void collect_variables(const BoolExpr& e, VariableSet& out)
{
    VariableCollector{out}.visit(e);
}

std::string to_string(const SymExpr& e)
{
    std::ostringstream os;
    render(os, e);
    return os.str();
}

std::string to_string(const BoolExpr& e)
{
    std::ostringstream os;
    render(os, e);
    return os.str();
}

}  // namespace wana
