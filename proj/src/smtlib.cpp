#include "wana/smtlib.hpp"

#include <map>
#include <sstream>
#include <unordered_map>

namespace wana {

bool PathCondition::holds(const Model& model) const
{
    for (const auto& c : conjuncts_)
        if (!evaluate(c, model))
            return false;
    return true;
}

namespace {

std::string bv_literal(uint64_t value, unsigned width)
{
    return "(_ bv" + std::to_string(value) + " " + std::to_string(width) + ")";
}

std::string sort_of(unsigned width)
{
    return "(_ BitVec " + std::to_string(width) + ")";
}

/// Interns expression nodes by structure so that sharing in the DAG does not
/// influence the emitted text.
class SmtWriter
{
public:
    std::string write(std::span<const BoolExpr> conjuncts)
    {
        std::vector<uint32_t> roots;
        roots.reserve(conjuncts.size());
        for (const auto& c : conjuncts)
            roots.push_back(intern(c));
        for (auto r : roots)
            ++uses_[r];

        std::ostringstream out;
        out << "(set-option :produce-models true)\n(set-logic QF_BV)\n";
        for (const auto& [id, width] : variables_)
            out << "(declare-fun v" << id << " () " << sort_of(width) << ")\n";

        for (uint32_t id = 0; id < nodes_.size(); ++id)
        {
            if (!needs_definition(id))
                continue;
            const auto& n = nodes_[id];
            out << "(define-fun t" << id << " () " << (n.is_bool ? std::string{"Bool"} : sort_of(n.width)) << " "
                << body(id) << ")\n";
        }
        for (auto r : roots)
            out << "(assert " << ref(r) << ")\n";
        out << "(check-sat)\n";
        return out.str();
    }

private:
    struct Node
    {
        bool is_bool = false;
        bool leaf = false;
        unsigned width = 0;
        const ExprNode* expr = nullptr;
        const BoolNode* cond = nullptr;
        std::vector<uint32_t> children;
    };

    bool needs_definition(uint32_t id) const
    {
        if (nodes_[id].leaf)
            return false;
        auto it = uses_.find(id);
        return it != uses_.end() && it->second > 1;
    }

    uint32_t add(std::string key, Node node, const std::vector<unsigned>& weights)
    {
        if (auto it = by_key_.find(key); it != by_key_.end())
            return it->second;
        const auto id = static_cast<uint32_t>(nodes_.size());
        for (std::size_t i = 0; i < node.children.size(); ++i)
            uses_[node.children[i]] += weights.empty() ? 1 : weights[i];
        nodes_.push_back(std::move(node));
        by_key_.emplace(std::move(key), id);
        return id;
    }

    uint32_t intern(const SymExpr& e)
    {
        if (auto it = by_ptr_.find(e.get()); it != by_ptr_.end())
            return it->second;
        const auto& n = e.node();
        Node node;
        node.width = n.width;
        node.expr = e.get();
        std::string key = "e" + std::to_string(static_cast<int>(n.kind)) + ":" + std::to_string(n.width);
        std::vector<unsigned> weights;
        switch (n.kind)
        {
        case ExprKind::concrete:
            node.leaf = true;
            key += ":" + std::to_string(n.value);
            break;
        case ExprKind::variable:
            node.leaf = true;
            key += ":" + std::to_string(n.var_id);
            variables_.emplace(n.var_id, n.width);
            break;
        case ExprKind::unary: {
            node.children = {intern(n.a)};
            const auto op = static_cast<UnaryOp>(n.op);
            weights = {op == UnaryOp::bit_not ? 1u : 2u};
            key += ":" + std::to_string(n.op);
            break;
        }
        case ExprKind::binary: {
            node.children = {intern(n.a), intern(n.b)};
            const auto op = static_cast<BinaryOp>(n.op);
            if (op == BinaryOp::rotl || op == BinaryOp::rotr)
                weights = {2, 2};
            key += ":" + std::to_string(n.op);
            break;
        }
        case ExprKind::extract:
            node.children = {intern(n.a)};
            key += ":" + std::to_string(n.hi) + ":" + std::to_string(n.lo);
            break;
        case ExprKind::concat:
            node.children = {intern(n.a), intern(n.b)};
            break;
        case ExprKind::ite:
            node.children = {intern(n.cond), intern(n.a), intern(n.b)};
            break;
        case ExprKind::zero_extend:
        case ExprKind::sign_extend:
            node.children = {intern(n.a)};
            break;
        }
        for (auto c : node.children)
            key += "," + std::to_string(c);
        const auto id = add(std::move(key), std::move(node), weights);
        by_ptr_.emplace(e.get(), id);
        return id;
    }

    uint32_t intern(const BoolExpr& e)
    {
        if (auto it = by_ptr_.find(e.get()); it != by_ptr_.end())
            return it->second;
        const auto& n = e.node();
        Node node;
        node.is_bool = true;
        node.cond = e.get();
        std::string key = "b" + std::to_string(static_cast<int>(n.kind));
        switch (n.kind)
        {
        case BoolKind::true_:
        case BoolKind::false_:
            node.leaf = true;
            break;
        case BoolKind::compare:
            node.children = {intern(n.lhs), intern(n.rhs)};
            key += ":" + std::to_string(static_cast<int>(n.relation));
            break;
        case BoolKind::not_:
            node.children = {intern(n.x)};
            break;
        case BoolKind::and_:
        case BoolKind::or_:
            node.children = {intern(n.x), intern(n.y)};
            break;
        }
        for (auto c : node.children)
            key += "," + std::to_string(c);
        const auto id = add(std::move(key), std::move(node), {});
        by_ptr_.emplace(e.get(), id);
        return id;
    }

    std::string ref(uint32_t id) const
    {
        if (needs_definition(id))
            return "t" + std::to_string(id);
        return body(id);
    }

    std::string body(uint32_t id) const
    {
        const auto& node = nodes_[id];
        if (node.is_bool)
            return bool_body(node);
        const auto& n = *node.expr;
        const unsigned w = n.width;
        switch (n.kind)
        {
        case ExprKind::concrete:
            return bv_literal(n.value, w);
        case ExprKind::variable:
            return "v" + std::to_string(n.var_id);
        case ExprKind::unary: {
            const auto x = ref(node.children[0]);
            switch (static_cast<UnaryOp>(n.op))
            {
            case UnaryOp::bit_not:
                return "(bvnot " + x + ")";
            case UnaryOp::clz: {
                std::string s = bv_literal(w, w);
                for (unsigned i = 0; i < w; ++i)
                    s = "(ite (= ((_ extract " + std::to_string(i) + " " + std::to_string(i) + ") " + x + ") #b1) " +
                        bv_literal(w - 1 - i, w) + " " + s + ")";
                return s;
            }
            case UnaryOp::ctz: {
                std::string s = bv_literal(w, w);
                for (unsigned i = w; i-- > 0;)
                    s = "(ite (= ((_ extract " + std::to_string(i) + " " + std::to_string(i) + ") " + x + ") #b1) " +
                        bv_literal(i, w) + " " + s + ")";
                return s;
            }
            case UnaryOp::popcnt: {
                std::string s = "(bvadd";
                for (unsigned i = 0; i < w; ++i)
                    s += " ((_ zero_extend " + std::to_string(w - 1) + ") ((_ extract " + std::to_string(i) + " " +
                         std::to_string(i) + ") " + x + "))";
                return s + ")";
            }
            }
            break;
        }
        case ExprKind::binary: {
            const auto a = ref(node.children[0]);
            const auto b = ref(node.children[1]);
            const auto amount = "(bvurem " + b + " " + bv_literal(w, w) + ")";
            switch (static_cast<BinaryOp>(n.op))
            {
            case BinaryOp::add:
                return "(bvadd " + a + " " + b + ")";
            case BinaryOp::sub:
                return "(bvsub " + a + " " + b + ")";
            case BinaryOp::mul:
                return "(bvmul " + a + " " + b + ")";
            case BinaryOp::div_s:
                return "(bvsdiv " + a + " " + b + ")";
            case BinaryOp::div_u:
                return "(bvudiv " + a + " " + b + ")";
            case BinaryOp::rem_s:
                return "(bvsrem " + a + " " + b + ")";
            case BinaryOp::rem_u:
                return "(bvurem " + a + " " + b + ")";
            case BinaryOp::bit_and:
                return "(bvand " + a + " " + b + ")";
            case BinaryOp::bit_or:
                return "(bvor " + a + " " + b + ")";
            case BinaryOp::bit_xor:
                return "(bvxor " + a + " " + b + ")";
            case BinaryOp::shl:
                return "(bvshl " + a + " " + amount + ")";
            case BinaryOp::shr_s:
                return "(bvashr " + a + " " + amount + ")";
            case BinaryOp::shr_u:
                return "(bvlshr " + a + " " + amount + ")";
            case BinaryOp::rotl:
                return "(bvor (bvshl " + a + " " + amount + ") (bvlshr " + a + " (bvsub " + bv_literal(w, w) + " " +
                       amount + ")))";
            case BinaryOp::rotr:
                return "(bvor (bvlshr " + a + " " + amount + ") (bvshl " + a + " (bvsub " + bv_literal(w, w) + " " +
                       amount + ")))";
            }
            break;
        }
        case ExprKind::extract:
            return "((_ extract " + std::to_string(n.hi) + " " + std::to_string(n.lo) + ") " +
                   ref(node.children[0]) + ")";
        case ExprKind::concat:
            return "(concat " + ref(node.children[0]) + " " + ref(node.children[1]) + ")";
        case ExprKind::ite:
            return "(ite " + ref(node.children[0]) + " " + ref(node.children[1]) + " " + ref(node.children[2]) + ")";
        case ExprKind::zero_extend:
        case ExprKind::sign_extend:
            return std::string{"((_ "} + (n.kind == ExprKind::zero_extend ? "zero_extend " : "sign_extend ") +
                   std::to_string(w - n.a.width()) + ") " + ref(node.children[0]) + ")";
        }
        return "";
    }

    std::string bool_body(const Node& node) const
    {
        const auto& n = *node.cond;
        switch (n.kind)
        {
        case BoolKind::true_:
            return "true";
        case BoolKind::false_:
            return "false";
        case BoolKind::not_:
            return "(not " + ref(node.children[0]) + ")";
        case BoolKind::and_:
            return "(and " + ref(node.children[0]) + " " + ref(node.children[1]) + ")";
        case BoolKind::or_:
            return "(or " + ref(node.children[0]) + " " + ref(node.children[1]) + ")";
        case BoolKind::compare: {
            const auto a = ref(node.children[0]);
            const auto b = ref(node.children[1]);
            switch (n.relation)
            {
            case Relation::eq:
                return "(= " + a + " " + b + ")";
            case Relation::ne:
                return "(not (= " + a + " " + b + "))";
            case Relation::lt_s:
                return "(bvslt " + a + " " + b + ")";
            case Relation::lt_u:
                return "(bvult " + a + " " + b + ")";
            case Relation::gt_s:
                return "(bvsgt " + a + " " + b + ")";
            case Relation::gt_u:
                return "(bvugt " + a + " " + b + ")";
            case Relation::le_s:
                return "(bvsle " + a + " " + b + ")";
            case Relation::le_u:
                return "(bvule " + a + " " + b + ")";
            case Relation::ge_s:
                return "(bvsge " + a + " " + b + ")";
            case Relation::ge_u:
                return "(bvuge " + a + " " + b + ")";
            }
        }
        }
        return "";
    }

    std::vector<Node> nodes_;
    std::unordered_map<std::string, uint32_t> by_key_;
    std::unordered_map<const void*, uint32_t> by_ptr_;
    std::map<uint32_t, unsigned> variables_;
    std::map<uint32_t, unsigned> uses_;
};

}  // namespace

std::string to_smtlib(std::span<const BoolExpr> conjuncts)
{
    return SmtWriter{}.write(conjuncts);
}

}  // namespace wana
