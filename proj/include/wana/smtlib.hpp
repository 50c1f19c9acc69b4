#pragma once

#include "wana/expr.hpp"

#include <span>
#include <string>
#include <vector>

namespace wana {

/// Ordered conjunction of branch constraints collected along one path.
/// Append-only; copies made at a fork share the prefix's expression nodes.
class PathCondition
{
public:
    void append(BoolExpr conjunct) { conjuncts_.push_back(std::move(conjunct)); }
    std::span<const BoolExpr> conjuncts() const noexcept { return conjuncts_; }
    std::size_t size() const noexcept { return conjuncts_.size(); }
    bool empty() const noexcept { return conjuncts_.empty(); }
    const BoolExpr& back() const { return conjuncts_.back(); }

    /// Conjunction holds under `model`.
    bool holds(const Model& model) const;

private:
    std::vector<BoolExpr> conjuncts_;
};

/// Renders a QF_BV query: option/logic header, one declaration per variable,
/// shared subterms as define-fun, one assertion per conjunct and a final (check-sat).
/// Structurally identical inputs give byte-identical text regardless of node sharing.
std::string to_smtlib(std::span<const BoolExpr> conjuncts);

inline std::string to_smtlib(const PathCondition& pc)
{
    return to_smtlib(pc.conjuncts());
}

}  // namespace wana
