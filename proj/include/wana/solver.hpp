#pragma once

#include "wana/expr.hpp"
#include "wana/smtlib.hpp"

#include <chrono>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace wana {

enum class SatStatus
{
    sat,
    unsat,
    unknown,
};

std::string_view to_string(SatStatus s) noexcept;

struct SolverVerdict
{
    SatStatus status = SatStatus::unknown;
    std::optional<Model> model;  ///< present iff status == sat
    std::chrono::microseconds solve_time{0};
};

/// The solver process cannot be launched or violated the protocol.
struct SolverUnavailable : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

struct SolverStats
{
    uint64_t queries = 0;
    uint64_t cache_hits = 0;
    uint64_t unknowns = 0;
    std::chrono::microseconds total_time{0};
};

class Solver
{
public:
    virtual ~Solver() = default;

    /// Decides the conjunction of `conjuncts`.
    virtual SolverVerdict check(std::span<const BoolExpr> conjuncts) = 0;

    SolverVerdict check(const PathCondition& pc) { return check(pc.conjuncts()); }

    const SolverStats& stats() const noexcept { return stats_; }
    void reset_stats() noexcept { stats_ = {}; }

protected:
    SolverStats stats_;
};

/// Talks SMT-LIB 2.6 to an external solver over stdin/stdout. One process per
/// instance, reset between queries; a query that exceeds the timeout kills the
/// process (restarted lazily) and yields `unknown`.
class SmtProcessSolver final : public Solver
{
public:
    SmtProcessSolver(std::string executable, std::chrono::milliseconds timeout);
    ~SmtProcessSolver() override;

    SmtProcessSolver(const SmtProcessSolver&) = delete;
    SmtProcessSolver& operator=(const SmtProcessSolver&) = delete;

    SolverVerdict check(std::span<const BoolExpr> conjuncts) override;

    const std::string& executable() const noexcept { return executable_; }

private:
    void start();
    void stop() noexcept;
    void send(const std::string& text);
    /// Reads one complete response (an atom line or a balanced s-expression).
    std::optional<std::string> read_response(std::chrono::steady_clock::time_point deadline);
    Model query_model(std::span<const BoolExpr> conjuncts, std::chrono::steady_clock::time_point deadline);

    std::string executable_;
    std::chrono::milliseconds timeout_;
    int pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    std::string buffer_;
    std::unordered_map<std::string, SolverVerdict> cache_;
};

/// Solver executable from the explicit flag, else $WANA_SOLVER, else `z3` on PATH.
std::string resolve_solver_path(const std::optional<std::string>& flag);

/// Parses (get-model) / (get-value ...) responses into a model.
Model parse_model(const std::string& response);

}  // namespace wana
