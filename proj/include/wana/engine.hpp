#pragma once

#include "wana/expr.hpp"
#include "wana/memory.hpp"
#include "wana/module.hpp"
#include "wana/smtlib.hpp"
#include "wana/solver.hpp"

#include <chrono>
#include <compare>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace wana {

enum class PathStatus : uint8_t
{
    running,
    finished,
    trapped,
    pruned,
    budget_exhausted,
};

std::string_view to_string(PathStatus s) noexcept;

/// A code location: function index and instruction offset within its body.
struct Site
{
    uint32_t function = 0;
    uint32_t offset = 0;

    auto operator<=>(const Site&) const = default;
};

enum class EventKind : uint8_t
{
    host_call,
    name_compare,
    tagged_compare,
    send,
    block_info_read,
    delegate_call,
    indirect_call,
    call,
    assert_fork,
    finished,
    trapped,
};

std::string_view to_string(EventKind k) noexcept;

enum class SendMechanism : uint8_t
{
    inline_action,
    deferred,
    eth_call,
};

std::string_view to_string(SendMechanism m) noexcept;

struct TraceEvent
{
    EventKind kind = EventKind::host_call;
    Site site;
    std::string name;            ///< host function or block quantity
    std::vector<SymExpr> args;   ///< host call arguments
    SymExpr subject;             ///< name_compare: the tagged operand
    uint64_t constant = 0;       ///< name_compare constant; call / indirect_call: callee
    Relation relation = Relation::eq;
    OriginSet lhs_origins;       ///< tagged_compare operands
    OriginSet rhs_origins;
    SendMechanism mechanism = SendMechanism::inline_action;
    bool constant_argument = true;  ///< delegate_call classification
    OriginSet argument_origins;
};

enum class LabelKind : uint8_t
{
    block,
    loop,
    if_,
    function,
};

struct Label
{
    LabelKind kind = LabelKind::block;
    uint32_t arity = 0;
    uint32_t target = 0;  ///< loop: offset of the loop instruction; otherwise: offset of the matching end
    uint32_t height = 0;  ///< operand stack height at entry
};

struct Frame
{
    uint32_t function = 0;
    std::vector<SymExpr> locals;
    uint32_t return_arity = 0;
    std::vector<Label> labels;
    uint32_t pc = 0;
    uint32_t stack_base = 0;
};

/// Per-path state owned by host models.
struct HostPathState
{
    std::map<std::string, SymExpr> block_info;
    std::map<std::string, std::vector<Memory::Cell>> storage;
};

struct PathState
{
    std::vector<SymExpr> stack;
    std::vector<Frame> frames;
    Memory memory;
    std::vector<SymExpr> globals;
    std::shared_ptr<const std::vector<std::optional<uint32_t>>> table;
    PathCondition condition;
    Model model;              ///< satisfies `condition` unless model_valid is false
    bool model_valid = true;
    std::map<Site, uint32_t> loop_counters;
    std::vector<TraceEvent> trace;
    std::mt19937_64 prng;
    PathStatus status = PathStatus::running;
    uint64_t instructions = 0;
    uint32_t next_variable = 0;
    bool low_confidence = false;  ///< some solver verdict on this path was unknown
    std::vector<std::string> diagnostics;
    HostPathState host;
    Site last_site;

    /// Highest value any loop counter reached on this path.
    uint32_t max_loop_count() const;
};

struct ExploreConfig
{
    uint32_t loop_bound = 10;
    uint32_t max_paths = 2000;
    uint64_t max_instructions = 200000;
    uint64_t seed = 0;
    uint32_t max_call_depth = 256;
    uint32_t max_indirect_targets = 64;
    uint32_t max_memory_pages = 1024;
    std::optional<std::chrono::steady_clock::time_point> deadline;
    /// When set, every fresh variable is replaced by its value in this model (tags kept).
    std::optional<Model> replay;
};

struct ExploreStats
{
    uint64_t paths = 0;
    uint64_t forks = 0;
    uint64_t pruned = 0;
    uint64_t finished = 0;
    uint64_t trapped = 0;
    uint64_t budget_exhausted = 0;
    uint64_t unsupported = 0;
    uint64_t unknown_verdicts = 0;
    uint64_t solver_queries = 0;
    uint64_t instructions = 0;
    bool truncated = false;  ///< path budget reached with work left
    bool timed_out = false;

    ExploreStats& operator+=(const ExploreStats& o);
};

struct ExploreResult
{
    std::vector<PathState> paths;
    ExploreStats stats;
};

enum class InstantiationErrorKind : uint8_t
{
    offset_out_of_bounds,
    non_const_initializer,
};

struct InstantiationError : std::runtime_error
{
    InstantiationError(InstantiationErrorKind k, const std::string& what) : std::runtime_error{what}, kind{k} {}
    InstantiationErrorKind kind;
};

class Engine;

/// Executes imported functions. Implementations must be stateless apart from `state`.
class HostInterface
{
public:
    virtual ~HostInterface() = default;

    /// Returns the result value (if the import has one). May change `state.status`.
    virtual std::optional<SymExpr> call_import(Engine& engine, PathState& state, const Import& import,
                                               const FuncType& type, std::span<const SymExpr> args, Site site) = 0;
};

/// Outcome of a feasibility check for one extra conjunct.
struct Feasibility
{
    SatStatus status = SatStatus::unsat;
    Model model;

    bool possible() const noexcept { return status != SatStatus::unsat; }
};

class Engine
{
public:
    Engine(const Module& module, Solver& solver, ExploreConfig config, HostInterface* host = nullptr);

    const Module& module() const noexcept { return module_; }
    const ExploreConfig& config() const noexcept { return config_; }
    Solver& solver() noexcept { return solver_; }

    PathState instantiate() const;

    /// A new variable, or its replay value when replaying a model.
    SymExpr fresh(PathState& state, unsigned width, Origin origin) const;
    /// Seeded pseudo-random concrete value of the given type.
    SymExpr random_value(PathState& state, ValType type) const;

    /// Pushes a call frame for `func` with the given arguments.
    void enter(PathState& state, uint32_t func, std::vector<SymExpr> args) const;

    /// Executes one instruction and returns all successors.
    std::vector<PathState> step(PathState state);

    /// Depth-first exploration until every path terminates or a budget runs out.
    ExploreResult explore(PathState initial);
    ExploreResult explore(uint32_t entry, std::vector<SymExpr> args);

    /// Checks `state.condition ∧ c`.
    Feasibility check(const PathState& state, const BoolExpr& c);
    /// Appends `c` if feasible; otherwise marks the path pruned. Returns whether the path survives.
    bool assume(PathState& state, const BoolExpr& c);
    /// Pins a symbolic value to one model value, appending the equality conjunct.
    uint64_t concretize(PathState& state, const SymExpr& value);

    /// Ends the path as trapped, recording the reason.
    void trap(PathState& s, std::string why);
    void terminate(PathState& s, PathStatus status);

    const ExploreStats& stats() const noexcept { return stats_; }

private:
    void execute(PathState& s, std::vector<PathState>& forks);
    void run(PathState& s, std::vector<PathState>& forks);
    void apply_check(PathState& s, const BoolExpr& c, const Feasibility& f);
    void branch_to(PathState& s, uint32_t depth);
    bool back_edge_at_bound(const PathState& s, uint32_t depth) const;
    void do_return(PathState& s);
    void call_function(PathState& s, uint32_t func);
    void call_indirect(PathState& s, const Instruction& ins, std::vector<PathState>& forks);
    void br_table(PathState& s, const Instruction& ins, std::vector<PathState>& forks);
    void conditional(PathState& s, const BoolExpr& c, std::vector<PathState>& forks, bool is_br_if,
                     const Instruction& ins);
    uint64_t effective_address(PathState& s, const Instruction& ins, unsigned nbytes);

    const Module& module_;
    Solver& solver_;
    ExploreConfig config_;
    HostInterface* host_;
    ExploreStats stats_;
};

}  // namespace wana
