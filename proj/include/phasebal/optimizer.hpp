#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "phasebal/formulations.hpp"
#include "phasebal/search_model.hpp"

namespace phasebal {

enum class SearchStrategy { exhaustive, branch_and_bound, local_search };

std::string_view to_string(SearchStrategy s);
SearchStrategy parse_search_strategy(std::string_view text);

struct SearchOptions {
    SearchStrategy strategy = SearchStrategy::branch_and_bound;
    /// Upper limit on 3^n for exhaustive enumeration.
    std::uint64_t exhaustive_budget = 531441;  // 3^12
    int restarts = 20;
    int max_moves = 10000;
    std::uint64_t seed = 1;
};

/// One accepted local-search move.
struct MoveRecord {
    std::size_t customer = 0;
    Phase from = Phase::a;
    Phase to = Phase::a;
    double objective = 0.0;
};

struct SearchResult {
    std::vector<std::uint8_t> phases;
    double objective = 0.0;
    double initial_objective = 0.0;
    std::uint64_t evaluations = 0;  ///< complete assignments evaluated
    std::uint64_t nodes = 0;        ///< search-tree nodes visited (B&B)
    std::uint64_t pruned = 0;
    std::vector<MoveRecord> trace;  ///< local search, best start only
};

SearchResult exhaustive_search(const SearchModel& model, std::span<const std::uint8_t> initial,
                               const SearchOptions& options = {});
/// Requires model.dt_decomposition(); throws InputError otherwise.
SearchResult branch_and_bound_search(const SearchModel& model, std::span<const std::uint8_t> initial);
/// Best-improvement single-customer moves from the initial point, an
/// optional extra start, and options.restarts - 1 seeded random starts.
SearchResult local_search(const SearchModel& model, std::span<const std::uint8_t> initial, const SearchOptions& options,
                          std::span<const std::uint8_t> extra_start = {});
SearchResult run_search(const SearchModel& model, std::span<const std::uint8_t> initial, const SearchOptions& options,
                        std::span<const std::uint8_t> extra_start = {});

enum class StartMode { cold, warm };

struct Algorithm1Options {
    int max_iterations = 3;  ///< K
    double tolerance = 1e-4; ///< epsilon_V
    StartMode start = StartMode::cold;
    /// Required for warm start: measured or UTPF voltages per bus.
    std::optional<VoltageProfile> warm_profile;
    /// Seed each outer iteration's search with the previous best assignment.
    bool carry_assignment = true;
};

struct OptimizationOutcome {
    std::string method;
    PhaseAssignment initial;
    PhaseAssignment best;
    QSettings q;
    EvaluationResult evaluation;          ///< formulation state at the best assignment
    double initial_objective = 0.0;       ///< same evaluator, initial assignment, no Q adjustment
    double best_objective = 0.0;
    std::vector<double> delta_v_trace;    ///< Algorithm 1 outer iterations
    int discrete_solves = 0;
    bool converged = true;
    std::uint64_t evaluations = 0;
    std::uint64_t nodes = 0;
    std::uint64_t pruned = 0;
    std::vector<MoveRecord> trace;
    SearchStrategy strategy = SearchStrategy::branch_and_bound;
    std::uint64_t seed = 0;
    double runtime_s = 0.0;
    std::optional<EvaluationResult> verified;  ///< UTPF at (best, q)
};

OptimizationOutcome exhaustive(const FormulationSpec& spec, const CaseSnapshot& snapshot, const PhaseAssignment& initial,
                               const SearchOptions& options = {});
OptimizationOutcome branch_and_bound(const FormulationSpec& spec, const CaseSnapshot& snapshot,
                                     const PhaseAssignment& initial);
OptimizationOutcome local_search(const FormulationSpec& spec, const CaseSnapshot& snapshot,
                                 const PhaseAssignment& initial, const SearchOptions& options);

/// Fixed-voltage outer iteration: solve the discrete problem with currents
/// fixed at the current profile, replace the profile by the resulting
/// voltages, stop once the largest change is within tolerance or K solves ran.
OptimizationOutcome fixv_algorithm1(const CaseSnapshot& snapshot, const Algorithm1Options& algorithm,
                                    const SearchOptions& search, bool pv_q = false);

struct PvQResult {
    QSettings q;
    EvaluationResult evaluation;
    double initial_objective = 0.0;
    int sweeps = 0;
    int evaluations = 0;
};

struct PvQOptions {
    int max_golden_iterations = 64;
    double sweep_tolerance = 1e-6;
    int max_sweeps = 50;
};

/// Cyclic coordinate descent over the Q-controllable customers (ascending
/// id), golden-section per coordinate within its box. Never increases F.
PvQResult optimize_pv_q(const CaseSnapshot& snapshot, const PhaseAssignment& assignment, const FormulationSpec& spec,
                        const QSettings& start = {}, const PvQOptions& options = {});

enum class Method { linv, lbfm, fixv_mc, fixv_mw };

std::string_view to_string(Method m);
Method parse_method(std::string_view text);

struct MethodOptions {
    Method method = Method::fixv_mw;
    SearchOptions search;
    /// Overrides of the method defaults (FIXV-MC: K = 3 cold; FIXV-MW: K = 1 warm).
    std::optional<int> max_iterations;
    double tolerance = 1e-4;
    bool pv_q = false;
    std::shared_ptr<const AffineFit> fit;  ///< LINV; fitted from the limits when absent
    PowerFlowOptions power_flow;
};

/// Runs one method end to end and attaches the UTPF-verified result.
OptimizationOutcome optimize(const CaseSnapshot& snapshot, const MethodOptions& options);

/// Alternates discrete search and reactive-power descent until neither improves.
struct DiscreteSolve {
    PhaseAssignment best;
    QSettings q;
    SearchResult search;
    double initial_objective = 0.0;
    double objective = 0.0;
};
DiscreteSolve solve_discrete(const FormulationSpec& spec, const CaseSnapshot& snapshot, const PhaseAssignment& initial,
                             const SearchOptions& options, bool pv_q,
                             std::optional<PhaseAssignment> extra_start = std::nullopt);

}  // namespace phasebal
