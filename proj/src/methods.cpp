#include <chrono>

#include "phasebal/optimizer.hpp"

namespace phasebal {

std::string_view to_string(Method m) {
    switch (m) {
        case Method::linv: return "linv";
        case Method::lbfm: return "lbfm";
        case Method::fixv_mc: return "fixv-mc";
        case Method::fixv_mw: return "fixv-mw";
    }
    return "?";
}

Method parse_method(std::string_view text) {
    if (text == "linv") return Method::linv;
    if (text == "lbfm") return Method::lbfm;
    if (text == "fixv-mc") return Method::fixv_mc;
    if (text == "fixv-mw") return Method::fixv_mw;
    throw InputError("unknown method '" + std::string(text) + "'");
}

DiscreteSolve solve_discrete(const FormulationSpec& spec, const CaseSnapshot& snapshot, const PhaseAssignment& initial,
                             const SearchOptions& options, bool pv_q, std::optional<PhaseAssignment> extra_start) {
    validate_assignment(snapshot, initial);
    auto model = compile(spec, snapshot);
    const std::vector<std::uint8_t> init = adjustable_phases(*model, initial);
    std::vector<std::uint8_t> extra;
    if (extra_start) extra = adjustable_phases(*model, *extra_start);

    DiscreteSolve out;
    out.search = run_search(*model, init, options, extra);
    out.initial_objective = out.search.initial_objective;
    out.objective = out.search.objective;
    out.best = expand_phases(snapshot, *model, out.search.phases);

    if (!pv_q || snapshot.q_controllable_customers().empty()) return out;
    // Alternate reactive-power descent and discrete search, keeping a step
    // only when it lowers the objective of the compiled model.
    for (int round = 0; round < 10; ++round) {
        const PvQResult pq = optimize_pv_q(snapshot, out.best, spec, out.q);
        auto q_model = compile(spec, snapshot, pq.q);
        const std::vector<std::uint8_t> held = adjustable_phases(*q_model, out.best);
        const double held_f = q_model->objective(held);
        if (!(held_f < out.objective)) break;
        out.q = pq.q;
        out.objective = held_f;
        const SearchResult sr = run_search(*q_model, init, options, held);
        out.search.evaluations += sr.evaluations;
        out.search.nodes += sr.nodes;
        out.search.pruned += sr.pruned;
        if (!(sr.objective < out.objective)) break;
        out.objective = sr.objective;
        out.best = expand_phases(snapshot, *q_model, sr.phases);
        out.search.phases = sr.phases;
        out.search.trace = sr.trace;
    }
    out.search.objective = out.objective;
    return out;
}

namespace {

OptimizationOutcome outcome_from(const FormulationSpec& spec, const CaseSnapshot& snapshot,
                                 const PhaseAssignment& initial, const DiscreteSolve& ds, SearchStrategy strategy,
                                 std::uint64_t seed) {
    OptimizationOutcome o;
    o.method = std::string(to_string(spec.kind));
    o.initial = initial;
    o.best = ds.best;
    o.q = ds.q;
    o.evaluation = evaluate(spec, snapshot, ds.best, ds.q);
    o.initial_objective = ds.initial_objective;
    o.best_objective = ds.objective;
    o.discrete_solves = 1;
    o.evaluations = ds.search.evaluations;
    o.nodes = ds.search.nodes;
    o.pruned = ds.search.pruned;
    o.trace = ds.search.trace;
    o.strategy = strategy;
    o.seed = seed;
    o.verified = evaluate_utpf(snapshot, ds.best, ds.q);
    return o;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

OptimizationOutcome exhaustive(const FormulationSpec& spec, const CaseSnapshot& snapshot, const PhaseAssignment& initial,
                               const SearchOptions& options) {
    const auto t0 = std::chrono::steady_clock::now();
    SearchOptions o = options;
    o.strategy = SearchStrategy::exhaustive;
    auto out = outcome_from(spec, snapshot, initial, solve_discrete(spec, snapshot, initial, o, false), o.strategy, o.seed);
    out.runtime_s = seconds_since(t0);
    return out;
}

OptimizationOutcome branch_and_bound(const FormulationSpec& spec, const CaseSnapshot& snapshot,
                                     const PhaseAssignment& initial) {
    const auto t0 = std::chrono::steady_clock::now();
    SearchOptions o;
    o.strategy = SearchStrategy::branch_and_bound;
    auto out = outcome_from(spec, snapshot, initial, solve_discrete(spec, snapshot, initial, o, false), o.strategy, o.seed);
    out.runtime_s = seconds_since(t0);
    return out;
}

OptimizationOutcome local_search(const FormulationSpec& spec, const CaseSnapshot& snapshot,
                                 const PhaseAssignment& initial, const SearchOptions& options) {
    const auto t0 = std::chrono::steady_clock::now();
    SearchOptions o = options;
    o.strategy = SearchStrategy::local_search;
    auto out = outcome_from(spec, snapshot, initial, solve_discrete(spec, snapshot, initial, o, false), o.strategy, o.seed);
    out.runtime_s = seconds_since(t0);
    return out;
}

OptimizationOutcome optimize(const CaseSnapshot& snapshot, const MethodOptions& options) {
    const auto t0 = std::chrono::steady_clock::now();
    const PhaseAssignment initial = snapshot.initial_assignment();
    OptimizationOutcome out;
    switch (options.method) {
        case Method::linv: {
            std::shared_ptr<const AffineFit> fit = options.fit;
            if (!fit)
                fit = std::make_shared<const AffineFit>(
                    fit_inverse_voltage(FitDomain::from_limits(snapshot.network().limits())));
            const FormulationSpec spec{FormulationKind::linv, nullptr, fit};
            SearchOptions search = options.search;
            // The affine model has no linear transformer decomposition, so no bound.
            if (search.strategy == SearchStrategy::branch_and_bound) search.strategy = SearchStrategy::exhaustive;
            out = outcome_from(spec, snapshot, initial, solve_discrete(spec, snapshot, initial, search, options.pv_q),
                               search.strategy, search.seed);
            break;
        }
        case Method::lbfm: {
            const FormulationSpec spec = FormulationSpec::lbfm();
            out = outcome_from(spec, snapshot, initial,
                               solve_discrete(spec, snapshot, initial, options.search, options.pv_q),
                               options.search.strategy, options.search.seed);
            break;
        }
        case Method::fixv_mc:
        case Method::fixv_mw: {
            Algorithm1Options alg;
            alg.tolerance = options.tolerance;
            if (options.method == Method::fixv_mc) {
                alg.start = StartMode::cold;
                alg.max_iterations = options.max_iterations.value_or(3);
            } else {
                alg.start = StartMode::warm;
                alg.max_iterations = options.max_iterations.value_or(1);
                alg.warm_profile = solve_utpf(snapshot, initial, {}, options.power_flow).voltages;
            }
            out = fixv_algorithm1(snapshot, alg, options.search, options.pv_q);
            break;
        }
    }
    out.method = std::string(to_string(options.method));
    out.verified = evaluate_utpf(snapshot, out.best, out.q, options.power_flow);
    out.runtime_s = seconds_since(t0);
    return out;
}

}  // namespace phasebal
