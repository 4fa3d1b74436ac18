#include <chrono>

#include "phasebal/optimizer.hpp"

namespace phasebal {

OptimizationOutcome fixv_algorithm1(const CaseSnapshot& snapshot, const Algorithm1Options& algorithm,
                                    const SearchOptions& search, bool pv_q) {
    const auto t0 = std::chrono::steady_clock::now();
    if (algorithm.max_iterations < 1) throw InputError("K must be at least 1");
    if (!(algorithm.tolerance > 0.0)) throw InputError("voltage tolerance must be positive");
    const Network& net = snapshot.network();

    VoltageProfile profile;
    if (algorithm.start == StartMode::cold) {
        profile = flat_profile(net);
    } else {
        if (!algorithm.warm_profile) throw InputError("warm start requires a voltage profile");
        profile = *algorithm.warm_profile;
        if (profile.size() != net.bus_count()) throw InputError("warm-start profile does not cover every bus");
    }

    const PhaseAssignment initial = snapshot.initial_assignment();
    OptimizationOutcome out;
    out.method = "fixv";
    out.initial = initial;
    out.strategy = search.strategy;
    out.seed = search.seed;

    double dv = 100.0;
    std::optional<PhaseAssignment> previous;
    for (int k = 1; dv > algorithm.tolerance && k <= algorithm.max_iterations; ++k) {
        const FormulationSpec spec = FormulationSpec::fixv(profile);
        const DiscreteSolve ds =
            solve_discrete(spec, snapshot, initial, search, pv_q, algorithm.carry_assignment ? previous : std::nullopt);
        EvaluationResult ev = evaluate_fixv(snapshot, ds.best, profile, ds.q);
        dv = 0.0;
        for (std::size_t b = 0; b < profile.size(); ++b)
            dv = std::max(dv, (ev.voltages[b] - profile[b]).cwiseAbs().maxCoeff());
        out.delta_v_trace.push_back(dv);
        profile = ev.voltages;
        previous = ds.best;

        out.best = ds.best;
        out.q = ds.q;
        out.evaluation = std::move(ev);
        out.initial_objective = ds.initial_objective;
        out.best_objective = ds.objective;
        out.trace = ds.search.trace;
        out.evaluations += ds.search.evaluations;
        out.nodes += ds.search.nodes;
        out.pruned += ds.search.pruned;
        ++out.discrete_solves;
    }
    out.converged = dv <= algorithm.tolerance;
    out.verified = evaluate_utpf(snapshot, out.best, out.q);
    out.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

}  // namespace phasebal
