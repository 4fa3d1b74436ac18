#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "phasebal/optimizer.hpp"

using namespace phasebal;

namespace {

double max_change(const VoltageProfile& a, const VoltageProfile& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, (a[i] - b[i]).cwiseAbs().maxCoeff());
    return d;
}

SearchOptions exhaustive_options() {
    SearchOptions s;
    s.strategy = SearchStrategy::exhaustive;
    return s;
}

}  // namespace

TEST_CASE("zero demand converges on the first solve with no voltage change") {
    const LoadedScenario& s = fixtures::bundled();
    std::vector<Complex> zero(s.network->customer_count(), 0.0);
    std::vector<bool> adj(zero.size(), false);
    adj[0] = adj[7] = true;
    const CaseSnapshot snap(s.network, 0, zero, adj);
    Algorithm1Options alg;
    alg.max_iterations = 5;
    const OptimizationOutcome o = fixv_algorithm1(snap, alg, {});
    REQUIRE(o.delta_v_trace.size() == 1);
    CHECK(o.delta_v_trace[0] == 0.0);
    CHECK(o.discrete_solves == 1);
    CHECK(o.converged);
    // Every assignment ties at zero, so the tie-break puts both switchable customers on a.
    CHECK(o.best_objective == 0.0);
    CHECK(o.best == snap.initial_assignment().with_phase(0, Phase::a).with_phase(7, Phase::a));
}

TEST_CASE("warm start with K = 1 runs exactly one discrete solve") {
    const LoadedScenario& s = fixtures::bundled();
    const CaseSnapshot snap = s.snapshot(76);
    Algorithm1Options alg;
    alg.start = StartMode::warm;
    alg.max_iterations = 1;
    alg.warm_profile = solve_utpf(snap, snap.initial_assignment()).voltages;
    const OptimizationOutcome o = fixv_algorithm1(snap, alg, {});
    CHECK(o.discrete_solves == 1);
    CHECK(o.delta_v_trace.size() == 1);

    // Same answer as a single bounded search on the fixed UTPF profile.
    const OptimizationOutcome ref =
        branch_and_bound(FormulationSpec::fixv(*alg.warm_profile), snap, snap.initial_assignment());
    CHECK(o.best == ref.best);
    CHECK(o.best_objective == ref.best_objective);
}

TEST_CASE("invalid outer-iteration settings are rejected") {
    const CaseSnapshot snap = fixtures::bundled().snapshot(10);
    Algorithm1Options alg;
    alg.max_iterations = 0;
    CHECK_THROWS_AS(fixv_algorithm1(snap, alg, {}), InputError);
    alg.max_iterations = 2;
    alg.start = StartMode::warm;
    CHECK_THROWS_AS(fixv_algorithm1(snap, alg, {}), InputError);
    alg.warm_profile = VoltageProfile(3, snap.network().root_voltage());
    CHECK_THROWS_AS(fixv_algorithm1(snap, alg, {}), InputError);
    alg.warm_profile.reset();
    alg.start = StartMode::cold;
    alg.tolerance = 0.0;
    CHECK_THROWS_AS(fixv_algorithm1(snap, alg, {}), InputError);
}

TEST_CASE("outer iteration matches a hand-rolled profile update") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 6; ++trial) {
        const fixtures::RandomCase rc = fixtures::random_case(rng, 3, 0, 0, trial % 2 == 1);
        const CaseSnapshot snap = rc.snapshot();
        Algorithm1Options alg;
        alg.max_iterations = 6;
        alg.tolerance = 1e-9;
        const OptimizationOutcome o = fixv_algorithm1(snap, alg, exhaustive_options());

        VoltageProfile profile = flat_profile(snap.network());
        std::vector<double> trace;
        PhaseAssignment best;
        double dv = 100.0;
        for (int k = 1; dv > alg.tolerance && k <= alg.max_iterations; ++k) {
            const OptimizationOutcome step =
                exhaustive(FormulationSpec::fixv(profile), snap, snap.initial_assignment());
            const EvaluationResult ev = evaluate_fixv(snap, step.best, profile);
            dv = max_change(ev.voltages, profile);
            trace.push_back(dv);
            profile = ev.voltages;
            best = step.best;
        }
        CHECK(o.delta_v_trace == trace);
        CHECK(o.best == best);
        CHECK(o.discrete_solves == static_cast<int>(trace.size()));
        CHECK(o.converged == (trace.back() <= alg.tolerance));
        CHECK((o.converged || o.discrete_solves == alg.max_iterations));
    }
}

TEST_CASE("bundled periods: stop rule and exact verification") {
    const LoadedScenario& s = fixtures::bundled();
    for (std::size_t p : {20u, 48u, 76u, 85u}) {
        const CaseSnapshot snap = s.snapshot(p);
        Algorithm1Options alg;
        alg.max_iterations = 4;
        const OptimizationOutcome o = fixv_algorithm1(snap, alg, {});
        CHECK(o.discrete_solves >= 1);
        CHECK(o.discrete_solves <= 4);
        CHECK(o.delta_v_trace.size() == static_cast<std::size_t>(o.discrete_solves));
        for (std::size_t k = 0; k + 1 < o.delta_v_trace.size(); ++k) CHECK(o.delta_v_trace[k] > alg.tolerance);
        CHECK((o.converged ? o.delta_v_trace.back() <= alg.tolerance : o.discrete_solves == 4));

        REQUIRE(o.verified.has_value());
        const PFSolution pf = solve_utpf(snap, o.best, o.q);
        CHECK(pf.voltages == o.verified->voltages);
        CHECK(o.verified->objective == evaluate_utpf(snap, o.best, o.q).objective);
    }
}

TEST_CASE("method defaults and labels") {
    const CaseSnapshot snap = fixtures::bundled().snapshot(76);
    MethodOptions mo;
    mo.method = Method::fixv_mw;
    const OptimizationOutcome mw = optimize(snap, mo);
    CHECK(mw.method == "fixv-mw");
    CHECK(mw.discrete_solves == 1);
    mo.method = Method::fixv_mc;
    const OptimizationOutcome mc = optimize(snap, mo);
    CHECK(mc.method == "fixv-mc");
    CHECK(mc.discrete_solves <= 3);
    mo.method = Method::lbfm;
    const OptimizationOutcome lb = optimize(snap, mo);
    CHECK(lb.method == "lbfm");
    for (const auto* o : {&mw, &mc, &lb}) {
        CHECK(o->best_objective <= o->initial_objective);
        REQUIRE(o->verified.has_value());
        CHECK(o->verified->objective == evaluate_utpf(snap, o->best, o->q).objective);
    }
}
