#include <doctest.h>

#include <cmath>
#include <cstring>
#include <thread>

#include "fixtures.hpp"
#include "phasebal/formulations.hpp"
#include "phasebal/powerflow.hpp"

using namespace phasebal;

namespace {

bool bit_equal(const PFSolution& a, const PFSolution& b) {
    if (a.voltages.size() != b.voltages.size() || a.iterations != b.iterations) return false;
    for (std::size_t i = 0; i < a.voltages.size(); ++i)
        if (std::memcmp(a.voltages[i].data(), b.voltages[i].data(), sizeof(Complex) * 3) != 0) return false;
    return std::memcmp(a.dt_power.data(), b.dt_power.data(), sizeof(Complex) * 3) == 0;
}

}  // namespace

TEST_CASE("customer current examples") {
    const Phasor3 zero = customer_current(0.0, 1.05, Phase::a);
    CHECK(zero.cwiseAbs().maxCoeff() == 0.0);

    const Phasor3 i = customer_current({0.01, 0.005}, 1.05, Phase::a);
    CHECK(i[0].real() == doctest::Approx(0.0095238095238095).epsilon(1e-13));
    CHECK(i[0].imag() == doctest::Approx(-0.0047619047619048).epsilon(1e-13));
    CHECK(i[1] == Complex(0.0));
    CHECK(i[2] == Complex(0.0));

    const Phasor3 unit = customer_current({0.01, 0.005}, 1.0, Phase::a);
    CHECK(unit[0] == Complex(0.01, -0.005));

    const Phasor3 onb = customer_current({0.01, 0.005}, std::polar(1.0, -2.0 * std::numbers::pi / 3.0), Phase::b);
    CHECK(onb[0] == Complex(0.0));
    CHECK(std::abs(onb[1] - std::conj(Complex(0.01, 0.005) / std::polar(1.0, -2.0 * std::numbers::pi / 3.0))) < 1e-15);

    CHECK_THROWS_AS(customer_current({0.01, 0.0}, 0.0, Phase::c), SingularityError);
}

TEST_CASE("zero load returns the root voltage everywhere") {
    const LoadedScenario& s = fixtures::bundled();
    std::vector<Complex> zero(s.network->customer_count(), 0.0);
    const CaseSnapshot snap(s.network, 0, zero, std::vector<bool>(zero.size(), false));
    const PFSolution sol = solve_utpf(snap, snap.initial_assignment());
    CHECK(sol.iterations == 1);
    CHECK(sol.mismatch == 0.0);
    for (const Phasor3& v : sol.voltages) CHECK(v == s.network->root_voltage());
    for (const Phasor3& i : sol.line_currents) CHECK(i.cwiseAbs().maxCoeff() == 0.0);
    CHECK(power_balance_residual(sol, snap) == 0.0);
}

TEST_CASE("two-bus oracle: first sweep and fixed point") {
    auto net = fixtures::two_bus(fixtures::diag_z({0.1, 0.05}), {Phase::a});
    const CaseSnapshot snap = fixtures::snapshot(net, {Complex(0.01, 0.005)});
    // One linear pass with currents from the flat 1.05 profile.
    const EvaluationResult first = evaluate_fixv(snap, snap.initial_assignment(), flat_profile(*net));
    CHECK(std::abs(first.voltages[1][0] - Complex(1.0488095238095239, 0.0)) < 1e-15);

    const PFSolution sol = solve_utpf(snap, snap.initial_assignment());
    // Independent scalar fixed-point iteration V = V0 - z conj(s / V), run to convergence.
    const Complex oracle(1.048808170993924, 0.0);
    CHECK(std::abs(sol.voltages[1][0] - oracle) < 1e-10);
    CHECK(std::abs(sol.voltages[1][0] - first.voltages[1][0]) < 1e-4);
    CHECK(sol.voltages[0] == net->root_voltage());
    CHECK(sol.voltages[1][1] == net->root_voltage()[1]);
    CHECK(sol.mismatch <= 1e-8);
}

TEST_CASE("equal per-phase loads on a diagonal feeder keep magnitudes equal") {
    auto net = fixtures::two_bus(fixtures::diag_z({0.08, 0.03}), {Phase::a, Phase::b, Phase::c});
    const Complex s(0.02, 0.007);
    const CaseSnapshot snap = fixtures::snapshot(net, {s, s, s});
    const PFSolution sol = solve_utpf(snap, snap.initial_assignment());
    for (const Phasor3& v : sol.voltages) {
        CHECK(std::abs(std::abs(v[0]) - std::abs(v[1])) <= 1e-12);
        CHECK(std::abs(std::abs(v[0]) - std::abs(v[2])) <= 1e-12);
    }
}

TEST_CASE("bundled feeder: convergence, mismatch and conservation on every period") {
    const LoadedScenario& s = fixtures::bundled();
    for (std::size_t p = 0; p < s.periods(); ++p) {
        const CaseSnapshot snap = s.snapshot(p);
        const PFSolution sol = solve_utpf(snap, snap.initial_assignment());
        CHECK(sol.mismatch <= 1e-8);
        CHECK(sol.iterations < 60);
        CHECK(power_balance_residual(sol, snap) <= 1e-8);
        CHECK(sol.voltages[s.network->root()] == s.network->root_voltage());
    }
}

TEST_CASE("recorded mismatch is non-increasing over the last three iterations") {
    const LoadedScenario& s = fixtures::bundled();
    for (std::size_t p : {0u, 30u, 48u, 76u, 90u}) {
        const CaseSnapshot snap = s.snapshot(p);
        const PFSolution sol = solve_utpf(snap, snap.initial_assignment());
        const auto& h = sol.mismatch_history;
        REQUIRE(h.size() >= 3);
        for (std::size_t k = h.size() - 3; k + 1 < h.size(); ++k) CHECK(h[k + 1] <= h[k]);
    }
}

TEST_CASE("perturbed voltage breaks the power balance") {
    const LoadedScenario& s = fixtures::bundled();
    const CaseSnapshot snap = s.snapshot(76);
    PFSolution sol = solve_utpf(snap, snap.initial_assignment());
    REQUIRE(power_balance_residual(sol, snap) <= 1e-8);
    const std::size_t bus = s.network->topology().depth_order[s.network->bus_count() / 2];
    sol.voltages[bus][0] += 0.01;
    CHECK(power_balance_residual(sol, snap) > 1e-4);
}

TEST_CASE("phase relabel equivariance of the exact power flow") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        const fixtures::RandomCase rc = fixtures::random_case(rng, 3);
        const CaseSnapshot snap = rc.snapshot();
        const PhaseAssignment a = fixtures::random_assignment(rng, snap);
        const PFSolution base = solve_utpf(snap, a);
        const CaseSnapshot rel = fixtures::relabel(snap);
        const PFSolution rot = solve_utpf(rel, fixtures::relabel(a));
        for (std::size_t b = 0; b < base.voltages.size(); ++b)
            CHECK((fixtures::rotate(base.voltages[b]) - rot.voltages[b]).cwiseAbs().maxCoeff() <= 1e-12);
    }
    const LoadedScenario& s = fixtures::bundled();
    const CaseSnapshot snap = s.snapshot(76);
    const PFSolution base = solve_utpf(snap, snap.initial_assignment());
    const CaseSnapshot rel = fixtures::relabel(snap);
    const PFSolution rot = solve_utpf(rel, rel.initial_assignment());
    double worst = 0.0;
    for (std::size_t b = 0; b < base.voltages.size(); ++b)
        worst = std::max(worst, (fixtures::rotate(base.voltages[b]) - rot.voltages[b]).cwiseAbs().maxCoeff());
    CHECK(worst <= 1e-12);
}

TEST_CASE("solutions are bit-identical across threads") {
    const LoadedScenario& s = fixtures::bundled();
    const CaseSnapshot snap = s.snapshot(80);
    const PFSolution ref = solve_utpf(snap, snap.initial_assignment());
    std::vector<PFSolution> out(4);
    std::vector<std::thread> pool;
    for (auto& o : out) pool.emplace_back([&] { o = solve_utpf(snap, snap.initial_assignment()); });
    for (auto& t : pool) t.join();
    for (const auto& o : out) CHECK(bit_equal(ref, o));
}

TEST_CASE("iteration cap and voltage collapse are reported") {
    const LoadedScenario& s = fixtures::bundled();
    const CaseSnapshot snap = s.snapshot(76);
    PowerFlowOptions opt;
    opt.max_iterations = 2;
    try {
        (void)solve_utpf(snap, snap.initial_assignment(), {}, opt);
        FAIL("converged within two iterations");
    } catch (const ConvergenceError& e) {
        CHECK(e.iterations() == 2);
        CHECK(e.last_mismatch() > 1e-8);
    }

    auto net = fixtures::two_bus(fixtures::diag_z({0.1, 0.05}), {Phase::a});
    const CaseSnapshot heavy = fixtures::snapshot(net, {Complex(5.0, 2.0)});
    CHECK_THROWS_AS(solve_utpf(heavy, heavy.initial_assignment()), ConvergenceError);
}

TEST_CASE("Q settings shift the reactive demand of the customer") {
    auto net = fixtures::two_bus(fixtures::diag_z({0.1, 0.05}), {Phase::a});
    const CaseSnapshot snap(net, 0, {Complex(0.01, 0.005)}, {false}, {-0.002}, {0.002});
    const PFSolution adj = solve_utpf(snap, snap.initial_assignment(), {0.002});
    const CaseSnapshot moved = fixtures::snapshot(net, {Complex(0.01, 0.007)});
    const PFSolution ref = solve_utpf(moved, moved.initial_assignment());
    CHECK(std::abs(adj.voltages[1][0] - ref.voltages[1][0]) < 1e-14);
}
