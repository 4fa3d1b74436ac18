#pragma once

#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "phasebal/netmodel.hpp"
#include "phasebal/sweep.hpp"

namespace fixtures {

using namespace phasebal;

inline std::filesystem::path data_dir() { return PHASEBAL_DATA_DIR; }
inline std::filesystem::path feeder_dir() { return data_dir() / "european_lv_feeder"; }

inline const LoadedScenario& bundled() {
    static const LoadedScenario s = [] {
        SweepConfig cfg = load_sweep_config(data_dir() / "scenario.json");
        return load_scenario(cfg.scenario);
    }();
    return s;
}

inline const LoadedScenario& bundled_pv_q() {
    static const LoadedScenario s = [] {
        SweepConfig cfg = load_sweep_config(data_dir() / "scenario.json");
        cfg.scenario.options.pv_q_control = true;
        return load_scenario(cfg.scenario);
    }();
    return s;
}

inline Matrix3c diag_z(Complex z) { return Matrix3c(Phasor3(z, z, z).asDiagonal()); }

/// Root "1" feeding bus "2" through one line; one customer per entry of phases.
inline std::shared_ptr<const Network> two_bus(const Matrix3c& z, const std::vector<Phase>& phases) {
    NetworkData d;
    d.buses = {{"1", 0, 0}, {"2", 1, 0}};
    Line l;
    l.id = "L1";
    l.from = 0;
    l.to = 1;
    l.z = z;
    d.lines = {l};
    for (std::size_t j = 0; j < phases.size(); ++j) {
        Customer c;
        c.id = static_cast<int>(j + 1);
        c.name = "load" + std::to_string(j + 1);
        c.bus = 1;
        c.phase = phases[j];
        d.customers.push_back(c);
    }
    return std::make_shared<const Network>(std::move(d));
}

inline CaseSnapshot snapshot(std::shared_ptr<const Network> net, std::vector<Complex> demand,
                             std::vector<bool> adjustable = {}) {
    if (adjustable.empty()) adjustable.assign(demand.size(), false);
    return CaseSnapshot(std::move(net), 0, std::move(demand), std::move(adjustable));
}

/// Random radial feeder with LV-like impedances (mutual coupling included),
/// mixed demand and export, and `adjustable` switchable customers.
struct RandomCase {
    std::shared_ptr<const Network> network;
    std::vector<Complex> demand;
    std::vector<bool> adjustable;
    std::vector<double> q_min, q_max;

    CaseSnapshot snapshot() const { return CaseSnapshot(network, 0, demand, adjustable, q_min, q_max); }
};

inline RandomCase random_case(std::mt19937_64& rng, std::size_t adjustable, std::size_t buses = 0,
                              std::size_t customers = 0, bool tight_limits = false) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto uni = [&](double a, double b) { return a + (b - a) * u(rng); };
    if (buses == 0) buses = 4 + rng() % 9;
    if (customers == 0) customers = adjustable + 2 + rng() % 6;

    NetworkData d;
    for (std::size_t b = 0; b < buses; ++b) d.buses.push_back({"b" + std::to_string(b), double(b), 0.0});
    for (std::size_t b = 1; b < buses; ++b) {
        Line l;
        l.id = "l" + std::to_string(b);
        l.from = b == 1 ? 0 : 1 + rng() % (b - 1);
        l.to = b;
        const Complex zs(uni(0.004, 0.03), uni(0.002, 0.012));
        const Complex zm = zs * uni(0.1, 0.4);
        l.z = Matrix3c::Constant(zm);
        l.z.diagonal().setConstant(zs);
        d.lines.push_back(l);
    }
    RandomCase rc;
    for (std::size_t j = 0; j < customers; ++j) {
        Customer c;
        c.id = static_cast<int>(j + 1);
        c.name = "c" + std::to_string(j + 1);
        c.bus = 1 + rng() % (buses - 1);
        c.phase = phase_from_index(rng() % 3);
        d.customers.push_back(c);
        const double p = u(rng) < 0.2 ? -uni(0.0, 0.05) : uni(0.002, 0.06);
        rc.demand.emplace_back(p, std::abs(p) * uni(0.0, 0.4));
    }
    if (tight_limits) {
        d.limits.v_min = 1.03;
        d.limits.nu = 0.002;
        d.limits.i_max = {0.08, 0.08, 0.08};
    }
    rc.adjustable.assign(customers, false);
    std::vector<std::size_t> order(customers);
    for (std::size_t j = 0; j < customers; ++j) order[j] = j;
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t k = 0; k < std::min(adjustable, customers); ++k) rc.adjustable[order[k]] = true;
    rc.q_min.assign(customers, 0.0);
    rc.q_max.assign(customers, 0.0);
    rc.network = std::make_shared<const Network>(std::move(d));
    return rc;
}

/// Cyclic relabel a -> b -> c -> a applied to a phasor.
inline Phasor3 rotate(const Phasor3& v) {
    Phasor3 out;
    for (int p = 0; p < 3; ++p) out[(p + 1) % 3] = v[p];
    return out;
}

inline Matrix3c rotate(const Matrix3c& z) {
    Matrix3c out;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) out((r + 1) % 3, (c + 1) % 3) = z(r, c);
    return out;
}

template <class T>
std::array<T, 3> rotate(const std::array<T, 3>& v) {
    std::array<T, 3> out;
    for (int p = 0; p < 3; ++p) out[(p + 1) % 3] = v[p];
    return out;
}

/// Every phase-indexed input relabelled: root voltage, impedances, limits, customer phases.
inline std::shared_ptr<const Network> relabel(const Network& net) {
    NetworkData d = net.data();
    d.root_voltage = rotate(d.root_voltage);
    for (Line& l : d.lines) l.z = rotate(l.z);
    for (Customer& c : d.customers) c.phase = phasebal::rotate(c.phase);
    d.limits.i_max = rotate(d.limits.i_max);
    d.limits.angle_center = rotate(d.limits.angle_center);
    return std::make_shared<const Network>(std::move(d));
}

inline CaseSnapshot relabel(const CaseSnapshot& s) {
    return CaseSnapshot(relabel(s.network()), s.period(), s.demand(), s.adjustable(), s.q_min(), s.q_max());
}

inline PhaseAssignment relabel(const PhaseAssignment& a) {
    std::vector<Phase> p = a.phases();
    for (Phase& x : p) x = phasebal::rotate(x);
    return PhaseAssignment::from_phases(p);
}

inline PhaseAssignment random_assignment(std::mt19937_64& rng, const CaseSnapshot& s) {
    std::vector<Phase> p = s.initial_assignment().phases();
    for (std::size_t j = 0; j < p.size(); ++j)
        if (s.adjustable()[j]) p[j] = phase_from_index(rng() % 3);
    return PhaseAssignment::from_phases(p);
}

}  // namespace fixtures
