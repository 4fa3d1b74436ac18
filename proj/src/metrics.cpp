#include <algorithm>
#include <cmath>

#include "internal.hpp"
#include "phasebal/formulations.hpp"

namespace phasebal {

std::string_view to_string(FormulationKind kind) {
    switch (kind) {
        case FormulationKind::utpf: return "utpf";
        case FormulationKind::fixv: return "fixv";
        case FormulationKind::linv: return "linv";
        case FormulationKind::lbfm: return "lbfm";
    }
    return "?";
}

double Slacks::total() const {
    double s = 0.0;
    for (double t : tau_minus) s += t;
    for (double t : tau_plus) s += t;
    for (double r : rho) s += r;
    for (double w : omega_minus) s += w;
    return s;
}

double objective_value(double unbalance, const Slacks& slacks, double penalty) {
    return unbalance + penalty * slacks.total();
}

Complex negative_sequence(const Phasor3& v) { return (v[0] + kChi * v[1] + kChi * kChi * v[2]) / 3.0; }

double dt_unbalance(const std::array<double, 3>& p, const std::array<double, 3>& q) {
    auto range = [](const std::array<double, 3>& x) {
        return std::max({x[0], x[1], x[2]}) - std::min({x[0], x[1], x[2]});
    };
    return std::max(range(p), range(q));
}

SlackMode parse_slack_mode(std::string_view text) {
    if (text == "exact") return SlackMode::exact;
    if (text == "linearized") return SlackMode::linearized;
    throw InputError("unknown slack mode '" + std::string(text) + "'");
}

Slacks compute_slacks(std::span<const Phasor3> voltages, const std::array<double, 3>& dt_current, const Limits& limits,
                      SlackMode mode) {
    Slacks s;
    const std::size_t n = voltages.size();
    s.tau_minus.assign(n, 0.0);
    s.tau_plus.assign(n, 0.0);
    s.omega_minus.assign(n, 0.0);
    std::array<double, 3> cos_d{}, sin_d{};
    for (int p = 0; p < 3; ++p) {
        cos_d[p] = std::cos(limits.angle_center[p]);
        sin_d[p] = std::sin(limits.angle_center[p]);
    }
    for (std::size_t i = 0; i < n; ++i) {
        double lo = 0.0, hi = 0.0;
        for (int p = 0; p < 3; ++p) {
            const Complex v = voltages[i][p];
            const double m = std::abs(v);
            const double low_test = mode == SlackMode::exact ? m : v.real() * cos_d[p] + v.imag() * sin_d[p];
            lo = std::max(lo, limits.v_min - low_test);
            hi = std::max(hi, m - limits.v_max);
        }
        s.tau_minus[i] = lo;
        s.tau_plus[i] = hi;
        s.omega_minus[i] = std::max(0.0, std::abs(negative_sequence(voltages[i])) - limits.nu);
    }
    for (int p = 0; p < 3; ++p) s.rho[p] = std::max(0.0, dt_current[p] - limits.i_max[p]);
    return s;
}

double negative_sequence_product(const Matrix3c& v) {
    Eigen::RowVector3cd a(1.0, kChi, kChi * kChi);
    return (a * v * a.adjoint())(0, 0).real() / 9.0;
}

Slacks compute_lbfm_slacks(std::span<const Matrix3c> products, const std::array<double, 3>& dt_current,
                           const Limits& limits) {
    Slacks s;
    const std::size_t n = products.size();
    s.tau_minus.assign(n, 0.0);
    s.tau_plus.assign(n, 0.0);
    s.omega_minus.assign(n, 0.0);
    const double lo2 = limits.v_min * limits.v_min, hi2 = limits.v_max * limits.v_max;
    for (std::size_t i = 0; i < n; ++i) {
        double lo = 0.0, hi = 0.0;
        for (int p = 0; p < 3; ++p) {
            const double d = products[i](p, p).real();
            lo = std::max(lo, lo2 - d);
            hi = std::max(hi, d - hi2);
        }
        s.tau_minus[i] = lo;
        s.tau_plus[i] = hi;
        s.omega_minus[i] = std::max(0.0, negative_sequence_product(products[i]) - limits.nu * limits.nu);
    }
    for (int p = 0; p < 3; ++p) s.rho[p] = std::max(0.0, dt_current[p] - limits.i_max[p]);
    return s;
}

VoltageProfile flat_profile(const Network& network) { return VoltageProfile(network.bus_count(), network.root_voltage()); }

namespace detail {

std::vector<Phasor3> bus_injections(const Network& net, const std::vector<Complex>& customer_current,
                                    const std::vector<std::size_t>& phase) {
    std::vector<Phasor3> inj(net.bus_count(), Phasor3::Zero());
    for (std::size_t j = 0; j < customer_current.size(); ++j)
        inj[net.customers()[j].bus][phase[j]] += customer_current[j];
    return inj;
}

void linear_sweep(const Network& net, const std::vector<Phasor3>& injection, std::vector<Phasor3>& voltages,
                  std::vector<Phasor3>& line_currents) {
    const TopologyReport& topo = net.topology();
    line_currents.assign(net.line_count(), Phasor3::Zero());
    voltages.assign(net.bus_count(), net.root_voltage());
    for (auto b = topo.depth_order.rbegin(); b != topo.depth_order.rend(); ++b) {
        if (!topo.parent_line[*b]) continue;
        Phasor3 i = injection[*b];
        for (std::size_t l : topo.child_lines[*b]) i += line_currents[l];
        line_currents[*topo.parent_line[*b]] = i;
    }
    for (std::size_t b : topo.depth_order)
        for (std::size_t l : topo.child_lines[b])
            voltages[topo.downstream[l]] = voltages[b] - net.lines()[l].z * line_currents[l];
}

void finish_evaluation(const Network& net, EvaluationResult& r, SlackMode mode) {
    const std::size_t n = r.voltages.size();
    r.vm.resize(n);
    r.vneg.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (int p = 0; p < 3; ++p) r.vm[i][p] = std::abs(r.voltages[i][p]);
        r.vneg[i] = std::abs(negative_sequence(r.voltages[i]));
    }
    r.unbalance = dt_unbalance(r.dt_p, r.dt_q);
    r.slacks = compute_slacks(r.voltages, r.dt_current, net.limits(), mode);
    r.objective = objective_value(r.unbalance, r.slacks, net.limits().penalty);
}

}  // namespace detail

EvaluationResult evaluation_from_solution(const CaseSnapshot& snapshot, const PFSolution& solution) {
    const Network& net = snapshot.network();
    EvaluationResult r;
    r.formulation = FormulationKind::utpf;
    r.voltages = solution.voltages;
    const Phasor3& i_dt = solution.line_currents[net.topology().dt_line];
    for (int p = 0; p < 3; ++p) {
        r.dt_p[p] = solution.dt_power[p].real();
        r.dt_q[p] = solution.dt_power[p].imag();
        r.dt_current[p] = std::abs(i_dt[p]);
    }
    r.residual = solution.mismatch;
    r.iterations = solution.iterations;
    detail::finish_evaluation(net, r, SlackMode::exact);
    return r;
}

EvaluationResult evaluate_utpf(const CaseSnapshot& snapshot, const PhaseAssignment& assignment, const QSettings& q,
                               const PowerFlowOptions& options) {
    return evaluation_from_solution(snapshot, solve_utpf(snapshot, assignment, q, options));
}

FormulationSpec FormulationSpec::fixv(VoltageProfile profile) {
    return {FormulationKind::fixv, std::make_shared<const VoltageProfile>(std::move(profile)), nullptr};
}

FormulationSpec FormulationSpec::linv(AffineFit fit) {
    return {FormulationKind::linv, nullptr, std::make_shared<const AffineFit>(std::move(fit))};
}

EvaluationResult evaluate(const FormulationSpec& spec, const CaseSnapshot& snapshot, const PhaseAssignment& assignment,
                          const QSettings& q) {
    switch (spec.kind) {
        case FormulationKind::utpf: return evaluate_utpf(snapshot, assignment, q);
        case FormulationKind::fixv:
            if (!spec.profile) throw InputError("fixed-voltage formulation needs a voltage profile");
            return evaluate_fixv(snapshot, assignment, *spec.profile, q);
        case FormulationKind::linv:
            if (!spec.fit) throw InputError("affine formulation needs a fit");
            return evaluate_linv(snapshot, assignment, *spec.fit, q);
        case FormulationKind::lbfm: return evaluate_lbfm(snapshot, assignment, q);
    }
    throw InputError("unknown formulation");
}

}  // namespace phasebal
