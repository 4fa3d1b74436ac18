#include <cmath>

#include "internal.hpp"
#include "phasebal/formulations.hpp"

namespace phasebal {

Matrix3c lbfm_rotation(const Phasor3& root_voltage) {
    Matrix3c beta;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) {
            const Complex ur = root_voltage[r] / std::abs(root_voltage[r]);
            const Complex uc = root_voltage[c] / std::abs(root_voltage[c]);
            beta(r, c) = ur / uc;
        }
    return beta;
}

EvaluationResult evaluate_lbfm(const CaseSnapshot& snapshot, const PhaseAssignment& assignment, const QSettings& q) {
    validate_assignment(snapshot, assignment);
    const Network& net = snapshot.network();
    const TopologyReport& topo = net.topology();
    const std::size_t nb = net.bus_count();

    // Lossless flows: each line carries the demand connected below it.
    std::vector<Phasor3> bus_s(nb, Phasor3::Zero());
    for (std::size_t j = 0; j < net.customer_count(); ++j)
        bus_s[net.customers()[j].bus][index(assignment.phase(j))] += snapshot.effective_demand(j, q);
    std::vector<Phasor3> line_s(net.line_count(), Phasor3::Zero());
    for (auto b = topo.depth_order.rbegin(); b != topo.depth_order.rend(); ++b) {
        if (!topo.parent_line[*b]) continue;
        Phasor3 s = bus_s[*b];
        for (std::size_t l : topo.child_lines[*b]) s += line_s[l];
        line_s[*topo.parent_line[*b]] = s;
    }

    const Matrix3c beta = lbfm_rotation(net.root_voltage());
    EvaluationResult r;
    r.formulation = FormulationKind::lbfm;
    r.voltage_products.assign(nb, Matrix3c::Zero());
    r.voltage_products[net.root()] = net.root_voltage() * net.root_voltage().adjoint();
    for (std::size_t b : topo.depth_order)
        for (std::size_t l : topo.child_lines[b]) {
            const Matrix3c w = beta * line_s[l].asDiagonal() * net.lines()[l].z.adjoint();
            r.voltage_products[topo.downstream[l]] = r.voltage_products[b] - (w + w.adjoint());
        }

    r.vm.resize(nb);
    r.vneg.resize(nb);
    for (std::size_t b = 0; b < nb; ++b) {
        for (int p = 0; p < 3; ++p) r.vm[b][p] = std::sqrt(std::max(0.0, r.voltage_products[b](p, p).real()));
        r.vneg[b] = std::sqrt(std::max(0.0, negative_sequence_product(r.voltage_products[b])));
    }
    const Phasor3& s_dt = line_s[topo.dt_line];
    for (int p = 0; p < 3; ++p) {
        r.dt_p[p] = s_dt[p].real();
        r.dt_q[p] = s_dt[p].imag();
        r.dt_current[p] = std::abs(s_dt[p]) / std::abs(net.root_voltage()[p]);
    }
    r.unbalance = dt_unbalance(r.dt_p, r.dt_q);
    r.slacks = compute_lbfm_slacks(r.voltage_products, r.dt_current, net.limits());
    r.objective = objective_value(r.unbalance, r.slacks, net.limits().penalty);
    r.iterations = 1;
    return r;
}

}  // namespace phasebal
