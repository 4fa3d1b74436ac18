#include "phasebal/powerflow.hpp"

#include <cmath>
#include <sstream>

namespace phasebal {

Phasor3 customer_current(Complex s, Complex v, Phase connected) {
    Phasor3 i = Phasor3::Zero();
    if (s == Complex(0.0, 0.0)) return i;
    if (std::abs(v) == 0.0) throw SingularityError("zero voltage on the connected phase", 0.0);
    i[index(connected)] = std::conj(s) / std::conj(v);
    return i;
}

PFSolution solve_utpf(const CaseSnapshot& snapshot, const PhaseAssignment& assignment, const QSettings& q,
                      const PowerFlowOptions& options) {
    validate_assignment(snapshot, assignment);
    const Network& net = snapshot.network();
    const TopologyReport& topo = net.topology();
    const std::size_t nb = net.bus_count();
    const std::size_t nc = net.customer_count();

    std::vector<Complex> s(nc);
    std::vector<std::size_t> phase(nc);
    PFSolution sol;
    for (std::size_t j = 0; j < nc; ++j) {
        s[j] = snapshot.effective_demand(j, q);
        phase[j] = index(assignment.phase(j));
        sol.total_load += s[j];
    }

    sol.voltages.assign(nb, net.root_voltage());
    sol.line_currents.assign(net.line_count(), Phasor3::Zero());
    std::vector<Complex> load_current(nc, Complex(0.0, 0.0));
    std::vector<Phasor3> injection(nb);

    for (int it = 1; it <= options.max_iterations; ++it) {
        double delta = 0.0;
        for (std::size_t j = 0; j < nc; ++j) {
            const Complex v = sol.voltages[net.customers()[j].bus][phase[j]];
            const Complex i = s[j] == Complex(0.0, 0.0) ? Complex(0.0, 0.0) : std::conj(s[j] / v);
            delta = std::max(delta, std::abs(i - load_current[j]));
            load_current[j] = i;
        }

        // Backward: aggregate currents towards the root.
        for (auto& inj : injection) inj.setZero();
        for (std::size_t j = 0; j < nc; ++j) injection[net.customers()[j].bus][phase[j]] += load_current[j];
        for (auto b = topo.depth_order.rbegin(); b != topo.depth_order.rend(); ++b) {
            if (!topo.parent_line[*b]) continue;
            Phasor3 i = injection[*b];
            for (std::size_t l : topo.child_lines[*b]) i += sol.line_currents[l];
            sol.line_currents[*topo.parent_line[*b]] = i;
        }
        // Forward: Ohm's law from the root.
        for (std::size_t b : topo.depth_order) {
            for (std::size_t l : topo.child_lines[b]) {
                const std::size_t to = topo.downstream[l];
                sol.voltages[to] = sol.voltages[b] - net.lines()[l].z * sol.line_currents[l];
            }
        }

        double mismatch = 0.0;
        double vmin = std::numeric_limits<double>::infinity();
        for (std::size_t b = 0; b < nb; ++b) vmin = std::min(vmin, sol.voltages[b].cwiseAbs().minCoeff());
        for (std::size_t j = 0; j < nc; ++j) {
            const Complex v = sol.voltages[net.customers()[j].bus][phase[j]];
            mismatch += std::abs(v * std::conj(load_current[j]) - s[j]);
        }
        sol.iterations = it;
        sol.mismatch = mismatch;
        sol.mismatch_history.push_back(mismatch);
        if (!(vmin >= options.collapse_guard)) {
            std::ostringstream msg;
            msg << "voltage collapse: |V| = " << vmin << " p.u. below guard " << options.collapse_guard
                << " at iteration " << it;
            throw ConvergenceError(msg.str(), it, mismatch);
        }
        if (delta <= options.tolerance && mismatch <= options.tolerance) break;
        if (it == options.max_iterations) {
            std::ostringstream msg;
            msg << "power flow did not converge in " << it << " iterations (mismatch " << mismatch << " p.u.)";
            throw ConvergenceError(msg.str(), it, mismatch);
        }
    }

    const Phasor3& i_dt = sol.line_currents[topo.dt_line];
    for (int p = 0; p < 3; ++p) sol.dt_power[p] = net.root_voltage()[p] * std::conj(i_dt[p]);
    return sol;
}

double power_balance_residual(const PFSolution& solution, const CaseSnapshot& snapshot) {
    // Line currents are recovered from the voltages through Ohm's law, so an
    // inconsistent voltage anywhere shows up in the balance.
    const Network& net = snapshot.network();
    const TopologyReport& topo = net.topology();
    Complex injected(0.0, 0.0), losses(0.0, 0.0);
    for (std::size_t l = 0; l < net.line_count(); ++l) {
        const Phasor3 dv = solution.voltages[topo.upstream[l]] - solution.voltages[topo.downstream[l]];
        const Phasor3 i = net.lines()[l].z.partialPivLu().solve(dv);
        losses += dv.dot(i);  // conj(dv) . i, conjugated after the loop
        if (l == topo.dt_line)
            for (int p = 0; p < 3; ++p) injected += solution.voltages[net.root()][p] * std::conj(i[p]);
    }
    losses = std::conj(losses);
    return std::abs(injected - solution.total_load - losses);
}

}  // namespace phasebal
