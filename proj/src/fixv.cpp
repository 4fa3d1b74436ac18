#include "internal.hpp"
#include "phasebal/formulations.hpp"

namespace phasebal {

EvaluationResult evaluate_fixv(const CaseSnapshot& snapshot, const PhaseAssignment& assignment,
                               const VoltageProfile& profile, const QSettings& q) {
    validate_assignment(snapshot, assignment);
    const Network& net = snapshot.network();
    if (profile.size() != net.bus_count()) throw InputError("voltage profile does not cover every bus");
    for (std::size_t b = 0; b < profile.size(); ++b)
        for (int p = 0; p < 3; ++p)
            if (std::abs(profile[b][p]) == 0.0)
                throw SingularityError("fixed voltage of bus '" + net.buses()[b].id + "' is zero", 0.0);

    const std::size_t nc = net.customer_count();
    std::vector<Complex> current(nc);
    std::vector<std::size_t> phase(nc);
    for (std::size_t j = 0; j < nc; ++j) {
        phase[j] = index(assignment.phase(j));
        current[j] = std::conj(snapshot.effective_demand(j, q)) / std::conj(profile[net.customers()[j].bus][phase[j]]);
    }

    EvaluationResult r;
    r.formulation = FormulationKind::fixv;
    std::vector<Phasor3> line_currents;
    detail::linear_sweep(net, detail::bus_injections(net, current, phase), r.voltages, line_currents);
    const Phasor3& i_dt = line_currents[net.topology().dt_line];
    for (int p = 0; p < 3; ++p) {
        const Complex s = net.root_voltage()[p] * std::conj(i_dt[p]);
        r.dt_p[p] = s.real();
        r.dt_q[p] = s.imag();
        r.dt_current[p] = std::abs(i_dt[p]);
    }
    r.iterations = 1;
    detail::finish_evaluation(net, r, SlackMode::exact);
    return r;
}

}  // namespace phasebal
