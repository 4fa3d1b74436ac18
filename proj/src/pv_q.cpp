#include <cmath>

#include "phasebal/optimizer.hpp"

namespace phasebal {

PvQResult optimize_pv_q(const CaseSnapshot& snapshot, const PhaseAssignment& assignment, const FormulationSpec& spec,
                        const QSettings& start, const PvQOptions& options) {
    const std::size_t nc = snapshot.network().customer_count();
    PvQResult out;
    out.q = start.empty() ? QSettings(nc, 0.0) : start;
    if (out.q.size() != nc) throw InputError("Q settings do not match the customer count");
    for (std::size_t j = 0; j < nc; ++j)
        if (out.q[j] < snapshot.q_min()[j] || out.q[j] > snapshot.q_max()[j])
            throw InputError("starting Q setting outside its bounds");

    auto f = [&](const QSettings& q) {
        ++out.evaluations;
        return evaluate(spec, snapshot, assignment, q).objective;
    };
    double current = f(out.q);
    out.initial_objective = current;
    const std::vector<std::size_t> coords = snapshot.q_controllable_customers();
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;

    for (int sweep = 0; sweep < options.max_sweeps && !coords.empty(); ++sweep) {
        const double before = current;
        for (std::size_t j : coords) {
            QSettings trial = out.q;
            double best_x = out.q[j], best_f = current;
            auto probe = [&](double x) {
                trial[j] = x;
                const double v = f(trial);
                if (v < best_f) {
                    best_f = v;
                    best_x = x;
                }
                return v;
            };
            double a = snapshot.q_min()[j], b = snapshot.q_max()[j];
            probe(a);
            probe(b);
            double c = b - g * (b - a), d = a + g * (b - a);
            double fc = probe(c), fd = probe(d);
            for (int it = 0; it < options.max_golden_iterations && b - a > 1e-15; ++it) {
                if (fc < fd) {
                    b = d;
                    d = c;
                    fd = fc;
                    c = b - g * (b - a);
                    fc = probe(c);
                } else {
                    a = c;
                    c = d;
                    fc = fd;
                    d = a + g * (b - a);
                    fd = probe(d);
                }
            }
            if (best_f < current) {
                out.q[j] = best_x;
                current = best_f;
            }
        }
        ++out.sweeps;
        if (before - current < options.sweep_tolerance) break;
    }
    out.evaluation = evaluate(spec, snapshot, assignment, out.q);
    return out;
}

}  // namespace phasebal
