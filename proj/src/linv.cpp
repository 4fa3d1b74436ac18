#include <cmath>
#include <sstream>

#include "internal.hpp"
#include "phasebal/formulations.hpp"

namespace phasebal {

Complex AffineFit::apply(Phase p, Complex v) const {
    const Coefficients& c = phase[index(p)];
    return {c.kx * v.real() + c.ky * v.imag() + c.bx, c.hx * v.real() + c.hy * v.imag() + c.by};
}

FitDomain FitDomain::from_limits(const Limits& limits, int grid) {
    FitDomain d;
    d.vm_min = limits.v_min;
    d.vm_max = limits.v_max;
    d.angle_center = limits.angle_center;
    d.angle_window = limits.angle_window;
    d.grid = grid;
    return d;
}

std::array<std::vector<Complex>, 3> grid_samples(const FitDomain& domain, int points_per_axis) {
    if (points_per_axis < 2) throw InputError("fit grid needs at least 2 points per axis");
    std::array<std::vector<Complex>, 3> out;
    const double n1 = points_per_axis - 1;
    for (int p = 0; p < 3; ++p) {
        for (int i = 0; i < points_per_axis; ++i) {
            const double m = domain.vm_min + (domain.vm_max - domain.vm_min) * i / n1;
            for (int k = 0; k < points_per_axis; ++k) {
                const double a = domain.angle_center[p] - domain.angle_window + 2.0 * domain.angle_window * k / n1;
                out[p].push_back(std::polar(m, a));
            }
        }
    }
    return out;
}

AffineFit fit_inverse_voltage(const std::array<std::vector<Complex>, 3>& samples) {
    AffineFit fit;
    for (int p = 0; p < 3; ++p) {
        const auto& v = samples[p];
        const Eigen::Index n = static_cast<Eigen::Index>(v.size());
        if (n < 3) throw InputError("affine fit needs at least 3 samples per phase");
        Eigen::MatrixX3d design(n, 3);
        Eigen::VectorXd re(n), im(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            design.row(i) << v[i].real(), v[i].imag(), 1.0;
            const Complex target = 1.0 / std::conj(v[i]);
            re[i] = target.real();
            im[i] = target.imag();
        }
        Eigen::ColPivHouseholderQR<Eigen::MatrixX3d> qr(design);
        qr.setThreshold(1e-10);
        if (qr.rank() < 3)
            throw InputError("affine fit samples of phase " + std::string(1, phase_letter(phase_from_index(p))) +
                             " are rank deficient");
        const Eigen::Vector3d a = qr.solve(re), b = qr.solve(im);
        fit.phase[p] = {a[0], a[1], a[2], b[0], b[1], b[2]};
    }
    fit.max_residual = max_fit_error(fit, samples);
    fit.domain = "samples";
    return fit;
}

AffineFit fit_inverse_voltage(const FitDomain& domain) {
    AffineFit fit = fit_inverse_voltage(grid_samples(domain, domain.grid));
    std::ostringstream d;
    d << "grid " << domain.grid << "x" << domain.grid << ", |V| in [" << domain.vm_min << ", " << domain.vm_max
      << "], angle window " << domain.angle_window << " rad";
    fit.domain = d.str();
    return fit;
}

double max_fit_error(const AffineFit& fit, const std::array<std::vector<Complex>, 3>& samples) {
    double worst = 0.0;
    for (int p = 0; p < 3; ++p)
        for (Complex v : samples[p])
            worst = std::max(worst, std::abs(fit.apply(phase_from_index(p), v) - 1.0 / std::conj(v)));
    return worst;
}

namespace detail {

AffineCurrent affine_current(Complex s, const AffineFit::Coefficients& c) {
    const double P = s.real(), Q = s.imag();
    AffineCurrent a;
    a.d_matrix << P * c.kx + Q * c.hx, P * c.ky + Q * c.hy,  //
        P * c.hx - Q * c.kx, P * c.hy - Q * c.ky;
    a.offset << P * c.bx + Q * c.by, P * c.by - Q * c.bx;
    return a;
}

LinearLoadTree::LinearLoadTree(const Network& net, std::vector<Mat6> bus_a)
    : net_(net), bus_a_(std::move(bus_a)), z_(net.line_count()), inv_(net.line_count()), t_(net.line_count()) {
    const TopologyReport& topo = net.topology();
    for (std::size_t l = 0; l < net.line_count(); ++l) z_[l] = real_block(net.lines()[l].z);
    std::vector<Mat6> agg(net.bus_count());
    for (auto it = topo.depth_order.rbegin(); it != topo.depth_order.rend(); ++it) {
        const std::size_t b = *it;
        Mat6 a = bus_a_[b];
        for (std::size_t l : topo.child_lines[b]) a += t_[l];
        if (!topo.parent_line[b]) continue;
        const std::size_t l = *topo.parent_line[b];
        Eigen::PartialPivLU<Mat6> lu(Mat6::Identity() + a * z_[l]);
        double rc = lu.rcond();
        if (!std::isfinite(rc)) rc = 0.0;  // exact zero pivot
        min_rcond_ = std::min(min_rcond_, rc);
        if (!(rc > 1e-14)) throw SingularityError("affine load system is singular at line '" + net.lines()[l].id + "'", rc);
        inv_[l] = lu.inverse();
        t_[l] = inv_[l] * a;
    }
}

std::vector<Vec6> LinearLoadTree::solve(const std::vector<Vec6>& bus_c, const Vec6& root,
                                        std::vector<Vec6>* line_currents) const {
    const TopologyReport& topo = net_.topology();
    std::vector<Vec6> t(net_.line_count());
    for (auto it = topo.depth_order.rbegin(); it != topo.depth_order.rend(); ++it) {
        const std::size_t b = *it;
        if (!topo.parent_line[b]) continue;
        Vec6 c = bus_c[b];
        for (std::size_t l : topo.child_lines[b]) c += t[l];
        t[*topo.parent_line[b]] = inv_[*topo.parent_line[b]] * c;
    }
    std::vector<Vec6> x(net_.bus_count());
    x[net_.root()] = root;
    if (line_currents) line_currents->assign(net_.line_count(), Vec6::Zero());
    for (std::size_t b : topo.depth_order)
        for (std::size_t l : topo.child_lines[b]) {
            const Vec6 i = t_[l] * x[b] + t[l];
            x[topo.downstream[l]] = x[b] - z_[l] * i;
            if (line_currents) (*line_currents)[l] = i;
        }
    return x;
}

}  // namespace detail

EvaluationResult evaluate_linv(const CaseSnapshot& snapshot, const PhaseAssignment& assignment, const AffineFit& fit,
                               const QSettings& q) {
    using detail::Mat6;
    using detail::Vec6;
    validate_assignment(snapshot, assignment);
    const Network& net = snapshot.network();
    const std::size_t nb = net.bus_count(), nc = net.customer_count();

    std::vector<Mat6> a(nb, Mat6::Zero());
    std::vector<Vec6> c(nb, Vec6::Zero());
    std::vector<detail::AffineCurrent> load(nc);
    std::vector<std::size_t> phase(nc);
    for (std::size_t j = 0; j < nc; ++j) {
        phase[j] = index(assignment.phase(j));
        load[j] = detail::affine_current(snapshot.effective_demand(j, q), fit.phase[phase[j]]);
        const std::size_t b = net.customers()[j].bus;
        const Eigen::Index p = static_cast<Eigen::Index>(phase[j]);
        const Eigen::Index rows[2] = {p, p + 3};
        for (int r = 0; r < 2; ++r) {
            for (int k = 0; k < 2; ++k) a[b](rows[r], rows[k]) += load[j].d_matrix(r, k);
            c[b][rows[r]] += load[j].offset[r];
        }
    }

    const detail::LinearLoadTree tree(net, std::move(a));
    const std::vector<Vec6> x = tree.solve(c, detail::to_real(net.root_voltage()));

    EvaluationResult r;
    r.formulation = FormulationKind::linv;
    r.voltages.resize(nb);
    for (std::size_t b = 0; b < nb; ++b) r.voltages[b] = detail::from_real(x[b]);

    // Re-derive currents from the solved voltages and check Ohm's law on every line.
    std::vector<Complex> current(nc);
    for (std::size_t j = 0; j < nc; ++j)
        current[j] = std::conj(snapshot.effective_demand(j, q)) *
                     fit.apply(phase_from_index(phase[j]), r.voltages[net.customers()[j].bus][phase[j]]);
    std::vector<Phasor3> check_v, line_currents;
    detail::linear_sweep(net, detail::bus_injections(net, current, phase), check_v, line_currents);
    const TopologyReport& topo = net.topology();
    double residual = 0.0;
    for (std::size_t l = 0; l < net.line_count(); ++l) {
        const Phasor3 ohm = r.voltages[topo.upstream[l]] - net.lines()[l].z * line_currents[l];
        residual = std::max(residual, (ohm - r.voltages[topo.downstream[l]]).cwiseAbs().maxCoeff());
    }
    r.residual = residual;

    const Phasor3& i_dt = line_currents[topo.dt_line];
    for (int p = 0; p < 3; ++p) {
        const Complex s = net.root_voltage()[p] * std::conj(i_dt[p]);
        r.dt_p[p] = s.real();
        r.dt_q[p] = s.imag();
        r.dt_current[p] = std::abs(i_dt[p]);
    }
    r.iterations = 1;
    detail::finish_evaluation(net, r, SlackMode::linearized);
    return r;
}

}  // namespace phasebal
