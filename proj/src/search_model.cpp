#include "phasebal/search_model.hpp"

#include <cmath>

#include "internal.hpp"

namespace phasebal {

namespace {

constexpr double kWatchMargin = 1e-9;

class StackCursor final : public SearchCursor {
public:
    explicit StackCursor(const SearchModel& model) : model_(model) { stack_.reserve(model.size()); }
    void push(std::uint8_t phase) override { stack_.push_back(phase); }
    void pop() override { stack_.pop_back(); }
    double objective() override { return model_.objective(stack_); }
    double objective_above(double cutoff) override { return model_.objective_above(stack_, cutoff); }

private:
    const SearchModel& model_;
    std::vector<std::uint8_t> stack_;
};

// Full re-evaluation per candidate; used for the exact power flow.
class GenericModel final : public SearchModel {
public:
    GenericModel(const FormulationSpec& spec, const CaseSnapshot& snapshot, QSettings q)
        : SearchModel(snapshot.adjustable_customers()), spec_(spec), snapshot_(snapshot), q_(std::move(q)) {}

    double objective(std::span<const std::uint8_t> phases) const override {
        return evaluate(spec_, snapshot_, expand_phases(snapshot_, *this, phases), q_).objective;
    }

private:
    FormulationSpec spec_;
    const CaseSnapshot& snapshot_;
    QSettings q_;
};

// State = base + sum of per-(customer, phase) deltas. The state vector holds
// the transformer quantities first and then a fixed block per watched bus.
class SuperpositionModel : public SearchModel {
public:
    SuperpositionModel(std::vector<std::size_t> customers, std::size_t dt_dim, std::size_t bus_dim)
        : SearchModel(std::move(customers)), dt_dim_(dt_dim), bus_dim_(bus_dim) {}

    double objective(std::span<const std::uint8_t> phases) const override {
        std::vector<double> state = base_;
        for (std::size_t k = 0; k < phases.size(); ++k) add(state.data(), state.data(), k, phases[k]);
        return leaf(state.data());
    }

    std::unique_ptr<SearchCursor> cursor() const override { return std::make_unique<Cursor>(*this); }
    const DtDecomposition* dt_decomposition() const override { return &decomposition_; }

    std::size_t watched() const { return watched_.size(); }

protected:
    virtual double leaf(const double* state) const = 0;

    void add(double* out, const double* in, std::size_t k, std::uint8_t phase) const {
        const double* d = delta_[k * 3 + phase].data();
        for (std::size_t i = 0; i < base_.size(); ++i) out[i] = in[i] + d[i];
    }

    // full_base / full_delta hold one bus block per network bus; keep only watched buses.
    void compact(const std::vector<double>& full_base, const std::vector<std::vector<double>>& full_delta,
                 const std::vector<bool>& watch) {
        for (std::size_t b = 0; b < watch.size(); ++b)
            if (watch[b]) watched_.push_back(b);
        auto pick = [&](const std::vector<double>& full) {
            std::vector<double> out(full.begin(), full.begin() + static_cast<std::ptrdiff_t>(dt_dim_));
            for (std::size_t b : watched_)
                for (std::size_t i = 0; i < bus_dim_; ++i) out.push_back(full[dt_dim_ + b * bus_dim_ + i]);
            return out;
        };
        base_ = pick(full_base);
        delta_.clear();
        for (const auto& d : full_delta) delta_.push_back(pick(d));
    }

    std::size_t dt_dim_, bus_dim_;
    std::vector<std::size_t> watched_;
    std::vector<double> base_;
    std::vector<std::vector<double>> delta_;
    DtDecomposition decomposition_;

private:
    class Cursor final : public SearchCursor {
    public:
        explicit Cursor(const SuperpositionModel& m)
            : m_(m), width_(m.base_.size()), levels_((m.size() + 1) * width_) {
            std::copy(m.base_.begin(), m.base_.end(), levels_.begin());
        }
        void push(std::uint8_t phase) override {
            m_.add(&levels_[(depth_ + 1) * width_], &levels_[depth_ * width_], depth_, phase);
            ++depth_;
        }
        void pop() override { --depth_; }
        double objective() override { return m_.leaf(&levels_[depth_ * width_]); }

    private:
        const SuperpositionModel& m_;
        std::size_t width_;
        std::vector<double> levels_;
        std::size_t depth_ = 0;
    };
};

double pi_of(const double* p, const double* q) {
    const double rp = std::max({p[0], p[1], p[2]}) - std::min({p[0], p[1], p[2]});
    const double rq = std::max({q[0], q[1], q[2]}) - std::min({q[0], q[1], q[2]});
    return std::max(rp, rq);
}

// Demands with the adjustable customers removed and Q settings applied.
CaseSnapshot fixed_only(const CaseSnapshot& snapshot, const QSettings& q) {
    std::vector<Complex> demand(snapshot.network().customer_count());
    for (std::size_t j = 0; j < demand.size(); ++j)
        demand[j] = snapshot.adjustable()[j] ? Complex(0.0, 0.0) : snapshot.effective_demand(j, q);
    return CaseSnapshot(snapshot.network_ptr(), snapshot.period(), std::move(demand), snapshot.adjustable());
}

// dt: [P(3) Q(3) Ire(3) Iim(3)], bus: [X(3) Y(3)]
class FixvModel final : public SuperpositionModel {
public:
    FixvModel(const CaseSnapshot& snapshot, const VoltageProfile& profile, const QSettings& q)
        : SuperpositionModel(snapshot.adjustable_customers(), 12, 6), limits_(snapshot.network().limits()) {
        const Network& net = snapshot.network();
        const std::size_t nb = net.bus_count();
        if (profile.size() != nb) throw InputError("voltage profile does not cover every bus");
        const Phasor3& v0 = net.root_voltage();

        const CaseSnapshot base_case = fixed_only(snapshot, q);
        const EvaluationResult base = evaluate_fixv(base_case, snapshot.initial_assignment(), profile);
        // Base transformer current recomputed from the fixed customers directly.
        Phasor3 i_base = Phasor3::Zero();
        for (std::size_t j = 0; j < net.customer_count(); ++j) {
            if (snapshot.adjustable()[j]) continue;
            const std::size_t p = index(net.customers()[j].phase);
            i_base[p] += std::conj(base_case.demand()[j]) / std::conj(profile[net.customers()[j].bus][p]);
        }

        std::vector<double> full(dt_dim_ + nb * bus_dim_, 0.0);
        for (int p = 0; p < 3; ++p) {
            const Complex s = v0[p] * std::conj(i_base[p]);
            full[p] = s.real();
            full[3 + p] = s.imag();
            full[6 + p] = i_base[p].real();
            full[9 + p] = i_base[p].imag();
            decomposition_.base_p[p] = s.real();
            decomposition_.base_q[p] = s.imag();
        }
        for (std::size_t b = 0; b < nb; ++b)
            for (int p = 0; p < 3; ++p) {
                full[dt_dim_ + b * 6 + p] = base.voltages[b][p].real();
                full[dt_dim_ + b * 6 + 3 + p] = base.voltages[b][p].imag();
            }

        const std::size_t n = size();
        std::vector<std::vector<double>> full_delta(n * 3, std::vector<double>(full.size(), 0.0));
        decomposition_.p.assign(n, {});
        decomposition_.q.assign(n, {});
        std::vector<std::array<double, 3>> radius(nb, {0.0, 0.0, 0.0});
        std::vector<double> neg_radius(nb, 0.0);
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t j = customers()[k];
            const std::size_t bus = net.customers()[j].bus;
            const Complex s = snapshot.effective_demand(j, q);
            const std::vector<Matrix3c> zp = detail::common_path_impedance(net, bus);
            std::vector<std::array<double, 3>> worst(nb, {0.0, 0.0, 0.0});
            std::vector<double> worst_neg(nb, 0.0);
            for (int ph = 0; ph < 3; ++ph) {
                const Complex i = std::conj(s) / std::conj(profile[bus][ph]);
                std::vector<double>& d = full_delta[k * 3 + ph];
                const Complex ds = v0[ph] * std::conj(i);
                d[ph] = ds.real();
                d[3 + ph] = ds.imag();
                d[6 + ph] = i.real();
                d[9 + ph] = i.imag();
                decomposition_.p[k][ph] = ds.real();
                decomposition_.q[k][ph] = ds.imag();
                for (std::size_t b = 0; b < nb; ++b) {
                    const Phasor3 dv = -zp[b].col(ph) * i;
                    for (int r = 0; r < 3; ++r) {
                        d[dt_dim_ + b * 6 + r] = dv[r].real();
                        d[dt_dim_ + b * 6 + 3 + r] = dv[r].imag();
                        worst[b][r] = std::max(worst[b][r], std::abs(dv[r]));
                    }
                    worst_neg[b] = std::max(worst_neg[b], std::abs(negative_sequence(dv)));
                }
            }
            for (std::size_t b = 0; b < nb; ++b) {
                for (int r = 0; r < 3; ++r) radius[b][r] += worst[b][r];
                neg_radius[b] += worst_neg[b];
            }
        }

        std::vector<bool> watch(nb, false);
        for (std::size_t b = 0; b < nb; ++b) {
            for (int r = 0; r < 3; ++r) {
                const double m = std::abs(base.voltages[b][r]);
                if (m - radius[b][r] < limits_.v_min + kWatchMargin || m + radius[b][r] > limits_.v_max - kWatchMargin)
                    watch[b] = true;
            }
            if (base.vneg[b] + neg_radius[b] > limits_.nu - kWatchMargin) watch[b] = true;
        }
        compact(full, full_delta, watch);
    }

protected:
    double leaf(const double* s) const override {
        const double pi = pi_of(s, s + 3);
        double rho = 0.0;
        for (int p = 0; p < 3; ++p) rho += std::max(0.0, std::hypot(s[6 + p], s[9 + p]) - limits_.i_max[p]);
        double tm = 0.0, tp = 0.0, om = 0.0;
        const double* v = s + dt_dim_;
        for (std::size_t w = 0; w < watched_.size(); ++w, v += bus_dim_) {
            double lo = 0.0, hi = 0.0;
            for (int p = 0; p < 3; ++p) {
                const double m = std::hypot(v[p], v[3 + p]);
                lo = std::max(lo, limits_.v_min - m);
                hi = std::max(hi, m - limits_.v_max);
            }
            tm += lo;
            tp += hi;
            const Phasor3 ph(Complex(v[0], v[3]), Complex(v[1], v[4]), Complex(v[2], v[5]));
            om += std::max(0.0, std::abs(negative_sequence(ph)) - limits_.nu);
        }
        return pi + limits_.penalty * (tm + tp + rho + om);
    }

private:
    Limits limits_;
};

// dt: [P(3) Q(3)], bus: [v_aa v_bb v_cc v-]
class LbfmModel final : public SuperpositionModel {
public:
    LbfmModel(const CaseSnapshot& snapshot, const QSettings& q)
        : SuperpositionModel(snapshot.adjustable_customers(), 6, 4), limits_(snapshot.network().limits()) {
        const Network& net = snapshot.network();
        const std::size_t nb = net.bus_count();
        const Phasor3& v0 = net.root_voltage();
        for (int p = 0; p < 3; ++p) inv_v0_[p] = 1.0 / std::abs(v0[p]);

        const EvaluationResult base = evaluate_lbfm(fixed_only(snapshot, q), snapshot.initial_assignment());
        std::vector<double> full(dt_dim_ + nb * bus_dim_, 0.0);
        for (int p = 0; p < 3; ++p) {
            full[p] = decomposition_.base_p[p] = base.dt_p[p];
            full[3 + p] = decomposition_.base_q[p] = base.dt_q[p];
        }
        for (std::size_t b = 0; b < nb; ++b) {
            for (int p = 0; p < 3; ++p) full[dt_dim_ + b * 4 + p] = base.voltage_products[b](p, p).real();
            full[dt_dim_ + b * 4 + 3] = negative_sequence_product(base.voltage_products[b]);
        }

        const Matrix3c beta = lbfm_rotation(v0);
        const Eigen::RowVector3cd a(1.0, kChi, kChi * kChi);
        const std::size_t n = size();
        std::vector<std::vector<double>> full_delta(n * 3, std::vector<double>(full.size(), 0.0));
        decomposition_.p.assign(n, {});
        decomposition_.q.assign(n, {});
        std::vector<std::array<double, 4>> lo(nb, {0, 0, 0, 0}), hi(nb, {0, 0, 0, 0});
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t j = customers()[k];
            const Complex s = snapshot.effective_demand(j, q);
            const std::vector<Matrix3c> zp = detail::common_path_impedance(net, net.customers()[j].bus);
            std::vector<std::array<double, 4>> kmin(nb, {0, 0, 0, 0}), kmax(nb, {0, 0, 0, 0});
            for (int ph = 0; ph < 3; ++ph) {
                std::vector<double>& d = full_delta[k * 3 + ph];
                d[ph] = decomposition_.p[k][ph] = s.real();
                d[3 + ph] = decomposition_.q[k][ph] = s.imag();
                const Complex a_beta = (a * beta.col(ph))(0, 0);
                for (std::size_t b = 0; b < nb; ++b) {
                    std::array<double, 4> dv{};
                    for (int r = 0; r < 3; ++r) dv[r] = -2.0 * (s * beta(r, ph) * std::conj(zp[b](r, ph))).real();
                    dv[3] = -2.0 / 9.0 * (s * a_beta * std::conj((a * zp[b].col(ph))(0, 0))).real();
                    for (int r = 0; r < 4; ++r) {
                        d[dt_dim_ + b * 4 + r] = dv[r];
                        kmin[b][r] = ph == 0 ? dv[r] : std::min(kmin[b][r], dv[r]);
                        kmax[b][r] = ph == 0 ? dv[r] : std::max(kmax[b][r], dv[r]);
                    }
                }
            }
            for (std::size_t b = 0; b < nb; ++b)
                for (int r = 0; r < 4; ++r) {
                    lo[b][r] += kmin[b][r];
                    hi[b][r] += kmax[b][r];
                }
        }

        const double lo2 = limits_.v_min * limits_.v_min, hi2 = limits_.v_max * limits_.v_max;
        const double nu2 = limits_.nu * limits_.nu;
        std::vector<bool> watch(nb, false);
        for (std::size_t b = 0; b < nb; ++b) {
            for (int r = 0; r < 3; ++r) {
                const double v = full[dt_dim_ + b * 4 + r];
                if (v + lo[b][r] < lo2 + kWatchMargin || v + hi[b][r] > hi2 - kWatchMargin) watch[b] = true;
            }
            if (full[dt_dim_ + b * 4 + 3] + hi[b][3] > nu2 - kWatchMargin) watch[b] = true;
        }
        compact(full, full_delta, watch);
    }

protected:
    double leaf(const double* s) const override {
        const double pi = pi_of(s, s + 3);
        double rho = 0.0;
        for (int p = 0; p < 3; ++p)
            rho += std::max(0.0, std::hypot(s[p], s[3 + p]) * inv_v0_[p] - limits_.i_max[p]);
        const double lo2 = limits_.v_min * limits_.v_min, hi2 = limits_.v_max * limits_.v_max;
        const double nu2 = limits_.nu * limits_.nu;
        double tm = 0.0, tp = 0.0, om = 0.0;
        const double* v = s + dt_dim_;
        for (std::size_t w = 0; w < watched_.size(); ++w, v += bus_dim_) {
            tm += std::max({0.0, lo2 - v[0], lo2 - v[1], lo2 - v[2]});
            tp += std::max({0.0, v[0] - hi2, v[1] - hi2, v[2] - hi2});
            om += std::max(0.0, v[3] - nu2);
        }
        return pi + limits_.penalty * (tm + tp + rho + om);
    }

private:
    Limits limits_;
    std::array<double, 3> inv_v0_{};
};

// Affine customer currents: the fixed customers are folded into the tree
// system once; each candidate then solves a 2n x 2n coupling system for the
// adjustable customers' currents y, with x = x_base + sum_k H_k y_k.
class LinvModel final : public SearchModel {
public:
    LinvModel(const CaseSnapshot& snapshot, const AffineFit& fit, const QSettings& q)
        : SearchModel(snapshot.adjustable_customers()), net_(snapshot.network()), limits_(net_.limits()) {
        using detail::Mat6;
        using detail::Vec6;
        const std::size_t nb = net_.bus_count(), n = size();
        std::vector<Mat6> a(nb, Mat6::Zero());
        std::vector<Vec6> c(nb, Vec6::Zero());
        for (std::size_t j = 0; j < net_.customer_count(); ++j) {
            if (snapshot.adjustable()[j]) continue;
            const auto p = static_cast<Eigen::Index>(index(net_.customers()[j].phase));
            const auto ac = detail::affine_current(snapshot.effective_demand(j, q), fit.phase[p]);
            const std::size_t b = net_.customers()[j].bus;
            const Eigen::Index rows[2] = {p, p + 3};
            for (int r = 0; r < 2; ++r) {
                for (int k = 0; k < 2; ++k) a[b](rows[r], rows[k]) += ac.d_matrix(r, k);
                c[b][rows[r]] += ac.offset[r];
            }
        }
        const detail::LinearLoadTree tree(net_, std::move(a));
        const std::size_t dt = net_.topology().dt_line;
        std::vector<Vec6> lines;
        const std::vector<Vec6> xb = tree.solve(c, detail::to_real(net_.root_voltage()), &lines);
        x_base_.resize(6 * nb);
        for (std::size_t b = 0; b < nb; ++b) x_base_.segment<6>(static_cast<Eigen::Index>(6 * b)) = xb[b];
        i_base_ = lines[dt];

        // Responses to a unit current drawn at (bus, phase), real and imaginary part.
        h_.resize(n * 3);
        hi_.resize(n * 3);
        dmat_.resize(n * 3);
        rhs_.resize(n * 3);
        ybound_.assign(n, 0.0);
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t j = customers()[k];
            const std::size_t bus = net_.customers()[j].bus;
            const Complex s = snapshot.effective_demand(j, q);
            ybound_[k] = 2.0 * std::abs(s) / limits_.v_min;
            for (int ph = 0; ph < 3; ++ph) {
                Eigen::MatrixXd h(6 * nb, 2);
                detail::Mat62 hi;
                for (int col = 0; col < 2; ++col) {
                    std::vector<Vec6> unit(nb, Vec6::Zero());
                    unit[bus][ph + 3 * col] = 1.0;
                    std::vector<Vec6> lc;
                    const std::vector<Vec6> x = tree.solve(unit, Vec6::Zero(), &lc);
                    for (std::size_t b = 0; b < nb; ++b) h.block<6, 1>(static_cast<Eigen::Index>(6 * b), col) = x[b];
                    hi.col(col) = lc[dt];
                }
                const auto ac = detail::affine_current(s, fit.phase[ph]);
                h_[k * 3 + ph] = std::move(h);
                hi_[k * 3 + ph] = hi;
                dmat_[k * 3 + ph] = ac.d_matrix;
                const Eigen::Index at = static_cast<Eigen::Index>(6 * bus);
                const Eigen::Vector2d xk(x_base_[at + ph], x_base_[at + ph + 3]);
                rhs_[k * 3 + ph] = ac.d_matrix * xk + ac.offset;
            }
        }
        // Coupling blocks D_k E_k H_m for every phase pair.
        coupling_.resize(n * 3 * n * 3);
        for (std::size_t k = 0; k < n; ++k) {
            const Eigen::Index at = static_cast<Eigen::Index>(6 * net_.customers()[customers()[k]].bus);
            for (int pk = 0; pk < 3; ++pk)
                for (std::size_t m = 0; m < n; ++m)
                    for (int pm = 0; pm < 3; ++pm) {
                        const Eigen::MatrixXd& h = h_[m * 3 + pm];
                        Eigen::Matrix2d e;
                        e.row(0) = h.row(at + pk);
                        e.row(1) = h.row(at + pk + 3);
                        coupling_[(k * 3 + pk) * n * 3 + m * 3 + pm] = dmat_[k * 3 + pk] * e;
                    }
        }

        // Buses that cannot reach a limit while every |y_k| stays within its bound.
        for (std::size_t b = 0; b < nb; ++b) {
            std::array<double, 3> radius{0, 0, 0};
            for (std::size_t k = 0; k < n; ++k) {
                std::array<double, 3> worst{0, 0, 0};
                for (int ph = 0; ph < 3; ++ph) {
                    const Eigen::MatrixXd& h = h_[k * 3 + ph];
                    for (int r = 0; r < 3; ++r) {
                        const Eigen::Index row = static_cast<Eigen::Index>(6 * b + r);
                        const double norm = std::sqrt(h.row(row).squaredNorm() + h.row(row + 3).squaredNorm());
                        worst[r] = std::max(worst[r], norm);
                    }
                }
                for (int r = 0; r < 3; ++r) radius[r] += worst[r] * ybound_[k];
            }
            const Phasor3 v = detail::from_real(x_base_.segment<6>(static_cast<Eigen::Index>(6 * b)));
            bool watch = false;
            for (int r = 0; r < 3; ++r) {
                const double m = std::abs(v[r]);
                const double lin = v[r].real() * std::cos(limits_.angle_center[r]) +
                                   v[r].imag() * std::sin(limits_.angle_center[r]);
                if (lin - radius[r] < limits_.v_min + kWatchMargin || m + radius[r] > limits_.v_max - kWatchMargin)
                    watch = true;
            }
            if (std::abs(negative_sequence(v)) + (radius[0] + radius[1] + radius[2]) / 3.0 > limits_.nu - kWatchMargin)
                watch = true;
            if (watch) watched_.push_back(b);
        }
        all_.resize(nb);
        for (std::size_t b = 0; b < nb; ++b) all_[b] = b;
        for (int p = 0; p < 3; ++p) {
            cos_[p] = std::cos(limits_.angle_center[p]);
            sin_[p] = std::sin(limits_.angle_center[p]);
        }
    }

    double objective(std::span<const std::uint8_t> phases) const override {
        return objective_above(phases, std::numeric_limits<double>::infinity());
    }

    // Slack terms are nonnegative, so the running total only grows.
    double objective_above(std::span<const std::uint8_t> phases, double cutoff) const override {
        const std::size_t n = phases.size();
        Eigen::VectorXd y(2 * n);
        if (n > 0) {
            Eigen::MatrixXd m = Eigen::MatrixXd::Identity(2 * static_cast<Eigen::Index>(n), 2 * static_cast<Eigen::Index>(n));
            Eigen::VectorXd rhs(2 * n);
            for (std::size_t k = 0; k < n; ++k) {
                const Eigen::Index r = static_cast<Eigen::Index>(2 * k);
                rhs.segment<2>(r) = rhs_[k * 3 + phases[k]];
                for (std::size_t l = 0; l < n; ++l)
                    m.block<2, 2>(r, static_cast<Eigen::Index>(2 * l)) -=
                        coupling_[(k * 3 + phases[k]) * n * 3 + l * 3 + phases[l]];
            }
            y = m.partialPivLu().solve(rhs);
        }
        bool within = true;
        for (std::size_t k = 0; k < n; ++k)
            if (std::hypot(y[2 * k], y[2 * k + 1]) > ybound_[k]) within = false;

        detail::Vec6 i_dt = i_base_;
        for (std::size_t k = 0; k < n; ++k) i_dt += hi_[k * 3 + phases[k]] * y.segment<2>(static_cast<Eigen::Index>(2 * k));
        std::array<double, 3> p{}, qv{};
        double rho = 0.0;
        for (int ph = 0; ph < 3; ++ph) {
            const Complex i(i_dt[ph], i_dt[ph + 3]);
            const Complex s = net_.root_voltage()[ph] * std::conj(i);
            p[ph] = s.real();
            qv[ph] = s.imag();
            rho += std::max(0.0, std::abs(i) - limits_.i_max[ph]);
        }
        const double pi = pi_of(p.data(), qv.data());

        double tm = 0.0, tp = 0.0, om = 0.0;
        auto total = [&] { return pi + limits_.penalty * (tm + tp + rho + om); };
        if (total() > cutoff) return total();
        for (std::size_t b : within ? watched_ : all_) {
            const Eigen::Index at = static_cast<Eigen::Index>(6 * b);
            detail::Vec6 x = x_base_.segment<6>(at);
            for (std::size_t k = 0; k < n; ++k)
                x += h_[k * 3 + phases[k]].middleRows<6>(at) * y.segment<2>(static_cast<Eigen::Index>(2 * k));
            double lo = 0.0, hi = 0.0;
            for (int ph = 0; ph < 3; ++ph) {
                lo = std::max(lo, limits_.v_min - (x[ph] * cos_[ph] + x[ph + 3] * sin_[ph]));
                hi = std::max(hi, std::hypot(x[ph], x[ph + 3]) - limits_.v_max);
            }
            tm += lo;
            tp += hi;
            om += std::max(0.0, std::abs(negative_sequence(detail::from_real(x))) - limits_.nu);
            if (total() > cutoff) break;
        }
        return total();
    }

private:
    const Network& net_;
    Limits limits_;
    Eigen::VectorXd x_base_;
    detail::Vec6 i_base_;
    std::vector<Eigen::MatrixXd> h_;
    std::vector<detail::Mat62> hi_;
    std::vector<Eigen::Matrix2d> dmat_;
    std::vector<Eigen::Vector2d> rhs_;
    std::vector<Eigen::Matrix2d> coupling_;
    std::vector<double> ybound_;
    std::vector<std::size_t> watched_, all_;
    std::array<double, 3> cos_{}, sin_{};
};

}  // namespace

std::unique_ptr<SearchCursor> SearchModel::cursor() const { return std::make_unique<StackCursor>(*this); }

namespace detail {

std::vector<Matrix3c> common_path_impedance(const Network& net, std::size_t target) {
    const TopologyReport& topo = net.topology();
    const std::size_t nb = net.bus_count();
    std::vector<bool> on_path(nb, false);
    for (std::size_t b = target;; b = topo.upstream[*topo.parent_line[b]]) {
        on_path[b] = true;
        if (!topo.parent_line[b]) break;
    }
    std::vector<Matrix3c> out(nb, Matrix3c::Zero());
    for (std::size_t b : topo.depth_order) {
        if (!topo.parent_line[b]) continue;
        const std::size_t l = *topo.parent_line[b];
        const std::size_t up = topo.upstream[l];
        out[b] = on_path[b] ? Matrix3c(out[up] + net.lines()[l].z) : out[up];
    }
    return out;
}

}  // namespace detail

std::unique_ptr<SearchModel> compile(const FormulationSpec& spec, const CaseSnapshot& snapshot, const QSettings& q) {
    if (!q.empty() && q.size() != snapshot.network().customer_count())
        throw InputError("Q settings do not match the customer count");
    switch (spec.kind) {
        case FormulationKind::fixv:
            if (!spec.profile) throw InputError("fixed-voltage formulation needs a voltage profile");
            return std::make_unique<FixvModel>(snapshot, *spec.profile, q);
        case FormulationKind::lbfm: return std::make_unique<LbfmModel>(snapshot, q);
        case FormulationKind::linv:
            if (!spec.fit) throw InputError("affine formulation needs a fit");
            return std::make_unique<LinvModel>(snapshot, *spec.fit, q);
        case FormulationKind::utpf: return std::make_unique<GenericModel>(spec, snapshot, q);
    }
    throw InputError("unknown formulation");
}

std::vector<std::uint8_t> adjustable_phases(const SearchModel& model, const PhaseAssignment& assignment) {
    std::vector<std::uint8_t> out(model.size());
    for (std::size_t k = 0; k < model.size(); ++k)
        out[k] = static_cast<std::uint8_t>(index(assignment.phase(model.customers()[k])));
    return out;
}

PhaseAssignment expand_phases(const CaseSnapshot& snapshot, const SearchModel& model,
                              std::span<const std::uint8_t> phases) {
    if (phases.size() != model.size()) throw InputError("phase vector does not match the adjustable customers");
    std::vector<Phase> all = snapshot.initial_assignment().phases();
    for (std::size_t k = 0; k < phases.size(); ++k) {
        if (phases[k] > 2) throw InputError("phase index out of range");
        all[model.customers()[k]] = phase_from_index(phases[k]);
    }
    return PhaseAssignment::from_phases(all);
}

}  // namespace phasebal
