#pragma once

#include <vector>

#include <Eigen/Dense>

#include "phasebal/formulations.hpp"

namespace phasebal::detail {

using Mat6 = Eigen::Matrix<double, 6, 6>;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat62 = Eigen::Matrix<double, 6, 2>;

/// [X_a X_b X_c Y_a Y_b Y_c] for voltages, [J; W] for currents.
inline Vec6 to_real(const Phasor3& v) {
    Vec6 x;
    for (int p = 0; p < 3; ++p) {
        x[p] = v[p].real();
        x[p + 3] = v[p].imag();
    }
    return x;
}

inline Phasor3 from_real(const Vec6& x) {
    Phasor3 v;
    for (int p = 0; p < 3; ++p) v[p] = Complex(x[p], x[p + 3]);
    return v;
}

inline Mat6 real_block(const Matrix3c& z) {
    Mat6 m;
    m << z.real(), -z.imag(), z.imag(), z.real();
    return m;
}

/// Sum of customer currents per bus on their assigned phases.
std::vector<Phasor3> bus_injections(const Network& net, const std::vector<Complex>& customer_current,
                                    const std::vector<std::size_t>& phase);

/// One backward aggregation and forward Ohm pass for fixed bus injections.
void linear_sweep(const Network& net, const std::vector<Phasor3>& injection, std::vector<Phasor3>& voltages,
                  std::vector<Phasor3>& line_currents);

/// Fills vm, vneg, pi, slacks and the objective from voltages and DT flows.
void finish_evaluation(const Network& net, EvaluationResult& r, SlackMode mode);

/// Customer current in the real frame, J + jW = conj(s) * fit(V), as
/// D [X_phi; Y_phi] + d.
struct AffineCurrent {
    Eigen::Matrix2d d_matrix;
    Eigen::Vector2d offset;
};
AffineCurrent affine_current(Complex s, const AffineFit::Coefficients& c);

/// Tree elimination for bus currents I_b = A_b x_b + c_b with fixed root voltage.
class LinearLoadTree {
public:
    LinearLoadTree(const Network& net, std::vector<Mat6> bus_a);

    /// Bus voltages for the given affine offsets; line currents optional.
    std::vector<Vec6> solve(const std::vector<Vec6>& bus_c, const Vec6& root,
                            std::vector<Vec6>* line_currents = nullptr) const;

    double min_rcond() const { return min_rcond_; }
    const std::vector<Mat6>& bus_a() const { return bus_a_; }

private:
    const Network& net_;
    std::vector<Mat6> bus_a_;
    std::vector<Mat6> z_;       ///< per line
    std::vector<Mat6> inv_;     ///< per line (I + A_agg Z)^-1, indexed by line
    std::vector<Mat6> t_;       ///< per line inv * A_agg
    double min_rcond_ = 1.0;
};

/// Lines from the root to each bus, as the summed impedance of the common
/// path with a given bus: result[i] = sum of Z over lines shared by
/// root->i and root->target.
std::vector<Matrix3c> common_path_impedance(const Network& net, std::size_t target);

}  // namespace phasebal::detail
