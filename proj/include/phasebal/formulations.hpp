#pragma once

#include <array>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "phasebal/common.hpp"
#include "phasebal/netmodel.hpp"
#include "phasebal/powerflow.hpp"

namespace phasebal {

enum class FormulationKind { utpf, fixv, linv, lbfm };

std::string_view to_string(FormulationKind kind);

struct Slacks {
    std::vector<double> tau_minus;    ///< per bus
    std::vector<double> tau_plus;     ///< per bus
    std::array<double, 3> rho{};      ///< per phase, transformer current
    std::vector<double> omega_minus;  ///< per bus

    /// sum_i (tau- + tau+) + sum_phi rho + sum_i omega-
    double total() const;
};

/// pi + M_b * slacks.total()
double objective_value(double unbalance, const Slacks& slacks, double penalty);

struct EvaluationResult {
    FormulationKind formulation = FormulationKind::utpf;
    std::vector<Phasor3> voltages;           ///< empty for LBFM
    std::vector<Matrix3c> voltage_products;  ///< LBFM only: v_i = V_i V_i^H
    std::vector<std::array<double, 3>> vm;   ///< voltage magnitude per bus and phase
    std::vector<double> vneg;                ///< |V-| per bus
    std::array<double, 3> dt_p{};
    std::array<double, 3> dt_q{};
    std::array<double, 3> dt_current{};      ///< |I| on the transformer branch
    double unbalance = 0.0;
    Slacks slacks;
    double objective = 0.0;
    /// Largest residual of the solved equations (LINV linear system, UTPF mismatch).
    double residual = 0.0;
    int iterations = 0;
};

Complex negative_sequence(const Phasor3& v);

/// Largest pairwise gap among the per-phase active and reactive powers.
double dt_unbalance(const std::array<double, 3>& p, const std::array<double, 3>& q);

enum class SlackMode { exact, linearized };

SlackMode parse_slack_mode(std::string_view text);

/// Minimal nonnegative slacks for the voltage, unbalance and transformer
/// current limits. In linearized mode the lower voltage bound is tested as
/// X cos(delta) + Y sin(delta) >= V_min - tau-.
Slacks compute_slacks(std::span<const Phasor3> voltages, const std::array<double, 3>& dt_current, const Limits& limits,
                      SlackMode mode);

/// LBFM slacks in squared-voltage units against v_i = V V^H products.
Slacks compute_lbfm_slacks(std::span<const Matrix3c> products, const std::array<double, 3>& dt_current,
                           const Limits& limits);

/// (1/9) a v a^H with a = [1, chi, chi^2]; equals |V-|^2 when v = V V^H.
double negative_sequence_product(const Matrix3c& v);

/// Affine model of 1/conj(V) per phase:
/// (kx X + ky Y + bx) + j (hx X + hy Y + by).
struct AffineFit {
    struct Coefficients {
        double kx = 0, ky = 0, bx = 0;
        double hx = 0, hy = 0, by = 0;
    };
    std::array<Coefficients, 3> phase;
    /// Largest |fit - 1/conj(V)| over the fitting samples.
    double max_residual = 0.0;
    std::string domain;

    Complex apply(Phase p, Complex v) const;
};

struct FitDomain {
    double vm_min = 0.94;
    double vm_max = 1.10;
    std::array<double, 3> angle_center{0.0, -2.0 * std::numbers::pi / 3.0, 2.0 * std::numbers::pi / 3.0};
    double angle_window = 10.0 * std::numbers::pi / 180.0;
    int grid = 20;

    static FitDomain from_limits(const Limits& limits, int grid = 20);
};

/// Samples of each phase on a uniform magnitude x angle grid.
std::array<std::vector<Complex>, 3> grid_samples(const FitDomain& domain, int points_per_axis);

/// Least-squares fit; throws InputError when a phase's samples are rank deficient.
AffineFit fit_inverse_voltage(const std::array<std::vector<Complex>, 3>& samples);
AffineFit fit_inverse_voltage(const FitDomain& domain);

/// Largest |fit - 1/conj(V)| over the given samples.
double max_fit_error(const AffineFit& fit, const std::array<std::vector<Complex>, 3>& samples);

using VoltageProfile = std::vector<Phasor3>;

VoltageProfile flat_profile(const Network& network);

EvaluationResult evaluate_utpf(const CaseSnapshot& snapshot, const PhaseAssignment& assignment, const QSettings& q = {},
                               const PowerFlowOptions& options = {});
EvaluationResult evaluation_from_solution(const CaseSnapshot& snapshot, const PFSolution& solution);

/// Customer currents fixed at conj(s)/conj(V_fix); one backward/forward pass.
EvaluationResult evaluate_fixv(const CaseSnapshot& snapshot, const PhaseAssignment& assignment,
                               const VoltageProfile& profile, const QSettings& q = {});

/// Customer currents affine in the local voltage through the fit; the
/// resulting linear system is solved exactly on the tree.
EvaluationResult evaluate_linv(const CaseSnapshot& snapshot, const PhaseAssignment& assignment, const AffineFit& fit,
                               const QSettings& q = {});

/// Lossless linear branch flow in squared-voltage products.
EvaluationResult evaluate_lbfm(const CaseSnapshot& snapshot, const PhaseAssignment& assignment, const QSettings& q = {});

/// Rotation between phase phi and psi at the root: beta(phi, psi) = u_phi / u_psi, u = V0 / |V0|.
Matrix3c lbfm_rotation(const Phasor3& root_voltage);

/// A formulation together with the data it is parameterised by.
struct FormulationSpec {
    FormulationKind kind = FormulationKind::utpf;
    std::shared_ptr<const VoltageProfile> profile;  ///< FIXV
    std::shared_ptr<const AffineFit> fit;           ///< LINV

    static FormulationSpec utpf() { return {FormulationKind::utpf, nullptr, nullptr}; }
    static FormulationSpec lbfm() { return {FormulationKind::lbfm, nullptr, nullptr}; }
    static FormulationSpec fixv(VoltageProfile profile);
    static FormulationSpec linv(AffineFit fit);
};

EvaluationResult evaluate(const FormulationSpec& spec, const CaseSnapshot& snapshot, const PhaseAssignment& assignment,
                          const QSettings& q = {});

}  // namespace phasebal
