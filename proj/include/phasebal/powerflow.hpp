#pragma once

#include <vector>

#include "phasebal/common.hpp"
#include "phasebal/netmodel.hpp"

namespace phasebal {

struct PowerFlowOptions {
    double tolerance = 1e-8;
    int max_iterations = 100;
    /// Voltage magnitudes below this are treated as collapse.
    double collapse_guard = 0.5;
};

struct PFSolution {
    std::vector<Phasor3> voltages;       ///< per bus
    std::vector<Phasor3> line_currents;  ///< per line, upstream to downstream
    Phasor3 dt_power = Phasor3::Zero();  ///< V0 * conj(I) on the transformer branch
    Complex total_load{};                ///< sum of the specified customer demands
    int iterations = 0;
    double mismatch = 0.0;
    std::vector<double> mismatch_history;
};

/// Current drawn by a constant-PQ customer connected to one phase:
/// conj(s) / conj(v) on that phase, zero elsewhere.
Phasor3 customer_current(Complex s, Complex v, Phase connected);

/// Backward/forward sweep with constant-PQ injections re-evaluated each pass,
/// flat start at the root voltage. Stops when both the largest nodal current
/// change and the summed power mismatch fall below the tolerance.
PFSolution solve_utpf(const CaseSnapshot& snapshot, const PhaseAssignment& assignment, const QSettings& q = {},
                      const PowerFlowOptions& options = {});

/// |transformer injection - customer demand - line losses|, p.u.
double power_balance_residual(const PFSolution& solution, const CaseSnapshot& snapshot);

}  // namespace phasebal
