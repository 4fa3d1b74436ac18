#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace phasebal {

using Complex = std::complex<double>;

/// One complex value per phase, ordered a, b, c. Voltages use the real part
/// as X and the imaginary part as Y; currents use J and W.
using Phasor3 = Eigen::Vector3cd;
using Matrix3c = Eigen::Matrix3cd;

enum class Phase : std::uint8_t { a = 0, b = 1, c = 2 };

inline constexpr std::array<Phase, 3> kPhases{Phase::a, Phase::b, Phase::c};

constexpr std::size_t index(Phase p) { return static_cast<std::size_t>(p); }
constexpr Phase phase_from_index(std::size_t i) { return static_cast<Phase>(i % 3); }

/// Cyclic relabel a -> b -> c -> a.
constexpr Phase rotate(Phase p) { return phase_from_index(index(p) + 1); }

char phase_letter(Phase p);
Phase parse_phase(std::string_view text);

/// chi = exp(-j 2 pi / 3)
inline const Complex kChi = std::polar(1.0, -2.0 * std::numbers::pi / 3.0);

inline double real_part(const Phasor3& v, Phase p) { return v[index(p)].real(); }
inline double imag_part(const Phasor3& v, Phase p) { return v[index(p)].imag(); }

/// Balanced positive-sequence set with the given magnitude (a at 0, b at -120 deg, c at +120 deg).
Phasor3 balanced_phasor(double magnitude);

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (files, scenario, assignments).
class InputError : public Error {
public:
    using Error::Error;
};

class TopologyError : public Error {
public:
    using Error::Error;
};

class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, int iterations, double last_mismatch)
        : Error(what), iterations_(iterations), last_mismatch_(last_mismatch) {}
    int iterations() const { return iterations_; }
    double last_mismatch() const { return last_mismatch_; }

private:
    int iterations_;
    double last_mismatch_;
};

class SingularityError : public Error {
public:
    SingularityError(const std::string& what, double rcond) : Error(what), rcond_(rcond) {}
    /// Reciprocal condition estimate of the offending matrix (0 when not applicable).
    double rcond() const { return rcond_; }

private:
    double rcond_;
};

class BudgetError : public Error {
public:
    using Error::Error;
};

}  // namespace phasebal
