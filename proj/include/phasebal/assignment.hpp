#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "phasebal/common.hpp"

namespace phasebal {

/// Per-customer one-hot phase indicator. Customers are indexed in ascending
/// id order, which is also the tie-break order of every search strategy.
class PhaseAssignment {
public:
    using Indicator = std::array<std::uint8_t, 3>;

    PhaseAssignment() = default;
    explicit PhaseAssignment(std::vector<Indicator> indicators) : indicators_(std::move(indicators)) {}

    static PhaseAssignment from_phases(std::span<const Phase> phases);

    std::size_t size() const { return indicators_.size(); }
    const Indicator& indicator(std::size_t customer) const { return indicators_.at(customer); }

    /// Connected phase; throws InputError when the indicator is not one-hot.
    Phase phase(std::size_t customer) const;
    bool is_one_hot() const;

    PhaseAssignment with_phase(std::size_t customer, Phase p) const;
    std::vector<Phase> phases() const;

    /// Letters such as "abca..." in customer order.
    std::string to_string() const;
    static PhaseAssignment parse(std::string_view letters);

    friend bool operator==(const PhaseAssignment&, const PhaseAssignment&) = default;
    /// Lexicographic over (customer, phase a < b < c).
    friend std::strong_ordering operator<=>(const PhaseAssignment& lhs, const PhaseAssignment& rhs);

private:
    std::vector<Indicator> indicators_;
};

/// Reactive-power adjustments Q^nx - Q^n per customer in p.u.; empty means none.
using QSettings = std::vector<double>;

}  // namespace phasebal
