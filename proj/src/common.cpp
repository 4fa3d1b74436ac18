#include "phasebal/assignment.hpp"
#include "phasebal/common.hpp"

#include <algorithm>

namespace phasebal {

char phase_letter(Phase p) { return static_cast<char>('a' + index(p)); }

Phase parse_phase(std::string_view text) {
    if (text.size() == 1) {
        const char c = static_cast<char>(text[0] | 0x20);
        if (c >= 'a' && c <= 'c') return phase_from_index(static_cast<std::size_t>(c - 'a'));
        if (text[0] >= '1' && text[0] <= '3') return phase_from_index(static_cast<std::size_t>(text[0] - '1'));
    }
    throw InputError("unknown phase '" + std::string(text) + "'");
}

Phasor3 balanced_phasor(double magnitude) {
    const double shift = 2.0 * std::numbers::pi / 3.0;
    return Phasor3(std::polar(magnitude, 0.0), std::polar(magnitude, -shift), std::polar(magnitude, shift));
}

PhaseAssignment PhaseAssignment::from_phases(std::span<const Phase> phases) {
    std::vector<Indicator> out(phases.size(), Indicator{0, 0, 0});
    for (std::size_t j = 0; j < phases.size(); ++j) out[j][index(phases[j])] = 1;
    return PhaseAssignment(std::move(out));
}

Phase PhaseAssignment::phase(std::size_t customer) const {
    const Indicator& e = indicator(customer);
    if (e[0] + e[1] + e[2] != 1 || e[0] > 1 || e[1] > 1 || e[2] > 1)
        throw InputError("customer " + std::to_string(customer) + " is not connected to exactly one phase");
    return e[0] ? Phase::a : (e[1] ? Phase::b : Phase::c);
}

bool PhaseAssignment::is_one_hot() const {
    return std::all_of(indicators_.begin(), indicators_.end(), [](const Indicator& e) {
        return e[0] <= 1 && e[1] <= 1 && e[2] <= 1 && e[0] + e[1] + e[2] == 1;
    });
}

PhaseAssignment PhaseAssignment::with_phase(std::size_t customer, Phase p) const {
    PhaseAssignment out = *this;
    out.indicators_.at(customer) = Indicator{0, 0, 0};
    out.indicators_[customer][index(p)] = 1;
    return out;
}

std::vector<Phase> PhaseAssignment::phases() const {
    std::vector<Phase> out(size());
    for (std::size_t j = 0; j < size(); ++j) out[j] = phase(j);
    return out;
}

std::string PhaseAssignment::to_string() const {
    std::string s(size(), '?');
    for (std::size_t j = 0; j < size(); ++j) s[j] = phase_letter(phase(j));
    return s;
}

PhaseAssignment PhaseAssignment::parse(std::string_view letters) {
    std::vector<Phase> phases;
    phases.reserve(letters.size());
    for (char c : letters) phases.push_back(parse_phase(std::string_view(&c, 1)));
    return from_phases(phases);
}

std::strong_ordering operator<=>(const PhaseAssignment& lhs, const PhaseAssignment& rhs) {
    const std::size_t n = std::min(lhs.size(), rhs.size());
    for (std::size_t j = 0; j < n; ++j) {
        // a < b < c: an indicator with its one earlier in the triple sorts first.
        const auto& x = lhs.indicators_[j];
        const auto& y = rhs.indicators_[j];
        if (x != y) return (x > y) ? std::strong_ordering::less : std::strong_ordering::greater;
    }
    return lhs.size() <=> rhs.size();
}

}  // namespace phasebal
