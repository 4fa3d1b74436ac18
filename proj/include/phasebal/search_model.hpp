#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "phasebal/formulations.hpp"

namespace phasebal {

/// Transformer-branch powers as an exact linear function of the adjustable
/// customers' phases: P_phi = base_p[phi] + sum_j p[j][phi] for j on phi.
struct DtDecomposition {
    std::array<double, 3> base_p{};
    std::array<double, 3> base_q{};
    std::vector<std::array<double, 3>> p;  ///< per adjustable customer, per phase
    std::vector<std::array<double, 3>> q;
};

/// Depth-first evaluation state; phases are pushed in adjustable-customer order.
class SearchCursor {
public:
    virtual ~SearchCursor() = default;
    virtual void push(std::uint8_t phase) = 0;
    virtual void pop() = 0;
    /// Objective of the complete assignment on the stack.
    virtual double objective() = 0;
    /// As objective(), but may stop early and return any value above cutoff
    /// once the objective is known to exceed it.
    virtual double objective_above(double cutoff) {
        (void)cutoff;
        return objective();
    }
};

/// A formulation compiled for repeated evaluation over the adjustable
/// customers of one snapshot. Phases are indices 0..2 in the order of
/// customers(); fixed customers stay on their initial phase.
class SearchModel {
public:
    explicit SearchModel(std::vector<std::size_t> customers) : customers_(std::move(customers)) {}
    virtual ~SearchModel() = default;

    std::size_t size() const { return customers_.size(); }
    const std::vector<std::size_t>& customers() const { return customers_; }

    virtual double objective(std::span<const std::uint8_t> phases) const = 0;
    virtual double objective_above(std::span<const std::uint8_t> phases, double cutoff) const {
        (void)cutoff;
        return objective(phases);
    }
    virtual std::unique_ptr<SearchCursor> cursor() const;
    /// Present only when the transformer flows are linear in the assignment.
    virtual const DtDecomposition* dt_decomposition() const { return nullptr; }

private:
    std::vector<std::size_t> customers_;
};

std::unique_ptr<SearchModel> compile(const FormulationSpec& spec, const CaseSnapshot& snapshot, const QSettings& q = {});

/// Adjustable-customer phases of a full assignment, in customers() order.
std::vector<std::uint8_t> adjustable_phases(const SearchModel& model, const PhaseAssignment& assignment);
PhaseAssignment expand_phases(const CaseSnapshot& snapshot, const SearchModel& model,
                              std::span<const std::uint8_t> phases);

}  // namespace phasebal
