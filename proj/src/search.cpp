#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "phasebal/optimizer.hpp"

namespace phasebal {

std::string_view to_string(SearchStrategy s) {
    switch (s) {
        case SearchStrategy::exhaustive: return "exhaustive";
        case SearchStrategy::branch_and_bound: return "bnb";
        case SearchStrategy::local_search: return "local";
    }
    return "?";
}

SearchStrategy parse_search_strategy(std::string_view text) {
    if (text == "exhaustive") return SearchStrategy::exhaustive;
    if (text == "bnb" || text == "branch-and-bound") return SearchStrategy::branch_and_bound;
    if (text == "local" || text == "local-search") return SearchStrategy::local_search;
    throw InputError("unknown search strategy '" + std::string(text) + "'");
}

namespace {

bool lex_less(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

void check_initial(const SearchModel& model, std::span<const std::uint8_t> initial) {
    if (initial.size() != model.size()) throw InputError("initial phases do not match the adjustable customers");
    for (auto p : initial)
        if (p > 2) throw InputError("phase index out of range");
}

std::uint64_t power_of_three(std::size_t n, std::uint64_t cap) {
    std::uint64_t v = 1;
    for (std::size_t i = 0; i < n; ++i) {
        if (v > cap / 3) return cap + 1;
        v *= 3;
    }
    return v;
}

class Enumerator {
public:
    Enumerator(const SearchModel& model, SearchResult& result)
        : model_(model), result_(result), cursor_(model.cursor()), stack_(model.size()) {}

    void run(std::size_t depth) {
        if (depth == model_.size()) {
            const double f = cursor_->objective_above(result_.objective);
            ++result_.evaluations;
            if (f < result_.objective) {
                result_.objective = f;
                result_.phases = stack_;
            }
            return;
        }
        for (std::uint8_t p = 0; p < 3; ++p) {
            stack_[depth] = p;
            cursor_->push(p);
            run(depth + 1);
            cursor_->pop();
        }
    }

private:
    const SearchModel& model_;
    SearchResult& result_;
    std::unique_ptr<SearchCursor> cursor_;
    std::vector<std::uint8_t> stack_;
};

// Smallest water level L with sum_phi max(0, L - y_phi) = t.
double water_level(std::array<double, 3> y, double t) {
    std::sort(y.begin(), y.end());
    double l = y[0] + t;
    if (l <= y[1]) return l;
    l = (y[0] + y[1] + t) / 2.0;
    if (l <= y[2]) return l;
    return (y[0] + y[1] + y[2] + t) / 3.0;
}

struct Suffix {
    bool nonneg = true;
    bool nonpos = true;
    double total = 0.0;  ///< sum over customers of max_phi |c|
};

// Lower bound on the final range of one quantity given committed sums y and
// the uncommitted customers described by suffix.
double range_bound(const std::array<double, 3>& y, const Suffix& s) {
    const double hi = std::max({y[0], y[1], y[2]});
    const double lo = std::min({y[0], y[1], y[2]});
    if (s.total == 0.0) return hi - lo;
    if (s.nonneg) return std::max(0.0, hi - water_level(y, s.total));
    if (s.nonpos) {
        const std::array<double, 3> neg{-y[0], -y[1], -y[2]};
        return std::max(0.0, -lo - water_level(neg, s.total));
    }
    return std::max(0.0, (hi - lo) - s.total);
}

class BranchAndBound {
public:
    BranchAndBound(const SearchModel& model, const DtDecomposition& dt, SearchResult& result)
        : model_(model), dt_(dt), result_(result), cursor_(model.cursor()), stack_(model.size()) {
        const std::size_t n = model.size();
        sp_.resize(n + 1);
        sq_.resize(n + 1);
        for (std::size_t d = n; d-- > 0;) {
            sp_[d] = sp_[d + 1];
            sq_[d] = sq_[d + 1];
            double mp = 0.0, mq = 0.0;
            for (int p = 0; p < 3; ++p) {
                const double cp = dt.p[d][p], cq = dt.q[d][p];
                sp_[d].nonneg &= cp >= 0.0;
                sp_[d].nonpos &= cp <= 0.0;
                sq_[d].nonneg &= cq >= 0.0;
                sq_[d].nonpos &= cq <= 0.0;
                mp = std::max(mp, std::abs(cp));
                mq = std::max(mq, std::abs(cq));
            }
            sp_[d].total += mp;
            sq_[d].total += mq;
        }
    }

    void run(std::size_t depth, const std::array<double, 3>& yp, const std::array<double, 3>& yq) {
        ++result_.nodes;
        if (depth == model_.size()) {
            const double f = cursor_->objective_above(result_.objective);
            ++result_.evaluations;
            if (f < result_.objective || (f == result_.objective && lex_less(stack_, result_.phases))) {
                result_.objective = f;
                result_.phases = stack_;
            }
            return;
        }
        const double bound = std::max(range_bound(yp, sp_[depth]), range_bound(yq, sq_[depth]));
        const double safe = bound - 1e-12 * std::max(1.0, std::abs(bound));
        if (safe > result_.objective) {
            ++result_.pruned;
            return;
        }
        for (std::uint8_t p = 0; p < 3; ++p) {
            stack_[depth] = p;
            std::array<double, 3> np = yp, nq = yq;
            np[p] += dt_.p[depth][p];
            nq[p] += dt_.q[depth][p];
            cursor_->push(p);
            run(depth + 1, np, nq);
            cursor_->pop();
        }
    }

private:
    const SearchModel& model_;
    const DtDecomposition& dt_;
    SearchResult& result_;
    std::unique_ptr<SearchCursor> cursor_;
    std::vector<std::uint8_t> stack_;
    std::vector<Suffix> sp_, sq_;
};

}  // namespace

SearchResult exhaustive_search(const SearchModel& model, std::span<const std::uint8_t> initial,
                               const SearchOptions& options) {
    check_initial(model, initial);
    const std::uint64_t count = power_of_three(model.size(), options.exhaustive_budget);
    if (count > options.exhaustive_budget)
        throw BudgetError("exhaustive search over " + std::to_string(model.size()) +
                          " adjustable customers exceeds the budget of " + std::to_string(options.exhaustive_budget) +
                          " candidates; use branch-and-bound or local search");
    SearchResult r;
    r.initial_objective = model.objective(initial);
    r.objective = std::numeric_limits<double>::infinity();
    Enumerator(model, r).run(0);
    r.nodes = r.evaluations;
    return r;
}

SearchResult branch_and_bound_search(const SearchModel& model, std::span<const std::uint8_t> initial) {
    check_initial(model, initial);
    const DtDecomposition* dt = model.dt_decomposition();
    if (!dt) throw InputError("formulation does not admit the partial-assignment bound; use exhaustive or local search");
    SearchResult r;
    r.initial_objective = model.objective(initial);
    r.objective = r.initial_objective;
    r.phases.assign(initial.begin(), initial.end());
    BranchAndBound(model, *dt, r).run(0, dt->base_p, dt->base_q);
    return r;
}

SearchResult local_search(const SearchModel& model, std::span<const std::uint8_t> initial, const SearchOptions& options,
                          std::span<const std::uint8_t> extra_start) {
    check_initial(model, initial);
    const std::size_t n = model.size();
    std::vector<std::vector<std::uint8_t>> starts{{initial.begin(), initial.end()}};
    if (!extra_start.empty()) {
        check_initial(model, extra_start);
        if (!std::equal(extra_start.begin(), extra_start.end(), initial.begin()))
            starts.emplace_back(extra_start.begin(), extra_start.end());
    }
    std::mt19937_64 rng(options.seed);
    while (static_cast<int>(starts.size()) < std::max(1, options.restarts)) {
        std::vector<std::uint8_t> s(n);
        for (auto& p : s) p = static_cast<std::uint8_t>(rng() % 3);
        starts.push_back(std::move(s));
    }

    SearchResult best;
    best.initial_objective = model.objective(initial);
    best.objective = std::numeric_limits<double>::infinity();
    std::uint64_t evaluations = 1;
    for (auto& cur : starts) {
        double f = model.objective(cur);
        ++evaluations;
        std::vector<MoveRecord> trace;
        for (int move = 0; move < options.max_moves && n > 0; ++move) {
            double best_f = std::numeric_limits<double>::infinity();
            std::vector<std::uint8_t> best_c;
            std::size_t best_k = 0;
            for (std::size_t k = 0; k < n; ++k)
                for (std::uint8_t p = 0; p < 3; ++p) {
                    if (p == cur[k]) continue;
                    std::vector<std::uint8_t> cand = cur;
                    cand[k] = p;
                    const double g = model.objective(cand);
                    ++evaluations;
                    if (g < best_f || (g == best_f && lex_less(cand, best_c))) {
                        best_f = g;
                        best_c = std::move(cand);
                        best_k = k;
                    }
                }
            if (!(best_f < f)) break;
            trace.push_back(MoveRecord{model.customers()[best_k], phase_from_index(cur[best_k]),
                                       phase_from_index(best_c[best_k]), best_f});
            cur = std::move(best_c);
            f = best_f;
        }
        if (f < best.objective || (f == best.objective && lex_less(cur, best.phases))) {
            best.objective = f;
            best.phases = cur;
            best.trace = std::move(trace);
        }
    }
    best.evaluations = evaluations;
    return best;
}

SearchResult run_search(const SearchModel& model, std::span<const std::uint8_t> initial, const SearchOptions& options,
                        std::span<const std::uint8_t> extra_start) {
    switch (options.strategy) {
        case SearchStrategy::exhaustive: return exhaustive_search(model, initial, options);
        case SearchStrategy::branch_and_bound: return branch_and_bound_search(model, initial);
        case SearchStrategy::local_search: return local_search(model, initial, options, extra_start);
    }
    throw InputError("unknown search strategy");
}

}  // namespace phasebal
