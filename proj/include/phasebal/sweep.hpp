#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "phasebal/netmodel.hpp"
#include "phasebal/optimizer.hpp"

namespace phasebal {

/// Scenario file contents (JSON). Paths are resolved against the file's directory.
struct Scenario {
    std::filesystem::path feeder_dir;
    FeederOptions feeder;
    ScenarioOptions options;
    int resolution_min = 15;
};

struct LoadedScenario {
    Scenario scenario;
    std::shared_ptr<const Network> network;
    DemandSeries demand;  ///< at the scenario resolution
    ImportReport report;

    std::size_t periods() const { return demand.samples(); }
    CaseSnapshot snapshot(std::size_t period) const;
};

LoadedScenario load_scenario(const Scenario& scenario);

struct SweepConfig {
    Scenario scenario;
    std::vector<Method> methods{Method::linv, Method::lbfm, Method::fixv_mc, Method::fixv_mw};
    std::size_t first_period = 0;
    std::optional<std::size_t> end_period;  ///< exclusive; all periods when absent
    bool pv_q = false;
    std::filesystem::path output_dir;
    int parallelism = 8;
    SearchOptions search;
    std::optional<int> max_iterations;
    double eps_v = 1e-4;
};

/// Reads a scenario file; the optional "sweep" object fills the sweep fields.
SweepConfig load_sweep_config(const std::filesystem::path& path);

/// One (period, method) result as stored on disk. Voltage arrays are flattened
/// bus-major, three phases per bus.
struct OutcomeRecord {
    std::size_t period = 0;
    std::string method;
    bool ok = true;
    std::string error;
    std::string strategy;
    std::uint64_t seed = 0;
    std::string assignment;
    std::vector<double> q;
    double pi_initial = 0.0;         ///< UTPF, initial assignment
    double pi_opt = 0.0;             ///< UTPF, returned assignment
    double objective_initial = 0.0;  ///< method evaluator, initial assignment
    double objective = 0.0;          ///< method evaluator, returned assignment
    double formulation_pi = 0.0;
    double verified_objective = 0.0;
    double vm_min = 0.0;
    double vm_max = 0.0;
    double vub_max = 0.0;
    double slack_total = 0.0;        ///< verified
    std::vector<double> delta_v_trace;
    int discrete_solves = 0;
    bool converged = true;
    std::uint64_t evaluations = 0;
    std::uint64_t nodes = 0;
    std::uint64_t pruned = 0;
    double runtime_s = 0.0;
    std::vector<double> vm_formulation;
    std::vector<double> vm_verified;
};

/// INITIAL pseudo-method: no optimization, formulation = verified UTPF.
OutcomeRecord initial_record(std::size_t period, const EvaluationResult& initial_utpf, const PhaseAssignment& initial);
OutcomeRecord make_record(std::size_t period, const OptimizationOutcome& outcome, const EvaluationResult& initial_utpf);

std::string record_to_json(const OutcomeRecord& record);
OutcomeRecord record_from_json(std::string_view text);
std::string outcome_file_name(std::size_t period, std::string_view method);

struct AccuracyStats {
    std::size_t samples = 0;
    double max = 0.0;
    double p50 = 0.0;
    double p90 = 0.0;
    double p99 = 0.0;
    std::vector<std::pair<double, double>> cdf;  ///< (probability, delta V)
};

/// Nearest-rank quantile of an ascending sample; q in [0, 1].
double nearest_rank(const std::vector<double>& sorted, double q);
AccuracyStats accuracy_stats(std::vector<double> delta_v);

struct MethodSummary {
    std::string method;
    std::size_t rows = 0;
    std::size_t failures = 0;
    double mean_pi_initial = 0.0;
    double mean_pi_opt = 0.0;
    double reduction_pct = 0.0;  ///< 100 (1 - mean(pi_opt) / mean(pi_initial))
    double mean_runtime_s = 0.0;
    AccuracyStats accuracy;
};

struct SweepReport {
    std::vector<OutcomeRecord> rows;  ///< ordered by (period, method)
    std::vector<MethodSummary> summary;

    std::size_t failures() const;
    const MethodSummary* method(std::string_view name) const;
};

/// Orders rows by period then method (initial, linv, lbfm, fixv-mc, fixv-mw) and summarises.
SweepReport build_report(std::vector<OutcomeRecord> rows);

/// sweep.csv, summary.json, accuracy.csv, accuracy_cdf.csv and the plot_*.csv files.
void write_report(const SweepReport& report, const std::filesystem::path& directory);

using ProgressFn = std::function<void(const OutcomeRecord&)>;

/// Optimizes every period with every method, verifies with UTPF, and writes
/// outcomes/ plus the report files when an output directory is set.
SweepReport run_sweep(const SweepConfig& config, const ProgressFn& progress = {});
SweepReport run_sweep(const SweepConfig& config, const LoadedScenario& loaded, const ProgressFn& progress = {});

/// Rebuilds the report from the outcome files of a previous sweep.
SweepReport verify_outcomes(const std::filesystem::path& outcomes_dir);

}  // namespace phasebal
