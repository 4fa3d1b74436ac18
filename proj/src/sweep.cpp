#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "phasebal/sweep.hpp"

namespace phasebal {

namespace {

int method_rank(std::string_view m) {
    static const std::array<std::string_view, 5> order{"initial", "linv", "lbfm", "fixv-mc", "fixv-mw"};
    for (std::size_t i = 0; i < order.size(); ++i)
        if (order[i] == m) return static_cast<int>(i);
    return static_cast<int>(order.size());
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    out << text;
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read " + path.string());
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

double nearest_rank(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return 0.0;
    const double rank = std::ceil(q * static_cast<double>(sorted.size()));
    const std::size_t i = rank < 1.0 ? 0 : static_cast<std::size_t>(rank) - 1;
    return sorted[std::min(i, sorted.size() - 1)];
}

AccuracyStats accuracy_stats(std::vector<double> dv) {
    std::sort(dv.begin(), dv.end());
    AccuracyStats s;
    s.samples = dv.size();
    if (dv.empty()) return s;
    s.max = dv.back();
    s.p50 = nearest_rank(dv, 0.50);
    s.p90 = nearest_rank(dv, 0.90);
    s.p99 = nearest_rank(dv, 0.99);
    for (int k = 0; k <= 20; ++k) {
        const double q = k / 20.0;
        s.cdf.emplace_back(q, nearest_rank(dv, q));
    }
    return s;
}

std::size_t SweepReport::failures() const {
    return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const OutcomeRecord& r) { return !r.ok; }));
}

const MethodSummary* SweepReport::method(std::string_view name) const {
    for (const auto& m : summary)
        if (m.method == name) return &m;
    return nullptr;
}

SweepReport build_report(std::vector<OutcomeRecord> rows) {
    std::stable_sort(rows.begin(), rows.end(), [](const OutcomeRecord& a, const OutcomeRecord& b) {
        if (a.period != b.period) return a.period < b.period;
        const int ra = method_rank(a.method), rb = method_rank(b.method);
        if (ra != rb) return ra < rb;
        return a.method < b.method;
    });
    SweepReport report;
    std::vector<std::string> methods;
    for (const auto& r : rows)
        if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) methods.push_back(r.method);
    std::sort(methods.begin(), methods.end(), [](const std::string& a, const std::string& b) {
        const int ra = method_rank(a), rb = method_rank(b);
        return ra != rb ? ra < rb : a < b;
    });
    for (const std::string& m : methods) {
        MethodSummary s;
        s.method = m;
        double sum_init = 0.0, sum_opt = 0.0, sum_rt = 0.0;
        std::size_t ok = 0;
        std::vector<double> dv;
        for (const auto& r : rows) {
            if (r.method != m) continue;
            ++s.rows;
            if (!r.ok) {
                ++s.failures;
                continue;
            }
            ++ok;
            sum_init += r.pi_initial;
            sum_opt += r.pi_opt;
            sum_rt += r.runtime_s;
            if (r.vm_formulation.size() == r.vm_verified.size())
                for (std::size_t i = 0; i < r.vm_verified.size(); ++i)
                    dv.push_back(std::abs(r.vm_formulation[i] - r.vm_verified[i]));
        }
        if (ok > 0) {
            s.mean_pi_initial = sum_init / static_cast<double>(ok);
            s.mean_pi_opt = sum_opt / static_cast<double>(ok);
            s.mean_runtime_s = sum_rt / static_cast<double>(ok);
            s.reduction_pct = s.mean_pi_initial > 0.0 ? 100.0 * (1.0 - s.mean_pi_opt / s.mean_pi_initial) : 0.0;
        }
        s.accuracy = accuracy_stats(std::move(dv));
        report.summary.push_back(std::move(s));
    }
    report.rows = std::move(rows);
    return report;
}

void write_report(const SweepReport& report, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        std::ostringstream o;
        o << "period,method,status,pi_initial,pi,objective_initial,objective,verified_objective,vm_min,vm_max,"
             "vub_max,slack_total,delta_v_final,discrete_solves,converged,evaluations,runtime_s,assignment\n";
        for (const auto& r : report.rows) {
            o << r.period << ',' << r.method << ',' << (r.ok ? "ok" : "failed") << ',' << num(r.pi_initial) << ','
              << num(r.pi_opt) << ',' << num(r.objective_initial) << ',' << num(r.objective) << ','
              << num(r.verified_objective) << ',' << num(r.vm_min) << ',' << num(r.vm_max) << ','
              << num(r.vub_max) << ',' << num(r.slack_total) << ','
              << (r.delta_v_trace.empty() ? std::string() : num(r.delta_v_trace.back())) << ','
              << r.discrete_solves << ',' << (r.converged ? 1 : 0) << ',' << r.evaluations << ','
              << num(r.runtime_s) << ',' << r.assignment << '\n';
        }
        write_text(dir / "sweep.csv", o.str());
    }
    {
        nlohmann::ordered_json j;
        j["vub_metric"] = "|V-| in p.u.";
        j["reduction_definition"] = "100 * (1 - mean(pi_opt) / mean(pi_initial)), UTPF-verified";
        nlohmann::ordered_json methods = nlohmann::ordered_json::array();
        for (const auto& s : report.summary) {
            methods.push_back({{"method", s.method},
                               {"rows", s.rows},
                               {"failures", s.failures},
                               {"mean_pi_initial", s.mean_pi_initial},
                               {"mean_pi", s.mean_pi_opt},
                               {"reduction_pct", s.reduction_pct},
                               {"mean_runtime_s", s.mean_runtime_s},
                               {"delta_v",
                                {{"samples", s.accuracy.samples},
                                 {"max", s.accuracy.max},
                                 {"p50", s.accuracy.p50},
                                 {"p90", s.accuracy.p90},
                                 {"p99", s.accuracy.p99}}}});
        }
        j["methods"] = methods;
        write_text(dir / "summary.json", j.dump(1) + "\n");
    }
    {
        std::ostringstream acc, cdf;
        acc << "method,samples,max,p50,p90,p99\n";
        cdf << "method,probability,delta_v\n";
        for (const auto& s : report.summary) {
            acc << s.method << ',' << s.accuracy.samples << ',' << num(s.accuracy.max) << ',' << num(s.accuracy.p50)
                << ',' << num(s.accuracy.p90) << ',' << num(s.accuracy.p99) << '\n';
            for (const auto& [p, v] : s.accuracy.cdf) cdf << s.method << ',' << num(p) << ',' << num(v) << '\n';
        }
        write_text(dir / "accuracy.csv", acc.str());
        write_text(dir / "accuracy_cdf.csv", cdf.str());
    }
    {
        std::ostringstream pu, vm, vub;
        pu << "period,method,pi_initial,pi\n";
        vm << "period,method,vm_min,vm_max\n";
        vub << "period,method,vub_max\n";
        for (const auto& r : report.rows) {
            if (!r.ok) continue;
            pu << r.period << ',' << r.method << ',' << num(r.pi_initial) << ',' << num(r.pi_opt) << '\n';
            vm << r.period << ',' << r.method << ',' << num(r.vm_min) << ',' << num(r.vm_max) << '\n';
            vub << r.period << ',' << r.method << ',' << num(r.vub_max) << '\n';
        }
        write_text(dir / "plot_unbalance.csv", pu.str());
        write_text(dir / "plot_vm.csv", vm.str());
        write_text(dir / "plot_vub.csv", vub.str());
    }
}

SweepReport run_sweep(const SweepConfig& config, const ProgressFn& progress) {
    SweepConfig cfg = config;
    cfg.scenario.options.pv_q_control = cfg.pv_q;
    return run_sweep(cfg, load_scenario(cfg.scenario), progress);
}

SweepReport run_sweep(const SweepConfig& config, const LoadedScenario& loaded, const ProgressFn& progress) {
    const std::size_t end = config.end_period.value_or(loaded.periods());
    if (end > loaded.periods() || config.first_period >= end)
        throw InputError("period range [" + std::to_string(config.first_period) + ", " + std::to_string(end) +
                         ") outside the " + std::to_string(loaded.periods()) + " available periods");
    if (config.methods.empty()) throw InputError("sweep needs at least one method");
    ScenarioOptions options = loaded.scenario.options;
    options.pv_q_control = config.pv_q;

    const std::size_t count = end - config.first_period;
    std::vector<std::vector<OutcomeRecord>> per_period(count);
    std::atomic<std::size_t> next{0};
    std::mutex progress_mutex;

    auto work = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            const std::size_t period = config.first_period + i;
            std::vector<OutcomeRecord>& rows = per_period[i];
            std::optional<CaseSnapshot> snapshot;
            EvaluationResult initial;
            try {
                snapshot.emplace(build_snapshot(loaded.network, loaded.demand, period, options));
                initial = evaluate_utpf(*snapshot, snapshot->initial_assignment());
                rows.push_back(initial_record(period, initial, snapshot->initial_assignment()));
            } catch (const std::exception& e) {
                OutcomeRecord r;
                r.period = period;
                r.method = "initial";
                r.ok = false;
                r.error = e.what();
                rows.push_back(std::move(r));
            }
            for (Method m : config.methods) {
                OutcomeRecord r;
                try {
                    if (!snapshot) throw Error("snapshot unavailable");
                    MethodOptions mo;
                    mo.method = m;
                    mo.search = config.search;
                    mo.max_iterations = config.max_iterations;
                    mo.tolerance = config.eps_v;
                    mo.pv_q = config.pv_q;
                    r = make_record(period, optimize(*snapshot, mo), initial);
                } catch (const std::exception& e) {
                    r = OutcomeRecord{};
                    r.period = period;
                    r.method = std::string(to_string(m));
                    r.ok = false;
                    r.error = e.what();
                }
                rows.push_back(std::move(r));
            }
            if (progress) {
                std::lock_guard lock(progress_mutex);
                for (const auto& r : rows) progress(r);
            }
        }
    };
    const std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
    const std::size_t threads =
        std::min({static_cast<std::size_t>(std::max(1, config.parallelism)), hw, count});
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();

    std::vector<OutcomeRecord> rows;
    for (auto& p : per_period)
        for (auto& r : p) rows.push_back(std::move(r));
    SweepReport report = build_report(std::move(rows));

    if (!config.output_dir.empty()) {
        const auto outcomes = config.output_dir / "outcomes";
        std::filesystem::create_directories(outcomes);
        for (const auto& r : report.rows) write_text(outcomes / outcome_file_name(r.period, r.method), record_to_json(r));
        write_report(report, config.output_dir);
    }
    return report;
}

SweepReport verify_outcomes(const std::filesystem::path& outcomes_dir) {
    if (!std::filesystem::is_directory(outcomes_dir)) throw InputError("no outcome directory at " + outcomes_dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(outcomes_dir))
        if (e.path().extension() == ".json" && e.path().filename().string().rfind("outcome_", 0) == 0)
            files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw InputError("no outcome files in " + outcomes_dir.string());
    std::vector<OutcomeRecord> rows;
    for (const auto& f : files) {
        OutcomeRecord r = record_from_json(read_text(f));
        if (r.ok && r.vm_verified.empty()) throw InputError(f.filename().string() + ": missing verified result");
        rows.push_back(std::move(r));
    }
    return build_report(std::move(rows));
}

}  // namespace phasebal
