#include <doctest.h>

#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "fixtures.hpp"

using namespace phasebal;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("phasebal_sweep_" + name);
    fs::remove_all(p);
    return p;
}

const std::vector<std::string> report_files{"sweep.csv",        "summary.json",      "accuracy.csv",
                                            "accuracy_cdf.csv", "plot_unbalance.csv", "plot_vm.csv",
                                            "plot_vub.csv"};

}  // namespace

TEST_CASE("nearest-rank quantiles") {
    const std::vector<double> v{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    CHECK(nearest_rank(v, 0.0) == 1);
    CHECK(nearest_rank(v, 0.5) == 5);
    CHECK(nearest_rank(v, 0.9) == 9);
    CHECK(nearest_rank(v, 0.91) == 10);
    CHECK(nearest_rank(v, 0.99) == 10);
    CHECK(nearest_rank(v, 1.0) == 10);
    CHECK(nearest_rank({4.0}, 0.37) == 4.0);
}

TEST_CASE("accuracy statistics are monotone in the quantile") {
    std::mt19937_64 rng(12);
    std::vector<double> dv(317);
    for (double& x : dv) x = std::exponential_distribution<double>(1e4)(rng);
    const AccuracyStats a = accuracy_stats(dv);
    CHECK(a.samples == dv.size());
    CHECK(a.p50 <= a.p90);
    CHECK(a.p90 <= a.p99);
    CHECK(a.p99 <= a.max);
    CHECK(a.max == *std::max_element(dv.begin(), dv.end()));
    REQUIRE(a.cdf.size() == 21);
    for (std::size_t k = 1; k < a.cdf.size(); ++k) {
        CHECK(a.cdf[k].first > a.cdf[k - 1].first);
        CHECK(a.cdf[k].second >= a.cdf[k - 1].second);
    }
    CHECK(a.cdf.back().second == a.max);
}

TEST_CASE("initial pseudo-method passes the exact result through") {
    const CaseSnapshot snap = fixtures::bundled().snapshot(76);
    const EvaluationResult ev = evaluate_utpf(snap, snap.initial_assignment());
    const OutcomeRecord r = initial_record(76, ev, snap.initial_assignment());
    CHECK(r.method == "initial");
    CHECK(r.pi_initial == ev.unbalance);
    CHECK(r.pi_opt == ev.unbalance);
    CHECK(r.objective == r.verified_objective);
    CHECK(r.vm_formulation == r.vm_verified);
    CHECK(record_from_json(record_to_json(r)).assignment == r.assignment);
    CHECK(record_to_json(record_from_json(record_to_json(r))) == record_to_json(r));
}

TEST_CASE("small sweep: report files, regeneration and summary arithmetic") {
    const fs::path out = scratch("small");
    SweepConfig cfg = load_sweep_config(fixtures::data_dir() / "scenario.json");
    cfg.methods = {Method::lbfm, Method::fixv_mc, Method::fixv_mw};
    cfg.first_period = 74;
    cfg.end_period = 80;
    cfg.output_dir = out;
    const SweepReport rep = run_sweep(cfg, fixtures::bundled());

    CHECK(rep.rows.size() == 6 * 4);
    CHECK(rep.failures() == 0);
    for (const auto& f : report_files) CHECK(fs::exists(out / f));
    std::size_t outcome_files = 0;
    for (const auto& e : fs::directory_iterator(out / "outcomes")) outcome_files += e.path().extension() == ".json";
    CHECK(outcome_files == rep.rows.size());

    for (std::size_t k = 1; k < rep.rows.size(); ++k)
        CHECK(rep.rows[k - 1].period <= rep.rows[k].period);

    // Reduction recomputed from the rows against summary.json.
    const auto summary = nlohmann::json::parse(slurp(out / "summary.json"));
    for (const char* m : {"lbfm", "fixv-mc", "fixv-mw"}) {
        double s0 = 0.0, s1 = 0.0;
        std::size_t n = 0;
        for (const auto& r : rep.rows)
            if (r.method == m && r.ok) {
                s0 += r.pi_initial;
                s1 += r.pi_opt;
                ++n;
            }
        REQUIRE(n == 6);
        const double reduction = 100.0 * (1.0 - (s1 / n) / (s0 / n));
        const MethodSummary* ms = rep.method(m);
        REQUIRE(ms != nullptr);
        CHECK(std::abs(ms->reduction_pct - reduction) <= 1e-12);
        bool found = false;
        for (const auto& j : summary["methods"])
            if (j["method"] == m) {
                found = true;
                CHECK(std::abs(j["reduction_pct"].get<double>() - reduction) <= 1e-12);
                CHECK(j["rows"].get<std::size_t>() == 6);
            }
        CHECK(found);
    }

    const SweepReport again = verify_outcomes(out / "outcomes");
    const fs::path regen = scratch("regen");
    write_report(again, regen);
    for (const auto& f : report_files) CHECK_MESSAGE(slurp(out / f) == slurp(regen / f), f);

    fs::remove(out / "outcomes" / outcome_file_name(75, "lbfm"));
    std::ofstream(out / "outcomes" / outcome_file_name(75, "lbfm")) << "{\"period\": 75, \"method\": \"lbfm\"}";
    CHECK_THROWS_AS(verify_outcomes(out / "outcomes"), Error);
    fs::remove_all(out);
    fs::remove_all(regen);
}

TEST_CASE("a period whose power flow fails is recorded, not dropped") {
    LoadedScenario heavy = fixtures::bundled();
    for (auto& series : heavy.demand.p_w) series[3] *= 400.0;
    SweepConfig cfg = load_sweep_config(fixtures::data_dir() / "scenario.json");
    cfg.methods = {Method::lbfm, Method::fixv_mw};
    cfg.first_period = 2;
    cfg.end_period = 5;
    cfg.output_dir.clear();
    const SweepReport rep = run_sweep(cfg, heavy);
    CHECK(rep.rows.size() == 9);
    std::size_t failed_in_3 = 0;
    for (const auto& r : rep.rows) {
        if (r.period == 3) {
            failed_in_3 += !r.ok;
            if (!r.ok) CHECK_FALSE(r.error.empty());
        } else {
            CHECK(r.ok);
        }
    }
    CHECK(failed_in_3 >= 1);
    CHECK(rep.failures() == failed_in_3);
    CHECK(rep.method("lbfm")->rows == 3);
}

TEST_CASE("period range is validated") {
    SweepConfig cfg = load_sweep_config(fixtures::data_dir() / "scenario.json");
    cfg.output_dir.clear();
    cfg.first_period = 90;
    cfg.end_period = 97;
    CHECK_THROWS_AS(run_sweep(cfg, fixtures::bundled()), InputError);
    cfg.end_period = 90;
    CHECK_THROWS_AS(run_sweep(cfg, fixtures::bundled()), InputError);
    cfg.end_period = 91;
    cfg.methods.clear();
    CHECK_THROWS_AS(run_sweep(cfg, fixtures::bundled()), InputError);
}

TEST_CASE("full-day FIXV-MW sweep has one row per period") {
    SweepConfig cfg = load_sweep_config(fixtures::data_dir() / "scenario.json");
    cfg.methods = {Method::fixv_mw};
    cfg.output_dir.clear();
    const SweepReport rep = run_sweep(cfg, fixtures::bundled());
    CHECK(rep.method("fixv-mw")->rows == 96);
    CHECK(rep.method("initial")->rows == 96);
    CHECK(rep.failures() == 0);
    for (const auto& r : rep.rows)
        if (r.method == "fixv-mw") {
            CHECK(r.objective <= r.objective_initial);
            CHECK(r.pi_opt <= r.pi_initial + 1e-12);
        }
}
