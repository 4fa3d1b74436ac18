#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "phasebal/optimizer.hpp"
#include "phasebal/powerflow.hpp"
#include "phasebal/sweep.hpp"

namespace fs = std::filesystem;
using namespace phasebal;

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

void write_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    out << text;
    std::cout << "wrote " << path.string() << "\n";
}

bool parse_on_off(const std::string& v) {
    if (v == "on") return true;
    if (v == "off") return false;
    throw InputError("expected on|off, got '" + v + "'");
}

struct Common {
    std::string config = PHASEBAL_DEFAULT_CONFIG;
    std::string out = ".";
    std::size_t period = 0;
    std::string pv_q = "off";
};

void add_common(CLI::App* cmd, Common& c, bool with_period) {
    cmd->add_option("--config", c.config, "scenario file (JSON)");
    cmd->add_option("--out", c.out, "output directory");
    if (with_period) {
        cmd->add_option("--period", c.period, "period index at the scenario resolution");
        cmd->add_option("--pv-q", c.pv_q, "reactive control of PV customers")->check(CLI::IsMember({"on", "off"}));
    }
}

LoadedScenario load(const Common& c, SweepConfig* cfg_out = nullptr) {
    SweepConfig cfg = load_sweep_config(c.config);
    cfg.pv_q = parse_on_off(c.pv_q);
    cfg.scenario.options.pv_q_control = cfg.pv_q;
    if (cfg_out) *cfg_out = cfg;
    return load_scenario(cfg.scenario);
}

CaseSnapshot snapshot_for(const LoadedScenario& s, std::size_t period) {
    if (period >= s.periods())
        throw InputError("period " + std::to_string(period) + " outside the " + std::to_string(s.periods()) +
                         " available periods");
    return s.snapshot(period);
}

int cmd_import(const std::string& feeder_dir, const Common& c) {
    SweepConfig cfg;
    fs::path dir = feeder_dir;
    if (dir.empty()) {
        cfg = load_sweep_config(c.config);
        dir = cfg.scenario.feeder_dir;
    }
    FeederImport imp = import_european_feeder(dir, cfg.scenario.feeder);
    write_file(fs::path(c.out) / "network.json", network_to_json(*imp.network));
    write_profiles_csv(fs::path(c.out) / "profiles.csv", *imp.network, imp.demand);
    std::cout << "buses " << imp.report.buses << ", lines " << imp.report.lines << ", line codes "
              << imp.report.line_codes << ", customers " << imp.report.customers << ", samples " << imp.report.samples
              << "\n";
    return 0;
}

int cmd_pf(const Common& c, const std::string& assignment) {
    const LoadedScenario s = load(c);
    const CaseSnapshot snap = snapshot_for(s, c.period);
    const PhaseAssignment a = assignment.empty() ? snap.initial_assignment() : PhaseAssignment::parse(assignment);
    validate_assignment(snap, a);
    const PFSolution sol = solve_utpf(snap, a);
    const Network& net = snap.network();
    std::ostringstream o;
    o << "bus_id,phase,vm_pu,va_rad\n";
    for (std::size_t b = 0; b < net.bus_count(); ++b)
        for (Phase p : kPhases) {
            const Complex v = sol.voltages[b][static_cast<int>(p)];
            o << net.buses()[b].id << ',' << phase_letter(p) << ',' << num(std::abs(v)) << ',' << num(std::arg(v))
              << '\n';
        }
    for (Phase p : kPhases) {
        const Complex sdt = sol.dt_power[static_cast<int>(p)];
        o << "DT_P," << phase_letter(p) << ',' << num(sdt.real()) << ",\n";
        o << "DT_Q," << phase_letter(p) << ',' << num(sdt.imag()) << ",\n";
    }
    write_file(fs::path(c.out) / ("pf_" + std::to_string(c.period) + ".csv"), o.str());
    std::cout << "iterations " << sol.iterations << ", mismatch " << num(sol.mismatch) << ", balance residual "
              << num(power_balance_residual(sol, snap)) << "\n";
    return 0;
}

int cmd_evaluate(const Common& c, const std::string& formulation, const std::string& assignment) {
    const LoadedScenario s = load(c);
    const CaseSnapshot snap = snapshot_for(s, c.period);
    const Network& net = snap.network();
    const PhaseAssignment a = assignment.empty() ? snap.initial_assignment() : PhaseAssignment::parse(assignment);
    validate_assignment(snap, a);

    std::vector<std::pair<std::string, FormulationSpec>> specs;
    auto want = [&](std::string_view f) { return formulation == "all" || formulation == f; };
    if (want("utpf")) specs.emplace_back("utpf", FormulationSpec::utpf());
    if (want("fixv")) specs.emplace_back("fixv", FormulationSpec::fixv(flat_profile(net)));
    if (want("linv"))
        specs.emplace_back("linv", FormulationSpec::linv(fit_inverse_voltage(FitDomain::from_limits(net.limits()))));
    if (want("lbfm")) specs.emplace_back("lbfm", FormulationSpec::lbfm());

    for (const auto& [name, spec] : specs) {
        const EvaluationResult ev = evaluate(spec, snap, a);
        std::ostringstream o;
        o << "bus,phase,vm_pu,vneg_pu,tau_minus,tau_plus,omega_minus\n";
        for (std::size_t b = 0; b < net.bus_count(); ++b)
            for (Phase p : kPhases)
                o << net.buses()[b].id << ',' << phase_letter(p) << ',' << num(ev.vm[b][static_cast<int>(p)]) << ','
                  << num(ev.vneg[b]) << ',' << num(ev.slacks.tau_minus[b]) << ',' << num(ev.slacks.tau_plus[b]) << ','
                  << num(ev.slacks.omega_minus[b]) << '\n';
        write_file(fs::path(c.out) / ("eval_" + std::to_string(c.period) + "_" + name + ".csv"), o.str());
        std::cout << name << ": pi " << num(ev.unbalance) << ", slacks " << num(ev.slacks.total()) << ", F "
                  << num(ev.objective) << "\n";
    }
    return 0;
}

struct OptimizeArgs {
    std::string method = "fixv-mw";
    std::string search;
    std::optional<int> k;
    std::optional<double> eps_v;
    std::optional<std::uint64_t> seed;
};

int cmd_optimize(const Common& c, const OptimizeArgs& args) {
    SweepConfig cfg;
    const LoadedScenario s = load(c, &cfg);
    const CaseSnapshot snap = snapshot_for(s, c.period);
    MethodOptions mo;
    mo.method = parse_method(args.method);
    mo.search = cfg.search;
    if (!args.search.empty()) mo.search.strategy = parse_search_strategy(args.search);
    if (args.seed) mo.search.seed = *args.seed;
    mo.max_iterations = args.k ? args.k : cfg.max_iterations;
    mo.tolerance = args.eps_v.value_or(cfg.eps_v);
    mo.pv_q = cfg.pv_q;
    const OptimizationOutcome out = optimize(snap, mo);
    const EvaluationResult initial = evaluate_utpf(snap, snap.initial_assignment());
    const OutcomeRecord r = make_record(c.period, out, initial);
    write_file(fs::path(c.out) / outcome_file_name(c.period, r.method), record_to_json(r));
    std::cout << r.method << " (" << r.strategy << "): F " << num(r.objective_initial) << " -> " << num(r.objective)
              << ", verified pi " << num(r.pi_initial) << " -> " << num(r.pi_opt) << ", " << num(r.runtime_s)
              << " s\n";
    return 0;
}

void print_summary(const SweepReport& report) {
    std::printf("%-8s %5s %5s %14s %14s %10s %12s %12s\n", "method", "rows", "fail", "mean pi init", "mean pi opt",
                "reduct %", "dV p99", "dV max");
    for (const auto& m : report.summary)
        std::printf("%-8s %5zu %5zu %14.6g %14.6g %10.3f %12.4g %12.4g\n", m.method.c_str(), m.rows, m.failures,
                    m.mean_pi_initial, m.mean_pi_opt, m.reduction_pct, m.accuracy.p99, m.accuracy.max);
    for (const auto& r : report.rows)
        if (!r.ok) std::printf("failed: period %zu %s: %s\n", r.period, r.method.c_str(), r.error.c_str());
}

struct SweepArgs {
    std::vector<std::string> methods;
    std::string periods;
    std::optional<int> parallelism;
    std::string search;
    std::optional<int> k;
    std::optional<double> eps_v;
    std::optional<std::uint64_t> seed;
    bool quiet = false;
};

int cmd_sweep(const Common& c, const std::string& pv_q, bool out_given, const SweepArgs& args) {
    SweepConfig cfg = load_sweep_config(c.config);
    if (!pv_q.empty()) cfg.pv_q = parse_on_off(pv_q);
    cfg.scenario.options.pv_q_control = cfg.pv_q;
    if (!args.methods.empty()) {
        cfg.methods.clear();
        for (const auto& m : args.methods) cfg.methods.push_back(parse_method(m));
    }
    if (!args.periods.empty()) {
        const auto colon = args.periods.find(':');
        if (colon == std::string::npos) throw InputError("--periods expects first:end");
        cfg.first_period = std::stoul(args.periods.substr(0, colon));
        cfg.end_period = std::stoul(args.periods.substr(colon + 1));
    }
    if (args.parallelism) cfg.parallelism = *args.parallelism;
    if (!args.search.empty()) cfg.search.strategy = parse_search_strategy(args.search);
    if (args.k) cfg.max_iterations = args.k;
    if (args.eps_v) cfg.eps_v = *args.eps_v;
    if (args.seed) cfg.search.seed = *args.seed;
    if (out_given || cfg.output_dir.empty()) cfg.output_dir = c.out;

    ProgressFn progress;
    if (!args.quiet)
        progress = [](const OutcomeRecord& r) {
            std::fprintf(stderr, "period %3zu %-8s %s\n", r.period, r.method.c_str(), r.ok ? "ok" : "FAILED");
        };
    const SweepReport report = run_sweep(cfg, progress);
    std::cout << "outputs in " << cfg.output_dir.string() << "\n";
    print_summary(report);
    return report.failures() == 0 ? 0 : 1;
}

int cmd_verify(const std::string& outcomes, const std::string& out) {
    const SweepReport report = verify_outcomes(outcomes);
    if (!out.empty()) write_report(report, out);
    print_summary(report);
    return report.failures() == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Phase balancing for low-voltage feeders"};
    app.require_subcommand(1);

    Common common;
    std::string feeder_dir, assignment, formulation = "all", outcomes, verify_out, sweep_pv_q;
    OptimizeArgs opt;
    SweepArgs sw;

    auto* imp = app.add_subcommand("import", "convert a feeder directory to network.json and profiles.csv");
    add_common(imp, common, false);
    imp->add_option("--feeder-dir", feeder_dir, "feeder CSV directory (default: from the scenario file)");

    auto* pf = app.add_subcommand("pf", "exact power flow for one period");
    add_common(pf, common, true);
    pf->add_option("--assignment", assignment, "phase letters per customer (default: initial)");

    auto* ev = app.add_subcommand("evaluate", "per-bus state under each formulation");
    add_common(ev, common, true);
    ev->add_option("--assignment", assignment, "phase letters per customer (default: initial)");
    ev->add_option("--formulation", formulation)->check(CLI::IsMember({"all", "utpf", "fixv", "linv", "lbfm"}));

    auto* op = app.add_subcommand("optimize", "optimize one period with one method");
    add_common(op, common, true);
    op->add_option("--method", opt.method)->check(CLI::IsMember({"linv", "lbfm", "fixv-mc", "fixv-mw"}));
    op->add_option("--search", opt.search)->check(CLI::IsMember({"exhaustive", "bnb", "local"}));
    op->add_option("--K", opt.k, "outer iterations of the fixed-voltage method");
    op->add_option("--eps-v", opt.eps_v, "voltage-change tolerance");
    op->add_option("--seed", opt.seed, "local-search seed");

    auto* sp = app.add_subcommand("sweep", "all periods and methods, verified and summarised");
    sp->add_option("--config", common.config, "scenario file (JSON)");
    auto* out_opt = sp->add_option("--out", common.out, "output directory (default: scenario sweep.output)");
    sp->add_option("--pv-q", sweep_pv_q)->check(CLI::IsMember({"on", "off"}));
    sp->add_option("--methods", sw.methods)->delimiter(',');
    sp->add_option("--periods", sw.periods, "first:end (end exclusive)");
    sp->add_option("--parallelism", sw.parallelism);
    sp->add_option("--search", sw.search)->check(CLI::IsMember({"exhaustive", "bnb", "local"}));
    sp->add_option("--K", sw.k);
    sp->add_option("--eps-v", sw.eps_v);
    sp->add_option("--seed", sw.seed);
    sp->add_flag("--quiet", sw.quiet);

    auto* vf = app.add_subcommand("verify", "rebuild the report and accuracy table from stored outcomes");
    vf->add_option("--outcomes", outcomes, "directory of outcome_*.json files")->required();
    vf->add_option("--out", verify_out, "write report files here");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*imp) return cmd_import(feeder_dir, common);
        if (*pf) return cmd_pf(common, assignment);
        if (*ev) return cmd_evaluate(common, formulation, assignment);
        if (*op) return cmd_optimize(common, opt);
        if (*sp) return cmd_sweep(common, sweep_pv_q, out_opt->count() > 0, sw);
        if (*vf) return cmd_verify(outcomes, verify_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
