#include <fstream>
#include <sstream>

#include <json.hpp>

#include "phasebal/sweep.hpp"

namespace phasebal {

CaseSnapshot LoadedScenario::snapshot(std::size_t period) const {
    return build_snapshot(network, demand, period, scenario.options);
}

LoadedScenario load_scenario(const Scenario& scenario) {
    FeederImport feeder = import_european_feeder(scenario.feeder_dir, scenario.feeder);
    LoadedScenario out;
    out.scenario = scenario;
    out.network = feeder.network;
    out.report = feeder.report;
    out.demand = feeder.demand.resolution_min == scenario.resolution_min
                     ? std::move(feeder.demand)
                     : resample_profiles(feeder.demand, scenario.resolution_min);
    return out;
}

SweepConfig load_sweep_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open scenario file " + path.string());
    std::stringstream text;
    text << in.rdbuf();
    SweepConfig cfg;
    try {
        const auto j = nlohmann::json::parse(text.str());
        Scenario& s = cfg.scenario;
        s.feeder_dir = path.parent_path() / j.at("feeder").get<std::string>();
        if (j.contains("bases")) {
            s.feeder.bases.voltage_v = j["bases"].value("voltage_v", s.feeder.bases.voltage_v);
            s.feeder.bases.power_va = j["bases"].value("power_va", s.feeder.bases.power_va);
        }
        s.feeder.root_voltage_pu = j.value("root_voltage_pu", s.feeder.root_voltage_pu);
        s.feeder.dt_rating_va = j.value("dt_rating_va", s.feeder.dt_rating_va);
        if (j.contains("limits")) {
            const auto& l = j["limits"];
            Limits& lim = s.feeder.limits;
            lim.v_min = l.value("v_min", lim.v_min);
            lim.v_max = l.value("v_max", lim.v_max);
            lim.nu = l.value("nu", lim.nu);
            lim.penalty = l.value("penalty", lim.penalty);
            if (l.contains("angle_window_deg"))
                lim.angle_window = l["angle_window_deg"].get<double>() * std::numbers::pi / 180.0;
        }
        s.resolution_min = j.value("resolution_min", s.resolution_min);
        s.options.pv_customers = j.value("pv_customers", std::vector<int>{});
        s.options.psd_customers = j.value("psd_customers", std::vector<int>{});
        s.options.pv_capacity_w = j.value("pv_capacity_w", s.options.pv_capacity_w);
        s.options.pv_q_fraction = j.value("pv_q_fraction", s.options.pv_q_fraction);

        if (j.contains("sweep")) {
            const auto& w = j["sweep"];
            if (w.contains("methods")) {
                cfg.methods.clear();
                for (const auto& m : w["methods"]) cfg.methods.push_back(parse_method(m.get<std::string>()));
            }
            if (w.contains("periods")) {
                const auto p = w["periods"].get<std::vector<std::size_t>>();
                if (p.size() != 2 || p[0] >= p[1]) throw InputError("sweep.periods must be [first, end)");
                cfg.first_period = p[0];
                cfg.end_period = p[1];
            }
            cfg.pv_q = w.value("pv_q", cfg.pv_q);
            cfg.parallelism = w.value("parallelism", cfg.parallelism);
            cfg.eps_v = w.value("eps_v", cfg.eps_v);
            if (w.contains("K")) cfg.max_iterations = w["K"].get<int>();
            if (w.contains("search")) cfg.search.strategy = parse_search_strategy(w["search"].get<std::string>());
            cfg.search.seed = w.value("seed", cfg.search.seed);
            cfg.search.restarts = w.value("restarts", cfg.search.restarts);
            if (w.contains("output")) cfg.output_dir = path.parent_path() / w["output"].get<std::string>();
        }
        cfg.scenario.options.pv_q_control = cfg.pv_q;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(path.filename().string() + ": " + e.what());
    }
    if (cfg.methods.empty()) throw InputError("sweep needs at least one method");
    return cfg;
}

}  // namespace phasebal
