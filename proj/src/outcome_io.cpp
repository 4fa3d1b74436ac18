#include <algorithm>

#include <json.hpp>

#include "phasebal/sweep.hpp"

namespace phasebal {

using nlohmann::ordered_json;

namespace {

std::vector<double> flatten(const std::vector<std::array<double, 3>>& vm) {
    std::vector<double> out;
    out.reserve(vm.size() * 3);
    for (const auto& v : vm) out.insert(out.end(), v.begin(), v.end());
    return out;
}

void fill_verified(OutcomeRecord& r, const EvaluationResult& v) {
    r.pi_opt = v.unbalance;
    r.verified_objective = v.objective;
    r.vm_min = std::numeric_limits<double>::infinity();
    r.vm_max = 0.0;
    for (const auto& m : v.vm) {
        r.vm_min = std::min({r.vm_min, m[0], m[1], m[2]});
        r.vm_max = std::max({r.vm_max, m[0], m[1], m[2]});
    }
    r.vub_max = v.vneg.empty() ? 0.0 : *std::max_element(v.vneg.begin(), v.vneg.end());
    r.slack_total = v.slacks.total();
    r.vm_verified = flatten(v.vm);
}

}  // namespace

OutcomeRecord initial_record(std::size_t period, const EvaluationResult& initial_utpf, const PhaseAssignment& initial) {
    OutcomeRecord r;
    r.period = period;
    r.method = "initial";
    r.strategy = "none";
    r.assignment = initial.to_string();
    r.pi_initial = initial_utpf.unbalance;
    r.objective_initial = r.objective = initial_utpf.objective;
    r.formulation_pi = initial_utpf.unbalance;
    fill_verified(r, initial_utpf);
    r.vm_formulation = r.vm_verified;
    return r;
}

OutcomeRecord make_record(std::size_t period, const OptimizationOutcome& outcome, const EvaluationResult& initial_utpf) {
    if (!outcome.verified) throw InputError("outcome carries no verified result");
    OutcomeRecord r;
    r.period = period;
    r.method = outcome.method;
    r.strategy = std::string(to_string(outcome.strategy));
    r.seed = outcome.seed;
    r.assignment = outcome.best.to_string();
    r.q = outcome.q;
    r.pi_initial = initial_utpf.unbalance;
    r.objective_initial = outcome.initial_objective;
    r.objective = outcome.best_objective;
    r.formulation_pi = outcome.evaluation.unbalance;
    fill_verified(r, *outcome.verified);
    r.delta_v_trace = outcome.delta_v_trace;
    r.discrete_solves = outcome.discrete_solves;
    r.converged = outcome.converged;
    r.evaluations = outcome.evaluations;
    r.nodes = outcome.nodes;
    r.pruned = outcome.pruned;
    r.runtime_s = outcome.runtime_s;
    r.vm_formulation = flatten(outcome.evaluation.vm);
    return r;
}

std::string outcome_file_name(std::size_t period, std::string_view method) {
    return "outcome_" + std::to_string(period) + "_" + std::string(method) + ".json";
}

std::string record_to_json(const OutcomeRecord& r) {
    ordered_json j;
    j["period"] = r.period;
    j["method"] = r.method;
    j["ok"] = r.ok;
    if (!r.ok) j["error"] = r.error;
    j["strategy"] = r.strategy;
    j["seed"] = r.seed;
    j["assignment"] = r.assignment;
    j["q"] = r.q;
    j["objective_initial"] = r.objective_initial;
    j["objective"] = r.objective;
    j["formulation_pi"] = r.formulation_pi;
    j["delta_v_trace"] = r.delta_v_trace;
    j["discrete_solves"] = r.discrete_solves;
    j["converged"] = r.converged;
    j["evaluations"] = r.evaluations;
    j["nodes"] = r.nodes;
    j["pruned"] = r.pruned;
    j["runtime_s"] = r.runtime_s;
    j["verified"] = {{"pi_initial", r.pi_initial}, {"pi", r.pi_opt},         {"objective", r.verified_objective},
                     {"vm_min", r.vm_min},         {"vm_max", r.vm_max},      {"vub_max", r.vub_max},
                     {"slack_total", r.slack_total}};
    j["vm_formulation"] = r.vm_formulation;
    j["vm_verified"] = r.vm_verified;
    return j.dump(1) + "\n";
}

OutcomeRecord record_from_json(std::string_view text) {
    try {
        const ordered_json j = ordered_json::parse(text);
        OutcomeRecord r;
        r.period = j.at("period").get<std::size_t>();
        r.method = j.at("method").get<std::string>();
        r.ok = j.at("ok").get<bool>();
        r.error = j.value("error", std::string());
        r.strategy = j.at("strategy").get<std::string>();
        r.seed = j.at("seed").get<std::uint64_t>();
        r.assignment = j.at("assignment").get<std::string>();
        r.q = j.at("q").get<std::vector<double>>();
        r.objective_initial = j.at("objective_initial").get<double>();
        r.objective = j.at("objective").get<double>();
        r.formulation_pi = j.at("formulation_pi").get<double>();
        r.delta_v_trace = j.at("delta_v_trace").get<std::vector<double>>();
        r.discrete_solves = j.at("discrete_solves").get<int>();
        r.converged = j.at("converged").get<bool>();
        r.evaluations = j.at("evaluations").get<std::uint64_t>();
        r.nodes = j.at("nodes").get<std::uint64_t>();
        r.pruned = j.at("pruned").get<std::uint64_t>();
        r.runtime_s = j.at("runtime_s").get<double>();
        const auto& v = j.at("verified");
        r.pi_initial = v.at("pi_initial").get<double>();
        r.pi_opt = v.at("pi").get<double>();
        r.verified_objective = v.at("objective").get<double>();
        r.vm_min = v.at("vm_min").get<double>();
        r.vm_max = v.at("vm_max").get<double>();
        r.vub_max = v.at("vub_max").get<double>();
        r.slack_total = v.at("slack_total").get<double>();
        r.vm_formulation = j.at("vm_formulation").get<std::vector<double>>();
        r.vm_verified = j.at("vm_verified").get<std::vector<double>>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("outcome json: ") + e.what());
    }
}

}  // namespace phasebal
