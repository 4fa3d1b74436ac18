#include "phasebal/netmodel.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <sstream>

namespace phasebal {

namespace {

std::string bus_name(const NetworkData& data, std::size_t b) {
    return b < data.buses.size() ? "'" + data.buses[b].id + "'" : "#" + std::to_string(b);
}

// Lines on the tree path from a to b, where parent_line encodes the BFS tree so far.
std::vector<std::size_t> tree_path(std::size_t a, std::size_t b, const std::vector<std::size_t>& depth,
                                   const std::vector<std::optional<std::size_t>>& parent_line,
                                   const std::vector<std::size_t>& parent_bus) {
    std::vector<std::size_t> up, down;
    while (a != b) {
        if (depth[a] >= depth[b]) {
            up.push_back(*parent_line[a]);
            a = parent_bus[a];
        } else {
            down.push_back(*parent_line[b]);
            b = parent_bus[b];
        }
    }
    up.insert(up.end(), down.rbegin(), down.rend());
    return up;
}

}  // namespace

TopologyReport validate_radial(const NetworkData& data) {
    const std::size_t n = data.buses.size();
    if (n == 0) throw TopologyError("network has no buses");
    if (data.root >= n) throw TopologyError("root bus index out of range");

    std::vector<std::vector<std::size_t>> incident(n);
    for (std::size_t l = 0; l < data.lines.size(); ++l) {
        const Line& line = data.lines[l];
        if (line.from >= n || line.to >= n)
            throw TopologyError("line '" + line.id + "' references an undefined bus");
        if (line.from == line.to) throw TopologyError("line '" + line.id + "' is a self loop");
        incident[line.from].push_back(l);
        incident[line.to].push_back(l);
    }

    TopologyReport r;
    r.depth.assign(n, 0);
    r.parent_line.assign(n, std::nullopt);
    r.child_lines.assign(n, {});
    r.upstream.assign(data.lines.size(), 0);
    r.downstream.assign(data.lines.size(), 0);
    std::vector<std::size_t> parent_bus(n, n);
    std::vector<bool> seen(n, false);

    std::deque<std::size_t> queue{data.root};
    seen[data.root] = true;
    while (!queue.empty()) {
        const std::size_t u = queue.front();
        queue.pop_front();
        r.depth_order.push_back(u);
        for (std::size_t l : incident[u]) {
            if (r.parent_line[u] && *r.parent_line[u] == l) continue;
            const Line& line = data.lines[l];
            const std::size_t v = line.from == u ? line.to : line.from;
            if (seen[v]) {
                // The closing line is reached from both ends; report it once.
                if (r.parent_line[v] && *r.parent_line[v] == l) continue;
                std::vector<std::size_t> cycle = tree_path(u, v, r.depth, r.parent_line, parent_bus);
                cycle.push_back(l);
                std::sort(cycle.begin(), cycle.end());
                std::ostringstream msg;
                msg << "cycle detected through lines";
                for (std::size_t c : cycle) msg << " '" << data.lines[c].id << "'";
                throw TopologyError(msg.str());
            }
            seen[v] = true;
            r.depth[v] = r.depth[u] + 1;
            r.parent_line[v] = l;
            parent_bus[v] = u;
            r.upstream[l] = u;
            r.downstream[l] = v;
            r.child_lines[u].push_back(l);
            queue.push_back(v);
        }
    }
    for (std::size_t b = 0; b < n; ++b)
        if (!seen[b]) throw TopologyError("bus " + bus_name(data, b) + " is not connected to the root");
    if (r.child_lines[data.root].size() != 1)
        throw TopologyError("root bus must feed exactly one line (the transformer branch), found " +
                            std::to_string(r.child_lines[data.root].size()));
    r.dt_line = r.child_lines[data.root].front();

    r.bus_customers.assign(n, {});
    for (std::size_t j = 0; j < data.customers.size(); ++j) {
        if (data.customers[j].bus >= n)
            throw TopologyError("customer '" + data.customers[j].name + "' references an undefined bus");
        r.bus_customers[data.customers[j].bus].push_back(j);
    }

    std::vector<std::vector<std::size_t>> below(n);
    r.downstream_customers.assign(data.lines.size(), {});
    for (auto it = r.depth_order.rbegin(); it != r.depth_order.rend(); ++it) {
        const std::size_t b = *it;
        std::vector<std::size_t>& acc = below[b];
        acc.insert(acc.end(), r.bus_customers[b].begin(), r.bus_customers[b].end());
        for (std::size_t l : r.child_lines[b]) {
            auto& child = below[r.downstream[l]];
            acc.insert(acc.end(), child.begin(), child.end());
            std::vector<std::size_t>().swap(child);
        }
        std::sort(acc.begin(), acc.end());
        if (r.parent_line[b]) r.downstream_customers[*r.parent_line[b]] = acc;
    }
    return r;
}

Network::Network(NetworkData data) : data_(std::move(data)) {
    const Limits& lim = data_.limits;
    if (!(lim.v_min < lim.v_max)) throw InputError("V_min must be below V_max");
    if (!(lim.v_min > 0.0)) throw InputError("V_min must be positive");
    if (!(lim.penalty > 0.0)) throw InputError("penalty weight must be positive");
    if (!(lim.nu > 0.0)) throw InputError("negative-sequence limit must be positive");
    if (!(lim.angle_window > 0.0)) throw InputError("angle window must be positive");
    for (double i : lim.i_max)
        if (!(i > 0.0)) throw InputError("transformer current limit must be positive");
    if (!(data_.bases.voltage_v > 0.0) || !(data_.bases.power_va > 0.0)) throw InputError("bases must be positive");

    for (const Line& line : data_.lines) {
        const double scale = std::max(1.0, line.z.cwiseAbs().maxCoeff());
        if ((line.z - line.z.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
            throw InputError("impedance of line '" + line.id + "' is not symmetric");
        if (!line.z.allFinite()) throw InputError("impedance of line '" + line.id + "' is not finite");
    }
    for (std::size_t j = 0; j < data_.customers.size(); ++j) {
        if (j > 0 && data_.customers[j].id <= data_.customers[j - 1].id)
            throw InputError("customers must be listed in strictly ascending id order");
    }
    topology_ = validate_radial(data_);
}

std::optional<std::size_t> Network::find_bus(std::string_view id) const {
    for (std::size_t b = 0; b < data_.buses.size(); ++b)
        if (data_.buses[b].id == id) return b;
    return std::nullopt;
}

std::optional<std::size_t> Network::find_customer(int id) const {
    auto it = std::lower_bound(data_.customers.begin(), data_.customers.end(), id,
                               [](const Customer& c, int v) { return c.id < v; });
    if (it == data_.customers.end() || it->id != id) return std::nullopt;
    return static_cast<std::size_t>(it - data_.customers.begin());
}

PhaseAssignment Network::initial_assignment() const {
    std::vector<Phase> phases;
    phases.reserve(data_.customers.size());
    for (const Customer& c : data_.customers) phases.push_back(c.phase);
    return PhaseAssignment::from_phases(phases);
}

DemandSeries resample_profiles(const DemandSeries& series, int target_resolution_min) {
    if (series.resolution_min <= 0 || target_resolution_min <= 0) throw InputError("resolution must be positive");
    if (target_resolution_min % series.resolution_min != 0)
        throw InputError("target resolution " + std::to_string(target_resolution_min) +
                         " min is not a multiple of the source resolution " + std::to_string(series.resolution_min) +
                         " min");
    const std::size_t f = static_cast<std::size_t>(target_resolution_min / series.resolution_min);
    const std::size_t n = series.samples();
    if (n % f != 0) throw InputError("series length is not a whole number of target windows");

    DemandSeries out;
    out.resolution_min = target_resolution_min;
    for (std::size_t k = 0; k < n; k += f) out.start_minute.push_back(series.start_minute[k]);
    auto mean_windows = [&](const std::vector<std::vector<double>>& src) {
        std::vector<std::vector<double>> dst(src.size());
        for (std::size_t j = 0; j < src.size(); ++j) {
            if (src[j].size() != n) throw InputError("customer series lengths differ");
            dst[j].reserve(n / f);
            for (std::size_t k = 0; k < n; k += f) {
                double sum = 0.0;
                for (std::size_t i = 0; i < f; ++i) sum += src[j][k + i];
                dst[j].push_back(sum / static_cast<double>(f));
            }
        }
        return dst;
    };
    out.p_w = mean_windows(series.p_w);
    out.q_var = mean_windows(series.q_var);
    return out;
}

double pv_generation_w(double minute_of_day, double capacity_w) {
    constexpr double sunrise = 360.0, sunset = 1080.0;
    if (minute_of_day <= sunrise || minute_of_day >= sunset) return 0.0;
    const double x = (minute_of_day - 720.0) / (sunset - sunrise);  // in (-1/2, 1/2)
    return capacity_w * std::cos(std::numbers::pi * x);
}

CaseSnapshot::CaseSnapshot(std::shared_ptr<const Network> network, std::size_t period, std::vector<Complex> demand,
                           std::vector<bool> adjustable, std::vector<double> q_min, std::vector<double> q_max)
    : network_(std::move(network)),
      period_(period),
      demand_(std::move(demand)),
      adjustable_(std::move(adjustable)),
      q_min_(std::move(q_min)),
      q_max_(std::move(q_max)) {
    if (!network_) throw InputError("snapshot requires a network");
    const std::size_t n = network_->customer_count();
    if (demand_.size() != n) throw InputError("demand vector does not match the customer count");
    if (adjustable_.size() != n) throw InputError("adjustable flags do not match the customer count");
    if (q_min_.empty()) q_min_.assign(n, 0.0);
    if (q_max_.empty()) q_max_.assign(n, 0.0);
    if (q_min_.size() != n || q_max_.size() != n) throw InputError("Q bounds do not match the customer count");
    for (std::size_t j = 0; j < n; ++j) {
        if (!std::isfinite(demand_[j].real()) || !std::isfinite(demand_[j].imag()))
            throw InputError("demand of customer " + std::to_string(network_->customers()[j].id) + " is not finite");
        if (!(q_min_[j] <= 0.0 && 0.0 <= q_max_[j]))
            throw InputError("Q bounds of customer " + std::to_string(network_->customers()[j].id) +
                             " must bracket zero");
    }
}

std::vector<std::size_t> CaseSnapshot::adjustable_customers() const {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < adjustable_.size(); ++j)
        if (adjustable_[j]) out.push_back(j);
    return out;
}

std::vector<std::size_t> CaseSnapshot::q_controllable_customers() const {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < q_min_.size(); ++j)
        if (q_max_[j] > q_min_[j]) out.push_back(j);
    return out;
}

Complex CaseSnapshot::effective_demand(std::size_t customer, const QSettings& q) const {
    if (q.empty()) return demand_[customer];
    return demand_[customer] + Complex(0.0, q[customer]);
}

CaseSnapshot build_snapshot(std::shared_ptr<const Network> network, const DemandSeries& series, std::size_t period,
                            const ScenarioOptions& options) {
    if (!network) throw InputError("snapshot requires a network");
    if (period >= series.samples())
        throw InputError("period " + std::to_string(period) + " outside series of " +
                         std::to_string(series.samples()) + " samples");
    const std::size_t n = network->customer_count();
    if (series.p_w.size() != n || series.q_var.size() != n)
        throw InputError("demand series does not match the customer count");

    const double s_base = network->bases().power_va;
    std::vector<Complex> demand(n);
    for (std::size_t j = 0; j < n; ++j) demand[j] = Complex(series.p_w[j][period], series.q_var[j][period]) / s_base;

    auto locate = [&](int id) {
        auto j = network->find_customer(id);
        if (!j) throw InputError("scenario references unknown customer " + std::to_string(id));
        return *j;
    };
    std::vector<bool> adjustable(n, false);
    std::vector<double> q_min(n, 0.0), q_max(n, 0.0);
    const double minute = static_cast<double>(series.start_minute[period]);
    for (int id : options.pv_customers) {
        const std::size_t j = locate(id);
        demand[j] -= pv_generation_w(minute, options.pv_capacity_w) / s_base;
        if (options.pv_q_control) {
            q_max[j] = options.pv_q_fraction * options.pv_capacity_w / s_base;
            q_min[j] = -q_max[j];
        }
    }
    for (int id : options.psd_customers) adjustable[locate(id)] = true;
    return CaseSnapshot(std::move(network), period, std::move(demand), std::move(adjustable), std::move(q_min),
                        std::move(q_max));
}

void validate_assignment(const CaseSnapshot& snapshot, const PhaseAssignment& assignment) {
    const Network& net = snapshot.network();
    if (assignment.size() != net.customer_count())
        throw InputError("assignment covers " + std::to_string(assignment.size()) + " customers, network has " +
                         std::to_string(net.customer_count()));
    for (std::size_t j = 0; j < assignment.size(); ++j) {
        const Phase p = assignment.phase(j);
        if (!snapshot.adjustable()[j] && p != net.customers()[j].phase)
            throw InputError("fixed customer " + std::to_string(net.customers()[j].id) + " moved off its phase");
    }
}

}  // namespace phasebal
