#include "phasebal/netmodel.hpp"

#include <json.hpp>

namespace phasebal {

using nlohmann::ordered_json;

namespace {

ordered_json complex_json(Complex z) { return ordered_json::array({z.real(), z.imag()}); }

Complex complex_from(const ordered_json& j) {
    if (!j.is_array() || j.size() != 2) throw InputError("complex value must be [re, im]");
    return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

std::string network_to_json(const Network& network) {
    const NetworkData& d = network.data();
    ordered_json root;
    root["bases"] = {{"voltage_v", d.bases.voltage_v}, {"power_va", d.bases.power_va}};
    ordered_json angle = ordered_json::array();
    for (double a : d.limits.angle_center) angle.push_back(a);
    root["limits"] = {{"v_min", d.limits.v_min},
                      {"v_max", d.limits.v_max},
                      {"nu", d.limits.nu},
                      {"i_max", d.limits.i_max},
                      {"penalty", d.limits.penalty},
                      {"angle_center", angle},
                      {"angle_window", d.limits.angle_window}};
    root["root"] = d.buses.at(d.root).id;
    ordered_json v0 = ordered_json::array();
    for (int p = 0; p < 3; ++p) v0.push_back(complex_json(d.root_voltage[p]));
    root["root_voltage"] = v0;

    ordered_json buses = ordered_json::array();
    for (const Bus& b : d.buses) buses.push_back({{"id", b.id}, {"x", b.x}, {"y", b.y}});
    root["buses"] = std::move(buses);

    ordered_json lines = ordered_json::array();
    for (const Line& l : d.lines) {
        ordered_json z = ordered_json::array();
        for (int r = 0; r < 3; ++r) {
            ordered_json row = ordered_json::array();
            for (int c = 0; c < 3; ++c) row.push_back(complex_json(l.z(r, c)));
            z.push_back(row);
        }
        lines.push_back({{"id", l.id},
                         {"from", d.buses[l.from].id},
                         {"to", d.buses[l.to].id},
                         {"code", l.code},
                         {"length_m", l.length_m},
                         {"z", z}});
    }
    root["lines"] = std::move(lines);

    ordered_json customers = ordered_json::array();
    for (const Customer& c : d.customers)
        customers.push_back({{"id", c.id},
                             {"name", c.name},
                             {"bus", d.buses[c.bus].id},
                             {"phase", std::string(1, phase_letter(c.phase))},
                             {"adjustable", c.adjustable},
                             {"power_factor", c.power_factor},
                             {"shape", c.shape}});
    root["customers"] = std::move(customers);
    return root.dump(1) + "\n";
}

std::shared_ptr<const Network> network_from_json(std::string_view text) {
    try {
        const ordered_json root = ordered_json::parse(text);
        NetworkData d;
        d.bases.voltage_v = root.at("bases").at("voltage_v").get<double>();
        d.bases.power_va = root.at("bases").at("power_va").get<double>();
        const auto& lim = root.at("limits");
        d.limits.v_min = lim.at("v_min").get<double>();
        d.limits.v_max = lim.at("v_max").get<double>();
        d.limits.nu = lim.at("nu").get<double>();
        d.limits.i_max = lim.at("i_max").get<std::array<double, 3>>();
        d.limits.penalty = lim.at("penalty").get<double>();
        d.limits.angle_center = lim.at("angle_center").get<std::array<double, 3>>();
        d.limits.angle_window = lim.at("angle_window").get<double>();

        std::unordered_map<std::string, std::size_t> index;
        for (const auto& b : root.at("buses")) {
            Bus bus{b.at("id").get<std::string>(), b.at("x").get<double>(), b.at("y").get<double>()};
            if (!index.emplace(bus.id, d.buses.size()).second) throw InputError("duplicate bus '" + bus.id + "'");
            d.buses.push_back(std::move(bus));
        }
        auto bus = [&](const ordered_json& j, const std::string& where) {
            auto it = index.find(j.get<std::string>());
            if (it == index.end()) throw InputError(where + " references undefined bus '" + j.get<std::string>() + "'");
            return it->second;
        };
        d.root = bus(root.at("root"), "root");
        const auto& v0 = root.at("root_voltage");
        for (int p = 0; p < 3; ++p) d.root_voltage[p] = complex_from(v0.at(p));

        for (const auto& l : root.at("lines")) {
            Line line;
            line.id = l.at("id").get<std::string>();
            line.from = bus(l.at("from"), "line '" + line.id + "'");
            line.to = bus(l.at("to"), "line '" + line.id + "'");
            line.code = l.at("code").get<std::string>();
            line.length_m = l.at("length_m").get<double>();
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c) line.z(r, c) = complex_from(l.at("z").at(r).at(c));
            d.lines.push_back(std::move(line));
        }
        for (const auto& c : root.at("customers")) {
            Customer cu;
            cu.id = c.at("id").get<int>();
            cu.name = c.at("name").get<std::string>();
            cu.bus = bus(c.at("bus"), "customer '" + cu.name + "'");
            cu.phase = parse_phase(c.at("phase").get<std::string>());
            cu.adjustable = c.at("adjustable").get<bool>();
            cu.power_factor = c.at("power_factor").get<double>();
            cu.shape = c.at("shape").get<std::string>();
            d.customers.push_back(std::move(cu));
        }
        return std::make_shared<const Network>(std::move(d));
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("network json: ") + e.what());
    }
}

}  // namespace phasebal
