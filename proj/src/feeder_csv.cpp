// Reader for the European LV test feeder CSV layout.
#include "phasebal/netmodel.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <unordered_map>

namespace phasebal {

namespace {

using Row = std::vector<std::string>;

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

struct Table {
    std::string file;
    Row header;
    std::vector<Row> rows;
    std::vector<int> line_numbers;

    std::size_t column(std::string_view name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw InputError(file + ": missing column '" + std::string(name) + "'");
    }
    const std::string& cell(std::size_t r, std::size_t c) const {
        if (c >= rows[r].size())
            throw InputError(file + ":" + std::to_string(line_numbers[r]) + ": too few fields");
        return rows[r][c];
    }
    double number(std::size_t r, std::size_t c) const {
        const std::string& s = cell(r, c);
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
            throw InputError(file + ":" + std::to_string(line_numbers[r]) + ": '" + s + "' is not a number");
        return v;
    }
};

// Skips the title and unit lines that precede the header; the header is the
// first row whose first cell is header_key.
Table read_table(const std::filesystem::path& path, std::string_view header_key) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    Table t;
    t.file = path.filename().string();
    std::string line;
    int number = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        Row row;
        std::string_view rest(line);
        while (true) {
            const std::size_t comma = rest.find(',');
            row.push_back(trim(rest.substr(0, comma)));
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        if (!have_header) {
            if (row.front() == header_key) {
                t.header = std::move(row);
                have_header = true;
            }
            continue;
        }
        if (row.size() == 1 && row.front().empty()) continue;
        t.rows.push_back(std::move(row));
        t.line_numbers.push_back(number);
    }
    if (!have_header) throw InputError(t.file + ": header row starting with '" + std::string(header_key) + "' not found");
    return t;
}

double length_scale_to_km(std::string_view units, const std::string& where) {
    if (units == "km") return 1.0;
    if (units == "m") return 1e-3;
    if (units == "mi") return 1.609344;
    if (units == "ft") return 3.048e-4;
    throw InputError(where + ": unsupported length unit '" + std::string(units) + "'");
}

int parse_clock_minute(const std::string& s, const std::string& where) {
    int h = 0, m = 0, sec = 0;
    char c1 = 0, c2 = 0;
    std::istringstream is(s);
    if (!(is >> h >> c1 >> m >> c2 >> sec) || c1 != ':' || c2 != ':')
        throw InputError(where + ": bad time stamp '" + s + "'");
    return h * 60 + m + (sec >= 30 ? 1 : 0);
}

struct LineCode {
    Matrix3c z_per_km;
};

}  // namespace

FeederImport import_european_feeder(const std::filesystem::path& directory, const FeederOptions& options) {
    const Table coords = read_table(directory / "Buscoords.csv", "Busname");
    const Table codes = read_table(directory / "LineCodes.csv", "Name");
    const Table lines = read_table(directory / "Lines.csv", "Name");
    const Table loads = read_table(directory / "Loads.csv", "Name");
    const Table shapes = read_table(directory / "LoadShapes.csv", "Name");

    NetworkData data;
    data.bases = options.bases;
    data.limits = options.limits;
    const double i_max = options.dt_rating_va / 3.0 / options.bases.power_va;
    data.limits.i_max = {i_max, i_max, i_max};
    data.root_voltage = balanced_phasor(options.root_voltage_pu);
    for (std::size_t p = 0; p < 3; ++p) data.limits.angle_center[p] = std::arg(data.root_voltage[p]);

    std::unordered_map<std::string, std::size_t> bus_index;
    {
        const std::size_t c_name = coords.column("Busname"), c_x = coords.column("x"), c_y = coords.column("y");
        for (std::size_t r = 0; r < coords.rows.size(); ++r) {
            Bus b{coords.cell(r, c_name), coords.number(r, c_x), coords.number(r, c_y)};
            if (!bus_index.emplace(b.id, data.buses.size()).second)
                throw InputError(coords.file + ": duplicate bus '" + b.id + "'");
            data.buses.push_back(std::move(b));
        }
    }
    if (data.buses.empty()) throw InputError(coords.file + ": no buses");
    data.root = 0;

    const double z_base = options.bases.impedance_ohm();
    std::map<std::string, LineCode> code_table;
    {
        const std::size_t c_name = codes.column("Name"), c_r1 = codes.column("R1"), c_x1 = codes.column("X1"),
                          c_r0 = codes.column("R0"), c_x0 = codes.column("X0"), c_units = codes.column("Units");
        for (std::size_t r = 0; r < codes.rows.size(); ++r) {
            const std::string& name = codes.cell(r, c_name);
            const double per_km = 1.0 / length_scale_to_km(codes.cell(r, c_units), codes.file + " code '" + name + "'");
            const Complex z1(codes.number(r, c_r1), codes.number(r, c_x1));
            const Complex z0(codes.number(r, c_r0), codes.number(r, c_x0));
            // Kron-reduced phase frame from sequence data.
            const Complex zs = (z0 + 2.0 * z1) / 3.0 * per_km;
            const Complex zm = (z0 - z1) / 3.0 * per_km;
            Matrix3c z;
            z.setConstant(zm);
            z.diagonal().setConstant(zs);
            if (!code_table.emplace(name, LineCode{z}).second)
                throw InputError(codes.file + ": duplicate line code '" + name + "'");
        }
    }

    {
        const std::size_t c_name = lines.column("Name"), c_b1 = lines.column("Bus1"), c_b2 = lines.column("Bus2"),
                          c_len = lines.column("Length"), c_units = lines.column("Units"),
                          c_code = lines.column("LineCode");
        for (std::size_t r = 0; r < lines.rows.size(); ++r) {
            Line line;
            line.id = lines.cell(r, c_name);
            const std::string where = lines.file + " line '" + line.id + "'";
            auto bus = [&](std::size_t col) {
                auto it = bus_index.find(lines.cell(r, col));
                if (it == bus_index.end())
                    throw InputError(where + " references undefined bus '" + lines.cell(r, col) + "'");
                return it->second;
            };
            line.from = bus(c_b1);
            line.to = bus(c_b2);
            line.code = lines.cell(r, c_code);
            auto code = code_table.find(line.code);
            if (code == code_table.end()) throw InputError(where + " references undefined line code '" + line.code + "'");
            const double km = lines.number(r, c_len) * length_scale_to_km(lines.cell(r, c_units), where);
            line.length_m = km * 1000.0;
            line.z = code->second.z_per_km * (km / z_base);
            data.lines.push_back(std::move(line));
        }
    }

    struct Shape {
        std::filesystem::path file;
        int points = 0;
        int interval = 0;
    };
    std::map<std::string, Shape> shape_table;
    {
        const std::size_t c_name = shapes.column("Name"), c_n = shapes.column("npts"),
                          c_int = shapes.column("minterval"), c_file = shapes.column("File");
        for (std::size_t r = 0; r < shapes.rows.size(); ++r)
            shape_table[shapes.cell(r, c_name)] = Shape{directory / "Load Profiles" / shapes.cell(r, c_file),
                                                        static_cast<int>(shapes.number(r, c_n)),
                                                        static_cast<int>(shapes.number(r, c_int))};
    }

    DemandSeries demand;
    demand.resolution_min = 0;
    {
        const std::size_t c_name = loads.column("Name"), c_bus = loads.column("Bus"),
                          c_phase = loads.column("phases"), c_kw = loads.column("kW"), c_pf = loads.column("PF"),
                          c_shape = loads.column("Yearly");
        std::vector<std::pair<int, std::size_t>> order;
        for (std::size_t r = 0; r < loads.rows.size(); ++r) {
            const std::string& name = loads.cell(r, c_name);
            const std::string where = loads.file + " load '" + name + "'";
            std::size_t digits = name.size();
            while (digits > 0 && std::isdigit(static_cast<unsigned char>(name[digits - 1]))) --digits;
            if (digits == name.size()) throw InputError(where + ": name carries no customer index");
            Customer c;
            c.id = std::stoi(name.substr(digits));
            c.name = name;
            auto bus = bus_index.find(loads.cell(r, c_bus));
            if (bus == bus_index.end())
                throw InputError(where + " references undefined bus '" + loads.cell(r, c_bus) + "'");
            c.bus = bus->second;
            c.phase = parse_phase(loads.cell(r, c_phase));
            c.power_factor = loads.number(r, c_pf);
            if (!(c.power_factor > 0.0 && c.power_factor <= 1.0)) throw InputError(where + ": power factor out of range");
            c.shape = loads.cell(r, c_shape);
            auto shape = shape_table.find(c.shape);
            if (shape == shape_table.end()) throw InputError(where + " references undefined load shape '" + c.shape + "'");

            const Table profile = read_table(shape->second.file, "time");
            const std::size_t c_time = profile.column("time"), c_mult = profile.column("mult");
            if (static_cast<int>(profile.rows.size()) != shape->second.points)
                throw InputError(profile.file + ": expected " + std::to_string(shape->second.points) + " samples, found " +
                                 std::to_string(profile.rows.size()));
            const int interval = shape->second.interval;
            if (demand.resolution_min == 0) {
                demand.resolution_min = interval;
                for (std::size_t k = 0; k < profile.rows.size(); ++k)
                    demand.start_minute.push_back(
                        parse_clock_minute(profile.cell(k, c_time), profile.file) - interval);
            } else {
                if (interval != demand.resolution_min || profile.rows.size() != demand.samples())
                    throw InputError(profile.file + ": time stamps differ from the other profiles");
                for (std::size_t k = 0; k < profile.rows.size(); ++k)
                    if (parse_clock_minute(profile.cell(k, c_time), profile.file) - interval != demand.start_minute[k])
                        throw InputError(profile.file + ": time stamps differ from the other profiles");
            }
            const double kw = loads.number(r, c_kw);
            const double tan_phi = std::tan(std::acos(c.power_factor));
            std::vector<double> p(profile.rows.size()), q(profile.rows.size());
            for (std::size_t k = 0; k < profile.rows.size(); ++k) {
                p[k] = kw * profile.number(k, c_mult) * 1000.0;
                q[k] = p[k] * tan_phi;
            }
            order.emplace_back(c.id, data.customers.size());
            data.customers.push_back(std::move(c));
            demand.p_w.push_back(std::move(p));
            demand.q_var.push_back(std::move(q));
        }
        // Customers are indexed in ascending id order.
        std::sort(order.begin(), order.end());
        std::vector<Customer> customers;
        std::vector<std::vector<double>> p, q;
        for (std::size_t i = 0; i < order.size(); ++i) {
            if (i > 0 && order[i].first == order[i - 1].first)
                throw InputError(loads.file + ": duplicate customer index " + std::to_string(order[i].first));
            customers.push_back(std::move(data.customers[order[i].second]));
            p.push_back(std::move(demand.p_w[order[i].second]));
            q.push_back(std::move(demand.q_var[order[i].second]));
        }
        data.customers = std::move(customers);
        demand.p_w = std::move(p);
        demand.q_var = std::move(q);
    }

    FeederImport result;
    result.report = ImportReport{data.buses.size(), data.lines.size(), code_table.size(), data.customers.size(),
                                 demand.samples()};
    result.network = std::make_shared<const Network>(std::move(data));
    result.demand = std::move(demand);
    return result;
}

void write_profiles_csv(const std::filesystem::path& path, const Network& network, const DemandSeries& series) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    out << "period,customer_id,p_kw,q_kvar\n";
    out << std::setprecision(17);
    for (std::size_t k = 0; k < series.samples(); ++k)
        for (std::size_t j = 0; j < network.customer_count(); ++j)
            out << k << ',' << network.customers()[j].id << ',' << series.p_w[j][k] / 1000.0 << ','
                << series.q_var[j][k] / 1000.0 << '\n';
}

}  // namespace phasebal
