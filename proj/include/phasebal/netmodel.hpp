#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "phasebal/assignment.hpp"
#include "phasebal/common.hpp"

namespace phasebal {

struct PerUnitBases {
    double voltage_v = 240.0;   ///< line-neutral
    double power_va = 100e3;

    double impedance_ohm() const { return voltage_v * voltage_v / power_va; }
    double current_a() const { return power_va / voltage_v; }
};

struct Limits {
    double v_min = 0.94;
    double v_max = 1.10;
    double nu = 0.01;
    /// Per-phase current limit of the transformer branch, p.u.
    std::array<double, 3> i_max{2.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0};
    double penalty = 500.0;
    /// Nominal angle per phase; the linearized lower voltage bound and the
    /// inverse-voltage fit window are centred here.
    std::array<double, 3> angle_center{0.0, -2.0 * std::numbers::pi / 3.0, 2.0 * std::numbers::pi / 3.0};
    double angle_window = 10.0 * std::numbers::pi / 180.0;
};

struct Bus {
    std::string id;
    double x = 0.0;
    double y = 0.0;
};

struct Line {
    std::string id;
    std::size_t from = 0;
    std::size_t to = 0;
    std::string code;
    double length_m = 0.0;
    Matrix3c z = Matrix3c::Zero();  ///< series impedance, p.u.
};

struct Customer {
    int id = 0;
    std::string name;
    std::size_t bus = 0;
    Phase phase = Phase::a;  ///< initial connection
    bool adjustable = false;
    double power_factor = 0.95;
    std::string shape;
};

/// Raw feeder description before topology validation.
struct NetworkData {
    std::vector<Bus> buses;
    std::vector<Line> lines;
    std::vector<Customer> customers;
    std::size_t root = 0;
    Phasor3 root_voltage = balanced_phasor(1.05);
    Limits limits;
    PerUnitBases bases;
};

struct TopologyReport {
    /// Breadth-first order from the root; parents precede children.
    std::vector<std::size_t> depth_order;
    std::vector<std::size_t> depth;
    /// Line feeding each bus from upstream (none for the root).
    std::vector<std::optional<std::size_t>> parent_line;
    std::vector<std::size_t> upstream;    ///< per line
    std::vector<std::size_t> downstream;  ///< per line
    std::vector<std::vector<std::size_t>> child_lines;  ///< per bus
    std::vector<std::vector<std::size_t>> downstream_customers;  ///< per line, ascending
    std::vector<std::vector<std::size_t>> bus_customers;
    std::size_t dt_line = 0;
};

/// Radiality check rooted at data.root. Throws TopologyError on a cycle
/// (listing its lines), a disconnected bus, or a root without exactly one
/// outgoing line.
TopologyReport validate_radial(const NetworkData& data);

/// Validated, immutable feeder.
class Network {
public:
    explicit Network(NetworkData data);

    const NetworkData& data() const { return data_; }
    const TopologyReport& topology() const { return topology_; }

    std::size_t bus_count() const { return data_.buses.size(); }
    std::size_t line_count() const { return data_.lines.size(); }
    std::size_t customer_count() const { return data_.customers.size(); }
    const std::vector<Bus>& buses() const { return data_.buses; }
    const std::vector<Line>& lines() const { return data_.lines; }
    const std::vector<Customer>& customers() const { return data_.customers; }
    std::size_t root() const { return data_.root; }
    const Phasor3& root_voltage() const { return data_.root_voltage; }
    const Limits& limits() const { return data_.limits; }
    const PerUnitBases& bases() const { return data_.bases; }

    std::optional<std::size_t> find_bus(std::string_view id) const;
    std::optional<std::size_t> find_customer(int id) const;

    PhaseAssignment initial_assignment() const;

private:
    NetworkData data_;
    TopologyReport topology_;
};

/// Per-customer net demand samples. Sample k covers
/// [start_minute[k], start_minute[k] + resolution_min).
struct DemandSeries {
    int resolution_min = 1;
    std::vector<int> start_minute;
    std::vector<std::vector<double>> p_w;    ///< [customer][sample]
    std::vector<std::vector<double>> q_var;  ///< [customer][sample]

    std::size_t samples() const { return start_minute.size(); }
};

struct ImportReport {
    std::size_t buses = 0;
    std::size_t lines = 0;
    std::size_t line_codes = 0;
    std::size_t customers = 0;
    std::size_t samples = 0;
};

struct FeederImport {
    std::shared_ptr<const Network> network;
    DemandSeries demand;
    ImportReport report;
};

struct FeederOptions {
    PerUnitBases bases;
    Limits limits;
    double root_voltage_pu = 1.05;
    /// Transformer rating; sets the per-phase current limit as (rating / 3) / S_base.
    double dt_rating_va = 200e3;
};

/// Reads Buscoords.csv, LineCodes.csv, Lines.csv, Loads.csv, LoadShapes.csv
/// and the load profile files of the European LV test feeder layout.
FeederImport import_european_feeder(const std::filesystem::path& directory, const FeederOptions& options = {});

/// Window-mean resampling; target must be an integer multiple of the source resolution.
DemandSeries resample_profiles(const DemandSeries& series, int target_resolution_min);

/// Half-cosine clear-sky bell between 06:00 and 18:00 peaking at capacity at noon.
double pv_generation_w(double minute_of_day, double capacity_w);

struct ScenarioOptions {
    std::vector<int> pv_customers;
    std::vector<int> psd_customers;
    double pv_capacity_w = 7000.0;
    bool pv_q_control = false;
    double pv_q_fraction = 0.05;
};

/// Immutable per-period optimization case.
class CaseSnapshot {
public:
    CaseSnapshot(std::shared_ptr<const Network> network, std::size_t period, std::vector<Complex> demand,
                 std::vector<bool> adjustable, std::vector<double> q_min = {}, std::vector<double> q_max = {});

    const Network& network() const { return *network_; }
    const std::shared_ptr<const Network>& network_ptr() const { return network_; }
    std::size_t period() const { return period_; }
    /// Net demand P + jQ per customer, p.u.
    const std::vector<Complex>& demand() const { return demand_; }
    const std::vector<bool>& adjustable() const { return adjustable_; }
    const std::vector<double>& q_min() const { return q_min_; }
    const std::vector<double>& q_max() const { return q_max_; }
    std::vector<std::size_t> adjustable_customers() const;
    std::vector<std::size_t> q_controllable_customers() const;

    PhaseAssignment initial_assignment() const { return network_->initial_assignment(); }

    /// Demand with the reactive adjustments applied (empty settings = none).
    Complex effective_demand(std::size_t customer, const QSettings& q) const;

private:
    std::shared_ptr<const Network> network_;
    std::size_t period_;
    std::vector<Complex> demand_;
    std::vector<bool> adjustable_;
    std::vector<double> q_min_;
    std::vector<double> q_max_;
};

CaseSnapshot build_snapshot(std::shared_ptr<const Network> network, const DemandSeries& series, std::size_t period,
                            const ScenarioOptions& options);

/// Throws InputError unless the assignment is one-hot, sized to the
/// snapshot, and keeps every fixed customer on its initial phase.
void validate_assignment(const CaseSnapshot& snapshot, const PhaseAssignment& assignment);

/// Canonical JSON form (network.json) and the profiles.csv table.
std::string network_to_json(const Network& network);
std::shared_ptr<const Network> network_from_json(std::string_view text);
void write_profiles_csv(const std::filesystem::path& path, const Network& network, const DemandSeries& series);

}  // namespace phasebal
