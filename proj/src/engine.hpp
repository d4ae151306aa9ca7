#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "electrochem.hpp"
#include "protocols.hpp"
#include "scheduler.hpp"

namespace packsim {

// Per-chemistry cell parameters. Capacity units are ampere-seconds of
// charge at the applied-level scale; levels, flux and capacity just have
// to agree with each other.
struct ChemistryParams {
    double diffusivity = 1e-13;          // m^2/s
    double electrode_thickness = 50e-6;  // m
    int grid_nodes = 100;
    double initial_concentration = 0.0;
    double flux_per_current = 1.0;       // surface flux per unit cluster current

    FadeModel fade_constant{100.0, 0.1, 1e-3};
    FadeModel fade_pulsed{100.0, 0.08, 8e-4};

    double standard_potential = 3.0;     // V
    int electrons = 1;
    double initial_soc = 0.5;
    double cell_capacity = 3600.0;       // charge per cell at level scale
    double base_resistance = 0.05;       // ohms per cell; cells in a cluster parallel
    double resistance_temp_slope = 0.0;  // ohms per kelvin above nominal
    double nominal_temperature = 298.15; // K
    double heating_coefficient = 0.0;    // K per watt-second of I^2 R
    double cooling_coefficient = 0.0;    // 1/s toward ambient
};

// One series string of `clusters` parallel clusters, all one chemistry.
// Chemistries never share a string (their voltage windows differ), and
// strings stack in series, so the pack voltage is the sum over strings.
struct StringSpec {
    std::string chemistry;
    int clusters = 1;
    int cells_per_cluster = 1;
};

struct SchedulerConfig {
    ScheduleConstraints constraints{};
    double period = 1.0;  // seconds between scheduler invocations
};

struct SimulationParams {
    double total_time = 200.0;        // s
    double dt_safety = 0.5;           // fraction of the explicit stability bound
    int sample_count = 200;           // rows kept in trace.csv
    double infeasibility_grace = 10.0;  // s of warned low voltage before abort
    double q_clamp_epsilon = 1e-6;    // soc clamp for the Q map
    std::string cycle_accounting = "throughput";
};

struct PackConfig {
    PackComposition composition{250.0, 150.0, 0.0};
    std::vector<StringSpec> strings;
    std::map<std::string, ChemistryParams> chemistries;
    double ambient_temperature = 298.15;
    CurrentProfile protocol = ConstantProfile{0.0};
    SchedulerConfig scheduler{};
    SimulationParams simulation{};
};

struct SchedulerEvent {
    double time;
    int cluster_id;
    std::string event;   // "rest" | "wake"
    std::string reason;  // "resistance" | "temperature" | "recovered"
};

struct ClusterInfo {
    int id;
    int string_index;
    std::string chemistry;
};

// Full-resolution per-step record of a run. Row k describes step k: the
// level applied over [k dt, (k+1) dt), the cluster modes that split it, and
// the state after the update. CSV writers downsample this.
struct SimulationTrace {
    double dt = 0.0;
    std::vector<double> times;          // k * dt
    std::vector<double> applied_level;
    std::vector<double> pack_voltage;
    std::vector<std::string> chemistry_names;     // column order for capacity
    std::vector<std::vector<double>> capacity;    // [chemistry][step], percent
    std::vector<ClusterInfo> clusters;
    std::vector<std::vector<std::uint8_t>> active;  // [cluster][step], 1 = active
    std::vector<std::vector<double>> surface;       // [cluster][step]
    std::vector<std::vector<double>> temperature;   // [cluster][step]
    std::vector<std::vector<double>> resistance;    // [cluster][step]
    std::vector<std::vector<double>> soc;           // [cluster][step]
    std::vector<SchedulerEvent> events;
};

// Reaction quotient from state of charge: discharge consumes reactants, so
// Q grows and the Nernst voltage falls as soc drops. Clamped to keep Q
// finite at the rails.
double q_from_soc(double soc, double clamp_epsilon);

// Terminal voltage of the pack for a full cluster-state snapshot (only
// ACTIVE clusters conduct). `load_current` is discharge-positive; each
// string divides it across its active clusters by inverse resistance and
// contributes the parallel-node voltage; strings add in series. Throws
// InvalidInputError when any string has no active cluster.
double pack_voltage(const PackConfig& config, const std::vector<ClusterState>& clusters,
                    double load_current);

// Throughput cycle accounting: one equivalent cycle per full
// charge+discharge of the reference capacity.
double equivalent_cycles(double running_total, double level, double dt,
                         double reference_capacity);

SimulationTrace run_simulation(const PackConfig& config);

}  // namespace packsim
