#include "engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_map>
#include <variant>

#include "diffusion.hpp"
#include "errors.hpp"

namespace packsim {

namespace {

struct StringLayout {
    const ChemistryParams* chem;
    std::string chemistry;
    std::vector<int> cluster_ids;
    double capacity;  // reference charge for cycle accounting
};

std::vector<StringLayout> build_layout(const PackConfig& config) {
    if (config.strings.empty()) {
        throw InvalidInputError("engine: pack has no strings");
    }
    std::vector<StringLayout> layout;
    int next_id = 0;
    for (const auto& spec : config.strings) {
        auto it = config.chemistries.find(spec.chemistry);
        if (it == config.chemistries.end()) {
            throw InvalidInputError("engine: string references unknown chemistry '" +
                                    spec.chemistry + "'");
        }
        if (spec.clusters < 1 || spec.cells_per_cluster < 1) {
            throw InvalidInputError("engine: strings need at least one cluster of one cell");
        }
        StringLayout s;
        s.chem = &it->second;
        s.chemistry = spec.chemistry;
        for (int i = 0; i < spec.clusters; ++i) {
            s.cluster_ids.push_back(next_id++);
        }
        s.capacity = static_cast<double>(spec.clusters) * spec.cells_per_cluster *
                     it->second.cell_capacity;
        layout.push_back(std::move(s));
    }
    return layout;
}

bool uses_pulsed_fade(const CurrentProfile& protocol) {
    return std::holds_alternative<FixedPulseProfile>(protocol) ||
           std::holds_alternative<PercussiveParams>(protocol);
}

// Parallel-node voltage of one string: V = (sum g_i OCV_i - I) / G with
// g = 1/R, which equals the conductance-weighted mean of the per-cluster
// terminal voltages OCV_i - I_i R_i at the inverse-resistance split.
double string_voltage(const StringLayout& s,
                      const std::function<const ClusterState*(int)>& state_of,
                      double load_current, double q_eps) {
    double g_sum = 0.0;
    double weighted = 0.0;
    for (int id : s.cluster_ids) {
        const ClusterState* c = state_of(id);
        if (c == nullptr || c->mode != ClusterMode::Active) {
            continue;
        }
        const double g = 1.0 / c->internal_resistance;
        const double ocv = nernst_voltage(
            {s.chem->standard_potential, c->temperature, s.chem->electrons,
             q_from_soc(c->soc, q_eps)});
        g_sum += g;
        weighted += g * ocv;
    }
    if (g_sum == 0.0) {
        throw InvalidInputError("pack_voltage: string has no active cluster");
    }
    return (weighted - load_current) / g_sum;
}

}  // namespace

double q_from_soc(double soc, double clamp_epsilon) {
    if (!(clamp_epsilon > 0.0 && clamp_epsilon < 0.5)) {
        throw InvalidInputError("q_from_soc: clamp epsilon must be in (0, 0.5)");
    }
    const double s = std::clamp(soc, clamp_epsilon, 1.0 - clamp_epsilon);
    return (1.0 - s) / s;
}

double pack_voltage(const PackConfig& config, const std::vector<ClusterState>& clusters,
                    double load_current) {
    const auto layout = build_layout(config);
    std::unordered_map<int, const ClusterState*> by_id;
    for (const auto& c : clusters) {
        by_id[c.id] = &c;
    }
    double v = 0.0;
    for (const auto& s : layout) {
        v += string_voltage(
            s, [&](int id) { auto it = by_id.find(id); return it == by_id.end() ? nullptr : it->second; },
            load_current, config.simulation.q_clamp_epsilon);
    }
    return v;
}

double equivalent_cycles(double running_total, double level, double dt,
                         double reference_capacity) {
    if (!(reference_capacity > 0.0)) {
        throw InvalidInputError("equivalent_cycles: reference capacity must be positive");
    }
    if (!(dt >= 0.0)) {
        throw InvalidInputError("equivalent_cycles: dt must be non-negative");
    }
    return running_total + std::abs(level) * dt / (2.0 * reference_capacity);
}

namespace {

struct Cluster {
    ClusterState state;
    DiffusionGrid grid;
    const ChemistryParams* chem;
    int string_index;
    double base_resistance;  // cluster-level: cell resistance over parallel cells
};

void validate_simulation_params(const SimulationParams& p) {
    if (!(p.total_time > 0.0)) {
        throw InvalidInputError("engine: total_time must be positive");
    }
    if (!(p.dt_safety > 0.0 && p.dt_safety <= 1.0)) {
        throw InvalidInputError("engine: dt_safety must be in (0, 1]");
    }
    if (p.sample_count < 2) {
        throw InvalidInputError("engine: sample_count must be at least 2");
    }
    if (!(p.infeasibility_grace >= 0.0)) {
        throw InvalidInputError("engine: infeasibility_grace must be non-negative");
    }
    if (p.cycle_accounting != "throughput") {
        throw InvalidInputError("engine: unknown cycle_accounting rule '" + p.cycle_accounting +
                                "' (supported: throughput)");
    }
}

void validate_chemistry(const std::string& name, const ChemistryParams& c) {
    const std::string where = "engine: chemistry '" + name + "': ";
    if (!(c.diffusivity > 0.0)) throw InvalidInputError(where + "diffusivity must be positive");
    if (!(c.electrode_thickness > 0.0)) {
        throw InvalidInputError(where + "electrode_thickness must be positive");
    }
    if (c.grid_nodes < 3) throw InvalidInputError(where + "grid_nodes must be >= 3");
    if (!(c.flux_per_current >= 0.0)) {
        throw InvalidInputError(where + "flux_per_current must be non-negative");
    }
    if (c.electrons < 1) throw InvalidInputError(where + "electrons must be >= 1");
    if (!(c.initial_soc >= 0.0 && c.initial_soc <= 1.0)) {
        throw InvalidInputError(where + "initial_soc must be within [0, 1]");
    }
    if (!(c.cell_capacity > 0.0)) throw InvalidInputError(where + "cell_capacity must be positive");
    if (!(c.base_resistance > 0.0)) {
        throw InvalidInputError(where + "base_resistance must be positive");
    }
    if (c.resistance_temp_slope < 0.0) {
        throw InvalidInputError(where + "resistance_temp_slope must be non-negative");
    }
    if (c.heating_coefficient < 0.0 || c.cooling_coefficient < 0.0) {
        throw InvalidInputError(where + "thermal coefficients must be non-negative");
    }
}

}  // namespace

SimulationTrace run_simulation(const PackConfig& config) {
    pack_specific_energy(config.composition);  // validates the blend
    validate_simulation_params(config.simulation);
    for (const auto& [name, chem] : config.chemistries) {
        validate_chemistry(name, chem);
    }
    const auto layout = build_layout(config);

    // Build clusters in string order; ids are sequential so trace columns
    // and scheduler ids line up with the config.
    std::vector<Cluster> clusters;
    for (size_t si = 0; si < layout.size(); ++si) {
        const auto& spec = config.strings[si];
        const auto& chem = *layout[si].chem;
        for (int id : layout[si].cluster_ids) {
            Cluster cl{
                ClusterState{},
                DiffusionGrid(chem.electrode_thickness, chem.grid_nodes, chem.diffusivity,
                              chem.initial_concentration),
                &chem,
                static_cast<int>(si),
                chem.base_resistance / spec.cells_per_cluster,
            };
            cl.state.id = id;
            cl.state.mode = ClusterMode::Active;
            cl.state.soc = chem.initial_soc;
            cl.state.temperature = config.ambient_temperature;
            cl.state.internal_resistance =
                cl.base_resistance +
                chem.resistance_temp_slope *
                    std::max(0.0, cl.state.temperature - chem.nominal_temperature);
            cl.state.cells_in_cluster = spec.cells_per_cluster;
            clusters.push_back(std::move(cl));
        }
    }
    const int total_clusters = static_cast<int>(clusters.size());
    if (total_clusters < config.scheduler.constraints.min_active_clusters) {
        throw InvalidInputError("engine: fewer clusters than min_active_clusters");
    }

    // One shared dt from the tightest stability bound across chemistries.
    double dt = std::numeric_limits<double>::infinity();
    for (const auto& s : layout) {
        DiffusionGrid probe(s.chem->electrode_thickness, s.chem->grid_nodes, s.chem->diffusivity);
        dt = std::min(dt, probe.stable_dt(config.simulation.dt_safety));
    }
    const int steps = static_cast<int>(config.simulation.total_time / dt);
    if (steps < 1) {
        throw InvalidInputError("engine: total_time is shorter than one stable step");
    }
    const int scheduler_every =
        std::max(1, static_cast<int>(std::llround(config.scheduler.period / dt)));

    const bool pulsed_fade = uses_pulsed_fade(config.protocol);
    std::vector<double> string_cycles(layout.size(), 0.0);

    // Capacity is reported per chemistry, in first-appearance order; when a
    // chemistry spans several strings the most-cycled one governs.
    std::vector<std::string> chem_names;
    for (const auto& s : layout) {
        if (std::find(chem_names.begin(), chem_names.end(), s.chemistry) == chem_names.end()) {
            chem_names.push_back(s.chemistry);
        }
    }
    auto chemistry_capacity = [&](const std::string& name) {
        double worst_n = 0.0;
        const ChemistryParams* chem = nullptr;
        for (size_t si = 0; si < layout.size(); ++si) {
            if (layout[si].chemistry == name) {
                worst_n = std::max(worst_n, string_cycles[si]);
                chem = layout[si].chem;
            }
        }
        const FadeModel& fade = pulsed_fade ? chem->fade_pulsed : chem->fade_constant;
        return capacity_retained(fade, worst_n);
    };

    auto snapshot = [&]() {
        std::vector<ClusterState> states;
        states.reserve(clusters.size());
        for (const auto& c : clusters) {
            states.push_back(c.state);
        }
        return states;
    };

    // Voltage over an arbitrary active subset, used for trace rows, CC-CV
    // feedback, and scheduler feasibility probes. A string with everything
    // rested cannot conduct: report -inf so feasibility checks reject it.
    auto voltage_of = [&](const std::vector<ClusterState>& states, double load) {
        std::unordered_map<int, const ClusterState*> by_id;
        for (const auto& s : states) {
            by_id[s.id] = &s;
        }
        double v = 0.0;
        for (const auto& s : layout) {
            double g_sum = 0.0;
            bool any = false;
            for (int id : s.cluster_ids) {
                auto it = by_id.find(id);
                if (it != by_id.end() && it->second->mode == ClusterMode::Active) {
                    any = true;
                    g_sum += 1.0 / it->second->internal_resistance;
                }
            }
            if (!any || g_sum == 0.0) {
                return -std::numeric_limits<double>::infinity();
            }
            v += string_voltage(
                s,
                [&](int id) {
                    auto it = by_id.find(id);
                    return it == by_id.end() ? nullptr : it->second;
                },
                load, config.simulation.q_clamp_epsilon);
        }
        return v;
    };

    PercussiveState percussive_state{};
    CccvState cccv_state{};
    double prev_level = 0.0;
    double warn_since = -1.0;

    SimulationTrace trace;
    trace.dt = dt;
    trace.chemistry_names = chem_names;
    trace.capacity.resize(chem_names.size());
    for (const auto& c : clusters) {
        trace.clusters.push_back({c.state.id, c.string_index, layout[c.string_index].chemistry});
    }
    trace.active.resize(clusters.size());
    trace.surface.resize(clusters.size());
    trace.temperature.resize(clusters.size());
    trace.resistance.resize(clusters.size());
    trace.soc.resize(clusters.size());

    for (int k = 0; k < steps; ++k) {
        const double t = k * dt;

        // (1) applied level for this step
        double level;
        if (const auto* cccv = std::get_if<CccvProfile>(&config.protocol)) {
            const auto states = snapshot();
            const double measured = voltage_of(states, -prev_level);
            const double ocv = voltage_of(states, 0.0);
            double r_eff = 0.0;  // series sum of the parallel combinations
            for (const auto& s : layout) {
                double g_sum = 0.0;
                for (int id : s.cluster_ids) {
                    const auto& c = clusters[static_cast<size_t>(id)];
                    if (c.state.mode == ClusterMode::Active) {
                        g_sum += 1.0 / c.state.internal_resistance;
                    }
                }
                if (g_sum == 0.0) {
                    throw InvalidInputError("engine: string has no active cluster");
                }
                r_eff += 1.0 / g_sum;
            }
            level = cccv_level(*cccv, measured, ocv, r_eff, cccv_state);
        } else if (std::holds_alternative<PercussiveParams>(config.protocol)) {
            // Feedback comes from the hottest active cluster.
            const Cluster* hottest = nullptr;
            for (const auto& c : clusters) {
                if (c.state.mode != ClusterMode::Active) continue;
                if (hottest == nullptr || c.state.temperature > hottest->state.temperature) {
                    hottest = &c;
                }
            }
            if (hottest == nullptr) {
                throw InvalidInputError("engine: no active cluster for feedback");
            }
            const auto step_result = next_percussive_level(
                std::get<PercussiveParams>(config.protocol), percussive_state,
                {t, hottest->state.internal_resistance, hottest->state.temperature,
                 hottest->grid.surface_concentration()});
            level = step_result.level;
            percussive_state = step_result.state;
        } else {
            level = flux_at(config.protocol, t);
        }

        // (2)+(3) split by inverse resistance within each string; every
        // string carries the full pack current. Rested grids step at zero
        // flux so their surfaces relax.
        std::vector<double> share(clusters.size(), 0.0);
        for (const auto& s : layout) {
            double g_sum = 0.0;
            for (int id : s.cluster_ids) {
                if (clusters[static_cast<size_t>(id)].state.mode == ClusterMode::Active) {
                    g_sum += 1.0 / clusters[static_cast<size_t>(id)].state.internal_resistance;
                }
            }
            if (g_sum == 0.0) {
                throw InvalidInputError("engine: string has no active cluster");
            }
            for (int id : s.cluster_ids) {
                auto& c = clusters[static_cast<size_t>(id)];
                if (c.state.mode == ClusterMode::Active) {
                    const double weight = (1.0 / c.state.internal_resistance) / g_sum;
                    share[static_cast<size_t>(id)] = level * weight;
                }
            }
        }
        for (auto& c : clusters) {
            const double flux = share[static_cast<size_t>(c.state.id)] * c.chem->flux_per_current;
            c.grid.step(c.state.mode == ClusterMode::Active ? flux : 0.0, dt);
        }

        // (4) lumped thermal + affine resistance, (5) soc
        for (auto& c : clusters) {
            const double current = share[static_cast<size_t>(c.state.id)];
            const double heat =
                c.chem->heating_coefficient * current * current * c.state.internal_resistance;
            c.state.temperature +=
                dt * (heat - c.chem->cooling_coefficient *
                                 (c.state.temperature - config.ambient_temperature));
            c.state.internal_resistance =
                c.base_resistance +
                c.chem->resistance_temp_slope *
                    std::max(0.0, c.state.temperature - c.chem->nominal_temperature);
            const double cap = c.state.cells_in_cluster * c.chem->cell_capacity;
            c.state.soc = std::clamp(c.state.soc + current * dt / cap, 0.0, 1.0);
        }

        // (5) cycle accounting per string (series: full pack current)
        for (size_t si = 0; si < layout.size(); ++si) {
            string_cycles[si] = equivalent_cycles(string_cycles[si], level, dt,
                                                  layout[si].capacity);
        }

        // dwell clocks
        for (auto& c : clusters) {
            c.state.time_in_mode += dt;
            if (c.state.mode == ClusterMode::Rest) {
                c.state.cumulative_rest_time += dt;
            }
        }

        // record row k: modes are the ones that carried this step's current
        trace.times.push_back(t);
        trace.applied_level.push_back(level);
        trace.pack_voltage.push_back(voltage_of(snapshot(), -level));
        for (size_t ci = 0; ci < chem_names.size(); ++ci) {
            trace.capacity[ci].push_back(chemistry_capacity(chem_names[ci]));
        }
        for (size_t i = 0; i < clusters.size(); ++i) {
            const auto& c = clusters[i];
            trace.active[i].push_back(c.state.mode == ClusterMode::Active ? 1 : 0);
            trace.surface[i].push_back(c.grid.surface_concentration());
            trace.temperature[i].push_back(c.state.temperature);
            trace.resistance[i].push_back(c.state.internal_resistance);
            trace.soc[i].push_back(c.state.soc);
        }

        // (6) scheduler at cadence; decisions take effect next step
        if ((k + 1) % scheduler_every == 0) {
            auto states = snapshot();
            for (int id : wake_due(states, config.scheduler.constraints)) {
                auto& c = clusters[static_cast<size_t>(id)];
                c.state.mode = ClusterMode::Active;
                c.state.time_in_mode = 0.0;
                trace.events.push_back({t, id, "wake", "recovered"});
            }
            states = snapshot();
            const auto selection = select_rest_set(
                states, config.scheduler.constraints,
                [&](const std::vector<ClusterState>& remaining) {
                    return voltage_of(remaining, -level);
                });
            for (int id : selection.rest_ids) {
                auto& c = clusters[static_cast<size_t>(id)];
                const auto& cons = config.scheduler.constraints;
                const bool resistance_led =
                    c.state.internal_resistance / cons.resistance_threshold >=
                    c.state.temperature / cons.temperature_threshold;
                c.state.mode = ClusterMode::Rest;
                c.state.time_in_mode = 0.0;
                trace.events.push_back(
                    {t, id, "rest", resistance_led ? "resistance" : "temperature"});
            }
            if (selection.feasibility_warning) {
                if (warn_since < 0.0) {
                    warn_since = t;
                }
                if (t - warn_since >= config.simulation.infeasibility_grace) {
                    throw InfeasibilityError(
                        "engine: pack voltage below floor " +
                        std::to_string(config.scheduler.constraints.min_pack_voltage) +
                        " V with no feasible rest assignment since t=" +
                        std::to_string(warn_since) + " s");
                }
            } else {
                warn_since = -1.0;
            }
        }

        prev_level = level;
    }

    return trace;
}

}  // namespace packsim
