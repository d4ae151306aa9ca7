#include "packsim.h"

#include <cstring>
#include <string>

#include "diffusion.hpp"
#include "electrochem.hpp"
#include "errors.hpp"
#include "runner.hpp"

struct packsim_grid {
    packsim::DiffusionGrid impl;
};

namespace {

thread_local std::string g_last_error;

packsim_status classify(const std::exception& e) {
    g_last_error = e.what();
    if (dynamic_cast<const packsim::ConfigError*>(&e)) return PACKSIM_ERROR_CONFIG;
    if (dynamic_cast<const packsim::StabilityError*>(&e)) return PACKSIM_ERROR_STABILITY;
    if (dynamic_cast<const packsim::InfeasibilityError*>(&e)) return PACKSIM_ERROR_INFEASIBLE;
    if (dynamic_cast<const packsim::InvalidInputError*>(&e)) return PACKSIM_ERROR_INVALID;
    return PACKSIM_ERROR;
}

template <typename Fn>
packsim_status guarded(Fn&& fn) {
    try {
        g_last_error.clear();
        fn();
        return PACKSIM_OK;
    } catch (const std::exception& e) {
        return classify(e);
    } catch (...) {
        g_last_error = "unknown error";
        return PACKSIM_ERROR;
    }
}

packsim_status invalid(const char* message) {
    g_last_error = message;
    return PACKSIM_ERROR_INVALID;
}

}  // namespace

extern "C" {

const char* packsim_version(void) { return packsim::kToolVersion; }

const char* packsim_last_error(void) { return g_last_error.c_str(); }

packsim_status packsim_run_simulate(const char* config_path, const char* out_dir) {
    if (config_path == nullptr || out_dir == nullptr) {
        return invalid("packsim_run_simulate: null path argument");
    }
    return guarded([&] { packsim::cmd_simulate(config_path, out_dir); });
}

packsim_status packsim_run_figures(const char* out_dir) {
    if (out_dir == nullptr) {
        return invalid("packsim_run_figures: null out_dir");
    }
    return guarded([&] { packsim::cmd_figures(out_dir); });
}

packsim_status packsim_run_sweep(const char* config_path, const char* out_dir, int workers) {
    if (config_path == nullptr || out_dir == nullptr) {
        return invalid("packsim_run_sweep: null path argument");
    }
    return guarded([&] { packsim::cmd_sweep(config_path, out_dir, workers); });
}

packsim_status packsim_grid_create(double length_m, int n_nodes, double diffusivity_m2_s,
                                   double initial_concentration, packsim_grid** out_grid) {
    if (out_grid == nullptr) {
        return invalid("packsim_grid_create: null out_grid");
    }
    *out_grid = nullptr;
    return guarded([&] {
        *out_grid = new packsim_grid{
            packsim::DiffusionGrid(length_m, n_nodes, diffusivity_m2_s, initial_concentration)};
    });
}

void packsim_grid_destroy(packsim_grid* grid) { delete grid; }

packsim_status packsim_grid_stable_dt(const packsim_grid* grid, double safety, double* out_dt) {
    if (grid == nullptr || out_dt == nullptr) {
        return invalid("packsim_grid_stable_dt: null argument");
    }
    return guarded([&] { *out_dt = grid->impl.stable_dt(safety); });
}

packsim_status packsim_grid_step(packsim_grid* grid, double surface_flux, double dt) {
    if (grid == nullptr) {
        return invalid("packsim_grid_step: null grid");
    }
    return guarded([&] { grid->impl.step(surface_flux, dt); });
}

packsim_status packsim_grid_surface(const packsim_grid* grid, double* out_concentration) {
    if (grid == nullptr || out_concentration == nullptr) {
        return invalid("packsim_grid_surface: null argument");
    }
    *out_concentration = grid->impl.surface_concentration();
    return PACKSIM_OK;
}

packsim_status packsim_grid_total_mass(const packsim_grid* grid, double* out_mass) {
    if (grid == nullptr || out_mass == nullptr) {
        return invalid("packsim_grid_total_mass: null argument");
    }
    *out_mass = grid->impl.total_mass();
    return PACKSIM_OK;
}

int packsim_grid_node_count(const packsim_grid* grid) {
    return grid == nullptr ? 0 : grid->impl.node_count();
}

packsim_status packsim_grid_concentrations(const packsim_grid* grid, double* out,
                                           size_t capacity) {
    if (grid == nullptr || out == nullptr) {
        return invalid("packsim_grid_concentrations: null argument");
    }
    const auto profile = grid->impl.concentrations();
    if (capacity < profile.size()) {
        return invalid("packsim_grid_concentrations: buffer too small");
    }
    std::memcpy(out, profile.data(), profile.size() * sizeof(double));
    return PACKSIM_OK;
}

packsim_status packsim_pack_specific_energy(double e_energy, double e_power,
                                            double power_fraction, double* out_wh_per_kg) {
    if (out_wh_per_kg == nullptr) {
        return invalid("packsim_pack_specific_energy: null output");
    }
    return guarded([&] {
        *out_wh_per_kg = packsim::pack_specific_energy({e_energy, e_power, power_fraction});
    });
}

packsim_status packsim_max_power_fraction_for_target(double e_energy, double e_power,
                                                     double target, double* out_fraction,
                                                     int* out_reachable) {
    if (out_fraction == nullptr || out_reachable == nullptr) {
        return invalid("packsim_max_power_fraction_for_target: null output");
    }
    return guarded([&] {
        const auto f = packsim::max_power_fraction_for_target(e_energy, e_power, target);
        *out_reachable = f.has_value() ? 1 : 0;
        *out_fraction = f.value_or(0.0);
    });
}

packsim_status packsim_nernst_voltage(double e_standard, double temperature_k, int n_electrons,
                                      double reaction_q, double* out_volts) {
    if (out_volts == nullptr) {
        return invalid("packsim_nernst_voltage: null output");
    }
    return guarded([&] {
        *out_volts =
            packsim::nernst_voltage({e_standard, temperature_k, n_electrons, reaction_q});
    });
}

packsim_status packsim_capacity_retained(double c0, double alpha, double beta, double n_cycles,
                                         double* out_percent) {
    if (out_percent == nullptr) {
        return invalid("packsim_capacity_retained: null output");
    }
    return guarded([&] {
        *out_percent = packsim::capacity_retained({c0, alpha, beta}, n_cycles);
    });
}

packsim_status packsim_cycles_to_capacity(double c0, double alpha, double beta, double threshold,
                                          long long* out_cycles) {
    if (out_cycles == nullptr) {
        return invalid("packsim_cycles_to_capacity: null output");
    }
    return guarded([&] {
        const auto n = packsim::cycles_to_capacity({c0, alpha, beta}, threshold);
        *out_cycles = n.has_value() ? static_cast<long long>(*n) : -1;
    });
}

}  // extern "C"
