/* packsim — deterministic dual-chemistry battery pack simulator.
 *
 * C interface to the simulation core. All functions return a
 * packsim_status; on any failure packsim_last_error() carries a
 * human-readable message for the calling thread. Handles are opaque and
 * must be released with their destroy function.
 */
#ifndef PACKSIM_H
#define PACKSIM_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum packsim_status {
    PACKSIM_OK = 0,
    PACKSIM_ERROR = 1,            /* unclassified failure (I/O, internal) */
    PACKSIM_ERROR_CONFIG = 2,     /* missing/invalid config file or field */
    PACKSIM_ERROR_STABILITY = 3,  /* numerical stability violation */
    PACKSIM_ERROR_INFEASIBLE = 4, /* constraints cannot be satisfied */
    PACKSIM_ERROR_INVALID = 5     /* invalid argument to an API call */
} packsim_status;

/* Library version, e.g. "0.1.0". Static storage, do not free. */
const char* packsim_version(void);

/* Message for the most recent failure on this thread ("" if none). The
 * pointer stays valid until the next packsim call on the same thread. */
const char* packsim_last_error(void);

/* ---- Runners (the CLI subcommands) ------------------------------------ */

/* Run one simulation from a JSON config; writes trace.csv, events.csv and
 * manifest.json into out_dir (created if missing). */
packsim_status packsim_run_simulate(const char* config_path, const char* out_dir);

/* Write the reference figure data (fig1.csv, fig2.csv, fig3.csv). */
packsim_status packsim_run_figures(const char* out_dir);

/* Run the Cartesian parameter sweep declared in the config's sweep block
 * with `workers` parallel runs; writes summary.csv and manifest.json. */
packsim_status packsim_run_sweep(const char* config_path, const char* out_dir, int workers);

/* ---- Diffusion grid ---------------------------------------------------- */

typedef struct packsim_grid packsim_grid;

/* Uniform 1-D slab with a flux boundary at node 0 and a zero-gradient back
 * face. n_nodes >= 3. */
packsim_status packsim_grid_create(double length_m, int n_nodes, double diffusivity_m2_s,
                                   double initial_concentration, packsim_grid** out_grid);
void packsim_grid_destroy(packsim_grid* grid);

/* safety in (0, 1]: fraction of the explicit stability bound h^2/(2D). */
packsim_status packsim_grid_stable_dt(const packsim_grid* grid, double safety, double* out_dt);

/* One explicit update. Fails with PACKSIM_ERROR_STABILITY when dt exceeds
 * the stability bound. */
packsim_status packsim_grid_step(packsim_grid* grid, double surface_flux, double dt);

packsim_status packsim_grid_surface(const packsim_grid* grid, double* out_concentration);

/* Rectangle-rule mass h * sum(c). */
packsim_status packsim_grid_total_mass(const packsim_grid* grid, double* out_mass);

/* Number of nodes, or 0 for a null grid. */
int packsim_grid_node_count(const packsim_grid* grid);

/* Copy the full concentration profile into out (capacity elements). Fails
 * with PACKSIM_ERROR_INVALID when capacity < node count. */
packsim_status packsim_grid_concentrations(const packsim_grid* grid, double* out,
                                           size_t capacity);

/* ---- Closed-form models ------------------------------------------------ */

/* Mass-weighted blend of energy/power cell populations, Wh/kg. */
packsim_status packsim_pack_specific_energy(double e_energy, double e_power,
                                            double power_fraction, double* out_wh_per_kg);

/* Largest power fraction meeting `target` Wh/kg. *out_reachable is 1 when
 * a blend exists (then *out_fraction is set) and 0 otherwise. */
packsim_status packsim_max_power_fraction_for_target(double e_energy, double e_power,
                                                     double target, double* out_fraction,
                                                     int* out_reachable);

/* E = E0 - (R T / n F) ln Q. */
packsim_status packsim_nernst_voltage(double e_standard, double temperature_k, int n_electrons,
                                      double reaction_q, double* out_volts);

/* Retained capacity (percent) after n_cycles: c0 - alpha sqrt(N) - beta N. */
packsim_status packsim_capacity_retained(double c0, double alpha, double beta, double n_cycles,
                                         double* out_percent);

/* Smallest whole N with retained capacity <= threshold; -1 when the curve
 * never reaches it. */
packsim_status packsim_cycles_to_capacity(double c0, double alpha, double beta, double threshold,
                                          long long* out_cycles);

#ifdef __cplusplus
}
#endif

#endif /* PACKSIM_H */
