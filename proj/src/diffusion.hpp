#pragma once

#include <functional>
#include <span>
#include <vector>

namespace packsim {

/**
 * Explicit (FTCS) finite-difference model of 1-D Fick diffusion into an
 * electrode slab. Node 0 is the surface where flux is applied, the last
 * node mirrors its neighbour (zero-gradient back boundary).
 *
 * The update stencil is fixed; reference traces elsewhere in the project
 * depend on its exact floating-point evaluation order, so keep the
 * arithmetic in step() as written. In particular the surface node carries
 * a factor-2 ghost term, which makes h*sum(c) bookkeeping inexact by
 * design; see total_mass().
 */
class DiffusionGrid {
  public:
    // length in metres, n_nodes >= 3, diffusivity in m^2/s.
    DiffusionGrid(double length, int n_nodes, double diffusivity,
                  double initial_concentration = 0.0);

    double length() const { return length_; }
    double diffusivity() const { return diffusivity_; }
    double node_spacing() const { return spacing_; }
    int node_count() const { return static_cast<int>(conc_.size()); }
    std::span<const double> concentrations() const { return conc_; }
    double surface_concentration() const { return conc_.front(); }

    // Largest stable explicit step scaled by `safety` in (0, 1]:
    // safety * h^2 / (2 D).
    double stable_dt(double safety) const;

    // One explicit update with the given surface flux (amount per area per
    // time, positive = into the slab). Throws StabilityError when dt
    // exceeds the explicit stability bound and InvalidInputError for
    // non-finite flux or non-positive dt.
    void step(double surface_flux, double dt);

    // Rectangle-rule mass h * sum(c). Tracks true content only
    // approximately: the surface ghost term exchanges mass at twice the
    // interior rate, so this reading leaks relative to injected flux.
    double total_mass() const;

  private:
    double length_;
    double diffusivity_;
    double spacing_;
    std::vector<double> conc_;
    std::vector<double> next_;
};

// Surface-concentration history, downsampled to a fixed number of samples
// spaced like an even index grid over the steps taken.
struct SurfaceTrace {
    std::vector<double> times;
    std::vector<double> surface;
};

/**
 * Drive `grid` for int(total_time / dt) steps, querying flux_at_time at
 * each step's start time k*dt and recording the surface concentration
 * after the update. sample_count (>= 2) rows are kept, at indices
 * floor(i*(steps-1)/(sample_count-1)).
 */
SurfaceTrace run_diffusion(DiffusionGrid& grid,
                           const std::function<double(double)>& flux_at_time,
                           double total_time, double dt, int sample_count);

// Even index grid used by run_diffusion and the CSV writers: sample i of
// `count` over steps [0, steps-1].
std::vector<int> sample_indices(int steps, int count);

}  // namespace packsim
