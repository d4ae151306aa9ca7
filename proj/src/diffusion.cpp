#include "diffusion.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "errors.hpp"

namespace packsim {

DiffusionGrid::DiffusionGrid(double length, int n_nodes, double diffusivity,
                             double initial_concentration)
    : length_(length), diffusivity_(diffusivity) {
    if (!(length > 0.0) || !std::isfinite(length)) {
        throw InvalidInputError("DiffusionGrid: length must be positive and finite");
    }
    if (n_nodes < 3) {
        throw InvalidInputError("DiffusionGrid: need at least 3 nodes, got " +
                                std::to_string(n_nodes));
    }
    if (!(diffusivity > 0.0) || !std::isfinite(diffusivity)) {
        throw InvalidInputError("DiffusionGrid: diffusivity must be positive and finite");
    }
    if (!std::isfinite(initial_concentration)) {
        throw InvalidInputError("DiffusionGrid: initial concentration must be finite");
    }
    spacing_ = length / (n_nodes - 1);
    conc_.assign(static_cast<size_t>(n_nodes), initial_concentration);
    next_.assign(static_cast<size_t>(n_nodes), 0.0);
}

double DiffusionGrid::stable_dt(double safety) const {
    if (!(safety > 0.0 && safety <= 1.0)) {
        throw InvalidInputError("stable_dt: safety factor must be in (0, 1]");
    }
    return safety * (spacing_ * spacing_) / (2.0 * diffusivity_);
}

void DiffusionGrid::step(double surface_flux, double dt) {
    if (!std::isfinite(surface_flux)) {
        throw InvalidInputError("step: surface flux must be finite");
    }
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw InvalidInputError("step: dt must be positive and finite");
    }
    if (dt > stable_dt(1.0)) {
        throw StabilityError("step: dt " + std::to_string(dt) +
                             " exceeds explicit stability bound " +
                             std::to_string(stable_dt(1.0)));
    }

    // Do not reorder or refactor this arithmetic: downstream traces are
    // checked against it term for term.
    const double r = diffusivity_ * dt / (spacing_ * spacing_);
    const size_t n = conc_.size();
    next_[0] = conc_[0] + r * (conc_[1] - conc_[0]) * 2.0 + surface_flux * dt / spacing_;
    for (size_t i = 1; i + 1 < n; ++i) {
        next_[i] = conc_[i] + r * (conc_[i + 1] - 2.0 * conc_[i] + conc_[i - 1]);
    }
    next_[n - 1] = next_[n - 2];
    std::swap(conc_, next_);
}

double DiffusionGrid::total_mass() const {
    double sum = 0.0;
    for (double c : conc_) {
        sum += c;
    }
    return spacing_ * sum;
}

std::vector<int> sample_indices(int steps, int count) {
    if (steps < 1) {
        throw InvalidInputError("sample_indices: need at least one step");
    }
    if (count < 2) {
        throw InvalidInputError("sample_indices: need at least two samples");
    }
    std::vector<int> idx(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i) {
        // Even grid over [0, steps-1], truncated to ints the way an
        // endpoint-inclusive linspace lands when cast.
        idx[static_cast<size_t>(i)] =
            static_cast<int>(static_cast<double>(i) * (steps - 1) / (count - 1));
    }
    idx.back() = steps - 1;
    return idx;
}

SurfaceTrace run_diffusion(DiffusionGrid& grid,
                           const std::function<double(double)>& flux_at_time,
                           double total_time, double dt, int sample_count) {
    if (!(total_time > 0.0)) {
        throw InvalidInputError("run_diffusion: total_time must be positive");
    }
    if (!(dt > 0.0)) {
        throw InvalidInputError("run_diffusion: dt must be positive");
    }
    const int steps = static_cast<int>(total_time / dt);
    if (steps < 1) {
        throw InvalidInputError("run_diffusion: total_time shorter than one step");
    }

    std::vector<double> times(static_cast<size_t>(steps));
    std::vector<double> surface(static_cast<size_t>(steps));
    for (int k = 0; k < steps; ++k) {
        const double t = k * dt;
        grid.step(flux_at_time(t), dt);
        times[static_cast<size_t>(k)] = t;
        surface[static_cast<size_t>(k)] = grid.surface_concentration();
    }

    SurfaceTrace trace;
    for (int i : sample_indices(steps, sample_count)) {
        trace.times.push_back(times[static_cast<size_t>(i)]);
        trace.surface.push_back(surface[static_cast<size_t>(i)]);
    }
    return trace;
}

}  // namespace packsim
