#include "electrochem.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "errors.hpp"

namespace packsim {

double pack_specific_energy(const PackComposition& mix) {
    if (!(mix.e_energy > 0.0) || !(mix.e_power > 0.0)) {
        throw InvalidInputError("pack_specific_energy: cell energies must be positive");
    }
    if (!(mix.power_fraction >= 0.0 && mix.power_fraction <= 1.0)) {
        throw InvalidInputError("pack_specific_energy: power_fraction must be within [0, 1], got " +
                                std::to_string(mix.power_fraction));
    }
    const double f = mix.power_fraction;
    return (1.0 - f) * mix.e_energy + f * mix.e_power;
}

std::optional<double> max_power_fraction_for_target(double e_energy, double e_power,
                                                    double target) {
    if (!(e_energy > 0.0) || !(e_power > 0.0)) {
        throw InvalidInputError("max_power_fraction_for_target: cell energies must be positive");
    }
    if (e_power >= target) {
        return 1.0;  // even an all-power pack meets the target
    }
    if (e_energy < target) {
        return std::nullopt;  // not reachable at any blend
    }
    // Linear blend: (1-f) e_energy + f e_power = target.
    const double f = (e_energy - target) / (e_energy - e_power);
    return std::clamp(f, 0.0, 1.0);
}

double nernst_voltage(const NernstInput& in) {
    if (!(in.temperature > 0.0)) {
        throw InvalidInputError("nernst_voltage: temperature must be positive (kelvin)");
    }
    if (in.n_electrons < 1) {
        throw InvalidInputError("nernst_voltage: n_electrons must be >= 1");
    }
    if (!(in.reaction_q > 0.0)) {
        throw InvalidInputError("nernst_voltage: reaction quotient must be positive");
    }
    return in.e_standard -
           (kGasConstant * in.temperature) / (in.n_electrons * kFaradayConstant) *
               std::log(in.reaction_q);
}

double capacity_retained(const FadeModel& model, double n_cycles) {
    if (!(n_cycles >= 0.0)) {
        throw InvalidInputError("capacity_retained: cycle count must be non-negative");
    }
    if (model.alpha < 0.0 || model.beta < 0.0) {
        throw InvalidInputError("capacity_retained: fade coefficients must be non-negative");
    }
    return model.c0 - model.alpha * std::sqrt(n_cycles) - model.beta * n_cycles;
}

std::optional<std::int64_t> cycles_to_capacity(const FadeModel& model, double threshold) {
    if (model.alpha < 0.0 || model.beta < 0.0) {
        throw InvalidInputError("cycles_to_capacity: fade coefficients must be non-negative");
    }
    if (capacity_retained(model, 0.0) <= threshold) {
        return 0;
    }
    if (model.alpha == 0.0 && model.beta == 0.0) {
        return std::nullopt;  // flat curve, never fades to the threshold
    }

    // Solve c0 - alpha s - beta s^2 = threshold for s = sqrt(N), then walk
    // the integers nearby so the answer is exactly consistent with
    // capacity_retained under floating-point evaluation.
    const double drop = model.c0 - threshold;
    double s;
    if (model.beta == 0.0) {
        s = drop / model.alpha;
    } else {
        s = (-model.alpha + std::sqrt(model.alpha * model.alpha + 4.0 * model.beta * drop)) /
            (2.0 * model.beta);
    }
    std::int64_t n = static_cast<std::int64_t>(std::ceil(s * s));
    n = std::max<std::int64_t>(n, 1);
    while (n > 1 && capacity_retained(model, static_cast<double>(n - 1)) <= threshold) {
        --n;
    }
    while (capacity_retained(model, static_cast<double>(n)) > threshold) {
        ++n;
    }
    return n;
}

}  // namespace packsim
