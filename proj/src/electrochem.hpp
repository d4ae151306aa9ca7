#pragma once

#include <cstdint>
#include <optional>

namespace packsim {

constexpr double kGasConstant = 8.314;       // J / (mol K)
constexpr double kFaradayConstant = 96485.0; // C / mol

// Mass-fraction blend of an energy-optimized and a power-optimized cell
// population. power_fraction is the mass share of the power cells.
struct PackComposition {
    double e_energy;        // Wh/kg of the energy-cell population
    double e_power;         // Wh/kg of the power-cell population
    double power_fraction;  // in [0, 1]
};

// Pack-level specific energy of the blend, Wh/kg.
double pack_specific_energy(const PackComposition& mix);

// Largest power fraction that still meets `target` Wh/kg at pack level.
// Returns nullopt when the target exceeds what an all-energy pack delivers.
std::optional<double> max_power_fraction_for_target(double e_energy,
                                                    double e_power,
                                                    double target);

struct NernstInput {
    double e_standard;    // V
    double temperature;   // K, > 0
    int n_electrons;      // >= 1
    double reaction_q;    // reaction quotient, > 0
};

// E = E0 - (R T / n F) ln Q
double nernst_voltage(const NernstInput& in);

// Capacity fade C(N) = c0 - alpha sqrt(N) - beta N, in percent of nameplate.
struct FadeModel {
    double c0;     // initial capacity, percent (typically 100)
    double alpha;  // sqrt-cycle coefficient
    double beta;   // linear coefficient
};

// Retained capacity after n_cycles equivalent full cycles. n_cycles may be
// fractional; the engine accrues cycles from charge throughput.
double capacity_retained(const FadeModel& model, double n_cycles);

// Smallest whole cycle count N with capacity_retained(model, N) <= threshold,
// or nullopt if the fade curve never reaches it (alpha = beta = 0).
std::optional<std::int64_t> cycles_to_capacity(const FadeModel& model,
                                               double threshold);

}  // namespace packsim
