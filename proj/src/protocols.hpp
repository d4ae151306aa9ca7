#pragma once

#include <optional>
#include <variant>

#include "diffusion.hpp"

namespace packsim {

// Applied-current protocols. Levels are charge-positive and unitless here;
// the engine maps them to surface flux and electrical current.

struct ConstantProfile {
    double level;
};

struct FixedPulseProfile {
    double high_level;
    double rest_level = 0.0;
    double period;            // seconds, > 0
    double duty = 0.5;        // fraction of the period spent at high_level
};

struct CccvProfile {
    double cc_level;          // constant-current phase level, > 0
    double cv_voltage;        // terminal voltage ceiling
    double cv_current_floor;  // charge complete at or below this level, >= 0
};

// Feedback-controlled pulse train: fixed pulse/rest cadence whose amplitude
// backs off multiplicatively when impedance or temperature cross their
// thresholds, and creeps back up after a clean full cycle.
struct PercussiveParams {
    double base_amplitude;
    double min_amplitude;
    double max_amplitude;
    double pulse_duration;         // seconds, > 0
    double rest_duration;          // seconds, > 0
    double impedance_threshold;
    double temperature_threshold;
    double amplitude_step = 0.5;   // in (0, 1); multiply on breach, divide on recovery
    bool bidirectional = false;    // discharge at -reverse_fraction*amplitude in rest
    double reverse_fraction = 0.0;
};

using CurrentProfile =
    std::variant<ConstantProfile, FixedPulseProfile, CccvProfile, PercussiveParams>;

// Stateless level query at time t (seconds since protocol start). Constant
// and fixed-pulse profiles only; feedback-driven profiles (percussive,
// CC-CV) have no well-defined level without their state and throw
// InvalidInputError.
double flux_at(const CurrentProfile& profile, double t);

enum class PulsePhase { Pulse, Rest };

struct FeedbackSample {
    double time;         // seconds
    double impedance;    // ohms
    double temperature;  // kelvin
    std::optional<double> surface_concentration = std::nullopt;
};

struct PercussiveState {
    PulsePhase phase = PulsePhase::Pulse;
    double phase_start = 0.0;
    double amplitude = 0.0;     // 0 means "not initialized yet"
    bool breach_pending = false;
    bool cycle_clean = true;
    int samples_in_cycle = 0;
};

// Advance the percussive controller with one feedback sample and return the
// level to apply at sample.time plus the successor state. Amplitude changes
// only take effect at pulse starts, so the level within a phase is constant.
struct PercussiveStep {
    double level;
    PercussiveState state;
};
PercussiveStep next_percussive_level(const PercussiveParams& params,
                                     PercussiveState state,
                                     const FeedbackSample& sample);

struct CccvState {
    bool cv_latched = false;
    bool charge_complete = false;
};

// CC-CV charge step: constant current until the measured terminal voltage
// reaches cv_voltage, then hold the terminal at cv_voltage by commanding
// level = (cv_voltage - ocv) / resistance, clamped to [0, cc_level]. Once
// that taper level falls to cv_current_floor the charge is complete and the
// level is zero from the next call on.
double cccv_level(const CccvProfile& profile, double measured_voltage, double ocv,
                  double resistance, CccvState& state);

// Drive a grid with a stateless profile (constant or fixed pulse).
inline SurfaceTrace run_diffusion(DiffusionGrid& grid, const CurrentProfile& profile,
                                  double total_time, double dt, int sample_count) {
    return run_diffusion(
        grid, [&](double t) { return flux_at(profile, t); }, total_time, dt, sample_count);
}

}  // namespace packsim
