#include "protocols.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"

namespace packsim {

namespace {

void validate(const FixedPulseProfile& p) {
    if (!(p.period > 0.0)) {
        throw InvalidInputError("fixed_pulse: period must be positive");
    }
    if (!(p.duty > 0.0 && p.duty < 1.0)) {
        throw InvalidInputError("fixed_pulse: duty must be strictly between 0 and 1");
    }
}

void validate(const PercussiveParams& p) {
    if (!(p.pulse_duration > 0.0) || !(p.rest_duration > 0.0)) {
        throw InvalidInputError("percussive: pulse and rest durations must be positive");
    }
    if (!(p.min_amplitude > 0.0) || !(p.min_amplitude <= p.base_amplitude) ||
        !(p.base_amplitude <= p.max_amplitude)) {
        throw InvalidInputError(
            "percussive: need 0 < min_amplitude <= base_amplitude <= max_amplitude");
    }
    if (!(p.amplitude_step > 0.0 && p.amplitude_step < 1.0)) {
        throw InvalidInputError("percussive: amplitude_step must be strictly between 0 and 1");
    }
    if (!(p.reverse_fraction >= 0.0 && p.reverse_fraction <= 1.0)) {
        throw InvalidInputError("percussive: reverse_fraction must be within [0, 1]");
    }
}

}  // namespace

double flux_at(const CurrentProfile& profile, double t) {
    if (!(t >= 0.0)) {
        throw InvalidInputError("flux_at: t must be non-negative");
    }
    if (const auto* c = std::get_if<ConstantProfile>(&profile)) {
        return c->level;
    }
    if (const auto* p = std::get_if<FixedPulseProfile>(&profile)) {
        validate(*p);
        return std::fmod(t, p->period) < p->duty * p->period ? p->high_level : p->rest_level;
    }
    throw InvalidInputError(
        "flux_at: this profile is feedback-driven and has no stateless level; "
        "use next_percussive_level or cccv_level");
}

PercussiveStep next_percussive_level(const PercussiveParams& params, PercussiveState state,
                                     const FeedbackSample& sample) {
    validate(params);
    if (!std::isfinite(sample.time) || !std::isfinite(sample.impedance) ||
        !std::isfinite(sample.temperature)) {
        throw InvalidInputError("next_percussive_level: non-finite feedback sample");
    }
    if (sample.time < state.phase_start) {
        throw InvalidInputError("next_percussive_level: sample time ran backwards");
    }

    if (state.amplitude <= 0.0) {
        state.amplitude = params.base_amplitude;
    }

    // Roll the phase clock forward to the phase containing sample.time.
    // Amplitude adjustments land exactly at pulse starts: a breach noted
    // during the previous cycle steps it down, otherwise a fully clean
    // cycle (every sample below 90 % of both thresholds) steps it up.
    for (;;) {
        const double duration = state.phase == PulsePhase::Pulse ? params.pulse_duration
                                                                 : params.rest_duration;
        if (sample.time - state.phase_start < duration) {
            break;
        }
        state.phase_start += duration;
        if (state.phase == PulsePhase::Pulse) {
            state.phase = PulsePhase::Rest;
        } else {
            if (state.breach_pending) {
                state.amplitude =
                    std::max(params.min_amplitude, state.amplitude * params.amplitude_step);
            } else if (state.cycle_clean && state.samples_in_cycle > 0) {
                state.amplitude =
                    std::min(params.max_amplitude, state.amplitude / params.amplitude_step);
            }
            state.breach_pending = false;
            state.cycle_clean = true;
            state.samples_in_cycle = 0;
            state.phase = PulsePhase::Pulse;
        }
    }

    ++state.samples_in_cycle;
    if (sample.impedance > params.impedance_threshold ||
        sample.temperature > params.temperature_threshold) {
        state.breach_pending = true;
    }
    if (!(sample.impedance < 0.9 * params.impedance_threshold &&
          sample.temperature < 0.9 * params.temperature_threshold)) {
        state.cycle_clean = false;
    }

    double level;
    if (state.phase == PulsePhase::Pulse) {
        level = state.amplitude;
    } else {
        level = params.bidirectional ? -params.reverse_fraction * state.amplitude : 0.0;
    }
    return {level, state};
}

double cccv_level(const CccvProfile& profile, double measured_voltage, double ocv,
                  double resistance, CccvState& state) {
    if (!(profile.cc_level > 0.0)) {
        throw InvalidInputError("cccv: cc_level must be positive");
    }
    if (!(profile.cv_current_floor >= 0.0)) {
        throw InvalidInputError("cccv: cv_current_floor must be non-negative");
    }
    if (!(measured_voltage > 0.0)) {
        throw InvalidInputError("cccv: measured voltage must be positive");
    }
    if (!(resistance > 0.0)) {
        throw InvalidInputError("cccv: resistance must be positive");
    }

    if (state.charge_complete) {
        return 0.0;
    }
    if (!state.cv_latched) {
        if (measured_voltage < profile.cv_voltage) {
            return profile.cc_level;
        }
        state.cv_latched = true;
    }
    // CV phase: command the charge current that pins the terminal at the
    // ceiling under V = OCV + I*R. As OCV rises the level tapers.
    const double holding = (profile.cv_voltage - ocv) / resistance;
    const double level = std::clamp(holding, 0.0, profile.cc_level);
    if (level <= profile.cv_current_floor) {
        state.charge_complete = true;
    }
    return level;
}

}  // namespace packsim
