#include "scheduler.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"

namespace packsim {

namespace {

// Wake hysteresis: a rested cluster must recover to below this fraction of
// its thresholds before reactivation, so scores hovering at 1.0 cannot flap.
constexpr double kWakeBand = 0.9;

// Slack for the rest-fraction comparison so counts that hit the bound
// exactly in real arithmetic (2 of 6 vs 1/3) are not rejected for a ulp.
constexpr double kFractionSlack = 1e-12;

void validate(const ScheduleConstraints& c) {
    if (!(c.resistance_threshold > 0.0) || !(c.temperature_threshold > 0.0)) {
        throw InvalidInputError("scheduler: thresholds must be positive");
    }
    if (c.min_active_clusters < 1) {
        throw InvalidInputError("scheduler: min_active_clusters must be >= 1");
    }
    if (!(c.max_rest_fraction >= 0.0 && c.max_rest_fraction < 1.0)) {
        throw InvalidInputError("scheduler: max_rest_fraction must be in [0, 1)");
    }
    if (c.min_rest_duration < 0.0 || c.min_active_duration < 0.0) {
        throw InvalidInputError("scheduler: dwell durations must be non-negative");
    }
}

void validate(const ClusterState& s) {
    if (!(s.internal_resistance > 0.0) || !(s.temperature > 0.0)) {
        throw InvalidInputError("scheduler: cluster resistance and temperature must be positive");
    }
    if (!(s.soc >= 0.0 && s.soc <= 1.0)) {
        throw InvalidInputError("scheduler: cluster soc must be within [0, 1]");
    }
}

}  // namespace

double stress_score(const ClusterState& cluster, const ScheduleConstraints& constraints) {
    validate(constraints);
    validate(cluster);
    return std::max(cluster.internal_resistance / constraints.resistance_threshold,
                    cluster.temperature / constraints.temperature_threshold);
}

RestSelection select_rest_set(const std::vector<ClusterState>& clusters,
                              const ScheduleConstraints& constraints,
                              const PackVoltageFn& pack_voltage) {
    validate(constraints);
    for (const auto& c : clusters) {
        validate(c);
    }
    if (static_cast<int>(clusters.size()) < constraints.min_active_clusters) {
        throw InvalidInputError("select_rest_set: fewer clusters than min_active_clusters");
    }

    std::vector<ClusterState> remaining;  // active clusters not yet chosen for rest
    int rested = 0;
    for (const auto& c : clusters) {
        if (c.mode == ClusterMode::Active) {
            remaining.push_back(c);
        } else {
            ++rested;
        }
    }

    RestSelection result;
    if (pack_voltage && pack_voltage(remaining) < constraints.min_pack_voltage) {
        // Even the full active set cannot hold the voltage floor; resting
        // anything would only dig deeper.
        result.feasibility_warning = true;
        return result;
    }

    // Breaching, eligible candidates in priority order: most stressed
    // first, then least rested so far, then lowest id. The order is total,
    // so the pick is deterministic.
    struct Candidate {
        double score;
        double cum_rest;
        int id;
    };
    std::vector<Candidate> candidates;
    for (const auto& c : remaining) {
        if (c.time_in_mode < constraints.min_active_duration) {
            continue;
        }
        const double score = stress_score(c, constraints);
        if (score > 1.0) {
            candidates.push_back({score, c.cumulative_rest_time, c.id});
        }
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.cum_rest != b.cum_rest) return a.cum_rest < b.cum_rest;
        return a.id < b.id;
    });

    const int total = static_cast<int>(clusters.size());
    int active = static_cast<int>(remaining.size());
    for (const auto& cand : candidates) {
        if (active - 1 < constraints.min_active_clusters) {
            break;  // cannot spare anyone else
        }
        const double rest_fraction = static_cast<double>(rested + 1) / total;
        if (rest_fraction > constraints.max_rest_fraction + kFractionSlack) {
            break;
        }
        std::vector<ClusterState> trial;
        trial.reserve(remaining.size() - 1);
        for (const auto& c : remaining) {
            if (c.id != cand.id) {
                trial.push_back(c);
            }
        }
        if (pack_voltage && pack_voltage(trial) < constraints.min_pack_voltage) {
            continue;  // this one is load-bearing; try the next candidate
        }
        remaining = std::move(trial);
        --active;
        ++rested;
        result.rest_ids.push_back(cand.id);
    }

    std::sort(result.rest_ids.begin(), result.rest_ids.end());
    return result;
}

std::vector<int> wake_due(const std::vector<ClusterState>& clusters,
                          const ScheduleConstraints& constraints) {
    validate(constraints);
    std::vector<int> ids;
    for (const auto& c : clusters) {
        if (c.mode != ClusterMode::Rest) {
            continue;
        }
        if (c.time_in_mode >= constraints.min_rest_duration &&
            stress_score(c, constraints) < kWakeBand) {
            ids.push_back(c.id);
        }
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

}  // namespace packsim
