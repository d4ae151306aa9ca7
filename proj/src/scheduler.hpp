#pragma once

#include <functional>
#include <vector>

namespace packsim {

// Cluster-rest scheduling: rotate stressed cell clusters out of service
// while the remaining active set keeps carrying the load, the way rest is
// alternated across hemispheres. Pure decision functions over snapshots;
// the engine owns the state and applies the returned transitions.

enum class ClusterMode { Active, Rest };

struct ClusterState {
    int id = 0;
    ClusterMode mode = ClusterMode::Active;
    double soc = 0.5;                 // fraction, 0..1
    double temperature = 298.15;      // K
    double internal_resistance = 0.0; // ohms, > 0
    int cells_in_cluster = 1;
    double time_in_mode = 0.0;        // seconds since the last transition
    double cumulative_rest_time = 0.0;
};

struct ScheduleConstraints {
    // Threshold defaults are far above any physical value, so packs that
    // never configure them simply never rest anything.
    double resistance_threshold = 1e12;   // ohms
    double temperature_threshold = 1e6;   // K
    int min_active_clusters = 1;
    double min_pack_voltage = 0.0;        // V
    double max_rest_fraction = 0.5;
    double min_rest_duration = 0.0;       // s
    double min_active_duration = 0.0;     // s
};

// max of the two signal-to-threshold ratios; > 1 means a threshold is
// breached, and the wake hysteresis uses the 0.9 band below.
double stress_score(const ClusterState& cluster, const ScheduleConstraints& constraints);

// Pack voltage for a candidate set of remaining active clusters, supplied
// by the caller so this module stays free of the electrical model.
using PackVoltageFn = std::function<double(const std::vector<ClusterState>&)>;

struct RestSelection {
    std::vector<int> rest_ids;       // ascending cluster ids to move to REST
    bool feasibility_warning = false;
};

/**
 * Pick clusters to rest this round: candidates are active, past
 * min_active_duration, and breaching (score > 1). They are admitted
 * greedily in priority order (higher score first, then less accumulated
 * rest, then lower id) while the active count stays >= min_active_clusters,
 * the rested fraction stays <= max_rest_fraction, and pack_voltage over the
 * remaining actives stays >= min_pack_voltage.
 *
 * If the pack voltage floor is already violated with every active cluster
 * in service, nothing is rested and feasibility_warning is set.
 */
RestSelection select_rest_set(const std::vector<ClusterState>& clusters,
                              const ScheduleConstraints& constraints,
                              const PackVoltageFn& pack_voltage);

// Rested clusters that have served min_rest_duration and whose stress has
// recovered below 0.9 (hysteresis band, so they do not flap at 1.0).
std::vector<int> wake_due(const std::vector<ClusterState>& clusters,
                          const ScheduleConstraints& constraints);

}  // namespace packsim
