#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "diffusion.hpp"
#include "electrochem.hpp"
#include "engine.hpp"
#include "errors.hpp"
#include "protocols.hpp"

using namespace packsim;

namespace {

// Stable step for the default chemistry at the default safety factor.
constexpr double kDt = 0.6376900316294255;

PackConfig one_cluster(double level) {
    PackConfig cfg;
    cfg.strings = {{"a", 1, 1}};
    cfg.chemistries["a"] = ChemistryParams{};
    cfg.protocol = ConstantProfile{level};
    cfg.simulation.total_time = 20.0;
    return cfg;
}

ClusterState active_state(int id, double soc = 0.5, double resistance = 0.05) {
    ClusterState s;
    s.id = id;
    s.mode = ClusterMode::Active;
    s.soc = soc;
    s.temperature = 298.15;
    s.internal_resistance = resistance;
    return s;
}

}  // namespace

TEST_CASE("reaction quotient map") {
    CHECK(q_from_soc(0.5, 1e-6) == 1.0);
    // Discharging (soc down) must push Q up and the cell voltage down.
    CHECK(q_from_soc(0.2, 1e-6) > q_from_soc(0.4, 1e-6));
    CHECK(q_from_soc(0.9, 1e-6) < 1.0);
    // The rails clamp instead of blowing up.
    CHECK(q_from_soc(0.0, 1e-6) == (1.0 - 1e-6) / 1e-6);
    CHECK(q_from_soc(1.0, 1e-6) == (1.0 - (1.0 - 1e-6)) / (1.0 - 1e-6));
    CHECK_THROWS_AS(q_from_soc(0.5, 0.0), InvalidInputError);
    CHECK_THROWS_AS(q_from_soc(0.5, 0.7), InvalidInputError);
}

TEST_CASE("pack voltage of a single cluster is ocv minus the ohmic drop") {
    const auto cfg = one_cluster(0.0);
    CHECK(pack_voltage(cfg, {active_state(0)}, 0.0) == 3.0);  // soc 0.5 -> Q = 1
    CHECK(pack_voltage(cfg, {active_state(0)}, 2.0) == 2.9);
    CHECK(pack_voltage(cfg, {active_state(0)}, -2.0) == 3.1);  // charging lifts it
}

TEST_CASE("pack voltage composes parallel and series arithmetic") {
    PackConfig parallel;
    parallel.strings = {{"a", 2, 1}};
    parallel.chemistries["a"] = ChemistryParams{};
    CHECK(pack_voltage(parallel, {active_state(0), active_state(1)}, 2.0) == 2.95);

    PackConfig series;
    series.strings = {{"a", 1, 1}, {"a", 1, 1}};
    series.chemistries["a"] = ChemistryParams{};
    CHECK(pack_voltage(series, {active_state(0), active_state(1)}, 2.0) == 5.8);

    // A rested cluster stops conducting; its twin carries the full load.
    auto rested = active_state(1);
    rested.mode = ClusterMode::Rest;
    CHECK(pack_voltage(parallel, {active_state(0), rested}, 2.0) == 2.9);

    auto other = active_state(0);
    other.mode = ClusterMode::Rest;
    CHECK_THROWS_AS(pack_voltage(parallel, {other, rested}, 2.0), InvalidInputError);
    CHECK_THROWS_AS(pack_voltage(parallel, {}, 2.0), InvalidInputError);
}

TEST_CASE("pack voltage away from the soc midpoint follows the nernst ocv") {
    const auto cfg = one_cluster(0.0);
    auto s = active_state(0, 0.3, 0.08);
    s.temperature = 310.0;
    const double ocv = nernst_voltage({3.0, 310.0, 1, q_from_soc(0.3, 1e-6)});
    const double g = 1.0 / 0.08;
    CHECK(pack_voltage(cfg, {s}, 1.5) == (g * ocv - 1.5) / g);
    CHECK(pack_voltage(cfg, {s}, 1.5) ==
          doctest::Approx(ocv - 1.5 * 0.08).epsilon(1e-12));
}

TEST_CASE("a zero-load run holds every state flat") {
    auto cfg = one_cluster(0.0);
    cfg.simulation.total_time = 10.0;
    const auto trace = run_simulation(cfg);

    CHECK(trace.dt == kDt);
    REQUIRE(trace.times.size() == 15);  // int(10 / dt)
    CHECK(trace.events.empty());
    REQUIRE(trace.chemistry_names == std::vector<std::string>{"a"});
    for (size_t k = 0; k < trace.times.size(); ++k) {
        CHECK(trace.times[k] == static_cast<double>(k) * kDt);
        CHECK(trace.applied_level[k] == 0.0);
        CHECK(trace.pack_voltage[k] == 3.0);
        CHECK(trace.capacity[0][k] == 100.0);
        CHECK(trace.active[0][k] == 1);
        CHECK(trace.surface[0][k] == 0.0);
        CHECK(trace.temperature[0][k] == 298.15);
        CHECK(trace.resistance[0][k] == 0.05);
        CHECK(trace.soc[0][k] == 0.5);
    }
}

TEST_CASE("a lone cluster sees the full applied level as surface flux") {
    const auto trace = run_simulation(one_cluster(2.0));

    DiffusionGrid grid(50e-6, 100, 1e-13, 0.0);
    const double dt = grid.stable_dt(0.5);
    REQUIRE(dt == trace.dt);
    for (size_t k = 0; k < trace.times.size(); ++k) {
        grid.step(2.0, dt);
        REQUIRE(trace.surface[0][k] == grid.surface_concentration());
    }
}

TEST_CASE("equal parallel clusters split the level exactly in half") {
    PackConfig cfg;
    cfg.strings = {{"a", 2, 1}};
    cfg.chemistries["a"] = ChemistryParams{};
    cfg.protocol = ConstantProfile{2.0};
    cfg.simulation.total_time = 20.0;
    const auto trace = run_simulation(cfg);

    DiffusionGrid grid(50e-6, 100, 1e-13, 0.0);
    const double dt = grid.stable_dt(0.5);
    double soc = 0.5;
    for (size_t k = 0; k < trace.times.size(); ++k) {
        grid.step(1.0, dt);
        REQUIRE(trace.surface[0][k] == grid.surface_concentration());
        REQUIRE(trace.surface[1][k] == grid.surface_concentration());
        soc = std::clamp(soc + 1.0 * dt / 3600.0, 0.0, 1.0);
        REQUIRE(trace.soc[0][k] == soc);
        REQUIRE(trace.soc[1][k] == soc);
    }
}

TEST_CASE("trace voltage rows reproduce the string formula step by step") {
    const auto trace = run_simulation(one_cluster(2.0));
    double soc = 0.5;
    const double g = 1.0 / 0.05;
    for (size_t k = 0; k < trace.times.size(); ++k) {
        soc = std::clamp(soc + 2.0 * trace.dt / 3600.0, 0.0, 1.0);
        const double ocv = nernst_voltage({3.0, 298.15, 1, q_from_soc(soc, 1e-6)});
        REQUIRE(trace.pack_voltage[k] == (g * ocv - (-2.0)) / g);
    }
}

TEST_CASE("discharge lowers soc, surface and terminal voltage") {
    auto cfg = one_cluster(-2.0);
    cfg.chemistries["a"].initial_concentration = 1e7;
    const auto trace = run_simulation(cfg);
    const size_t last = trace.times.size() - 1;
    CHECK(trace.soc[0][last] < 0.5);
    CHECK(trace.surface[0][last] < 1e7);
    CHECK(trace.pack_voltage[0] < 3.0);
    for (size_t k = 1; k < trace.times.size(); ++k) {
        CHECK(trace.soc[0][k] < trace.soc[0][k - 1]);
        CHECK(trace.pack_voltage[k] < trace.pack_voltage[k - 1]);
    }
}

TEST_CASE("equivalent cycle accounting is charge throughput over 2C") {
    CHECK(equivalent_cycles(0.0, 5.0, 2.0, 10.0) == 0.5);
    CHECK(equivalent_cycles(0.0, -5.0, 2.0, 10.0) == 0.5);
    CHECK(equivalent_cycles(0.5, 5.0, 2.0, 10.0) == 1.0);
    CHECK(equivalent_cycles(0.25, 0.0, 2.0, 10.0) == 0.25);
    CHECK_THROWS_AS(equivalent_cycles(0.0, 1.0, 2.0, 0.0), InvalidInputError);
    CHECK_THROWS_AS(equivalent_cycles(0.0, 1.0, -2.0, 10.0), InvalidInputError);
}

TEST_CASE("fade family follows the protocol shape") {
    auto verify_capacity = [](const SimulationTrace& trace, const FadeModel& fade) {
        double n = 0.0;
        for (size_t k = 0; k < trace.times.size(); ++k) {
            n = equivalent_cycles(n, trace.applied_level[k], trace.dt, 3600.0);
            REQUIRE(trace.capacity[0][k] == capacity_retained(fade, n));
        }
        CHECK(n > 0.0);
        CHECK(trace.capacity[0].back() < 100.0);
    };

    SUBCASE("constant current uses the constant-fade curve") {
        verify_capacity(run_simulation(one_cluster(2.0)), FadeModel{100.0, 0.1, 1e-3});
    }
    SUBCASE("a fixed pulse train uses the pulsed-fade curve") {
        auto cfg = one_cluster(0.0);
        cfg.protocol = FixedPulseProfile{2.0, 0.0, 20.0, 0.5};
        verify_capacity(run_simulation(cfg), FadeModel{100.0, 0.08, 8e-4});
    }
    SUBCASE("cc-cv charging ages like constant current") {
        auto cfg = one_cluster(0.0);
        cfg.protocol = CccvProfile{2.0, 3.05, 0.01};
        verify_capacity(run_simulation(cfg), FadeModel{100.0, 0.1, 1e-3});
    }
}

TEST_CASE("capacity columns never increase") {
    auto cfg = one_cluster(0.0);
    cfg.protocol = FixedPulseProfile{2.0, 0.0, 20.0, 0.5};
    const auto trace = run_simulation(cfg);
    for (size_t k = 1; k < trace.times.size(); ++k) {
        CHECK(trace.capacity[0][k] <= trace.capacity[0][k - 1]);
    }
}

TEST_CASE("joule heating and the affine resistance law evolve together") {
    auto cfg = one_cluster(2.0);
    auto& chem = cfg.chemistries["a"];
    chem.heating_coefficient = 50.0;
    chem.cooling_coefficient = 0.05;
    chem.resistance_temp_slope = 0.001;
    const auto trace = run_simulation(cfg);

    double temp = 298.15;
    double res = 0.05;
    for (size_t k = 0; k < trace.times.size(); ++k) {
        const double heat = 50.0 * 2.0 * 2.0 * res;
        temp += trace.dt * (heat - 0.05 * (temp - 298.15));
        res = 0.05 + 0.001 * std::max(0.0, temp - 298.15);
        REQUIRE(trace.temperature[0][k] == temp);
        REQUIRE(trace.resistance[0][k] == res);
    }
    CHECK(trace.temperature[0].back() > 298.15);
    CHECK(trace.resistance[0].back() > 0.05);
}

TEST_CASE("a breaching cluster rests at the next scheduler tick") {
    PackConfig cfg;
    cfg.strings = {{"a", 2, 1}};
    cfg.chemistries["a"] = ChemistryParams{};
    cfg.protocol = ConstantProfile{2.0};
    cfg.simulation.total_time = 20.0;
    cfg.scheduler.constraints.resistance_threshold = 0.04;  // 0.05 breaches
    cfg.scheduler.period = 1.0;
    const auto trace = run_simulation(cfg);

    // period/dt rounds to 2 steps, so the first tick lands after step 1.
    REQUIRE(trace.events.size() == 1);
    const auto& ev = trace.events[0];
    CHECK(ev.time == trace.times[1]);
    CHECK(ev.cluster_id == 0);  // full tie, lower id rests first
    CHECK(ev.event == "rest");
    CHECK(ev.reason == "resistance");

    double soc1 = 0.5;
    for (size_t k = 0; k < trace.times.size(); ++k) {
        CHECK(trace.active[0][k] == (k < 2 ? 1 : 0));
        CHECK(trace.active[1][k] == 1);
        // The survivor picks up the whole level once its twin rests.
        soc1 = std::clamp(soc1 + (k < 2 ? 1.0 : 2.0) * trace.dt / 3600.0, 0.0, 1.0);
        REQUIRE(trace.soc[1][k] == soc1);
        if (k >= 2) {
            CHECK(trace.soc[0][k] == trace.soc[0][1]);
            CHECK(trace.surface[0][k] <= trace.surface[0][k - 1]);
        }
    }
}

TEST_CASE("scheduler cadence rounds the period to whole steps") {
    PackConfig cfg;
    cfg.strings = {{"a", 2, 1}};
    cfg.chemistries["a"] = ChemistryParams{};
    cfg.protocol = ConstantProfile{2.0};
    cfg.simulation.total_time = 20.0;
    cfg.scheduler.constraints.resistance_threshold = 0.04;
    cfg.scheduler.period = 2.0;  // rounds to 3 steps
    const auto trace = run_simulation(cfg);
    REQUIRE(!trace.events.empty());
    CHECK(trace.events[0].time == trace.times[2]);
}

TEST_CASE("hot clusters rotate through rest and recover") {
    PackConfig cfg;
    cfg.strings = {{"a", 2, 1}};
    cfg.chemistries["a"] = ChemistryParams{};
    auto& chem = cfg.chemistries["a"];
    chem.heating_coefficient = 50.0;
    chem.cooling_coefficient = 0.05;
    cfg.protocol = ConstantProfile{2.0};
    cfg.simulation.total_time = 150.0;
    cfg.scheduler.constraints.temperature_threshold = 340.0;
    cfg.scheduler.period = 1.0;
    const auto trace = run_simulation(cfg);

    int rests = 0;
    int wakes = 0;
    std::map<int, std::string> last;
    for (const auto& ev : trace.events) {
        if (ev.event == "rest") {
            ++rests;
            CHECK(ev.reason == "temperature");
            CHECK(last[ev.cluster_id] != "rest");
        } else {
            ++wakes;
            CHECK(ev.event == "wake");
            CHECK(ev.reason == "recovered");
            CHECK(last[ev.cluster_id] == "rest");
        }
        last[ev.cluster_id] = ev.event;
    }
    CHECK(rests >= 2);
    CHECK(wakes >= 1);
    CHECK(trace.events[0].event == "rest");
    CHECK(trace.events[0].cluster_id == 0);

    // The string is never left without a conductor.
    for (size_t k = 0; k < trace.times.size(); ++k) {
        CHECK(trace.active[0][k] + trace.active[1][k] >= 1);
    }
}

TEST_CASE("charge is conserved across an uneven split") {
    // Three clusters, one resting at a time: a freshly woken (cool, low R)
    // cluster then shares the string with a still-hot one, so the inverse-
    // resistance split is genuinely uneven while the sum must stay exact.
    PackConfig cfg;
    cfg.strings = {{"a", 3, 1}};
    cfg.chemistries["a"] = ChemistryParams{};
    auto& chem = cfg.chemistries["a"];
    chem.heating_coefficient = 200.0;
    chem.cooling_coefficient = 0.05;
    chem.resistance_temp_slope = 0.001;
    cfg.protocol = ConstantProfile{2.0};
    cfg.simulation.total_time = 150.0;
    cfg.scheduler.constraints.temperature_threshold = 340.0;
    cfg.scheduler.period = 1.0;
    const auto trace = run_simulation(cfg);

    bool saw_uneven_split = false;
    std::vector<double> prev(3, 0.5);
    for (size_t k = 0; k < trace.times.size(); ++k) {
        std::vector<double> delta(3);
        double total = 0.0;
        for (int i = 0; i < 3; ++i) {
            delta[i] = trace.soc[i][k] - prev[i];
            total += delta[i];
            prev[i] = trace.soc[i][k];
        }
        CHECK(3600.0 * total ==
              doctest::Approx(trace.applied_level[k] * trace.dt).epsilon(1e-8));
        for (int i = 0; i < 3; ++i) {
            for (int j = i + 1; j < 3; ++j) {
                if (trace.active[i][k] == 1 && trace.active[j][k] == 1 &&
                    delta[i] != delta[j]) {
                    saw_uneven_split = true;
                }
            }
        }
    }
    CHECK(saw_uneven_split);
    CHECK(trace.events.size() >= 3);
}

TEST_CASE("percussive runs apply the controller's levels verbatim") {
    auto cfg = one_cluster(0.0);
    PercussiveParams params;
    params.base_amplitude = 2.0;
    params.min_amplitude = 0.5;
    params.max_amplitude = 4.0;
    params.pulse_duration = 5.0;
    params.rest_duration = 5.0;
    params.impedance_threshold = 1.0;     // 0.05 ohm stays well clear
    params.temperature_threshold = 400.0;
    cfg.protocol = params;
    cfg.simulation.total_time = 40.0;
    const auto trace = run_simulation(cfg);

    PercussiveState state;
    for (size_t k = 0; k < trace.times.size(); ++k) {
        const auto step =
            next_percussive_level(params, state, {trace.times[k], 0.05, 298.15, std::nullopt});
        state = step.state;
        REQUIRE(trace.applied_level[k] == step.level);
    }
    CHECK(trace.applied_level[0] == 2.0);
    CHECK(trace.applied_level[20] == 4.0);  // clean first cycle doubled it
}

TEST_CASE("cc-cv runs latch at the ceiling and taper") {
    auto cfg = one_cluster(0.0);
    cfg.protocol = CccvProfile{2.0, 3.05, 0.01};
    cfg.simulation.total_time = 120.0;
    const auto trace = run_simulation(cfg);

    CHECK(trace.applied_level[0] == 2.0);
    size_t latch = trace.times.size();
    for (size_t k = 0; k < trace.times.size(); ++k) {
        if (trace.applied_level[k] < 2.0) {
            latch = k;
            break;
        }
    }
    REQUIRE(latch < trace.times.size());
    for (size_t k = latch + 1; k < trace.times.size(); ++k) {
        CHECK(trace.applied_level[k] <= trace.applied_level[k - 1]);
        CHECK(trace.pack_voltage[k] <= 3.05 + 1e-3);
        CHECK(trace.soc[0][k] >= trace.soc[0][k - 1]);
    }
    CHECK(trace.applied_level.back() > 0.0);
    CHECK(trace.applied_level.back() < 1.5);
}

TEST_CASE("a hopeless voltage floor aborts after the grace window") {
    auto cfg = one_cluster(2.0);
    cfg.simulation.total_time = 60.0;
    cfg.scheduler.constraints.min_pack_voltage = 10.0;  // never reachable near 3 V
    cfg.scheduler.period = 1.0;
    cfg.simulation.infeasibility_grace = 10.0;
    CHECK_THROWS_AS(run_simulation(cfg), InfeasibilityError);

    // With enough grace the run limps to the end instead.
    cfg.simulation.infeasibility_grace = 1e9;
    const auto trace = run_simulation(cfg);
    CHECK(trace.times.size() == 94);  // int(60 / dt)
}

TEST_CASE("dual-chemistry packs share the tightest stable step") {
    PackConfig cfg;
    cfg.strings = {{"a", 1, 1}, {"b", 1, 1}};
    cfg.chemistries["a"] = ChemistryParams{};
    cfg.chemistries["b"] = ChemistryParams{};
    cfg.chemistries["b"].diffusivity = 2e-13;  // halves the stable dt
    cfg.protocol = ConstantProfile{0.0};
    cfg.simulation.total_time = 10.0;
    const auto trace = run_simulation(cfg);

    CHECK(trace.dt == kDt / 2.0);
    REQUIRE(trace.chemistry_names == std::vector<std::string>{"a", "b"});
    REQUIRE(trace.capacity.size() == 2);
    REQUIRE(trace.clusters.size() == 2);
    CHECK(trace.clusters[0].chemistry == "a");
    CHECK(trace.clusters[1].chemistry == "b");
    CHECK(trace.clusters[1].string_index == 1);
    for (size_t k = 0; k < trace.times.size(); ++k) {
        CHECK(trace.pack_voltage[k] == 6.0);  // two open-circuit strings in series
        CHECK(trace.capacity[0][k] == 100.0);
        CHECK(trace.capacity[1][k] == 100.0);
    }
}

TEST_CASE("malformed pack configs are rejected up front") {
    auto cfg = one_cluster(2.0);
    cfg.strings.clear();
    CHECK_THROWS_AS(run_simulation(cfg), InvalidInputError);

    cfg = one_cluster(2.0);
    cfg.strings[0].chemistry = "missing";
    CHECK_THROWS_AS(run_simulation(cfg), InvalidInputError);

    cfg = one_cluster(2.0);
    cfg.strings[0].clusters = 0;
    CHECK_THROWS_AS(run_simulation(cfg), InvalidInputError);

    cfg = one_cluster(2.0);
    cfg.simulation.sample_count = 1;
    CHECK_THROWS_AS(run_simulation(cfg), InvalidInputError);

    cfg = one_cluster(2.0);
    cfg.simulation.dt_safety = 1.5;
    CHECK_THROWS_AS(run_simulation(cfg), InvalidInputError);

    cfg = one_cluster(2.0);
    cfg.simulation.cycle_accounting = "calendar";
    CHECK_THROWS_AS(run_simulation(cfg), InvalidInputError);

    cfg = one_cluster(2.0);
    cfg.composition.power_fraction = 1.3;
    CHECK_THROWS_AS(run_simulation(cfg), InvalidInputError);

    cfg = one_cluster(2.0);
    cfg.simulation.total_time = 0.1;  // under one stable step
    CHECK_THROWS_AS(run_simulation(cfg), InvalidInputError);

    cfg = one_cluster(2.0);
    cfg.scheduler.constraints.min_active_clusters = 3;
    CHECK_THROWS_AS(run_simulation(cfg), InvalidInputError);

    cfg = one_cluster(2.0);
    cfg.chemistries["a"].grid_nodes = 2;
    CHECK_THROWS_AS(run_simulation(cfg), InvalidInputError);
}
