#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "config.hpp"
#include "errors.hpp"

using namespace packsim;
using nlohmann::json;

namespace {

json minimal() {
    return json::parse(R"({
        "pack": {
            "composition": {"e_energy": 250.0, "e_power": 150.0, "power_fraction": 0.2},
            "strings": [{"chemistry": "main"}]
        },
        "chemistries": {"main": {}},
        "protocol": {"type": "constant", "level": 2.0}
    })");
}

}  // namespace

TEST_CASE("a minimal config fills in every documented default") {
    const auto loaded = parse_config(minimal());

    CHECK(loaded.pack.composition.e_energy == 250.0);
    CHECK(loaded.pack.composition.power_fraction == 0.2);
    CHECK(loaded.pack.ambient_temperature == 298.15);
    REQUIRE(loaded.pack.strings.size() == 1);
    CHECK(loaded.pack.strings[0].clusters == 1);
    CHECK(loaded.pack.strings[0].cells_per_cluster == 1);

    const auto& chem = loaded.pack.chemistries.at("main");
    CHECK(chem.diffusivity == 1e-13);
    CHECK(chem.electrode_thickness == 50e-6);
    CHECK(chem.grid_nodes == 100);
    CHECK(chem.fade_constant.alpha == 0.1);
    CHECK(chem.fade_pulsed.alpha == 0.08);
    CHECK(chem.cell_capacity == 3600.0);

    CHECK(loaded.pack.scheduler.period == 1.0);
    CHECK(loaded.pack.scheduler.constraints.max_rest_fraction == 0.5);
    CHECK(loaded.pack.simulation.total_time == 200.0);
    CHECK(loaded.pack.simulation.sample_count == 200);
    CHECK(loaded.pack.simulation.cycle_accounting == "throughput");
    CHECK_FALSE(loaded.sweep.has_value());

    // The normalized form carries the defaults explicitly.
    CHECK(loaded.normalized["scheduler"]["period"] == 1.0);
    CHECK(loaded.normalized["simulation"]["sample_count"] == 200);
    CHECK(loaded.normalized["chemistries"]["main"]["grid_nodes"] == 100);
    CHECK(loaded.normalized["protocol"]["type"] == "constant");
    CHECK(loaded.hash.size() == 16);
    CHECK(loaded.hash.find_first_not_of("0123456789abcdef") == std::string::npos);
}

TEST_CASE("errors name the offending field and the violated bound") {
    auto j = minimal();
    j["pack"]["composition"]["power_fraction"] = 1.3;
    CHECK_THROWS_WITH_AS(parse_config(j),
                         "pack.composition.power_fraction: must be within [0, 1], got 1.3",
                         ConfigError);

    j = minimal();
    j.erase("protocol");
    CHECK_THROWS_WITH_AS(parse_config(j), "config.protocol: missing required field",
                         ConfigError);

    j = minimal();
    j["protocol"]["type"] = "sawtooth";
    CHECK_THROWS_WITH_AS(
        parse_config(j), doctest::Contains("protocol.type: unknown protocol type 'sawtooth'"),
        ConfigError);

    j = minimal();
    j["chemistries"]["main"]["diffusivity"] = -1.0;
    CHECK_THROWS_WITH_AS(parse_config(j),
                         doctest::Contains("chemistries.main.diffusivity: must be positive"),
                         ConfigError);

    j = minimal();
    j["pack"]["strings"][0]["chemistry"] = "mystery";
    CHECK_THROWS_WITH_AS(
        parse_config(j),
        doctest::Contains("pack.strings[0].chemistry: unknown chemistry 'mystery'"),
        ConfigError);

    j = minimal();
    j["pack"]["composition"]["e_energy"] = "lots";
    CHECK_THROWS_WITH_AS(parse_config(j), "pack.composition.e_energy: must be a number",
                         ConfigError);

    j = minimal();
    j["chemistries"]["main"]["grid_nodes"] = 3.5;
    CHECK_THROWS_WITH_AS(parse_config(j), "chemistries.main.grid_nodes: must be an integer",
                         ConfigError);

    j = minimal();
    j["scheduler"]["max_rest_fraction"] = 1.0;
    CHECK_THROWS_WITH_AS(parse_config(j),
                         "scheduler.max_rest_fraction: must be within [0, 1), got 1",
                         ConfigError);

    j = minimal();
    j["simulation"]["dt_safety"] = 0.0;
    CHECK_THROWS_WITH_AS(parse_config(j),
                         "simulation.dt_safety: must be within (0, 1], got 0", ConfigError);

    j = minimal();
    j["protocol"] = {{"type", "fixed_pulse"}, {"high_level", 5.0},
                     {"period", 20.0}, {"duty", 1.0}};
    CHECK_THROWS_WITH_AS(parse_config(j),
                         doctest::Contains("protocol.duty: must be strictly between 0 and 1"),
                         ConfigError);

    j = minimal();
    j["protocol"] = {{"type", "cccv"}, {"cc_level", 2.0}};
    CHECK_THROWS_WITH_AS(parse_config(j), "protocol.cv_voltage: missing required field",
                         ConfigError);

    CHECK_THROWS_WITH_AS(parse_config(json::array()), "config: top level must be an object",
                         ConfigError);

    j = minimal();
    j["chemistries"] = json::object();
    CHECK_THROWS_WITH_AS(parse_config(j), "chemistries: must be a non-empty object",
                         ConfigError);
}

TEST_CASE("percussive protocol validation") {
    auto j = minimal();
    j["protocol"] = {{"type", "percussive"},    {"base_amplitude", 1.0},
                     {"min_amplitude", 2.0},    {"max_amplitude", 4.0},
                     {"pulse_duration", 5.0},   {"rest_duration", 5.0},
                     {"impedance_threshold", 1.0}, {"temperature_threshold", 350.0}};
    CHECK_THROWS_WITH_AS(
        parse_config(j),
        "protocol.base_amplitude: amplitudes must satisfy min <= base <= max", ConfigError);

    j["protocol"]["min_amplitude"] = 0.5;
    j["protocol"]["amplitude_step"] = 1.0;
    CHECK_THROWS_WITH_AS(
        parse_config(j),
        doctest::Contains("protocol.amplitude_step: must be strictly between 0 and 1"),
        ConfigError);

    j["protocol"]["amplitude_step"] = 0.5;
    j["protocol"]["bidirectional"] = true;
    j["protocol"]["reverse_fraction"] = 0.1;
    const auto loaded = parse_config(j);
    const auto* p = std::get_if<PercussiveParams>(&loaded.pack.protocol);
    REQUIRE(p != nullptr);
    CHECK(p->bidirectional);
    CHECK(p->reverse_fraction == 0.1);
    CHECK(loaded.normalized["protocol"]["amplitude_step"] == 0.5);
}

TEST_CASE("the normalized form is a parse fixed point") {
    const auto loaded = parse_config(minimal());
    const auto reparsed = parse_config(loaded.normalized);
    CHECK(reparsed.normalized == loaded.normalized);
    CHECK(reparsed.hash == loaded.hash);
}

TEST_CASE("key order and spelled-out defaults do not change the hash") {
    const auto a = parse_config(minimal());

    const auto reordered = json::parse(R"({
        "protocol": {"level": 2.0, "type": "constant"},
        "chemistries": {"main": {}},
        "pack": {
            "strings": [{"chemistry": "main"}],
            "composition": {"power_fraction": 0.2, "e_power": 150.0, "e_energy": 250.0}
        }
    })");
    CHECK(parse_config(reordered).hash == a.hash);

    auto spelled = minimal();
    spelled["scheduler"] = {{"period", 1.0}, {"max_rest_fraction", 0.5}};
    spelled["simulation"] = {{"total_time", 200.0}, {"sample_count", 200}};
    spelled["pack"]["ambient_temperature"] = 298.15;
    spelled["pack"]["strings"][0]["clusters"] = 1;
    CHECK(parse_config(spelled).hash == a.hash);

    auto changed = minimal();
    changed["protocol"]["level"] = 2.5;
    CHECK(parse_config(changed).hash != a.hash);
}

TEST_CASE("charge_match_level rescales the pulse height and then disappears") {
    auto j = minimal();
    j["protocol"] = {{"type", "fixed_pulse"}, {"high_level", 1.0}, {"period", 20.0},
                     {"duty", 0.5}, {"charge_match_level", 2.0}};
    const auto loaded = parse_config(j);
    const auto* p = std::get_if<FixedPulseProfile>(&loaded.pack.protocol);
    REQUIRE(p != nullptr);
    CHECK(p->high_level == 4.0);  // average over a period is back to 2.0
    CHECK(p->rest_level == 0.0);
    CHECK_FALSE(loaded.normalized["protocol"].contains("charge_match_level"));

    j["protocol"] = {{"type", "fixed_pulse"}, {"high_level", 1.0}, {"rest_level", -1.0},
                     {"period", 8.0}, {"duty", 0.25}, {"charge_match_level", 2.0}};
    const auto biased = parse_config(j);
    const auto* bp = std::get_if<FixedPulseProfile>(&biased.pack.protocol);
    REQUIRE(bp != nullptr);
    CHECK(bp->high_level == (2.0 - (1.0 - 0.25) * (-1.0)) / 0.25);
}

TEST_CASE("every protocol type survives a serialization round trip") {
    const char* protocols[] = {
        R"({"type": "constant", "level": -1.5})",
        R"({"type": "fixed_pulse", "high_level": 5.0, "rest_level": 0.5,
            "period": 20.0, "duty": 0.3})",
        R"({"type": "cccv", "cc_level": 2.0, "cv_voltage": 4.2, "cv_current_floor": 0.05})",
        R"({"type": "percussive", "base_amplitude": 2.0, "min_amplitude": 0.5,
            "max_amplitude": 4.0, "pulse_duration": 5.0, "rest_duration": 5.0,
            "impedance_threshold": 1.0, "temperature_threshold": 350.0,
            "amplitude_step": 0.25, "bidirectional": true, "reverse_fraction": 0.2})"};
    for (const char* text : protocols) {
        auto j = minimal();
        j["protocol"] = json::parse(text);
        const auto loaded = parse_config(j);
        const auto reparsed = parse_config(loaded.normalized);
        CHECK(reparsed.normalized == loaded.normalized);
        CHECK(reparsed.hash == loaded.hash);
    }
}

TEST_CASE("set_at_path only touches paths that already exist") {
    auto root = parse_config(minimal()).normalized;
    set_at_path(root, "chemistries.main.diffusivity", 2e-13);
    CHECK(root["chemistries"]["main"]["diffusivity"] == 2e-13);
    set_at_path(root, "protocol.level", 3.0);
    CHECK(root["protocol"]["level"] == 3.0);

    CHECK_THROWS_WITH_AS(set_at_path(root, "chemistries.main.unobtainium", 1.0),
                         doctest::Contains("unknown parameter path"), ConfigError);
    CHECK_THROWS_WITH_AS(set_at_path(root, "nope.level", 1.0),
                         doctest::Contains("unknown parameter path"), ConfigError);
    // Array elements are not addressable.
    CHECK_THROWS_WITH_AS(set_at_path(root, "pack.strings.0.clusters", 2),
                         doctest::Contains("unknown parameter path"), ConfigError);
    CHECK_THROWS_AS(set_at_path(root, "", 1.0), ConfigError);
}

TEST_CASE("sweep blocks parse into path and value grids") {
    auto j = minimal();
    j["sweep"] = {{"parameters",
                   json::array({{{"path", "protocol.level"}, {"values", {1.0, 2.0, 3.0}}},
                                {{"path", "chemistries.main.diffusivity"},
                                 {"values", {1e-13, 2e-13}}}})}};
    const auto loaded = parse_config(j);
    REQUIRE(loaded.sweep.has_value());
    REQUIRE(loaded.sweep->parameters.size() == 2);
    CHECK(loaded.sweep->parameters[0].path == "protocol.level");
    CHECK(loaded.sweep->parameters[0].values.size() == 3);
    CHECK(loaded.sweep->parameters[1].values[1] == 2e-13);

    j["sweep"] = json::object();
    CHECK_THROWS_WITH_AS(parse_config(j), "sweep.parameters: missing required field",
                         ConfigError);

    j["sweep"] = {{"parameters", json::array()}};
    CHECK_THROWS_WITH_AS(parse_config(j),
                         "sweep.parameters: must be a non-empty array of {path, values}",
                         ConfigError);

    j["sweep"] = {{"parameters", json::array({{{"values", {1.0}}}})}};
    CHECK_THROWS_WITH_AS(parse_config(j), "sweep.parameters[0].path: missing required field",
                         ConfigError);

    j["sweep"] = {{"parameters", json::array({{{"path", "protocol.level"},
                                               {"values", json::array()}}})}};
    CHECK_THROWS_WITH_AS(parse_config(j), "sweep.parameters[0].values: must be a non-empty array",
                         ConfigError);
}

TEST_CASE("load_config reports missing and malformed files by name") {
    CHECK_THROWS_WITH_AS(load_config("/nonexistent/nowhere.json"),
                         "cannot open config file: /nonexistent/nowhere.json", ConfigError);

    const auto dir = std::filesystem::temp_directory_path();
    const auto bad = (dir / "packsim_cfg_bad.json").string();
    {
        std::ofstream out(bad);
        out << "{ this is not json";
    }
    CHECK_THROWS_WITH_AS(load_config(bad), doctest::Contains("config parse error in"),
                         ConfigError);

    const auto good = (dir / "packsim_cfg_good.json").string();
    {
        std::ofstream out(good);
        out << minimal().dump(2);
    }
    const auto from_file = load_config(good);
    CHECK(from_file.hash == parse_config(minimal()).hash);
    std::filesystem::remove(bad);
    std::filesystem::remove(good);
}
