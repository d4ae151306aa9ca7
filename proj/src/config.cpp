#include "config.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>

#include "errors.hpp"
#include "text.hpp"

namespace packsim {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ConfigError(path + ": " + what);
}

const json& member(const json& obj, const std::string& path, const std::string& key) {
    if (!obj.is_object()) {
        fail(path, "must be an object");
    }
    if (!obj.contains(key)) {
        fail(path + "." + key, "missing required field");
    }
    return obj.at(key);
}

double req_num(const json& obj, const std::string& path, const std::string& key) {
    const json& v = member(obj, path, key);
    if (!v.is_number()) {
        fail(path + "." + key, "must be a number");
    }
    return v.get<double>();
}

double opt_num(const json& obj, const std::string& path, const std::string& key, double dflt) {
    if (!obj.is_object() || !obj.contains(key)) {
        return dflt;
    }
    return req_num(obj, path, key);
}

int opt_int(const json& obj, const std::string& path, const std::string& key, int dflt) {
    if (!obj.is_object() || !obj.contains(key)) {
        return dflt;
    }
    const json& v = obj.at(key);
    if (!v.is_number_integer()) {
        fail(path + "." + key, "must be an integer");
    }
    return v.get<int>();
}

int req_int(const json& obj, const std::string& path, const std::string& key) {
    const json& v = member(obj, path, key);
    if (!v.is_number_integer()) {
        fail(path + "." + key, "must be an integer");
    }
    return v.get<int>();
}

bool opt_bool(const json& obj, const std::string& path, const std::string& key, bool dflt) {
    if (!obj.is_object() || !obj.contains(key)) {
        return dflt;
    }
    const json& v = obj.at(key);
    if (!v.is_boolean()) {
        fail(path + "." + key, "must be a boolean");
    }
    return v.get<bool>();
}

std::string req_str(const json& obj, const std::string& path, const std::string& key) {
    const json& v = member(obj, path, key);
    if (!v.is_string()) {
        fail(path + "." + key, "must be a string");
    }
    return v.get<std::string>();
}

double positive(double v, const std::string& path) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        fail(path, "must be positive and finite, got " + format_double(v));
    }
    return v;
}

double non_negative(double v, const std::string& path) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
        fail(path, "must be non-negative and finite, got " + format_double(v));
    }
    return v;
}

double finite(double v, const std::string& path) {
    if (!std::isfinite(v)) {
        fail(path, "must be finite");
    }
    return v;
}

double unit_interval(double v, const std::string& path) {
    if (!(v >= 0.0 && v <= 1.0)) {
        fail(path, "must be within [0, 1], got " + format_double(v));
    }
    return v;
}

FadeModel parse_fade(const json& obj, const std::string& path, const FadeModel& dflt) {
    FadeModel m = dflt;
    m.c0 = positive(opt_num(obj, path, "c0", dflt.c0), path + ".c0");
    m.alpha = non_negative(opt_num(obj, path, "alpha", dflt.alpha), path + ".alpha");
    m.beta = non_negative(opt_num(obj, path, "beta", dflt.beta), path + ".beta");
    return m;
}

ChemistryParams parse_chemistry(const json& obj, const std::string& path) {
    ChemistryParams d;  // documented defaults
    ChemistryParams c;
    c.diffusivity = positive(opt_num(obj, path, "diffusivity", d.diffusivity),
                             path + ".diffusivity");
    c.electrode_thickness =
        positive(opt_num(obj, path, "electrode_thickness", d.electrode_thickness),
                 path + ".electrode_thickness");
    c.grid_nodes = opt_int(obj, path, "grid_nodes", d.grid_nodes);
    if (c.grid_nodes < 3) {
        fail(path + ".grid_nodes", "must be >= 3, got " + std::to_string(c.grid_nodes));
    }
    c.initial_concentration =
        finite(opt_num(obj, path, "initial_concentration", d.initial_concentration),
               path + ".initial_concentration");
    c.flux_per_current = non_negative(
        opt_num(obj, path, "flux_per_current", d.flux_per_current), path + ".flux_per_current");
    if (obj.contains("fade")) {
        const json& fade = obj.at("fade");
        if (!fade.is_object()) {
            fail(path + ".fade", "must be an object");
        }
        if (fade.contains("constant")) {
            c.fade_constant = parse_fade(fade.at("constant"), path + ".fade.constant",
                                         d.fade_constant);
        }
        if (fade.contains("pulsed")) {
            c.fade_pulsed = parse_fade(fade.at("pulsed"), path + ".fade.pulsed", d.fade_pulsed);
        }
    }
    c.standard_potential =
        finite(opt_num(obj, path, "standard_potential", d.standard_potential),
               path + ".standard_potential");
    c.electrons = opt_int(obj, path, "electrons", d.electrons);
    if (c.electrons < 1) {
        fail(path + ".electrons", "must be >= 1, got " + std::to_string(c.electrons));
    }
    c.initial_soc = unit_interval(opt_num(obj, path, "initial_soc", d.initial_soc),
                                  path + ".initial_soc");
    c.cell_capacity = positive(opt_num(obj, path, "cell_capacity", d.cell_capacity),
                               path + ".cell_capacity");
    c.base_resistance = positive(opt_num(obj, path, "base_resistance", d.base_resistance),
                                 path + ".base_resistance");
    c.resistance_temp_slope =
        non_negative(opt_num(obj, path, "resistance_temp_slope", d.resistance_temp_slope),
                     path + ".resistance_temp_slope");
    c.nominal_temperature =
        positive(opt_num(obj, path, "nominal_temperature", d.nominal_temperature),
                 path + ".nominal_temperature");
    c.heating_coefficient =
        non_negative(opt_num(obj, path, "heating_coefficient", d.heating_coefficient),
                     path + ".heating_coefficient");
    c.cooling_coefficient =
        non_negative(opt_num(obj, path, "cooling_coefficient", d.cooling_coefficient),
                     path + ".cooling_coefficient");
    return c;
}

CurrentProfile parse_protocol(const json& obj, const std::string& path) {
    const std::string type = req_str(obj, path, "type");
    if (type == "constant") {
        return ConstantProfile{finite(req_num(obj, path, "level"), path + ".level")};
    }
    if (type == "fixed_pulse") {
        FixedPulseProfile p;
        p.high_level = finite(req_num(obj, path, "high_level"), path + ".high_level");
        p.rest_level = finite(opt_num(obj, path, "rest_level", 0.0), path + ".rest_level");
        p.period = positive(req_num(obj, path, "period"), path + ".period");
        p.duty = opt_num(obj, path, "duty", 0.5);
        if (!(p.duty > 0.0 && p.duty < 1.0)) {
            fail(path + ".duty",
                 "must be strictly between 0 and 1, got " + format_double(p.duty));
        }
        if (obj.contains("charge_match_level")) {
            // Rescale the pulse so its duty-weighted average equals the
            // requested level; lets pulse runs move the same charge as a
            // constant-current run at that level.
            const double target = finite(req_num(obj, path, "charge_match_level"),
                                         path + ".charge_match_level");
            p.high_level = (target - (1.0 - p.duty) * p.rest_level) / p.duty;
            if (!std::isfinite(p.high_level)) {
                fail(path + ".charge_match_level", "produces a non-finite pulse level");
            }
        }
        return p;
    }
    if (type == "cccv") {
        CccvProfile p;
        p.cc_level = positive(req_num(obj, path, "cc_level"), path + ".cc_level");
        p.cv_voltage = positive(req_num(obj, path, "cv_voltage"), path + ".cv_voltage");
        p.cv_current_floor = non_negative(opt_num(obj, path, "cv_current_floor", 0.0),
                                          path + ".cv_current_floor");
        return p;
    }
    if (type == "percussive") {
        PercussiveParams p;
        p.base_amplitude = positive(req_num(obj, path, "base_amplitude"),
                                    path + ".base_amplitude");
        p.min_amplitude = positive(req_num(obj, path, "min_amplitude"), path + ".min_amplitude");
        p.max_amplitude = positive(req_num(obj, path, "max_amplitude"), path + ".max_amplitude");
        if (!(p.min_amplitude <= p.base_amplitude && p.base_amplitude <= p.max_amplitude)) {
            fail(path + ".base_amplitude",
                 "amplitudes must satisfy min <= base <= max");
        }
        p.pulse_duration = positive(req_num(obj, path, "pulse_duration"),
                                    path + ".pulse_duration");
        p.rest_duration = positive(req_num(obj, path, "rest_duration"), path + ".rest_duration");
        p.impedance_threshold = positive(req_num(obj, path, "impedance_threshold"),
                                         path + ".impedance_threshold");
        p.temperature_threshold = positive(req_num(obj, path, "temperature_threshold"),
                                           path + ".temperature_threshold");
        p.amplitude_step = opt_num(obj, path, "amplitude_step", 0.5);
        if (!(p.amplitude_step > 0.0 && p.amplitude_step < 1.0)) {
            fail(path + ".amplitude_step", "must be strictly between 0 and 1, got " +
                                               format_double(p.amplitude_step));
        }
        p.bidirectional = opt_bool(obj, path, "bidirectional", false);
        p.reverse_fraction = unit_interval(opt_num(obj, path, "reverse_fraction", 0.0),
                                           path + ".reverse_fraction");
        return p;
    }
    fail(path + ".type", "unknown protocol type '" + type +
                             "' (expected constant, fixed_pulse, cccv, or percussive)");
}

SweepSpec parse_sweep(const json& obj) {
    if (!obj.is_object() || !obj.contains("parameters")) {
        fail("sweep.parameters", "missing required field");
    }
    const json& params = obj.at("parameters");
    if (!params.is_array() || params.empty()) {
        fail("sweep.parameters", "must be a non-empty array of {path, values}");
    }
    SweepSpec spec;
    for (size_t i = 0; i < params.size(); ++i) {
        const std::string where = "sweep.parameters[" + std::to_string(i) + "]";
        const json& p = params.at(i);
        SweepParameter sp;
        sp.path = req_str(p, where, "path");
        const json& values = member(p, where, "values");
        if (!values.is_array() || values.empty()) {
            fail(where + ".values", "must be a non-empty array");
        }
        for (const auto& v : values) {
            sp.values.push_back(v);
        }
        spec.parameters.push_back(std::move(sp));
    }
    return spec;
}

}  // namespace

LoadedConfig parse_config(const json& j) {
    if (!j.is_object()) {
        fail("config", "top level must be an object");
    }
    PackConfig c;

    const json& pack = member(j, "config", "pack");
    const json& comp = member(pack, "pack", "composition");
    c.composition.e_energy = positive(req_num(comp, "pack.composition", "e_energy"),
                                      "pack.composition.e_energy");
    c.composition.e_power = positive(req_num(comp, "pack.composition", "e_power"),
                                     "pack.composition.e_power");
    c.composition.power_fraction =
        unit_interval(req_num(comp, "pack.composition", "power_fraction"),
                      "pack.composition.power_fraction");
    c.ambient_temperature = positive(opt_num(pack, "pack", "ambient_temperature", 298.15),
                                     "pack.ambient_temperature");

    const json& chems = member(j, "config", "chemistries");
    if (!chems.is_object() || chems.empty()) {
        fail("chemistries", "must be a non-empty object");
    }
    for (const auto& [name, body] : chems.items()) {
        c.chemistries[name] = parse_chemistry(body, "chemistries." + name);
    }

    const json& strings = member(pack, "pack", "strings");
    if (!strings.is_array() || strings.empty()) {
        fail("pack.strings", "must be a non-empty array");
    }
    for (size_t i = 0; i < strings.size(); ++i) {
        const std::string where = "pack.strings[" + std::to_string(i) + "]";
        const json& s = strings.at(i);
        StringSpec spec;
        spec.chemistry = req_str(s, where, "chemistry");
        if (c.chemistries.find(spec.chemistry) == c.chemistries.end()) {
            fail(where + ".chemistry", "unknown chemistry '" + spec.chemistry + "'");
        }
        spec.clusters = opt_int(s, where, "clusters", 1);
        if (spec.clusters < 1) {
            fail(where + ".clusters", "must be >= 1");
        }
        spec.cells_per_cluster = opt_int(s, where, "cells_per_cluster", 1);
        if (spec.cells_per_cluster < 1) {
            fail(where + ".cells_per_cluster", "must be >= 1");
        }
        c.strings.push_back(std::move(spec));
    }

    c.protocol = parse_protocol(member(j, "config", "protocol"), "protocol");

    if (j.contains("scheduler")) {
        const json& s = j.at("scheduler");
        ScheduleConstraints d;
        auto& cons = c.scheduler.constraints;
        cons.resistance_threshold =
            positive(opt_num(s, "scheduler", "resistance_threshold", d.resistance_threshold),
                     "scheduler.resistance_threshold");
        cons.temperature_threshold =
            positive(opt_num(s, "scheduler", "temperature_threshold", d.temperature_threshold),
                     "scheduler.temperature_threshold");
        cons.min_active_clusters = opt_int(s, "scheduler", "min_active_clusters", 1);
        if (cons.min_active_clusters < 1) {
            fail("scheduler.min_active_clusters", "must be >= 1");
        }
        cons.min_pack_voltage = finite(opt_num(s, "scheduler", "min_pack_voltage", 0.0),
                                       "scheduler.min_pack_voltage");
        cons.max_rest_fraction = opt_num(s, "scheduler", "max_rest_fraction", 0.5);
        if (!(cons.max_rest_fraction >= 0.0 && cons.max_rest_fraction < 1.0)) {
            fail("scheduler.max_rest_fraction", "must be within [0, 1), got " +
                                                    format_double(cons.max_rest_fraction));
        }
        cons.min_rest_duration = non_negative(opt_num(s, "scheduler", "min_rest_duration", 0.0),
                                              "scheduler.min_rest_duration");
        cons.min_active_duration =
            non_negative(opt_num(s, "scheduler", "min_active_duration", 0.0),
                         "scheduler.min_active_duration");
        c.scheduler.period = positive(opt_num(s, "scheduler", "period", 1.0), "scheduler.period");
    }

    if (j.contains("simulation")) {
        const json& s = j.at("simulation");
        SimulationParams d;
        auto& sim = c.simulation;
        sim.total_time = positive(opt_num(s, "simulation", "total_time", d.total_time),
                                  "simulation.total_time");
        sim.dt_safety = opt_num(s, "simulation", "dt_safety", d.dt_safety);
        if (!(sim.dt_safety > 0.0 && sim.dt_safety <= 1.0)) {
            fail("simulation.dt_safety",
                 "must be within (0, 1], got " + format_double(sim.dt_safety));
        }
        sim.sample_count = opt_int(s, "simulation", "sample_count", d.sample_count);
        if (sim.sample_count < 2) {
            fail("simulation.sample_count", "must be >= 2");
        }
        sim.infeasibility_grace =
            non_negative(opt_num(s, "simulation", "infeasibility_grace", d.infeasibility_grace),
                         "simulation.infeasibility_grace");
        sim.q_clamp_epsilon =
            opt_num(s, "simulation", "q_clamp_epsilon", d.q_clamp_epsilon);
        if (!(sim.q_clamp_epsilon > 0.0 && sim.q_clamp_epsilon < 0.5)) {
            fail("simulation.q_clamp_epsilon",
                 "must be within (0, 0.5), got " + format_double(sim.q_clamp_epsilon));
        }
        if (s.contains("cycle_accounting")) {
            sim.cycle_accounting = req_str(s, "simulation", "cycle_accounting");
        }
        if (sim.cycle_accounting != "throughput") {
            fail("simulation.cycle_accounting",
                 "unknown rule '" + sim.cycle_accounting + "' (supported: throughput)");
        }
    }

    LoadedConfig loaded;
    loaded.pack = std::move(c);
    loaded.normalized = to_json(loaded.pack);
    loaded.hash = config_hash(loaded.normalized);
    if (j.contains("sweep")) {
        loaded.sweep = parse_sweep(j.at("sweep"));
    }
    return loaded;
}

LoadedConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in.is_open()) {
        throw ConfigError("cannot open config file: " + path);
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }
    return parse_config(j);
}

nlohmann::json to_json(const PackConfig& config) {
    json j;
    j["pack"]["composition"] = {{"e_energy", config.composition.e_energy},
                                {"e_power", config.composition.e_power},
                                {"power_fraction", config.composition.power_fraction}};
    j["pack"]["ambient_temperature"] = config.ambient_temperature;
    json strings = json::array();
    for (const auto& s : config.strings) {
        strings.push_back({{"chemistry", s.chemistry},
                           {"clusters", s.clusters},
                           {"cells_per_cluster", s.cells_per_cluster}});
    }
    j["pack"]["strings"] = std::move(strings);

    for (const auto& [name, chem] : config.chemistries) {
        json fade = {{"constant",
                      {{"c0", chem.fade_constant.c0},
                       {"alpha", chem.fade_constant.alpha},
                       {"beta", chem.fade_constant.beta}}},
                     {"pulsed",
                      {{"c0", chem.fade_pulsed.c0},
                       {"alpha", chem.fade_pulsed.alpha},
                       {"beta", chem.fade_pulsed.beta}}}};
        j["chemistries"][name] = {{"diffusivity", chem.diffusivity},
                                  {"electrode_thickness", chem.electrode_thickness},
                                  {"grid_nodes", chem.grid_nodes},
                                  {"initial_concentration", chem.initial_concentration},
                                  {"flux_per_current", chem.flux_per_current},
                                  {"fade", std::move(fade)},
                                  {"standard_potential", chem.standard_potential},
                                  {"electrons", chem.electrons},
                                  {"initial_soc", chem.initial_soc},
                                  {"cell_capacity", chem.cell_capacity},
                                  {"base_resistance", chem.base_resistance},
                                  {"resistance_temp_slope", chem.resistance_temp_slope},
                                  {"nominal_temperature", chem.nominal_temperature},
                                  {"heating_coefficient", chem.heating_coefficient},
                                  {"cooling_coefficient", chem.cooling_coefficient}};
    }

    if (const auto* p = std::get_if<ConstantProfile>(&config.protocol)) {
        j["protocol"] = {{"type", "constant"}, {"level", p->level}};
    } else if (const auto* p = std::get_if<FixedPulseProfile>(&config.protocol)) {
        j["protocol"] = {{"type", "fixed_pulse"},
                         {"high_level", p->high_level},
                         {"rest_level", p->rest_level},
                         {"period", p->period},
                         {"duty", p->duty}};
    } else if (const auto* p = std::get_if<CccvProfile>(&config.protocol)) {
        j["protocol"] = {{"type", "cccv"},
                         {"cc_level", p->cc_level},
                         {"cv_voltage", p->cv_voltage},
                         {"cv_current_floor", p->cv_current_floor}};
    } else if (const auto* p = std::get_if<PercussiveParams>(&config.protocol)) {
        j["protocol"] = {{"type", "percussive"},
                         {"base_amplitude", p->base_amplitude},
                         {"min_amplitude", p->min_amplitude},
                         {"max_amplitude", p->max_amplitude},
                         {"pulse_duration", p->pulse_duration},
                         {"rest_duration", p->rest_duration},
                         {"impedance_threshold", p->impedance_threshold},
                         {"temperature_threshold", p->temperature_threshold},
                         {"amplitude_step", p->amplitude_step},
                         {"bidirectional", p->bidirectional},
                         {"reverse_fraction", p->reverse_fraction}};
    }

    const auto& cons = config.scheduler.constraints;
    j["scheduler"] = {{"resistance_threshold", cons.resistance_threshold},
                      {"temperature_threshold", cons.temperature_threshold},
                      {"min_active_clusters", cons.min_active_clusters},
                      {"min_pack_voltage", cons.min_pack_voltage},
                      {"max_rest_fraction", cons.max_rest_fraction},
                      {"min_rest_duration", cons.min_rest_duration},
                      {"min_active_duration", cons.min_active_duration},
                      {"period", config.scheduler.period}};

    const auto& sim = config.simulation;
    j["simulation"] = {{"total_time", sim.total_time},
                       {"dt_safety", sim.dt_safety},
                       {"sample_count", sim.sample_count},
                       {"infeasibility_grace", sim.infeasibility_grace},
                       {"q_clamp_epsilon", sim.q_clamp_epsilon},
                       {"cycle_accounting", sim.cycle_accounting}};
    return j;
}

std::string config_hash(const nlohmann::json& normalized) {
    // FNV-1a over the sorted-key dump; nlohmann objects iterate in key
    // order, so files differing only in key layout hash identically.
    const std::string dump = normalized.dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char b : dump) {
        h ^= b;
        h *= 1099511628211ULL;
    }
    char buf[17];
    static const char* hex = "0123456789abcdef";
    for (int i = 15; i >= 0; --i) {
        buf[i] = hex[h & 0xF];
        h >>= 4;
    }
    buf[16] = '\0';
    return std::string(buf);
}

void set_at_path(nlohmann::json& root, const std::string& path, const nlohmann::json& value) {
    if (path.empty()) {
        throw ConfigError("sweep: empty parameter path");
    }
    json* node = &root;
    size_t begin = 0;
    std::vector<std::string> segments;
    while (begin <= path.size()) {
        const size_t dot = path.find('.', begin);
        segments.push_back(path.substr(begin, dot == std::string::npos ? dot : dot - begin));
        if (dot == std::string::npos) {
            break;
        }
        begin = dot + 1;
    }
    for (size_t i = 0; i + 1 < segments.size(); ++i) {
        if (!node->is_object() || !node->contains(segments[i])) {
            throw ConfigError("sweep: unknown parameter path '" + path + "' (at segment '" +
                              segments[i] + "')");
        }
        node = &node->at(segments[i]);
    }
    const std::string& leaf = segments.back();
    if (!node->is_object() || !node->contains(leaf)) {
        throw ConfigError("sweep: unknown parameter path '" + path + "' (at segment '" + leaf +
                          "')");
    }
    (*node)[leaf] = value;
}

}  // namespace packsim
