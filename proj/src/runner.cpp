#include "runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>
#include <vector>

#include <json.hpp>

#include "config.hpp"
#include "diffusion.hpp"
#include "electrochem.hpp"
#include "engine.hpp"
#include "errors.hpp"
#include "text.hpp"

namespace packsim {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Figure-data constants: the energy/power cell densities behind the blend
// curve, its 175 Wh/kg reference line, and the slab used for the surface-
// concentration comparison.
constexpr double kFigEnergyCell = 250.0;  // Wh/kg
constexpr double kFigPowerCell = 150.0;   // Wh/kg
constexpr double kFigTarget = 175.0;      // Wh/kg
constexpr double kFigSlabThickness = 50e-6;  // m
constexpr int kFigSlabNodes = 100;
constexpr double kFigDiffusivity = 1e-13;    // m^2/s
constexpr double kFigTotalTime = 200.0;      // s
constexpr double kFigConstantFlux = 2.0;
constexpr double kFigPulseHigh = 5.0;
constexpr double kFigPulsePeriod = 20.0;     // s
constexpr FadeModel kFigFadeConstant{100.0, 0.1, 1e-3};
constexpr FadeModel kFigFadePulsed{100.0, 0.08, 8e-4};
constexpr int kFigSampleCount = 200;
constexpr int kFigCycleStep = 2000;
constexpr int kFigCycleMax = 20000;

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out.is_open()) {
        throw Error("cannot open output file for writing: " + path.string());
    }
    return out;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw Error("cannot create output directory " + dir + ": " + ec.message());
    }
}

struct RunSummary {
    json final_capacity = json::object();  // chemistry -> percent
    double peak_surface = 0.0;
    int rest_events = 0;
    double total_rest_time = 0.0;
};

RunSummary summarize(const SimulationTrace& trace) {
    RunSummary s;
    for (size_t ci = 0; ci < trace.chemistry_names.size(); ++ci) {
        s.final_capacity[trace.chemistry_names[ci]] = trace.capacity[ci].back();
    }
    for (const auto& surf : trace.surface) {
        for (double v : surf) {
            s.peak_surface = std::max(s.peak_surface, v);
        }
    }
    for (const auto& e : trace.events) {
        if (e.event == "rest") {
            ++s.rest_events;
        }
    }
    for (const auto& modes : trace.active) {
        for (std::uint8_t m : modes) {
            if (m == 0) {
                s.total_rest_time += trace.dt;
            }
        }
    }
    return s;
}

void write_trace_csv(const fs::path& path, const SimulationTrace& trace, int sample_count) {
    auto out = open_out(path);
    out << "time,applied_level,pack_voltage";
    for (const auto& name : trace.chemistry_names) {
        out << ",capacity_" << name;
    }
    for (const auto& c : trace.clusters) {
        const std::string p = "cluster" + std::to_string(c.id) + "_";
        out << "," << p << "active," << p << "surface," << p << "temperature," << p
            << "resistance," << p << "soc";
    }
    out << "\n";
    const int steps = static_cast<int>(trace.times.size());
    for (int i : sample_indices(steps, sample_count)) {
        const auto k = static_cast<size_t>(i);
        out << format_double(trace.times[k]) << "," << format_double(trace.applied_level[k])
            << "," << format_double(trace.pack_voltage[k]);
        for (const auto& cap : trace.capacity) {
            out << "," << format_double(cap[k]);
        }
        for (size_t c = 0; c < trace.clusters.size(); ++c) {
            out << "," << (trace.active[c][k] != 0 ? 1 : 0) << ","
                << format_double(trace.surface[c][k]) << ","
                << format_double(trace.temperature[c][k]) << ","
                << format_double(trace.resistance[c][k]) << ","
                << format_double(trace.soc[c][k]);
        }
        out << "\n";
    }
}

void write_events_csv(const fs::path& path, const SimulationTrace& trace) {
    auto out = open_out(path);
    out << "time,cluster,event,reason\n";
    for (const auto& e : trace.events) {
        out << format_double(e.time) << "," << e.cluster_id << "," << e.event << "," << e.reason
            << "\n";
    }
}

void write_manifest(const fs::path& path, const std::string& config_hash,
                    const std::vector<std::string>& outputs, const json& summary,
                    double duration_seconds) {
    json m;
    m["config_hash"] = config_hash;
    m["tool_version"] = kToolVersion;
    m["schema_version"] = kCsvSchemaVersion;
    m["duration_seconds"] = duration_seconds;
    m["outputs"] = outputs;
    m["summary"] = summary;
    auto out = open_out(path);
    out << m.dump(2) << "\n";
}

}  // namespace

void cmd_simulate(const std::string& config_path, const std::string& out_dir) {
    const auto started = std::chrono::steady_clock::now();
    const LoadedConfig loaded = load_config(config_path);
    const SimulationTrace trace = run_simulation(loaded.pack);

    ensure_dir(out_dir);
    const fs::path dir(out_dir);
    write_trace_csv(dir / "trace.csv", trace, loaded.pack.simulation.sample_count);
    write_events_csv(dir / "events.csv", trace);

    const RunSummary s = summarize(trace);
    json summary;
    summary["final_capacity"] = s.final_capacity;
    summary["peak_surface_concentration"] = s.peak_surface;
    summary["rest_event_count"] = s.rest_events;
    summary["total_rest_time"] = s.total_rest_time;
    const double duration =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    write_manifest(dir / "manifest.json", loaded.hash, {"trace.csv", "events.csv"}, summary,
                   duration);
}

void cmd_figures(const std::string& out_dir) {
    ensure_dir(out_dir);
    const fs::path dir(out_dir);

    {
        auto out = open_out(dir / "fig1.csv");
        out << "fraction,pack_specific_energy,target\n";
        for (int i = 0; i <= 6; ++i) {
            const double f = i * 0.1;
            const double e = pack_specific_energy({kFigEnergyCell, kFigPowerCell, f});
            out << format_double(f) << "," << format_double(e) << ","
                << format_double(kFigTarget) << "\n";
        }
    }

    {
        DiffusionGrid constant_grid(kFigSlabThickness, kFigSlabNodes, kFigDiffusivity);
        DiffusionGrid pulsed_grid(kFigSlabThickness, kFigSlabNodes, kFigDiffusivity);
        const double dt = constant_grid.stable_dt(0.5);
        const CurrentProfile constant = ConstantProfile{kFigConstantFlux};
        const CurrentProfile pulsed =
            FixedPulseProfile{kFigPulseHigh, 0.0, kFigPulsePeriod, 0.5};
        const SurfaceTrace const_trace = run_diffusion(
            constant_grid, [&](double t) { return flux_at(constant, t); }, kFigTotalTime, dt,
            kFigSampleCount);
        const SurfaceTrace pulse_trace = run_diffusion(
            pulsed_grid, [&](double t) { return flux_at(pulsed, t); }, kFigTotalTime, dt,
            kFigSampleCount);
        auto out = open_out(dir / "fig2.csv");
        out << "time,constant,pulsed\n";
        for (size_t i = 0; i < const_trace.times.size(); ++i) {
            out << format_double(const_trace.times[i]) << ","
                << format_double(const_trace.surface[i]) << ","
                << format_double(pulse_trace.surface[i]) << "\n";
        }
    }

    {
        auto out = open_out(dir / "fig3.csv");
        out << "cycles,constant,pulsed\n";
        for (int n = 0; n <= kFigCycleMax; n += kFigCycleStep) {
            out << n << "," << format_double(capacity_retained(kFigFadeConstant, n)) << ","
                << format_double(capacity_retained(kFigFadePulsed, n)) << "\n";
        }
    }
}

void cmd_sweep(const std::string& config_path, const std::string& out_dir, int workers) {
    const auto started = std::chrono::steady_clock::now();
    const LoadedConfig base = load_config(config_path);
    if (!base.sweep.has_value()) {
        throw ConfigError("sweep: config file has no sweep block");
    }
    const SweepSpec& spec = *base.sweep;

    // Validate every path against the normalized config up front so an
    // unknown parameter fails before any runs start.
    for (const auto& p : spec.parameters) {
        json probe = base.normalized;
        set_at_path(probe, p.path, p.values.front());
    }

    // Cartesian product, last parameter fastest (row-major in declaration
    // order), one run per combination.
    size_t total_runs = 1;
    for (const auto& p : spec.parameters) {
        total_runs *= p.values.size();
    }

    struct Row {
        std::vector<json> values;
        json final_capacity;
        double pack_energy = 0.0;
        double peak_surface = 0.0;
        int rest_events = 0;
        double total_rest_time = 0.0;
    };
    std::vector<Row> rows(total_runs);

    auto run_one = [&](size_t index) {
        Row& row = rows[index];
        json patched = base.normalized;
        size_t rem = index;
        row.values.resize(spec.parameters.size());
        for (size_t pi = spec.parameters.size(); pi-- > 0;) {
            const auto& p = spec.parameters[pi];
            const size_t vi = rem % p.values.size();
            rem /= p.values.size();
            row.values[pi] = p.values[vi];
            set_at_path(patched, p.path, p.values[vi]);
        }
        const LoadedConfig cfg = parse_config(patched);
        const SimulationTrace trace = run_simulation(cfg.pack);
        const RunSummary s = summarize(trace);
        row.final_capacity = s.final_capacity;
        row.pack_energy = pack_specific_energy(cfg.pack.composition);
        row.peak_surface = s.peak_surface;
        row.rest_events = s.rest_events;
        row.total_rest_time = s.total_rest_time;
    };

    if (workers < 1) {
        workers = 1;
    }
    if (workers == 1 || total_runs <= 1) {
        for (size_t i = 0; i < total_runs; ++i) {
            run_one(i);
        }
    } else {
        std::atomic<size_t> next{0};
        std::exception_ptr first_error;
        std::mutex error_mutex;
        auto worker = [&]() {
            for (;;) {
                const size_t i = next.fetch_add(1);
                if (i >= total_runs) {
                    return;
                }
                try {
                    run_one(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) {
                        first_error = std::current_exception();
                    }
                    return;
                }
            }
        };
        std::vector<std::thread> pool;
        const size_t n_threads = std::min<size_t>(static_cast<size_t>(workers), total_runs);
        pool.reserve(n_threads);
        for (size_t i = 0; i < n_threads; ++i) {
            pool.emplace_back(worker);
        }
        for (auto& t : pool) {
            t.join();
        }
        if (first_error) {
            std::rethrow_exception(first_error);
        }
    }

    ensure_dir(out_dir);
    const fs::path dir(out_dir);
    const std::vector<std::string> chem_names = [&] {
        std::vector<std::string> names;
        for (const auto& [name, value] : rows.front().final_capacity.items()) {
            names.push_back(name);
            (void)value;
        }
        return names;
    }();

    {
        auto out = open_out(dir / "summary.csv");
        for (const auto& p : spec.parameters) {
            out << p.path << ",";
        }
        out << "pack_specific_energy";
        for (const auto& name : chem_names) {
            out << ",final_capacity_" << name;
        }
        out << ",peak_surface_concentration,rest_events,total_rest_time\n";
        for (const auto& row : rows) {
            for (const auto& v : row.values) {
                if (v.is_number()) {
                    out << format_double(v.get<double>());
                } else if (v.is_string()) {
                    out << v.get<std::string>();
                } else {
                    out << v.dump();
                }
                out << ",";
            }
            out << format_double(row.pack_energy);
            for (const auto& name : chem_names) {
                out << "," << format_double(row.final_capacity.at(name).get<double>());
            }
            out << "," << format_double(row.peak_surface) << "," << row.rest_events << ","
                << format_double(row.total_rest_time) << "\n";
        }
    }

    json summary;
    summary["runs"] = total_runs;
    const double duration =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    write_manifest(dir / "manifest.json", base.hash, {"summary.csv"}, summary, duration);
}

}  // namespace packsim
