#pragma once

#include <string>

namespace packsim {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kCsvSchemaVersion = 1;

// High-level entry points behind the CLI subcommands. Each writes its
// output files into out_dir (created if missing) and throws the library
// error types on failure.
void cmd_simulate(const std::string& config_path, const std::string& out_dir);
void cmd_figures(const std::string& out_dir);
void cmd_sweep(const std::string& config_path, const std::string& out_dir, int workers);

}  // namespace packsim
