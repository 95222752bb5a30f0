#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace hjbpinn::cli {

/// Exit codes of run().
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;        // a command failed at run time
inline constexpr int kExitConfig = 2;       // malformed or invalid configuration
inline constexpr int kExitChecksFailed = 3; // verify ran, some check did not pass

struct Options {
  /// bounds | train | sweep | verify | fig1 | rerun
  std::string command;
  std::optional<std::filesystem::path> config;
  /// key=value pairs applied after the config file.
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  std::optional<int> jobs;
  std::optional<std::string> preset;
  std::optional<std::string> kernel;
  /// fig1: the finished sweep directory.
  std::optional<std::filesystem::path> sweep_dir;
  /// rerun: a manifest.json written by an earlier command.
  std::optional<std::filesystem::path> manifest;
};

/// Runs one command. Reports go to `out`, diagnostics to `err`. When an
/// output directory is set, manifest.json is written there even on failure.
int run(const Options& opts, std::ostream& out, std::ostream& err);

}  // namespace hjbpinn::cli
