// SPDX-License-Identifier: Apache-2.0
//
// The `sgkit` command surface. Every command is a pure function of the
// config file, the files it references and the seed, and writes its outputs
// atomically under the output directory.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sgkit/core.hpp"

namespace sgkit {

inline constexpr int kExitOk = 0;
inline constexpr int kExitVerification = 1;
inline constexpr int kExitInput = 2;

/// generate-targets, select-queries, match, distill-check, gradcheck,
/// evaluate, generate-fixtures, train-demo.
const std::vector<std::string>& command_names();

struct RunOptions {
  std::string command;
  std::string config_path;  // empty: no config file
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  /// "section.key=value"; value is parsed as JSON, or taken as a string.
  std::vector<std::string> overrides;
};

struct RunConfig {
  json doc;  // effective config, overrides applied, "seed" always set
  std::uint64_t seed = 0;
  std::string base_dir;  // relative paths in the config resolve against this
  std::string out_dir;
  std::string hash;  // FNV-1a of doc.dump(), 16 hex digits

  /// The command's section, or an empty object.
  json section(const std::string& command) const;
  /// Resolved path under `key` of `sec`. Throws SchemaError when required
  /// and absent, and when the file does not exist.
  std::optional<std::string> path(const json& sec, const std::string& key, bool required) const;
};

std::string config_hash(const json& doc);

RunConfig load_run_config(const RunOptions& opts);

/// Runs one command and returns its exit code. Diagnostics go to `log`.
int run_command(const RunOptions& opts, std::ostream& log);

/// Parses argv and dispatches to run_command.
int run_cli(int argc, char** argv);

}  // namespace sgkit
