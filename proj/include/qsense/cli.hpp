// Copyright 2026 The qsense Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/**
 * @file cli.hpp
 * @brief The `qsense` command line: train, optimize, metrics and report.
 *
 * Exit codes: 0 success, 2 usage or input error, 3 resource limit.
 */
#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "qsense/agent.hpp"
#include "qsense/env.hpp"
#include "qsense/training.hpp"

namespace qsense {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitResource = 3;

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Everything a command can be configured with. The file form is a flat JSON
/// object whose keys are the long flag names.
struct RunConfig {
  EnvConfig env;
  AgentConfig agent;
  std::size_t episodes = 1000;
  std::uint64_t seed = 0;
  std::string out = ".";
  std::string circuit;
  std::string pipelines = "simplify";
  std::string agent_path;
  bool json = false;
};

/// Flat JSON text with every key.
std::string config_to_json(const RunConfig& cfg);
/// Applies the keys present in `json_text` on top of `base`. Unknown keys,
/// wrong types and invalid values throw ConfigError.
RunConfig config_from_json(const std::string& json_text, RunConfig base = {});

/// Six significant digits, locale independent.
std::string format_number(double v);
/// Fixed notation with `decimals` digits after the point.
std::string format_fixed(double v, int decimals);

/// One header row plus one row per episode.
std::string episodes_csv(std::span<const EpisodeLog> log);
/// Parses the output of episodes_csv. Throws std::runtime_error.
std::vector<EpisodeLog> parse_episodes_csv(const std::string& text);
std::string pareto_csv(std::span<const EpisodeLog> log);
std::string reward_curve_csv(std::span<const EpisodeLog> log);
std::string summary_text(const RunSummary& s);

/// `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qsense
