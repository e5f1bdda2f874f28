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

#include "qsense/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "qsense/metrics.hpp"
#include "qsense/passes.hpp"

namespace qsense {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Configuration keys

struct Key {
  std::string name;
  std::function<json(const RunConfig&)> get;
  std::function<void(RunConfig&, const json&)> set;
};

template <typename Access>
Key real_key(std::string name, Access access) {
  return {name,
          [access](const RunConfig& c) { return json(access(const_cast<RunConfig&>(c))); },
          [access, name](RunConfig& c, const json& v) {
            if (!v.is_number()) throw ConfigError("config key '" + name + "' must be a number");
            access(c) = v.get<double>();
          }};
}

template <typename T, typename Access>
Key count_key(std::string name, Access access) {
  return {name,
          [access](const RunConfig& c) { return json(access(const_cast<RunConfig&>(c))); },
          [access, name](RunConfig& c, const json& v) {
            if (!v.is_number_unsigned())
              throw ConfigError("config key '" + name + "' must be a non-negative integer");
            access(c) = v.get<T>();
          }};
}

template <typename Access>
Key int_key(std::string name, Access access) {
  return {name,
          [access](const RunConfig& c) { return json(access(const_cast<RunConfig&>(c))); },
          [access, name](RunConfig& c, const json& v) {
            if (!v.is_number_integer()) throw ConfigError("config key '" + name + "' must be an integer");
            access(c) = v.get<int>();
          }};
}

template <typename Access>
Key bool_key(std::string name, Access access) {
  return {name,
          [access](const RunConfig& c) { return json(access(const_cast<RunConfig&>(c))); },
          [access, name](RunConfig& c, const json& v) {
            if (!v.is_boolean()) throw ConfigError("config key '" + name + "' must be true or false");
            access(c) = v.get<bool>();
          }};
}

template <typename Access>
Key string_key(std::string name, Access access) {
  return {name,
          [access](const RunConfig& c) { return json(access(const_cast<RunConfig&>(c))); },
          [access, name](RunConfig& c, const json& v) {
            if (!v.is_string()) throw ConfigError("config key '" + name + "' must be a string");
            access(c) = v.get<std::string>();
          }};
}

#define QS_FIELD(expr) [](RunConfig& c) -> auto& { return expr; }

const std::vector<Key>& config_keys() {
  static const std::vector<Key> keys = {
      count_key<std::uint64_t>("seed", QS_FIELD(c.seed)),
      count_key<std::size_t>("episodes", QS_FIELD(c.episodes)),
      string_key("out", QS_FIELD(c.out)),
      string_key("circuit", QS_FIELD(c.circuit)),
      string_key("pipelines", QS_FIELD(c.pipelines)),
      string_key("agent", QS_FIELD(c.agent_path)),
      bool_key("json", QS_FIELD(c.json)),
      int_key("qubits", QS_FIELD(c.env.n_qubits)),
      count_key<std::size_t>("max-gates", QS_FIELD(c.env.max_gates)),
      count_key<std::size_t>("max-steps", QS_FIELD(c.env.max_steps)),
      {"noise", [](const RunConfig& c) { return json(c.env.noise ? "on" : "off"); },
       [](RunConfig& c, const json& v) {
         if (v.is_boolean()) {
           c.env.noise = v.get<bool>();
         } else if (v.is_string() && (v == "on" || v == "off")) {
           c.env.noise = v == "on";
         } else {
           throw ConfigError("config key 'noise' must be \"on\" or \"off\"");
         }
       }},
      real_key("w-qfi", QS_FIELD(c.env.weights.qfi)),
      real_key("w-depth", QS_FIELD(c.env.weights.depth)),
      real_key("w-entropy", QS_FIELD(c.env.weights.entropy)),
      real_key("w-gates", QS_FIELD(c.env.weights.gates)),
      real_key("w-error", QS_FIELD(c.env.weights.error)),
      real_key("threshold", QS_FIELD(c.env.initial_threshold)),
      real_key("threshold-min", QS_FIELD(c.env.threshold_min)),
      real_key("threshold-max", QS_FIELD(c.env.threshold_max)),
      real_key("threshold-scale", QS_FIELD(c.env.threshold_scale)),
      real_key("ema-decay", QS_FIELD(c.env.ema_decay)),
      count_key<std::size_t>("patience", QS_FIELD(c.env.patience)),
      count_key<std::size_t>("stability-window", QS_FIELD(c.env.stability_window)),
      real_key("entropy-tolerance", QS_FIELD(c.env.entropy_tolerance)),
      real_key("capacity-penalty", QS_FIELD(c.env.capacity_penalty)),
      real_key("p1", QS_FIELD(c.env.noise_model.p1)),
      real_key("p2", QS_FIELD(c.env.noise_model.p2)),
      real_key("p-meas", QS_FIELD(c.env.noise_model.p_meas)),
      real_key("t1", QS_FIELD(c.env.noise_model.t1)),
      real_key("t2", QS_FIELD(c.env.noise_model.t2)),
      real_key("t-1q", QS_FIELD(c.env.noise_model.t_1q)),
      real_key("t-2q", QS_FIELD(c.env.noise_model.t_2q)),
      real_key("gamma", QS_FIELD(c.agent.gamma)),
      real_key("epsilon-start", QS_FIELD(c.agent.epsilon_start)),
      real_key("epsilon-decay", QS_FIELD(c.agent.epsilon_decay)),
      real_key("epsilon-min", QS_FIELD(c.agent.epsilon_min)),
      count_key<std::size_t>("batch-size", QS_FIELD(c.agent.batch_size)),
      count_key<std::size_t>("min-batch", QS_FIELD(c.agent.min_batch)),
      count_key<std::size_t>("train-start", QS_FIELD(c.agent.train_start)),
      real_key("learning-rate", QS_FIELD(c.agent.learning_rate)),
      count_key<std::size_t>("target-sync", QS_FIELD(c.agent.target_sync)),
      real_key("adam-beta1", QS_FIELD(c.agent.adam_beta1)),
      real_key("adam-beta2", QS_FIELD(c.agent.adam_beta2)),
      real_key("adam-epsilon", QS_FIELD(c.agent.adam_epsilon)),
      real_key("plateau-factor", QS_FIELD(c.agent.plateau.factor)),
      count_key<std::size_t>("plateau-patience", QS_FIELD(c.agent.plateau.patience)),
      count_key<std::size_t>("plateau-window", QS_FIELD(c.agent.plateau.window)),
      real_key("min-lr", QS_FIELD(c.agent.plateau.min_lr)),
      count_key<std::size_t>("replay-capacity", QS_FIELD(c.agent.replay_capacity)),
      bool_key("single-dqn-target", QS_FIELD(c.agent.single_dqn_target)),
      count_key<std::size_t>("key-dim", QS_FIELD(c.agent.key_dim)),
      count_key<std::size_t>("hidden1", QS_FIELD(c.agent.hidden1)),
      count_key<std::size_t>("hidden2", QS_FIELD(c.agent.hidden2)),
  };
  return keys;
}

#undef QS_FIELD

// Seeds for the environment and the agent derive from the one run seed.
void apply_seed(RunConfig& c) {
  c.env.seed = c.seed;
  c.agent.seed = c.seed + 0x9E3779B97F4A7C15ULL;
}

void validate(const RunConfig& c) {
  try {
    c.env.noise_model.validate();
    c.agent.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  // ResourceLimitError passes through untouched.
  try {
    c.env.validate();
  } catch (const ResourceLimitError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

// ---------------------------------------------------------------------------
// Text helpers

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
  if (!os) throw std::runtime_error("failed writing " + path.string());
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw std::runtime_error("malformed number '" + s + "'");
  return v;
}

std::size_t parse_count(const std::string& s) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw std::runtime_error("malformed integer '" + s + "'");
  return v;
}

std::string join_numbers(const std::vector<double>& v, int decimals) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += format_fixed(v[i], decimals);
  }
  return s + "]";
}

constexpr const char* kEpisodesHeader =
    "episode,total_reward,steps,initial_qfi,initial_entropy,initial_depth,initial_gates,"
    "final_qfi,final_entropy,final_depth,final_gates,depth_reduction,gate_reduction,"
    "acc_error,epsilon,learning_rate,mean_loss";

// ---------------------------------------------------------------------------
// Commands

struct Shared {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> qubits;
  std::optional<std::size_t> max_gates;
  std::optional<std::size_t> episodes;
  std::optional<std::string> noise;
  bool json = false;
  std::optional<std::string> circuit;
  std::optional<std::string> pipelines;
  std::optional<std::string> agent;
  bool single_dqn_target = false;
};

void add_shared(CLI::App* app, Shared& s) {
  app->add_option("--config", s.config_path, "Flat JSON configuration file");
  app->add_option("--seed", s.seed, "Random seed");
  app->add_option("--out", s.out, "Output directory");
  app->add_option("--qubits", s.qubits, "Number of qubits");
  app->add_option("--max-gates", s.max_gates, "Gate capacity M");
  app->add_option("--episodes", s.episodes, "Training episodes");
  app->add_option("--noise", s.noise, "Noise model on or off")
      ->check(CLI::IsMember({"on", "off"}));
  app->add_flag("--json", s.json, "Machine-readable output");
}

RunConfig resolve(const Shared& s) {
  RunConfig cfg;
  if (!s.config_path.empty()) cfg = config_from_json(read_file(s.config_path), cfg);
  if (s.seed) cfg.seed = *s.seed;
  if (s.out) cfg.out = *s.out;
  if (s.qubits) cfg.env.n_qubits = *s.qubits;
  if (s.max_gates) cfg.env.max_gates = *s.max_gates;
  if (s.episodes) cfg.episodes = *s.episodes;
  if (s.noise) cfg.env.noise = *s.noise == "on";
  if (s.json) cfg.json = true;
  if (s.circuit) cfg.circuit = *s.circuit;
  if (s.pipelines) cfg.pipelines = *s.pipelines;
  if (s.agent) cfg.agent_path = *s.agent;
  if (s.single_dqn_target) cfg.agent.single_dqn_target = true;
  apply_seed(cfg);
  return cfg;
}

json metrics_json(const MetricsRecord& m) {
  return {{"qfi", m.qfi_norm},
          {"entropy", m.entropy_norm},
          {"depth", m.depth},
          {"gates", m.gates},
          {"layer_entropies", m.layer_entropies},
          {"accumulated_error", m.accumulated_error}};
}

int cmd_train(const RunConfig& cfg, std::ostream& out) {
  validate(cfg);
  if (cfg.episodes == 0) throw ConfigError("episodes must be positive");
  const std::filesystem::path dir(cfg.out);
  std::filesystem::create_directories(dir);
  const TrainingResult result = run_training(cfg.env, cfg.agent, cfg.episodes);
  write_file(dir / "episodes.csv", episodes_csv(result.episodes));
  write_file(dir / "pareto.csv", pareto_csv(result.episodes));
  const std::string echo = config_to_json(cfg);
  write_file(dir / "config.echo.json", echo);
  save_agent((dir / "agent.bin").string(), result.agent.main(), echo);

  const RunSummary s = summarize_run(result.episodes);
  if (cfg.json) {
    out << json{{"episodes", s.episodes},
                {"best_episode", s.best_episode},
                {"final_qfi", s.final_qfi},
                {"final_entropy", s.final_entropy},
                {"out", cfg.out}}
               .dump()
        << '\n';
  } else {
    out << "trained " << s.episodes << " episodes; best episode " << s.best_episode
        << " final qfi=" << format_fixed(s.final_qfi, 4)
        << " entropy=" << format_fixed(s.final_entropy, 4) << "; wrote " << cfg.out << '\n';
  }
  return kExitOk;
}

int cmd_report(const RunConfig& cfg, std::ostream& out) {
  const std::filesystem::path dir(cfg.out);
  const std::vector<EpisodeLog> log = parse_episodes_csv(read_file((dir / "episodes.csv").string()));
  if (log.empty()) throw std::runtime_error("episodes.csv has no rows");
  const RunSummary s = summarize_run(log);
  write_file(dir / "reward_curve.csv", reward_curve_csv(log));
  write_file(dir / "pareto.csv", pareto_csv(log));
  const std::string text = summary_text(s);
  write_file(dir / "summary.txt", text);
  if (cfg.json) {
    out << json{{"episodes", s.episodes},
                {"best_episode", s.best_episode},
                {"initial_qfi", s.initial_qfi},
                {"final_qfi", s.final_qfi},
                {"initial_entropy", s.initial_entropy},
                {"final_entropy", s.final_entropy},
                {"max_depth_reduction_pct", s.max_depth_reduction},
                {"avg_depth_reduction_pct", s.avg_depth_reduction},
                {"max_gate_reduction_pct", s.max_gate_reduction},
                {"avg_gate_reduction_pct", s.avg_gate_reduction}}
               .dump()
        << '\n';
  } else {
    out << text;
  }
  return kExitOk;
}

int cmd_metrics(const RunConfig& cfg, std::ostream& out) {
  if (cfg.circuit.empty()) throw ConfigError("metrics needs a circuit file");
  const Circuit c = load_circuit(cfg.circuit);
  cfg.env.noise_model.validate();
  const MetricsRecord m = compute_metrics(c, cfg.env.noise_model, cfg.env.limits);
  std::optional<double> noisy;
  if (cfg.env.noise) {
    if (c.n_qubits() < 2) throw CircuitError("entropy needs at least 2 qubits");
    noisy = entropy_noisy(run_noisy(c, cfg.env.noise_model, cfg.env.limits));
  }
  if (cfg.json) {
    json j = metrics_json(m);
    if (noisy) j["entropy_noisy"] = *noisy;
    out << j.dump() << '\n';
    return kExitOk;
  }
  out << "qfi=" << format_fixed(m.qfi_norm, 4) << " entropy=" << format_fixed(m.entropy_norm, 4)
      << " depth=" << m.depth << " gates=" << m.gates
      << " layer_entropies=" << join_numbers(m.layer_entropies, 4);
  if (noisy) out << " entropy_noisy=" << format_fixed(*noisy, 4);
  out << '\n';
  return kExitOk;
}

std::string metrics_row(const std::string& stage, const MetricsRecord& m, double dr, double gr) {
  return stage + ',' + format_number(m.qfi_norm) + ',' + format_number(m.entropy_norm) + ',' +
         std::to_string(m.depth) + ',' + std::to_string(m.gates) + ',' + format_number(dr) + ',' +
         format_number(gr) + '\n';
}

int cmd_optimize(const RunConfig& cfg, std::ostream& out) {
  if (cfg.circuit.empty()) throw ConfigError("optimize needs a circuit file");
  const Circuit c = load_circuit(cfg.circuit);

  std::shared_ptr<const QNetwork> net;
  RunConfig agent_cfg;
  std::vector<Pipeline> pipelines;
  for (const std::string& name : split(cfg.pipelines, ',')) {
    if (name == "identity") {
      pipelines.push_back(identity_pipeline());
    } else if (name == "simplify") {
      pipelines.push_back(simplify_pipeline());
    } else if (name == "agent" || name == "agent+simplify") {
      if (!net) {
        if (cfg.agent_path.empty())
          throw ConfigError("pipeline '" + name + "' needs --agent FILE");
        LoadedAgent loaded = load_agent(cfg.agent_path);
        agent_cfg = config_from_json(loaded.config_json);
        apply_seed(agent_cfg);
        if (agent_cfg.env.n_qubits != c.n_qubits())
          throw ConfigError("agent was trained for " + std::to_string(agent_cfg.env.n_qubits) +
                            " qubits, circuit has " + std::to_string(c.n_qubits()));
        if (c.size() > agent_cfg.env.resolved_max_gates())
          throw ConfigError("circuit has more gates than the agent's capacity");
        net = std::make_shared<const QNetwork>(std::move(loaded.net));
      }
      pipelines.push_back(name == "agent" ? agent_pipeline(net, agent_cfg.env)
                                          : agent_simplify_pipeline(net, agent_cfg.env));
    } else {
      throw ConfigError("unknown pipeline '" + name + "'");
    }
  }
  const ScoreWeights w{cfg.env.weights.qfi, cfg.env.weights.depth, cfg.env.weights.entropy,
                       cfg.env.weights.gates};
  const PortfolioResult res = portfolio_optimize(c, pipelines, w);
  const PipelineOutcome* chosen = nullptr;
  for (const auto& o : res.outcomes)
    if (o.name == res.chosen) chosen = &o;
  const MetricsRecord& before = res.input_metrics;
  const MetricsRecord& after = chosen->metrics;
  const double dr = depth_ratio(before.depth, after.depth).value;
  const double gr = gate_ratio(before.gates, after.gates).value;

  const std::filesystem::path dir(cfg.out);
  std::filesystem::create_directories(dir);
  save_circuit(res.circuit, (dir / "optimized.json").string());
  std::string csv = "stage,qfi,entropy,depth,gates,depth_ratio,gate_ratio\n";
  csv += metrics_row("input", before, 0.0, 0.0);
  csv += metrics_row("output", after, dr, gr);
  write_file(dir / "metrics.csv", csv);

  std::ostringstream text;
  text << "pipeline " << res.chosen << '\n';
  text << "stage   qfi       entropy   depth  gates  depth_ratio  gate_ratio\n";
  auto line = [&text](const char* stage, const MetricsRecord& m, double d, double g) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-7s %-9s %-9s %-6zu %-6zu %-12s %s\n", stage,
                  format_fixed(m.qfi_norm, 4).c_str(), format_fixed(m.entropy_norm, 4).c_str(),
                  m.depth, m.gates, format_fixed(d, 4).c_str(), format_fixed(g, 4).c_str());
    text << buf;
  };
  line("input", before, 0.0, 0.0);
  line("output", after, dr, gr);
  for (const auto& o : res.outcomes)
    text << "  candidate " << o.name << " score=" << format_number(o.score) << '\n';
  write_file(dir / "metrics.txt", text.str());

  if (cfg.json) {
    json cands = json::array();
    for (const auto& o : res.outcomes)
      cands.push_back({{"name", o.name}, {"score", o.score}, {"metrics", metrics_json(o.metrics)}});
    out << json{{"chosen", res.chosen},
                {"input", metrics_json(before)},
                {"output", metrics_json(after)},
                {"depth_ratio", dr},
                {"gate_ratio", gr},
                {"candidates", cands}}
               .dump()
        << '\n';
  } else {
    out << text.str();
  }
  return kExitOk;
}

}  // namespace

// ---------------------------------------------------------------------------
// Public helpers

std::string config_to_json(const RunConfig& cfg) {
  json j = json::object();
  for (const Key& k : config_keys()) j[k.name] = k.get(cfg);
  return j.dump(2) + '\n';
}

RunConfig config_from_json(const std::string& json_text, RunConfig base) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [name, value] : j.items()) {
    const auto& keys = config_keys();
    auto it = std::find_if(keys.begin(), keys.end(), [&](const Key& k) { return k.name == name; });
    if (it == keys.end()) throw ConfigError("unknown config key '" + name + "'");
    try {
      it->set(base, value);
    } catch (const json::exception& e) {
      throw ConfigError("config key '" + name + "': " + e.what());
    }
  }
  apply_seed(base);
  try {
    base.env.validate();
    base.agent.validate();
  } catch (const ResourceLimitError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return base;
}

std::string format_number(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 6);
  return std::string(buf, r.ptr);
}

std::string format_fixed(double v, int decimals) {
  if (v == 0.0) v = 0.0;  // no "-0.0000"
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, decimals);
  std::string s(buf, r.ptr);
  if (s.size() > 1 && s[0] == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

std::string episodes_csv(std::span<const EpisodeLog> log) {
  std::string s = std::string(kEpisodesHeader) + '\n';
  for (const EpisodeLog& e : log) {
    const std::vector<std::string> fields = {
        std::to_string(e.episode),         format_number(e.total_reward),
        std::to_string(e.steps),           format_number(e.initial.qfi_norm),
        format_number(e.initial.entropy_norm), std::to_string(e.initial.depth),
        std::to_string(e.initial.gates),   format_number(e.final.qfi_norm),
        format_number(e.final.entropy_norm), std::to_string(e.final.depth),
        std::to_string(e.final.gates),     format_number(e.depth_reduction),
        format_number(e.gate_reduction),   format_number(e.final.accumulated_error),
        format_number(e.epsilon),          format_number(e.learning_rate),
        format_number(e.mean_loss)};
    for (std::size_t i = 0; i < fields.size(); ++i) s += (i ? "," : "") + fields[i];
    s += '\n';
  }
  return s;
}

std::vector<EpisodeLog> parse_episodes_csv(const std::string& text) {
  std::vector<std::string> lines = split(text, '\n');
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty() || lines.front() != kEpisodesHeader)
    throw std::runtime_error("episodes.csv has an unexpected header");
  std::vector<EpisodeLog> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split(lines[i], ',');
    if (f.size() != 17) throw std::runtime_error("episodes.csv row " + std::to_string(i) + " is malformed");
    EpisodeLog e;
    e.episode = parse_count(f[0]);
    e.total_reward = parse_double(f[1]);
    e.steps = parse_count(f[2]);
    e.initial.qfi_norm = parse_double(f[3]);
    e.initial.entropy_norm = parse_double(f[4]);
    e.initial.depth = parse_count(f[5]);
    e.initial.gates = parse_count(f[6]);
    e.final.qfi_norm = parse_double(f[7]);
    e.final.entropy_norm = parse_double(f[8]);
    e.final.depth = parse_count(f[9]);
    e.final.gates = parse_count(f[10]);
    e.depth_reduction = parse_double(f[11]);
    e.gate_reduction = parse_double(f[12]);
    e.final.accumulated_error = parse_double(f[13]);
    e.epsilon = parse_double(f[14]);
    e.learning_rate = parse_double(f[15]);
    e.mean_loss = parse_double(f[16]);
    out.push_back(std::move(e));
  }
  return out;
}

std::string pareto_csv(std::span<const EpisodeLog> log) {
  std::string s = "episode,qfi,entropy,depth_reduction,gate_reduction\n";
  for (const EpisodeLog& e : log)
    s += std::to_string(e.episode) + ',' + format_number(e.final.qfi_norm) + ',' +
         format_number(e.final.entropy_norm) + ',' + format_number(e.depth_reduction) + ',' +
         format_number(e.gate_reduction) + '\n';
  return s;
}

std::string reward_curve_csv(std::span<const EpisodeLog> log) {
  std::vector<double> rewards;
  for (const EpisodeLog& e : log) rewards.push_back(e.total_reward);
  const std::vector<double> avg = moving_average(rewards, 10);
  std::string s = "episode,total_reward,moving_avg_10\n";
  for (std::size_t i = 0; i < log.size(); ++i)
    s += std::to_string(log[i].episode) + ',' + format_number(rewards[i]) + ',' +
         format_number(avg[i]) + '\n';
  return s;
}

std::string summary_text(const RunSummary& s) {
  std::ostringstream os;
  os << "episodes " << s.episodes << '\n';
  os << "initial/final values come from episode " << s.best_episode
     << " (highest total reward); initial = reset circuit, final = episode end\n";
  os << "reductions are over all episodes, in percent of the reset circuit\n\n";
  os << "initial_qfi,final_qfi,initial_entropy,final_entropy,max_depth_reduction_pct,"
        "avg_depth_reduction_pct,max_gate_reduction_pct,avg_gate_reduction_pct\n";
  os << format_number(s.initial_qfi) << ',' << format_number(s.final_qfi) << ','
     << format_number(s.initial_entropy) << ',' << format_number(s.final_entropy) << ','
     << format_number(s.max_depth_reduction) << ',' << format_number(s.avg_depth_reduction) << ','
     << format_number(s.max_gate_reduction) << ',' << format_number(s.avg_gate_reduction) << '\n';
  return os.str();
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"qsense: entanglement-aware quantum sensing circuit optimizer"};
  app.require_subcommand(1);
  Shared shared;

  CLI::App* train = app.add_subcommand("train", "Train the agent");
  add_shared(train, shared);
  train->add_flag("--single-dqn-target", shared.single_dqn_target,
                  "Use the max over the target network instead of the decoupled target");

  CLI::App* optimize = app.add_subcommand("optimize", "Optimize one circuit with a pipeline portfolio");
  add_shared(optimize, shared);
  optimize->add_option("--circuit", shared.circuit, "Circuit JSON file");
  optimize->add_option("--pipelines", shared.pipelines,
                       "Comma-separated: identity, simplify, agent, agent+simplify");
  optimize->add_option("--agent", shared.agent, "Trained agent file");

  CLI::App* metrics = app.add_subcommand("metrics", "Print the metrics of a circuit");
  add_shared(metrics, shared);
  metrics->add_option("--circuit", shared.circuit, "Circuit JSON file");
  std::string positional;
  metrics->add_option("circuit_file", positional, "Circuit JSON file");

  CLI::App* report = app.add_subcommand("report", "Write plot data and a summary for a run");
  add_shared(report, shared);
  std::string run_dir;
  report->add_option("run_dir", run_dir, "Run directory written by train");

  std::vector<std::string> argv_store{"qsense"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (!positional.empty()) shared.circuit = positional;
    if (!run_dir.empty()) shared.out = run_dir;
    const RunConfig cfg = resolve(shared);
    if (train->parsed()) return cmd_train(cfg, out);
    if (optimize->parsed()) return cmd_optimize(cfg, out);
    if (metrics->parsed()) return cmd_metrics(cfg, out);
    return cmd_report(cfg, out);
  } catch (const ResourceLimitError& e) {
    err << "error: " << e.what() << '\n';
    return kExitResource;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

}  // namespace qsense
