#include "mqf/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "mqf/errors.hpp"

namespace mqf {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, res.ptr);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::size_t parse_count(const std::string& key, std::string_view text) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size() || text.empty())
    throw ConfigError(key, "expected a non-negative integer, got '" + std::string(text) + "'");
  return static_cast<std::size_t>(v);
}

double parse_real(const std::string& key, std::string_view text) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size() || text.empty() || !std::isfinite(v))
    throw ConfigError(key, "expected a finite number, got '" + std::string(text) + "'");
  return v;
}

bool parse_flag(const std::string& key, std::string_view text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError(key, "expected true or false, got '" + std::string(text) + "'");
}

template <typename Parse>
auto parse_enum(const std::string& key, std::string_view text, Parse parse) {
  try {
    return parse(text);
  } catch (const DomainError& e) {
    throw ConfigError(key, e.what());
  }
}

struct Field {
  std::string key;  // section.name
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename Access>
Field count_field(std::string key, Access access) {
  return {key, [access, key](RunConfig& c, std::string_view v) { access(c) = parse_count(key, v); },
          [access](const RunConfig& c) { return std::to_string(access(c)); }};
}

template <typename Access>
Field real_field(std::string key, Access access) {
  return {key, [access, key](RunConfig& c, std::string_view v) { access(c) = parse_real(key, v); },
          [access](const RunConfig& c) { return format_double(access(c)); }};
}

template <typename Access, typename Parse>
Field enum_field(std::string key, Access access, Parse parse) {
  return {key, [access, key, parse](RunConfig& c, std::string_view v) { access(c) = parse_enum(key, v, parse); },
          [access](const RunConfig& c) { return std::string(to_string(access(c))); }};
}

#define MQF_ACCESS(expr) [](auto& c) -> auto& { return c.expr; }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back({"run.scenario", [](RunConfig& c, std::string_view v) { c.scenario = std::string(v); },
                 [](const RunConfig& c) { return c.scenario; }});
    f.push_back(enum_field("run.learner", MQF_ACCESS(learner.kind), parse_learner_kind));
    f.push_back({"run.seed",
                 [](RunConfig& c, std::string_view v) { c.seed = parse_count("run.seed", v); },
                 [](const RunConfig& c) { return std::to_string(c.seed); }});
    f.push_back(count_field("run.max_episodes", MQF_ACCESS(max_episodes)));
    f.push_back({"run.log_wall_time",
                 [](RunConfig& c, std::string_view v) { c.log_wall_time = parse_flag("run.log_wall_time", v); },
                 [](const RunConfig& c) { return std::string(c.log_wall_time ? "true" : "false"); }});

    f.push_back(real_field("learner.gamma", MQF_ACCESS(learner.gamma)));
    f.push_back(real_field("learner.tau", MQF_ACCESS(learner.tau)));
    f.push_back(real_field("learner.learning_rate", MQF_ACCESS(learner.learning_rate)));
    f.push_back(count_field("learner.batch_size", MQF_ACCESS(learner.batch_size)));
    f.push_back(count_field("learner.buffer_size", MQF_ACCESS(learner.buffer_size)));
    f.push_back(count_field("learner.sample_size", MQF_ACCESS(learner.sample_size)));
    f.push_back(count_field("learner.rank", MQF_ACCESS(learner.rank)));
    f.push_back(count_field("learner.nb_layers", MQF_ACCESS(nb_layers)));
    f.push_back(count_field("learner.nb_neurons", MQF_ACCESS(nb_neurons)));
    f.push_back(enum_field("learner.activation", MQF_ACCESS(learner.activation), parse_activation));
    f.push_back(enum_field("learner.mixer", MQF_ACCESS(learner.mixer), parse_mixer_kind));
    f.push_back(count_field("learner.mixer_hidden_dim", MQF_ACCESS(learner.mixer_hidden_dim)));
    f.push_back(real_field("learner.grad_clip_norm", MQF_ACCESS(learner.grad_clip_norm)));
    f.push_back(count_field("learner.steps_per_update", MQF_ACCESS(steps_per_update)));
    f.push_back(count_field("learner.learning_starts_steps", MQF_ACCESS(learning_starts_steps)));

    f.push_back(enum_field("exploration.kind", MQF_ACCESS(exploration.kind), parse_exploration_kind));
    f.push_back(real_field("exploration.gaussian_sigma", MQF_ACCESS(exploration.gaussian_sigma)));
    f.push_back(real_field("exploration.epsilon_start", MQF_ACCESS(exploration.epsilon_start)));
    f.push_back(real_field("exploration.epsilon_end", MQF_ACCESS(exploration.epsilon_end)));
    f.push_back(count_field("exploration.epsilon_decay_steps", MQF_ACCESS(exploration.epsilon_decay_steps)));

    f.push_back(count_field("eval.interval_steps", MQF_ACCESS(eval_interval_steps)));
    f.push_back(count_field("eval.episodes", MQF_ACCESS(eval_episodes)));

    f.push_back(real_field("env.dt", MQF_ACCESS(env.dt)));
    f.push_back(real_field("env.damping", MQF_ACCESS(env.damping)));
    f.push_back(real_field("env.agent_accel", MQF_ACCESS(env.agent_accel)));
    f.push_back(real_field("env.prey_accel", MQF_ACCESS(env.prey_accel)));
    f.push_back(real_field("env.agent_max_speed", MQF_ACCESS(env.agent_max_speed)));
    f.push_back(real_field("env.prey_max_speed", MQF_ACCESS(env.prey_max_speed)));
    f.push_back(real_field("env.spawn_half_width", MQF_ACCESS(env.spawn_half_width)));
    f.push_back(real_field("env.arena_half_width", MQF_ACCESS(env.arena_half_width)));
    f.push_back(real_field("env.agent_radius", MQF_ACCESS(env.agent_radius)));
    f.push_back(real_field("env.prey_radius", MQF_ACCESS(env.prey_radius)));
    f.push_back(real_field("env.landmark_radius", MQF_ACCESS(env.landmark_radius)));
    f.push_back(real_field("env.obstacle_radius", MQF_ACCESS(env.obstacle_radius)));
    f.push_back(real_field("env.capture_threshold", MQF_ACCESS(env.capture_threshold)));
    f.push_back(real_field("env.reward_scale", MQF_ACCESS(env.reward_scale)));
    f.push_back(real_field("env.distance_penalty", MQF_ACCESS(env.distance_penalty)));
    f.push_back(real_field("env.capture_bonus", MQF_ACCESS(env.capture_bonus)));
    f.push_back(real_field("env.fov_half_angle_deg", MQF_ACCESS(env.fov_half_angle_deg)));
    f.push_back(real_field("env.fov_range", MQF_ACCESS(env.fov_range)));
    f.push_back(count_field("env.prey_directions", MQF_ACCESS(env.prey_directions)));
    f.push_back(count_field("env.episode_length", MQF_ACCESS(env.episode_length)));
    return f;
  }();
  return table;
}

#undef MQF_ACCESS

const Field& find_field(std::string_view key) {
  const auto& table = fields();
  if (key.find('.') != std::string_view::npos) {
    for (const auto& f : table)
      if (f.key == key) return f;
    throw ConfigError(std::string(key), "unknown key");
  }
  const Field* match = nullptr;
  for (const auto& f : table) {
    const auto dot = f.key.find('.');
    if (dot == std::string::npos || f.key.compare(dot + 1, std::string::npos, key) != 0) continue;
    if (match) throw ConfigError(std::string(key), "ambiguous key; qualify it with its section");
    match = &f;
  }
  if (!match) throw ConfigError(std::string(key), "unknown key");
  return *match;
}

void assign(RunConfig& config, std::string_view key, std::string_view value) {
  find_field(key).set(config, trim(value));
}

}  // namespace

std::string_view to_string(ExplorationPolicy::Kind kind) {
  switch (kind) {
    case ExplorationPolicy::Kind::gaussian: return "gaussian";
    case ExplorationPolicy::Kind::epsilon_greedy: return "epsilon_greedy";
    case ExplorationPolicy::Kind::none: return "none";
  }
  return "?";
}

ExplorationPolicy::Kind parse_exploration_kind(std::string_view name) {
  if (name == "gaussian") return ExplorationPolicy::Kind::gaussian;
  if (name == "epsilon_greedy" || name == "e-greedy") return ExplorationPolicy::Kind::epsilon_greedy;
  if (name == "none") return ExplorationPolicy::Kind::none;
  throw DomainError("unknown exploration kind '" + std::string(name) + "'");
}

RunConfig parse_config(std::string_view text) {
  RunConfig config;
  std::string section;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("", "line " + std::to_string(line_no) + ": malformed section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("", "line " + std::to_string(line_no) + ": expected key = value");
    const std::string_view name = trim(line.substr(0, eq));
    std::string key(name);
    if (!section.empty() && name.find('.') == std::string_view::npos) key = section + "." + key;
    assign(config, key, line.substr(eq + 1));
  }
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void apply_override(RunConfig& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw ConfigError("", "override '" + std::string(assignment) + "' is not key=value");
  assign(config, trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

void validate(const RunConfig& c) {
  auto require = [](bool ok, const char* key, const char* what) {
    if (!ok) throw ConfigError(key, what);
  };
  try {
    (void)make_scenario(c.scenario, c.env);
  } catch (const DomainError& e) {
    throw ConfigError("run.scenario", e.what());
  }
  require(c.max_episodes > 0, "run.max_episodes", "must be positive");
  require(c.learner.gamma >= 0.0 && c.learner.gamma < 1.0, "learner.gamma", "must lie in [0, 1)");
  require(c.learner.tau > 0.0 && c.learner.tau <= 1.0, "learner.tau", "must lie in (0, 1]");
  require(c.learner.learning_rate > 0.0, "learner.learning_rate", "must be positive");
  require(c.learner.batch_size > 0, "learner.batch_size", "must be positive");
  require(c.learner.buffer_size >= c.learner.batch_size, "learner.buffer_size", "must be at least batch_size");
  require(c.learner.sample_size > 0, "learner.sample_size", "must be positive");
  require(c.nb_layers > 0, "learner.nb_layers", "must be positive");
  require(c.nb_neurons > 0, "learner.nb_neurons", "must be positive");
  require(c.learner.mixer_hidden_dim > 0, "learner.mixer_hidden_dim", "must be positive");
  require(c.learner.grad_clip_norm >= 0.0, "learner.grad_clip_norm", "must be non-negative");
  require(c.steps_per_update > 0, "learner.steps_per_update", "must be positive");
  require(c.exploration.gaussian_sigma >= 0.0, "exploration.gaussian_sigma", "must be non-negative");
  require(c.exploration.epsilon_end >= 0.0 && c.exploration.epsilon_end <= c.exploration.epsilon_start,
          "exploration.epsilon_end", "must lie in [0, epsilon_start]");
  require(c.exploration.epsilon_start <= 1.0, "exploration.epsilon_start", "must be at most 1");
  require(c.eval_interval_steps > 0, "eval.interval_steps", "must be positive");
  require(c.eval_episodes > 0, "eval.episodes", "must be positive");
  require(c.env.dt > 0.0, "env.dt", "must be positive");
  require(c.env.damping >= 0.0 && c.env.damping < 1.0, "env.damping", "must lie in [0, 1)");
  require(c.env.episode_length > 0, "env.episode_length", "must be positive");
  require(c.env.prey_directions > 0, "env.prey_directions", "must be positive");
  require(c.env.reward_scale > 0.0, "env.reward_scale", "must be positive");
}

void resolve(RunConfig& c) {
  c.learner.hidden.assign(c.nb_layers > 0 ? c.nb_layers - 1 : 0, c.nb_neurons);
  if (c.exploration.epsilon_decay_steps == 0) c.exploration.epsilon_decay_steps = std::max<std::size_t>(1, c.total_env_steps() / 2);
  validate(c);
}

ConfigEcho echo(const RunConfig& config) {
  ConfigEcho out;
  for (const auto& f : fields()) out.emplace_back(f.key, f.get(config));
  return out;
}

std::string echo_text(const RunConfig& config) {
  std::string out;
  std::string section;
  for (const auto& [key, value] : echo(config)) {
    const auto dot = key.find('.');
    const std::string sec = key.substr(0, dot);
    if (sec != section) {
      if (!section.empty()) out += '\n';
      out += "[" + sec + "]\n";
      section = sec;
    }
    out += key.substr(dot + 1) + " = " + value + "\n";
  }
  return out;
}

RunConfig from_echo(const ConfigEcho& pairs) {
  RunConfig config;
  for (const auto& [key, value] : pairs) assign(config, key, value);
  resolve(config);
  return config;
}

}  // namespace mqf
