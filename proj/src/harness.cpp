#include "mqf/harness.hpp"

#include <omp.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "mqf/errors.hpp"

namespace mqf {

namespace fs = std::filesystem;

namespace {

std::string num(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string opt(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

struct EpisodeRunner {
  Scenario& scenario;
  Rng env_rng;

  template <typename Policy>
  EpisodeRecord run(Policy&& policy) {
    JointVector obs = scenario.reset(env_rng);
    EpisodeRecord rec;
    for (;;) {
      const JointVector actions = policy(obs);
      StepResult r = scenario.step(actions);
      rec.team_reward += std::accumulate(r.rewards.begin(), r.rewards.end(), 0.0);
      obs = std::move(r.observations);
      if (r.done) break;
    }
    const EpisodeMetrics m = success(scenario.episode_info(), scenario.family());
    rec.success = m.success;
    rec.captures = m.captures;
    rec.captures3 = m.captures3;
    return rec;
  }
};

EvalSummary summarize(ScenarioFamily family, std::vector<EpisodeRecord> records) {
  EvalSummary s;
  s.family = family;
  s.episodes = records.size();
  std::vector<double> reward;
  std::vector<double> succ;
  double captures = 0.0;
  double captures3 = 0.0;
  for (const auto& r : records) {
    reward.push_back(r.team_reward);
    succ.push_back(r.success ? 1.0 : 0.0);
    captures += static_cast<double>(r.captures);
    captures3 += static_cast<double>(r.captures3);
  }
  std::tie(s.mean_team_reward, s.team_reward_ci95) = mean_ci95(reward);
  std::tie(s.success_rate, s.success_ci95) = mean_ci95(succ);
  s.mean_captures = captures / static_cast<double>(records.size());
  s.mean_captures3 = captures3 / static_cast<double>(records.size());
  s.per_episode = std::move(records);
  return s;
}

void require_episodes(std::size_t episodes) {
  if (episodes == 0) throw DomainError("evaluate: episodes must be positive");
}

MetricsRow metrics_row(std::size_t episode, std::size_t env_steps, const EvalSummary& s,
                       const std::optional<double>& loss_ema, std::optional<double> wall) {
  MetricsRow row;
  row.episode = episode;
  row.env_steps = env_steps;
  row.mean_test_team_reward = s.mean_team_reward;
  if (s.family == ScenarioFamily::landmark) {
    row.success_rate = s.success_rate;
  } else {
    row.captures = s.mean_captures;
    row.captures3 = s.mean_captures3;
  }
  row.loss_ema = loss_ema;
  row.wall_time_s = wall;
  return row;
}

std::string label(const RunConfig& c) {
  std::string name(to_string(c.learner.kind));
  std::transform(name.begin(), name.end(), name.begin(), [](unsigned char ch) { return std::toupper(ch); });
  if (c.learner.kind == LearnerKind::mqf && c.learner.mixer != MixerKind::sum)
    name += "-" + std::string(to_string(c.learner.mixer));
  return name;
}

}  // namespace

std::pair<double, double> mean_ci95(const std::vector<double>& values) {
  if (values.empty()) return {0.0, 0.0};
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  return {mean, 1.96 * sd / std::sqrt(n)};
}

EvalSummary evaluate(const Learner& learner, Scenario& scenario, std::size_t episodes, std::uint64_t seed) {
  require_episodes(episodes);
  if (learner.agent_dims() != scenario.agent_dims())
    throw LoadError("evaluate: learner dimensions do not match scenario " + scenario.name());
  EpisodeRunner runner{scenario, Rng(split_seed(seed, 0))};
  Rng sampling(split_seed(seed, 1));
  Rng noise(split_seed(seed, 2));
  const ExplorationPolicy greedy{ExplorationPolicy::Kind::none};
  std::vector<EpisodeRecord> records;
  for (std::size_t e = 0; e < episodes; ++e) {
    records.push_back(runner.run([&](const JointVector& obs) {
      return learner.act(obs, 0, greedy, sampling, noise, ActMode::greedy);
    }));
  }
  if (noise.draws() != 0) throw std::logic_error("evaluate: exploration noise was drawn during greedy evaluation");
  return summarize(scenario.family(), std::move(records));
}

EvalSummary evaluate_checkpoint(const fs::path& checkpoint, const std::string& scenario_name, std::size_t episodes,
                                std::uint64_t seed, const EnvParams& env) {
  require_episodes(episodes);
  LoadedCheckpoint ck = load_checkpoint(checkpoint);
  auto scenario = make_scenario(scenario_name, env);
  if (ck.learner->agent_dims() != scenario->agent_dims())
    throw LoadError("checkpoint agent dimensions do not match scenario " + scenario_name);
  return evaluate(*ck.learner, *scenario, episodes, seed);
}

EvalSummary evaluate_random(Scenario& scenario, std::size_t episodes, std::uint64_t seed) {
  require_episodes(episodes);
  EpisodeRunner runner{scenario, Rng(split_seed(seed, 0))};
  Rng actions_rng(split_seed(seed, 1));
  std::vector<EpisodeRecord> records;
  for (std::size_t e = 0; e < episodes; ++e) {
    records.push_back(runner.run([&](const JointVector& obs) {
      JointVector actions(obs.size(), std::vector<double>(scenario.action_dim()));
      for (auto& a : actions)
        for (double& v : a) v = actions_rng.uniform(-1.0, 1.0);
      return actions;
    }));
  }
  return summarize(scenario.family(), std::move(records));
}

std::string format_metrics_row(const MetricsRow& r) {
  return std::to_string(r.episode) + "," + std::to_string(r.env_steps) + "," + num(r.mean_test_team_reward) + "," +
         opt(r.success_rate) + "," + opt(r.captures) + "," + opt(r.captures3) + "," + opt(r.loss_ema) + "," +
         opt(r.wall_time_s);
}

std::vector<MetricsRow> read_metrics(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != kMetricsHeader) throw std::runtime_error(path.string() + ": unexpected metrics header");
  auto parse_opt = [](const std::string& s) -> std::optional<double> {
    if (s.empty()) return std::nullopt;
    return std::stod(s);
  };
  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    cells.resize(8);
    MetricsRow r;
    r.episode = std::stoul(cells[0]);
    r.env_steps = std::stoul(cells[1]);
    r.mean_test_team_reward = std::stod(cells[2]);
    r.success_rate = parse_opt(cells[3]);
    r.captures = parse_opt(cells[4]);
    r.captures3 = parse_opt(cells[5]);
    r.loss_ema = parse_opt(cells[6]);
    r.wall_time_s = parse_opt(cells[7]);
    rows.push_back(r);
  }
  return rows;
}

TrainResult train(const RunConfig& config_in, const fs::path& out_dir, std::ostream* log) {
  RunConfig config = config_in;
  resolve(config);
  fs::create_directories(out_dir);
  {
    std::ofstream cfg(out_dir / "config.cfg");
    cfg << echo_text(config);
  }

  RngStreams streams = seed_everything(config.seed);
  auto scenario = make_scenario(config.scenario, config.env);
  auto eval_scenario = make_scenario(config.scenario, config.env);

  TrainResult result;
  result.learner = make_learner(config.learner, scenario->agent_dims(), streams.init);
  Learner& learner = *result.learner;
  result.checkpoint = out_dir / "checkpoint.json";

  std::ofstream metrics(out_dir / "metrics.csv", std::ios::trunc);
  std::ofstream timing(out_dir / "timing.csv", std::ios::trunc);
  metrics << kMetricsHeader << '\n';
  timing << "episode,env_steps,wall_time_s\n";

  const auto start = std::chrono::steady_clock::now();
  std::optional<double> loss_ema;
  std::size_t step = 0;
  std::size_t episode = 0;

  CheckpointMeta meta;
  meta.scenario = config.scenario;
  meta.seed = config.seed;
  meta.config = echo(config);

  auto record_evaluation = [&] {
    const EvalSummary s = evaluate(learner, *eval_scenario, config.eval_episodes, streams.eval.next_u64());
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const MetricsRow row =
        metrics_row(episode, step, s, loss_ema, config.log_wall_time ? std::optional<double>(wall) : std::nullopt);
    metrics << format_metrics_row(row) << '\n' << std::flush;
    timing << episode << ',' << step << ',' << num(wall) << '\n' << std::flush;
    result.metrics.push_back(row);
    meta.total_steps = step;
    meta.episodes = episode;
    save_checkpoint(result.checkpoint, learner, meta);
    if (log) {
      *log << config.scenario << " seed " << config.seed << " episode " << episode << " steps " << step
           << " reward " << num(s.mean_team_reward);
      if (s.family == ScenarioFamily::landmark) *log << " success " << num(s.success_rate);
      else *log << " captures " << num(s.mean_captures);
      *log << " loss_ema " << (loss_ema ? num(*loss_ema) : "-") << " t " << num(std::round(wall * 10) / 10) << "s\n";
    }
  };

  for (episode = 1; episode <= config.max_episodes; ++episode) {
    JointVector obs = scenario->reset(streams.env);
    for (;;) {
      JointVector actions = learner.act(obs, step, config.exploration, streams.action_sampling, streams.exploration,
                                        ActMode::explore);
      StepResult r = scenario->step(actions);
      learner.observe({obs, std::move(actions), r.rewards, r.observations, r.done});
      ++step;
      if (step >= config.learning_starts_steps && (step - config.learning_starts_steps) % config.steps_per_update == 0) {
        if (const auto loss = learner.train_step(streams.buffer, streams.action_sampling)) {
          learner.update_targets();
          loss_ema = loss_ema ? 0.99 * *loss_ema + 0.01 * *loss : *loss;
        }
      }
      if (step % config.eval_interval_steps == 0) record_evaluation();
      obs = std::move(r.observations);
      if (r.done) break;
    }
  }
  episode = config.max_episodes;
  if (result.metrics.empty() || result.metrics.back().env_steps != step) record_evaluation();

  result.env_steps = step;
  result.gradient_updates = learner.gradient_updates();
  return result;
}

std::vector<fs::path> train_seeds(const RunConfig& config, const std::vector<std::uint64_t>& seeds,
                                  const fs::path& out_root, int jobs, std::ostream* log) {
  std::vector<fs::path> dirs(seeds.size());
  std::vector<std::string> errors(seeds.size());
  for (std::size_t i = 0; i < seeds.size(); ++i) dirs[i] = out_root / ("seed-" + std::to_string(seeds[i]));
  const int n = static_cast<int>(seeds.size());
#pragma omp parallel for num_threads(std::max(1, jobs)) schedule(dynamic, 1)
  for (int i = 0; i < n; ++i) {
    try {
      RunConfig c = config;
      c.seed = seeds[static_cast<std::size_t>(i)];
      std::ostringstream run_log;
      train(c, dirs[static_cast<std::size_t>(i)], log ? &run_log : nullptr);
      if (log) {
#pragma omp critical(mqf_train_seeds_log)
        *log << run_log.str() << std::flush;
      }
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(i)] = e.what();
    }
  }
  for (std::size_t i = 0; i < seeds.size(); ++i)
    if (!errors[i].empty()) throw std::runtime_error("seed " + std::to_string(seeds[i]) + ": " + errors[i]);
  return dirs;
}

std::vector<AggregateRow> aggregate(const std::vector<fs::path>& run_dirs) {
  struct Group {
    std::string scenario;
    std::vector<double> reward, success, captures, captures3;
  };
  std::map<std::string, Group> groups;
  std::vector<std::string> order;
  for (const auto& dir : run_dirs) {
    const RunConfig cfg = load_config(dir / "config.cfg");
    const auto rows = read_metrics(dir / "metrics.csv");
    if (rows.empty()) throw std::runtime_error(dir.string() + ": no metrics rows");
    const MetricsRow& last = rows.back();
    const std::string key = label(cfg) + "@" + cfg.scenario;
    if (!groups.count(key)) order.push_back(key);
    Group& g = groups[key];
    g.scenario = cfg.scenario;
    g.reward.push_back(last.mean_test_team_reward);
    if (last.success_rate) g.success.push_back(*last.success_rate);
    if (last.captures) g.captures.push_back(*last.captures);
    if (last.captures3) g.captures3.push_back(*last.captures3);
  }
  std::vector<AggregateRow> out;
  for (const auto& key : order) {
    const Group& g = groups[key];
    AggregateRow row;
    row.algorithm = key.substr(0, key.find('@'));
    row.scenario = g.scenario;
    row.runs = g.reward.size();
    std::tie(row.team_reward_mean, row.team_reward_ci95) = mean_ci95(g.reward);
    auto fill = [](const std::vector<double>& v, std::optional<double>& m, std::optional<double>& ci) {
      if (v.empty()) return;
      const auto [a, b] = mean_ci95(v);
      m = a;
      ci = b;
    };
    fill(g.success, row.success_mean, row.success_ci95);
    fill(g.captures, row.captures_mean, row.captures_ci95);
    fill(g.captures3, row.captures3_mean, row.captures3_ci95);
    out.push_back(row);
  }
  return out;
}

std::string format_aggregate(const std::vector<AggregateRow>& rows) {
  std::ostringstream out;
  out << "algorithm,scenario,runs,team_reward,team_reward_ci95,success_rate,success_rate_ci95,captures,captures_ci95,"
         "captures3,captures3_ci95\n";
  for (const auto& r : rows) {
    out << r.algorithm << ',' << r.scenario << ',' << r.runs << ',' << num(r.team_reward_mean) << ','
        << num(r.team_reward_ci95) << ',' << opt(r.success_mean) << ',' << opt(r.success_ci95) << ','
        << opt(r.captures_mean) << ',' << opt(r.captures_ci95) << ',' << opt(r.captures3_mean) << ','
        << opt(r.captures3_ci95) << '\n';
  }
  return out.str();
}

}  // namespace mqf
