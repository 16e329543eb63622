// mqf: train, evaluate and aggregate Q-functional learners.
//
// Exit status: 0 success, 1 usage or configuration error, 2 runtime failure.

#include <CLI11.hpp>

#include <filesystem>
#include <optional>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "mqf/checkpoint.hpp"
#include "mqf/config.hpp"
#include "mqf/errors.hpp"
#include "mqf/harness.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kUsage = 1;
constexpr int kRuntime = 2;

struct TrainArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::vector<std::uint64_t> seeds;
  int jobs = 1;
  std::string out;
  std::vector<std::string> overrides;
  bool quiet = false;
};

struct EvalArgs {
  std::string checkpoint;
  std::string scenario;
  std::size_t episodes = 100;
  std::uint64_t seed = 0;
  std::string per_episode;
};

struct AggregateArgs {
  std::vector<std::string> runs;
  std::string out;
};

int run_train(const TrainArgs& args) {
  mqf::RunConfig config = mqf::load_config(args.config);
  for (const auto& o : args.overrides) mqf::apply_override(config, o);
  if (args.seed) config.seed = *args.seed;
  mqf::resolve(config);

  std::ostream* log = args.quiet ? nullptr : &std::cerr;
  if (!args.seeds.empty()) {
    const fs::path root = args.out.empty() ? fs::path("runs") / (config.scenario + "-" +
                                                                 std::string(mqf::to_string(config.learner.kind)))
                                           : fs::path(args.out);
    const auto dirs = mqf::train_seeds(config, args.seeds, root, args.jobs, log);
    std::vector<fs::path> paths(dirs.begin(), dirs.end());
    std::cout << mqf::format_aggregate(mqf::aggregate(paths));
    return 0;
  }
  const fs::path out = args.out.empty() ? fs::path("runs") / (config.scenario + "-" +
                                                              std::string(mqf::to_string(config.learner.kind)) +
                                                              "-seed" + std::to_string(config.seed))
                                        : fs::path(args.out);
  const mqf::TrainResult result = mqf::train(config, out, log);
  const auto& last = result.metrics.back();
  std::cout << "steps " << result.env_steps << ", gradient updates " << result.gradient_updates
            << ", final mean test team reward " << last.mean_test_team_reward;
  if (last.success_rate) std::cout << ", success rate " << *last.success_rate;
  if (last.captures) std::cout << ", captures " << *last.captures << ", 3-agent captures " << *last.captures3;
  std::cout << "\nwrote " << out.string() << '\n';
  return 0;
}

int run_eval(const EvalArgs& args) {
  mqf::EnvParams env;
  {
    const mqf::LoadedCheckpoint ck = mqf::load_checkpoint(args.checkpoint);
    if (!ck.meta.config.empty()) env = mqf::from_echo(ck.meta.config).env;
  }
  const mqf::EvalSummary s = mqf::evaluate_checkpoint(args.checkpoint, args.scenario, args.episodes, args.seed, env);
  std::cout << "scenario " << args.scenario << ", episodes " << s.episodes << '\n';
  std::cout << "team_reward " << s.mean_team_reward << " +- " << s.team_reward_ci95 << '\n';
  if (s.family == mqf::ScenarioFamily::landmark) {
    std::cout << "success_rate " << s.success_rate << " +- " << s.success_ci95 << '\n';
  } else {
    std::cout << "captures " << s.mean_captures << "\ncaptures3 " << s.mean_captures3 << '\n';
  }
  if (!args.per_episode.empty()) {
    std::ofstream out(args.per_episode);
    out << "episode,team_reward,success,captures,captures3\n";
    for (std::size_t e = 0; e < s.per_episode.size(); ++e) {
      const auto& r = s.per_episode[e];
      out << e << ',' << r.team_reward << ',' << (r.success ? 1 : 0) << ',' << r.captures << ',' << r.captures3
          << '\n';
    }
  }
  return 0;
}

int run_aggregate(const AggregateArgs& args) {
  std::vector<fs::path> dirs(args.runs.begin(), args.runs.end());
  const std::string table = mqf::format_aggregate(mqf::aggregate(dirs));
  if (args.out.empty()) {
    std::cout << table;
  } else {
    std::ofstream(args.out) << table;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mixed Q-functionals for cooperative continuous control"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train one run (or several seeds) from a config file");
  train_cmd->add_option("--config", train.config, "Config file")->required()->check(CLI::ExistingFile);
  auto* seed_opt = train_cmd->add_option("--seed", train.seed, "Master seed (overrides run.seed)");
  train_cmd->add_option("--seeds", train.seeds, "Train one run per seed and print the aggregate")
      ->delimiter(',')
      ->excludes(seed_opt);
  train_cmd->add_option("--jobs", train.jobs, "Concurrent runs for --seeds")->check(CLI::PositiveNumber);
  train_cmd->add_option("--out", train.out, "Output directory");
  train_cmd->add_option("--set", train.overrides, "Override a config value, key=value");
  train_cmd->add_flag("--quiet", train.quiet, "No progress lines on stderr");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Greedy evaluation of a checkpoint");
  eval_cmd->add_option("--checkpoint", eval.checkpoint, "checkpoint.json")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--scenario", eval.scenario, "Scenario name")->required();
  eval_cmd->add_option("--episodes", eval.episodes, "Evaluation episodes")->required();
  eval_cmd->add_option("--seed", eval.seed, "Evaluation seed");
  eval_cmd->add_option("--per-episode", eval.per_episode, "Write per-episode rows to this CSV");

  AggregateArgs agg;
  auto* agg_cmd = app.add_subcommand("aggregate", "Summarize finished run directories");
  agg_cmd->add_option("--runs", agg.runs, "Run directories")->required()->check(CLI::ExistingDirectory);
  agg_cmd->add_option("--out", agg.out, "Write the summary CSV here instead of stdout");

  std::uint64_t selftest_seed = 1;
  auto* self_cmd = app.add_subcommand("selftest", "Run the oracle and property suites");
  self_cmd->add_option("--seed", selftest_seed, "Fixture seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }

  try {
    if (*train_cmd) return run_train(train);
    if (*eval_cmd) return run_eval(eval);
    if (*agg_cmd) return run_aggregate(agg);
    if (*self_cmd) return mqf::oracle::run_selftest(std::cout, selftest_seed) == 0 ? 0 : kRuntime;
  } catch (const mqf::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const mqf::LoadError& e) {
    std::cerr << "load error: " << e.what() << '\n';
    return kRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kUsage;
}
