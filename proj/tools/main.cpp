// Command-line front end: `run` trains per an experiment config and
// writes metrics under --out; `eval` replays saved q-tables greedily.
//
// Exit codes: 0 success, 2 config/usage error, 3 when a run recorded
// UnsafeStart or LabelMismatch aborts (surfaced loudly by design).

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "dynashield/errors.hpp"
#include "dynashield/harness.hpp"

namespace {

using namespace dynashield;

std::optional<ShieldAlgorithm> parse_algorithm_flag(const std::string& value) {
  if (value.empty()) return std::nullopt;
  if (value == "ds") return ShieldAlgorithm::kDynamic;
  if (value == "fs") return ShieldAlgorithm::kFactored;
  if (value == "none") return ShieldAlgorithm::kNone;
  throw ConfigError("--algorithm must be ds, fs, or none");
}

void print_summary(const RunSummary& summary) {
  std::printf("seed  max_reward  collisions  steps(last10%%)  unsafe  mismatch\n");
  for (const auto& s : summary.per_seed) {
    std::printf("%4u  %10.2f  %10lld  %14.2f  %6d  %8d\n", s.seed, s.max_reward,
                s.total_collisions, s.mean_steps_last10, s.unsafe_starts, s.label_mismatches);
  }
  std::printf("total collisions: %lld\n", summary.total_collisions);
  std::printf("mean max reward:  %.2f\n", summary.mean_max_reward);
  std::printf("mean steps (converged): %.2f\n", summary.mean_steps_last10);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"k-step dynamic shielding for safe multi-agent reinforcement learning"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", algorithm_flag, qtables_dir;
  int seed_flag = -1;
  bool dump_game = false, dump_automata = false, log_events = false;

  CLI::App* run = app.add_subcommand("run", "train per an experiment config");
  run->add_option("--config", config_path, "experiment config file")->required();
  run->add_option("--algorithm", algorithm_flag, "override config algorithm: ds|fs|none");
  run->add_option("--seed", seed_flag, "run a single seed instead of the config's list");
  run->add_option("--out", out_dir, "output directory (default: out)");
  run->add_flag("--dump-game", dump_game, "write the initial explicit game as JSON");
  run->add_flag("--dump-automata", dump_automata, "write the spec monitor DFA as Graphviz dot");
  run->add_flag("--log-events", log_events, "write per-step shield events (JSON lines)");

  CLI::App* eval = app.add_subcommand("eval", "greedy testing-phase evaluation");
  eval->add_option("--config", config_path, "experiment config file")->required();
  eval->add_option("--qtables", qtables_dir, "directory with seed<k>/qtable_agent<i>.csv")
      ->required();
  eval->add_option("--algorithm", algorithm_flag, "override config algorithm: ds|fs|none");
  eval->add_option("--seed", seed_flag, "evaluate a single seed");

  CLI11_PARSE(app, argc, argv);

  try {
    ExperimentConfig cfg = ExperimentConfig::load(config_path);
    RunOptions options;
    options.out_dir = out_dir;
    options.dump_game = dump_game;
    options.dump_automata = dump_automata;
    options.log_events = log_events;
    options.algorithm_override = parse_algorithm_flag(algorithm_flag);
    if (seed_flag >= 0) options.seed_override = static_cast<unsigned>(seed_flag);

    if (run->parsed()) {
      const RunSummary summary = run_experiment(cfg, options);
      print_summary(summary);
      return summary.had_abort_events() ? 3 : 0;
    }
    const EvalSummary es = evaluate_greedy(cfg, qtables_dir, options);
    std::printf("eval episodes:   %d x %zu seeds\n", cfg.eval_episodes,
                options.seed_override ? std::size_t{1} : cfg.seeds.size());
    std::printf("mean reward:     %.2f\n", es.mean_reward);
    std::printf("mean steps:      %.2f\n", es.mean_steps);
    std::printf("safety rate:     %.4f\n", es.safety_rate);
    std::printf("collisions:      %lld\n", es.total_collisions);
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const UnsafeStartError& e) {
    std::cerr << "unsafe start: " << e.what() << "\n";
    return 3;
  } catch (const LabelMismatchError& e) {
    std::cerr << "label mismatch: " << e.what() << "\n";
    return 3;
  } catch (const GroupTooLargeError& e) {
    std::cerr << "group too large: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
