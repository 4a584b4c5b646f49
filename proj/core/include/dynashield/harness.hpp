#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dynashield/dynamic_manager.hpp"
#include "dynashield/envs.hpp"
#include "dynashield/marl.hpp"

namespace dynashield {

enum class ShieldAlgorithm { kDynamic, kFactored, kNone };
enum class ModelKind { kExact, kLearned };
enum class EnvKind { kGrid, kParticle };

// Flat key=value experiment configuration. Unknown keys and malformed
// values are ConfigErrors; every knob has the documented default.
struct ExperimentConfig {
  std::string map_file;
  std::string safety_spec = "G !collision";
  ShieldAlgorithm algorithm = ShieldAlgorithm::kDynamic;
  EnvKind env = EnvKind::kGrid;
  int k = 2;
  int episodes = 2000;
  int step_limit = 0;  // 0 = environment default: 100 (grid) / 50 (particle)
  std::vector<unsigned> seeds{0, 1, 2, 3, 4};
  ModelKind model = ModelKind::kExact;
  LearnerParams learner;
  double unsafe_penalty = -10.0;
  int fs_region_size = 3;
  double cell_width = 0.5;
  int max_group_size = 4;
  bool lookahead_margin = false;
  bool random_starts = false;
  int n_min = 5;
  bool pessimistic_completion = true;
  int model_rollout_steps = 10000;
  int eval_episodes = 100;
  int particle_agents = 2;

  static ExperimentConfig parse(std::string_view text);
  static ExperimentConfig load(const std::filesystem::path& path);

  int resolved_step_limit() const {
    if (step_limit > 0) return step_limit;
    return env == EnvKind::kParticle ? 50 : 100;
  }
};

// Fraction of steps without any collision: 1 - |{i : collisions_i > 0}| / n.
double safety_rate(std::span<const int> per_step_collisions);

struct RunOptions {
  std::filesystem::path out_dir;
  bool dump_game = false;
  bool dump_automata = false;
  bool log_events = false;
  std::optional<ShieldAlgorithm> algorithm_override;
  std::optional<unsigned> seed_override;
};

// One metrics row (one agent of one episode of one seed).
struct EpisodeRow {
  int episode = 0;
  unsigned seed = 0;
  int agent_id = 0;
  double reward = 0.0;
  int collisions = 0;      // episode total
  int steps = 0;           // steps to all-done (or the step limit)
  int corrections = 0;     // this agent's corrected proposals
  int recomputes = 0;      // episode total
  std::size_t synthesis_states = 0;  // episode total, deterministic cost
};

struct SeedSummary {
  unsigned seed = 0;
  double max_reward = 0.0;          // best episode team reward
  long long total_collisions = 0;
  double mean_steps_last10 = 0.0;   // converged steps (mean over last 10%)
  int min_steps_last10 = 0;
  long long total_corrections = 0;
  long long total_recomputes = 0;
  int unsafe_starts = 0;
  int label_mismatches = 0;
  double train_safety_rate = 1.0;
};

struct RunSummary {
  std::vector<SeedSummary> per_seed;
  long long total_collisions = 0;
  int unsafe_starts = 0;
  int label_mismatches = 0;
  double mean_max_reward = 0.0;
  double mean_steps_last10 = 0.0;  // mean across seeds of converged steps

  bool had_abort_events() const { return unsafe_starts > 0 || label_mismatches > 0; }
};

// Trains per the config (all seeds), writes metrics.csv / summary.csv /
// per-seed q-tables (and rollouts.csv for learned models) under
// options.out_dir, and returns the summary. Deterministic: identical
// config and seed produce byte-identical metrics.csv.
RunSummary run_experiment(const ExperimentConfig& cfg, const RunOptions& options);

struct EvalSummary {
  double mean_reward = 0.0;
  double mean_steps = 0.0;
  double safety_rate = 1.0;
  long long total_collisions = 0;
};

// Greedy testing-phase evaluation from saved q-tables (qtables_dir must
// hold seed<k>/qtable_agent<i>.csv as written by run_experiment).
EvalSummary evaluate_greedy(const ExperimentConfig& cfg, const std::filesystem::path& qtables_dir,
                            const RunOptions& options);

// Factored-shielding baseline: static axis-aligned square regions, one
// shield per occupied region. Cross-border moves are admitted only when
// the destination region can confirm safety without the source region's
// state (destination cell outside every destination-region agent's k-step
// reach and unclaimed by other movers); members' in-region proposals are
// filtered jointly with corrections restricted to region-preserving
// actions.
class FsCoordinator {
 public:
  FsCoordinator(const GridMap& map, ShieldFactory& factory, double unsafe_penalty,
                int region_size);

  ShieldStepResult step(const JointState& state, const std::vector<Action>& proposed);
  void reset_episode();

  int region_of(Cell c) const;

 private:
  const GridMap* map_;
  ShieldFactory* factory_;
  double penalty_;
  int region_size_;
  int regions_x_;
  std::map<std::vector<int>, Shield> pool_;
};

}  // namespace dynashield
