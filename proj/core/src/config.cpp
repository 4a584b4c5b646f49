#include <algorithm>
#include <fstream>
#include <sstream>

#include "dynashield/errors.hpp"
#include "dynashield/harness.hpp"

namespace dynashield {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

int parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' expects an integer, got '" + value + "'");
  }
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' expects a number, got '" + value + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "on") return true;
  if (value == "false" || value == "0" || value == "off") return false;
  throw ConfigError("config key '" + key + "' expects true/false, got '" + value + "'");
}

std::vector<unsigned> parse_seed_list(const std::string& key, const std::string& value) {
  std::vector<unsigned> seeds;
  std::stringstream ss(value);
  std::string token;
  while (std::getline(ss, token, ',')) {
    token = trim(token);
    if (token.empty()) continue;
    const int v = parse_int(key, token);
    if (v < 0) throw ConfigError("seeds must be nonnegative");
    seeds.push_back(static_cast<unsigned>(v));
  }
  if (seeds.empty()) throw ConfigError("config key 'seeds' expects at least one seed");
  return seeds;
}

}  // namespace

ExperimentConfig ExperimentConfig::parse(std::string_view text) {
  ExperimentConfig cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + " is not 'key = value'");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) throw ConfigError("empty config key on line " + std::to_string(line_no));

    if (key == "map_file") cfg.map_file = value;
    else if (key == "safety_spec") cfg.safety_spec = value;
    else if (key == "algorithm") {
      if (value == "ds") cfg.algorithm = ShieldAlgorithm::kDynamic;
      else if (value == "fs") cfg.algorithm = ShieldAlgorithm::kFactored;
      else if (value == "none") cfg.algorithm = ShieldAlgorithm::kNone;
      else throw ConfigError("algorithm must be ds, fs, or none, got '" + value + "'");
    } else if (key == "env") {
      if (value == "grid") cfg.env = EnvKind::kGrid;
      else if (value == "particle") cfg.env = EnvKind::kParticle;
      else throw ConfigError("env must be grid or particle, got '" + value + "'");
    } else if (key == "k") cfg.k = parse_int(key, value);
    else if (key == "episodes") cfg.episodes = parse_int(key, value);
    else if (key == "step_limit") {
      cfg.step_limit = parse_int(key, value);
      if (cfg.step_limit < 1) throw ConfigError("step_limit must be >= 1");
    }
    else if (key == "seeds") cfg.seeds = parse_seed_list(key, value);
    else if (key == "model") {
      if (value == "exact") cfg.model = ModelKind::kExact;
      else if (value == "learned") cfg.model = ModelKind::kLearned;
      else throw ConfigError("model must be exact or learned, got '" + value + "'");
    } else if (key == "alpha") cfg.learner.alpha = parse_double(key, value);
    else if (key == "gamma") cfg.learner.gamma = parse_double(key, value);
    else if (key == "epsilon_start") cfg.learner.epsilon_start = parse_double(key, value);
    else if (key == "epsilon_decay") cfg.learner.epsilon_decay = parse_double(key, value);
    else if (key == "epsilon_floor") cfg.learner.epsilon_floor = parse_double(key, value);
    else if (key == "unsafe_penalty") cfg.unsafe_penalty = parse_double(key, value);
    else if (key == "fs_region_size") cfg.fs_region_size = parse_int(key, value);
    else if (key == "cell_width") cfg.cell_width = parse_double(key, value);
    else if (key == "max_group_size") cfg.max_group_size = parse_int(key, value);
    else if (key == "lookahead_margin") cfg.lookahead_margin = parse_bool(key, value);
    else if (key == "random_starts") cfg.random_starts = parse_bool(key, value);
    else if (key == "n_min") cfg.n_min = parse_int(key, value);
    else if (key == "pessimistic_completion") cfg.pessimistic_completion = parse_bool(key, value);
    else if (key == "model_rollout_steps") cfg.model_rollout_steps = parse_int(key, value);
    else if (key == "eval_episodes") cfg.eval_episodes = parse_int(key, value);
    else if (key == "particle_agents") cfg.particle_agents = parse_int(key, value);
    else throw ConfigError("unknown config key '" + key + "'");
  }

  if (cfg.k < 1) throw ConfigError("k must be >= 1");
  if (cfg.episodes < 1) throw ConfigError("episodes must be >= 1");
  if (cfg.fs_region_size < 1) throw ConfigError("fs_region_size must be >= 1");
  if (cfg.max_group_size < 1 || cfg.max_group_size > kMaxGroup)
    throw ConfigError("max_group_size must be in [1, " + std::to_string(kMaxGroup) + "]");
  if (cfg.cell_width <= 0.0) throw ConfigError("cell_width must be positive");
  if (cfg.env == EnvKind::kGrid && cfg.map_file.empty())
    throw ConfigError("grid experiments require map_file");
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  ExperimentConfig cfg = parse(buf.str());
  // map_file is resolved relative to the config file's directory.
  if (!cfg.map_file.empty()) {
    const std::filesystem::path mp(cfg.map_file);
    if (mp.is_relative()) cfg.map_file = (path.parent_path() / mp).string();
  }
  return cfg;
}

}  // namespace dynashield
