#include "dynashield/grid_map.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "dynashield/errors.hpp"

namespace dynashield {

const char* action_name(Action a) {
  switch (a) {
    case Action::kStay: return "stay";
    case Action::kUp: return "up";
    case Action::kDown: return "down";
    case Action::kLeft: return "left";
    case Action::kRight: return "right";
    case Action::kBrake: return "brake";
  }
  return "?";
}

Action action_from_name(const std::string& name) {
  for (int i = 0; i <= static_cast<int>(Action::kBrake); ++i) {
    if (name == action_name(static_cast<Action>(i))) return static_cast<Action>(i);
  }
  throw ConfigError("unknown action name: " + name);
}

GridMap::GridMap(int width, int height, std::vector<Cell> obstacles,
                 std::vector<Cell> starts, std::vector<Cell> targets)
    : width_(width),
      height_(height),
      obstacle_(static_cast<std::size_t>(width * height), 0),
      starts_(std::move(starts)),
      targets_(std::move(targets)) {
  if (width_ <= 0 || height_ <= 0) throw ConfigError("map dimensions must be positive");
  if (width_ > 120 || height_ > 120)
    throw ConfigError("maps are capped at 120x120 cells");
  for (Cell c : obstacles) {
    if (!in_bounds(c)) throw ConfigError("obstacle outside map bounds");
    obstacle_[static_cast<std::size_t>(cell_index(c))] = 1;
  }
  if (starts_.size() != targets_.size())
    throw ConfigError("map must define one target per agent start");
  for (Cell c : starts_)
    if (!is_free(c)) throw ConfigError("agent start on obstacle or outside map");
  for (Cell c : targets_)
    if (!is_free(c)) throw ConfigError("agent target on obstacle or outside map");
  std::vector<Cell> sorted = starts_;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw ConfigError("agent starts must be distinct cells");
}

GridMap GridMap::parse(std::string_view text) {
  std::vector<std::string> rows;
  std::string line;
  std::istringstream in{std::string(text)};
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t'))
      line.pop_back();
    if (line.empty() || line[0] == ';') continue;
    rows.push_back(line);
  }
  if (rows.empty()) throw ConfigError("empty map");
  const int height = static_cast<int>(rows.size());
  const int width = static_cast<int>(rows[0].size());
  std::vector<Cell> obstacles;
  std::map<int, Cell> starts, targets;
  for (int y = 0; y < height; ++y) {
    if (static_cast<int>(rows[static_cast<std::size_t>(y)].size()) != width)
      throw ConfigError("map rows must all have the same width");
    for (int x = 0; x < width; ++x) {
      const char ch = rows[static_cast<std::size_t>(y)][static_cast<std::size_t>(x)];
      const Cell c{x, y};
      if (ch == '#') {
        obstacles.push_back(c);
      } else if (ch == '.') {
        // free
      } else if (ch >= '0' && ch <= '9') {
        if (!starts.emplace(ch - '0', c).second)
          throw ConfigError(std::string("duplicate agent start '") + ch + "'");
      } else if (ch >= 'a' && ch <= 'j') {
        if (!targets.emplace(ch - 'a', c).second)
          throw ConfigError(std::string("duplicate agent target '") + ch + "'");
      } else {
        throw ConfigError(std::string("unexpected map character '") + ch + "'");
      }
    }
  }
  std::vector<Cell> start_list, target_list;
  for (const auto& [idx, cell] : starts) {
    if (idx != static_cast<int>(start_list.size()))
      throw ConfigError("agent starts must be numbered consecutively from 0");
    start_list.push_back(cell);
  }
  for (const auto& [idx, cell] : targets) {
    if (idx != static_cast<int>(target_list.size()))
      throw ConfigError("agent targets must be lettered consecutively from 'a'");
    target_list.push_back(cell);
  }
  return GridMap(width, height, std::move(obstacles), std::move(start_list),
                 std::move(target_list));
}

GridMap GridMap::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open map file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

Cell GridMap::step_from(Cell c, Action a) const {
  Cell next = c;
  switch (a) {
    case Action::kStay: break;
    case Action::kUp: next.y -= 1; break;
    case Action::kDown: next.y += 1; break;
    case Action::kLeft: next.x -= 1; break;
    case Action::kRight: next.x += 1; break;
    case Action::kBrake: break;  // no grid meaning; treated as stay
  }
  return is_free(next) ? next : c;
}

std::vector<Cell> GridMap::free_cells() const {
  std::vector<Cell> out;
  for (int y = 0; y < height_; ++y)
    for (int x = 0; x < width_; ++x)
      if (is_free({x, y})) out.push_back({x, y});
  return out;
}

std::string GridMap::to_ascii() const {
  std::string out;
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      const Cell c{x, y};
      char ch = is_obstacle(c) ? '#' : '.';
      for (std::size_t i = 0; i < starts_.size(); ++i)
        if (starts_[i] == c) ch = static_cast<char>('0' + i);
      for (std::size_t i = 0; i < targets_.size(); ++i)
        if (targets_[i] == c) ch = static_cast<char>('a' + i);
      out.push_back(ch);
    }
    out.push_back('\n');
  }
  return out;
}

}  // namespace dynashield
