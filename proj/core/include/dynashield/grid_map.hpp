#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "dynashield/action.hpp"

namespace dynashield {

struct Cell {
  int x = 0;
  int y = 0;
  auto operator<=>(const Cell&) const = default;
};

inline int chebyshev(Cell a, Cell b) {
  const int dx = a.x > b.x ? a.x - b.x : b.x - a.x;
  const int dy = a.y > b.y ? a.y - b.y : b.y - a.y;
  return dx > dy ? dx : dy;
}

// Rectangular gridworld map.
//
// ASCII format, one character per cell, row-major:
//   '#'  obstacle
//   '.'  free cell
//   0-9  agent start (agent index = digit)
//   a-j  agent target (agent i has target letter 'a'+i)
// Lines may have trailing whitespace; blank lines and lines starting
// with ';' are ignored.
class GridMap {
 public:
  GridMap() = default;
  GridMap(int width, int height, std::vector<Cell> obstacles,
          std::vector<Cell> starts, std::vector<Cell> targets);

  static GridMap parse(std::string_view text);
  static GridMap load(const std::filesystem::path& path);

  int width() const { return width_; }
  int height() const { return height_; }
  int agent_count() const { return static_cast<int>(starts_.size()); }

  bool in_bounds(Cell c) const {
    return c.x >= 0 && c.x < width_ && c.y >= 0 && c.y < height_;
  }
  bool is_obstacle(Cell c) const {
    return in_bounds(c) && obstacle_[static_cast<std::size_t>(c.y * width_ + c.x)] != 0;
  }
  bool is_free(Cell c) const { return in_bounds(c) && !is_obstacle(c); }

  // Movement semantics shared by the environment and the exact model:
  // a move into a wall, border, or obstacle resolves to staying in place.
  Cell step_from(Cell c, Action a) const;

  const std::vector<Cell>& starts() const { return starts_; }
  const std::vector<Cell>& targets() const { return targets_; }
  std::vector<Cell> free_cells() const;

  int cell_index(Cell c) const { return c.y * width_ + c.x; }
  int cell_count() const { return width_ * height_; }

  std::string to_ascii() const;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> obstacle_;
  std::vector<Cell> starts_;
  std::vector<Cell> targets_;
};

}  // namespace dynashield
