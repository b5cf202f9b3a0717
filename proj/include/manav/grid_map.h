#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "manav/vec2.h"

namespace manav {

// Grid cell index: i is the column (x), j is the row (y). Row 0 of a map file
// is j = 0. Cell (i, j) covers the square [i, i+1) x [j, j+1); cells are unit
// squares in world units.
struct Cell {
  int i = 0;
  int j = 0;

  constexpr bool operator==(const Cell& o) const { return i == o.i && j == o.j; }
  constexpr bool operator!=(const Cell& o) const { return !(*this == o); }
  constexpr bool operator<(const Cell& o) const { return i != o.i ? i < o.i : j < o.j; }
};

// Occupancy grid. The map boundary counts as an obstacle: clearance queries
// and line-of-sight treat everything outside [0, width] x [0, height] as
// blocked.
class GridMap {
 public:
  GridMap(int width, int height);

  // MovingAI .map format: "type octile", "height H", "width W", "map", then H
  // rows of W characters. '.' and 'G' are traversable; '@', 'O', 'T' blocked.
  // Throws std::runtime_error naming the offending line on malformed input.
  static GridMap load_movingai(std::istream& in);
  static GridMap load_movingai_file(const std::string& path);

  // Convenience for tests: rows of '.' / '@' characters.
  static GridMap from_rows(const std::vector<std::string>& rows);

  // Serializes back to the .map format with normalized glyphs ('.' and '@').
  std::string to_movingai() const;

  int width() const { return width_; }
  int height() const { return height_; }

  bool in_bounds(Cell c) const { return c.i >= 0 && c.i < width_ && c.j >= 0 && c.j < height_; }
  // Out-of-bounds cells report as blocked.
  bool blocked(Cell c) const { return !in_bounds(c) || blocked_[index(c)] != 0; }
  bool traversable(Cell c) const { return in_bounds(c) && blocked_[index(c)] == 0; }
  void set_blocked(Cell c, bool value);

  std::size_t blocked_count() const;

  Point center(Cell c) const { return {c.i + 0.5, c.j + 0.5}; }
  Cell cell_at(Point p) const {
    return {static_cast<int>(std::floor(p.x)), static_cast<int>(std::floor(p.y))};
  }

  // True iff the segment a->b inflated to a capsule of radius `clearance`
  // intersects no blocked cell (and stays inside the map when clearance > 0).
  // Exact capsule-vs-cell intersection, not sampled. Symmetric in a and b.
  bool line_of_sight(Point a, Point b, double clearance) const;

  // Nearest traversable cell not listed in `forbidden`, by 4-connected BFS
  // from `from`. The search expands through blocked cells (they are ineligible
  // as results but do not stop the wave) with fixed neighbor order east,
  // south, west, north; ties resolve to the earliest-expanded cell. Returns
  // nullopt when no eligible cell exists.
  std::optional<Cell> nearest_free_cell(Cell from, const std::vector<Cell>& forbidden) const;

  // Euclidean distance from p to the nearest blocked cell square; zero when p
  // lies inside one, +infinity when the map has no blocked cells. The result
  // is exact whenever it is below `cap`; a finite cap lets threshold checks
  // skip the full ring scan. The map boundary is not an obstacle here; see
  // distance_to_boundary.
  double distance_to_obstacles(Point p,
                               double cap = std::numeric_limits<double>::infinity()) const;

  // Distance from p to the map border (negative outside the map).
  double distance_to_boundary(Point p) const {
    return std::min(std::min(p.x, p.y), std::min(width_ - p.x, height_ - p.y));
  }

  // min(distance_to_obstacles, distance_to_boundary): the free-space clearance
  // used for planning validity and trace audits.
  double clearance_at(Point p, double cap = std::numeric_limits<double>::infinity()) const {
    return std::min(distance_to_boundary(p), distance_to_obstacles(p, cap));
  }

 private:
  std::size_t index(Cell c) const {
    return static_cast<std::size_t>(c.j) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(c.i);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> blocked_;
};

// Square map of the given side with a vertical wall `wall_thickness` cells
// wide at column size/2, pierced by `num_passages` gaps of `gap_width` cells
// at rows floor(q * size / (num_passages + 1)), q = 1..num_passages.
GridMap generate_gaps_map(int size, int num_passages, int wall_thickness = 1, int gap_width = 1);

// Square map tiled into rooms of room_size separated by one-cell walls, with
// a one-cell doorway at the middle of every shared wall segment. The last
// band absorbs the remainder when size is not a multiple of room_size + 1.
GridMap generate_rooms_map(int size, int room_size);

}  // namespace manav
