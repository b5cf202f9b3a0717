#include "manav/grid_map.h"

#include <algorithm>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "manav/geometry.h"

namespace manav {

namespace {

std::string strip_cr(std::string line) {
  while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
  return line;
}

[[noreturn]] void parse_fail(int line_no, const std::string& what) {
  std::ostringstream os;
  os << "map parse error at line " << line_no << ": " << what;
  throw std::runtime_error(os.str());
}

}  // namespace

GridMap::GridMap(int width, int height) : width_(width), height_(height) {
  if (width <= 0 || height <= 0) throw std::invalid_argument("map dimensions must be positive");
  blocked_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0);
}

void GridMap::set_blocked(Cell c, bool value) {
  if (!in_bounds(c)) throw std::out_of_range("set_blocked outside map");
  blocked_[index(c)] = value ? 1 : 0;
}

std::size_t GridMap::blocked_count() const {
  return static_cast<std::size_t>(std::count(blocked_.begin(), blocked_.end(), 1));
}

GridMap GridMap::load_movingai(std::istream& in) {
  std::string line;
  int line_no = 0;

  auto next_line = [&]() -> std::string {
    if (!std::getline(in, line)) parse_fail(line_no + 1, "unexpected end of file");
    ++line_no;
    return strip_cr(line);
  };

  {
    std::istringstream is(next_line());
    std::string key, value;
    is >> key >> value;
    if (key != "type" || value != "octile") parse_fail(line_no, "expected 'type octile'");
  }

  int height = 0;
  {
    std::istringstream is(next_line());
    std::string key;
    is >> key >> height;
    if (key != "height" || is.fail() || height <= 0) parse_fail(line_no, "expected 'height H'");
  }

  int width = 0;
  {
    std::istringstream is(next_line());
    std::string key;
    is >> key >> width;
    if (key != "width" || is.fail() || width <= 0) parse_fail(line_no, "expected 'width W'");
  }

  if (next_line() != "map") parse_fail(line_no, "expected 'map'");

  GridMap map(width, height);
  for (int j = 0; j < height; ++j) {
    const std::string row = next_line();
    if (static_cast<int>(row.size()) != width) parse_fail(line_no, "row width mismatch");
    for (int i = 0; i < width; ++i) {
      const char c = row[static_cast<std::size_t>(i)];
      if (c == '.' || c == 'G') continue;
      if (c == '@' || c == 'O' || c == 'T') {
        map.set_blocked({i, j}, true);
      } else {
        parse_fail(line_no, std::string("unknown cell character '") + c + "'");
      }
    }
  }
  return map;
}

GridMap GridMap::load_movingai_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open map file: " + path);
  return load_movingai(in);
}

GridMap GridMap::from_rows(const std::vector<std::string>& rows) {
  if (rows.empty()) throw std::invalid_argument("empty row list");
  GridMap map(static_cast<int>(rows.front().size()), static_cast<int>(rows.size()));
  for (int j = 0; j < map.height(); ++j) {
    const std::string& row = rows[static_cast<std::size_t>(j)];
    if (static_cast<int>(row.size()) != map.width())
      throw std::invalid_argument("ragged row list");
    for (int i = 0; i < map.width(); ++i)
      if (row[static_cast<std::size_t>(i)] == '@') map.set_blocked({i, j}, true);
  }
  return map;
}

std::string GridMap::to_movingai() const {
  std::ostringstream os;
  os << "type octile\n"
     << "height " << height_ << "\n"
     << "width " << width_ << "\n"
     << "map\n";
  for (int j = 0; j < height_; ++j) {
    for (int i = 0; i < width_; ++i) os << (blocked({i, j}) ? '@' : '.');
    os << '\n';
  }
  return os.str();
}

bool GridMap::line_of_sight(Point a, Point b, double clearance) const {
  // The map boundary is an obstacle: the capsule may touch it but not cross.
  const double min_x = std::min(a.x, b.x);
  const double max_x = std::max(a.x, b.x);
  const double min_y = std::min(a.y, b.y);
  const double max_y = std::max(a.y, b.y);
  if (min_x - clearance < 0.0 || min_y - clearance < 0.0 || max_x + clearance > width_ ||
      max_y + clearance > height_)
    return false;

  // Walk the column strips the capsule can touch; per strip, overapproximate
  // the y-extent from the segment's y-range over the padded strip, then
  // arbitrate every candidate cell with the exact capsule-vs-square test.
  const int i_lo = static_cast<int>(std::floor(min_x - clearance));
  const int i_hi = static_cast<int>(std::floor(max_x + clearance));
  for (int i = i_lo; i <= i_hi; ++i) {
    double y_lo = min_y;
    double y_hi = max_y;
    if (b.x != a.x) {
      const double inv_dx = 1.0 / (b.x - a.x);
      double t0 = (i - clearance - a.x) * inv_dx;
      double t1 = (i + 1 + clearance - a.x) * inv_dx;
      if (t0 > t1) std::swap(t0, t1);
      t0 = std::clamp(t0, 0.0, 1.0);
      t1 = std::clamp(t1, 0.0, 1.0);
      const double ya = a.y + t0 * (b.y - a.y);
      const double yb = a.y + t1 * (b.y - a.y);
      y_lo = std::min(ya, yb);
      y_hi = std::max(ya, yb);
    }
    const int j_lo = static_cast<int>(std::floor(y_lo - clearance));
    const int j_hi = static_cast<int>(std::floor(y_hi + clearance));
    for (int j = j_lo; j <= j_hi; ++j) {
      const Cell c{i, j};
      if (!blocked(c)) continue;
      const Aabb box{static_cast<double>(c.i), static_cast<double>(c.j),
                     static_cast<double>(c.i + 1), static_cast<double>(c.j + 1)};
      if (dist_segment_aabb(a, b, box) < clearance) return false;
      // At zero clearance the test above never fires; passing through the
      // cell interior is still a hit, grazing its boundary is not.
      if (clearance == 0.0 && segment_crosses_interior(a, b, box)) return false;
    }
  }
  return true;
}

std::optional<Cell> GridMap::nearest_free_cell(Cell from,
                                               const std::vector<Cell>& forbidden) const {
  if (!in_bounds(from)) return std::nullopt;
  std::set<Cell> banned(forbidden.begin(), forbidden.end());
  std::vector<std::uint8_t> seen(blocked_.size(), 0);
  std::deque<Cell> frontier;
  frontier.push_back(from);
  seen[index(from)] = 1;
  // Expansion order: east, south, west, north. The wave crosses blocked cells;
  // they are just never eligible as results.
  static constexpr int kDi[4] = {1, 0, -1, 0};
  static constexpr int kDj[4] = {0, 1, 0, -1};
  while (!frontier.empty()) {
    const Cell c = frontier.front();
    frontier.pop_front();
    if (traversable(c) && banned.count(c) == 0) return c;
    for (int d = 0; d < 4; ++d) {
      const Cell n{c.i + kDi[d], c.j + kDj[d]};
      if (!in_bounds(n) || seen[index(n)]) continue;
      seen[index(n)] = 1;
      frontier.push_back(n);
    }
  }
  return std::nullopt;
}

double GridMap::distance_to_obstacles(Point p, double cap) const {
  const Cell at = cell_at(p);
  if (in_bounds(at) && blocked_[index(at)]) return 0.0;
  double best = std::numeric_limits<double>::infinity();

  // Expanding Chebyshev rings around p's cell: a ring at index r holds no
  // point closer than r - 1 cells, so stop when that bound passes the best
  // distance found (or the saturation cap).
  auto consider = [&](Cell c) {
    if (!in_bounds(c) || !blocked_[index(c)]) return;
    const Aabb box{static_cast<double>(c.i), static_cast<double>(c.j),
                   static_cast<double>(c.i + 1), static_cast<double>(c.j + 1)};
    best = std::min(best, dist_point_aabb(p, box));
  };
  const int max_ring = width_ + height_ + 2;
  for (int r = 1; r <= max_ring; ++r) {
    if (static_cast<double>(r - 1) >= best || static_cast<double>(r - 1) >= cap) break;
    for (int di = -r; di <= r; ++di) {
      consider({at.i + di, at.j - r});
      consider({at.i + di, at.j + r});
    }
    for (int dj = -r + 1; dj <= r - 1; ++dj) {
      consider({at.i - r, at.j + dj});
      consider({at.i + r, at.j + dj});
    }
  }
  return best;
}

GridMap generate_gaps_map(int size, int num_passages, int wall_thickness, int gap_width) {
  if (size < 4) throw std::invalid_argument("gaps map size must be at least 4");
  if (num_passages < 1) throw std::invalid_argument("gaps map needs at least one passage");
  if (wall_thickness < 1 || gap_width < 1)
    throw std::invalid_argument("wall thickness and gap width must be positive");
  GridMap map(size, size);
  const int wall_col = size / 2;
  for (int t = 0; t < wall_thickness; ++t)
    for (int j = 0; j < size; ++j) map.set_blocked({wall_col + t, j}, true);
  for (int q = 1; q <= num_passages; ++q) {
    const int row = static_cast<int>((static_cast<long long>(q) * size) / (num_passages + 1));
    for (int g = 0; g < gap_width; ++g) {
      const int j = row + g;
      if (j < 0 || j >= size) continue;
      for (int t = 0; t < wall_thickness; ++t) map.set_blocked({wall_col + t, j}, false);
    }
  }
  return map;
}

GridMap generate_rooms_map(int size, int room_size) {
  if (size < 4) throw std::invalid_argument("rooms map size must be at least 4");
  if (room_size < 2 || room_size >= size)
    throw std::invalid_argument("room size must be at least 2 and smaller than the map");
  GridMap map(size, size);
  const int stride = room_size + 1;
  std::vector<int> walls;
  for (int w = room_size; w < size; w += stride) walls.push_back(w);
  for (int w : walls) {
    for (int t = 0; t < size; ++t) {
      map.set_blocked({w, t}, true);
      map.set_blocked({t, w}, true);
    }
  }
  std::vector<std::pair<int, int>> bands;
  int lo = 0;
  for (int w : walls) {
    if (w > lo) bands.push_back({lo, w - 1});
    lo = w + 1;
  }
  if (lo < size) bands.push_back({lo, size - 1});
  for (int w : walls) {
    for (const auto& [a, b] : bands) {
      const int mid = (a + b) / 2;
      map.set_blocked({w, mid}, false);
      map.set_blocked({mid, w}, false);
    }
  }
  return map;
}

}  // namespace manav
