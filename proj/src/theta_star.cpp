#include "manav/theta_star.h"

#include <cmath>
#include <cstdlib>
#include <limits>
#include <queue>
#include <sstream>

namespace manav {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kGoalIndex = -1;
constexpr int kStartParent = -2;
constexpr int kNoParent = -3;

struct OpenEntry {
  double f;
  double g;
  int i;
  int j;
  int index;
};

// Worse-than order for the max-heap: smaller f wins, then larger g, then
// lexicographic (i, j); index last so duplicates stay totally ordered.
struct OpenOrder {
  bool operator()(const OpenEntry& a, const OpenEntry& b) const {
    if (a.f != b.f) return a.f > b.f;
    if (a.g != b.g) return a.g < b.g;
    if (a.i != b.i) return a.i > b.i;
    if (a.j != b.j) return a.j > b.j;
    return a.index > b.index;
  }
};

}  // namespace

double Path::length() const {
  double total = 0.0;
  for (std::size_t t = 0; t + 1 < waypoints.size(); ++t)
    total += distance(waypoints[t], waypoints[t + 1]);
  return total;
}

Path plan_theta_star(const GridMap& map, const Point start, const Point goal,
                     const double clearance) {
  if (map.line_of_sight(start, goal, clearance)) return Path{{start, goal}};

  const int width = map.width();
  const int height = map.height();
  const int cells = width * height;
  const auto index_of = [width](const Cell c) { return c.j * width + c.i; };
  const auto cell_of = [width](const int index) { return Cell{index % width, index / width}; };

  // 0 = unknown, 1 = usable center, 2 = not usable. Lazy: most cells are
  // never touched by the search.
  std::vector<char> validity(static_cast<std::size_t>(cells), 0);
  const auto valid = [&](const Cell c) {
    if (!map.in_bounds(c)) return false;
    char& state = validity[static_cast<std::size_t>(index_of(c))];
    if (state == 0) {
      const bool ok = map.traversable(c) &&
                      map.clearance_at(map.center(c), clearance + 1.0) > clearance;
      state = ok ? 1 : 2;
    }
    return state == 1;
  };

  std::vector<double> g(static_cast<std::size_t>(cells), kInf);
  std::vector<int> parent(static_cast<std::size_t>(cells), kNoParent);
  std::vector<char> closed(static_cast<std::size_t>(cells), 0);
  std::priority_queue<OpenEntry, std::vector<OpenEntry>, OpenOrder> open;

  const auto point_of = [&](const int index) {
    return index == kStartParent ? start : map.center(cell_of(index));
  };
  const auto h = [&](const Cell c) { return distance(map.center(c), goal); };

  // Attach the start to the visible centers around its containing cell.
  const Cell start_cell = map.cell_at(start);
  for (int dj = -1; dj <= 1; ++dj)
    for (int di = -1; di <= 1; ++di) {
      const Cell c{start_cell.i + di, start_cell.j + dj};
      if (!valid(c)) continue;
      const Point center = map.center(c);
      if (!map.line_of_sight(start, center, clearance)) continue;
      const double cost = distance(start, center);
      const int index = index_of(c);
      if (cost < g[static_cast<std::size_t>(index)]) {
        g[static_cast<std::size_t>(index)] = cost;
        parent[static_cast<std::size_t>(index)] = kStartParent;
        open.push({cost + h(c), cost, c.i, c.j, index});
      }
    }

  // The goal attaches to the centers around its containing cell; it is
  // relaxed when one of them is expanded.
  const Cell goal_cell = map.cell_at(goal);
  double goal_g = kInf;
  int goal_parent = kNoParent;
  const auto goal_connectable = [&](const Cell c) {
    return std::abs(c.i - goal_cell.i) <= 1 && std::abs(c.j - goal_cell.j) <= 1 &&
           map.line_of_sight(map.center(c), goal, clearance);
  };

  constexpr int kDi[8] = {1, 1, 0, -1, -1, -1, 0, 1};
  constexpr int kDj[8] = {0, 1, 1, 1, 0, -1, -1, -1};

  while (!open.empty()) {
    const OpenEntry top = open.top();
    open.pop();
    if (top.index == kGoalIndex) {
      if (top.g != goal_g) continue;
      std::vector<Point> chain{goal};
      for (int p = goal_parent; p != kStartParent; p = parent[static_cast<std::size_t>(p)])
        chain.push_back(map.center(cell_of(p)));
      chain.push_back(start);
      return Path{{chain.rbegin(), chain.rend()}};
    }
    const auto top_index = static_cast<std::size_t>(top.index);
    if (closed[top_index] || top.g != g[top_index]) continue;
    closed[top_index] = 1;

    const Cell n{top.i, top.j};
    const Point n_center = map.center(n);
    const int n_parent = parent[top_index];
    const Point n_parent_point = point_of(n_parent);
    const double n_parent_g =
        n_parent == kStartParent ? 0.0 : g[static_cast<std::size_t>(n_parent)];

    const auto relax = [&](const Point target, double& target_g, int& target_parent,
                           const auto& on_improve) {
      double cand_g;
      int cand_parent;
      if (map.line_of_sight(n_parent_point, target, clearance)) {
        cand_g = n_parent_g + distance(n_parent_point, target);
        cand_parent = n_parent;
      } else if (map.line_of_sight(n_center, target, clearance)) {
        cand_g = top.g + distance(n_center, target);
        cand_parent = top.index;
      } else {
        return;
      }
      if (cand_g < target_g) {
        target_g = cand_g;
        target_parent = cand_parent;
        on_improve(cand_g);
      }
    };

    if (goal_connectable(n))
      relax(goal, goal_g, goal_parent, [&](const double new_g) {
        open.push({new_g, new_g, goal_cell.i, goal_cell.j, kGoalIndex});
      });

    for (int d = 0; d < 8; ++d) {
      const Cell s{n.i + kDi[d], n.j + kDj[d]};
      if (!valid(s)) continue;
      if (kDi[d] != 0 && kDj[d] != 0 &&
          (!valid({n.i + kDi[d], n.j}) || !valid({n.i, n.j + kDj[d]})))
        continue;
      const auto s_index = static_cast<std::size_t>(index_of(s));
      if (closed[s_index]) continue;
      relax(map.center(s), g[s_index], parent[s_index], [&](const double new_g) {
        open.push({new_g + h(s), new_g, s.i, s.j, index_of(s)});
      });
    }
  }

  std::ostringstream msg;
  msg << "no path from (" << start.x << ", " << start.y << ") to (" << goal.x << ", "
      << goal.y << ") at clearance " << clearance;
  throw NoPathError(msg.str());
}

Path replan_segment(const GridMap& map, const Point current, const Point local_goal,
                    Path path, const std::size_t cursor, const double clearance) {
  if (map.line_of_sight(current, local_goal, clearance)) return path;
  const Path detour = plan_theta_star(map, current, local_goal, clearance);
  path.waypoints.insert(path.waypoints.begin() + static_cast<std::ptrdiff_t>(cursor),
                        detour.waypoints.begin() + 1, detour.waypoints.end() - 1);
  return path;
}

}  // namespace manav
