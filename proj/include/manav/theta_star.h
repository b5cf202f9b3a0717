#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "manav/grid_map.h"

namespace manav {

// Waypoint chain; consecutive waypoints keep line of sight at the clearance
// the planner was given.
struct Path {
  std::vector<Point> waypoints;

  double length() const;
};

class NoPathError : public std::runtime_error {
 public:
  explicit NoPathError(const std::string& what) : std::runtime_error(what) {}
};

// Any-angle search over cell centers (8-connected expansion, Euclidean
// heuristic) with the parent-shortcut rule: a successor inherits its
// expander's parent whenever that parent can see it, so waypoints land only
// where the path actually turns. Start and goal attach to the valid centers
// around their containing cells. Open-list ties break on smaller f, then
// larger g, then (i, j). Throws NoPathError when the goal is unreachable at
// this clearance.
Path plan_theta_star(const GridMap& map, Point start, Point goal, double clearance);

// Repairs `path` after the agent at `current` lost sight of
// path.waypoints[cursor] (== local_goal): plans current -> local_goal and
// inserts the intermediate waypoints before index `cursor`, so the cursor
// lands on the first detour waypoint. Returns `path` unchanged when
// visibility actually holds. NoPathError propagates.
Path replan_segment(const GridMap& map, Point current, Point local_goal, Path path,
                    std::size_t cursor, double clearance);

}  // namespace manav
