#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "manav/grid_map.h"

namespace manav {

// Pebble-motion instance on an explicit graph. Grid instances index the
// traversable cells of a rectangular window, but the solver and validator
// only ever look at `adjacency`, so hand-built graphs work too.
struct MapfInstance {
  std::vector<Cell> vertices;
  std::vector<std::vector<int>> adjacency;  // sorted neighbor indices
  std::vector<int> starts;                  // per agent, vertex index
  std::vector<int> goals;
  std::vector<int> agent_ids;               // global ids, for reporting

  int vertex_at(Cell c) const;  // -1 when the cell is not a vertex
};

// Vertices = traversable cells of [min_corner, max_corner] (inclusive),
// edges = 4-connected adjacency inside the window.
MapfInstance build_grid_instance(const GridMap& map, Cell min_corner, Cell max_corner,
                                 const std::vector<Cell>& starts,
                                 const std::vector<Cell>& goals,
                                 const std::vector<int>& agent_ids);

struct MapfAction {
  bool move = false;
  int to = -1;  // target vertex index; meaningful only when move
};

// Synchronous plan: index t of every agent's sequence executes at once.
struct MapfPlan {
  std::vector<std::vector<MapfAction>> actions;  // [agent][index], equal lengths
  double action_duration = 1.0;

  std::size_t length() const { return actions.empty() ? 0 : actions[0].size(); }
};

enum class MapfOutcome {
  Solved,
  Infeasible,  // the instance admits no plan under this solver's criteria
  Internal,    // solver gave up; must not happen on solvable instances
};

struct MapfResult {
  MapfOutcome outcome = MapfOutcome::Internal;
  MapfPlan plan;
};

struct PushRotateOptions {
  bool smooth = true;          // drop provably redundant move pairs
  std::size_t move_budget = 0;  // 0 = derive from instance size
};

// Sequential pebble-motion solver: push/swap/rotate primitives with
// deterministic tie-breaking, exact search on small components, and
// order-checking shortcuts on path and cycle components. The serial move
// sequence is packed greedily so independent moves share an index; returned
// plans are always validator-clean.
MapfResult solve_push_and_rotate(const MapfInstance& instance,
                                 const PushRotateOptions& options = {});

// Uniform duration under which a one-cell move exactly saturates max_speed.
MapfPlan assign_action_duration(MapfPlan plan, double max_speed, double cell_size);

struct PlanCheck {
  bool valid = true;
  std::size_t index = 0;  // first offending synchronous index
  int agent_a = -1;
  int agent_b = -1;
  std::string reason;
};

// Replays the plan from the starts: every move must follow a graph edge, no
// two agents may share a vertex at the same index or exchange vertices
// between indices, and everyone must finish at their goal.
PlanCheck validate_plan(const MapfInstance& instance, const MapfPlan& plan);

}  // namespace manav
