#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "manav/grid_map.h"
#include "manav/orca.h"
#include "manav/push_and_rotate.h"

namespace manav {

// Inclusive cell rectangle in which a coordinated group plans jointly.
struct PlanningArea {
  Cell min_corner{0, 0};
  Cell max_corner{0, 0};

  bool contains(Point p) const {
    return p.x >= min_corner.i && p.x <= max_corner.i + 1.0 && p.y >= min_corner.j &&
           p.y <= max_corner.j + 1.0;
  }
  bool overlaps(const PlanningArea& other) const {
    return min_corner.i <= other.max_corner.i && other.min_corner.i <= max_corner.i &&
           min_corner.j <= other.max_corner.j && other.min_corner.j <= max_corner.j;
  }
};

enum class GroupPhase { Forming, MovingToStarts, Executing };

// True when the agent is near its current waypoint and crowded: the waypoint
// lies within its visibility range and at least k other agents are visible.
bool detect_trigger(const AgentState& self, const std::vector<const AgentState*>& visible, int k);

// Closed 2-hop visibility neighborhood of the initiator, using each agent's
// own visibility range. Returns sorted agent ids (initiator included).
std::vector<int> form_group(int initiator_id, const std::vector<AgentState>& all);

// Bounding box of the positions, expanded to a square about the shorter
// side's midpoint (when square is set), inflated by r_init on every side,
// converted to cells (floor of min, ceil of max minus one), clipped to map.
PlanningArea compute_planning_area(const std::vector<Point>& positions, double r_init,
                                   const GridMap& map, bool square = true);

// Per-member start cells, members processed in ascending id: own cell when
// free and unclaimed, else the nearest free unclaimed cell inside the area.
// nullopt when some member cannot be placed.
std::optional<std::vector<Cell>> project_starts(const std::vector<const AgentState*>& members,
                                                const PlanningArea& area, const GridMap& map);

struct GoalProjection {
  std::vector<Cell> cells;
  std::vector<std::size_t> resume_cursors;  // waypoint index to resume at hand-back
};

// Per-member goal cells: the member's current waypoint, or its successor when
// the waypoint equals the trigger goal, clamped into the area and resolved
// for blockage/duplicates like project_starts.
std::optional<GoalProjection> project_goals(const std::vector<const AgentState*>& members,
                                            Point trigger_goal, const PlanningArea& area,
                                            const GridMap& map);

struct CoordEvent {
  int step = 0;
  std::string kind;  // formation | execute | dissolve | merge | intruder | abort
  int group = -1;
  std::vector<int> members;
  PlanningArea area;
};

struct CoordCounts {
  int formations = 0;
  int merges = 0;
  int intrusions = 0;
  int dissolves = 0;
  int aborts = 0;
};

struct CoordParams {
  int trigger_k = 3;
  double dt = 0.25;
  double max_speed = 1.0;
  double start_eps = 0.1;       // arrival tolerance at projected start centers
  int cooldown_dissolve = 10;   // steps before a former member may re-trigger
  int cooldown_infeasible = 50;
  bool square_area = true;
  OrcaConfig orca;
};

// Owns the coordinated-group lifecycle: trigger detection, formation with
// merging, MAPF projection and solving, phased execution, intruder handling,
// and hand-back. Driven once per simulation step by the simulator.
class Coordinator {
 public:
  Coordinator(const GridMap* map, const std::vector<ObstacleSegment>* segments,
              CoordParams params);

  // Lifecycle pass (simulation phase 3). Reads geometry from the frozen
  // snapshot, mutates live agents' modes/group ids, and computes avoidance
  // velocities for members moving to their starts. `arrived` excludes agents
  // at their final goals from initiating.
  void run_step(std::vector<AgentState>& agents, const std::vector<AgentState>& snapshot,
                const std::vector<char>& arrived, int step);

  // Advances every executing group's clock by dt (simulation phase 4).
  void advance_time();

  // Interpolated plan position for a member of an executing group.
  std::optional<Point> executing_position(const AgentState& agent) const;

  bool is_executing(int group_id) const;

  const std::vector<CoordEvent>& events() const { return events_; }
  const CoordCounts& counts() const { return counts_; }

  // Avoidance calls made on behalf of executing members; zero by design.
  int orca_calls_while_executing() const { return orca_calls_while_executing_; }

 private:
  struct Group {
    int id = -1;
    double r_init = 0.0;
    Point trigger_goal;
    std::vector<int> members;  // ascending agent ids
    PlanningArea area;
    MapfInstance instance;
    MapfPlan plan;
    std::vector<Cell> starts;
    std::vector<Cell> goals;
    std::vector<std::vector<Cell>> timeline;  // per member, cell after each index
    std::vector<std::size_t> resume_cursors;
    GroupPhase phase = GroupPhase::Forming;
    double exec_elapsed = 0.0;

    double plan_duration() const { return plan.action_duration * plan.length(); }
  };

  void emit(int step, const std::string& kind, const Group& g);
  void dissolve(Group& g, std::vector<AgentState>& agents, int step, int cooldown,
                const std::string& kind);
  // Projects starts/goals and solves; inflates the area once on failure.
  bool recompute_plan(Group& g, std::vector<AgentState>& agents, int step);
  void check_immediate_execution(Group& g, const std::vector<AgentState>& agents);
  void handle_intruders(std::vector<AgentState>& agents, const std::vector<AgentState>& snapshot,
                        int step);
  void merge_executing(std::vector<AgentState>& agents, int step);
  void try_formation(std::vector<AgentState>& agents, const std::vector<AgentState>& snapshot,
                     const std::vector<char>& arrived, int step);

  const GridMap* map_;
  const std::vector<ObstacleSegment>* segments_;
  CoordParams params_;
  std::map<int, Group> groups_;
  int next_group_id_ = 0;
  std::vector<int> cooldown_until_;
  std::vector<CoordEvent> events_;
  CoordCounts counts_;
  int orca_calls_while_executing_ = 0;
};

}  // namespace manav
