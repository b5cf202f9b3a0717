#include "manav/coordination.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <set>

namespace manav {

namespace {

Cell clamp_cell(Cell c, const PlanningArea& area) {
  return {std::clamp(c.i, area.min_corner.i, area.max_corner.i),
          std::clamp(c.j, area.min_corner.j, area.max_corner.j)};
}

// Area-confined variant of GridMap::nearest_free_cell: same expansion order
// (east, south, west, north), same crossing-blocked-cells wave, but the wave
// never leaves the planning area.
std::optional<Cell> nearest_free_in_area(const GridMap& map, const PlanningArea& area, Cell from,
                                         const std::set<Cell>& banned) {
  static constexpr int kDi[4] = {1, 0, -1, 0};
  static constexpr int kDj[4] = {0, 1, 0, -1};
  const int w = area.max_corner.i - area.min_corner.i + 1;
  const int h = area.max_corner.j - area.min_corner.j + 1;
  auto local = [&](Cell c) { return (c.j - area.min_corner.j) * w + (c.i - area.min_corner.i); };
  std::vector<char> seen(static_cast<std::size_t>(w) * h, 0);
  std::deque<Cell> frontier{from};
  seen[local(from)] = 1;
  while (!frontier.empty()) {
    const Cell c = frontier.front();
    frontier.pop_front();
    if (map.traversable(c) && banned.count(c) == 0) return c;
    for (int d = 0; d < 4; ++d) {
      const Cell n{c.i + kDi[d], c.j + kDj[d]};
      if (n.i < area.min_corner.i || n.i > area.max_corner.i || n.j < area.min_corner.j ||
          n.j > area.max_corner.j || seen[local(n)]) {
        continue;
      }
      seen[local(n)] = 1;
      frontier.push_back(n);
    }
  }
  return std::nullopt;
}

PlanningArea inflate_area(const PlanningArea& area, int cells, const GridMap& map) {
  PlanningArea out;
  out.min_corner = {std::max(0, area.min_corner.i - cells), std::max(0, area.min_corner.j - cells)};
  out.max_corner = {std::min(map.width() - 1, area.max_corner.i + cells),
                    std::min(map.height() - 1, area.max_corner.j + cells)};
  return out;
}

Point local_goal_of(const AgentState& agent) {
  const std::size_t last = agent.path.waypoints.empty() ? 0 : agent.path.waypoints.size() - 1;
  return agent.path.waypoints[std::min(agent.cursor, last)];
}

}  // namespace

bool detect_trigger(const AgentState& self, const std::vector<const AgentState*>& visible,
                    int k) {
  if (self.mode != AgentMode::Individual || self.path.waypoints.empty()) return false;
  if (static_cast<int>(visible.size()) < k) return false;
  return distance(self.position, local_goal_of(self)) <= self.visibility_range;
}

std::vector<int> form_group(int initiator_id, const std::vector<AgentState>& all) {
  auto neighbors = [&](const AgentState& center) {
    std::vector<int> out;
    for (const AgentState& other : all) {
      if (other.id != center.id &&
          distance(other.position, center.position) <= center.visibility_range) {
        out.push_back(other.id);
      }
    }
    return out;
  };

  const AgentState* initiator = nullptr;
  for (const AgentState& a : all) {
    if (a.id == initiator_id) initiator = &a;
  }
  std::set<int> members{initiator_id};
  std::vector<int> first_hop = neighbors(*initiator);
  members.insert(first_hop.begin(), first_hop.end());
  for (int id : first_hop) {
    for (const AgentState& a : all) {
      if (a.id == id) {
        std::vector<int> second = neighbors(a);
        members.insert(second.begin(), second.end());
      }
    }
  }
  return {members.begin(), members.end()};
}

PlanningArea compute_planning_area(const std::vector<Point>& positions, double r_init,
                                   const GridMap& map, bool square) {
  double min_x = std::numeric_limits<double>::infinity();
  double max_x = -min_x;
  double min_y = min_x;
  double max_y = -min_x;
  for (const Point& p : positions) {
    min_x = std::min(min_x, p.x);
    max_x = std::max(max_x, p.x);
    min_y = std::min(min_y, p.y);
    max_y = std::max(max_y, p.y);
  }
  if (square) {
    const double wx = max_x - min_x;
    const double wy = max_y - min_y;
    if (wx > wy) {
      const double mid = 0.5 * (min_y + max_y);
      min_y = mid - 0.5 * wx;
      max_y = mid + 0.5 * wx;
    } else if (wy > wx) {
      const double mid = 0.5 * (min_x + max_x);
      min_x = mid - 0.5 * wy;
      max_x = mid + 0.5 * wy;
    }
  }
  min_x -= r_init;
  max_x += r_init;
  min_y -= r_init;
  max_y += r_init;

  PlanningArea area;
  area.min_corner = {static_cast<int>(std::floor(min_x)), static_cast<int>(std::floor(min_y))};
  area.max_corner = {static_cast<int>(std::ceil(max_x)) - 1,
                     static_cast<int>(std::ceil(max_y)) - 1};
  area.max_corner.i = std::max(area.max_corner.i, area.min_corner.i);
  area.max_corner.j = std::max(area.max_corner.j, area.min_corner.j);
  area.min_corner = {std::clamp(area.min_corner.i, 0, map.width() - 1),
                     std::clamp(area.min_corner.j, 0, map.height() - 1)};
  area.max_corner = {std::clamp(area.max_corner.i, 0, map.width() - 1),
                     std::clamp(area.max_corner.j, 0, map.height() - 1)};
  return area;
}

std::optional<std::vector<Cell>> project_starts(const std::vector<const AgentState*>& members,
                                                const PlanningArea& area, const GridMap& map) {
  std::vector<Cell> cells;
  std::set<Cell> taken;
  for (const AgentState* member : members) {
    Cell cand = clamp_cell(map.cell_at(member->position), area);
    if (!map.traversable(cand) || taken.count(cand)) {
      std::optional<Cell> found = nearest_free_in_area(map, area, cand, taken);
      if (!found) return std::nullopt;
      cand = *found;
    }
    taken.insert(cand);
    cells.push_back(cand);
  }
  return cells;
}

std::optional<GoalProjection> project_goals(const std::vector<const AgentState*>& members,
                                            Point trigger_goal, const PlanningArea& area,
                                            const GridMap& map) {
  GoalProjection out;
  std::set<Cell> taken;
  for (const AgentState* member : members) {
    const auto& waypoints = member->path.waypoints;
    std::size_t index = std::min(member->cursor, waypoints.empty() ? 0 : waypoints.size() - 1);
    if (!waypoints.empty() && norm(waypoints[index] - trigger_goal) < 1e-9 &&
        index + 1 < waypoints.size()) {
      ++index;  // aim past the congested trigger goal when a successor exists
    }
    const Point waypoint = waypoints.empty() ? member->position : waypoints[index];
    Cell cand = clamp_cell(map.cell_at(waypoint), area);
    if (!map.traversable(cand) || taken.count(cand)) {
      std::optional<Cell> found = nearest_free_in_area(map, area, cand, taken);
      if (!found) return std::nullopt;
      cand = *found;
    }
    taken.insert(cand);
    out.cells.push_back(cand);
    out.resume_cursors.push_back(index);
  }
  return out;
}

Coordinator::Coordinator(const GridMap* map, const std::vector<ObstacleSegment>* segments,
                         CoordParams params)
    : map_(map), segments_(segments), params_(std::move(params)) {}

void Coordinator::emit(int step, const std::string& kind, const Group& g) {
  events_.push_back({step, kind, g.id, g.members, g.area});
}

void Coordinator::dissolve(Group& g, std::vector<AgentState>& agents, int step, int cooldown,
                           const std::string& kind) {
  for (std::size_t idx = 0; idx < g.members.size(); ++idx) {
    AgentState& a = agents[g.members[idx]];
    a.mode = AgentMode::Individual;
    a.group_id = -1;
    a.velocity = {0.0, 0.0};
    if (idx < g.resume_cursors.size()) {
      a.cursor = std::min(g.resume_cursors[idx],
                          a.path.waypoints.empty() ? 0 : a.path.waypoints.size() - 1);
    }
    cooldown_until_[g.members[idx]] = step + cooldown;
  }
  emit(step, kind, g);
  if (kind == "abort") {
    ++counts_.aborts;
  } else {
    ++counts_.dissolves;
  }
  groups_.erase(g.id);
}

bool Coordinator::recompute_plan(Group& g, std::vector<AgentState>& agents, int step) {
  (void)step;
  auto attempt = [&](const PlanningArea& area) {
    std::vector<const AgentState*> members;
    for (int id : g.members) members.push_back(&agents[id]);
    std::optional<std::vector<Cell>> starts = project_starts(members, area, *map_);
    if (!starts) return false;
    std::optional<GoalProjection> goals = project_goals(members, g.trigger_goal, area, *map_);
    if (!goals) return false;
    MapfInstance instance =
        build_grid_instance(*map_, area.min_corner, area.max_corner, *starts, goals->cells,
                            g.members);
    MapfResult result = solve_push_and_rotate(instance);
    if (result.outcome != MapfOutcome::Solved) return false;

    g.area = area;
    g.instance = std::move(instance);
    g.plan = assign_action_duration(std::move(result.plan), params_.max_speed, 1.0);
    g.starts = *starts;
    g.goals = goals->cells;
    g.resume_cursors = goals->resume_cursors;
    g.timeline.assign(g.members.size(), {});
    for (std::size_t m = 0; m < g.members.size(); ++m) {
      Cell at = g.starts[m];
      g.timeline[m].push_back(at);
      for (std::size_t t = 0; t < g.plan.length(); ++t) {
        const MapfAction& act = g.plan.actions[m][t];
        if (act.move) at = g.instance.vertices[act.to];
        g.timeline[m].push_back(at);
      }
    }
    g.phase = GroupPhase::MovingToStarts;
    g.exec_elapsed = 0.0;
    return true;
  };

  if (attempt(g.area)) return true;
  const PlanningArea bigger =
      inflate_area(g.area, static_cast<int>(std::ceil(g.r_init)), *map_);
  if ((bigger.min_corner.i != g.area.min_corner.i || bigger.min_corner.j != g.area.min_corner.j ||
       bigger.max_corner.i != g.area.max_corner.i || bigger.max_corner.j != g.area.max_corner.j) &&
      attempt(bigger)) {
    return true;
  }
  return false;
}

void Coordinator::check_immediate_execution(Group& g, const std::vector<AgentState>& agents) {
  if (g.phase != GroupPhase::MovingToStarts) return;
  for (std::size_t m = 0; m < g.members.size(); ++m) {
    if (distance(agents[g.members[m]].position, map_->center(g.starts[m])) > params_.start_eps) {
      return;
    }
  }
  g.phase = GroupPhase::Executing;
  g.exec_elapsed = -params_.dt;  // first integration snaps members onto start centers
}

void Coordinator::handle_intruders(std::vector<AgentState>& agents,
                                   const std::vector<AgentState>& snapshot, int step) {
  std::vector<int> ids;
  for (const auto& entry : groups_) ids.push_back(entry.first);
  for (int gid : ids) {
    auto it = groups_.find(gid);
    if (it == groups_.end()) continue;
    Group& g = it->second;
    std::vector<int> intruders;
    for (const AgentState& a : snapshot) {
      if (agents[a.id].mode != AgentMode::Individual) continue;
      if (!g.area.contains(agents[a.id].position)) continue;
      bool seen = false;
      for (int m : g.members) {
        if (distance(agents[m].position, agents[a.id].position) <=
            agents[m].visibility_range) {
          seen = true;
          break;
        }
      }
      if (seen) intruders.push_back(a.id);
    }
    if (intruders.empty()) continue;

    std::set<int> member_set(g.members.begin(), g.members.end());
    member_set.insert(intruders.begin(), intruders.end());
    g.members.assign(member_set.begin(), member_set.end());
    for (int id : intruders) {
      agents[id].mode = AgentMode::Coordinated;
      agents[id].group_id = g.id;
    }
    ++counts_.intrusions;
    if (recompute_plan(g, agents, step)) {
      emit(step, "intruder", g);
      check_immediate_execution(g, agents);
    } else {
      dissolve(g, agents, step, params_.cooldown_infeasible, "abort");
    }
  }
}

void Coordinator::merge_executing(std::vector<AgentState>& agents, int step) {
  bool merged = true;
  while (merged) {
    merged = false;
    std::vector<int> ids;
    for (const auto& entry : groups_) ids.push_back(entry.first);
    for (std::size_t i = 0; i < ids.size() && !merged; ++i) {
      for (std::size_t j = i + 1; j < ids.size() && !merged; ++j) {
        Group& a = groups_.at(ids[i]);
        Group& b = groups_.at(ids[j]);
        if (a.phase != GroupPhase::Executing || b.phase != GroupPhase::Executing) continue;
        bool close = false;
        for (int ma : a.members) {
          for (int mb : b.members) {
            if (distance(agents[ma].position, agents[mb].position) <=
                std::max(agents[ma].visibility_range, agents[mb].visibility_range)) {
              close = true;
              break;
            }
          }
          if (close) break;
        }
        if (!close) continue;

        std::set<int> member_set(a.members.begin(), a.members.end());
        member_set.insert(b.members.begin(), b.members.end());
        a.members.assign(member_set.begin(), member_set.end());
        for (int id : b.members) agents[id].group_id = a.id;
        groups_.erase(b.id);
        ++counts_.merges;
        if (recompute_plan(a, agents, step)) {
          emit(step, "merge", a);
          check_immediate_execution(a, agents);
        } else {
          dissolve(a, agents, step, params_.cooldown_infeasible, "abort");
        }
        merged = true;
      }
    }
  }
}

void Coordinator::try_formation(std::vector<AgentState>& agents,
                                const std::vector<AgentState>& snapshot,
                                const std::vector<char>& arrived, int step) {
  for (const AgentState& self : agents) {
    if (self.mode != AgentMode::Individual) continue;
    if (arrived[self.id]) continue;  // parked agents never initiate
    if (step < cooldown_until_[self.id]) continue;
    std::vector<const AgentState*> visible;
    for (const AgentState& other : snapshot) {
      if (other.id != self.id &&
          distance(other.position, self.position) <= self.visibility_range) {
        visible.push_back(&other);
      }
    }
    if (!detect_trigger(self, visible, params_.trigger_k)) continue;

    std::set<int> member_set;
    {
      std::vector<int> two_hop = form_group(self.id, snapshot);
      member_set.insert(two_hop.begin(), two_hop.end());
    }
    // Absorb groups sharing members, then groups whose areas overlap ours.
    std::vector<int> absorbed;
    for (const auto& entry : groups_) {
      for (int m : entry.second.members) {
        if (member_set.count(m)) {
          absorbed.push_back(entry.first);
          break;
        }
      }
    }
    for (int gid : absorbed) {
      const Group& g = groups_.at(gid);
      member_set.insert(g.members.begin(), g.members.end());
    }

    const double r_init = self.visibility_range;
    auto area_of = [&](const std::set<int>& ids) {
      std::vector<Point> positions;
      for (int id : ids) positions.push_back(agents[id].position);
      return compute_planning_area(positions, r_init, *map_, params_.square_area);
    };
    PlanningArea area = area_of(member_set);
    bool grew = true;
    while (grew) {
      grew = false;
      for (const auto& entry : groups_) {
        if (std::find(absorbed.begin(), absorbed.end(), entry.first) != absorbed.end()) continue;
        if (area.overlaps(entry.second.area)) {
          absorbed.push_back(entry.first);
          member_set.insert(entry.second.members.begin(), entry.second.members.end());
          area = area_of(member_set);
          grew = true;
          break;
        }
      }
    }
    if (member_set.size() < 2) return;

    int gid = next_group_id_++;
    for (int a : absorbed) gid = std::min(gid, a);
    counts_.merges += static_cast<int>(absorbed.size());
    for (int a : absorbed) groups_.erase(a);

    Group group;
    group.id = gid;
    group.r_init = r_init;
    group.trigger_goal = local_goal_of(self);
    group.members.assign(member_set.begin(), member_set.end());
    group.area = area;
    group.phase = GroupPhase::Forming;
    Group& g = groups_.emplace(gid, std::move(group)).first->second;
    for (int id : g.members) {
      agents[id].mode = AgentMode::Coordinated;
      agents[id].group_id = gid;
    }
    ++counts_.formations;
    if (recompute_plan(g, agents, step)) {
      emit(step, "formation", g);
      check_immediate_execution(g, agents);
    } else {
      dissolve(g, agents, step, params_.cooldown_infeasible, "abort");
    }
    return;  // at most one formation per step
  }
}

void Coordinator::run_step(std::vector<AgentState>& agents,
                           const std::vector<AgentState>& snapshot,
                           const std::vector<char>& arrived, int step) {
  if (cooldown_until_.size() < agents.size()) cooldown_until_.resize(agents.size(), 0);

  // Completed plans hand their members back first.
  std::vector<int> ids;
  for (const auto& entry : groups_) ids.push_back(entry.first);
  for (int gid : ids) {
    auto it = groups_.find(gid);
    if (it == groups_.end()) continue;
    Group& g = it->second;
    if (g.phase == GroupPhase::Executing && g.exec_elapsed >= g.plan_duration() - 1e-9) {
      dissolve(g, agents, step, params_.cooldown_dissolve, "dissolve");
    }
  }

  for (auto& entry : groups_) {
    Group& g = entry.second;
    if (g.phase == GroupPhase::MovingToStarts) check_immediate_execution(g, agents);
  }

  handle_intruders(agents, snapshot, step);
  merge_executing(agents, step);
  try_formation(agents, snapshot, arrived, step);

  // Members converging on their projected starts steer with avoidance.
  for (auto& entry : groups_) {
    Group& g = entry.second;
    if (g.phase != GroupPhase::MovingToStarts) continue;
    for (std::size_t m = 0; m < g.members.size(); ++m) {
      AgentState& a = agents[g.members[m]];
      const Point target = map_->center(g.starts[m]);
      const Vec2 to_target = target - a.position;
      const double dist = norm(to_target);
      a.preferred_velocity = dist < 1e-12
                                 ? Vec2{0.0, 0.0}
                                 : std::min(params_.max_speed, dist / params_.dt) *
                                       normalized(to_target);
      if (g.phase == GroupPhase::Executing) ++orca_calls_while_executing_;
      a.velocity = step_velocity(a, snapshot, *segments_, params_.dt, params_.orca);
    }
  }
}

void Coordinator::advance_time() {
  for (auto& entry : groups_) {
    Group& g = entry.second;
    if (g.phase == GroupPhase::Executing) {
      g.exec_elapsed = std::min(g.exec_elapsed + params_.dt, g.plan_duration());
    }
  }
}

std::optional<Point> Coordinator::executing_position(const AgentState& agent) const {
  auto it = groups_.find(agent.group_id);
  if (it == groups_.end() || it->second.phase != GroupPhase::Executing) return std::nullopt;
  const Group& g = it->second;
  auto member = std::lower_bound(g.members.begin(), g.members.end(), agent.id);
  if (member == g.members.end() || *member != agent.id) return std::nullopt;
  const std::size_t m = static_cast<std::size_t>(member - g.members.begin());

  const std::size_t length = g.plan.length();
  if (length == 0) return map_->center(g.starts[m]);
  const double t = std::clamp(g.exec_elapsed, 0.0, g.plan_duration());
  std::size_t index = std::min(static_cast<std::size_t>(t / g.plan.action_duration), length - 1);
  const double frac = (t - index * g.plan.action_duration) / g.plan.action_duration;
  const Point from = map_->center(g.timeline[m][index]);
  const Point to = map_->center(g.timeline[m][index + 1]);
  return from + frac * (to - from);
}

bool Coordinator::is_executing(int group_id) const {
  auto it = groups_.find(group_id);
  return it != groups_.end() && it->second.phase == GroupPhase::Executing;
}

}  // namespace manav
