#include "manav/simulator.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "manav/geometry.h"

namespace manav {

Simulator::Simulator(const GridMap* map, std::vector<AgentTask> tasks, SimConfig config)
    : map_(map), tasks_(std::move(tasks)), config_(config) {
  orca_.tau = config_.tau;
  orca_.tau_obst = config_.tau_obst;
  orca_.max_neighbors = config_.max_neighbors;
  orca_.safe_buffer = config_.safe_buffer;
  orca_.perturb_ties = config_.perturb_ties;
  segments_ = extract_boundary_segments(*map_);

  CoordParams coord_params;
  coord_params.trigger_k = config_.trigger_k;
  coord_params.dt = config_.dt;
  coord_params.max_speed = config_.max_speed;
  coord_params.start_eps = config_.start_eps;
  coord_params.cooldown_dissolve = config_.cooldown_dissolve;
  coord_params.cooldown_infeasible = config_.cooldown_infeasible;
  coord_params.orca = orca_;
  coordinator_ = std::make_unique<Coordinator>(map_, &segments_, coord_params);

  agents_.reserve(tasks_.size());
  for (std::size_t i = 0; i < tasks_.size(); ++i) {
    AgentState a;
    a.id = static_cast<int>(i);
    a.position = tasks_[i].start;
    a.radius = config_.agent_radius;
    a.max_speed = config_.max_speed;
    a.visibility_range = config_.visibility_range;
    try {
      a.path = plan_theta_star(*map_, tasks_[i].start, tasks_[i].goal, config_.clearance());
    } catch (const NoPathError&) {
      no_path_ = true;
    }
    agents_.push_back(std::move(a));
  }
  arrived_.assign(agents_.size(), 0);
  arrival_steps_.assign(agents_.size(), -1);
}

void Simulator::steer_individual(AgentState& a, const std::vector<AgentState>& snapshot) {
  const double clearance = config_.clearance();
  auto& waypoints = a.path.waypoints;
  if (arrived_[a.id] || waypoints.empty()) {
    // Parked agents yield when pressed but otherwise stay put.
    a.preferred_velocity = {0.0, 0.0};
    a.velocity = step_velocity(a, snapshot, segments_, config_.dt, orca_);
    return;
  }

  // The local goal changes only when the current one is reached; agents do
  // not shortcut to later waypoints they happen to see.
  while (a.cursor + 1 < waypoints.size() &&
         distance(a.position, waypoints[a.cursor]) <= config_.waypoint_eps) {
    ++a.cursor;
  }
  // Avoidance may have pushed the agent out of sight of its waypoint; repair
  // the path segment. The path is passed by copy so a failed repair keeps the
  // previous path for another try next step.
  const Point local_goal = waypoints[a.cursor];
  if (!map_->line_of_sight(a.position, local_goal, clearance)) {
    try {
      a.path = replan_segment(*map_, a.position, local_goal, a.path, a.cursor, clearance);
    } catch (const NoPathError&) {
    }
  }

  const Vec2 to_target = waypoints[a.cursor] - a.position;
  const double dist = norm(to_target);
  a.preferred_velocity = dist < 1e-12 ? Vec2{0.0, 0.0}
                                      : std::min(config_.max_speed, dist / config_.dt) *
                                            normalized(to_target);
  a.velocity = step_velocity(a, snapshot, segments_, config_.dt, orca_);
}

void Simulator::evaluate_arrivals(int step) {
  for (const AgentState& a : agents_) {
    if (distance(a.position, tasks_[a.id].goal) <= config_.goal_eps) {
      arrived_[a.id] = 1;
      if (arrival_steps_[a.id] < 0) arrival_steps_[a.id] = step;
    } else {
      arrived_[a.id] = 0;
      arrival_steps_[a.id] = -1;
    }
  }
}

bool Simulator::all_arrived() const {
  return std::all_of(arrived_.begin(), arrived_.end(), [](char c) { return c != 0; });
}

bool Simulator::audit_collisions(const std::vector<AgentState>& before, RunResult& result,
                                 int step) {
  for (std::size_t i = 0; i < agents_.size(); ++i) {
    for (std::size_t j = i + 1; j < agents_.size(); ++j) {
      const double limit = agents_[i].radius + agents_[j].radius - 1e-9;
      const double swept =
          dist_segment_segment(before[i].position, agents_[i].position, before[j].position,
                               agents_[j].position);
      if (distance(agents_[i].position, agents_[j].position) < limit || swept < limit) {
        result.status = RunStatus::Collision;
        result.collision_step = step;
        result.collision_agent_a = static_cast<int>(i);
        result.collision_agent_b = static_cast<int>(j);
        return true;
      }
    }
  }
  for (const AgentState& a : agents_) {
    if (map_->clearance_at(a.position, a.radius + 1.0) < a.radius - 1e-9) {
      result.status = RunStatus::Collision;
      result.collision_step = step;
      result.collision_agent_a = a.id;
      result.collision_agent_b = -1;
      return true;
    }
  }
  return false;
}

void Simulator::emit_trace(std::ostream* out, int step) const {
  if (!out) return;
  char line[192];
  for (const AgentState& a : agents_) {
    char tag = 'I';
    if (a.mode == AgentMode::Coordinated) {
      tag = coordinator_->is_executing(a.group_id) ? 'E' : 'C';
    }
    std::snprintf(line, sizeof line, "%d %d %.9f %.9f %.9f %.9f %c %d\n", step, a.id,
                  a.position.x, a.position.y, a.velocity.x, a.velocity.y, tag, a.group_id);
    *out << line;
  }
}

RunResult Simulator::run(std::ostream* trace) {
  RunResult result;
  result.arrival_steps.assign(agents_.size(), -1);
  if (no_path_) {
    result.status = RunStatus::NoPath;
    return result;
  }

  evaluate_arrivals(0);
  emit_trace(trace, 0);

  int completed = 0;
  while (!all_arrived() && completed < config_.max_steps) {
    const std::vector<AgentState> snapshot = agents_;

    for (AgentState& a : agents_) {
      if (a.mode == AgentMode::Individual) steer_individual(a, snapshot);
    }

    if (config_.coordination_enabled) {
      coordinator_->run_step(agents_, snapshot, arrived_, completed);
      coordinator_->advance_time();
    }

    for (AgentState& a : agents_) {
      if (auto planned = coordinator_->executing_position(a)) {
        a.velocity = (*planned - a.position) / config_.dt;
        a.position = *planned;
      } else {
        a.position += a.velocity * config_.dt;
      }
    }
    ++completed;

    if (audit_collisions(snapshot, result, completed)) {
      emit_trace(trace, completed);
      break;
    }
    evaluate_arrivals(completed);
    emit_trace(trace, completed);
  }

  result.steps = completed;
  result.coordination = coordinator_->counts();
  result.arrival_steps = arrival_steps_;
  if (result.status != RunStatus::Collision) {
    result.status = all_arrived() ? RunStatus::Success : RunStatus::Timeout;
  }
  if (result.status == RunStatus::Success) {
    for (int s : arrival_steps_) {
      result.makespan = std::max(result.makespan, s * config_.dt);
      result.flowtime += s * config_.dt;
    }
  }
  return result;
}

}  // namespace manav
