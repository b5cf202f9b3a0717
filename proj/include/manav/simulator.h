#pragma once

#include <iosfwd>
#include <memory>
#include <vector>

#include "manav/coordination.h"
#include "manav/grid_map.h"
#include "manav/orca.h"
#include "manav/theta_star.h"

namespace manav {

struct AgentTask {
  Point start;
  Point goal;
};

struct SimConfig {
  double dt = 0.25;
  double agent_radius = 0.3;
  double safe_buffer = 0.19;  // extra clearance for planning and avoidance
  double max_speed = 1.0;
  double visibility_range = 6.0;
  int trigger_k = 3;
  int max_steps = 12800;
  double waypoint_eps = 0.25;  // a waypoint this close counts as passed
  double goal_eps = 0.15;      // final-goal arrival tolerance
  double start_eps = 0.1;      // arrival tolerance at projected start centers
  int cooldown_dissolve = 10;
  int cooldown_infeasible = 50;
  bool coordination_enabled = true;
  double tau = 5.0;
  double tau_obst = 2.0;
  int max_neighbors = 10;
  bool perturb_ties = true;

  // Planner and avoidance keep this much space from obstacles.
  double clearance() const { return agent_radius + safe_buffer; }
  // One step may not cover more than a diameter, or the swept-collision
  // audit could miss tunneling.
  bool valid() const { return max_speed * dt <= 2.0 * agent_radius; }
};

enum class RunStatus { Success, Timeout, Collision, NoPath, Internal };

inline const char* to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Success: return "success";
    case RunStatus::Timeout: return "timeout";
    case RunStatus::Collision: return "collision";
    case RunStatus::NoPath: return "no_path";
    case RunStatus::Internal: return "internal";
  }
  return "internal";
}

struct RunResult {
  RunStatus status = RunStatus::Timeout;
  int steps = 0;           // simulation steps executed
  double makespan = 0.0;   // latest final arrival, seconds (success only)
  double flowtime = 0.0;   // summed final arrivals, seconds (success only)
  std::vector<int> arrival_steps;  // step of final arrival per agent; -1 if never
  CoordCounts coordination;
  int collision_step = -1;
  int collision_agent_a = -1;
  int collision_agent_b = -1;  // -1: collided with map geometry
};

// Discrete-time multi-agent navigation loop: per step it freezes a snapshot,
// steers individual agents along their any-angle paths with reciprocal
// avoidance, runs the coordinated-group lifecycle, integrates motion
// (members of executing groups follow their joint plan exactly), then audits
// collisions and arrivals. Deterministic for a fixed map, task list, and
// configuration.
class Simulator {
 public:
  Simulator(const GridMap* map, std::vector<AgentTask> tasks, SimConfig config = {});

  // Runs to completion. When `trace` is given, writes one line per agent per
  // step ("step id x y vx vy mode group"), starting with the t=0 baseline.
  RunResult run(std::ostream* trace = nullptr);

  const std::vector<AgentState>& agents() const { return agents_; }
  const Coordinator& coordinator() const { return *coordinator_; }

 private:
  void steer_individual(AgentState& a, const std::vector<AgentState>& snapshot);
  void evaluate_arrivals(int step);
  bool all_arrived() const;
  bool audit_collisions(const std::vector<AgentState>& before, RunResult& result, int step);
  void emit_trace(std::ostream* out, int step) const;

  const GridMap* map_;
  std::vector<AgentTask> tasks_;
  SimConfig config_;
  OrcaConfig orca_;
  std::vector<ObstacleSegment> segments_;
  std::vector<AgentState> agents_;
  std::unique_ptr<Coordinator> coordinator_;
  std::vector<char> arrived_;
  std::vector<int> arrival_steps_;
  bool no_path_ = false;
};

}  // namespace manav
