#pragma once

#include <cstddef>
#include <vector>

#include "manav/grid_map.h"
#include "manav/theta_star.h"
#include "manav/vec2.h"

namespace manav {

enum class AgentMode { Individual, Coordinated };

struct AgentState {
  int id = 0;
  Point position{};
  Vec2 velocity{};
  double radius = 0.3;
  double max_speed = 1.0;
  double visibility_range = 6.0;
  Vec2 preferred_velocity{};
  AgentMode mode = AgentMode::Individual;
  int group_id = -1;
  Path path{};
  std::size_t cursor = 0;
};

// Permitted velocities x satisfy dot(normal, x - point) >= 0; |normal| = 1.
struct HalfPlane {
  Point point{};
  Vec2 normal{};
};

struct ObstacleSegment {
  Point a{};
  Point b{};
};

struct OrcaConfig {
  double tau = 5.0;
  double tau_obst = 2.0;
  int max_neighbors = 10;
  double safe_buffer = 0.19;
  // Rotate the preferred velocity by +1e-3 rad so exactly symmetric
  // encounters break the same way every run.
  bool perturb_ties = true;
};

// Agents within self.visibility_range (closed ball), nearest first, at most
// max_neighbors of them. Equal distances order by id.
std::vector<AgentState> visible_neighbors(const AgentState& self,
                                          const std::vector<AgentState>& all,
                                          int max_neighbors);

// Reciprocal constraint against one neighbor: velocities on the permitted
// side cannot collide with `other` within tau if the other agent concedes the
// mirrored half. Combined radius is r_self + r_other + 2 * safe_buffer;
// already-overlapping pairs get a constraint that resolves the overlap within
// dt along the center line.
HalfPlane compute_agent_halfplane(const AgentState& self, const AgentState& other,
                                  double tau, double dt, double safe_buffer);

// Maximal straight runs of blocked/free cell edges, map borders included.
std::vector<ObstacleSegment> extract_boundary_segments(const GridMap& map);

// One constraint per boundary segment within visibility range, inflated by
// self.radius + safe_buffer, horizon tau_obst, no reciprocity (walls do not
// move). Velocities already in collision with a segment are constrained
// through the origin of velocity space.
std::vector<HalfPlane> compute_obstacle_halfplanes(const AgentState& self,
                                                   const std::vector<ObstacleSegment>& segments,
                                                   double tau_obst, double safe_buffer);
std::vector<HalfPlane> compute_obstacle_halfplanes(const AgentState& self, const GridMap& map,
                                                   double tau_obst, double safe_buffer);

// Point of the constraint intersection (cut to |v| <= max_speed) closest to
// `preferred`; when the intersection is empty, the velocity minimizing the
// largest violation, keeping the first num_hard constraints inviolable.
Vec2 solve_velocity_lp(const std::vector<HalfPlane>& constraints, Vec2 preferred,
                       double max_speed, std::size_t num_hard = 0);

// Full per-step pipeline: obstacle constraints (hard), then neighbor
// constraints, solved against self.preferred_velocity.
Vec2 step_velocity(const AgentState& self, const std::vector<AgentState>& all,
                   const std::vector<ObstacleSegment>& segments, double dt,
                   const OrcaConfig& config);

}  // namespace manav
