#include "manav/orca.h"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>

#include "manav/geometry.h"

namespace manav {
namespace {

constexpr double kEpsilon = 1e-10;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Internal line form: permitted side is the left of `direction`, so a
// HalfPlane normal n maps to direction (n.y, -n.x) and back.
struct Line {
  Vec2 point{};
  Vec2 direction{};
};

Line to_line(const HalfPlane& hp) { return {hp.point, {hp.normal.y, -hp.normal.x}}; }

HalfPlane to_halfplane(const Line& line) {
  return {line.point, {-line.direction.y, line.direction.x}};
}

Vec2 normalized_or(const Vec2& v, const Vec2& fallback) {
  const double n = norm(v);
  return n > kEpsilon ? v / n : fallback;
}

// Optimum on the boundary of lines[line_no], clipped by the earlier lines and
// the speed disc. Returns false when that chord is empty.
bool solve_on_line(const std::vector<Line>& lines, const std::size_t line_no,
                   const double radius, const Vec2 opt, const bool direction_opt,
                   Vec2& result) {
  const Line& line = lines[line_no];
  const double dot_product = dot(line.point, line.direction);
  const double discriminant = dot_product * dot_product + radius * radius - norm_sq(line.point);
  if (discriminant < 0.0) return false;

  const double sqrt_disc = std::sqrt(discriminant);
  double t_left = -dot_product - sqrt_disc;
  double t_right = -dot_product + sqrt_disc;

  for (std::size_t i = 0; i < line_no; ++i) {
    const double denominator = det(line.direction, lines[i].direction);
    const double numerator = det(lines[i].direction, line.point - lines[i].point);
    if (std::abs(denominator) <= kEpsilon) {
      if (numerator < 0.0) return false;
      continue;
    }
    const double t = numerator / denominator;
    if (denominator >= 0.0)
      t_right = std::min(t_right, t);
    else
      t_left = std::max(t_left, t);
    if (t_left > t_right) return false;
  }

  if (direction_opt) {
    result = dot(opt, line.direction) > 0.0 ? line.point + t_right * line.direction
                                            : line.point + t_left * line.direction;
  } else {
    const double t = dot(line.direction, opt - line.point);
    if (t < t_left)
      result = line.point + t_left * line.direction;
    else if (t > t_right)
      result = line.point + t_right * line.direction;
    else
      result = line.point + t * line.direction;
  }
  return true;
}

// Incremental feasibility pass; returns lines.size() on success or the index
// of the first unsatisfiable line (result then holds the last feasible point).
std::size_t solve_feasible(const std::vector<Line>& lines, const double radius,
                           const Vec2 opt, const bool direction_opt, Vec2& result) {
  if (direction_opt)
    result = opt * radius;
  else if (norm_sq(opt) > radius * radius)
    result = normalized(opt) * radius;
  else
    result = opt;

  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (det(lines[i].direction, lines[i].point - result) > 0.0) {
      const Vec2 temp = result;
      if (!solve_on_line(lines, i, radius, opt, direction_opt, result)) {
        result = temp;
        return i;
      }
    }
  }
  return lines.size();
}

// Infeasible fallback: walk the remaining lines, each time minimizing the
// largest violation among the soft lines seen so far while keeping the first
// num_hard lines satisfied.
void solve_min_violation(const std::vector<Line>& lines, const std::size_t num_hard,
                         const std::size_t begin_line, const double radius, Vec2& result) {
  double distance = 0.0;
  for (std::size_t i = begin_line; i < lines.size(); ++i) {
    if (det(lines[i].direction, lines[i].point - result) <= distance) continue;
    std::vector<Line> proj(lines.begin(),
                           lines.begin() + static_cast<std::ptrdiff_t>(num_hard));
    for (std::size_t j = num_hard; j < i; ++j) {
      Line line;
      const double determinant = det(lines[i].direction, lines[j].direction);
      if (std::abs(determinant) <= kEpsilon) {
        if (dot(lines[i].direction, lines[j].direction) > 0.0) continue;
        line.point = 0.5 * (lines[i].point + lines[j].point);
      } else {
        line.point = lines[i].point +
                     (det(lines[j].direction, lines[i].point - lines[j].point) / determinant) *
                         lines[i].direction;
      }
      line.direction = normalized(lines[j].direction - lines[i].direction);
      proj.push_back(line);
    }
    const Vec2 temp = result;
    if (solve_feasible(proj, radius, {-lines[i].direction.y, lines[i].direction.x}, true,
                       result) < proj.size())
      result = temp;
    distance = det(lines[i].direction, lines[i].point - result);
  }
}

}  // namespace

std::vector<AgentState> visible_neighbors(const AgentState& self,
                                          const std::vector<AgentState>& all,
                                          const int max_neighbors) {
  std::vector<const AgentState*> candidates;
  const double range_sq = self.visibility_range * self.visibility_range;
  for (const AgentState& other : all) {
    if (other.id == self.id) continue;
    if (norm_sq(other.position - self.position) <= range_sq) candidates.push_back(&other);
  }
  std::sort(candidates.begin(), candidates.end(),
            [&](const AgentState* a, const AgentState* b) {
              const double da = norm_sq(a->position - self.position);
              const double db = norm_sq(b->position - self.position);
              if (da != db) return da < db;
              return a->id < b->id;
            });
  if (max_neighbors >= 0 && candidates.size() > static_cast<std::size_t>(max_neighbors))
    candidates.resize(static_cast<std::size_t>(max_neighbors));
  std::vector<AgentState> result;
  result.reserve(candidates.size());
  for (const AgentState* c : candidates) result.push_back(*c);
  return result;
}

HalfPlane compute_agent_halfplane(const AgentState& self, const AgentState& other,
                                  const double tau, const double dt,
                                  const double safe_buffer) {
  const Vec2 rel_pos = other.position - self.position;
  const Vec2 rel_vel = self.velocity - other.velocity;
  const double dist_sq = norm_sq(rel_pos);
  const double combined_r = self.radius + other.radius + 2.0 * safe_buffer;
  const double combined_r_sq = combined_r * combined_r;

  if (dist_sq <= kEpsilon) {
    std::cerr << "orca: agents " << self.id << " and " << other.id
              << " coincide; separating along +x\n";
    const Vec2 n{1.0, 0.0};
    const Vec2 u = (combined_r / dt) * n;
    return {self.velocity + 0.5 * u, n};
  }

  if (dist_sq <= combined_r_sq) {
    // Already intruding: push the pair apart far enough to clear within dt.
    const double dist = std::sqrt(dist_sq);
    const Vec2 n = -rel_pos / dist;
    const Vec2 u = ((combined_r - dist) / dt) * n;
    return {self.velocity + 0.5 * u, n};
  }

  Vec2 dir;
  Vec2 u;
  const Vec2 w = rel_vel - rel_pos / tau;
  const double w_len_sq = norm_sq(w);
  const double dot1 = dot(w, rel_pos);
  if (dot1 < 0.0 && dot1 * dot1 > combined_r_sq * w_len_sq) {
    // Closest escape crosses the cutoff arc of the truncated cone.
    const double w_len = std::sqrt(w_len_sq);
    const Vec2 unit_w = w / w_len;
    dir = {unit_w.y, -unit_w.x};
    u = (combined_r / tau - w_len) * unit_w;
  } else {
    // Closest escape crosses one of the cone legs.
    const double leg = std::sqrt(dist_sq - combined_r_sq);
    if (det(rel_pos, w) > 0.0) {
      dir = Vec2{rel_pos.x * leg - rel_pos.y * combined_r,
                 rel_pos.x * combined_r + rel_pos.y * leg} /
            dist_sq;
    } else {
      dir = -Vec2{rel_pos.x * leg + rel_pos.y * combined_r,
                  -rel_pos.x * combined_r + rel_pos.y * leg} /
            dist_sq;
    }
    u = dot(rel_vel, dir) * dir - rel_vel;
  }
  return {self.velocity + 0.5 * u, {-dir.y, dir.x}};
}

std::vector<ObstacleSegment> extract_boundary_segments(const GridMap& map) {
  std::vector<ObstacleSegment> segments;
  // Vertical faces x = i between columns i-1 and i; out of bounds counts as
  // blocked, which emits the four map borders as ordinary faces.
  for (int i = 0; i <= map.width(); ++i) {
    int run_start = -1;
    for (int j = 0; j <= map.height(); ++j) {
      const bool face =
          j < map.height() && (map.blocked({i - 1, j}) != map.blocked({i, j}));
      if (face && run_start < 0) run_start = j;
      if (!face && run_start >= 0) {
        segments.push_back({{static_cast<double>(i), static_cast<double>(run_start)},
                            {static_cast<double>(i), static_cast<double>(j)}});
        run_start = -1;
      }
    }
  }
  for (int j = 0; j <= map.height(); ++j) {
    int run_start = -1;
    for (int i = 0; i <= map.width(); ++i) {
      const bool face =
          i < map.width() && (map.blocked({i, j - 1}) != map.blocked({i, j}));
      if (face && run_start < 0) run_start = i;
      if (!face && run_start >= 0) {
        segments.push_back({{static_cast<double>(run_start), static_cast<double>(j)},
                            {static_cast<double>(i), static_cast<double>(j)}});
        run_start = -1;
      }
    }
  }
  return segments;
}

std::vector<HalfPlane> compute_obstacle_halfplanes(const AgentState& self,
                                                   const std::vector<ObstacleSegment>& segments,
                                                   const double tau_obst,
                                                   const double safe_buffer) {
  std::vector<HalfPlane> result;
  const double r = self.radius + safe_buffer;
  const double radius_sq = r * r;
  const double inv_t = 1.0 / tau_obst;

  for (const ObstacleSegment& seg : segments) {
    if (dist_point_segment(self.position, seg.a, seg.b) > self.visibility_range) continue;

    // Faces are double-sided; orient so the agent sits on the right of a->b.
    Point a = seg.a;
    Point b = seg.b;
    if (det(b - a, self.position - a) > 0.0) std::swap(a, b);

    const Vec2 rel1 = a - self.position;
    const Vec2 rel2 = b - self.position;
    const Vec2 obst_vec = b - a;
    const Vec2 unit_dir = normalized(obst_vec);
    const double dist_sq1 = norm_sq(rel1);
    const double dist_sq2 = norm_sq(rel2);
    const double s = dot(-rel1, obst_vec) / norm_sq(obst_vec);
    const double dist_sq_line = norm_sq(-rel1 - s * obst_vec);

    Line line;
    if (s < 0.0 && dist_sq1 <= radius_sq) {
      // Already touching the a endpoint.
      line.point = {0.0, 0.0};
      line.direction = normalized(Vec2{-rel1.y, rel1.x});
      result.push_back(to_halfplane(line));
      continue;
    }
    if (s > 1.0 && dist_sq2 <= radius_sq) {
      // Already touching the b endpoint.
      line.point = {0.0, 0.0};
      line.direction = normalized(Vec2{-rel2.y, rel2.x});
      result.push_back(to_halfplane(line));
      continue;
    }
    if (s >= 0.0 && s <= 1.0 && dist_sq_line <= radius_sq) {
      // Already touching the face itself.
      line.point = {0.0, 0.0};
      line.direction = -unit_dir;
      result.push_back(to_halfplane(line));
      continue;
    }

    // Not in collision: build the truncated cone. An endpoint seen edge-on
    // collapses the cone to that endpoint's circle.
    Vec2 left_leg;
    Vec2 right_leg;
    Vec2 cut1 = rel1;
    Vec2 cut2 = rel2;
    bool collapsed = false;
    if (s < 0.0 && dist_sq_line <= radius_sq) {
      collapsed = true;
      cut2 = rel1;
      const double leg1 = std::sqrt(dist_sq1 - radius_sq);
      left_leg = Vec2{rel1.x * leg1 - rel1.y * r, rel1.x * r + rel1.y * leg1} / dist_sq1;
      right_leg = Vec2{rel1.x * leg1 + rel1.y * r, -rel1.x * r + rel1.y * leg1} / dist_sq1;
    } else if (s > 1.0 && dist_sq_line <= radius_sq) {
      collapsed = true;
      cut1 = rel2;
      const double leg2 = std::sqrt(dist_sq2 - radius_sq);
      left_leg = Vec2{rel2.x * leg2 - rel2.y * r, rel2.x * r + rel2.y * leg2} / dist_sq2;
      right_leg = Vec2{rel2.x * leg2 + rel2.y * r, -rel2.x * r + rel2.y * leg2} / dist_sq2;
    } else {
      const double leg1 = std::sqrt(dist_sq1 - radius_sq);
      left_leg = Vec2{rel1.x * leg1 - rel1.y * r, rel1.x * r + rel1.y * leg1} / dist_sq1;
      const double leg2 = std::sqrt(dist_sq2 - radius_sq);
      right_leg = Vec2{rel2.x * leg2 + rel2.y * r, -rel2.x * r + rel2.y * leg2} / dist_sq2;
    }

    const Vec2 left_cutoff = inv_t * cut1;
    const Vec2 right_cutoff = inv_t * cut2;
    const Vec2 cutoff_vec = right_cutoff - left_cutoff;
    const double t = collapsed
                         ? 0.5
                         : dot(self.velocity - left_cutoff, cutoff_vec) / norm_sq(cutoff_vec);
    const double t_left = dot(self.velocity - left_cutoff, left_leg);
    const double t_right = dot(self.velocity - right_cutoff, right_leg);

    if ((t < 0.0 && t_left < 0.0) || (collapsed && t_left < 0.0 && t_right < 0.0)) {
      const Vec2 unit_w =
          normalized_or(self.velocity - left_cutoff, {-unit_dir.y, unit_dir.x});
      line.direction = {unit_w.y, -unit_w.x};
      line.point = left_cutoff + (r * inv_t) * unit_w;
    } else if (t > 1.0 && t_right < 0.0) {
      const Vec2 unit_w =
          normalized_or(self.velocity - right_cutoff, {-unit_dir.y, unit_dir.x});
      line.direction = {unit_w.y, -unit_w.x};
      line.point = right_cutoff + (r * inv_t) * unit_w;
    } else {
      const double d_cutoff =
          (t < 0.0 || t > 1.0 || collapsed)
              ? kInf
              : norm_sq(self.velocity - (left_cutoff + t * cutoff_vec));
      const double d_left =
          t_left < 0.0 ? kInf : norm_sq(self.velocity - (left_cutoff + t_left * left_leg));
      const double d_right =
          t_right < 0.0 ? kInf
                        : norm_sq(self.velocity - (right_cutoff + t_right * right_leg));
      if (d_cutoff <= d_left && d_cutoff <= d_right) {
        line.direction = -unit_dir;
        line.point = left_cutoff + (r * inv_t) * Vec2{-line.direction.y, line.direction.x};
      } else if (d_left <= d_right) {
        line.direction = left_leg;
        line.point = left_cutoff + (r * inv_t) * Vec2{-line.direction.y, line.direction.x};
      } else {
        line.direction = -right_leg;
        line.point = right_cutoff + (r * inv_t) * Vec2{-line.direction.y, line.direction.x};
      }
    }
    result.push_back(to_halfplane(line));
  }
  return result;
}

std::vector<HalfPlane> compute_obstacle_halfplanes(const AgentState& self, const GridMap& map,
                                                   const double tau_obst,
                                                   const double safe_buffer) {
  return compute_obstacle_halfplanes(self, extract_boundary_segments(map), tau_obst,
                                     safe_buffer);
}

Vec2 solve_velocity_lp(const std::vector<HalfPlane>& constraints, const Vec2 preferred,
                       const double max_speed, const std::size_t num_hard) {
  std::vector<Line> lines;
  lines.reserve(constraints.size());
  for (const HalfPlane& hp : constraints) lines.push_back(to_line(hp));
  Vec2 result;
  const std::size_t fail = solve_feasible(lines, max_speed, preferred, false, result);
  if (fail < lines.size()) solve_min_violation(lines, num_hard, fail, max_speed, result);
  return result;
}

Vec2 step_velocity(const AgentState& self, const std::vector<AgentState>& all,
                   const std::vector<ObstacleSegment>& segments, const double dt,
                   const OrcaConfig& config) {
  std::vector<HalfPlane> planes =
      compute_obstacle_halfplanes(self, segments, config.tau_obst, config.safe_buffer);
  const std::size_t num_hard = planes.size();
  for (const AgentState& other : visible_neighbors(self, all, config.max_neighbors))
    planes.push_back(compute_agent_halfplane(self, other, config.tau, dt, config.safe_buffer));
  const Vec2 preferred =
      config.perturb_ties ? rotated(self.preferred_velocity, 1e-3) : self.preferred_velocity;
  return solve_velocity_lp(planes, preferred, self.max_speed, num_hard);
}

}  // namespace manav
