#include <algorithm>
#include <cstdint>
#include <deque>
#include <numeric>
#include <random>
#include <string>
#include <unordered_set>
#include <vector>

#include "doctest.h"
#include "manav/grid_map.h"
#include "manav/push_and_rotate.h"
#include "oracles.h"

using namespace manav;

namespace {

MapfInstance grid_instance(const GridMap& map, const std::vector<Cell>& starts,
                           const std::vector<Cell>& goals) {
  std::vector<int> ids(starts.size());
  std::iota(ids.begin(), ids.end(), 0);
  return build_grid_instance(map, {0, 0}, {map.width() - 1, map.height() - 1}, starts, goals, ids);
}

using oracles::sync_solvable;

std::string describe(const MapfInstance& inst) {
  std::string s = "starts=";
  for (int v : inst.starts) s += std::to_string(v) + ",";
  s += " goals=";
  for (int v : inst.goals) s += std::to_string(v) + ",";
  s += " vertices=";
  for (const Cell& c : inst.vertices) {
    s += "(" + std::to_string(c.i) + " " + std::to_string(c.j) + ")";
  }
  return s;
}

bool plans_equal(const MapfPlan& a, const MapfPlan& b) {
  if (a.actions.size() != b.actions.size()) return false;
  for (std::size_t i = 0; i < a.actions.size(); ++i) {
    if (a.actions[i].size() != b.actions[i].size()) return false;
    for (std::size_t t = 0; t < a.actions[i].size(); ++t) {
      const MapfAction& x = a.actions[i][t];
      const MapfAction& y = b.actions[i][t];
      if (x.move != y.move || (x.move && x.to != y.to)) return false;
    }
  }
  return true;
}

std::vector<int> random_distinct(std::mt19937_64& rng, int n, int k) {
  std::vector<int> all(n);
  std::iota(all.begin(), all.end(), 0);
  for (int i = 0; i < k; ++i) {
    std::swap(all[i], all[i + static_cast<int>(rng() % (n - i))]);
  }
  all.resize(k);
  return all;
}

}  // namespace

TEST_CASE("single agent walks a five-vertex path end to end") {
  GridMap map(5, 1);
  MapfInstance inst = grid_instance(map, {{0, 0}}, {{4, 0}});
  MapfResult result = solve_push_and_rotate(inst);
  REQUIRE(result.outcome == MapfOutcome::Solved);
  CHECK(result.plan.length() == 4);
  for (const MapfAction& act : result.plan.actions[0]) CHECK(act.move);
  CHECK(validate_plan(inst, result.plan).valid);
}

TEST_CASE("two agents swap places around a four-cycle") {
  GridMap map(2, 2);
  MapfInstance inst = grid_instance(map, {{0, 0}, {1, 0}}, {{1, 0}, {0, 0}});
  MapfResult result = solve_push_and_rotate(inst);
  REQUIRE(result.outcome == MapfOutcome::Solved);
  // Exhaustive search finds the shortest four-move sequence; packing lets the
  // two opposite-edge moves of the rotation share a slot.
  CHECK(result.plan.length() == 3);
  CHECK(validate_plan(inst, result.plan).valid);
}

TEST_CASE("two agents on a two-vertex path cannot swap") {
  GridMap map(2, 1);
  MapfInstance inst = grid_instance(map, {{0, 0}, {1, 0}}, {{1, 0}, {0, 0}});
  CHECK(solve_push_and_rotate(inst).outcome == MapfOutcome::Infeasible);
}

TEST_CASE("action duration makes one-cell moves saturate max speed") {
  MapfPlan plan;
  CHECK(assign_action_duration(plan, 1.0, 1.0).action_duration == 1.0);
  CHECK(assign_action_duration(plan, 0.5, 1.0).action_duration == 2.0);
  CHECK(assign_action_duration(plan, 2.0, 1.0).action_duration == 0.5);
}

TEST_CASE("validator accepts an empty plan when agents start at their goals") {
  GridMap map(3, 1);
  MapfInstance inst = grid_instance(map, {{0, 0}, {2, 0}}, {{0, 0}, {2, 0}});
  MapfPlan plan;
  plan.actions.assign(2, {});
  CHECK(validate_plan(inst, plan).valid);
}

TEST_CASE("validator accepts a simultaneous rotation on a hand-built triangle") {
  MapfInstance inst;
  inst.vertices = {{0, 0}, {1, 0}, {0, 1}};
  inst.adjacency = {{1, 2}, {0, 2}, {0, 1}};
  inst.starts = {0, 1, 2};
  inst.goals = {1, 2, 0};
  inst.agent_ids = {0, 1, 2};

  MapfPlan plan;
  plan.actions = {{{true, 1}}, {{true, 2}}, {{true, 0}}};
  CHECK(validate_plan(inst, plan).valid);

  // The sequential solver cannot turn a fully occupied cycle.
  CHECK(solve_push_and_rotate(inst).outcome == MapfOutcome::Infeasible);
}

TEST_CASE("validator reports the first conflict with index and agents") {
  GridMap map(3, 1);

  SUBCASE("edge conflict") {
    MapfInstance inst = grid_instance(map, {{0, 0}, {1, 0}}, {{1, 0}, {0, 0}});
    MapfPlan plan;
    plan.actions = {{{true, 1}}, {{true, 0}}};
    PlanCheck check = validate_plan(inst, plan);
    CHECK_FALSE(check.valid);
    CHECK(check.index == 0);
    CHECK(check.agent_a == 0);
    CHECK(check.agent_b == 1);
    CHECK(check.reason == "edge conflict");
  }

  SUBCASE("vertex conflict") {
    MapfInstance inst = grid_instance(map, {{0, 0}, {2, 0}}, {{1, 0}, {2, 0}});
    MapfPlan plan;
    plan.actions = {{{true, 1}}, {{true, 1}}};
    PlanCheck check = validate_plan(inst, plan);
    CHECK_FALSE(check.valid);
    CHECK(check.index == 0);
    CHECK(check.agent_a == 0);
    CHECK(check.agent_b == 1);
    CHECK(check.reason == "vertex conflict");
  }

  SUBCASE("move off the graph") {
    MapfInstance inst = grid_instance(map, {{0, 0}}, {{2, 0}});
    MapfPlan plan;
    plan.actions = {{{true, 2}}};  // vertex 2 is two cells away
    PlanCheck check = validate_plan(inst, plan);
    CHECK_FALSE(check.valid);
    CHECK(check.reason == "move does not follow a graph edge");
  }

  SUBCASE("missed goal") {
    MapfInstance inst = grid_instance(map, {{0, 0}}, {{2, 0}});
    MapfPlan plan;
    plan.actions = {{{true, 1}}};
    PlanCheck check = validate_plan(inst, plan);
    CHECK_FALSE(check.valid);
    CHECK(check.reason == "agent does not end at its goal");
  }
}

TEST_CASE("grid instance construction indexes traversable cells only") {
  GridMap map(3, 3);
  map.set_blocked({1, 1}, true);
  MapfInstance inst = grid_instance(map, {}, {});
  CHECK(inst.vertices.size() == 8);
  CHECK(inst.vertex_at({1, 1}) == -1);
  int corner = inst.vertex_at({0, 0});
  int edge = inst.vertex_at({1, 0});
  REQUIRE(corner != -1);
  REQUIRE(edge != -1);
  CHECK(inst.adjacency[corner].size() == 2);
  CHECK(inst.adjacency[edge].size() == 2);  // center is blocked
}

TEST_CASE("smoothing cancels a retraced detour down a corridor") {
  GridMap map(12, 1);
  MapfInstance inst = grid_instance(map, {{5, 0}}, {{7, 0}});

  PushRotateOptions raw;
  raw.smooth = false;
  MapfResult unsmoothed = solve_push_and_rotate(inst, raw);
  REQUIRE(unsmoothed.outcome == MapfOutcome::Solved);
  CHECK(unsmoothed.plan.length() == 12);  // corridor solver retraces to the end
  CHECK(validate_plan(inst, unsmoothed.plan).valid);

  MapfResult smoothed = solve_push_and_rotate(inst);
  REQUIRE(smoothed.outcome == MapfOutcome::Solved);
  CHECK(smoothed.plan.length() == 2);
  CHECK(validate_plan(inst, smoothed.plan).valid);
}

TEST_CASE("agents keep their order along a corridor") {
  GridMap map(12, 1);
  std::vector<Cell> starts = {{0, 0}, {2, 0}, {3, 0}, {7, 0}, {9, 0}};

  SUBCASE("order-preserving goals are reachable") {
    std::vector<Cell> goals = {{1, 0}, {4, 0}, {6, 0}, {8, 0}, {11, 0}};
    MapfInstance inst = grid_instance(map, starts, goals);
    MapfResult result = solve_push_and_rotate(inst);
    REQUIRE(result.outcome == MapfOutcome::Solved);
    CHECK(validate_plan(inst, result.plan).valid);
  }

  SUBCASE("order-crossing goals are infeasible") {
    std::vector<Cell> goals = {{4, 0}, {1, 0}, {6, 0}, {8, 0}, {11, 0}};
    MapfInstance inst = grid_instance(map, starts, goals);
    CHECK(solve_push_and_rotate(inst).outcome == MapfOutcome::Infeasible);
  }
}

TEST_CASE("agents circulate around a large ring corridor") {
  GridMap map(5, 5);
  for (int i = 1; i <= 3; ++i) {
    for (int j = 1; j <= 3; ++j) map.set_blocked({i, j}, true);
  }
  // Ring walk order used below: along the top row, down the right column,
  // back along the bottom row, up the left column.
  std::vector<Cell> starts = {{0, 0}, {2, 0}, {4, 0}, {4, 2}, {4, 4}, {0, 4}};

  SUBCASE("a uniform two-step shift preserves cyclic order") {
    std::vector<Cell> goals = {{2, 0}, {4, 0}, {4, 2}, {4, 4}, {2, 4}, {0, 2}};
    MapfInstance inst = grid_instance(map, starts, goals);
    MapfResult result = solve_push_and_rotate(inst);
    REQUIRE(result.outcome == MapfOutcome::Solved);
    CHECK(validate_plan(inst, result.plan).valid);
  }

  SUBCASE("crossing two agents on the ring is infeasible") {
    std::vector<Cell> goals = {{4, 0}, {2, 0}, {4, 2}, {4, 4}, {2, 4}, {0, 2}};
    MapfInstance inst = grid_instance(map, starts, goals);
    CHECK(solve_push_and_rotate(inst).outcome == MapfOutcome::Infeasible);
  }
}

TEST_CASE("two rooms exchange agents through a corridor past a parked agent") {
  GridMap map = GridMap::from_rows({
      "...@@@...",
      ".........",
      "...@@@...",
  });
  // Agent 0 is parked mid-corridor at its own goal; it has the lowest id, so
  // it finishes first and the crossing agents must swap with it and put it
  // back afterwards.
  std::vector<Cell> starts = {{4, 1}, {0, 1}, {8, 1}};
  std::vector<Cell> goals = {{4, 1}, {8, 1}, {0, 1}};
  MapfInstance inst = grid_instance(map, starts, goals);

  MapfResult result = solve_push_and_rotate(inst);
  REQUIRE(result.outcome == MapfOutcome::Solved);
  CHECK(validate_plan(inst, result.plan).valid);

  MapfResult again = solve_push_and_rotate(inst);
  REQUIRE(again.outcome == MapfOutcome::Solved);
  CHECK(plans_equal(result.plan, again.plan));
}

TEST_CASE("solver feasibility matches a joint-configuration search on small graphs") {
  // Every shape of 1..6 cells inside a 3x3 window, with exhaustive agent
  // placements for one and two agents, exhaustive three-agent placements on
  // shapes of up to four cells, and sampled placements beyond that.
  long long total = 0;
  long long mismatches = 0;
  long long invalid_plans = 0;

  auto run_one = [&](MapfInstance& inst, const std::vector<int>& starts,
                     const std::vector<int>& goals) {
    inst.starts = starts;
    inst.goals = goals;
    inst.agent_ids.assign(starts.size(), 0);
    std::iota(inst.agent_ids.begin(), inst.agent_ids.end(), 0);
    MapfResult result = solve_push_and_rotate(inst);
    ++total;
    if (result.outcome == MapfOutcome::Internal) {
      ++mismatches;
      MESSAGE("internal failure: " << describe(inst));
      return;
    }
    const bool solved = result.outcome == MapfOutcome::Solved;
    if (solved != sync_solvable(inst)) {
      ++mismatches;
      MESSAGE("feasibility mismatch (solver " << (solved ? "solved" : "infeasible")
                                              << "): " << describe(inst));
    }
    if (solved && !validate_plan(inst, result.plan).valid) {
      ++invalid_plans;
      MESSAGE("invalid plan: " << describe(inst));
    }
  };

  std::mt19937_64 rng(20250814);
  for (int mask = 1; mask < 512; ++mask) {
    const int n = __builtin_popcount(mask);
    if (n > 6) continue;
    GridMap map(3, 3);
    for (int bit = 0; bit < 9; ++bit) {
      if (!(mask & (1 << bit))) map.set_blocked({bit % 3, bit / 3}, true);
    }
    MapfInstance inst = grid_instance(map, {}, {});
    REQUIRE(static_cast<int>(inst.vertices.size()) == n);

    for (int s = 0; s < n; ++s) {
      for (int g = 0; g < n; ++g) run_one(inst, {s}, {g});
    }
    if (n >= 2) {
      for (int s1 = 0; s1 < n; ++s1) {
        for (int s2 = 0; s2 < n; ++s2) {
          if (s2 == s1) continue;
          for (int g1 = 0; g1 < n; ++g1) {
            for (int g2 = 0; g2 < n; ++g2) {
              if (g2 == g1) continue;
              run_one(inst, {s1, s2}, {g1, g2});
            }
          }
        }
      }
    }
    if (n >= 3 && n <= 4) {
      std::vector<std::vector<int>> triples;
      for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
          for (int c = 0; c < n; ++c) {
            if (a != b && b != c && a != c) triples.push_back({a, b, c});
          }
        }
      }
      for (const auto& s : triples) {
        for (const auto& g : triples) run_one(inst, s, g);
      }
    } else if (n >= 5) {
      for (int trial = 0; trial < 30; ++trial) {
        run_one(inst, random_distinct(rng, n, 3), random_distinct(rng, n, 3));
      }
    }
  }

  // 500 extra random instances across the same domain.
  for (int trial = 0; trial < 500; ++trial) {
    int mask = 0;
    int n = 0;
    while (n < 2 || n > 6) {
      mask = 1 + static_cast<int>(rng() % 511);
      n = __builtin_popcount(mask);
    }
    GridMap map(3, 3);
    for (int bit = 0; bit < 9; ++bit) {
      if (!(mask & (1 << bit))) map.set_blocked({bit % 3, bit / 3}, true);
    }
    MapfInstance inst = grid_instance(map, {}, {});
    int k = 1 + static_cast<int>(rng() % std::min(3, n));
    run_one(inst, random_distinct(rng, n, k), random_distinct(rng, n, k));
  }

  CHECK(total == 238811);
  CHECK(mismatches == 0);
  CHECK(invalid_plans == 0);
}

TEST_CASE("scrambled instances built from legal moves are always solved") {
  std::mt19937_64 rng(4242);
  int solved_count = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int w = 4 + static_cast<int>(rng() % 9);
    const int h = 4 + static_cast<int>(rng() % 9);
    GridMap map(w, h);
    for (int j = 0; j < h; ++j) {
      for (int i = 0; i < w; ++i) {
        if (rng() % 5 == 0) map.set_blocked({i, j}, true);
      }
    }
    MapfInstance inst = grid_instance(map, {}, {});
    const int n = static_cast<int>(inst.vertices.size());
    if (n == 0) continue;

    // Restrict agents to the largest connected component, leaving at least
    // two spare vertices inside it.
    std::vector<int> comp(n, -1);
    int best_comp = -1;
    std::size_t best_size = 0;
    int num_comps = 0;
    for (int v = 0; v < n; ++v) {
      if (comp[v] != -1) continue;
      std::deque<int> queue{v};
      comp[v] = num_comps;
      std::size_t size = 0;
      while (!queue.empty()) {
        int u = queue.front();
        queue.pop_front();
        ++size;
        for (int x : inst.adjacency[u]) {
          if (comp[x] == -1) {
            comp[x] = num_comps;
            queue.push_back(x);
          }
        }
      }
      if (size > best_size) {
        best_size = size;
        best_comp = num_comps;
      }
      ++num_comps;
    }
    std::vector<int> pool;
    for (int v = 0; v < n; ++v) {
      if (comp[v] == best_comp) pool.push_back(v);
    }
    const int k = 2 + static_cast<int>(rng() % 9);
    if (static_cast<int>(pool.size()) < k + 2) continue;

    std::vector<int> slots = random_distinct(rng, static_cast<int>(pool.size()), k);
    std::vector<int> starts;
    for (int s : slots) starts.push_back(pool[s]);

    // Scramble with random legal single moves; the end state is a goal
    // configuration that is solvable by construction.
    std::vector<int> positions = starts;
    std::vector<char> occupied(n, 0);
    for (int p : positions) occupied[p] = 1;
    const int scramble = 30 + static_cast<int>(rng() % 120);
    for (int step = 0; step < scramble; ++step) {
      int a = static_cast<int>(rng() % k);
      std::vector<int> empty_neighbors;
      for (int x : inst.adjacency[positions[a]]) {
        if (!occupied[x]) empty_neighbors.push_back(x);
      }
      if (empty_neighbors.empty()) continue;
      int to = empty_neighbors[rng() % empty_neighbors.size()];
      occupied[positions[a]] = 0;
      occupied[to] = 1;
      positions[a] = to;
    }

    inst.starts = starts;
    inst.goals = positions;
    inst.agent_ids.assign(k, 0);
    std::iota(inst.agent_ids.begin(), inst.agent_ids.end(), 0);

    MapfResult smoothed = solve_push_and_rotate(inst);
    REQUIRE_MESSAGE(smoothed.outcome == MapfOutcome::Solved, describe(inst));
    CHECK(validate_plan(inst, smoothed.plan).valid);

    PushRotateOptions raw;
    raw.smooth = false;
    MapfResult unsmoothed = solve_push_and_rotate(inst, raw);
    REQUIRE(unsmoothed.outcome == MapfOutcome::Solved);
    CHECK(validate_plan(inst, unsmoothed.plan).valid);
    CHECK(smoothed.plan.length() <= unsmoothed.plan.length());

    MapfResult again = solve_push_and_rotate(inst);
    REQUIRE(again.outcome == MapfOutcome::Solved);
    CHECK(plans_equal(smoothed.plan, again.plan));
    ++solved_count;
  }
  CHECK(solved_count >= 150);  // most trials survive the construction filters
}
