#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "manav/grid_map.h"
#include "manav/simulator.h"

using namespace manav;

namespace {

// Two rooms joined by a single-file corridor five cells long.
GridMap two_room_map() {
  return GridMap::from_rows({
      "@@@@@@@@@@@@@@@",
      "@....@@@@@....@",
      "@.............@",
      "@....@@@@@....@",
      "@@@@@@@@@@@@@@@",
  });
}

// Two agents per room, each headed for the opposite room. Everyone travels
// the center row, so opposing pairs meet nose to nose inside the corridor.
std::vector<AgentTask> door_swap_tasks() {
  return {
      {{1.5, 2.5}, {13.5, 2.5}},
      {{2.5, 2.5}, {12.5, 2.5}},
      {{13.5, 2.5}, {1.5, 2.5}},
      {{12.5, 2.5}, {2.5, 2.5}},
  };
}

}  // namespace

TEST_CASE("a lone agent walks its path at full speed and stops on the goal") {
  GridMap map(16, 8);
  SimConfig config;
  config.perturb_ties = false;
  REQUIRE(config.valid());
  Simulator sim(&map, {{{2.5, 2.5}, {12.5, 2.5}}}, config);
  RunResult result = sim.run();

  CHECK(result.status == RunStatus::Success);
  // 10 units at speed 1 with dt 0.25: exactly 40 steps.
  CHECK(result.steps == 40);
  CHECK(result.makespan == doctest::Approx(10.0));
  CHECK(result.flowtime == doctest::Approx(10.0));
  CHECK(result.arrival_steps == std::vector<int>{40});
  CHECK(distance(sim.agents()[0].position, Point{12.5, 2.5}) < 1e-9);
}

TEST_CASE("an unreachable goal reports no path without stepping") {
  GridMap map(8, 8);
  // Wall off the north-east pocket completely.
  for (int i = 4; i < 8; ++i) map.set_blocked({i, 4}, true);
  for (int j = 4; j < 8; ++j) map.set_blocked({4, j}, true);
  Simulator sim(&map, {{{1.5, 1.5}, {6.5, 6.5}}});
  RunResult result = sim.run();
  CHECK(result.status == RunStatus::NoPath);
  CHECK(result.steps == 0);
}

TEST_CASE("the audit reports overlapping agents as a collision") {
  GridMap map(8, 8);
  SimConfig config;
  config.max_speed = 0.0;  // pinned in place, the overlap can never resolve
  config.max_steps = 5;
  Simulator sim(&map, {{{2.5, 2.5}, {6.5, 2.5}}, {{2.6, 2.5}, {2.5, 6.5}}}, config);
  RunResult result = sim.run();
  CHECK(result.status == RunStatus::Collision);
  CHECK(result.collision_step == 1);
  CHECK(result.collision_agent_a == 0);
  CHECK(result.collision_agent_b == 1);
}

TEST_CASE("two head-on agents pass each other without touching") {
  GridMap map(20, 8);
  SimConfig config;
  Simulator sim(&map, {{{2.5, 4.5}, {17.5, 4.5}}, {{17.5, 4.5}, {2.5, 4.5}}}, config);
  RunResult result = sim.run();
  CHECK(result.status == RunStatus::Success);
}

TEST_CASE("the door swap deadlocks without coordination and times out") {
  GridMap map = two_room_map();
  SimConfig config;
  config.coordination_enabled = false;
  config.max_steps = 800;
  Simulator sim(&map, door_swap_tasks(), config);
  RunResult result = sim.run();

  CHECK(result.status == RunStatus::Timeout);
  // The jam is total: everyone is nearly motionless at the end.
  for (const AgentState& a : sim.agents()) {
    CHECK(norm(a.velocity) < 0.01);
  }
}

TEST_CASE("coordination resolves the door swap") {
  GridMap map = two_room_map();
  SimConfig config;
  config.max_steps = 4000;
  Simulator sim(&map, door_swap_tasks(), config);
  RunResult result = sim.run();

  CHECK(result.status == RunStatus::Success);
  CHECK(result.coordination.formations >= 1);
  CHECK(sim.coordinator().orca_calls_while_executing() == 0);
}

TEST_CASE("runs are reproducible down to the trace bytes") {
  auto run_once = [] {
    GridMap map = two_room_map();
    SimConfig config;
    config.max_steps = 4000;
    Simulator sim(&map, door_swap_tasks(), config);
    std::ostringstream trace;
    RunResult result = sim.run(&trace);
    std::ostringstream out;
    out << to_string(result.status) << ' ' << result.steps << ' ' << result.makespan << ' '
        << result.flowtime << '\n'
        << trace.str();
    return out.str();
  };
  const std::string first = run_once();
  CHECK(first == run_once());
  CHECK(first.size() > 0);
}

TEST_CASE("traces carry one line per agent per step from the baseline on") {
  GridMap map(16, 8);
  SimConfig config;
  config.perturb_ties = false;
  Simulator sim(&map, {{{2.5, 2.5}, {12.5, 2.5}}, {{2.5, 5.5}, {12.5, 5.5}}}, config);
  std::ostringstream trace;
  RunResult result = sim.run(&trace);
  REQUIRE(result.status == RunStatus::Success);

  std::istringstream in(trace.str());
  std::string line;
  int lines = 0;
  int expect_step = 0;
  int expect_agent = 0;
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    int step = -1, id = -1, group = -2;
    double x = 0, y = 0, vx = 0, vy = 0;
    std::string tag;
    REQUIRE((fields >> step >> id >> x >> y >> vx >> vy >> tag >> group));
    CHECK(step == expect_step);
    CHECK(id == expect_agent);
    CHECK((tag == "I" || tag == "C" || tag == "E"));
    if (++expect_agent == 2) {
      expect_agent = 0;
      ++expect_step;
    }
    ++lines;
  }
  CHECK(lines == (result.steps + 1) * 2);
}
