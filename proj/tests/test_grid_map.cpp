#include <doctest.h>

#include <cmath>
#include <deque>
#include <random>
#include <set>
#include <sstream>

#include "manav/geometry.h"
#include "manav/grid_map.h"

using namespace manav;

namespace {

GridMap parse(const std::string& text) {
  std::istringstream in(text);
  return GridMap::load_movingai(in);
}

std::string map_text(int width, int height, const std::vector<std::string>& rows) {
  std::ostringstream os;
  os << "type octile\nheight " << height << "\nwidth " << width << "\nmap\n";
  for (const auto& r : rows) os << r << "\n";
  return os.str();
}

// Independent check: BFS depth of a cell from `from` over the full in-bounds
// lattice (the same wave nearest_free_cell rides, reimplemented plainly).
int bfs_depth(const GridMap& map, Cell from, Cell target) {
  std::set<Cell> seen{from};
  std::deque<std::pair<Cell, int>> frontier{{from, 0}};
  while (!frontier.empty()) {
    auto [c, d] = frontier.front();
    frontier.pop_front();
    if (c == target) return d;
    const Cell neighbors[4] = {
        {c.i + 1, c.j}, {c.i, c.j + 1}, {c.i - 1, c.j}, {c.i, c.j - 1}};
    for (const Cell& n : neighbors) {
      if (!map.in_bounds(n) || seen.count(n)) continue;
      seen.insert(n);
      frontier.push_back({n, d + 1});
    }
  }
  return -1;
}

}  // namespace

TEST_CASE("movingai load: 2x2 with one blocked cell") {
  const GridMap map = parse(map_text(2, 2, {".@", ".."}));
  CHECK(map.width() == 2);
  CHECK(map.height() == 2);
  CHECK(map.blocked({1, 0}));
  CHECK(map.traversable({0, 0}));
  CHECK(map.traversable({0, 1}));
  CHECK(map.traversable({1, 1}));
  CHECK(map.blocked_count() == 1);
}

TEST_CASE("movingai load: 64x64 all dots has zero blocked cells") {
  std::vector<std::string> rows(64, std::string(64, '.'));
  const GridMap map = parse(map_text(64, 64, rows));
  CHECK(map.blocked_count() == 0);
}

TEST_CASE("movingai load: wall column with one gap") {
  std::vector<std::string> rows(4, std::string(4, '.'));
  for (int j = 0; j < 4; ++j) rows[j][2] = '@';
  rows[1][2] = '.';
  const GridMap map = parse(map_text(4, 4, rows));
  CHECK(map.blocked_count() == 3);
  CHECK(map.traversable({2, 1}));
}

TEST_CASE("movingai load: G traversable, O and T blocked") {
  const GridMap map = parse(map_text(3, 1, {"GOT"}));
  CHECK(map.traversable({0, 0}));
  CHECK(map.blocked({1, 0}));
  CHECK(map.blocked({2, 0}));
}

TEST_CASE("movingai load: errors name the offending line") {
  CHECK_THROWS_WITH_AS(parse("type quad\nheight 2\nwidth 2\nmap\n..\n..\n"),
                       doctest::Contains("line 1"), std::runtime_error);
  CHECK_THROWS_WITH_AS(parse("type octile\nheight x\nwidth 2\nmap\n..\n..\n"),
                       doctest::Contains("line 2"), std::runtime_error);
  CHECK_THROWS_WITH_AS(parse(map_text(2, 2, {"..", ".x"})), doctest::Contains("line 6"),
                       std::runtime_error);
  CHECK_THROWS_WITH_AS(parse(map_text(2, 2, {"...", ".."})), doctest::Contains("line 5"),
                       std::runtime_error);
  CHECK_THROWS_WITH_AS(parse("type octile\nheight 3\nwidth 2\nmap\n..\n..\n"),
                       doctest::Contains("line 7"), std::runtime_error);
}

TEST_CASE("movingai round-trip reproduces the normalized body") {
  const std::string original = map_text(3, 2, {".G@", "OT."});
  const GridMap map = parse(original);
  const std::string normalized = map_text(3, 2, {"..@", "@@."});
  CHECK(map.to_movingai() == normalized);
  const GridMap again = parse(map.to_movingai());
  CHECK(again.to_movingai() == map.to_movingai());
}

TEST_CASE("gaps map: 64x64 single passage") {
  const GridMap map = generate_gaps_map(64, 1);
  CHECK(map.blocked_count() == 63);
  for (int j = 0; j < 64; ++j) CHECK(map.blocked({32, j}) == (j != 32));
  for (int j = 0; j < 64; ++j) {
    CHECK(map.traversable({31, j}));
    CHECK(map.traversable({33, j}));
  }
}

TEST_CASE("gaps map: 64x64 with four passages") {
  const GridMap map = generate_gaps_map(64, 4);
  CHECK(map.blocked_count() == 60);
  for (const int j : {12, 25, 38, 51}) CHECK(map.traversable({32, j}));
}

TEST_CASE("gaps map: all free cells form one component") {
  const GridMap map = generate_gaps_map(8, 1);
  CHECK(map.traversable({4, 4}));
  std::set<Cell> seen{{0, 0}};
  std::deque<Cell> frontier{{0, 0}};
  while (!frontier.empty()) {
    const Cell c = frontier.front();
    frontier.pop_front();
    const Cell neighbors[4] = {
        {c.i + 1, c.j}, {c.i, c.j + 1}, {c.i - 1, c.j}, {c.i, c.j - 1}};
    for (const Cell& n : neighbors)
      if (map.traversable(n) && !seen.count(n)) {
        seen.insert(n);
        frontier.push_back(n);
      }
  }
  CHECK(seen.size() == 8 * 8 - map.blocked_count());
}

TEST_CASE("line of sight: empty map sees everything") {
  const GridMap map = parse(map_text(10, 10, std::vector<std::string>(10, "..........")));
  CHECK(map.line_of_sight({1.5, 1.5}, {8.5, 8.5}, 0.49));
  CHECK(map.line_of_sight({1.0, 8.0}, {9.0, 1.0}, 0.49));
  CHECK(map.line_of_sight({2.0, 2.0}, {2.0, 2.0}, 0.49));
}

TEST_CASE("line of sight: segment through a blocked cell center fails at zero clearance") {
  GridMap map = parse(map_text(9, 9, std::vector<std::string>(9, ".........")));
  map.set_blocked({4, 4}, true);
  CHECK_FALSE(map.line_of_sight({1.5, 4.5}, {7.5, 4.5}, 0.0));
  CHECK(map.line_of_sight({1.5, 2.5}, {7.5, 2.5}, 0.0));
}

TEST_CASE("line of sight: clearance discriminates a 0.4-unit offset") {
  // Blocked cell [5,6]x[3,4]; vertical segment at x = 4.6 passes 0.4 from its
  // west edge.
  GridMap map = parse(map_text(12, 12, std::vector<std::string>(12, "............")));
  map.set_blocked({5, 3}, true);
  CHECK_FALSE(map.line_of_sight({4.6, 1.5}, {4.6, 6.5}, 0.49));
  CHECK(map.line_of_sight({4.6, 1.5}, {4.6, 6.5}, 0.3));
}

TEST_CASE("line of sight: boundary counts as obstacle") {
  const GridMap map = parse(map_text(8, 8, std::vector<std::string>(8, "........")));
  CHECK_FALSE(map.line_of_sight({0.3, 4.0}, {4.0, 4.0}, 0.49));
  CHECK(map.line_of_sight({0.5, 4.0}, {4.0, 4.0}, 0.49));
}

TEST_CASE("line of sight: symmetric and monotone in clearance") {
  GridMap map = parse(map_text(16, 16, std::vector<std::string>(16, "................")));
  std::mt19937_64 rng(7);
  auto coord = [&]() { return 1.0 + 14.0 * (static_cast<double>(rng()) / 1.8446744073709552e19); };
  for (int trial = 0; trial < 50; ++trial) map.set_blocked({static_cast<int>(rng() % 16), static_cast<int>(rng() % 16)}, false);
  for (int trial = 0; trial < 12; ++trial)
    map.set_blocked({static_cast<int>(1 + rng() % 14), static_cast<int>(1 + rng() % 14)}, true);
  for (int trial = 0; trial < 200; ++trial) {
    const Point a{coord(), coord()};
    const Point b{coord(), coord()};
    const double clearances[] = {0.0, 0.1, 0.3, 0.49, 0.8};
    bool prev = true;
    for (const double c : clearances) {
      const bool ab = map.line_of_sight(a, b, c);
      CHECK(ab == map.line_of_sight(b, a, c));
      // Monotone: visible at larger clearance implies visible at smaller.
      if (ab) CHECK(prev);
      prev = ab;
    }
  }
}

TEST_CASE("nearest free cell: identity when eligible") {
  const GridMap map = parse(map_text(4, 4, std::vector<std::string>(4, "....")));
  CHECK(map.nearest_free_cell({2, 2}, {}) == Cell{2, 2});
}

TEST_CASE("nearest free cell: blocked start returns east neighbor first") {
  GridMap map = parse(map_text(4, 4, std::vector<std::string>(4, "....")));
  map.set_blocked({1, 1}, true);
  CHECK(map.nearest_free_cell({1, 1}, {}) == Cell{2, 1});
}

TEST_CASE("nearest free cell: diagonal found at depth 2 through blocked ring") {
  // 4x4 fixture: everything blocked except the forbidden start and one
  // diagonal; the wave crosses the blocked ring.
  GridMap map = parse(map_text(4, 4, std::vector<std::string>(4, "@@@@")));
  map.set_blocked({1, 1}, false);
  map.set_blocked({2, 2}, false);
  const auto found = map.nearest_free_cell({1, 1}, {{1, 1}});
  REQUIRE(found.has_value());
  CHECK(*found == Cell{2, 2});
  CHECK(bfs_depth(map, {1, 1}, *found) == 2);
}

TEST_CASE("nearest free cell: exhausted search reports no cell") {
  GridMap map = parse(map_text(2, 2, {"@@", "@@"}));
  CHECK_FALSE(map.nearest_free_cell({0, 0}, {}).has_value());
  GridMap open = parse(map_text(2, 1, {".."}));
  CHECK_FALSE(open.nearest_free_cell({0, 0}, {{0, 0}, {1, 0}}).has_value());
}

TEST_CASE("nearest free cell: result depth is minimal among eligible cells") {
  GridMap map = generate_gaps_map(16, 2);
  map.set_blocked({3, 3}, true);
  map.set_blocked({4, 3}, true);
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const Cell from{static_cast<int>(rng() % 16), static_cast<int>(rng() % 16)};
    std::vector<Cell> forbidden;
    for (int f = 0; f < 6; ++f)
      forbidden.push_back({static_cast<int>(rng() % 16), static_cast<int>(rng() % 16)});
    const auto found = map.nearest_free_cell(from, forbidden);
    REQUIRE(found.has_value());
    const int found_depth = bfs_depth(map, from, *found);
    std::set<Cell> banned(forbidden.begin(), forbidden.end());
    for (int i = 0; i < 16; ++i)
      for (int j = 0; j < 16; ++j) {
        const Cell c{i, j};
        if (!map.traversable(c) || banned.count(c)) continue;
        CHECK(found_depth <= bfs_depth(map, from, c));
      }
  }
}

TEST_CASE("distance to obstacles: adjacent, containment, far rectangle") {
  GridMap map = parse(map_text(12, 12, std::vector<std::string>(12, "............")));
  map.set_blocked({5, 3}, true);
  CHECK(map.distance_to_obstacles({4.5, 3.5}) == doctest::Approx(0.5));
  CHECK(map.distance_to_obstacles({5.5, 3.5}) == 0.0);
  CHECK(map.distance_to_obstacles({2.25, 3.75}) == doctest::Approx(2.75));
  CHECK(map.distance_to_obstacles({8.0, 7.0}) ==
        doctest::Approx(std::sqrt(2.0 * 2.0 + 3.0 * 3.0)));
}

TEST_CASE("distance to obstacles: positive iff strictly outside all blocked squares") {
  GridMap map = parse(map_text(6, 6, std::vector<std::string>(6, "......")));
  map.set_blocked({2, 2}, true);
  CHECK(map.distance_to_obstacles({2.0, 2.0}) == 0.0);
  CHECK(map.distance_to_obstacles({1.99, 2.0}) > 0.0);
  CHECK(map.distance_to_obstacles({3.0, 3.0}) == 0.0);
  CHECK(map.distance_to_obstacles({3.01, 3.02}) > 0.0);
}

TEST_CASE("distance to obstacles: cap saturates but stays exact below it") {
  GridMap map = parse(map_text(32, 32, std::vector<std::string>(32, std::string(32, '.'))));
  map.set_blocked({20, 20}, true);
  CHECK(map.distance_to_obstacles({20.5, 18.5}, 2.0) == doctest::Approx(1.5));
  CHECK(map.distance_to_obstacles({4.0, 4.0}, 2.0) >= 2.0);
}

TEST_CASE("clearance combines obstacles and boundary") {
  GridMap map = parse(map_text(8, 8, std::vector<std::string>(8, "........")));
  CHECK(map.distance_to_boundary({0.5, 4.0}) == doctest::Approx(0.5));
  CHECK(map.clearance_at({0.5, 4.0}) == doctest::Approx(0.5));
  map.set_blocked({1, 3}, true);
  CHECK(map.clearance_at({1.5, 4.2}) == doctest::Approx(0.2));
}

TEST_CASE("segment and box distance helpers") {
  const Aabb box{5.0, 3.0, 6.0, 4.0};
  CHECK(dist_point_aabb({2.25, 3.75}, box) == doctest::Approx(2.75));
  CHECK(dist_point_aabb({5.5, 3.5}, box) == 0.0);
  CHECK(dist_segment_aabb({4.6, 1.5}, {4.6, 6.5}, box) == doctest::Approx(0.4));
  CHECK(dist_segment_aabb({0.0, 0.0}, {10.0, 10.0}, {4.0, 4.0, 5.0, 5.0}) == 0.0);
  CHECK(segment_crosses_interior({0.0, 0.0}, {10.0, 10.0}, {4.0, 4.0, 5.0, 5.0}));
  CHECK_FALSE(segment_crosses_interior({0.0, 4.0}, {10.0, 4.0}, {4.0, 4.0, 5.0, 5.0}));
  CHECK(dist_segment_segment({0, 0}, {4, 0}, {1, 1}, {2, 5}) == doctest::Approx(1.0));
  CHECK(dist_segment_segment({0, 0}, {4, 4}, {0, 4}, {4, 0}) == 0.0);
}
