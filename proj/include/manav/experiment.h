#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "manav/grid_map.h"
#include "manav/simulator.h"

namespace manav {

// Ordered start/goal pairs; sweeps run the first k pairs for agent count k.
struct Scenario {
  std::vector<AgentTask> tasks;
};

enum class ScenarioKind { Gaps, Rooms };

// Samples `count` scenarios of `agents` start/goal pairs on distinct free
// cells (positions are cell centers), every sampled point of a scenario
// pairwise separated by more than min_separation. Gaps scenarios send the
// first half of the agents left to right across the map's vertical wall and
// the rest the other way; rooms scenarios sample uniformly over free cells.
// Deterministic per seed. Throws std::runtime_error when the sampling budget
// runs out.
std::vector<Scenario> generate_scenarios(const GridMap& map, ScenarioKind kind, int count,
                                         int agents, std::uint64_t seed,
                                         double min_separation = 0.98);

// Scenario container file, one line per pair grouped into scenarios by the
// leading bucket index: "bucket map width height si sj gi gj separation".
// Fields are tab-separated; the trailing length field is ignored on read.
struct ScenFile {
  std::string map_name;
  int width = 0;
  int height = 0;
  std::vector<Scenario> scenarios;
};

void write_scen_file(std::ostream& out, const ScenFile& file);
ScenFile read_scen_file(std::istream& in);
ScenFile read_scen_file_at(const std::string& path);

// Flat key=value configuration ('#' comments, blank lines ignored). Every
// SimConfig field has a key with the same name. Unknown keys throw.
void apply_config_entry(SimConfig& config, const std::string& key, const std::string& value);
void load_config(SimConfig& config, std::istream& in);
void load_config_file(SimConfig& config, const std::string& path);

struct SweepSpec {
  std::vector<std::string> map_names;            // CSV labels, aligned with maps
  std::vector<const GridMap*> maps;
  std::vector<std::vector<Scenario>> scenarios;  // per map
  std::vector<int> agent_counts;                 // strictly increasing
  bool run_coordination = true;
  bool run_baseline = true;
  SimConfig config;
  int jobs = 1;
  std::string trace_dir;  // when set, one trace file per run is written here
};

struct SweepRow {
  std::string map;
  std::string variant;  // "coordination" or "baseline"
  int agents = 0;
  int runs = 0;
  int successes = 0;
  double success_rate = 0.0;
  double mean_makespan_success = 0.0;  // over successful runs
  double mean_flowtime_success = 0.0;
  int timeouts = 0;
  int collisions = 0;
  int no_paths = 0;
  int internals = 0;
};

// One executed run of a sweep, listed in deterministic job order.
struct SweepRunRecord {
  std::string map;
  std::string variant;
  int agents = 0;
  int scenario_index = 0;
  RunStatus status = RunStatus::Internal;
  std::string trace_file;  // empty unless the sweep wrote traces
};

// Runs every map x variant x agent-count x scenario combination (scenario
// prefixes of the given counts) and aggregates per (map, variant, count).
// Runs execute on `jobs` threads; aggregation order is fixed by indices, so
// output is byte-stable regardless of scheduling. A run that throws is
// recorded as an internal failure. When `per_run` is given it receives one
// record per executed run.
std::vector<SweepRow> run_sweep(const SweepSpec& spec,
                                std::vector<SweepRunRecord>* per_run = nullptr);

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

// Event-log line per coordination event: "step kind group members area".
void write_event_log(std::ostream& out, const std::vector<CoordEvent>& events);

}  // namespace manav
