#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "manav/experiment.h"
#include "manav/grid_map.h"
#include "manav/simulator.h"

namespace {

using namespace manav;

std::string map_label(const std::string& path) {
  return std::filesystem::path(path).filename().string();
}

SimConfig build_config(const std::string& config_path, const std::vector<std::string>& overrides,
                       bool no_coordination) {
  SimConfig config;
  if (!config_path.empty()) load_config_file(config, config_path);
  for (const std::string& entry : overrides) {
    const std::size_t eq = entry.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("--set expects key=value, got: " + entry);
    apply_config_entry(config, entry.substr(0, eq), entry.substr(eq + 1));
  }
  if (no_coordination) config.coordination_enabled = false;
  if (!config.valid())
    throw std::runtime_error("invalid config: max_speed*dt must not exceed the agent diameter");
  return config;
}

ScenarioKind parse_kind(const std::string& kind) {
  if (kind == "gaps") return ScenarioKind::Gaps;
  if (kind == "rooms") return ScenarioKind::Rooms;
  throw std::runtime_error("scenario kind must be gaps or rooms, got: " + kind);
}

void print_result(const RunResult& result) {
  std::cout << "status " << to_string(result.status) << "\n"
            << "steps " << result.steps << "\n";
  if (result.status == RunStatus::Success) {
    std::cout << "makespan " << result.makespan << "\n"
              << "flowtime " << result.flowtime << "\n";
  }
  if (result.status == RunStatus::Collision) {
    std::cout << "collision_step " << result.collision_step << "\n"
              << "collision_agents " << result.collision_agent_a << ' '
              << result.collision_agent_b << "\n";
  }
  const CoordCounts& c = result.coordination;
  std::cout << "formations " << c.formations << "\nmerges " << c.merges << "\nintrusions "
            << c.intrusions << "\ndissolves " << c.dissolves << "\naborts " << c.aborts << "\n";
}

int cmd_gen_map(const std::string& type, int size, int passages, int room, int wall, int gap,
                const std::string& out_path) {
  if (type != "rooms" && type != "gaps")
    throw std::runtime_error("map type must be gaps or rooms, got: " + type);
  GridMap map = type == "rooms" ? generate_rooms_map(size, room)
                                : generate_gaps_map(size, passages, wall, gap);
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write map file: " + out_path);
  out << map.to_movingai();
  return 0;
}

int cmd_gen_scen(const std::string& map_path, const std::string& kind, int count, int agents,
                 std::uint64_t seed, const std::string& out_path) {
  GridMap map = GridMap::load_movingai_file(map_path);
  ScenFile file;
  file.map_name = map_label(map_path);
  file.width = map.width();
  file.height = map.height();
  file.scenarios = generate_scenarios(map, parse_kind(kind), count, agents, seed);
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write scenario file: " + out_path);
  write_scen_file(out, file);
  return 0;
}

int cmd_run(const std::string& map_path, const std::string& scen_path, int index, int agents,
            const SimConfig& config, const std::string& trace_path,
            const std::string& events_path) {
  GridMap map = GridMap::load_movingai_file(map_path);
  ScenFile file = read_scen_file_at(scen_path);
  if (index < 0 || index >= static_cast<int>(file.scenarios.size()))
    throw std::runtime_error("scenario index out of range: " + std::to_string(index));
  std::vector<AgentTask> tasks = file.scenarios[index].tasks;
  if (agents > 0) {
    if (agents > static_cast<int>(tasks.size()))
      throw std::runtime_error("scenario holds fewer pairs than requested agents");
    tasks.resize(agents);
  }

  Simulator sim(&map, std::move(tasks), config);
  std::unique_ptr<std::ofstream> trace;
  if (!trace_path.empty()) {
    trace = std::make_unique<std::ofstream>(trace_path, std::ios::binary);
    if (!*trace) throw std::runtime_error("cannot write trace file: " + trace_path);
  }
  RunResult result = sim.run(trace.get());
  if (!events_path.empty()) {
    std::ofstream events(events_path, std::ios::binary);
    if (!events) throw std::runtime_error("cannot write event log: " + events_path);
    write_event_log(events, sim.coordinator().events());
  }
  print_result(result);
  return 0;
}

int cmd_sweep(const std::vector<std::string>& map_paths,
              const std::vector<std::string>& scen_paths, std::vector<int> agent_counts,
              const SimConfig& config, bool no_coordination, bool no_baseline, int jobs,
              const std::string& trace_dir, const std::string& out_path) {
  if (map_paths.size() != scen_paths.size())
    throw std::runtime_error("sweep needs one --scen per --map");
  std::vector<GridMap> maps;
  maps.reserve(map_paths.size());
  SweepSpec spec;
  for (std::size_t i = 0; i < map_paths.size(); ++i) {
    maps.push_back(GridMap::load_movingai_file(map_paths[i]));
    spec.map_names.push_back(map_label(map_paths[i]));
    spec.scenarios.push_back(read_scen_file_at(scen_paths[i]).scenarios);
  }
  for (const GridMap& m : maps) spec.maps.push_back(&m);
  spec.agent_counts = std::move(agent_counts);
  spec.config = config;
  spec.run_coordination = !no_coordination;
  spec.run_baseline = !no_baseline;
  spec.jobs = jobs;
  spec.trace_dir = trace_dir;
  if (!trace_dir.empty()) std::filesystem::create_directories(trace_dir);

  const std::vector<SweepRow> rows = run_sweep(spec);
  if (out_path.empty()) {
    write_sweep_csv(std::cout, rows);
  } else {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write CSV file: " + out_path);
    write_sweep_csv(out, rows);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-agent navigation: any-angle planning with reciprocal avoidance and "
               "coordinated multi-agent repairs"};
  app.require_subcommand(1);

  // gen-map
  auto* gen_map = app.add_subcommand("gen-map", "Generate a benchmark map");
  std::string gm_type = "gaps";
  int gm_size = 64, gm_passages = 1, gm_room = 15, gm_wall = 1, gm_gap = 1;
  std::string gm_out;
  gen_map->add_option("--type", gm_type, "Map family: gaps or rooms");
  gen_map->add_option("--size", gm_size, "Map side length in cells");
  gen_map->add_option("--passages", gm_passages, "Gaps: number of wall passages");
  gen_map->add_option("--room", gm_room, "Rooms: room side length");
  gen_map->add_option("--wall", gm_wall, "Gaps: wall thickness");
  gen_map->add_option("--gap", gm_gap, "Gaps: passage width");
  gen_map->add_option("-o,--out", gm_out, "Output .map path")->required();

  // gen-scen
  auto* gen_scen = app.add_subcommand("gen-scen", "Generate scenarios for a map");
  std::string gs_map, gs_kind = "gaps", gs_out;
  int gs_count = 25, gs_agents = 40;
  std::uint64_t gs_seed = 1;
  gen_scen->add_option("--map", gs_map, "Map file")->required();
  gen_scen->add_option("--kind", gs_kind, "Sampling rule: gaps or rooms");
  gen_scen->add_option("--count", gs_count, "Number of scenarios");
  gen_scen->add_option("--agents", gs_agents, "Start/goal pairs per scenario");
  gen_scen->add_option("--seed", gs_seed, "Random seed");
  gen_scen->add_option("-o,--out", gs_out, "Output .scen path")->required();

  // shared run/sweep config flags
  std::string config_path;
  std::vector<std::string> overrides;
  bool no_coordination = false;

  // run
  auto* run = app.add_subcommand("run", "Run one scenario and print the outcome");
  std::string r_map, r_scen, r_trace, r_events;
  int r_index = 0, r_agents = 0;
  run->add_option("--map", r_map, "Map file")->required();
  run->add_option("--scen", r_scen, "Scenario file")->required();
  run->add_option("--index", r_index, "Scenario index within the file");
  run->add_option("--agents", r_agents, "Use only the first N pairs (0: all)");
  run->add_option("--config", config_path, "key=value config file");
  run->add_option("--set", overrides, "Config override key=value (repeatable)");
  run->add_flag("--no-coordination", no_coordination, "Avoidance-only baseline");
  run->add_option("--trace", r_trace, "Write per-step trace here");
  run->add_option("--events", r_events, "Write coordination event log here");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Batch runs over maps x variants x agent counts");
  std::vector<std::string> s_maps, s_scens;
  std::vector<int> s_agents;
  int s_jobs = 1;
  bool s_no_baseline = false;
  std::string s_trace_dir, s_out;
  sweep->add_option("--map", s_maps, "Map file (repeatable)")->required();
  sweep->add_option("--scen", s_scens, "Scenario file, one per map")->required();
  sweep->add_option("--agents", s_agents, "Agent counts, strictly increasing")->required();
  sweep->add_option("--config", config_path, "key=value config file");
  sweep->add_option("--set", overrides, "Config override key=value (repeatable)");
  sweep->add_flag("--no-coordination", no_coordination, "Skip the coordination variant");
  sweep->add_flag("--no-baseline", s_no_baseline, "Skip the avoidance-only baseline");
  sweep->add_option("--jobs", s_jobs, "Worker threads");
  sweep->add_option("--trace-dir", s_trace_dir, "Write one trace file per run here");
  sweep->add_option("-o,--out", s_out, "CSV output path (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen_map->parsed()) {
      return cmd_gen_map(gm_type, gm_size, gm_passages, gm_room, gm_wall, gm_gap, gm_out);
    }
    if (gen_scen->parsed()) {
      return cmd_gen_scen(gs_map, gs_kind, gs_count, gs_agents, gs_seed, gs_out);
    }
    if (run->parsed()) {
      const SimConfig config = build_config(config_path, overrides, no_coordination);
      return cmd_run(r_map, r_scen, r_index, r_agents, config, r_trace, r_events);
    }
    if (sweep->parsed()) {
      // In a sweep --no-coordination drops that variant rather than forcing
      // the flag into the config; variants set coordination_enabled per run.
      const SimConfig config = build_config(config_path, overrides, false);
      return cmd_sweep(s_maps, s_scens, s_agents, config, no_coordination, s_no_baseline,
                       s_jobs, s_trace_dir, s_out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
