#include "manav/experiment.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace manav {

namespace {

std::vector<Cell> free_cells(const GridMap& map, int min_i, int max_i) {
  std::vector<Cell> cells;
  for (int j = 0; j < map.height(); ++j) {
    for (int i = min_i; i <= max_i; ++i) {
      if (map.traversable({i, j})) cells.push_back({i, j});
    }
  }
  return cells;
}

Point sample_point(const std::vector<Cell>& pool, const std::vector<Point>& chosen,
                   double min_separation, const GridMap& map, std::mt19937_64& rng) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const Cell c = pool[rng() % pool.size()];
    const Point p = map.center(c);
    bool clear = true;
    for (const Point& q : chosen) {
      if (distance(p, q) <= min_separation) {
        clear = false;
        break;
      }
    }
    if (clear) return p;
  }
  throw std::runtime_error("scenario sampling budget exhausted");
}

}  // namespace

std::vector<Scenario> generate_scenarios(const GridMap& map, ScenarioKind kind, int count,
                                         int agents, std::uint64_t seed,
                                         double min_separation) {
  std::vector<Cell> left, right, everywhere;
  if (kind == ScenarioKind::Gaps) {
    // The dividing wall sits at width/2; the wall column itself (and any
    // passage cells in it) belongs to neither side.
    left = free_cells(map, 0, map.width() / 2 - 1);
    right = free_cells(map, map.width() / 2 + 1, map.width() - 1);
    if (left.empty() || right.empty())
      throw std::runtime_error("gaps scenario needs free cells on both sides of the wall");
  } else {
    everywhere = free_cells(map, 0, map.width() - 1);
    if (everywhere.empty()) throw std::runtime_error("map has no free cells");
  }

  std::mt19937_64 rng(seed);
  std::vector<Scenario> scenarios;
  for (int s = 0; s < count; ++s) {
    Scenario scenario;
    std::vector<Point> chosen;
    for (int a = 0; a < agents; ++a) {
      const bool left_to_right = a < agents / 2;
      const std::vector<Cell>& start_pool =
          kind == ScenarioKind::Gaps ? (left_to_right ? left : right) : everywhere;
      const std::vector<Cell>& goal_pool =
          kind == ScenarioKind::Gaps ? (left_to_right ? right : left) : everywhere;
      AgentTask task;
      task.start = sample_point(start_pool, chosen, min_separation, map, rng);
      chosen.push_back(task.start);
      task.goal = sample_point(goal_pool, chosen, min_separation, map, rng);
      chosen.push_back(task.goal);
      scenario.tasks.push_back(task);
    }
    scenarios.push_back(std::move(scenario));
  }
  return scenarios;
}

void write_scen_file(std::ostream& out, const ScenFile& file) {
  out << "version 1\n";
  char line[256];
  for (std::size_t s = 0; s < file.scenarios.size(); ++s) {
    for (const AgentTask& task : file.scenarios[s].tasks) {
      const Cell start{static_cast<int>(std::floor(task.start.x)),
                       static_cast<int>(std::floor(task.start.y))};
      const Cell goal{static_cast<int>(std::floor(task.goal.x)),
                      static_cast<int>(std::floor(task.goal.y))};
      std::snprintf(line, sizeof line, "%zu\t%s\t%d\t%d\t%d\t%d\t%d\t%d\t%.8f\n", s,
                    file.map_name.c_str(), file.width, file.height, start.i, start.j, goal.i,
                    goal.j, distance(task.start, task.goal));
      out << line;
    }
  }
}

ScenFile read_scen_file(std::istream& in) {
  ScenFile file;
  std::string line;
  long long current_bucket = -1;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.rfind("version", 0) == 0) continue;
    std::istringstream fields(line);
    long long bucket;
    std::string map_name;
    int width, height, si, sj, gi, gj;
    double ignored_length;
    if (!(fields >> bucket >> map_name >> width >> height >> si >> sj >> gi >> gj >>
          ignored_length)) {
      throw std::runtime_error("malformed scenario line: " + line);
    }
    if (first) {
      file.map_name = map_name;
      file.width = width;
      file.height = height;
      first = false;
    }
    if (bucket != current_bucket) {
      file.scenarios.emplace_back();
      current_bucket = bucket;
    }
    AgentTask task;
    task.start = {si + 0.5, sj + 0.5};
    task.goal = {gi + 0.5, gj + 0.5};
    file.scenarios.back().tasks.push_back(task);
  }
  return file;
}

ScenFile read_scen_file_at(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario file: " + path);
  return read_scen_file(in);
}

void apply_config_entry(SimConfig& config, const std::string& key, const std::string& value) {
  auto as_bool = [&](const std::string& v) {
    if (v == "1" || v == "true") return true;
    if (v == "0" || v == "false") return false;
    throw std::runtime_error("config value for " + key + " must be a boolean, got: " + v);
  };
  if (key == "dt") config.dt = std::stod(value);
  else if (key == "agent_radius") config.agent_radius = std::stod(value);
  else if (key == "safe_buffer") config.safe_buffer = std::stod(value);
  else if (key == "max_speed") config.max_speed = std::stod(value);
  else if (key == "visibility_range") config.visibility_range = std::stod(value);
  else if (key == "trigger_k") config.trigger_k = std::stoi(value);
  else if (key == "max_steps") config.max_steps = std::stoi(value);
  else if (key == "waypoint_eps") config.waypoint_eps = std::stod(value);
  else if (key == "goal_eps") config.goal_eps = std::stod(value);
  else if (key == "start_eps") config.start_eps = std::stod(value);
  else if (key == "cooldown_dissolve") config.cooldown_dissolve = std::stoi(value);
  else if (key == "cooldown_infeasible") config.cooldown_infeasible = std::stoi(value);
  else if (key == "coordination_enabled") config.coordination_enabled = as_bool(value);
  else if (key == "tau") config.tau = std::stod(value);
  else if (key == "tau_obst") config.tau_obst = std::stod(value);
  else if (key == "max_neighbors") config.max_neighbors = std::stoi(value);
  else if (key == "perturb_ties") config.perturb_ties = as_bool(value);
  else throw std::runtime_error("unknown config key: " + key);
}

void load_config(SimConfig& config, std::istream& in) {
  std::string line;
  while (std::getline(in, line)) {
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto begin = line.find_first_not_of(" \t\r");
    if (begin == std::string::npos) continue;
    const auto end = line.find_last_not_of(" \t\r");
    line = line.substr(begin, end - begin + 1);
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line is not key=value: " + line);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      if (b == std::string::npos) return std::string();
      const auto e = s.find_last_not_of(" \t");
      return s.substr(b, e - b + 1);
    };
    apply_config_entry(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

void load_config_file(SimConfig& config, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  load_config(config, in);
}

namespace {

std::string sanitize(const std::string& name) {
  std::string out = name;
  for (char& c : out) {
    if (c == '/' || c == '\\' || c == ' ') c = '_';
  }
  return out;
}

struct RunJob {
  int map_idx;
  int variant;  // 0 coordination, 1 baseline
  int count_idx;
  int scen_idx;
};

std::string trace_file_name(const SweepSpec& spec, const RunJob& job) {
  char name[256];
  std::snprintf(name, sizeof name, "%s/%s__%s__a%d__s%d.trace", spec.trace_dir.c_str(),
                sanitize(spec.map_names[job.map_idx]).c_str(),
                job.variant == 0 ? "coordination" : "baseline",
                spec.agent_counts[job.count_idx], job.scen_idx);
  return name;
}

}  // namespace

std::vector<SweepRow> run_sweep(const SweepSpec& spec, std::vector<SweepRunRecord>* per_run) {
  if (spec.maps.size() != spec.map_names.size() || spec.maps.size() != spec.scenarios.size())
    throw std::invalid_argument("sweep spec: maps, names, and scenarios must align");
  for (std::size_t i = 1; i < spec.agent_counts.size(); ++i) {
    if (spec.agent_counts[i] <= spec.agent_counts[i - 1])
      throw std::invalid_argument("sweep spec: agent counts must be strictly increasing");
  }
  for (std::size_t m = 0; m < spec.scenarios.size(); ++m) {
    for (const Scenario& s : spec.scenarios[m]) {
      for (int count : spec.agent_counts) {
        if (static_cast<std::size_t>(count) > s.tasks.size())
          throw std::invalid_argument("sweep spec: agent count exceeds scenario length on map " +
                                      spec.map_names[m]);
      }
    }
  }

  std::vector<int> variants;
  if (spec.run_coordination) variants.push_back(0);
  if (spec.run_baseline) variants.push_back(1);

  std::vector<RunJob> jobs;
  for (int m = 0; m < static_cast<int>(spec.maps.size()); ++m) {
    for (int v : variants) {
      for (int c = 0; c < static_cast<int>(spec.agent_counts.size()); ++c) {
        for (int s = 0; s < static_cast<int>(spec.scenarios[m].size()); ++s) {
          jobs.push_back({m, v, c, s});
        }
      }
    }
  }

  std::vector<RunResult> results(jobs.size());
  std::atomic<std::size_t> cursor{0};
  auto worker = [&] {
    for (std::size_t i = cursor.fetch_add(1); i < jobs.size(); i = cursor.fetch_add(1)) {
      const RunJob& job = jobs[i];
      try {
        SimConfig config = spec.config;
        config.coordination_enabled = job.variant == 0;
        const std::vector<AgentTask>& all = spec.scenarios[job.map_idx][job.scen_idx].tasks;
        std::vector<AgentTask> prefix(all.begin(),
                                      all.begin() + spec.agent_counts[job.count_idx]);
        Simulator sim(spec.maps[job.map_idx], std::move(prefix), config);
        if (spec.trace_dir.empty()) {
          results[i] = sim.run();
        } else {
          std::ostringstream trace;
          results[i] = sim.run(&trace);
          const std::string name = trace_file_name(spec, job);
          std::ofstream out(name, std::ios::binary);
          if (!out) throw std::runtime_error("cannot write trace file: " + name);
          out << trace.str();
        }
      } catch (...) {
        results[i] = RunResult{};
        results[i].status = RunStatus::Internal;
      }
    }
  };
  const int thread_count = std::max(1, spec.jobs);
  {
    std::vector<std::thread> pool;
    for (int t = 1; t < thread_count; ++t) pool.emplace_back(worker);
    worker();
    for (std::thread& t : pool) t.join();
  }

  if (per_run != nullptr) {
    per_run->clear();
    per_run->reserve(jobs.size());
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      const RunJob& job = jobs[i];
      SweepRunRecord rec;
      rec.map = spec.map_names[job.map_idx];
      rec.variant = job.variant == 0 ? "coordination" : "baseline";
      rec.agents = spec.agent_counts[job.count_idx];
      rec.scenario_index = job.scen_idx;
      rec.status = results[i].status;
      if (!spec.trace_dir.empty()) rec.trace_file = trace_file_name(spec, job);
      per_run->push_back(std::move(rec));
    }
  }

  std::vector<SweepRow> rows;
  std::size_t index = 0;
  for (int m = 0; m < static_cast<int>(spec.maps.size()); ++m) {
    for (int v : variants) {
      for (int c = 0; c < static_cast<int>(spec.agent_counts.size()); ++c) {
        SweepRow row;
        row.map = spec.map_names[m];
        row.variant = v == 0 ? "coordination" : "baseline";
        row.agents = spec.agent_counts[c];
        double makespan_sum = 0.0;
        double flowtime_sum = 0.0;
        for (int s = 0; s < static_cast<int>(spec.scenarios[m].size()); ++s, ++index) {
          const RunResult& r = results[index];
          ++row.runs;
          switch (r.status) {
            case RunStatus::Success:
              ++row.successes;
              makespan_sum += r.makespan;
              flowtime_sum += r.flowtime;
              break;
            case RunStatus::Timeout: ++row.timeouts; break;
            case RunStatus::Collision: ++row.collisions; break;
            case RunStatus::NoPath: ++row.no_paths; break;
            case RunStatus::Internal: ++row.internals; break;
          }
        }
        row.success_rate = row.runs == 0 ? 0.0 : static_cast<double>(row.successes) / row.runs;
        if (row.successes > 0) {
          row.mean_makespan_success = makespan_sum / row.successes;
          row.mean_flowtime_success = flowtime_sum / row.successes;
        }
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "map,variant,agents,success_rate,mean_makespan_success,mean_flowtime_success,"
         "failures_by_reason\n";
  char buf[512];
  for (const SweepRow& row : rows) {
    char makespan[32] = "-";
    char flowtime[32] = "-";
    if (row.successes > 0) {
      std::snprintf(makespan, sizeof makespan, "%.3f", row.mean_makespan_success);
      std::snprintf(flowtime, sizeof flowtime, "%.3f", row.mean_flowtime_success);
    }
    std::snprintf(buf, sizeof buf, "%s,%s,%d,%.4f,%s,%s,timeout=%d;collision=%d;no_path=%d;internal=%d\n",
                  row.map.c_str(), row.variant.c_str(), row.agents, row.success_rate, makespan,
                  flowtime, row.timeouts, row.collisions, row.no_paths, row.internals);
    out << buf;
  }
}

void write_event_log(std::ostream& out, const std::vector<CoordEvent>& events) {
  for (const CoordEvent& e : events) {
    out << e.step << ' ' << e.kind << ' ' << e.group << ' ';
    for (std::size_t i = 0; i < e.members.size(); ++i) {
      if (i) out << ';';
      out << e.members[i];
    }
    out << ' ' << e.area.min_corner.i << ' ' << e.area.min_corner.j << ' ' << e.area.max_corner.i
        << ' ' << e.area.max_corner.j << '\n';
  }
}

}  // namespace manav
