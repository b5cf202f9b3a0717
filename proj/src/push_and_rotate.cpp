#include "manav/push_and_rotate.h"

#include <algorithm>
#include <cstdint>
#include <deque>
#include <limits>
#include <set>
#include <unordered_map>
#include <utility>

namespace manav {

namespace {

constexpr int kNobody = -1;

struct SeqMove {
  int agent = -1;
  int from = -1;
  int to = -1;
};

// Sequential pebble-motion state on the instance graph. All primitives log
// single moves into an empty adjacent vertex, so legality is local.
class Solver {
 public:
  Solver(const MapfInstance& inst, std::size_t budget)
      : inst_(inst),
        budget_(budget),
        pos_(inst.starts),
        occ_(inst.vertices.size(), kNobody),
        finished_(inst.starts.size(), false) {
    for (std::size_t a = 0; a < pos_.size(); ++a) occ_[pos_[a]] = static_cast<int>(a);
  }

  MapfOutcome run(std::vector<SeqMove>& out) {
    const int n = static_cast<int>(inst_.vertices.size());
    std::vector<int> comp(n, -1);
    int num_comps = 0;
    for (int v = 0; v < n; ++v) {
      if (comp[v] != -1) continue;
      std::deque<int> queue{v};
      comp[v] = num_comps;
      while (!queue.empty()) {
        int u = queue.front();
        queue.pop_front();
        for (int w : inst_.adjacency[u]) {
          if (comp[w] == -1) {
            comp[w] = num_comps;
            queue.push_back(w);
          }
        }
      }
      ++num_comps;
    }
    for (std::size_t a = 0; a < pos_.size(); ++a) {
      if (comp[inst_.starts[a]] != comp[inst_.goals[a]]) return MapfOutcome::Infeasible;
    }
    for (int c = 0; c < num_comps; ++c) {
      MapfOutcome outcome = solve_component(comp, c);
      if (outcome != MapfOutcome::Solved) return outcome;
    }
    out = std::move(moves_);
    return MapfOutcome::Solved;
  }

 private:
  // --- shared state ------------------------------------------------------

  const MapfInstance& inst_;
  std::size_t budget_;
  std::vector<int> pos_;        // agent -> vertex
  std::vector<int> occ_;        // vertex -> agent or kNobody
  std::vector<char> finished_;  // agent -> done flag
  std::vector<SeqMove> moves_;
  std::set<int> restore_;  // finished agents displaced by a swap or rotate
  bool over_budget_ = false;

  void do_move(int agent, int to) {
    moves_.push_back({agent, pos_[agent], to});
    occ_[pos_[agent]] = kNobody;
    pos_[agent] = to;
    occ_[to] = agent;
    if (moves_.size() > budget_) over_budget_ = true;
  }

  // Shortest path by BFS with sorted adjacency: deterministic. `blocked`
  // marks vertices that may be neither traversed nor entered.
  std::vector<int> bfs_path(int from, int to, const std::vector<char>& blocked) const {
    if (blocked[from] || blocked[to]) return {};
    if (from == to) return {from};
    std::vector<int> parent(inst_.vertices.size(), -2);
    parent[from] = -1;
    std::deque<int> queue{from};
    while (!queue.empty()) {
      int u = queue.front();
      queue.pop_front();
      for (int w : inst_.adjacency[u]) {
        if (blocked[w] || parent[w] != -2) continue;
        parent[w] = u;
        if (w == to) {
          std::vector<int> path{to};
          for (int x = u; x != -1; x = parent[x]) path.push_back(x);
          std::reverse(path.begin(), path.end());
          return path;
        }
        queue.push_back(w);
      }
    }
    return {};
  }

  // Path from `from` to the nearest empty vertex, avoiding `blocked`.
  std::vector<int> path_to_blank(int from, const std::vector<char>& blocked) const {
    if (blocked[from]) return {};
    std::vector<int> parent(inst_.vertices.size(), -2);
    parent[from] = -1;
    std::deque<int> queue{from};
    if (occ_[from] == kNobody) return {from};
    while (!queue.empty()) {
      int u = queue.front();
      queue.pop_front();
      for (int w : inst_.adjacency[u]) {
        if (blocked[w] || parent[w] != -2) continue;
        parent[w] = u;
        if (occ_[w] == kNobody) {
          std::vector<int> path{w};
          for (int x = u; x != -1; x = parent[x]) path.push_back(x);
          std::reverse(path.begin(), path.end());
          return path;
        }
        queue.push_back(w);
      }
    }
    return {};
  }

  // Empties `v` by shifting its occupant chain one step toward the nearest
  // reachable blank. Never touches vertices in `blocked`.
  bool clear_chain(int v, const std::vector<char>& blocked) {
    if (occ_[v] == kNobody) return true;
    std::vector<int> path = path_to_blank(v, blocked);
    if (path.empty()) return false;
    for (std::size_t i = path.size() - 1; i-- > 0;) {
      if (occ_[path[i]] != kNobody) do_move(occ_[path[i]], path[i + 1]);
    }
    return true;
  }

  std::vector<char> blocked_none() const { return std::vector<char>(inst_.vertices.size(), 0); }

  std::vector<char> blocked_finished() const {
    std::vector<char> blocked(inst_.vertices.size(), 0);
    for (std::size_t a = 0; a < pos_.size(); ++a) {
      if (finished_[a]) blocked[pos_[a]] = 1;
    }
    return blocked;
  }

  // --- swap primitive -----------------------------------------------------

  // Moves the adjacent pair (front leads) until front stands on `target`.
  bool multipush(int front, int back, int target) {
    while (pos_[front] != target) {
      if (over_budget_) return false;
      std::vector<char> blocked = blocked_none();
      blocked[pos_[back]] = 1;
      std::vector<int> path = bfs_path(pos_[front], target, blocked);
      if (path.size() < 2) return false;
      int next = path[1];
      if (occ_[next] != kNobody) {
        std::vector<char> avoid = blocked_none();
        avoid[pos_[front]] = 1;
        avoid[pos_[back]] = 1;
        if (!clear_chain(next, avoid)) return false;
      }
      int vacated = pos_[front];
      do_move(front, next);
      do_move(back, vacated);
    }
    return true;
  }

  // Empties two neighbors of `s` other than `entry`; appends them to `out`.
  bool clear_two_neighbors(int s, int entry, std::vector<int>& out) {
    out.clear();
    std::vector<char> avoid = blocked_none();
    avoid[s] = 1;
    avoid[entry] = 1;
    for (int nb : inst_.adjacency[s]) {
      if (nb != entry && occ_[nb] == kNobody) {
        out.push_back(nb);
        avoid[nb] = 1;
        if (out.size() == 2) return true;
      }
    }
    for (int nb : inst_.adjacency[s]) {
      if (nb == entry || occ_[nb] == kNobody) continue;
      if (clear_chain(nb, avoid)) {
        out.push_back(nb);
        avoid[nb] = 1;
        if (out.size() == 2) return true;
      }
    }
    return false;
  }

  // Exchanges front (on s) with back (on entry) using two empty neighbors.
  void exchange(int front, int back, int s, int entry, int e1, int e2) {
    do_move(front, e1);
    do_move(back, s);
    do_move(back, e2);
    do_move(front, s);
    do_move(front, entry);
    do_move(back, s);
  }

  // Exchanges adjacent agents a and b, restoring every other agent. Tries
  // every degree>=3 vertex by increasing hop distance from a.
  bool swap_agents(int a, int b) {
    std::vector<int> candidates;
    {
      std::vector<int> dist(inst_.vertices.size(), -1);
      std::deque<int> queue{pos_[a]};
      dist[pos_[a]] = 0;
      while (!queue.empty()) {
        int u = queue.front();
        queue.pop_front();
        for (int w : inst_.adjacency[u]) {
          if (dist[w] == -1) {
            dist[w] = dist[u] + 1;
            queue.push_back(w);
          }
        }
      }
      std::vector<std::pair<int, int>> order;  // (distance, vertex)
      for (std::size_t v = 0; v < inst_.vertices.size(); ++v) {
        if (dist[v] != -1 && inst_.adjacency[v].size() >= 3) {
          order.emplace_back(dist[v], static_cast<int>(v));
        }
      }
      std::sort(order.begin(), order.end());
      for (const auto& entry : order) candidates.push_back(entry.second);
    }

    for (int s : candidates) {
      if (over_budget_) return false;
      const std::size_t mark = moves_.size();
      const std::vector<int> saved_pos = pos_;
      const std::vector<int> saved_occ = occ_;

      int front = a;
      int back = b;
      {
        std::vector<char> blocked = blocked_none();
        blocked[pos_[b]] = 1;
        if (bfs_path(pos_[a], s, blocked).empty()) {
          front = b;
          back = a;
          std::vector<char> blocked2 = blocked_none();
          blocked2[pos_[a]] = 1;
          if (bfs_path(pos_[b], s, blocked2).empty()) {
            continue;
          }
        }
      }

      std::vector<int> empties;
      if (multipush(front, back, s) && clear_two_neighbors(s, pos_[back], empties)) {
        const std::size_t setup_end = moves_.size();
        exchange(front, back, s, pos_[back], empties[0], empties[1]);
        // Undo the setup with a/b roles exchanged: third parties return to
        // their pre-swap vertices while a and b keep each other's.
        for (std::size_t i = setup_end; i-- > mark;) {
          const SeqMove& m = moves_[i];
          int g = m.agent == a ? b : (m.agent == b ? a : m.agent);
          do_move(g, m.from);
        }
        return true;
      }

      pos_ = saved_pos;
      occ_ = saved_occ;
      moves_.resize(mark);
    }
    return false;
  }

  // --- rotate primitive ---------------------------------------------------

  // Advances `a` across the blocked edge pos(a)->w by turning a cycle that
  // contains the edge. Displaced finished agents are queued for restore.
  bool rotate_cycle(int a, int w) {
    const int u = pos_[a];
    // Shortest u..w path not using the edge itself gives the cycle.
    std::vector<int> ring;
    {
      std::vector<int> parent(inst_.vertices.size(), -2);
      parent[w] = -1;
      std::deque<int> queue{w};
      while (!queue.empty() && parent[u] == -2) {
        int x = queue.front();
        queue.pop_front();
        for (int y : inst_.adjacency[x]) {
          if (x == w && y == u) continue;  // skip the blocked edge
          if (parent[y] != -2) continue;
          parent[y] = x;
          queue.push_back(y);
        }
      }
      if (parent[u] == -2) return false;
      for (int x = u; x != -1; x = parent[x]) ring.push_back(x);
      // ring = u, ..., w ordered so that each agent advances toward w's side:
      // moving along `ring` from u reaches w, so a's step u->w means shifting
      // every occupant one position backward along `ring`. Reverse it so the
      // shift runs in vector order.
      std::reverse(ring.begin(), ring.end());  // w, ..., u
    }

    auto shift_once = [&](std::size_t blank_at) {
      // ring[blank_at] is empty; advance every occupant one position in ring
      // order, wrapping, so the agent on u (last entry) steps onto w (first).
      std::size_t cur = blank_at;
      for (std::size_t step = 0; step + 1 < ring.size(); ++step) {
        std::size_t prev = (cur + ring.size() - 1) % ring.size();
        if (occ_[ring[prev]] != kNobody) {
          int agent = occ_[ring[prev]];
          if (finished_[agent]) restore_.insert(agent);
          do_move(agent, ring[cur]);
        }
        cur = prev;
      }
    };

    for (std::size_t i = 0; i < ring.size(); ++i) {
      if (occ_[ring[i]] == kNobody) {
        shift_once(i);
        return true;
      }
    }

    // Fully occupied ring: push one occupant off it, shift, done. The pushed
    // agent stays off-ring; if finished it gets restored later. The escape
    // chain must not displace finished agents parked off the ring.
    std::vector<char> ring_blocked = blocked_finished();
    for (int v : ring) ring_blocked[v] = 1;
    for (std::size_t i = 0; i < ring.size(); ++i) {
      if (ring[i] == u) continue;  // keep a on the ring
      std::vector<char> avoid = ring_blocked;
      avoid[ring[i]] = 0;
      int occupant = occ_[ring[i]];
      if (clear_chain(ring[i], avoid)) {
        if (finished_[occupant]) restore_.insert(occupant);
        shift_once(i);
        return true;
      }
    }
    return false;
  }

  // --- per-agent planning -------------------------------------------------

  bool push_step(int a, int next) {
    std::vector<char> avoid = blocked_finished();
    avoid[pos_[a]] = 1;
    if (!clear_chain(next, avoid)) return false;
    do_move(a, next);
    return true;
  }

  MapfOutcome plan_agent(int a) {
    while (pos_[a] != inst_.goals[a]) {
      if (over_budget_) return MapfOutcome::Internal;
      std::vector<int> path = bfs_path(pos_[a], inst_.goals[a], blocked_finished());
      if (path.empty()) path = bfs_path(pos_[a], inst_.goals[a], blocked_none());
      if (path.size() < 2) return MapfOutcome::Infeasible;
      int next = path[1];
      if (occ_[next] == kNobody) {
        do_move(a, next);
        continue;
      }
      int r = occ_[next];
      if (!finished_[r] && push_step(a, next)) continue;
      if (swap_agents(a, r)) {
        if (finished_[r]) restore_.insert(r);
        continue;
      }
      if (rotate_cycle(a, next)) continue;
      // A budget trip inside swap/rotate aborts their search early; report
      // that as an internal failure, not as infeasibility.
      return over_budget_ ? MapfOutcome::Internal : MapfOutcome::Infeasible;
    }
    return MapfOutcome::Solved;
  }

  MapfOutcome drain_restore_queue() {
    while (!restore_.empty()) {
      if (over_budget_) return MapfOutcome::Internal;
      int f = *restore_.begin();
      restore_.erase(restore_.begin());
      if (pos_[f] == inst_.goals[f]) continue;
      finished_[f] = false;
      MapfOutcome outcome = plan_agent(f);
      finished_[f] = true;
      if (outcome != MapfOutcome::Solved) return outcome;
    }
    return MapfOutcome::Solved;
  }

  // --- component dispatch -------------------------------------------------

  MapfOutcome solve_component(const std::vector<int>& comp, int c) {
    std::vector<int> verts;
    for (std::size_t v = 0; v < inst_.vertices.size(); ++v) {
      if (comp[v] == c) verts.push_back(static_cast<int>(v));
    }
    std::vector<int> agents;
    for (std::size_t a = 0; a < pos_.size(); ++a) {
      if (comp[inst_.starts[a]] == c) agents.push_back(static_cast<int>(a));
    }
    if (agents.empty()) return MapfOutcome::Solved;

    bool all_done = true;
    for (int a : agents) all_done = all_done && pos_[a] == inst_.goals[a];
    if (all_done) return MapfOutcome::Solved;

    const int blanks = static_cast<int>(verts.size()) - static_cast<int>(agents.size());
    if (blanks == 0) return MapfOutcome::Infeasible;  // nothing can move

    if (verts.size() <= 8) return solve_small(verts, agents);

    int deg1 = 0;
    bool all_deg_le2 = true;
    for (int v : verts) {
      std::size_t d = inst_.adjacency[v].size();
      if (d == 1) ++deg1;
      if (d > 2) all_deg_le2 = false;
    }
    if (all_deg_le2 && deg1 == 2) return solve_path(verts, agents);
    if (all_deg_le2 && deg1 == 0) return solve_ring(verts, agents);

    if (blanks < 2) return MapfOutcome::Infeasible;  // spare-vertex requirement
    return solve_generic(verts, agents);
  }

  // Exhaustive sequential search. Exact on any component, used when the
  // state space is tiny; returns a shortest move sequence.
  MapfOutcome solve_small(const std::vector<int>& verts, const std::vector<int>& agents) {
    const std::size_t n = verts.size();
    std::vector<int> local(inst_.vertices.size(), -1);
    for (std::size_t i = 0; i < n; ++i) local[verts[i]] = static_cast<int>(i);

    auto encode = [&](const std::vector<int>& local_pos) {
      std::uint64_t code = 0;
      for (int p : local_pos) code = code * n + static_cast<std::uint64_t>(p);
      return code;
    };

    std::vector<int> start_pos, goal_pos;
    for (int a : agents) {
      start_pos.push_back(local[pos_[a]]);
      goal_pos.push_back(local[inst_.goals[a]]);
    }
    const std::uint64_t start_code = encode(start_pos);
    const std::uint64_t goal_code = encode(goal_pos);

    struct Edge {
      std::uint64_t parent;
      int agent_slot;
      int to_local;
    };
    std::unordered_map<std::uint64_t, Edge> seen;
    seen.emplace(start_code, Edge{start_code, -1, -1});
    std::deque<std::vector<int>> queue{start_pos};

    bool found = start_code == goal_code;
    while (!queue.empty() && !found) {
      std::vector<int> cur = queue.front();
      queue.pop_front();
      const std::uint64_t cur_code = encode(cur);
      std::vector<char> used(n, 0);
      for (int p : cur) used[p] = 1;
      for (std::size_t slot = 0; slot < cur.size() && !found; ++slot) {
        for (int w : inst_.adjacency[verts[cur[slot]]]) {
          int lw = local[w];
          if (lw < 0 || used[lw]) continue;
          std::vector<int> nxt = cur;
          nxt[slot] = lw;
          std::uint64_t code = encode(nxt);
          if (seen.count(code)) continue;
          seen.emplace(code, Edge{cur_code, static_cast<int>(slot), lw});
          if (code == goal_code) {
            found = true;
            break;
          }
          queue.push_back(std::move(nxt));
        }
      }
    }
    if (!found) return MapfOutcome::Infeasible;

    std::vector<std::pair<int, int>> chain;  // (agent, to) from goal back to start
    for (std::uint64_t code = goal_code; code != start_code;) {
      const Edge& e = seen.at(code);
      chain.emplace_back(agents[e.agent_slot], verts[e.to_local]);
      code = e.parent;
    }
    for (std::size_t i = chain.size(); i-- > 0;) do_move(chain[i].first, chain[i].second);
    return MapfOutcome::Solved;
  }

  // Path component: agents cannot pass each other, so the left-to-right
  // agent order must match between starts and goals. Compress everyone to
  // the low end, then place from the high end outward.
  MapfOutcome solve_path(const std::vector<int>& verts, const std::vector<int>& agents) {
    // Order vertices along the path starting from the smaller endpoint.
    std::vector<int> order;
    {
      int end = -1;
      for (int v : verts) {
        if (inst_.adjacency[v].size() == 1) {
          end = v;
          break;  // verts ascending, so this is the smaller endpoint
        }
      }
      std::vector<char> visited(inst_.vertices.size(), 0);
      int cur = end;
      while (cur != -1) {
        order.push_back(cur);
        visited[cur] = 1;
        int nxt = -1;
        for (int w : inst_.adjacency[cur]) {
          if (!visited[w]) {
            nxt = w;
            break;
          }
        }
        cur = nxt;
      }
    }
    std::vector<int> index(inst_.vertices.size(), -1);
    for (std::size_t i = 0; i < order.size(); ++i) index[order[i]] = static_cast<int>(i);

    std::vector<int> by_start = agents;
    std::sort(by_start.begin(), by_start.end(),
              [&](int x, int y) { return index[pos_[x]] < index[pos_[y]]; });
    std::vector<int> by_goal = agents;
    std::sort(by_goal.begin(), by_goal.end(),
              [&](int x, int y) { return index[inst_.goals[x]] < index[inst_.goals[y]]; });
    if (by_start != by_goal) return MapfOutcome::Infeasible;

    for (std::size_t i = 0; i < by_start.size(); ++i) {
      int a = by_start[i];
      while (index[pos_[a]] > static_cast<int>(i)) {
        int left = order[index[pos_[a]] - 1];
        if (occ_[left] != kNobody) break;  // packed against the previous agent
        do_move(a, left);
      }
    }
    for (std::size_t i = by_start.size(); i-- > 0;) {
      int a = by_start[i];
      while (index[pos_[a]] < index[inst_.goals[a]]) {
        do_move(a, order[index[pos_[a]] + 1]);
      }
    }
    return MapfOutcome::Solved;
  }

  // Simple cycle component: the cyclic agent order is invariant, so the
  // start and goal orders must agree up to rotation. Construction moves
  // agents forward greedily, falling back to a rigid one-step ring shift.
  MapfOutcome solve_ring(const std::vector<int>& verts, const std::vector<int>& agents) {
    const int L = static_cast<int>(verts.size());
    std::vector<int> order{verts[0]};
    std::vector<char> visited(inst_.vertices.size(), 0);
    visited[verts[0]] = 1;
    while (static_cast<int>(order.size()) < L) {
      int cur = order.back();
      for (int w : inst_.adjacency[cur]) {
        if (!visited[w]) {
          visited[w] = 1;
          order.push_back(w);
          break;
        }
      }
    }
    std::vector<int> index(inst_.vertices.size(), -1);
    for (int i = 0; i < L; ++i) index[order[i]] = i;

    std::vector<int> by_start = agents;
    std::sort(by_start.begin(), by_start.end(),
              [&](int x, int y) { return index[pos_[x]] < index[pos_[y]]; });
    std::vector<int> by_goal = agents;
    std::sort(by_goal.begin(), by_goal.end(),
              [&](int x, int y) { return index[inst_.goals[x]] < index[inst_.goals[y]]; });

    const int m = static_cast<int>(agents.size());
    int rotation = -1;
    for (int r = 0; r < m && rotation == -1; ++r) {
      bool match = true;
      for (int i = 0; i < m && match; ++i) match = by_goal[(i + r) % m] == by_start[i];
      if (match) rotation = r;
    }
    if (rotation == -1) return MapfOutcome::Infeasible;

    // Consistent forward displacements: lift start and goal indices to a
    // common winding so order is preserved, then shift until non-negative.
    std::vector<int> lift_pos(m), lift_goal(m);
    for (int i = 0; i < m; ++i) {
      int p = index[pos_[by_start[i]]];
      lift_pos[i] = i == 0 ? p : lift_pos[i - 1] + ((p - index[pos_[by_start[i - 1]]]) % L + L) % L;
    }
    for (int i = 0; i < m; ++i) {
      int g = index[inst_.goals[by_start[i]]];
      if (i == 0) {
        lift_goal[i] = lift_pos[0] + ((g - index[pos_[by_start[0]]]) % L + L) % L;
      } else {
        int gap = ((g - index[inst_.goals[by_start[i - 1]]]) % L + L) % L;
        lift_goal[i] = lift_goal[i - 1] + gap;
      }
    }
    std::vector<long long> remaining(m);
    for (int i = 0; i < m; ++i) remaining[i] = lift_goal[i] - lift_pos[i];
    long long min_rem = *std::min_element(remaining.begin(), remaining.end());
    long long shift = min_rem < 0 ? ((-min_rem + L - 1) / L) * L : 0;
    for (auto& r : remaining) r += shift;

    bool all_zero = true;
    for (auto r : remaining) all_zero = all_zero && r == 0;
    while (!all_zero) {
      if (over_budget_) return MapfOutcome::Internal;
      bool progress = false;
      for (int i = 0; i < m; ++i) {
        int a = by_start[i];
        while (remaining[i] > 0) {
          int next = order[(index[pos_[a]] + 1) % L];
          if (occ_[next] != kNobody) break;
          do_move(a, next);
          --remaining[i];
          progress = true;
        }
      }
      if (!progress) {
        // Rigid ring shift: everyone advances one position via a blank.
        int blank = -1;
        for (int i = 0; i < L; ++i) {
          if (occ_[order[i]] == kNobody) {
            blank = i;
            break;
          }
        }
        if (blank == -1) return MapfOutcome::Internal;
        int cur = blank;
        for (int step = 0; step + 1 < L; ++step) {
          int prev = (cur + L - 1) % L;
          if (occ_[order[prev]] != kNobody) do_move(occ_[order[prev]], order[cur]);
          cur = prev;
        }
        for (auto& r : remaining) --r;
        long long mn = *std::min_element(remaining.begin(), remaining.end());
        if (mn < 0) {
          for (auto& r : remaining) r += L;
        }
      }
      all_zero = true;
      for (auto r : remaining) all_zero = all_zero && r == 0;
    }
    return MapfOutcome::Solved;
  }

  // General component with at least two blanks: plan agents one at a time,
  // deepest dead-end goals first, clearing blockers with push, swap, rotate.
  MapfOutcome solve_generic(const std::vector<int>& verts, const std::vector<int>& agents) {
    // Peel round of each vertex: corridors and dead ends peel first, the
    // 2-connected core never peels. Filling deeper goals first keeps
    // corridor mouths usable.
    std::vector<int> degree(inst_.vertices.size(), 0);
    std::vector<int> round(inst_.vertices.size(), std::numeric_limits<int>::max());
    for (int v : verts) degree[v] = static_cast<int>(inst_.adjacency[v].size());
    std::deque<int> peel;
    for (int v : verts) {
      if (degree[v] <= 1) {
        round[v] = 0;
        peel.push_back(v);
      }
    }
    while (!peel.empty()) {
      int v = peel.front();
      peel.pop_front();
      for (int w : inst_.adjacency[v]) {
        if (round[w] != std::numeric_limits<int>::max()) continue;
        if (--degree[w] <= 1) {
          round[w] = round[v] + 1;
          peel.push_back(w);
        }
      }
    }

    std::vector<int> plan_order = agents;
    std::sort(plan_order.begin(), plan_order.end(), [&](int x, int y) {
      int rx = round[inst_.goals[x]];
      int ry = round[inst_.goals[y]];
      if (rx != ry) return rx < ry;
      return inst_.agent_ids[x] < inst_.agent_ids[y];
    });

    for (int a : plan_order) {
      MapfOutcome outcome = plan_agent(a);
      if (outcome != MapfOutcome::Solved) return outcome;
      finished_[a] = true;
      outcome = drain_restore_queue();
      if (outcome != MapfOutcome::Solved) return outcome;
    }
    return MapfOutcome::Solved;
  }
};

// Removes pairs (agent u->v, same agent v->u) with no intervening move
// touching u or v; iterates to a fixpoint. Anything the pass removes leaves
// every intermediate configuration of other agents unchanged.
void smooth_moves(std::vector<SeqMove>& moves) {
  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<char> dead(moves.size(), 0);
    for (std::size_t i = 0; i < moves.size(); ++i) {
      if (dead[i]) continue;
      for (std::size_t j = i + 1; j < moves.size(); ++j) {
        if (dead[j]) continue;
        const SeqMove& m1 = moves[i];
        const SeqMove& m2 = moves[j];
        if (m2.agent == m1.agent) {
          if (m2.from == m1.to && m2.to == m1.from) {
            bool touched = false;
            for (std::size_t k = i + 1; k < j && !touched; ++k) {
              if (dead[k]) continue;
              touched = moves[k].from == m1.from || moves[k].from == m1.to ||
                        moves[k].to == m1.from || moves[k].to == m1.to;
            }
            if (!touched) {
              dead[i] = dead[j] = 1;
              changed = true;
            }
          }
          break;  // only the agent's immediately-next move can cancel m1
        }
        if (m2.from == m1.to || m2.to == m1.to || m2.to == m1.from) break;
      }
    }
    if (changed) {
      std::vector<SeqMove> kept;
      kept.reserve(moves.size());
      for (std::size_t i = 0; i < moves.size(); ++i) {
        if (!dead[i]) kept.push_back(moves[i]);
      }
      moves = std::move(kept);
    }
  }
}

MapfPlan moves_to_plan(const MapfInstance& inst, const std::vector<SeqMove>& moves) {
  // Greedy earliest-slot packing. A move claims both endpoint vertices for
  // its slot, so no two same-slot moves touch a common vertex (no vertex or
  // edge conflicts, and no same-slot follow chains) while the serial
  // solution's per-agent and per-vertex orders are preserved. Independent
  // moves therefore execute concurrently instead of one per index.
  const std::size_t k = inst.starts.size();
  std::vector<std::size_t> agent_free(k, 0);
  std::vector<std::size_t> vertex_free(inst.vertices.size(), 0);
  std::vector<std::size_t> slot(moves.size(), 0);
  std::size_t length = 0;
  for (std::size_t m = 0; m < moves.size(); ++m) {
    const SeqMove& mv = moves[m];
    const std::size_t t = std::max(
        {agent_free[mv.agent], vertex_free[mv.from], vertex_free[mv.to]});
    slot[m] = t;
    agent_free[mv.agent] = t + 1;
    vertex_free[mv.from] = t + 1;
    vertex_free[mv.to] = t + 1;
    length = std::max(length, t + 1);
  }
  MapfPlan plan;
  plan.actions.assign(k, {});
  for (auto& seq : plan.actions) seq.assign(length, MapfAction{});
  for (std::size_t m = 0; m < moves.size(); ++m) {
    plan.actions[moves[m].agent][slot[m]] = MapfAction{true, moves[m].to};
  }
  return plan;
}

}  // namespace

int MapfInstance::vertex_at(Cell c) const {
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    if (vertices[i].i == c.i && vertices[i].j == c.j) return static_cast<int>(i);
  }
  return -1;
}

MapfInstance build_grid_instance(const GridMap& map, Cell min_corner, Cell max_corner,
                                 const std::vector<Cell>& starts, const std::vector<Cell>& goals,
                                 const std::vector<int>& agent_ids) {
  MapfInstance inst;
  std::vector<std::vector<int>> id_grid;
  const int w = max_corner.i - min_corner.i + 1;
  const int h = max_corner.j - min_corner.j + 1;
  id_grid.assign(w, std::vector<int>(h, -1));
  for (int j = min_corner.j; j <= max_corner.j; ++j) {
    for (int i = min_corner.i; i <= max_corner.i; ++i) {
      if (map.traversable({i, j})) {
        id_grid[i - min_corner.i][j - min_corner.j] = static_cast<int>(inst.vertices.size());
        inst.vertices.push_back({i, j});
      }
    }
  }
  inst.adjacency.resize(inst.vertices.size());
  for (std::size_t v = 0; v < inst.vertices.size(); ++v) {
    const Cell c = inst.vertices[v];
    const Cell neighbors[4] = {{c.i, c.j - 1}, {c.i - 1, c.j}, {c.i + 1, c.j}, {c.i, c.j + 1}};
    for (const Cell& nb : neighbors) {
      if (nb.i < min_corner.i || nb.i > max_corner.i || nb.j < min_corner.j ||
          nb.j > max_corner.j) {
        continue;
      }
      int id = id_grid[nb.i - min_corner.i][nb.j - min_corner.j];
      if (id != -1) inst.adjacency[v].push_back(id);
    }
    std::sort(inst.adjacency[v].begin(), inst.adjacency[v].end());
  }
  for (const Cell& s : starts) inst.starts.push_back(inst.vertex_at(s));
  for (const Cell& g : goals) inst.goals.push_back(inst.vertex_at(g));
  inst.agent_ids = agent_ids;
  return inst;
}

MapfResult solve_push_and_rotate(const MapfInstance& instance, const PushRotateOptions& options) {
  MapfResult result;
  const std::size_t k = instance.starts.size();
  if (instance.goals.size() != k || instance.agent_ids.size() != k) return result;
  std::vector<char> taken_start(instance.vertices.size(), 0);
  std::vector<char> taken_goal(instance.vertices.size(), 0);
  for (std::size_t a = 0; a < k; ++a) {
    int s = instance.starts[a];
    int g = instance.goals[a];
    if (s < 0 || s >= static_cast<int>(instance.vertices.size()) || g < 0 ||
        g >= static_cast<int>(instance.vertices.size()) || taken_start[s] || taken_goal[g]) {
      return result;  // malformed instance
    }
    taken_start[s] = taken_goal[g] = 1;
  }

  std::size_t budget = options.move_budget;
  if (budget == 0) budget = 1000 + 60 * instance.vertices.size() * (k + 2);

  Solver solver(instance, budget);
  std::vector<SeqMove> moves;
  result.outcome = solver.run(moves);
  if (result.outcome != MapfOutcome::Solved) return result;

  if (options.smooth) smooth_moves(moves);
  result.plan = moves_to_plan(instance, moves);
  return result;
}

MapfPlan assign_action_duration(MapfPlan plan, double max_speed, double cell_size) {
  plan.action_duration = cell_size / max_speed;
  return plan;
}

PlanCheck validate_plan(const MapfInstance& instance, const MapfPlan& plan) {
  PlanCheck check;
  const std::size_t k = instance.starts.size();
  if (plan.actions.size() != k) {
    check.valid = false;
    check.reason = "plan must have one action sequence per agent";
    return check;
  }
  const std::size_t length = plan.length();
  for (std::size_t a = 0; a < k; ++a) {
    if (plan.actions[a].size() != length) {
      check.valid = false;
      check.agent_a = instance.agent_ids[a];
      check.reason = "action sequences differ in length";
      return check;
    }
  }

  std::vector<int> cur = instance.starts;
  std::vector<int> owner(instance.vertices.size(), -1);
  for (std::size_t t = 0; t < length; ++t) {
    std::vector<int> nxt = cur;
    for (std::size_t a = 0; a < k; ++a) {
      const MapfAction& act = plan.actions[a][t];
      if (!act.move) continue;
      const auto& adj = instance.adjacency[cur[a]];
      if (act.to < 0 || act.to >= static_cast<int>(instance.vertices.size()) ||
          !std::binary_search(adj.begin(), adj.end(), act.to)) {
        check.valid = false;
        check.index = t;
        check.agent_a = instance.agent_ids[a];
        check.reason = "move does not follow a graph edge";
        return check;
      }
      nxt[a] = act.to;
    }
    for (int& o : owner) o = -1;
    for (std::size_t a = 0; a < k; ++a) {
      if (owner[nxt[a]] != -1) {
        check.valid = false;
        check.index = t;
        check.agent_a = instance.agent_ids[owner[nxt[a]]];
        check.agent_b = instance.agent_ids[a];
        check.reason = "vertex conflict";
        return check;
      }
      owner[nxt[a]] = static_cast<int>(a);
    }
    for (std::size_t a = 0; a < k; ++a) {
      if (nxt[a] == cur[a]) continue;
      int other = owner[cur[a]];
      if (other != -1 && nxt[other] == cur[a] && cur[other] == nxt[a]) {
        check.valid = false;
        check.index = t;
        check.agent_a = instance.agent_ids[std::min<std::size_t>(a, other)];
        check.agent_b = instance.agent_ids[std::max<std::size_t>(a, other)];
        check.reason = "edge conflict";
        return check;
      }
    }
    cur = std::move(nxt);
  }
  for (std::size_t a = 0; a < k; ++a) {
    if (cur[a] != instance.goals[a]) {
      check.valid = false;
      check.index = length == 0 ? 0 : length - 1;
      check.agent_a = instance.agent_ids[a];
      check.reason = "agent does not end at its goal";
      return check;
    }
  }
  return check;
}

}  // namespace manav
