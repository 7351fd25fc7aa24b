#include "chroma/adversary.hpp"

#include <algorithm>
#include <cstdlib>
#include <deque>
#include <functional>
#include <iostream>
#include <sstream>

namespace chroma {

namespace {

constexpr int kPatchRadius = 5;

int round_of(const Vertex& v) { return v.view.depth(); }

Vertex state_at_level(const Vertex& v, int level) {
  return round_of(v) <= level ? v : ancestor_at_depth(v, level);
}

void collect_states(ProcessId p, const View& view, std::set<Vertex>& out) {
  if (!out.insert(Vertex(p, view)).second) return;
  if (view.is_input()) return;
  for (const auto& [q, w] : view.entries()) collect_states(q, w, out);
}

// The round-1 snapshot of a state, as a simplex of input vertices.
Simplex first_round_seen(const Vertex& v) {
  Vertex a1 = state_at_level(v, 1);
  std::vector<Vertex> inputs;
  for (const auto& [q, w] : a1.view.entries()) inputs.emplace_back(q, w);
  return Simplex(std::move(inputs));
}

// Whether some execution whose first scheduled set is exactly u (with u's
// inputs) contains the state v: every process visible in v must have seen u
// in round 1, and the processes of u must have seen exactly u.
bool in_label_execution(const Vertex& v, const Simplex& u) {
  if (round_of(v) < 1) return false;
  std::set<Vertex> seen;
  collect_states(v.color, v.view, seen);
  for (const auto& s : seen) {
    if (round_of(s) < 1) continue;
    Simplex seen1 = first_round_seen(s);
    if (u.has_color(s.color)) {
      if (seen1 != u) return false;
    } else if (!seen1.contains_face(u)) {
      return false;
    }
  }
  return true;
}

// The first scheduled set of the (complete) execution of a facet: the
// minimal round-1 snapshot among its vertices.
Simplex facet_first_block(const Simplex& facet) {
  Simplex best;
  for (const auto& v : facet.vertices()) {
    Simplex seen1 = first_round_seen(v);
    if (best.empty() || seen1.size() < best.size()) best = seen1;
  }
  return best;
}

using TermFn = std::function<bool(const Vertex&)>;

struct PatchGraph {
  std::vector<Vertex> verts;  // sorted
  std::vector<std::vector<int>> adj;

  explicit PatchGraph(const std::vector<Simplex>& facets) {
    for (const auto& f : facets)
      for (const auto& v : f.vertices()) verts.push_back(v);
    std::sort(verts.begin(), verts.end());
    verts.erase(std::unique(verts.begin(), verts.end()), verts.end());
    adj.resize(verts.size());
    std::vector<std::pair<int, int>> edges;
    for (const auto& f : facets) {
      const auto& vs = f.vertices();
      for (std::size_t i = 0; i < vs.size(); ++i)
        for (std::size_t j = i + 1; j < vs.size(); ++j) {
          int a = find(vs[i]), b = find(vs[j]);
          edges.emplace_back(std::min(a, b), std::max(a, b));
        }
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    for (const auto& [a, b] : edges) {
      adj[static_cast<std::size_t>(a)].push_back(b);
      adj[static_cast<std::size_t>(b)].push_back(a);
    }
  }

  int find(const Vertex& v) const {
    auto it = std::lower_bound(verts.begin(), verts.end(), v);
    if (it == verts.end() || !(*it == v)) return -1;
    return static_cast<int>(it - verts.begin());
  }
};

// 0-1 shortest path: an edge costs 1 iff both endpoints are active.
std::vector<int> active_bfs(const PatchGraph& g, const std::vector<Vertex>& from,
                            const TermFn& is_term) {
  std::vector<int> dist(g.verts.size(), kUnreachable);
  std::vector<char> term(g.verts.size());
  for (std::size_t i = 0; i < g.verts.size(); ++i)
    term[i] = is_term(g.verts[i]) ? 1 : 0;
  std::deque<int> q;
  for (const auto& v : from) {
    int i = g.find(v);
    if (i < 0) continue;
    if (dist[static_cast<std::size_t>(i)] != 0) {
      dist[static_cast<std::size_t>(i)] = 0;
      q.push_front(i);
    }
  }
  while (!q.empty()) {
    int a = q.front();
    q.pop_front();
    for (int b : g.adj[a]) {
      int w = (!term[a] && !term[b]) ? 1 : 0;
      if (dist[a] + w < dist[b]) {
        dist[b] = dist[a] + w;
        if (w == 0)
          q.push_front(b);
        else
          q.push_back(b);
      }
    }
  }
  return dist;
}

int set_distance(const std::vector<Simplex>& patch,
                 const std::vector<Vertex>& from, const std::vector<Vertex>& to,
                 const TermFn& is_term) {
  PatchGraph g(patch);
  auto dist = active_bfs(g, from, is_term);
  int best = kUnreachable;
  for (const auto& v : to) {
    int i = g.find(v);
    if (i >= 0) best = std::min(best, dist[static_cast<std::size_t>(i)]);
  }
  return best;
}

// Mirror of the non-uniform chromatic subdivision, facet-local and without
// carrier bookkeeping: terminated vertices are carried, the active part of
// every facet is subdivided by all ordered partitions.
std::vector<Simplex> patch_subdivide(const std::vector<Simplex>& facets,
                                     const TermFn& is_term) {
  std::set<Simplex> out;
  for (const auto& facet : facets) {
    std::vector<Vertex> terminated, active;
    for (const auto& v : facet.vertices())
      (is_term(v) ? terminated : active).push_back(v);
    Simplex term(terminated);
    if (active.empty()) {
      out.insert(term);
      continue;
    }
    Simplex act(active);
    for (const auto& part : ordered_partitions(act.id_set()))
      out.insert(join(term, facet_from_schedule(act, part)));
  }
  return std::vector<Simplex>(out.begin(), out.end());
}

// Facets whose nearest vertex is within `radius` of the seeds.
std::vector<Simplex> patch_prune(const std::vector<Simplex>& facets,
                                 const std::vector<Vertex>& seeds, int radius,
                                 const TermFn& is_term) {
  PatchGraph g(facets);
  auto dist = active_bfs(g, seeds, is_term);
  std::vector<Simplex> out;
  for (const auto& f : facets) {
    int best = kUnreachable;
    for (const auto& v : f.vertices())
      best = std::min(
          best, dist[static_cast<std::size_t>(g.find(v))]);
    if (best <= radius) out.push_back(f);
  }
  return out;
}

// Per-level radii for growing a radius-`radius` ball at the top level by
// local subdivision: subdividing at least doubles positive active
// distances, so a vertex within r of the seeds one level up has its
// ancestor within r/2 + 1 of the seeds' ancestors.
std::vector<int> radius_chain(int radius, int levels) {
  std::vector<int> r(static_cast<std::size_t>(levels) + 1);
  r[static_cast<std::size_t>(levels)] = radius;
  for (int i = levels - 1; i >= 0; --i)
    r[static_cast<std::size_t>(i)] =
        r[static_cast<std::size_t>(i) + 1] / 2 + 1;
  return r;
}

TermFn term_lookup(const std::map<Vertex, TerminationRecord>& term) {
  return [&term](const Vertex& v) { return term.count(v) > 0; };
}

bool adv_debug() {
  static const bool on = std::getenv("CHROMA_ADV_DEBUG") != nullptr;
  return on;
}

std::string describe(const Decision& d) {
  return d.is_output() ? d.value : "⊥";
}

}  // namespace

int active_distance(const std::vector<Vertex>& a, const std::vector<Vertex>& b,
                    const ColoredComplex& k, const DecisionMap& delta) {
  for (const auto& v : a)
    for (const auto& w : b)
      if (v == w) return 0;
  return set_distance(k.facets(), a, b, [&delta](const Vertex& v) {
    return delta.get(v).is_output();
  });
}

int patch_distance(const std::vector<Simplex>& patch,
                   const std::vector<Vertex>& a, const std::vector<Vertex>& b,
                   const std::map<Vertex, TerminationRecord>& term) {
  for (const auto& v : a)
    for (const auto& w : b)
      if (v == w) return 0;
  return set_distance(patch, a, b, term_lookup(term));
}

Label execution_label(const ColoredComplex& input, const Configuration& c) {
  if (c.provenance.empty())
    throw BadLabel("the configuration has not scheduled anyone yet");
  return make_label(input,
                    {c.inputs.restricted_to(c.provenance.steps.front())});
}

Simplex input_carrier(const Vertex& v) {
  std::set<Vertex> seen;
  collect_states(v.color, v.view, seen);
  std::vector<Vertex> inputs;
  for (const auto& s : seen)
    if (s.view.is_input()) inputs.push_back(s);
  return Simplex(std::move(inputs));
}

Simplex depth_facet(const Configuration& c, int r_m) {
  std::set<ProcessId> ids = c.inputs.id_set();
  std::map<ProcessId, int> done;
  std::vector<Schedule> rounds(static_cast<std::size_t>(r_m));
  for (const auto& step : c.provenance.steps) {
    int r = done[*step.begin()];  // co-poised: one round per step
    if (r < r_m) rounds[static_cast<std::size_t>(r)].steps.push_back(step);
    for (ProcessId q : step) done[q] += 1;
  }
  for (auto& round : rounds) {
    std::set<ProcessId> late = ids;
    for (const auto& step : round.steps)
      for (ProcessId q : step) late.erase(q);
    if (!late.empty()) round.steps.push_back(late);
  }
  return facet_from_rounds(c.inputs, rounds);
}

std::vector<Simplex> local_ball(NeighborContext& ctx,
                                const std::map<Vertex, TerminationRecord>& term,
                                const std::vector<Vertex>& seeds, int t,
                                int radius) {
  int r_m = ctx.r_m();
  auto seeds_at = [&](int level) {
    std::set<Vertex> s;
    for (const auto& v : seeds) s.insert(state_at_level(v, level));
    return std::vector<Vertex>(s.begin(), s.end());
  };
  TermFn is_term = term_lookup(term);
  std::vector<int> chain = radius_chain(radius, t - r_m);

  // Start: a ball in the depth-r_m complex, grown through the facet index.
  // No state terminates at or below the decision depth, so plain edge
  // distance is the active distance here.
  int rad0 = chain[0];
  std::map<Vertex, int> dist;
  std::deque<Vertex> q;
  for (const auto& v : seeds_at(r_m)) {
    dist[v] = 0;
    q.push_back(v);
  }
  std::set<Simplex> start;
  while (!q.empty()) {
    Vertex v = q.front();
    q.pop_front();
    int d = dist[v];
    for (const auto& f : ctx.facets_at(v)) {
      start.insert(f);
      if (d >= rad0) continue;
      for (const auto& w : f.vertices())
        if (!dist.count(w)) {
          dist[w] = d + 1;
          q.push_back(w);
        }
    }
  }
  std::vector<Simplex> facets(start.begin(), start.end());
  if (adv_debug())
    std::cerr << "[ball] level " << r_m << " rad " << rad0 << " facets "
              << facets.size() << "\n";
  for (int level = r_m + 1; level <= t; ++level) {
    facets = patch_subdivide(facets, is_term);
    facets = patch_prune(facets, seeds_at(level),
                         chain[static_cast<std::size_t>(level - r_m)], is_term);
    if (adv_debug())
      std::cerr << "[ball] level " << level << " rad "
                << chain[static_cast<std::size_t>(level - r_m)] << " facets "
                << facets.size() << "\n";
  }
  return facets;
}

Decision AdversaryState::value_of(const Vertex& v) const {
  auto it = terminated.find(v);
  return it == terminated.end() ? Decision::bottom()
                                : Decision::output(it->second.value);
}

const PartialProtocol& AdversaryState::family_member(const Label& l) const {
  auto it = family_index.find(l);
  if (it == family_index.end())
    throw BadProtocol("no family member for label " + l.to_string());
  return (*family)[static_cast<std::size_t>(it->second)];
}

AdversaryState init_adversary(ColoredTask task,
                              std::vector<PartialProtocol> family, int r_a,
                              int r_s) {
  if (family.empty()) throw BadProtocol("the protocol family is empty");
  if (r_a < 1) throw BadProtocol("the head start must be at least one round");
  if (r_s < 1) throw BadProtocol("the cooldown must be at least one round");
  AdversaryState st;
  st.r_a = r_a;
  st.r_s = r_s;
  st.r_m = 2;
  for (const auto& p : family) st.r_m = std::max(st.r_m, p.r_m);
  for (auto& p : family)
    if (p.r_m < st.r_m) p = pad_to_round(p, st.r_m);
  st.task = std::move(task);
  st.family =
      std::make_shared<const std::vector<PartialProtocol>>(std::move(family));
  for (std::size_t i = 0; i < st.family->size(); ++i)
    st.family_index[(*st.family)[i].label] = static_cast<int>(i);
  st.t = st.r_m + r_a + 1;
  st.ctx = std::make_shared<NeighborContext>(st.task.input, st.r_m);
  for (const auto& facet : st.task.input.facets()) {
    Configuration c = Configuration::initial(facet);
    st.reached[c.key()] = c;
  }
  return st;
}

namespace {

// Whether terminating v with this value inside the guarded window would make
// a recorded NULL answer reachable after all.
bool window_contains(const NullGuard& g, const Vertex& v) {
  if (round_of(v) > g.round_cap) return false;
  if (!g.procs.count(v.color)) return false;
  std::set<Vertex> seen;
  collect_states(v.color, v.view, seen);
  for (const auto& s : seen) {
    auto it = g.config.procs.find(s.color);
    if (it == g.config.procs.end()) return false;
    int r = round_of(s);
    if (r > it->second.round) {
      if (!g.procs.count(s.color) || it->second.terminated) return false;
      if (state_at_level(s, it->second.round) !=
          Vertex(s.color, it->second.view))
        return false;
    } else {
      if (state_at_level(Vertex(s.color, it->second.view), r) != s)
        return false;
    }
  }
  return true;
}

bool suppressed(const AdversaryState& st, const Vertex& v,
                const std::string& value) {
  for (const auto& g : st.null_guards) {
    auto it = g.f.find(v.color);
    if (it == g.f.end() || it->second != value) continue;
    if (window_contains(g, v)) return true;
  }
  return false;
}

// Recompute the set's cached distance map: one multi-source traversal from
// the members over the patch, under the current terminations.
void refresh_set(const AdversaryState& st, TerminatedSet& s) {
  PatchGraph g(s.patch);
  auto dist = active_bfs(g, s.members, term_lookup(st.terminated));
  s.dist.clear();
  for (std::size_t i = 0; i < g.verts.size(); ++i)
    if (dist[i] != kUnreachable) s.dist.emplace(g.verts[i], dist[i]);
}

// Cached distance from v to the set's members; exact within the patch
// radius, kUnreachable beyond the patch.
int distance_to_set(const TerminatedSet& s, const Vertex& v) {
  auto it = s.dist.find(v);
  return it == s.dist.end() ? kUnreachable : it->second;
}

// Terminating v must keep it at active distance >= 3 from every set of a
// different label. The cached distances treat v (and any vertex terminated
// earlier in the same query) as active; each such termination can only
// shorten a path by one, and each was cleared by its own check, so
// requiring >= 4 here keeps the true post-termination distance >= 3.
bool clear_of_foreign_sets(const AdversaryState& st, const Vertex& v,
                           const Label& label) {
  for (const auto& s : st.sets) {
    if (s.label == label) continue;
    if (distance_to_set(s, v) < 4) return false;
  }
  return true;
}

void merge_sets(AdversaryState& st, std::size_t into, std::size_t from) {
  auto& a = st.sets[into];
  auto& b = st.sets[from];
  a.members.insert(a.members.end(), b.members.begin(), b.members.end());
  std::set<Simplex> facets(a.patch.begin(), a.patch.end());
  facets.insert(b.patch.begin(), b.patch.end());
  a.patch.assign(facets.begin(), facets.end());
  st.sets.erase(st.sets.begin() + static_cast<long>(from));
}

// Create a set for the vertices, or fold them into (and merge) same-labelled
// sets already within distance two.
int adopt_into_set(AdversaryState& st, const Label& label,
                   const std::vector<Vertex>& verts) {
  int target = -1;
  for (std::size_t i = 0; i < st.sets.size(); ++i) {
    if (st.sets[i].label != label) continue;
    bool close = false;
    for (const auto& v : verts)
      if (distance_to_set(st.sets[i], v) <= 2) {
        close = true;
        break;
      }
    if (!close) continue;
    if (target < 0) {
      target = static_cast<int>(i);
    } else {
      merge_sets(st, static_cast<std::size_t>(target), i);
      --i;
    }
  }
  if (target < 0) {
    TerminatedSet s;
    s.label = label;
    s.members = verts;
    s.patch = local_ball(*st.ctx, st.terminated, verts, st.t, kPatchRadius);
    st.sets.push_back(std::move(s));
    refresh_set(st, st.sets.back());
    return static_cast<int>(st.sets.size()) - 1;
  }
  auto& s = st.sets[static_cast<std::size_t>(target)];
  s.members.insert(s.members.end(), verts.begin(), verts.end());
  refresh_set(st, s);
  return target;
}

void terminate(AdversaryState& st, Configuration& c2, ProcessId q,
               const std::string& value, const Label& label, int rule,
               int set_index, const Simplex& s_rm) {
  Vertex v = c2.state_vertex(q);
  TerminationRecord rec;
  rec.value = value;
  rec.label = label;
  rec.level = st.t;
  rec.rule = rule;
  rec.set_index = set_index;
  rec.depth_facet_rm = s_rm;
  st.terminated.emplace(v, rec);
  c2.procs[q].terminated = true;
  c2.procs[q].output = value;
}

// Frontier decisions for the processes of p in c2. Returns whether any
// termination happened.
bool apply_rules(AdversaryState& st, Configuration& c2,
                 const std::set<ProcessId>& p) {
  Label u_exec = execution_label(st.task.input, c2);
  Simplex s_rm = depth_facet(c2, st.r_m);
  std::vector<ProcessId> fresh;
  for (ProcessId q : p)
    if (!c2.procs[q].terminated) fresh.push_back(q);
  bool gate1 = st.t - st.last_rule1 >= st.r_s;
  bool gate2 = st.t - st.last_rule2 >= st.r_s;
  bool any = false;

  // Rule 1: adopt the matching family protocol's decision of the ancestor.
  auto fam = st.family_index.find(u_exec);
  if (gate1 && fam != st.family_index.end()) {
    const PartialProtocol& fp =
        (*st.family)[static_cast<std::size_t>(fam->second)];
    std::vector<std::pair<ProcessId, std::string>> kept;
    std::vector<Vertex> verts;
    for (ProcessId q : fresh) {
      Vertex v = c2.state_vertex(q);
      Decision d = fp.delta.get(ancestor_at_depth(v, st.r_m));
      if (!d.is_output()) continue;
      if (suppressed(st, v, d.value)) continue;
      if (!clear_of_foreign_sets(st, v, u_exec)) continue;
      kept.emplace_back(q, d.value);
      verts.push_back(v);
    }
    if (!kept.empty()) {
      int si = adopt_into_set(st, u_exec, verts);
      for (const auto& [q, val] : kept)
        terminate(st, c2, q, val, u_exec, 1, si, s_rm);
      st.last_rule1 = st.t;
      any = true;
      std::vector<ProcessId> rest;
      for (ProcessId q : fresh)
        if (!c2.procs[q].terminated) rest.push_back(q);
      fresh = rest;
    }
  }

  // Rule 2: extend an adjacent terminated set through its canonical
  // neighbor's decision.
  if (gate2) {
    bool used2 = false;
    for (ProcessId q : fresh) {
      Vertex v = c2.state_vertex(q);
      for (std::size_t i = 0; i < st.sets.size(); ++i) {
        if (distance_to_set(st.sets[i], v) > 1) continue;
        Label u2 = st.sets[i].label;
        if (!clear_of_foreign_sets(st, v, u2)) continue;
        NeighborResult nb;
        try {
          nb = canonical_neighbor(*st.ctx, s_rm, u2.sequence.front());
        } catch (const NoIntersection&) {
          continue;
        }
        auto nv = nb.neighbor.vertex_of(q);
        if (!nv) continue;
        Decision d = st.family_member(u2).delta.get(*nv);
        if (!d.is_output()) continue;
        if (suppressed(st, v, d.value)) continue;
        st.sets[i].members.push_back(v);
        terminate(st, c2, q, d.value, u2, 2, static_cast<int>(i), s_rm);
        refresh_set(st, st.sets[i]);
        used2 = true;
        any = true;
        break;
      }
    }
    if (used2) st.last_rule2 = st.t;
  }
  return any;
}

void advance_frontier(AdversaryState& st) {
  st.t += 1;
  TermFn is_term = term_lookup(st.terminated);
  for (auto& s : st.sets) {
    s.patch = patch_subdivide(s.patch, is_term);
    s.patch = patch_prune(s.patch, s.members, kPatchRadius, is_term);
    refresh_set(st, s);
  }
}

bool audit_no_violation(const AdversaryState& st, const Configuration& c2,
                        std::string& note) {
  std::vector<Vertex> outs;
  Simplex car;
  for (const auto& [q, ps] : c2.procs)
    if (ps.terminated) {
      outs.emplace_back(q, View::input(ps.output));
      car = join(car, input_carrier(Vertex(q, ps.view)));
    }
  if (outs.empty()) return true;
  Simplex decided(std::move(outs));
  try {
    if (st.task.delta.at(car).contains(decided)) return true;
  } catch (const TopologyError&) {
  }
  note = "outputs " + decided.to_string() + " not allowed for carrier " +
         car.to_string();
  return false;
}

bool audit_separation(const AdversaryState& st, std::string& note) {
  for (std::size_t i = 0; i < st.sets.size(); ++i)
    for (std::size_t j = 0; j < st.sets.size(); ++j) {
      if (i == j || st.sets[i].label == st.sets[j].label) continue;
      int d = kUnreachable;
      for (const auto& w : st.sets[j].members)
        d = std::min(d, distance_to_set(st.sets[i], w));
      if (d < 3) {
        note = "sets " + st.sets[i].label.to_string() + " and " +
               st.sets[j].label.to_string() + " at active distance " +
               std::to_string(d);
        return false;
      }
    }
  return true;
}

void record(AdversaryState& st, const std::string& kind,
            const std::string& key, const std::set<ProcessId>& procs,
            const std::string& response, bool audit_ok,
            const std::string& note) {
  TranscriptRecord r;
  r.phase = st.phase;
  r.kind = kind;
  r.config_key = key;
  r.procs = procs;
  r.response = response;
  r.t_after = st.t;
  r.audit_ok = audit_ok;
  r.note = note;
  st.transcript.push_back(std::move(r));
  if (!audit_ok) {
    st.audit_failures += 1;
    if (st.first_audit_failure.empty()) st.first_audit_failure = note;
  }
}

}  // namespace

QueryResponse handle_query(AdversaryState& st, const Configuration& c,
                           const std::set<ProcessId>& p) {
  auto it = st.reached.find(c.key());
  if (it == st.reached.end())
    throw NotReached("configuration was never reached: " + c.key());
  Configuration c2;
  try {
    c2 = apply_schedule(it->second, p);
  } catch (const InactiveProcess& e) {
    throw NotCoPoised(e.what());
  } catch (const MixedObjects& e) {
    throw NotCoPoised(e.what());
  }
  int round2 = c2.procs.at(*p.begin()).round;
  bool frontier = round2 >= st.t;

  // A state can coincide with one terminated along another schedule.
  for (ProcessId q : p) {
    auto rec = st.terminated.find(c2.state_vertex(q));
    if (rec != st.terminated.end()) {
      c2.procs[q].terminated = true;
      c2.procs[q].output = rec->second.value;
    }
  }
  bool changed = false;
  if (frontier) {
    changed = apply_rules(st, c2, p);
    advance_frontier(st);
  }

  std::string note;
  bool ok = audit_no_violation(st, c2, note);
  if (ok && changed) ok = audit_separation(st, note);

  st.reached[c2.key()] = c2;
  QueryResponse resp;
  resp.after = c2;
  std::ostringstream line;
  for (ProcessId q : p) {
    Decision d = c2.procs[q].terminated
                     ? Decision::output(c2.procs[q].output)
                     : Decision::bottom();
    resp.values[q] = d;
    line << "p" << q << "=" << describe(d) << " ";
  }
  record(st, "query", c.key(), p, line.str(), ok, note);
  return resp;
}

namespace {

// P-only configurations from c0 until every constrained process reaches the
// family's decision depth; candidate split points for the drive phase.
std::vector<Configuration> assignment_profiles(
    const AdversaryState& st, const Configuration& c0,
    const std::set<ProcessId>& p, const std::map<ProcessId, std::string>& f) {
  std::vector<Configuration> out;
  std::set<std::string> seen;
  std::deque<Configuration> queue{c0};
  seen.insert(c0.key());
  const std::size_t cap = 4000;
  auto complete = [&](const Configuration& c) {
    for (const auto& [q, val] : f) {
      const auto& ps = c.procs.at(q);
      if (!ps.terminated && ps.round < st.r_m) return false;
    }
    return true;
  };
  while (!queue.empty() && out.size() + seen.size() < cap) {
    Configuration c = queue.front();
    queue.pop_front();
    if (complete(c)) {
      out.push_back(c);
      continue;
    }
    // group the schedulable processes by the object they are poised on
    std::map<int, std::vector<ProcessId>> groups;
    for (ProcessId q : p) {
      auto pit = c.procs.find(q);
      if (pit == c.procs.end() || pit->second.terminated) continue;
      if (pit->second.round >= st.r_m) continue;
      groups[pit->second.round].push_back(q);
    }
    if (groups.empty()) {
      out.push_back(c);  // everyone stuck below depth: still a candidate
      continue;
    }
    for (const auto& [round, procs] : groups) {
      int n = static_cast<int>(procs.size());
      for (int mask = 1; mask < (1 << n); ++mask) {
        std::set<ProcessId> step;
        for (int b = 0; b < n; ++b)
          if (mask & (1 << b)) step.insert(procs[static_cast<std::size_t>(b)]);
        Configuration next = apply_schedule(c, step);
        if (seen.insert(next.key()).second) queue.push_back(next);
      }
    }
  }
  return out;
}

struct DriveResult {
  bool ok = false;
  std::vector<std::set<ProcessId>> steps;
};

// Replay the profile's extra steps on a copy and run the constrained
// processes, one at a time, until each terminates; succeeds when the
// outputs are exactly the demanded ones.
DriveResult drive_to_outputs(const AdversaryState& base,
                             const Configuration& from,
                             const Configuration& profile,
                             const std::vector<ProcessId>& order,
                             const std::map<ProcessId, std::string>& f) {
  DriveResult result;
  AdversaryState clone = base;
  Configuration cur = from;
  const auto& pre = from.provenance.steps;
  const auto& all = profile.provenance.steps;
  try {
    for (std::size_t i = pre.size(); i < all.size(); ++i) {
      auto resp = handle_query(clone, cur, all[i]);
      cur = resp.after;
      result.steps.push_back(all[i]);
    }
    for (ProcessId q : order) {
      if (cur.procs.at(q).terminated) continue;
      int budget = clone.t - cur.procs.at(q).round + clone.r_s + 8;
      while (!cur.procs.at(q).terminated && budget-- > 0) {
        auto resp = handle_query(clone, cur, {q});
        cur = resp.after;
        result.steps.push_back({q});
      }
      if (!cur.procs.at(q).terminated) return result;
    }
  } catch (const TopologyError&) {
    return result;
  }
  for (const auto& [q, val] : f)
    if (cur.procs.at(q).output != val) return result;
  result.ok = true;
  return result;
}

}  // namespace

std::optional<Schedule> handle_assignment_query(
    AdversaryState& st, const Configuration& c, const std::set<ProcessId>& p,
    const std::map<ProcessId, std::string>& f) {
  auto it = st.reached.find(c.key());
  if (it == st.reached.end())
    throw NotReached("configuration was never reached: " + c.key());
  for (const auto& [q, val] : f)
    if (!p.count(q))
      throw NotCoPoised("the demanded outputs constrain a process outside P");
  const Configuration c0 = it->second;

  auto satisfied = [&](const Configuration& e) {
    for (const auto& [q, val] : f) {
      const auto& ps = e.procs.at(q);
      if (!ps.terminated || ps.output != val) return false;
    }
    return true;
  };
  if (satisfied(c0)) {
    Schedule none;
    st.answers.push_back({c0.key(), none, f});
    record(st, "assignment", c.key(), p, "already satisfied", true, "");
    return none;
  }

  std::vector<ProcessId> order;
  for (const auto& [q, val] : f) order.push_back(q);
  std::sort(order.begin(), order.end());

  for (const auto& profile : assignment_profiles(st, c0, p, f)) {
    // Cheap screen: with no terminated sets the only decisions available
    // are the family's, fixed by the depth-r_m state.
    if (st.sets.empty() && !profile.provenance.empty()) {
      Label u = execution_label(st.task.input, profile);
      auto fam = st.family_index.find(u);
      if (fam != st.family_index.end()) {
        const auto& fp = (*st.family)[static_cast<std::size_t>(fam->second)];
        bool plausible = true;
        for (const auto& [q, val] : f) {
          const auto& ps = profile.procs.at(q);
          if (ps.terminated) {
            if (ps.output != val) plausible = false;
          } else if (ps.round >= st.r_m) {
            Decision d = fp.delta.get(
                state_at_level(Vertex(q, ps.view), st.r_m));
            if (!d.is_output() || d.value != val) plausible = false;
          }
        }
        if (!plausible) continue;
      }
    }
    std::vector<ProcessId> perm = order;
    do {
      DriveResult r = drive_to_outputs(st, c0, profile, perm, f);
      if (!r.ok) continue;
      // Commit: replay the very same steps on the real state.
      Configuration cur = c0;
      for (const auto& step : r.steps) cur = handle_query(st, cur, step).after;
      Schedule sched{r.steps};
      st.answers.push_back({c0.key(), sched, f});
      record(st, "assignment", c.key(), p, sched.to_string(), true, "");
      return sched;
    } while (std::next_permutation(perm.begin(), perm.end()));
  }

  NullGuard g;
  g.config = c0;
  g.procs = p;
  g.f = f;
  g.round_cap = st.t + 2;
  st.null_guards.push_back(std::move(g));
  record(st, "assignment", c.key(), p, "NULL", true, "");
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Finalization.

namespace {

int ceil_log2(long x) {
  int k = 0;
  long v = 1;
  while (v < x) {
    v <<= 1;
    ++k;
  }
  return k;
}

struct ForeignSet {
  std::size_t index;               // into st.sets
  std::vector<Vertex> members_in;  // members inside the committed complex
};

// Walk from a simplex near the set to the nearest shared replay terminal.
std::vector<Simplex> bridge_walk(AdversaryState& st, const Simplex& u,
                                 const Label& foreign,
                                 const Simplex& anchor_facet) {
  const Simplex& u2 = foreign.sequence.front();
  ColoredComplex q = intersection_complex(*st.ctx, u, u2, st.r_m);
  if (q.empty())
    throw CannotFinalize("the committed and foreign executions are disjoint");
  int kq = q.dim();
  std::vector<Simplex> nodes = q.simplices(kq);

  // Terminals: shared round-1 simplices whose concurrent replays agree.
  const auto& fam_u = st.family_member(make_label(st.task.input, {u}));
  const auto& fam_f = st.family_member(foreign);
  ColoredComplex shared1 =
      complex_intersection(fam_u.f(1).complex, fam_f.f(1).complex);
  std::set<Simplex> terminals;
  for (const auto& s1 : shared1.simplices(kq)) {
    CenConfiguration ca = cen(s1, fam_u);
    CenConfiguration cb = cen(s1, fam_f);
    if (ca.outputs == cb.outputs) terminals.insert(ca.final_simplex);
  }
  if (terminals.empty())
    throw CannotFinalize("no shared concurrent replay agrees for labels " +
                         u.to_string() + " and " + u2.to_string());

  // Start node: prefer one containing the projection of the anchor facet.
  Simplex proj;
  try {
    proj = project(*st.ctx, anchor_facet, u2);
  } catch (const NoIntersection&) {
  }
  auto prefers = [&](const Simplex& n) {
    if (!proj.empty() && n.contains_face(proj)) return 2;
    for (const auto& v : n.vertices())
      if (anchor_facet.contains(v)) return 1;
    return 0;
  };
  std::size_t s0 = 0;
  for (std::size_t i = 1; i < nodes.size(); ++i)
    if (prefers(nodes[i]) > prefers(nodes[s0])) s0 = i;

  // BFS over shared (kq-1)-faces to the nearest terminal.
  std::map<Simplex, std::vector<std::size_t>> by_face;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    for (const auto& face : nodes[i].faces(kq - 1))
      by_face[face].push_back(i);
  std::vector<int> prev(nodes.size(), -2);
  std::deque<std::size_t> queue{s0};
  prev[s0] = -1;
  std::size_t found = nodes.size();
  if (terminals.count(nodes[s0])) found = s0;
  while (!queue.empty() && found == nodes.size()) {
    std::size_t a = queue.front();
    queue.pop_front();
    for (const auto& face : nodes[a].faces(kq - 1))
      for (std::size_t b : by_face[face]) {
        if (prev[b] != -2) continue;
        prev[b] = static_cast<int>(a);
        if (terminals.count(nodes[b])) {
          found = b;
          break;
        }
        queue.push_back(b);
      }
  }
  if (found == nodes.size())
    throw CannotFinalize("no walk reaches an agreeing replay for labels " +
                         u.to_string() + " and " + u2.to_string());
  std::vector<Simplex> walk;
  for (int i = static_cast<int>(found); i != -1; i = prev[static_cast<std::size_t>(i)])
    walk.push_back(nodes[static_cast<std::size_t>(i)]);
  std::reverse(walk.begin(), walk.end());
  return walk;
}

std::string layer_value(const PartialProtocol& fam, const Simplex& layer,
                        ProcessId pid) {
  auto v = layer.vertex_of(pid);
  Decision d = fam.delta.get(v ? *v : layer.vertices().front());
  if (!d.is_output())
    throw CannotFinalize("layer simplex " + layer.to_string() +
                         " carries no output");
  return d.value;
}

void set_decided(std::map<Vertex, Decision>& decided, const Vertex& v,
                 const std::string& value) {
  auto [it, fresh] = decided.emplace(v, Decision::output(value));
  if (!fresh && it->second.value != value)
    throw CannotFinalize("conflicting assignments at " + v.to_string() +
                         ": " + it->second.value + " vs " + value);
}

}  // namespace

Decision FinalizedProtocol::value(const Vertex& v) const {
  auto it = decided.find(v);
  if (it != decided.end()) return it->second;
  if (v.view.depth() == t_final)
    return base.delta.get(ancestor_at_depth(v, r_m));
  return Decision::bottom();
}

FinalizedProtocol finalize(AdversaryState& st, const Configuration& c_chosen) {
  auto it = st.reached.find(c_chosen.key());
  if (it == st.reached.end())
    throw NotChoosable("configuration was never reached: " + c_chosen.key());
  const Configuration& chosen = it->second;
  if (chosen.provenance.empty())
    throw NotChoosable("the chosen configuration has an empty schedule");

  Label u_label = execution_label(st.task.input, chosen);
  const Simplex& u = u_label.sequence.front();
  auto fam = st.family_index.find(u_label);
  if (fam == st.family_index.end())
    throw NotChoosable("no family member for label " + u_label.to_string());

  FinalizedProtocol fp;
  fp.label = u_label;
  fp.r_m = st.r_m;
  fp.base = (*st.family)[static_cast<std::size_t>(fam->second)];

  // Game terminations inside the committed complex keep their outputs.
  for (const auto& [v, rec] : st.terminated)
    if (in_label_execution(v, u)) fp.decided[v] = Decision::output(rec.value);

  // Foreign-labelled sets reaching into the committed complex need bridging.
  std::vector<ForeignSet> foreign;
  long threshold = 3;
  for (std::size_t i = 0; i < st.sets.size(); ++i) {
    if (st.sets[i].label == u_label) continue;
    ForeignSet fs;
    fs.index = i;
    for (const auto& w : st.sets[i].members)
      if (in_label_execution(w, u)) fs.members_in.push_back(w);
    if (fs.members_in.empty()) continue;
    ColoredComplex q = intersection_complex(
        *st.ctx, u, st.sets[i].label.sequence.front(), st.r_m);
    threshold = std::max(
        threshold, 2L * (static_cast<long>(q.simplices(q.dim()).size()) + 4));
    foreign.push_back(std::move(fs));
  }

  // Extra subdivisions: separation at least 3 doubles each level, so after k
  // levels every foreign pair is farther apart than any bridge ball is wide.
  int k = foreign.empty() ? 0 : std::max(3, ceil_log2((threshold + 2) / 3));
  fp.t_final = st.t + k;

  for (const auto& fs : foreign) {
    const TerminatedSet& set = st.sets[fs.index];
    const auto& fam_f = st.family_member(set.label);
    Simplex anchor =
        st.terminated.at(fs.members_in.front()).depth_facet_rm;
    std::vector<Simplex> walk = bridge_walk(st, u, set.label, anchor);
    int e = static_cast<int>(walk.size()) - 1;
    int radius = 2 * e + 6;

    std::vector<Simplex> ball =
        local_ball(*st.ctx, st.terminated, fs.members_in, fp.t_final, radius);
    std::vector<Simplex> inside;
    for (const auto& f : ball)
      if (facet_first_block(f) == u) inside.push_back(f);
    if (inside.empty())
      throw CannotFinalize("no committed facet near set " +
                           set.label.to_string());

    PatchGraph g(inside);
    auto dist = active_bfs(g, fs.members_in, term_lookup(st.terminated));
    for (std::size_t vi = 0; vi < g.verts.size(); ++vi) {
      const Vertex& v = g.verts[vi];
      if (st.terminated.count(v) || v.view.depth() != fp.t_final) continue;
      int ring = dist[vi];
      if (ring < 1 || ring > 2 * e + 2) continue;
      std::string value;
      if (ring == 1) {
        // terminated with the foreign label, via the canonical neighbor
        Simplex facet;
        for (const auto& f : inside)
          if (f.contains(v)) {
            facet = f;
            break;
          }
        std::vector<Vertex> anc;
        for (const auto& w : facet.vertices())
          anc.push_back(state_at_level(w, st.r_m));
        NeighborResult nb;
        try {
          nb = canonical_neighbor(*st.ctx, Simplex(anc),
                                  set.label.sequence.front());
        } catch (const NoIntersection&) {
          throw CannotFinalize("no neighbor for the innermost ring at " +
                               v.to_string());
        }
        auto nv = nb.neighbor.vertex_of(v.color);
        Decision d = fam_f.delta.get(nv ? *nv : nb.neighbor.vertices().front());
        if (!d.is_output())
          throw CannotFinalize("undecided neighbor at " + v.to_string());
        value = d.value;
      } else if (ring <= e + 1) {
        value = layer_value(fam_f, walk[static_cast<std::size_t>(ring - 1)],
                            v.color);
      } else {
        value = layer_value(fp.base,
                            walk[static_cast<std::size_t>(2 * e + 2 - ring)],
                            v.color);
      }
      set_decided(fp.decided, v, value);
    }
    fp.audited.insert(fp.audited.end(), inside.begin(), inside.end());
    BridgeReport br;
    br.foreign = set.label;
    br.walk = std::move(walk);
    br.rings = 2 * e + 2;
    fp.bridges.push_back(std::move(br));
  }

  record(st, "end-phase", c_chosen.key(), {},
         "finalized with label " + u_label.to_string(), true, "");
  return fp;
}

SolvesWitness finalized_solves(const FinalizedProtocol& fp,
                               const ColoredTask& t) {
  SolvesWitness w = solves(fp.base, t);
  if (!w.ok) return w;
  for (const auto& facet : fp.audited) {
    std::vector<Vertex> outs;
    Simplex car;
    for (const auto& v : facet.vertices()) {
      Decision d = fp.value(v);
      if (!d.is_output()) {
        w.ok = false;
        w.simplex = facet;
        return w;
      }
      outs.emplace_back(v.color, View::input(d.value));
      car = join(car, input_carrier(v));
    }
    std::set<Vertex> dedup(outs.begin(), outs.end());
    Simplex decided(std::vector<Vertex>(dedup.begin(), dedup.end()));
    if (!t.delta.at(car).contains(decided)) {
      w.ok = false;
      w.simplex = facet;
      w.outputs = decided;
      w.carrier_simplex = car;
      return w;
    }
  }
  return w;
}

}  // namespace chroma
