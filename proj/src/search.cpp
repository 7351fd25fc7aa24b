#include "chroma/search.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <sstream>

namespace chroma {

namespace {

struct BudgetCounter {
  long cap;
  long nodes = 0;
  bool hit = false;

  // One unit of search work; false once the budget is exhausted.
  bool tick() {
    if (nodes >= cap) {
      hit = true;
      return false;
    }
    ++nodes;
    return true;
  }
};

// Drops the entries of the given processes from a snapshot, recursively:
// the view the process would have held had it never read them.
class StripView {
 public:
  explicit StripView(std::set<ProcessId> ids) : ids_(std::move(ids)) {}

  View operator()(const View& v) {
    if (v.is_input()) return v;
    auto it = memo_.find(v.id());
    if (it != memo_.end()) return it->second;
    std::vector<std::pair<ProcessId, View>> kept;
    for (const auto& [q, w] : v.entries())
      if (!ids_.count(q)) kept.emplace_back(q, (*this)(w));
    View out = View::snapshot(std::move(kept));
    memo_.emplace(v.id(), out);
    return out;
  }

 private:
  std::set<ProcessId> ids_;
  std::map<std::uint32_t, View> memo_;
};

// The terminal states reached from a round-1 simplex by letting its
// processes run concurrently until round r_m.
Simplex cen_terminal(const Simplex& s, int r_m) {
  Simplex cur = s;
  for (int round = 2; round <= r_m; ++round) {
    std::vector<std::pair<ProcessId, View>> entries;
    for (const auto& v : cur.vertices()) entries.emplace_back(v.color, v.view);
    View snap = View::snapshot(entries);
    std::vector<Vertex> next;
    for (const auto& v : cur.vertices()) next.emplace_back(v.color, snap);
    cur = Simplex(std::move(next));
  }
  return cur;
}

// Output values allowed for a single process of the given color whose
// carrier in the input is `car`.
std::set<std::string> allowed_values(const ColoredTask& t, const Simplex& car,
                                     ProcessId color) {
  std::set<std::string> out;
  for (const auto& w : t.delta.at(car).vertex_list())
    if (w.color == color && w.view.is_input()) out.insert(w.view.value());
  return out;
}

// ---------------------------------------------------------------------------
// Backtracking search for a color-preserving simplicial map.

struct MapProblem {
  std::vector<Vertex> vars;                      // domain vertices, in order
  std::vector<std::vector<Vertex>> candidates;   // per variable
  struct Check {
    std::vector<int> vars;          // ascending variable indices
    const ColoredComplex* allowed;  // image must be one of its simplices
  };
  std::vector<Check> checks;
};

// Builds the problem of mapping `sub` into the task's outputs while staying
// inside delta of every simplex's carrier. Candidate lists may be empty.
MapProblem build_map_problem(const SubdividedComplex& sub,
                             const CarrierMap& delta) {
  MapProblem mp;
  mp.vars = sub.complex.vertex_list();
  // Most constrained first: vertices with the smallest carriers.
  std::stable_sort(mp.vars.begin(), mp.vars.end(),
                   [&](const Vertex& a, const Vertex& b) {
                     return sub.carrier_of_vertex(a).dim() <
                            sub.carrier_of_vertex(b).dim();
                   });
  std::map<Vertex, int> index;
  for (std::size_t i = 0; i < mp.vars.size(); ++i)
    index[mp.vars[i]] = static_cast<int>(i);
  for (const auto& v : mp.vars) {
    std::vector<Vertex> cands;
    for (const auto& w : delta.at(sub.carrier_of_vertex(v)).vertex_list())
      if (w.color == v.color) cands.push_back(w);
    mp.candidates.push_back(std::move(cands));
  }
  std::set<Simplex> seen;
  for (const auto& facet : sub.complex.facets()) {
    for (const auto& s : facet.all_faces()) {
      if (s.dim() < 1 || !seen.insert(s).second) continue;
      MapProblem::Check c;
      for (const auto& v : s.vertices()) c.vars.push_back(index.at(v));
      std::sort(c.vars.begin(), c.vars.end());
      c.allowed = &delta.at(carrier_unchecked(s, sub));
      mp.checks.push_back(std::move(c));
    }
  }
  return mp;
}

std::optional<std::map<Vertex, Vertex>> solve_map(const MapProblem& mp,
                                                  BudgetCounter& budget) {
  const int n = static_cast<int>(mp.vars.size());
  // Checks triggered once their last variable is assigned.
  std::vector<std::vector<const MapProblem::Check*>> fire(n);
  for (const auto& c : mp.checks) fire[c.vars.back()].push_back(&c);

  std::vector<int> choice(n, -1);
  auto consistent = [&](int i) {
    for (const auto* c : fire[i]) {
      std::vector<Vertex> img;
      img.reserve(c->vars.size());
      for (int j : c->vars) img.push_back(mp.candidates[j][choice[j]]);
      if (!c->allowed->contains(Simplex(std::move(img)))) return false;
    }
    return true;
  };

  int i = 0;
  while (i < n) {
    bool advanced = false;
    for (int k = choice[i] + 1;
         k < static_cast<int>(mp.candidates[i].size()); ++k) {
      if (!budget.tick()) return std::nullopt;
      choice[i] = k;
      if (consistent(i)) {
        advanced = true;
        break;
      }
    }
    if (advanced) {
      ++i;
      continue;
    }
    choice[i] = -1;
    if (--i < 0) return std::nullopt;
  }
  std::map<Vertex, Vertex> mu;
  for (int j = 0; j < n; ++j) mu[mp.vars[j]] = mp.candidates[j][choice[j]];
  return mu;
}

// ---------------------------------------------------------------------------
// Assembly of a found link map into a partial protocol: the processes of u
// decide the restricted output's label values at round 1, the others run the
// link map on their views with u's entries removed.

PartialProtocol assemble_protocol(const ColoredTask& t, const Simplex& u,
                                  const RestrictedOutput& ro,
                                  const std::map<Vertex, Vertex>& mu, int d) {
  Label label = make_label(t.input, {u});
  std::map<ProcessId, std::string> label_value;
  for (const auto& w : ro.label_facet.vertices())
    label_value[w.color] = w.view.value();
  StripView strip(u.id_set());
  const int term = std::max(1, d);
  const int r_m = std::max(2, term);

  DecisionMap delta;
  auto chain = protocol_complexes(t.input, label, DecisionMap(), 1);
  for (int r = 1; r <= r_m; ++r) {
    for (const auto& v : chain.back().complex.vertex_list()) {
      if (delta.defined(v)) continue;
      auto lv = label_value.find(v.color);
      if (lv != label_value.end()) {
        delta.set(v, Decision::output(lv->second));
        continue;
      }
      if (r != term) continue;
      Vertex link_vertex =
          d == 0 ? ancestor_at_depth(v, 0) : Vertex(v.color, strip(v.view));
      auto it = mu.find(link_vertex);
      if (it == mu.end())
        throw BadProtocol("link state missing from the map: " +
                          link_vertex.to_string());
      delta.set(v, Decision::output(it->second.view.value()));
    }
    if (r < r_m) chain.push_back(nonuniform_subdivide(chain.back(), delta));
  }
  return make_partial_protocol(t.input, label, std::move(delta), r_m);
}

}  // namespace

std::optional<Simplex> simplicial_map_violation(
    const SubdividedComplex& sub, const CarrierMap& delta,
    const std::map<Vertex, Vertex>& mu) {
  std::set<Simplex> seen;
  for (const auto& facet : sub.complex.facets()) {
    for (const auto& s : facet.all_faces()) {
      if (!seen.insert(s).second) continue;
      std::vector<Vertex> img;
      for (const auto& v : s.vertices()) {
        auto it = mu.find(v);
        if (it == mu.end()) return s;
        img.push_back(it->second);
      }
      try {
        if (!delta.at(carrier_unchecked(s, sub)).contains(Simplex(std::move(img))))
          return s;
      } catch (const TopologyError&) {
        return s;
      }
    }
  }
  return std::nullopt;
}

ProtocolSearch search_partial_protocol(const ColoredTask& t, const Simplex& u,
                                       const SearchBudget& b) {
  ProtocolSearch out;
  auto ros = restricted_outputs(t, u);
  std::size_t usable = 0;
  for (const auto& ro : ros)
    if (!ro.component.empty()) ++usable;
  if (usable == 0) {
    out.status = SearchStatus::INFEASIBLE;
    out.witness = "no full-dimensional outputs are allowed for " +
                  u.to_string();
    return out;
  }

  BudgetCounter budget{b.max_nodes};
  for (std::size_t i = 0; i < ros.size(); ++i) {
    if (ros[i].component.empty()) continue;
    ColoredTask lt = link_task(t, u, i);
    if (lt.input.empty()) {
      // u is a facet: everyone decides a label value at round 1.
      out.status = SearchStatus::FOUND;
      out.protocol = assemble_protocol(t, u, ros[i], {}, 0);
      out.output_index = static_cast<int>(i);
      out.depth = 0;
      out.nodes = budget.nodes;
      return out;
    }
    for (int d = 0; d <= b.max_depth; ++d) {
      SubdividedComplex sub = iterated_subdivision(lt.input, d);
      auto mu = solve_map(build_map_problem(sub, lt.delta), budget);
      if (budget.hit) {
        out.status = SearchStatus::UNKNOWN;
        out.witness = "node budget exhausted";
        out.nodes = budget.nodes;
        return out;
      }
      if (mu) {
        out.status = SearchStatus::FOUND;
        out.protocol = assemble_protocol(t, u, ros[i], *mu, d);
        out.output_index = static_cast<int>(i);
        out.depth = d;
        out.nodes = budget.nodes;
        return out;
      }
    }
  }
  out.status = SearchStatus::UNKNOWN;
  out.witness = "no link map up to depth " + std::to_string(b.max_depth);
  out.nodes = budget.nodes;
  return out;
}

ProtocolSearch search_partial_protocol(const ColoredTask& t,
                                       const Label& label,
                                       const SearchBudget& b) {
  ProtocolSearch out = search_partial_protocol(t, label.sequence.at(0), b);
  if (out.status == SearchStatus::FOUND && label.sequence.size() > 1)
    out.protocol = restrict_protocol(*out.protocol, label);
  return out;
}

std::vector<Label> full_schedule_labels(const ColoredComplex& input) {
  std::vector<Label> out;
  for (const auto& f : input.facets()) {
    for (const auto& sched : ordered_partitions(f.id_set())) {
      std::vector<Simplex> seq;
      seq.reserve(sched.steps.size());
      for (const auto& step : sched.steps)
        seq.push_back(f.restricted_to(step));
      out.push_back(make_label(input, std::move(seq)));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Label> simplex_labels(const ColoredComplex& input) {
  std::vector<Label> out;
  for (const auto& s : input.all_simplices())
    out.push_back(make_label(input, {s}));
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

// Everything the family search needs about one label at a fixed uniform
// termination round.
struct LabelWorld {
  Label label;
  std::vector<SubdividedComplex> chain;  // F_0 .. F_{r_m}
  ColoredComplex f1;                     // the round-1 complex
  std::vector<Vertex> vars;              // vertices of F_{r_m}
  std::map<Vertex, int> index;
  std::vector<std::vector<std::string>> domain;  // sorted allowed values
  struct Check {
    std::vector<int> vars;
    const ColoredComplex* allowed;
  };
  std::vector<Check> checks;
  std::vector<std::vector<int>> checks_of;  // per variable
  bool single_valued = false;   // every allowed output facet has one value
  std::set<std::string> forced;  // intersection of all variable domains
};

LabelWorld build_world(const ColoredTask& t, const Label& label, int r_m) {
  LabelWorld w;
  w.label = label;
  w.chain = protocol_complexes(t.input, label, DecisionMap(), r_m);
  w.f1 = w.chain[1].complex;
  const auto& top = w.chain[static_cast<std::size_t>(r_m)];
  w.vars = top.complex.vertex_list();
  for (std::size_t i = 0; i < w.vars.size(); ++i)
    w.index[w.vars[i]] = static_cast<int>(i);
  for (const auto& v : w.vars) {
    auto vals = allowed_values(t, top.carrier_of_vertex(v), v.color);
    w.domain.emplace_back(vals.begin(), vals.end());
  }
  std::set<Simplex> seen;
  for (const auto& facet : top.complex.facets()) {
    for (const auto& s : facet.all_faces()) {
      if (s.dim() < 1 || !seen.insert(s).second) continue;
      LabelWorld::Check c;
      for (const auto& v : s.vertices()) c.vars.push_back(w.index.at(v));
      c.allowed = &t.delta.at(carrier_unchecked(s, top));
      w.checks.push_back(std::move(c));
    }
  }
  w.checks_of.resize(w.vars.size());
  for (std::size_t ci = 0; ci < w.checks.size(); ++ci)
    for (int vi : w.checks[ci].vars)
      w.checks_of[vi].push_back(static_cast<int>(ci));

  // Forcing test: if every facet of the complex may only map to a
  // single-valued output facet, connectivity spreads one common value over
  // the whole world. The bound is the delta of each facet's own carrier
  // (short labels reach configurations whose carrier exceeds u_sum).
  w.single_valued = true;
  std::set<Simplex> carriers;
  for (const auto& facet : top.complex.facets())
    carriers.insert(carrier_unchecked(facet, top));
  for (const auto& c : carriers)
    for (const auto& g : t.delta.at(c).facets())
      if (project_values(g).size() > 1) w.single_valued = false;
  if (w.single_valued && !w.vars.empty()) {
    w.forced = std::set<std::string>(w.domain[0].begin(), w.domain[0].end());
    for (const auto& dom : w.domain) {
      std::set<std::string> next;
      for (const auto& x : dom)
        if (w.forced.count(x)) next.insert(x);
      w.forced = std::move(next);
    }
  }
  return w;
}

// Per-world assignment state shared by the family search.
struct WorldState {
  std::vector<std::string> value;
  std::vector<char> set;
};

bool check_world(const LabelWorld& w, const WorldState& st, int vi) {
  for (int ci : w.checks_of[vi]) {
    const auto& c = w.checks[ci];
    // The allowed sets are closed under faces, so the assigned part of a
    // constraint must already be a member; checking it prunes early.
    std::vector<Vertex> img;
    img.reserve(c.vars.size());
    for (int j : c.vars)
      if (st.set[j])
        img.emplace_back(w.vars[j].color, View::input(st.value[j]));
    if (img.size() < 2) continue;
    if (!c.allowed->contains(Simplex(std::move(img)))) return false;
  }
  return true;
}

// Completes one world's unset variables by backtracking, always branching
// on a variable with the fewest consistent values left; `st` is updated in
// place on success and restored on failure. Candidate sets are cached and
// only recomputed for the constraint neighbours of a freshly set variable,
// which keeps large worlds affordable.
class WorldExtender {
 public:
  WorldExtender(const LabelWorld& w, WorldState& st, BudgetCounter& budget)
      : w_(w), st_(st), budget_(budget) {}

  bool run() {
    const std::size_t n = w_.vars.size();
    cand_.resize(n);
    stamp_.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i)
      if (!st_.set[i]) {
        open_.push_back(static_cast<int>(i));
        cand_[i] = consistent_values(static_cast<int>(i));
        if (cand_[i].empty()) return false;
      }
    return complete();
  }

 private:
  std::vector<std::string> consistent_values(int vi) {
    std::vector<std::string> vals;
    for (const auto& x : w_.domain[vi]) {
      st_.value[vi] = x;
      st_.set[vi] = 1;
      if (check_world(w_, st_, vi)) vals.push_back(x);
      st_.set[vi] = 0;
    }
    return vals;
  }

  struct Frame {
    int vi;
    std::vector<std::string> vals;
    std::size_t next = 0;
    bool placed = false;
    std::vector<std::pair<int, std::vector<std::string>>> trail;
  };

  void push_next_var(std::vector<Frame>& stack) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < open_.size(); ++i)
      if (cand_[open_[i]].size() < cand_[open_[best]].size()) best = i;
    const int vi = open_[best];
    std::swap(open_[best], open_.back());
    open_.pop_back();
    stack.push_back({vi, cand_[vi], 0, false, {}});
  }

  void unwind_frame(Frame& f) {
    if (f.placed) {
      for (auto& [u, old] : f.trail) cand_[u] = std::move(old);
      f.trail.clear();
      st_.set[f.vi] = 0;
      f.placed = false;
    }
  }

  // Iterative depth-first completion (worlds can have tens of thousands of
  // variables, too deep for recursion).
  bool complete() {
    if (open_.empty()) return true;
    std::vector<Frame> stack;
    push_next_var(stack);
    while (!stack.empty()) {
      Frame& f = stack.back();
      unwind_frame(f);  // a failed child hands control back here
      bool advanced = false;
      while (f.next < f.vals.size()) {
        if (!budget_.tick()) break;
        st_.value[f.vi] = f.vals[f.next++];
        st_.set[f.vi] = 1;
        bool dead = false;
        ++epoch_;
        for (int ci : w_.checks_of[f.vi]) {
          for (int u : w_.checks[ci].vars) {
            if (st_.set[u] || stamp_[u] == epoch_) continue;
            stamp_[u] = epoch_;
            auto pruned = consistent_values(u);
            if (pruned != cand_[u]) {
              f.trail.emplace_back(u, std::move(cand_[u]));
              cand_[u] = std::move(pruned);
            }
            if (cand_[u].empty()) {
              dead = true;
              break;
            }
          }
          if (dead) break;
        }
        if (!dead) {
          f.placed = true;
          advanced = true;
          break;
        }
        for (auto& [u, old] : f.trail) cand_[u] = std::move(old);
        f.trail.clear();
        st_.set[f.vi] = 0;
      }
      if (budget_.hit) break;
      if (advanced) {
        if (open_.empty()) return true;
        push_next_var(stack);
        continue;
      }
      open_.push_back(f.vi);
      stack.pop_back();
    }
    while (!stack.empty()) {
      unwind_frame(stack.back());
      open_.push_back(stack.back().vi);
      stack.pop_back();
    }
    return false;
  }

  const LabelWorld& w_;
  WorldState& st_;
  BudgetCounter& budget_;
  std::vector<std::vector<std::string>> cand_;
  std::vector<int> open_;
  std::vector<unsigned> stamp_;
  unsigned epoch_ = 0;
};

bool extend_world(const LabelWorld& w, WorldState& st, BudgetCounter& budget) {
  return WorldExtender(w, st, budget).run();
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) {
    for (int i = 0; i < n; ++i) parent[i] = i;
  }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void merge(int a, int b) { parent[find(a)] = find(b); }
};

}  // namespace

FamilySearch search_compatible_family(const ColoredTask& t,
                                      const SearchBudget& b) {
  return search_compatible_family(t, full_schedule_labels(t.input), b);
}

FamilySearch search_compatible_family(const ColoredTask& t,
                                      const std::vector<Label>& labels,
                                      const SearchBudget& b) {
  FamilySearch out;
  out.labels = labels;
  const int n_labels = static_cast<int>(out.labels.size());

  // --- Depth-independent analysis on the round-1 geometry. ---
  // A label whose facet admits only single-valued outputs decides one common
  // value across its (connected) protocol complex, at every termination
  // round; overlapping labels must then agree on that value.
  {
    std::vector<LabelWorld> probe;
    probe.reserve(out.labels.size());
    for (const auto& l : out.labels) probe.push_back(build_world(t, l, 2));
    for (const auto& w : probe) {
      if (w.single_valued && w.forced.empty()) {
        out.status = SearchStatus::INFEASIBLE;
        out.clash.emplace_back(w.label, w.forced);
        out.witness = "label " + w.label.to_string() +
                      " admits no common output value";
        return out;
      }
    }
    std::map<Vertex, std::vector<int>> at;
    for (int i = 0; i < n_labels; ++i)
      if (probe[i].single_valued)
        for (const auto& v : probe[i].f1.vertex_list()) at[v].push_back(i);
    UnionFind uf(n_labels);
    for (const auto& [v, ws] : at)
      for (std::size_t k = 1; k < ws.size(); ++k) uf.merge(ws[0], ws[k]);
    std::map<int, std::vector<int>> components;
    for (int i = 0; i < n_labels; ++i)
      if (probe[i].single_valued) components[uf.find(i)].push_back(i);
    for (const auto& [root, members] : components) {
      std::set<std::string> common = probe[members[0]].forced;
      for (int i : members) {
        std::set<std::string> next;
        for (const auto& x : probe[i].forced)
          if (common.count(x)) next.insert(x);
        common = std::move(next);
      }
      if (!common.empty()) continue;
      out.status = SearchStatus::INFEASIBLE;
      for (int i : members) out.clash.emplace_back(probe[i].label,
                                                   probe[i].forced);
      // A directly overlapping pair with disjoint forced values, if any.
      for (std::size_t a = 0; a < members.size() && out.clash_shared.empty();
           ++a) {
        for (std::size_t c = a + 1; c < members.size(); ++c) {
          const auto& wa = probe[members[a]];
          const auto& wc = probe[members[c]];
          bool disjoint = true;
          for (const auto& x : wa.forced) disjoint &= !wc.forced.count(x);
          if (!disjoint) continue;
          ColoredComplex both = complex_intersection(wa.f1, wc.f1);
          if (both.facets().empty()) continue;
          Simplex widest;
          for (const auto& s : both.facets())
            if (s.size() > widest.size()) widest = s;
          out.clash_shared = widest;
          break;
        }
      }
      out.witness =
          "overlapping single-valued labels have no common output value";
      return out;
    }
  }

  // --- Constructive search, shallowest termination round first. ---
  // Each round gets its own slice of the node budget: a round whose
  // constraints happen to be unsatisfiable must not starve the deeper ones.
  const int first_round = std::max(2, b.min_depth);
  const int last_round = std::max(first_round, b.max_depth);
  const long slice =
      std::max(1L, b.max_nodes / (last_round - first_round + 1));
  bool any_budget_hit = false;
  for (int r_m = first_round; r_m <= last_round; ++r_m) {
    BudgetCounter budget{slice};
    std::vector<LabelWorld> worlds;
    worlds.reserve(out.labels.size());
    for (const auto& l : out.labels) worlds.push_back(build_world(t, l, r_m));
    bool empty_domain = false;
    for (const auto& w : worlds)
      for (const auto& dom : w.domain) empty_domain |= dom.empty();
    if (empty_domain) continue;

    // Merge the variables forced equal by compatibility: for every simplex
    // shared by two labels' round-1 facets, the terminal states of its
    // concurrent replay must decide the same values in both protocols.
    std::vector<int> offset(worlds.size() + 1, 0);
    for (std::size_t i = 0; i < worlds.size(); ++i)
      offset[i + 1] = offset[i] + static_cast<int>(worlds[i].vars.size());
    UnionFind uf(offset.back());
    for (std::size_t i = 0; i < worlds.size(); ++i) {
      for (std::size_t j = i + 1; j < worlds.size(); ++j) {
        ColoredComplex both =
            complex_intersection(worlds[i].f1, worlds[j].f1);
        auto var_of = [&](const LabelWorld& w, const Vertex& tv) {
          auto it = w.index.find(tv);
          if (it == w.index.end())
            throw BadProtocol("replay state " + tv.to_string() +
                              " missing from " + w.label.to_string());
          return it->second;
        };
        for (const auto& s : both.all_simplices()) {
          Simplex terminal = cen_terminal(s, r_m);
          for (const auto& tv : terminal.vertices())
            uf.merge(offset[i] + var_of(worlds[i], tv),
                     offset[j] + var_of(worlds[j], tv));
        }
      }
    }
    // One joint problem: every union-find class becomes a single variable,
    // so the compatibility equalities and all per-world constraints are
    // handled by one incremental backtracking run.
    LabelWorld joint;
    std::vector<int> klass(offset.back(), -1);
    std::map<int, int> class_of_root;
    for (std::size_t i = 0; i < worlds.size(); ++i) {
      for (std::size_t vi = 0; vi < worlds[i].vars.size(); ++vi) {
        const int g = offset[i] + static_cast<int>(vi);
        const int root = uf.find(g);
        auto [it, fresh] =
            class_of_root.emplace(root, static_cast<int>(joint.vars.size()));
        if (fresh) {
          joint.vars.push_back(worlds[i].vars[vi]);
          joint.domain.push_back(worlds[i].domain[vi]);
        } else {
          // Intersect the sorted domains of the merged variables.
          auto& dom = joint.domain[it->second];
          std::vector<std::string> both;
          std::set_intersection(dom.begin(), dom.end(),
                                worlds[i].domain[vi].begin(),
                                worlds[i].domain[vi].end(),
                                std::back_inserter(both));
          dom = std::move(both);
        }
        klass[g] = it->second;
      }
    }
    bool class_empty = false;
    for (const auto& dom : joint.domain) class_empty |= dom.empty();
    std::set<std::pair<std::vector<int>, const ColoredComplex*>> seen_checks;
    for (std::size_t i = 0; i < worlds.size() && !class_empty; ++i) {
      for (const auto& c : worlds[i].checks) {
        LabelWorld::Check jc;
        for (int vi : c.vars) jc.vars.push_back(klass[offset[i] + vi]);
        std::sort(jc.vars.begin(), jc.vars.end());
        jc.allowed = c.allowed;
        if (!seen_checks.emplace(jc.vars, jc.allowed).second) continue;
        joint.checks.push_back(std::move(jc));
      }
    }
    joint.checks_of.resize(joint.vars.size());
    for (std::size_t ci = 0; ci < joint.checks.size(); ++ci)
      for (int vi : joint.checks[ci].vars)
        joint.checks_of[vi].push_back(static_cast<int>(ci));
    if (std::getenv("CHROMA_SEARCH_DEBUG"))
      std::fprintf(stderr,
                   "[family] r_m=%d worlds=%zu joint vars=%zu checks=%zu%s\n",
                   r_m, worlds.size(), joint.vars.size(), joint.checks.size(),
                   class_empty ? " (empty domain)" : "");
    if (class_empty) continue;

    WorldState jstate;
    jstate.value.resize(joint.vars.size());
    jstate.set.assign(joint.vars.size(), 0);
    const bool solved = extend_world(joint, jstate, budget);
    if (std::getenv("CHROMA_SEARCH_DEBUG"))
      std::fprintf(stderr, "[family] r_m=%d joint %s nodes=%ld\n", r_m,
                   budget.hit ? "budget" : (solved ? "solved" : "unsat"),
                   budget.nodes);
    if (budget.hit) {
      any_budget_hit = true;
      out.nodes += budget.nodes;
      continue;
    }
    if (!solved) {
      out.nodes += budget.nodes;
      continue;
    }

    out.family.clear();
    for (std::size_t wi = 0; wi < worlds.size(); ++wi) {
      DecisionMap delta;
      for (std::size_t vi = 0; vi < worlds[wi].vars.size(); ++vi)
        delta.set(
            worlds[wi].vars[vi],
            Decision::output(
                jstate.value[klass[offset[wi] + static_cast<int>(vi)]]));
      out.family.push_back(make_partial_protocol(t.input, worlds[wi].label,
                                                 std::move(delta), r_m));
    }
    for (const auto& p : out.family) {
      auto sw = solves(p, t);
      if (!sw.ok)
        throw BadProtocol("family member fails its task audit at " +
                          sw.simplex.to_string());
    }
    for (std::size_t a = 0; a < out.family.size(); ++a) {
      for (std::size_t c = a + 1; c < out.family.size(); ++c) {
        auto cw = compatible(out.family[a], out.family[c]);
        if (!cw.ok)
          throw BadProtocol("family members disagree at " +
                            cw.simplex.to_string());
      }
    }
    out.status = SearchStatus::FOUND;
    out.nodes += budget.nodes;
    return out;
  }

  out.status = SearchStatus::UNKNOWN;
  out.witness = any_budget_hit
                    ? "node budget exhausted"
                    : "no compatible family up to round " +
                          std::to_string(last_round);
  return out;
}

namespace {

// Connected components of a 1-dimensional complex, as vertex -> component id.
std::map<Vertex, int> edge_components(const ColoredComplex& k) {
  std::map<Vertex, int> comp;
  int next = 0;
  for (const auto& v : k.vertex_list()) comp[v] = next++;
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& f : k.facets()) {
      if (f.dim() != 1) continue;
      int a = comp[f.vertices()[0]], b = comp[f.vertices()[1]];
      if (a == b) continue;
      int lo = std::min(a, b);
      for (auto& [v, c] : comp)
        if (c == a || c == b) c = lo;
      changed = true;
    }
  }
  return comp;
}

// Shortest walk between two vertices of a 1-dimensional complex.
std::vector<Vertex> edge_path(const ColoredComplex& k, const Vertex& from,
                              const Vertex& to) {
  std::map<Vertex, std::vector<Vertex>> adj;
  for (const auto& f : k.facets())
    if (f.dim() == 1) {
      adj[f.vertices()[0]].push_back(f.vertices()[1]);
      adj[f.vertices()[1]].push_back(f.vertices()[0]);
    }
  std::map<Vertex, Vertex> pred;
  std::vector<Vertex> queue = {from};
  std::set<Vertex> seen = {from};
  for (std::size_t q = 0; q < queue.size(); ++q) {
    Vertex cur = queue[q];
    if (cur == to) break;
    for (const auto& nxt : adj[cur]) {
      if (!seen.insert(nxt).second) continue;
      pred.emplace(nxt, cur);
      queue.push_back(nxt);
    }
  }
  if (!seen.count(to)) throw TopologyError("no path between chosen outputs");
  std::vector<Vertex> path = {to};
  while (!(path.back() == from)) path.push_back(pred.at(path.back()));
  std::reverse(path.begin(), path.end());
  return path;
}

// Orders the vertices of one subdivided input edge along the path, starting
// at the corner carried by `first`.
std::vector<Vertex> ordered_subdivided_edge(const SubdividedComplex& sub,
                                            const Simplex& edge,
                                            const Vertex& first) {
  std::vector<Vertex> inside;
  for (const auto& v : sub.complex.vertex_list())
    if (edge.contains_face(sub.carrier_of_vertex(v))) inside.push_back(v);
  std::map<Vertex, std::vector<Vertex>> adj;
  for (const auto& f : sub.complex.facets()) {
    if (f.dim() != 1 || !edge.contains_face(carrier(f, sub))) continue;
    adj[f.vertices()[0]].push_back(f.vertices()[1]);
    adj[f.vertices()[1]].push_back(f.vertices()[0]);
  }
  Vertex start = first;
  for (const auto& v : inside)
    if (sub.carrier_of_vertex(v) == Simplex({first})) start = v;
  std::vector<Vertex> order = {start};
  std::set<Vertex> seen = {start};
  while (true) {
    bool grew = false;
    for (const auto& nxt : adj[order.back()]) {
      if (seen.count(nxt)) continue;
      order.push_back(nxt);
      seen.insert(nxt);
      grew = true;
      break;
    }
    if (!grew) break;
  }
  if (order.size() != inside.size())
    throw TopologyError("subdivided edge is not a path");
  return order;
}

}  // namespace

OneDimDecision decide_1dim(const ColoredTask& t) {
  if (t.input.dim() != 1)
    throw NotOneDimensional("input complex has dimension " +
                            std::to_string(t.input.dim()));
  OneDimDecision out;

  std::vector<Vertex> vars = t.input.vertex_list();
  std::map<Vertex, int> index;
  for (std::size_t i = 0; i < vars.size(); ++i)
    index[vars[i]] = static_cast<int>(i);
  std::vector<std::vector<Vertex>> candidates;
  for (const auto& v : vars) {
    std::vector<Vertex> c;
    for (const auto& w : t.delta.at(Simplex({v})).vertex_list())
      if (w.color == v.color) c.push_back(w);
    if (c.empty()) {
      out.detail = "no allowed output for " + v.to_string();
      return out;
    }
    candidates.push_back(std::move(c));
  }

  struct EdgeInfo {
    Simplex edge;
    int a, b;  // variable indices
    std::map<Vertex, int> comp;
  };
  std::vector<EdgeInfo> edges;
  for (const auto& f : t.input.facets()) {
    if (f.dim() != 1) continue;
    EdgeInfo e;
    e.edge = f;
    e.a = index.at(f.vertices()[0]);
    e.b = index.at(f.vertices()[1]);
    e.comp = edge_components(t.delta.at(f));
    edges.push_back(std::move(e));
  }
  auto edge_ok = [&](const EdgeInfo& e, const Vertex& ma, const Vertex& mb) {
    auto ca = e.comp.find(ma);
    auto cb = e.comp.find(mb);
    return ca != e.comp.end() && cb != e.comp.end() &&
           ca->second == cb->second;
  };
  for (const auto& e : edges) {
    bool satisfiable = false;
    for (const auto& ma : candidates[e.a])
      for (const auto& mb : candidates[e.b])
        satisfiable = satisfiable || edge_ok(e, ma, mb);
    if (!satisfiable) {
      out.cycle = {e.edge};
      out.detail = "no two allowed outputs of " + e.edge.to_string() +
                   " lie in one component";
      return out;
    }
  }

  // Exact search for consistent endpoint choices.
  std::vector<std::vector<int>> touching(vars.size());
  for (std::size_t ei = 0; ei < edges.size(); ++ei) {
    touching[edges[ei].a].push_back(static_cast<int>(ei));
    touching[edges[ei].b].push_back(static_cast<int>(ei));
  }
  std::vector<int> choice(vars.size(), -1);
  auto consistent = [&](int i) {
    for (int ei : touching[i]) {
      const auto& e = edges[ei];
      int other = e.a == i ? e.b : e.a;
      if (choice[other] < 0) continue;
      if (!edge_ok(e, candidates[e.a][choice[e.a]],
                   candidates[e.b][choice[e.b]]))
        return false;
    }
    return true;
  };
  int i = 0;
  while (i >= 0 && i < static_cast<int>(vars.size())) {
    bool advanced = false;
    for (int k = choice[i] + 1; k < static_cast<int>(candidates[i].size());
         ++k) {
      choice[i] = k;
      if (consistent(i)) {
        advanced = true;
        break;
      }
    }
    if (advanced) {
      ++i;
      continue;
    }
    choice[i] = -1;
    --i;
  }

  if (i < 0) {
    // Impossible. Exhibit a cycle on which component choices cannot close.
    std::vector<int> pred_edge(vars.size(), -1), pred_var(vars.size(), -1);
    std::vector<int> state(vars.size(), 0);  // 0 unseen, 1 in tree
    std::vector<int> order;
    for (std::size_t root = 0; root < vars.size() && out.cycle.empty();
         ++root) {
      if (state[root]) continue;
      state[root] = 1;
      order = {static_cast<int>(root)};
      for (std::size_t q = 0; q < order.size() && out.cycle.empty(); ++q) {
        int cur = order[q];
        for (int ei : touching[cur]) {
          const auto& e = edges[ei];
          int nxt = e.a == cur ? e.b : e.a;
          if (!state[nxt]) {
            state[nxt] = 1;
            pred_edge[nxt] = ei;
            pred_var[nxt] = cur;
            order.push_back(nxt);
          } else if (ei != pred_edge[cur]) {
            // Back edge: walk both endpoints up to the root of the tree.
            std::vector<int> walk;
            for (int x = cur; x >= 0; x = pred_var[x])
              if (pred_edge[x] >= 0) walk.push_back(pred_edge[x]);
            walk.push_back(ei);
            for (int x = nxt; x >= 0; x = pred_var[x])
              if (pred_edge[x] >= 0) walk.push_back(pred_edge[x]);
            for (int w : walk) out.cycle.push_back(edges[w].edge);
            break;
          }
        }
      }
    }
    out.detail = "no consistent choice of output components exists";
    if (!out.cycle.empty())
      out.detail += "; following the listed cycle of edges forces two "
                    "disjoint components of one edge to meet";
    return out;
  }

  // Solvable: lay per-edge walks on one common subdivision.
  std::vector<std::vector<Vertex>> walks(edges.size());
  std::size_t longest = 1;
  for (std::size_t ei = 0; ei < edges.size(); ++ei) {
    const auto& e = edges[ei];
    walks[ei] = edge_path(t.delta.at(e.edge), candidates[e.a][choice[e.a]],
                          candidates[e.b][choice[e.b]]);
    longest = std::max(longest, walks[ei].size() - 1);
  }
  int d = 0;
  std::size_t segments = 1;
  while (segments < longest) {
    ++d;
    segments *= 3;
  }
  SubdividedComplex sub = iterated_subdivision(t.input, d);
  std::map<Vertex, Vertex> mu;
  for (std::size_t vi = 0; vi < vars.size(); ++vi) {
    for (const auto& v : sub.complex.vertex_list())
      if (sub.carrier_of_vertex(v) == Simplex({vars[vi]}))
        mu[v] = candidates[vi][choice[vi]];
  }
  for (std::size_t ei = 0; ei < edges.size(); ++ei) {
    const auto& e = edges[ei];
    auto path = ordered_subdivided_edge(sub, e.edge, vars[e.a]);
    const auto& walk = walks[ei];
    const std::size_t last = walk.size() - 1;
    for (std::size_t p = 0; p < path.size(); ++p) {
      Vertex image = p < last ? walk[p]
                              : ((path.size() - 1 - p) % 2 == 0
                                     ? walk[last]
                                     : walk[last - 1]);
      auto [it, fresh] = mu.emplace(path[p], image);
      if (!fresh && !(it->second == image))
        throw TopologyError("edge maps disagree at " + path[p].to_string());
    }
  }
  if (auto bad = simplicial_map_violation(sub, t.delta, mu))
    throw TopologyError("constructed map violates the task at " +
                        bad->to_string());
  out.solvable = true;
  out.depth = d;
  out.decision = std::move(mu);
  out.detail = "decision map on the depth-" + std::to_string(d) +
               " subdivision";
  return out;
}

}  // namespace chroma
