#include "chroma/subdivision.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

namespace chroma {

std::set<ProcessId> Schedule::support() const {
  std::set<ProcessId> out;
  for (const auto& s : steps) out.insert(s.begin(), s.end());
  return out;
}

bool Schedule::is_ordered_partition_of(const std::set<ProcessId>& ids) const {
  std::set<ProcessId> seen;
  for (const auto& s : steps) {
    if (s.empty()) return false;
    for (ProcessId p : s) {
      if (!ids.count(p) || seen.count(p)) return false;
      seen.insert(p);
    }
  }
  return seen == ids;
}

std::vector<Schedule> Schedule::rounds(const std::set<ProcessId>& ids) const {
  std::vector<Schedule> out;
  Schedule current;
  std::set<ProcessId> seen;
  for (const auto& s : steps) {
    for (ProcessId p : s) {
      if (!ids.count(p))
        throw NotAPartition("process p" + std::to_string(p) +
                            " outside the round universe");
      if (seen.count(p))
        throw NotAPartition("process p" + std::to_string(p) +
                            " repeated within a round");
      seen.insert(p);
    }
    current.steps.push_back(s);
    if (seen == ids) {
      out.push_back(current);
      current = Schedule();
      seen.clear();
    }
  }
  if (!current.empty()) throw NotAPartition("trailing incomplete round");
  return out;
}

Schedule Schedule::then(const Schedule& tail) const {
  Schedule out = *this;
  out.steps.insert(out.steps.end(), tail.steps.begin(), tail.steps.end());
  return out;
}

std::string Schedule::to_string() const {
  std::ostringstream out;
  for (const auto& s : steps) {
    out << "{";
    bool first = true;
    for (ProcessId p : s) {
      if (!first) out << ",";
      first = false;
      out << "p" << p;
    }
    out << "}";
  }
  return out.str();
}

std::vector<Schedule> ordered_partitions(const std::set<ProcessId>& ids) {
  std::vector<Schedule> out;
  if (ids.empty()) {
    out.push_back(Schedule());
    return out;
  }
  std::vector<ProcessId> pool(ids.begin(), ids.end());
  std::size_t n = pool.size();
  // Enumerate nonempty first blocks by bitmask, recurse on the rest.
  std::function<void(std::vector<ProcessId>, Schedule&)> rec =
      [&](std::vector<ProcessId> rest, Schedule& prefix) {
        if (rest.empty()) {
          out.push_back(prefix);
          return;
        }
        std::size_t m = rest.size();
        for (std::size_t mask = 1; mask < (1u << m); ++mask) {
          std::set<ProcessId> block;
          std::vector<ProcessId> remaining;
          for (std::size_t i = 0; i < m; ++i) {
            if (mask & (1u << i))
              block.insert(rest[i]);
            else
              remaining.push_back(rest[i]);
          }
          prefix.steps.push_back(block);
          rec(remaining, prefix);
          prefix.steps.pop_back();
        }
      };
  Schedule prefix;
  rec(pool, prefix);
  (void)n;
  std::sort(out.begin(), out.end(), [](const Schedule& a, const Schedule& b) {
    std::vector<std::size_t> sa, sb;
    for (const auto& s : a.steps) sa.push_back(s.size());
    for (const auto& s : b.steps) sb.push_back(s.size());
    if (sa != sb) return sa < sb;
    return a.steps < b.steps;
  });
  return out;
}

Schedule limit_schedule(const Schedule& sched, const std::set<ProcessId>& to) {
  Schedule out;
  for (const auto& s : sched.steps) {
    std::set<ProcessId> kept;
    for (ProcessId p : s)
      if (to.count(p)) kept.insert(p);
    if (!kept.empty()) out.steps.push_back(kept);
  }
  return out;
}

std::string Decision::to_string() const {
  switch (kind) {
    case DecisionKind::UNDEFINED:
      return "undefined";
    case DecisionKind::BOTTOM:
      return "bottom";
    case DecisionKind::OUTPUT:
      return value;
  }
  return "";
}

Decision DecisionMap::get(const Vertex& v) const {
  auto it = map_.find(v);
  return it == map_.end() ? Decision::undefined() : it->second;
}

void DecisionMap::set(const Vertex& v, const Decision& d) {
  auto it = map_.find(v);
  if (it != map_.end() && !it->second.is_undefined() && !(it->second == d))
    throw TopologyError("decision rewrite at " + v.to_string() + ": " +
                        it->second.to_string() + " -> " + d.to_string());
  map_[v] = d;
}

Simplex SubdividedComplex::carrier_of_vertex(const Vertex& v) const {
  auto it = carrier_index.find(v);
  if (it == carrier_index.end())
    throw NotInComplex("no carrier for " + v.to_string());
  return it->second;
}

SubdividedComplex identity_subdivision(const ColoredComplex& k) {
  SubdividedComplex out;
  out.base = k;
  out.depth = 0;
  out.complex = k;
  for (const auto& v : k.vertex_list())
    out.carrier_index[v] = Simplex({v});
  return out;
}

Simplex facet_from_schedule(const Simplex& base_facet, const Schedule& sched) {
  std::set<ProcessId> ids = base_facet.id_set();
  if (!sched.is_ordered_partition_of(ids))
    throw NotAPartition(sched.to_string() + " is not an ordered partition of " +
                        base_facet.to_string());
  std::vector<Vertex> out;
  std::vector<std::pair<ProcessId, View>> seen;
  for (const auto& step : sched.steps) {
    for (ProcessId p : step) {
      auto v = base_facet.vertex_of(p);
      seen.emplace_back(p, v->view);
    }
    View snap = View::snapshot(seen);
    for (ProcessId p : step) out.emplace_back(p, snap);
  }
  return Simplex(std::move(out));
}

Schedule schedule_from_facet(const Simplex& base_facet, const Simplex& facet) {
  // Group vertices by their view; in a subdivision facet the views form a
  // containment chain, so snapshot size orders the steps.
  std::map<View, std::set<ProcessId>> groups;
  for (const auto& v : facet.vertices()) {
    if (v.view.is_input())
      throw NotInComplex("vertex " + v.to_string() + " carries no snapshot");
    groups[v.view].insert(v.color);
  }
  std::vector<std::pair<std::size_t, std::set<ProcessId>>> ordered;
  for (const auto& [view, procs] : groups)
    ordered.emplace_back(view.entries().size(), procs);
  std::sort(ordered.begin(), ordered.end());
  Schedule sched;
  for (const auto& [size, procs] : ordered) sched.steps.push_back(procs);
  if (facet_from_schedule(base_facet, sched) != facet)
    throw NotInComplex(facet.to_string() + " is not a subdivision facet of " +
                       base_facet.to_string());
  return sched;
}

Simplex facet_from_rounds(const Simplex& base_facet,
                          const std::vector<Schedule>& rounds) {
  Simplex current = base_facet;
  for (const auto& r : rounds) current = facet_from_schedule(current, r);
  return current;
}

Vertex previous_state(const Vertex& v) {
  if (v.view.is_input()) return v;
  for (const auto& [p, view] : v.view.entries())
    if (p == v.color) return Vertex(v.color, view);
  throw NotInComplex("process p" + std::to_string(v.color) +
                     " missing from its own snapshot");
}

Vertex ancestor_at_depth(const Vertex& v, int depth) {
  Vertex cur = v;
  while (cur.view.depth() > depth) cur = previous_state(cur);
  if (cur.view.depth() != depth)
    throw NotInComplex("no ancestor of " + v.to_string() + " at depth " +
                       std::to_string(depth));
  return cur;
}

std::vector<Schedule> rounds_from_facet(const Simplex& base_facet,
                                        const Simplex& facet) {
  if (facet == base_facet) return {};
  std::vector<Vertex> prev;
  for (const auto& v : facet.vertices()) prev.push_back(previous_state(v));
  Simplex previous(prev);
  auto rounds = rounds_from_facet(base_facet, previous);
  rounds.push_back(schedule_from_facet(previous, facet));
  return rounds;
}

namespace {

Simplex union_of_carriers(const Simplex& seen,
                          const std::map<Vertex, Simplex>& carrier_index) {
  Simplex out;
  for (const auto& v : seen.vertices()) {
    auto it = carrier_index.find(v);
    if (it == carrier_index.end())
      throw NotInComplex("no carrier for " + v.to_string());
    out = join(out, it->second);
  }
  return out;
}

}  // namespace

SubdividedComplex chromatic_subdivide(const SubdividedComplex& k) {
  SubdividedComplex out;
  out.base = k.base;
  out.depth = k.depth + 1;
  std::vector<Simplex> gens;
  for (const auto& facet : k.complex.facets()) {
    std::set<ProcessId> ids = facet.id_set();
    for (const auto& part : ordered_partitions(ids)) {
      Simplex sub = facet_from_schedule(facet, part);
      gens.push_back(sub);
      for (const auto& v : sub.vertices()) {
        if (!out.carrier_index.count(v)) {
          Simplex seen(std::vector<Vertex>(
              [&] {
                std::vector<Vertex> vs;
                for (const auto& [p, view] : v.view.entries())
                  vs.emplace_back(p, view);
                return vs;
              }()));
          out.carrier_index[v] = union_of_carriers(seen, k.carrier_index);
        }
      }
    }
  }
  out.complex = ColoredComplex::closure(gens);
  return out;
}

SubdividedComplex chromatic_subdivide(const ColoredComplex& k) {
  return chromatic_subdivide(identity_subdivision(k));
}

SubdividedComplex iterated_subdivision(const ColoredComplex& k, int depth) {
  SubdividedComplex out = identity_subdivision(k);
  for (int i = 0; i < depth; ++i) out = chromatic_subdivide(out);
  return out;
}

SubdividedComplex nonuniform_subdivide(const SubdividedComplex& k,
                                       const DecisionMap& delta) {
  SubdividedComplex out;
  out.base = k.base;
  out.depth = k.depth + 1;
  std::vector<Simplex> gens;
  for (const auto& facet : k.complex.facets()) {
    std::vector<Vertex> terminated, active;
    for (const auto& v : facet.vertices()) {
      Decision d = delta.get(v);
      if (d.is_undefined())
        throw UndefinedVertex("no decision at " + v.to_string());
      (d.is_output() ? terminated : active).push_back(v);
    }
    Simplex term(terminated);
    for (const auto& v : term.vertices())
      if (!out.carrier_index.count(v))
        out.carrier_index[v] = k.carrier_of_vertex(v);
    if (active.empty()) {
      gens.push_back(term);
      continue;
    }
    Simplex act(active);
    std::set<ProcessId> ids = act.id_set();
    for (const auto& part : ordered_partitions(ids)) {
      Simplex sub = facet_from_schedule(act, part);
      gens.push_back(join(term, sub));
      for (const auto& v : sub.vertices()) {
        if (!out.carrier_index.count(v)) {
          std::vector<Vertex> vs;
          for (const auto& [p, view] : v.view.entries()) vs.emplace_back(p, view);
          out.carrier_index[v] = union_of_carriers(Simplex(vs), k.carrier_index);
        }
      }
    }
  }
  out.complex = ColoredComplex::closure(gens);
  return out;
}

Simplex carrier(const Simplex& s, const SubdividedComplex& in) {
  if (!in.complex.contains(s))
    throw NotInComplex(s.to_string() + " not in the subdivision");
  return carrier_unchecked(s, in);
}

Simplex carrier_unchecked(const Simplex& s, const SubdividedComplex& in) {
  Simplex out;
  for (const auto& v : s.vertices()) out = join(out, in.carrier_of_vertex(v));
  return out;
}

ColoredComplex non_boundary_complex(const SubdividedComplex& k) {
  if (k.base.facets().size() != 1)
    throw NotInComplex("non-boundary complex needs a single base simplex");
  const Simplex& full = k.base.facets().front();
  std::vector<Simplex> gens;
  for (const auto& facet : k.complex.facets()) {
    std::vector<Vertex> interior;
    for (const auto& v : facet.vertices())
      if (k.carrier_of_vertex(v) == full) interior.push_back(v);
    if (!interior.empty()) gens.push_back(Simplex(interior));
  }
  return ColoredComplex::closure(gens);
}

Configuration Configuration::initial(const Simplex& inputs) {
  Configuration c;
  c.inputs = inputs;
  for (const auto& v : inputs.vertices()) {
    ProcessState st;
    st.view = v.view;
    c.procs[v.color] = st;
  }
  return c;
}

Vertex Configuration::state_vertex(ProcessId p) const {
  auto it = procs.find(p);
  if (it == procs.end())
    throw InactiveProcess("p" + std::to_string(p) + " not in configuration");
  return Vertex(p, it->second.view);
}

Simplex Configuration::round_simplex() const {
  std::vector<Vertex> vs;
  for (const auto& [p, st] : procs) vs.emplace_back(p, st.view);
  return Simplex(std::move(vs));
}

std::set<ProcessId> Configuration::active() const {
  std::set<ProcessId> out;
  for (const auto& [p, st] : procs)
    if (!st.terminated) out.insert(p);
  return out;
}

std::string Configuration::key() const {
  std::ostringstream out;
  for (const auto& [p, st] : procs) {
    out << "p" << p << "@" << st.round << ":" << st.view.to_string();
    if (st.terminated) out << "!" << st.output;
    out << ";";
  }
  return out.str();
}

Configuration apply_schedule(const Configuration& c,
                             const std::set<ProcessId>& p) {
  if (p.empty()) throw InactiveProcess("empty process set");
  Configuration out = c;
  int round = -1;
  for (ProcessId q : p) {
    auto it = out.procs.find(q);
    if (it == out.procs.end() || it->second.terminated)
      throw InactiveProcess("p" + std::to_string(q) + " cannot take a step");
    if (round == -1) round = it->second.round;
    if (it->second.round != round)
      throw MixedObjects("processes poised on different IS objects");
  }
  if (static_cast<int>(out.objects.size()) <= round)
    out.objects.resize(static_cast<std::size_t>(round) + 1);
  auto& log = out.objects[static_cast<std::size_t>(round)];
  for (ProcessId q : p) log.emplace_back(q, out.procs[q].view);
  View snap = View::snapshot(log);
  for (ProcessId q : p) {
    out.procs[q].view = snap;
    out.procs[q].round = round + 1;
  }
  out.provenance.steps.push_back(p);
  return out;
}

}  // namespace chroma
