#include "chroma/protocol.hpp"

#include <algorithm>
#include <optional>
#include <sstream>

namespace chroma {

namespace {

// Completes the decision map with bottom on every vertex of k that is still
// undefined, so a partially specified map can drive a subdivision.
void fill_bottom(DecisionMap& delta, const ColoredComplex& k) {
  for (const auto& v : k.vertex_list())
    if (!delta.defined(v)) delta.set(v, Decision::bottom());
}

/**
 * Maps a full-information (never-terminating) view to the view the process
 * holds under `delta`, where terminated processes stop writing. Used to read
 * deferred outputs off padded executions.
 */
class DeferredView {
 public:
  explicit DeferredView(const DecisionMap& delta) : delta_(delta) {}

  View operator()(const View& v) {
    if (v.is_input()) return v;
    auto it = memo_.find(v.id());
    if (it != memo_.end()) return it->second;
    std::vector<std::pair<ProcessId, View>> kept;
    for (const auto& [q, w] : v.entries()) {
      View tw = (*this)(w);
      if (!terminated(q, tw)) kept.emplace_back(q, tw);
    }
    View out = View::snapshot(std::move(kept));
    memo_.emplace(v.id(), out);
    return out;
  }

  // Whether q has decided at or before the state u (so it no longer writes).
  bool terminated(ProcessId q, const View& u) const {
    Vertex v(q, u);
    for (int j = 1; j <= u.depth(); ++j)
      if (delta_.get(ancestor_at_depth(v, j)).is_output()) return true;
    return false;
  }

  // The earliest decided output along the (full-information) ancestor chain
  // of v; each ancestor is mapped to its deferred state before the lookup.
  std::optional<std::string> first_output(const Vertex& v) {
    for (int j = 1; j <= v.view.depth(); ++j) {
      Vertex a = ancestor_at_depth(v, j);
      Decision d = delta_.get(Vertex(a.color, (*this)(a.view)));
      if (d.is_output()) return d.value;
    }
    return std::nullopt;
  }

 private:
  const DecisionMap& delta_;
  std::map<std::uint32_t, View> memo_;
};

/**
 * Rewrites views of round-1 refined executions: splitting the first step
 * {U2} into {U1}{U2-U1} shrinks the round-1 snapshot of every process in
 * ids(U1) to the entries of ids(U1); later rounds rewrite entrywise.
 */
class RefineRewrite {
 public:
  explicit RefineRewrite(std::set<ProcessId> u1_ids)
      : u1_ids_(std::move(u1_ids)) {}

  View operator()(ProcessId q, const View& v) {
    if (v.is_input()) return v;
    auto key = std::make_pair(q, v.id());
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    std::vector<std::pair<ProcessId, View>> kept;
    for (const auto& [p, w] : v.entries()) {
      if (v.depth() == 1) {
        if (u1_ids_.count(q) && !u1_ids_.count(p)) continue;
        kept.emplace_back(p, w);
      } else {
        kept.emplace_back(p, (*this)(p, w));
      }
    }
    View out = View::snapshot(std::move(kept));
    memo_.emplace(key, out);
    return out;
  }

 private:
  std::set<ProcessId> u1_ids_;
  std::map<std::pair<ProcessId, std::uint32_t>, View> memo_;
};

}  // namespace

Simplex Label::u_sum() const {
  Simplex out;
  for (const auto& u : sequence) out = join(out, u);
  return out;
}

std::vector<std::set<ProcessId>> Label::id_steps() const {
  std::vector<std::set<ProcessId>> out;
  for (const auto& u : sequence) out.push_back(u.id_set());
  return out;
}

std::string Label::to_string() const {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < sequence.size(); ++i) {
    if (i) os << ", ";
    os << sequence[i].to_string();
  }
  os << ']';
  return os.str();
}

Label make_label(const ColoredComplex& input, std::vector<Simplex> sequence) {
  if (sequence.empty()) throw BadLabel("empty label sequence");
  std::set<ProcessId> seen;
  Simplex sum;
  for (const auto& u : sequence) {
    if (u.empty()) throw BadLabel("empty simplex in label");
    for (ProcessId p : u.ids())
      if (!seen.insert(p).second)
        throw BadLabel("label id sets are not disjoint");
    try {
      sum = join(sum, u);
    } catch (const DuplicateColor&) {
      throw BadLabel("label simplices disagree on a process");
    }
  }
  if (!input.contains(sum))
    throw BadLabel("label is not a face of any input facet: " +
                   sum.to_string());
  return Label{std::move(sequence)};
}

ColoredComplex f0(const ColoredComplex& input, const Label& label) {
  Simplex sum = label.u_sum();
  std::vector<Simplex> gens;
  for (const auto& f : input.facets())
    if (f.contains_face(sum)) gens.push_back(f);
  return ColoredComplex::closure(gens);
}

const SubdividedComplex& PartialProtocol::f(int i) const {
  if (i < 0 || i >= static_cast<int>(complexes.size()))
    throw BadProtocol("no protocol complex at round " + std::to_string(i));
  return complexes[i];
}

std::vector<SubdividedComplex> protocol_complexes(const ColoredComplex& input,
                                                  const Label& label,
                                                  const DecisionMap& delta,
                                                  int i) {
  if (i < 0) throw BadProtocol("negative round");
  std::vector<SubdividedComplex> out;
  out.push_back(identity_subdivision(f0(input, label)));
  if (i == 0) return out;

  // Round 1: no process has terminated yet, so the subdivision is uniform;
  // keep the facets whose schedule starts with the label's id sets.
  SubdividedComplex full = chromatic_subdivide(out[0]);
  auto steps = label.id_steps();
  std::vector<Simplex> kept;
  for (const auto& facet : full.complex.facets()) {
    Simplex base = carrier(facet, full);
    Schedule sched = schedule_from_facet(base, facet);
    if (sched.size() < steps.size()) continue;
    bool match = true;
    for (std::size_t j = 0; j < steps.size(); ++j)
      if (sched.steps[j] != steps[j]) match = false;
    if (match) kept.push_back(facet);
  }
  SubdividedComplex f1 = full;
  f1.complex = ColoredComplex::closure(kept);
  out.push_back(std::move(f1));

  DecisionMap eff = delta;
  for (int r = 1; r < i; ++r) {
    fill_bottom(eff, out.back().complex);
    out.push_back(nonuniform_subdivide(out.back(), eff));
  }
  return out;
}

ColoredComplex protocol_complex(const ColoredComplex& input,
                                const Label& label, int i,
                                const DecisionMap& delta) {
  return protocol_complexes(input, label, delta, i).back().complex;
}

PartialProtocol make_partial_protocol(ColoredComplex input, Label label,
                                      DecisionMap delta, int r_m) {
  if (r_m < 2) throw BadProtocol("r_m must be at least 2");
  PartialProtocol p;
  p.input = std::move(input);
  p.label = std::move(label);
  p.r_m = r_m;
  p.complexes = protocol_complexes(p.input, p.label, delta, r_m);
  for (const auto& v : p.complexes[0].complex.vertex_list())
    if (delta.get(v).is_output())
      throw BadProtocol("termination before round 1 at " + v.to_string());
  for (auto& c : p.complexes) fill_bottom(delta, c.complex);
  for (const auto& v : p.complexes[r_m].complex.vertex_list())
    if (!delta.get(v).is_output())
      throw BadProtocol("execution alive past round " + std::to_string(r_m) +
                        " at " + v.to_string());
  p.delta = std::move(delta);
  return p;
}

CenConfiguration cen(const Simplex& s, const PartialProtocol& p) {
  if (s.empty() || !p.f(1).complex.contains(s))
    throw NotInComplex("not a simplex of F_1: " + s.to_string());
  CenConfiguration out;
  out.start = s;
  std::vector<Vertex> active(s.vertices().begin(), s.vertices().end());
  std::vector<Vertex> finals;
  int round = 1;
  while (!active.empty()) {
    std::vector<Vertex> still;
    for (const auto& v : active) {
      Decision d = p.delta.get(v);
      if (d.is_undefined())
        throw UndefinedVertex("cen hit an undefined vertex " + v.to_string());
      if (d.is_output()) {
        out.outputs[v.color] = d.value;
        out.rounds = round;
        finals.push_back(v);
      } else {
        still.push_back(v);
      }
    }
    if (still.empty()) break;
    if (round >= p.r_m)
      throw DoesNotTerminate("ids(S) still active at round " +
                             std::to_string(p.r_m));
    std::vector<std::pair<ProcessId, View>> entries;
    for (const auto& v : still) entries.emplace_back(v.color, v.view);
    View snap = View::snapshot(entries);
    active.clear();
    for (const auto& v : still) active.emplace_back(v.color, snap);
    ++round;
  }
  out.final_simplex = Simplex(std::move(finals));
  return out;
}

PartialProtocol pad_to_round(const PartialProtocol& p, int r_m) {
  if (r_m < 2) throw BadProtocol("r_m must be at least 2");
  auto chain =
      protocol_complexes(p.input, p.label, DecisionMap(), r_m);
  DeferredView view_of(p.delta);
  DecisionMap delta;
  for (const auto& v : chain[r_m].complex.vertex_list()) {
    auto out = view_of.first_output(v);
    if (!out)
      throw BadProtocol("r_m below a termination round of " +
                        p.label.to_string());
    delta.set(v, Decision::output(*out));
  }
  return make_partial_protocol(p.input, p.label, std::move(delta), r_m);
}

CompatibilityWitness compatible(const PartialProtocol& p1,
                                const PartialProtocol& p2) {
  if (p1.r_m != p2.r_m)
    throw BadProtocol("protocols are not padded to a common r_m");
  ColoredComplex shared =
      complex_intersection(p1.f(1).complex, p2.f(1).complex);
  for (const auto& s : shared.all_simplices()) {
    CenConfiguration c1 = cen(s, p1);
    CenConfiguration c2 = cen(s, p2);
    if (c1.outputs == c2.outputs) continue;
    CompatibilityWitness w;
    w.ok = false;
    w.simplex = s;
    w.outputs1 = c1.outputs;
    w.outputs2 = c2.outputs;
    return w;
  }
  return CompatibilityWitness{};
}

SolvesWitness solves(const PartialProtocol& p, const ColoredTask& t) {
  const SubdividedComplex& top = p.f(p.r_m);
  std::set<Simplex> seen;
  for (const auto& facet : top.complex.facets()) {
    for (const auto& s : facet.all_faces()) {
      if (!seen.insert(s).second) continue;
      std::vector<Vertex> outs;
      for (const auto& v : s.vertices())
        outs.emplace_back(v.color, View::input(p.delta.get(v).value));
      Simplex output_simplex{std::move(outs)};
      Simplex base = carrier_unchecked(s, top);
      if (t.delta.at(base).contains(output_simplex)) continue;
      SolvesWitness w;
      w.ok = false;
      w.simplex = s;
      w.outputs = output_simplex;
      w.carrier_simplex = base;
      return w;
    }
  }
  return SolvesWitness{};
}

PartialProtocol refine_protocol(const PartialProtocol& p, const Simplex& u2) {
  if (p.label.sequence.size() != 1)
    throw BadLabel("refinement needs a single-simplex label");
  const Simplex& u1 = p.label.sequence[0];
  if (!u2.contains_face(u1))
    throw BadLabel("target simplex does not contain the label");
  Label label = make_label(p.input, {u2});
  if (u1 == u2)
    return make_partial_protocol(p.input, label, p.delta, p.r_m);

  RefineRewrite rewrite(u1.id_set());
  DecisionMap delta;
  auto chain = protocol_complexes(p.input, label, DecisionMap(), 1);
  for (int r = 1; r <= p.r_m; ++r) {
    for (const auto& v : chain.back().complex.vertex_list()) {
      Decision d = p.delta.get(Vertex(v.color, rewrite(v.color, v.view)));
      if (d.is_undefined())
        throw BadProtocol("refined state missing from the source protocol");
      if (!delta.defined(v)) delta.set(v, d);
    }
    if (r < p.r_m) chain.push_back(nonuniform_subdivide(chain.back(), delta));
  }
  return make_partial_protocol(p.input, label, std::move(delta), p.r_m);
}

PartialProtocol restrict_protocol(const PartialProtocol& p,
                                  const Label& label) {
  if (label.sequence.size() < p.label.sequence.size() ||
      !std::equal(p.label.sequence.begin(), p.label.sequence.end(),
                  label.sequence.begin()))
    throw BadLabel("label does not extend " + p.label.to_string());
  return make_partial_protocol(p.input, label, p.delta, p.r_m);
}

}  // namespace chroma
