#include "chroma/neighbor.hpp"

#include <algorithm>

namespace chroma {

namespace {

// Rewrites an ordered partition so that it starts with `head`: processes of
// the old first step not in `head` follow as one step, steps up to the last
// one touching `head` are limited to the processes drafted alongside `head`,
// and everything after is kept as is.
std::vector<std::set<ProcessId>> align_first_step(
    const std::vector<std::set<ProcessId>>& steps,
    const std::set<ProcessId>& head) {
  std::set<ProcessId> target;  // head processes not already in the first step
  for (ProcessId p : head)
    if (!steps[0].count(p)) target.insert(p);
  std::size_t j = 0;
  for (std::size_t k = 1; k < steps.size(); ++k)
    for (ProcessId p : steps[k])
      if (target.count(p)) j = k;
  std::set<ProcessId> drafted;  // non-head processes absorbed before round j
  for (std::size_t k = 1; k <= j; ++k)
    for (ProcessId p : steps[k])
      if (!target.count(p)) drafted.insert(p);

  std::vector<std::set<ProcessId>> out;
  out.push_back(head);
  std::set<ProcessId> displaced;
  for (ProcessId p : steps[0])
    if (!head.count(p)) displaced.insert(p);
  if (!displaced.empty()) out.push_back(displaced);
  Schedule middle(std::vector<std::set<ProcessId>>(steps.begin() + 1,
                                                   steps.begin() + j + 1));
  for (auto& s : limit_schedule(middle, drafted).steps)
    out.push_back(std::move(s));
  out.insert(out.end(), steps.begin() + j + 1, steps.end());
  return out;
}

Simplex base_facet_of(const NeighborContext& ctx, const Simplex& s_n) {
  if (s_n.dim() != ctx.input().dim())
    throw TopologyError("neighbors are defined for facets only");
  return carrier(s_n, ctx.whole());
}

}  // namespace

NeighborContext::NeighborContext(ColoredComplex input, int r_m)
    : input_(std::move(input)), r_m_(r_m) {
  if (r_m_ < 2) throw TopologyError("neighbor depth must be at least 2");
  whole_ = iterated_subdivision(input_, r_m_);
  auto above = iterated_subdivision(chromatic_subdivide(input_).complex,
                                    r_m_ - 1);
  depth1_carriers_ = std::move(above.carrier_index);
  for (const auto& f : whole_.complex.facets())
    for (const auto& v : f.vertices()) facet_index_[v].push_back(f);
}

const SubdividedComplex& NeighborContext::protocol(const Label& label,
                                                   int i) {
  auto it = protocols_.find(label);
  if (it == protocols_.end()) {
    auto chain = protocol_complexes(input_, label, DecisionMap(), r_m_);
    it = protocols_.emplace(label, std::move(chain)).first;
  }
  return it->second.at(static_cast<std::size_t>(i));
}

const SubdividedComplex& NeighborContext::protocol(const Simplex& u, int i) {
  return protocol(make_label(input_, {u}), i);
}

const Simplex& NeighborContext::depth1_carrier(const Vertex& v) const {
  auto it = depth1_carriers_.find(v);
  if (it == depth1_carriers_.end())
    throw NotInComplex("vertex has no depth-1 carrier here");
  return it->second;
}

const std::vector<Simplex>& NeighborContext::facets_at(const Vertex& v) const {
  auto it = facet_index_.find(v);
  if (it == facet_index_.end())
    throw NotInComplex("vertex is not in the subdivision");
  return it->second;
}

ColoredComplex intersection_complex(NeighborContext& ctx, const Simplex& u1,
                                    const Simplex& u2, int i) {
  return complex_intersection(ctx.protocol(u1, i).complex,
                              ctx.protocol(u2, i).complex);
}

ColoredComplex intersection_by_restriction(NeighborContext& ctx,
                                           const Simplex& u1,
                                           const Simplex& u2, int i) {
  for (const auto& v : u1.vertices()) {
    auto w = u2.vertex_of(v.color);
    if (w && !(*w == v)) return ColoredComplex();  // labels conflict
  }
  Simplex joined = join(u1, u2);
  if (!ctx.input().contains(joined)) return ColoredComplex();
  Simplex overlap = joined;
  if (u2.contains_face(u1))
    overlap = u1;
  else if (u1.contains_face(u2))
    overlap = u2;
  std::vector<Simplex> stripped;
  for (const auto& f : ctx.protocol(joined, 1).complex.facets()) {
    std::set<ProcessId> keep = f.id_set();
    for (ProcessId p : overlap.id_set()) keep.erase(p);
    Simplex r = f.restricted_to(keep);
    if (!r.empty()) stripped.push_back(r);
  }
  ColoredComplex k = ColoredComplex::closure(stripped);
  for (int d = 1; d < i; ++d) k = chromatic_subdivide(k).complex;
  return k;
}

Simplex shared_part(NeighborContext& ctx, const Simplex& s_n,
                    const Simplex& u_prime) {
  const auto& target = ctx.protocol(u_prime, ctx.r_m()).complex;
  std::vector<Vertex> vs;
  for (const auto& v : s_n.vertices())
    if (target.contains_vertex(v)) vs.push_back(v);
  return Simplex(std::move(vs));
}

NeighborResult canonical_neighbor(NeighborContext& ctx, const Simplex& s_n,
                                  const Simplex& u_prime) {
  Simplex base = base_facet_of(ctx, s_n);
  if (!base.contains_face(u_prime))
    throw NoIntersection("the initial configuration of " + s_n.to_string() +
                         " does not contain " + u_prime.to_string());
  NeighborResult r;
  r.shared = shared_part(ctx, s_n, u_prime);
  if (r.shared.empty())
    throw NoIntersection(s_n.to_string() +
                         " shares nothing with the protocol complex of " +
                         u_prime.to_string());
  auto rounds = rounds_from_facet(base, s_n);
  rounds[0] = Schedule(align_first_step(rounds[0].steps, u_prime.id_set()));
  r.rewrite = rounds[0];
  r.neighbor = facet_from_rounds(base, rounds);
  return r;
}

NeighborResult canonical_neighbor(NeighborContext& ctx, const Simplex& s_n,
                                  const Label& label) {
  Simplex base = base_facet_of(ctx, s_n);
  if (!base.contains_face(label.u_sum()))
    throw NoIntersection("the initial configuration of " + s_n.to_string() +
                         " does not contain " + label.u_sum().to_string());
  NeighborResult r;
  const auto& target = ctx.protocol(label, ctx.r_m()).complex;
  std::vector<Vertex> vs;
  for (const auto& v : s_n.vertices())
    if (target.contains_vertex(v)) vs.push_back(v);
  r.shared = Simplex(std::move(vs));
  if (r.shared.empty())
    throw NoIntersection(s_n.to_string() +
                         " shares nothing with the protocol complex of " +
                         label.to_string());
  auto rounds = rounds_from_facet(base, s_n);
  auto steps = rounds[0].steps;
  std::size_t placed = 0;
  for (const auto& block : label.id_steps()) {
    std::vector<std::set<ProcessId>> tail(steps.begin() + placed, steps.end());
    auto aligned = align_first_step(tail, block);
    steps.erase(steps.begin() + placed, steps.end());
    steps.insert(steps.end(), aligned.begin(), aligned.end());
    ++placed;
  }
  rounds[0] = Schedule(steps);
  r.rewrite = rounds[0];
  r.neighbor = facet_from_rounds(base, rounds);
  return r;
}

NeighborCheck verify_neighbor(NeighborContext& ctx, const NeighborResult& r,
                              const Simplex& s_n, const Simplex& u_prime) {
  const auto& target = ctx.protocol(u_prime, ctx.r_m()).complex;
  if (r.neighbor.dim() != ctx.input().dim() || !target.contains(r.neighbor))
    return {false, 1, "not a facet of the target protocol complex"};
  Simplex v = shared_part(ctx, s_n, u_prime);
  if (!r.neighbor.contains_face(v))
    return {false, 2, "an intersection vertex is dropped"};
  for (const auto& w : s_n.vertices()) {
    if (v.contains(w)) continue;
    auto w2 = r.neighbor.vertex_of(w.color);
    if (!w2 || !(ctx.whole().carrier_of_vertex(w) ==
                 ctx.whole().carrier_of_vertex(*w2)))
      return {false, 3,
              "carrier changes for process " + std::to_string(w.color)};
  }
  for (const auto& w : s_n.vertices()) {
    for (const auto& other : ctx.facets_at(w)) {
      if (other == s_n) continue;
      if (!carrier(other, ctx.whole()).contains_face(u_prime)) continue;
      if (shared_part(ctx, other, u_prime).empty()) continue;
      auto n2 = canonical_neighbor(ctx, other, u_prime);
      for (const auto& shared_v : s_n.vertices()) {
        if (!other.contains(shared_v)) continue;
        auto a = r.neighbor.vertex_of(shared_v.color);
        auto b = n2.neighbor.vertex_of(shared_v.color);
        if (!a || !b || !(*a == *b))
          return {false, 4,
                  "neighbors disagree on process " +
                      std::to_string(shared_v.color)};
      }
    }
  }
  return {};
}

std::optional<std::pair<Simplex, Simplex>> neighbor_coherence_violation(
    NeighborContext& ctx, const Simplex& u_prime) {
  // source vertex -> (its vertex in the neighbor, a facet that chose it)
  std::map<Vertex, std::pair<Vertex, Simplex>> chosen;
  for (const auto& f : ctx.whole().complex.facets()) {
    if (!carrier(f, ctx.whole()).contains_face(u_prime)) continue;
    if (shared_part(ctx, f, u_prime).empty()) continue;
    auto n = canonical_neighbor(ctx, f, u_prime);
    for (const auto& v : f.vertices()) {
      auto w = n.neighbor.vertex_of(v.color);
      auto [it, fresh] = chosen.emplace(v, std::make_pair(*w, f));
      if (!fresh && !(it->second.first == *w))
        return std::make_pair(it->second.second, f);
    }
  }
  return std::nullopt;
}

Simplex minimum_carrier(NeighborContext& ctx, const Simplex& s_k) {
  if (s_k.empty()) return Simplex();
  std::vector<Vertex> common;
  for (const auto& c : ctx.depth1_carrier(s_k.vertices()[0]).vertices()) {
    bool everywhere = true;
    for (std::size_t i = 1; i < s_k.vertices().size() && everywhere; ++i)
      everywhere = ctx.depth1_carrier(s_k.vertices()[i]).contains(c);
    if (everywhere) common.push_back(c);
  }
  return Simplex(std::move(common));
}

std::vector<Category> categorize(NeighborContext& ctx, const Simplex& u,
                                 const Simplex& u_prime) {
  std::map<Simplex, std::vector<Simplex>> groups;
  for (const auto& f : ctx.protocol(u, ctx.r_m()).complex.facets()) {
    Simplex sha = shared_part(ctx, f, u_prime);
    if (sha.empty()) continue;
    groups[minimum_carrier(ctx, sha)].push_back(f);
  }
  std::vector<Category> out;
  out.reserve(groups.size());
  for (auto& [label, members] : groups)
    out.push_back({label, std::move(members)});
  return out;
}

Simplex project(NeighborContext& ctx, const Simplex& s_n,
                const Simplex& u_prime) {
  Simplex sha = shared_part(ctx, s_n, u_prime);
  if (sha.empty())
    throw NoIntersection(s_n.to_string() +
                         " shares nothing with the protocol complex of " +
                         u_prime.to_string());
  return s_n.restricted_to(minimum_carrier(ctx, sha).id_set());
}

}  // namespace chroma
