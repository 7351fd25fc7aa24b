#ifndef CHROMA_NEIGHBOR_HPP_
#define CHROMA_NEIGHBOR_HPP_

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "chroma/protocol.hpp"
#include "chroma/subdivision.hpp"
#include "chroma/topology.hpp"

namespace chroma {

struct NoIntersection : TopologyError {
  using TopologyError::TopologyError;
};

/**
 * Shared machinery over a fixed input complex at a uniform depth r_m:
 * the iterated subdivision, per-label protocol complexes with every
 * execution still active, depth-1 carriers, and a vertex-to-facet index.
 * All derived complexes are cached.
 */
class NeighborContext {
 public:
  NeighborContext(ColoredComplex input, int r_m);

  const ColoredComplex& input() const { return input_; }
  int r_m() const { return r_m_; }

  // Ch^{r_m} of the input complex, with carriers in the input.
  const SubdividedComplex& whole() const { return whole_; }

  // F_i of an undecided protocol with the given label, 0 <= i <= r_m.
  const SubdividedComplex& protocol(const Label& label, int i);
  const SubdividedComplex& protocol(const Simplex& u, int i);

  // Carrier of a depth-r_m vertex in Ch^1 of the input.
  const Simplex& depth1_carrier(const Vertex& v) const;

  // Facets of Ch^{r_m} containing the vertex.
  const std::vector<Simplex>& facets_at(const Vertex& v) const;

 private:
  ColoredComplex input_;
  int r_m_;
  SubdividedComplex whole_;
  std::map<Vertex, Simplex> depth1_carriers_;
  std::map<Vertex, std::vector<Simplex>> facet_index_;
  std::map<Label, std::vector<SubdividedComplex>> protocols_;
};

// Q_i(u1,u2): the facet-wise intersection of the two protocol complexes.
ColoredComplex intersection_complex(NeighborContext& ctx, const Simplex& u1,
                                    const Simplex& u2, int i);

// The same complex built without intersecting: drop the vertices of the
// overlap block from the joined label's first-round complex and subdivide
// the remainder i-1 more times. Used to cross-check intersection_complex.
ColoredComplex intersection_by_restriction(NeighborContext& ctx,
                                           const Simplex& u1,
                                           const Simplex& u2, int i);

struct NeighborResult {
  Simplex neighbor;  // n-facet of F_{r_m}(u') reached by the rewrite
  Simplex shared;    // vertices of the source facet inside F_{r_m}(u')
  Schedule rewrite;  // the adjusted first full round
};

// The neighbor of an n-facet s_n of Ch^{r_m} with a single-simplex label:
// rewrite the first full round of s_n's schedule so that it starts with
// ids(u_prime), keep the displaced extra processes in their relative order,
// and keep every later round unchanged. A facet already in F_{r_m}(u')
// is its own neighbor. Throws NoIntersection when s_n shares no vertex
// with F_{r_m}(u') or its base facet does not contain u_prime.
NeighborResult canonical_neighbor(NeighborContext& ctx, const Simplex& s_n,
                                  const Simplex& u_prime);

// Neighbor with a sequence label: align the first-round steps with the
// label's id sets one block at a time, each by the single-simplex rewrite
// on the processes not yet placed.
NeighborResult canonical_neighbor(NeighborContext& ctx, const Simplex& s_n,
                                  const Label& label);

struct NeighborCheck {
  bool ok = true;
  int violated = 0;  // first violated requirement, 1..4
  std::string detail;
};

// Checks the four defining requirements: (1) the neighbor is a facet of
// F_{r_m}(u'), (2) it contains every vertex of s_n that is in F_{r_m}(u'),
// (3) the remaining vertices keep their per-process carrier in the input,
// (4) any facet sharing a vertex of color p with s_n and owning a
// u'-neighbor has a neighbor with the same color-p vertex.
NeighborCheck verify_neighbor(NeighborContext& ctx, const NeighborResult& r,
                              const Simplex& s_n, const Simplex& u_prime);

// Requirement-4 audit over the whole complex for one label: returns a pair
// of facets whose neighbors disagree on a shared color, if any exists.
std::optional<std::pair<Simplex, Simplex>> neighbor_coherence_violation(
    NeighborContext& ctx, const Simplex& u_prime);

// The subsimplex of s_n spanned by its vertices in F_{r_m}(u_prime).
Simplex shared_part(NeighborContext& ctx, const Simplex& s_n,
                    const Simplex& u_prime);

// Common part of the depth-1 carriers of the vertices of s_k.
Simplex minimum_carrier(NeighborContext& ctx, const Simplex& s_k);

struct Category {
  Simplex label;                 // a simplex of Q_1(u,u')
  std::vector<Simplex> members;  // n-facets of F_{r_m}(u) with that label
};

// Partition of the facets of F_{r_m}(u) intersecting F_{r_m}(u_prime) by
// the minimum carrier of their shared simplex, sorted by label.
std::vector<Category> categorize(NeighborContext& ctx, const Simplex& u,
                                 const Simplex& u_prime);

// The subsimplex of s_n on the ids of its category label. Throws
// NoIntersection when s_n shares nothing with F_{r_m}(u_prime).
Simplex project(NeighborContext& ctx, const Simplex& s_n,
                const Simplex& u_prime);

}  // namespace chroma

#endif  // CHROMA_NEIGHBOR_HPP_
