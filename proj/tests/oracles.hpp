#ifndef CHROMA_TESTS_ORACLES_HPP_
#define CHROMA_TESTS_ORACLES_HPP_

#include <cstdint>
#include <set>
#include <vector>

#include "chroma/subdivision.hpp"
#include "chroma/topology.hpp"

namespace oracles {

// Number of ordered set partitions (Fubini numbers), by the binomial
// recurrence a(n) = sum_k C(n,k) a(n-k).
std::uint64_t fubini(int n);

// Ordered set partitions enumerated through surjections onto {0..m-1};
// independent of chroma::ordered_partitions.
std::vector<std::vector<std::set<chroma::ProcessId>>> ordered_set_partitions(
    const std::set<chroma::ProcessId>& ids);

// The standard chromatic subdivision of a single simplex, built directly
// from the two simplex conditions on (i, S_i) vertex tuples rather than
// from schedules. Returns the facet set.
std::vector<chroma::Simplex> brute_force_ch_facets(const chroma::Simplex& base);

// Smallest face of the base facet whose iterated subdivision contains s,
// found by enumerating subdivisions of every face.
chroma::Simplex brute_force_carrier(const chroma::Simplex& base_facet,
                                    int depth, const chroma::Simplex& s);

// Shortest-path count of active-active edges between two vertex sets in the
// 1-skeleton of a complex, by Dijkstra over explicit edges. Terminated
// vertices are given by `terminated`. Returns -1 when disconnected.
int brute_force_active_distance(const chroma::ColoredComplex& k,
                                const std::set<chroma::Vertex>& a,
                                const std::set<chroma::Vertex>& b,
                                const std::set<chroma::Vertex>& terminated);

}  // namespace oracles

#endif  // CHROMA_TESTS_ORACLES_HPP_
