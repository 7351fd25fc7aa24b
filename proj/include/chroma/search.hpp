#ifndef CHROMA_SEARCH_HPP_
#define CHROMA_SEARCH_HPP_

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "chroma/protocol.hpp"
#include "chroma/tasks.hpp"
#include "chroma/topology.hpp"

namespace chroma {

struct NotOneDimensional : TopologyError {
  using TopologyError::TopologyError;
};

struct SearchBudget {
  int max_depth = 3;
  long max_nodes = 1000000;
  // First termination round the family search tries (never below 2). Callers
  // that already know shallow rounds are unsatisfiable can skip them.
  int min_depth = 2;
};

enum class SearchStatus { FOUND, INFEASIBLE, UNKNOWN };

/**
 * Result of the bounded search for a partial protocol with one label head U:
 * for each restricted output and each subdivision depth d, a backtracking
 * search for a color-preserving simplicial map from Ch^d of the link of U
 * into that restricted output, respecting the carrier map. On success the
 * map is assembled into a protocol: the processes of U decide the label
 * values at round 1 and the rest run the link protocol, ignoring U's
 * entries in their views.
 */
struct ProtocolSearch {
  SearchStatus status = SearchStatus::UNKNOWN;
  std::optional<PartialProtocol> protocol;  // FOUND
  int output_index = -1;                    // chosen restricted output
  int depth = -1;                           // subdivision depth of the map
  long nodes = 0;
  std::string witness;
};

ProtocolSearch search_partial_protocol(const ColoredTask& t, const Simplex& u,
                                       const SearchBudget& b = {});

// Sequence labels: search with the head simplex, then restrict the found
// protocol to the full sequence (its complexes only shrink).
ProtocolSearch search_partial_protocol(const ColoredTask& t,
                                       const Label& label,
                                       const SearchBudget& b = {});

/**
 * Joint search for one protocol per full-first-round label (an ordered
 * partition of a facet's processes) such that all protocols are pairwise
 * compatible. Shared variables are the outputs of the configurations
 * reached from intersection simplices by repeating their process sets;
 * equal across labels by construction, then each label is extended
 * independently.
 *
 * INFEASIBLE only on a depth-independent clash: labels whose facet's
 * outputs are all single-valued admit exactly one output value across
 * their (connected) protocol complex, so overlapping labels with disjoint
 * forced value sets can never be compatible, at any depth.
 */
struct FamilySearch {
  SearchStatus status = SearchStatus::UNKNOWN;
  std::vector<Label> labels;
  std::vector<PartialProtocol> family;  // FOUND, aligned with labels
  // INFEASIBLE: the clashing labels with their forced value sets, plus a
  // simplex shared by their first-round complexes.
  std::vector<std::pair<Label, std::set<std::string>>> clash;
  Simplex clash_shared;
  long nodes = 0;
  std::string witness;
};

FamilySearch search_compatible_family(const ColoredTask& t,
                                      const SearchBudget& b = {});

// The same joint search over an arbitrary set of labels. The default
// overload uses full 1-round schedules; the adaptive opponent needs the
// set of all single-simplex labels instead, because an end-of-phase choice
// only pins the first process set, not the whole first round.
FamilySearch search_compatible_family(const ColoredTask& t,
                                      const std::vector<Label>& labels,
                                      const SearchBudget& b = {});

// All labels whose id steps form a full 1-round schedule of some facet.
std::vector<Label> full_schedule_labels(const ColoredComplex& input);

// Every nonempty simplex of the input complex as a length-1 label.
std::vector<Label> simplex_labels(const ColoredComplex& input);

/**
 * Exact decision for tasks with a 1-dimensional input complex: solvable
 * iff output vertices can be chosen for the input vertices such that, for
 * every input edge, the two choices lie in one connected component of the
 * edge's allowed outputs. SOLVABLE carries an explicit decision map on an
 * iterated subdivision; IMPOSSIBLE carries the cycle of input edges whose
 * choices cannot be made consistent (for coverings, the two sheets that
 * would have to intersect).
 */
struct OneDimDecision {
  bool solvable = false;
  int depth = -1;                      // subdivision depth of the map
  std::map<Vertex, Vertex> decision;   // SOLVABLE: subdivision -> output
  std::vector<Simplex> cycle;          // IMPOSSIBLE: offending input edges
  std::string detail;
};

OneDimDecision decide_1dim(const ColoredTask& t);

// Audits a color-preserving simplicial map on a subdivision: every simplex
// must land in the task's delta of its carrier. Returns the first
// offending simplex, if any.
std::optional<Simplex> simplicial_map_violation(
    const SubdividedComplex& sub, const CarrierMap& delta,
    const std::map<Vertex, Vertex>& mu);

}  // namespace chroma

#endif  // CHROMA_SEARCH_HPP_
