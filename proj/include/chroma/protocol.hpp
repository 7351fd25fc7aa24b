#ifndef CHROMA_PROTOCOL_HPP_
#define CHROMA_PROTOCOL_HPP_

#include <map>
#include <string>
#include <vector>

#include "chroma/subdivision.hpp"
#include "chroma/tasks.hpp"
#include "chroma/topology.hpp"

namespace chroma {

struct BadLabel : TopologyError {
  using TopologyError::TopologyError;
};
struct BadProtocol : TopologyError {
  using TopologyError::TopologyError;
};

/**
 * An ordered sequence [U_1 .. U_k] of input simplices whose id sets are
 * pairwise disjoint; the sequence prescribes the first k sets of processes
 * to take a step in round 1.
 */
struct Label {
  std::vector<Simplex> sequence;

  Simplex u_sum() const;
  std::vector<std::set<ProcessId>> id_steps() const;
  std::string to_string() const;
  bool operator==(const Label& o) const { return sequence == o.sequence; }
  bool operator<(const Label& o) const { return sequence < o.sequence; }
};

// Validates the sequence against an input complex: nonempty simplices, all
// faces of one common facet, pairwise disjoint ids. Throws BadLabel.
Label make_label(const ColoredComplex& input, std::vector<Simplex> sequence);

// The set of facets of the input complex that contain U_sum.
ColoredComplex f0(const ColoredComplex& input, const Label& label);

/**
 * A partial protocol: a decision map over the protocol complexes
 * F_0 .. F_{r_m} of its label. Immutable once built.
 */
struct PartialProtocol {
  ColoredComplex input;
  Label label;
  int r_m = 2;
  DecisionMap delta;
  std::vector<SubdividedComplex> complexes;  // F_0 .. F_{r_m}

  const SubdividedComplex& f(int i) const;
};

// F_0 .. F_i of the label under delta: F_1 keeps the facets of Ch(F_0)
// whose round-1 schedule starts with the label's id sets; deeper rounds are
// non-uniform subdivisions. Undefined vertices below round i are treated as
// still active.
std::vector<SubdividedComplex> protocol_complexes(const ColoredComplex& input,
                                                  const Label& label,
                                                  const DecisionMap& delta,
                                                  int i);

ColoredComplex protocol_complex(const ColoredComplex& input,
                                const Label& label, int i,
                                const DecisionMap& delta);

// Assembles and validates: r_m >= 2, no output on F_0 vertices, every vertex
// of F_{r_m} carries an output (all executions terminate by round r_m).
// Undefined interior vertices are completed to bottom. Throws BadProtocol.
PartialProtocol make_partial_protocol(ColoredComplex input, Label label,
                                      DecisionMap delta, int r_m);

struct CenConfiguration {
  Simplex start;                            // the round-1 simplex S
  Simplex final_simplex;                    // terminal states of ids(S)
  std::map<ProcessId, std::string> outputs;
  int rounds = 0;                           // last round with a termination
};

// The configuration reached from S by repeating ids(S) until all of ids(S)
// terminate. Throws DoesNotTerminate past r_m and NotInComplex when S is
// not in F_1.
CenConfiguration cen(const Simplex& s, const PartialProtocol& p);

// Defers every termination to round r_m, preserving outputs along every
// schedule. Requires r_m >= max(2, the latest termination round of p).
PartialProtocol pad_to_round(const PartialProtocol& p, int r_m);

struct CompatibilityWitness {
  bool ok = true;
  Simplex simplex;  // S in F_1(p1) ∩ F_1(p2) with differing CEN outputs
  std::map<ProcessId, std::string> outputs1, outputs2;
};

// Both protocols must be padded to one common r_m.
CompatibilityWitness compatible(const PartialProtocol& p1,
                                const PartialProtocol& p2);

struct SolvesWitness {
  bool ok = true;
  Simplex simplex;          // the offending simplex of F_{r_m}
  Simplex outputs;          // its decided outputs
  Simplex carrier_simplex;  // its carrier in the input complex
};

// Every simplex of F_{r_m} must decide outputs inside delta of its carrier.
SolvesWitness solves(const PartialProtocol& p, const ColoredTask& t);

// Transforms a protocol labelled [U1] into one labelled [U2] for U1 ⊆ U2 by
// refining round 1 from {U2}γ to {U1}{U2-U1}γ.
PartialProtocol refine_protocol(const PartialProtocol& p, const Simplex& u2);

// Restriction of p to a label extending p's sequence.
PartialProtocol restrict_protocol(const PartialProtocol& p,
                                  const Label& label);

}  // namespace chroma

#endif  // CHROMA_PROTOCOL_HPP_
