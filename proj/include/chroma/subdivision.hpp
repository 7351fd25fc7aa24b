#ifndef CHROMA_SUBDIVISION_HPP_
#define CHROMA_SUBDIVISION_HPP_

#include <map>
#include <set>
#include <string>
#include <vector>

#include "chroma/topology.hpp"

namespace chroma {

struct NotAPartition : TopologyError {
  using TopologyError::TopologyError;
};
struct UndefinedVertex : TopologyError {
  using TopologyError::TopologyError;
};
struct InactiveProcess : TopologyError {
  using TopologyError::TopologyError;
};
struct MixedObjects : TopologyError {
  using TopologyError::TopologyError;
};
struct DoesNotTerminate : TopologyError {
  using TopologyError::TopologyError;
};

/**
 * An ordered sequence of nonempty process sets. A full 1-round schedule over
 * a set P is an ordered partition of P.
 */
struct Schedule {
  std::vector<std::set<ProcessId>> steps;

  Schedule() = default;
  explicit Schedule(std::vector<std::set<ProcessId>> s) : steps(std::move(s)) {}

  bool empty() const { return steps.empty(); }
  std::size_t size() const { return steps.size(); }
  std::set<ProcessId> support() const;
  bool is_ordered_partition_of(const std::set<ProcessId>& ids) const;

  // Splits the steps into maximal blocks each of which partitions `ids`.
  // Throws NotAPartition when the steps do not decompose into full rounds.
  std::vector<Schedule> rounds(const std::set<ProcessId>& ids) const;

  Schedule then(const Schedule& tail) const;

  bool operator==(const Schedule& o) const { return steps == o.steps; }
  bool operator<(const Schedule& o) const { return steps < o.steps; }
  std::string to_string() const;
};

// All ordered partitions of `ids`, in lexicographic order of
// (sequence of set sizes, then lowest members).
std::vector<Schedule> ordered_partitions(const std::set<ProcessId>& ids);

// Restriction of an ordered partition to a subset, dropping emptied sets.
Schedule limit_schedule(const Schedule& sched, const std::set<ProcessId>& to);

enum class DecisionKind { UNDEFINED, BOTTOM, OUTPUT };

struct Decision {
  DecisionKind kind = DecisionKind::UNDEFINED;
  std::string value;

  static Decision undefined() { return {}; }
  static Decision bottom() { return {DecisionKind::BOTTOM, ""}; }
  static Decision output(std::string v) {
    return {DecisionKind::OUTPUT, std::move(v)};
  }
  bool is_output() const { return kind == DecisionKind::OUTPUT; }
  bool is_bottom() const { return kind == DecisionKind::BOTTOM; }
  bool is_undefined() const { return kind == DecisionKind::UNDEFINED; }
  bool operator==(const Decision& o) const {
    return kind == o.kind && value == o.value;
  }
  std::string to_string() const;
};

/**
 * Write-once per-vertex decision map. Vertices default to UNDEFINED; setting
 * a vertex twice to different non-UNDEFINED values throws.
 */
class DecisionMap {
 public:
  Decision get(const Vertex& v) const;
  void set(const Vertex& v, const Decision& d);
  bool defined(const Vertex& v) const { return !get(v).is_undefined(); }
  const std::map<Vertex, Decision>& assignments() const { return map_; }

 private:
  std::map<Vertex, Decision> map_;
};

/**
 * An iterated (possibly non-uniform) chromatic subdivision of a base
 * complex, with the carrier of every vertex back in the base.
 */
struct SubdividedComplex {
  ColoredComplex base;
  int depth = 0;
  ColoredComplex complex;
  std::map<Vertex, Simplex> carrier_index;

  Simplex carrier_of_vertex(const Vertex& v) const;
};

SubdividedComplex identity_subdivision(const ColoredComplex& k);
SubdividedComplex chromatic_subdivide(const ColoredComplex& k);
SubdividedComplex chromatic_subdivide(const SubdividedComplex& k);
SubdividedComplex iterated_subdivision(const ColoredComplex& k, int depth);

// Non-uniform chromatic subdivision: vertices with an OUTPUT decision are
// carried unchanged, the active part of every facet is subdivided.
SubdividedComplex nonuniform_subdivide(const SubdividedComplex& k,
                                       const DecisionMap& delta);

// Smallest base simplex containing s; equals the union of vertex carriers.
Simplex carrier(const Simplex& s, const SubdividedComplex& in);

// Same, skipping the membership test of s itself; for callers enumerating
// the simplices of the subdivision, where membership holds by construction.
Simplex carrier_unchecked(const Simplex& s, const SubdividedComplex& in);

// The subcomplex of simplices all of whose vertices have carrier equal to
// the full base simplex (base must be the closure of a single simplex).
ColoredComplex non_boundary_complex(const SubdividedComplex& k);

// The facet of Ch(closure(base_facet)) reached by a full 1-round schedule,
// and its inverse.
Simplex facet_from_schedule(const Simplex& base_facet, const Schedule& sched);
Schedule schedule_from_facet(const Simplex& base_facet, const Simplex& facet);

// The facet of Ch^r(closure(base_facet)) reached by r full rounds.
Simplex facet_from_rounds(const Simplex& base_facet,
                          const std::vector<Schedule>& rounds);
std::vector<Schedule> rounds_from_facet(const Simplex& base_facet,
                                        const Simplex& facet);

// Derives, for each vertex of a subdivision facet, its vertex one round
// earlier (the process's own previous state). Views of depth 0 are returned
// unchanged.
Vertex previous_state(const Vertex& v);
Vertex ancestor_at_depth(const Vertex& v, int depth);

/**
 * One reachable NIIS execution state: per-process round, view, and
 * termination status, plus the per-object write logs needed for writeread
 * semantics and the provenance schedule.
 */
struct ProcessState {
  View view;           // input value at round 0, snapshot afterwards
  int round = 0;       // objects 1..round already accessed
  bool terminated = false;
  std::string output;
};

struct Configuration {
  Simplex inputs;  // the initial configuration (one input vertex per process)
  std::map<ProcessId, ProcessState> procs;
  // Write log per IS object (index 0 = object accessed in round 1).
  std::vector<std::vector<std::pair<ProcessId, View>>> objects;
  Schedule provenance;

  static Configuration initial(const Simplex& inputs);
  Vertex state_vertex(ProcessId p) const;
  Simplex round_simplex() const;  // simplex of the current per-process states
  std::set<ProcessId> active() const;
  std::string key() const;  // canonical identity: the per-process states
};

// The resulting configuration CP: every process in P writereads the next IS
// object. All of P must be active and poised on the same object.
Configuration apply_schedule(const Configuration& c,
                             const std::set<ProcessId>& p);

}  // namespace chroma

#endif  // CHROMA_SUBDIVISION_HPP_
