#ifndef CHROMA_TASKS_HPP_
#define CHROMA_TASKS_HPP_

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "chroma/topology.hpp"

namespace chroma {

struct NotACovering : TopologyError {
  using TopologyError::TopologyError;
};
struct LabelNotAllowed : TopologyError {
  using TopologyError::TopologyError;
};
struct InvalidTask : TopologyError {
  using TopologyError::TopologyError;
};

using Value = std::string;
using ValueSet = std::set<Value>;

/**
 * A value-only (uncolored) finite simplicial complex, stored by its facets.
 */
struct ValueComplex {
  std::vector<ValueSet> facets;  // sorted, pairwise incomparable

  static ValueComplex closure(std::vector<ValueSet> generators);
  bool empty() const { return facets.empty(); }
  int dim() const;
  bool contains(const ValueSet& s) const;
  std::vector<ValueSet> all_simplices() const;  // nonempty, by size then value
  std::set<Value> values() const;
  bool operator==(const ValueComplex& o) const { return facets == o.facets; }
};

/**
 * A colorless task: value-only input/output complexes and a carrier map on
 * value sets, stored extensionally.
 */
struct ColorlessTask {
  std::string name;
  ValueComplex inputs;
  ValueComplex outputs;
  std::map<ValueSet, ValueComplex> delta_star;

  const ValueComplex& delta(const ValueSet& sigma) const;
  // Checks monotonicity, the dimension bound dim(delta*(s)) <= dim(s), and
  // that delta is total on input simplices. Throws InvalidTask.
  void validate() const;
};

/**
 * Extensionally stored carrier map from input simplices to output
 * subcomplexes.
 */
class CarrierMap {
 public:
  void set(const Simplex& s, ColoredComplex image);
  bool has(const Simplex& s) const { return map_.count(s) > 0; }
  const ColoredComplex& at(const Simplex& s) const;
  const std::map<Simplex, ColoredComplex>& entries() const { return map_; }

 private:
  std::map<Simplex, ColoredComplex> map_;
};

struct ColoredTask {
  std::string name;
  ColoredComplex input;
  ColoredComplex output;
  CarrierMap delta;
  int processes = 0;  // n + 1
};

struct RestrictedOutput {
  Simplex label_facet;      // outputs for ids(U)
  ColoredComplex component;  // the n-simplices of O containing the label
};

// Pseudosphere colorization of a colorless task over n_plus_1 processes.
ColoredTask colorize(const ColorlessTask& t, int n_plus_1);

// Discards colors: the value set of a colored simplex.
ValueSet project_values(const Simplex& s);

struct PropertyWitness {
  bool ok = true;
  Simplex small, big;
  ProcessId color = 0;
  Value value;
};

// Superset-view inheritance of allowed outputs (the colorless property).
PropertyWitness check_colorless_property(const ColoredTask& t);

struct MonotonicityWitness {
  bool ok = true;
  Simplex small, big;
};

MonotonicityWitness check_monotone(const ColoredTask& t);

// One RestrictedOutput per facet of the ids(U)-restriction of the output
// complex that lies in delta(U).
std::vector<RestrictedOutput> restricted_outputs(const ColoredTask& t,
                                                 const Simplex& u);

// The task (lk(U, I), O_U^i \ U, Delta_U) with
// Delta_U(U') = Delta(U' * U) \ U.
ColoredTask link_task(const ColoredTask& t, const Simplex& u, std::size_t i);

ColorlessTask consensus_task(int n_plus_1, const std::vector<Value>& values);
ColorlessTask set_agreement_task(int n_plus_1, int k);
ColorlessTask hexagone_task();

struct CoveringWitness {
  ValueSet base;          // the simplex of I* with intersecting sheets
  ValueSet sheet_a, sheet_b;
};

// The colorless covering task of the covering complex (O*, f); the input
// complex is the image of f. Throws NotACovering (message carries the
// witness) when some simplex has intersecting sheets.
ColorlessTask covering_task(const ValueComplex& o_star,
                            const std::map<Value, Value>& f);

// Validation helper exposing the witness.
std::optional<CoveringWitness> find_intersecting_sheets(
    const ValueComplex& o_star, const std::map<Value, Value>& f);

// Sheets of a simplex of I*: the facets of f^{-1}(tau).
std::vector<ValueSet> sheets_of(const ValueComplex& o_star,
                                const std::map<Value, Value>& f,
                                const ValueSet& tau);

}  // namespace chroma

#endif  // CHROMA_TASKS_HPP_
