#ifndef CHROMA_TOPOLOGY_HPP_
#define CHROMA_TOPOLOGY_HPP_

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace chroma {

using ProcessId = int;

struct TopologyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DuplicateColor : TopologyError {
  using TopologyError::TopologyError;
};
struct NotInComplex : TopologyError {
  using TopologyError::TopologyError;
};
struct NotPseudomanifold : TopologyError {
  using TopologyError::TopologyError;
};

/**
 * A process view: either an input value or the set of (process, view) pairs
 * observed in one writeread step. Views are interned, so equality is O(1)
 * and identical states reached along different schedules share one node.
 * Ordering is structural, hence deterministic across runs.
 */
class View {
 public:
  View() : id_(0) {}  // the empty input value

  static View input(const std::string& value);
  static View snapshot(std::vector<std::pair<ProcessId, View>> entries);

  bool is_input() const;
  const std::string& value() const;  // input views only
  const std::vector<std::pair<ProcessId, View>>& entries() const;  // snapshots
  int depth() const;  // 0 for inputs, 1 + max over entries otherwise

  std::uint32_t id() const { return id_; }
  bool operator==(const View& o) const { return id_ == o.id_; }
  bool operator!=(const View& o) const { return id_ != o.id_; }
  bool operator<(const View& o) const;
  bool operator<=(const View& o) const { return *this == o || *this < o; }
  bool operator>(const View& o) const { return o < *this; }

  std::string to_string() const;

 private:
  explicit View(std::uint32_t id) : id_(id) {}
  std::uint32_t id_;
};

struct Vertex {
  ProcessId color = 0;
  View view;

  Vertex() = default;
  Vertex(ProcessId c, View v) : color(c), view(v) {}

  bool operator==(const Vertex& o) const {
    return color == o.color && view == o.view;
  }
  bool operator!=(const Vertex& o) const { return !(*this == o); }
  bool operator<(const Vertex& o) const {
    if (color != o.color) return color < o.color;
    return view < o.view;
  }
  std::string to_string() const;
};

/**
 * A chromatic simplex: vertices with pairwise distinct colors, kept sorted
 * by color. The empty simplex is representable.
 */
class Simplex {
 public:
  Simplex() = default;
  explicit Simplex(std::vector<Vertex> vertices);

  const std::vector<Vertex>& vertices() const { return vertices_; }
  int dim() const { return static_cast<int>(vertices_.size()) - 1; }
  bool empty() const { return vertices_.empty(); }
  std::size_t size() const { return vertices_.size(); }

  std::vector<ProcessId> ids() const;
  std::set<ProcessId> id_set() const;
  bool has_color(ProcessId p) const;
  std::optional<Vertex> vertex_of(ProcessId p) const;
  bool contains(const Vertex& v) const;
  bool contains_face(const Simplex& s) const;

  Simplex restricted_to(const std::set<ProcessId>& ids) const;
  Simplex without(const Simplex& s) const;  // vertices of *this not in s
  std::vector<Simplex> faces(int k) const;  // all k-faces
  std::vector<Simplex> all_faces(bool include_empty = false) const;

  bool operator==(const Simplex& o) const { return vertices_ == o.vertices_; }
  bool operator!=(const Simplex& o) const { return vertices_ != o.vertices_; }
  bool operator<(const Simplex& o) const { return vertices_ < o.vertices_; }
  std::string to_string() const;

 private:
  std::vector<Vertex> vertices_;  // sorted by color, colors distinct
};

// Joining of two simplices; shared vertices are deduplicated, a color clash
// with differing views raises DuplicateColor.
Simplex join(const Simplex& s, const Simplex& t);

/**
 * A finite chromatic simplicial complex, stored by its facet set (maximal
 * simplices). The complex is the subset closure of the facets, so the
 * closure invariant holds by construction.
 */
class ColoredComplex {
 public:
  ColoredComplex() = default;

  static ColoredComplex closure(const std::vector<Simplex>& generators);

  const std::vector<Simplex>& facets() const { return facets_; }
  bool empty() const { return facets_.empty(); }
  int dim() const;  // -1 when empty
  bool contains(const Simplex& s) const;
  bool contains_vertex(const Vertex& v) const;

  std::vector<Simplex> simplices(int k) const;  // all k-simplices
  std::vector<Simplex> all_simplices(bool include_empty = false) const;
  std::vector<Vertex> vertex_list() const;
  std::vector<Simplex> facets_of_dim(int k) const;

  bool operator==(const ColoredComplex& o) const {
    return facets_ == o.facets_;
  }
  bool operator!=(const ColoredComplex& o) const {
    return facets_ != o.facets_;
  }
  std::string to_string() const;

 private:
  std::vector<Simplex> facets_;  // sorted, pairwise incomparable
};

ColoredComplex star(const Simplex& s, const ColoredComplex& k);
ColoredComplex link(const Simplex& s, const ColoredComplex& k);
ColoredComplex skeleton(const ColoredComplex& k, int l);
ColoredComplex complex_union(const ColoredComplex& a, const ColoredComplex& b);
ColoredComplex complex_intersection(const ColoredComplex& a,
                                    const ColoredComplex& b);

struct PseudomanifoldReport {
  bool ok = false;
  char violated = 0;  // 'a', 'b' or 'c' when !ok
  Simplex witness;
};

// Conditions: (a) homogeneously k-dimensional, (b) every (k-1)-simplex is a
// face of at most two k-simplices, (c) the facet adjacency graph under shared
// (k-1)-faces is connected.
PseudomanifoldReport is_pseudomanifold(const ColoredComplex& k, int dim);

struct FacetWalk {
  std::vector<Simplex> facets;  // walk over all k-facets, repeats allowed
  std::vector<Simplex> shared;  // shared (k-1)-face between consecutive steps
};

// Depth-first walk with doubling back over the facet adjacency graph,
// covering every k-facet and ending at `last`.
FacetWalk facet_equivalence_sequence(const ColoredComplex& k, int dim,
                                     const Simplex& last);

}  // namespace chroma

#endif  // CHROMA_TOPOLOGY_HPP_
