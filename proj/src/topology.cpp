#include "chroma/topology.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <mutex>
#include <sstream>
#include <unordered_map>

namespace chroma {
namespace {

struct ViewData {
  bool leaf = true;
  std::string value;
  std::vector<std::pair<ProcessId, View>> entries;
  int depth = 0;
};

struct ViewKeyHash {
  std::size_t operator()(const ViewData* d) const {
    std::size_t h = d->leaf ? 0x9e3779b9u : 0x85ebca6bu;
    if (d->leaf) {
      h ^= std::hash<std::string>()(d->value);
    } else {
      for (const auto& [p, v] : d->entries) {
        h = h * 1000003u + static_cast<std::size_t>(p) * 31u + v.id();
      }
    }
    return h;
  }
};

struct ViewKeyEq {
  bool operator()(const ViewData* a, const ViewData* b) const {
    if (a->leaf != b->leaf) return false;
    if (a->leaf) return a->value == b->value;
    return a->entries == b->entries;
  }
};

class ViewRegistry {
 public:
  static ViewRegistry& instance() {
    static ViewRegistry r;
    return r;
  }

  std::uint32_t intern(ViewData data) {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = index_.find(&data);
    if (it != index_.end()) return it->second;
    auto id = static_cast<std::uint32_t>(nodes_.size());
    nodes_.push_back(new ViewData(std::move(data)));
    index_.emplace(nodes_.back(), id);
    return id;
  }

  const ViewData& get(std::uint32_t id) const {
    // Nodes are append-only and never relocated; reads need no lock after
    // interning has published the id.
    return *nodes_[id];
  }

 private:
  ViewRegistry() {
    ViewData empty;
    empty.leaf = true;
    nodes_.push_back(new ViewData(empty));
    index_.emplace(nodes_.back(), 0u);
  }

  std::mutex mu_;
  std::vector<const ViewData*> nodes_;
  std::unordered_map<const ViewData*, std::uint32_t, ViewKeyHash, ViewKeyEq>
      index_;
};

int view_compare(const View& a, const View& b) {
  if (a == b) return 0;
  const ViewData& da = ViewRegistry::instance().get(a.id());
  const ViewData& db = ViewRegistry::instance().get(b.id());
  if (da.leaf != db.leaf) return da.leaf ? -1 : 1;
  if (da.leaf) return da.value.compare(db.value);
  std::size_t n = std::min(da.entries.size(), db.entries.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (da.entries[i].first != db.entries[i].first)
      return da.entries[i].first < db.entries[i].first ? -1 : 1;
    int c = view_compare(da.entries[i].second, db.entries[i].second);
    if (c != 0) return c;
  }
  if (da.entries.size() != db.entries.size())
    return da.entries.size() < db.entries.size() ? -1 : 1;
  return 0;
}

}  // namespace

View View::input(const std::string& value) {
  ViewData d;
  d.leaf = true;
  d.value = value;
  return View(ViewRegistry::instance().intern(std::move(d)));
}

View View::snapshot(std::vector<std::pair<ProcessId, View>> entries) {
  std::sort(entries.begin(), entries.end(),
            [](const auto& a, const auto& b) {
              if (a.first != b.first) return a.first < b.first;
              return a.second < b.second;
            });
  for (std::size_t i = 1; i < entries.size(); ++i) {
    if (entries[i].first == entries[i - 1].first) {
      if (entries[i].second == entries[i - 1].second) {
        entries.erase(entries.begin() + static_cast<long>(i));
        --i;
        continue;
      }
      throw DuplicateColor("snapshot with two views for one process");
    }
  }
  ViewData d;
  d.leaf = false;
  d.entries = std::move(entries);
  d.depth = 0;
  for (const auto& [p, v] : d.entries) d.depth = std::max(d.depth, v.depth());
  d.depth += 1;
  return View(ViewRegistry::instance().intern(std::move(d)));
}

bool View::is_input() const { return ViewRegistry::instance().get(id_).leaf; }

const std::string& View::value() const {
  return ViewRegistry::instance().get(id_).value;
}

const std::vector<std::pair<ProcessId, View>>& View::entries() const {
  return ViewRegistry::instance().get(id_).entries;
}

int View::depth() const { return ViewRegistry::instance().get(id_).depth; }

bool View::operator<(const View& o) const { return view_compare(*this, o) < 0; }

std::string View::to_string() const {
  if (is_input()) return value();
  std::ostringstream out;
  out << "{";
  bool first = true;
  for (const auto& [p, v] : entries()) {
    if (!first) out << ",";
    first = false;
    out << "p" << p << ":" << v.to_string();
  }
  out << "}";
  return out.str();
}

std::string Vertex::to_string() const {
  return "(p" + std::to_string(color) + "," + view.to_string() + ")";
}

Simplex::Simplex(std::vector<Vertex> vertices) : vertices_(std::move(vertices)) {
  std::sort(vertices_.begin(), vertices_.end());
  for (std::size_t i = 1; i < vertices_.size(); ++i) {
    if (vertices_[i].color == vertices_[i - 1].color) {
      if (vertices_[i] == vertices_[i - 1]) {
        vertices_.erase(vertices_.begin() + static_cast<long>(i));
        --i;
        continue;
      }
      throw DuplicateColor("simplex repeats process p" +
                           std::to_string(vertices_[i].color));
    }
  }
}

std::vector<ProcessId> Simplex::ids() const {
  std::vector<ProcessId> out;
  out.reserve(vertices_.size());
  for (const auto& v : vertices_) out.push_back(v.color);
  return out;
}

std::set<ProcessId> Simplex::id_set() const {
  std::set<ProcessId> out;
  for (const auto& v : vertices_) out.insert(v.color);
  return out;
}

bool Simplex::has_color(ProcessId p) const {
  for (const auto& v : vertices_)
    if (v.color == p) return true;
  return false;
}

std::optional<Vertex> Simplex::vertex_of(ProcessId p) const {
  for (const auto& v : vertices_)
    if (v.color == p) return v;
  return std::nullopt;
}

bool Simplex::contains(const Vertex& v) const {
  return std::binary_search(vertices_.begin(), vertices_.end(), v);
}

bool Simplex::contains_face(const Simplex& s) const {
  return std::includes(vertices_.begin(), vertices_.end(),
                       s.vertices_.begin(), s.vertices_.end());
}

Simplex Simplex::restricted_to(const std::set<ProcessId>& ids) const {
  std::vector<Vertex> vs;
  for (const auto& v : vertices_)
    if (ids.count(v.color)) vs.push_back(v);
  return Simplex(std::move(vs));
}

Simplex Simplex::without(const Simplex& s) const {
  std::vector<Vertex> vs;
  for (const auto& v : vertices_)
    if (!s.contains(v)) vs.push_back(v);
  return Simplex(std::move(vs));
}

std::vector<Simplex> Simplex::faces(int k) const {
  std::vector<Simplex> out;
  if (k < 0 || k > dim()) return out;
  std::vector<Vertex> current;
  std::function<void(std::size_t)> rec = [&](std::size_t start) {
    if (static_cast<int>(current.size()) == k + 1) {
      out.push_back(Simplex(current));
      return;
    }
    for (std::size_t i = start; i < vertices_.size(); ++i) {
      current.push_back(vertices_[i]);
      rec(i + 1);
      current.pop_back();
    }
  };
  rec(0);
  return out;
}

std::vector<Simplex> Simplex::all_faces(bool include_empty) const {
  std::vector<Simplex> out;
  if (include_empty) out.push_back(Simplex());
  for (int k = 0; k <= dim(); ++k) {
    auto f = faces(k);
    out.insert(out.end(), f.begin(), f.end());
  }
  return out;
}

std::string Simplex::to_string() const {
  std::ostringstream out;
  out << "{";
  bool first = true;
  for (const auto& v : vertices_) {
    if (!first) out << ",";
    first = false;
    out << v.to_string();
  }
  out << "}";
  return out.str();
}

Simplex join(const Simplex& s, const Simplex& t) {
  std::vector<Vertex> vs = s.vertices();
  vs.insert(vs.end(), t.vertices().begin(), t.vertices().end());
  return Simplex(std::move(vs));
}

ColoredComplex ColoredComplex::closure(const std::vector<Simplex>& generators) {
  ColoredComplex out;
  std::vector<Simplex> gens = generators;
  std::sort(gens.begin(), gens.end());
  gens.erase(std::unique(gens.begin(), gens.end()), gens.end());
  for (const auto& g : gens) {
    if (g.empty()) continue;
    bool dominated = false;
    for (const auto& h : gens) {
      if (h.dim() > g.dim() && h.contains_face(g)) {
        dominated = true;
        break;
      }
    }
    if (!dominated) out.facets_.push_back(g);
  }
  return out;
}

int ColoredComplex::dim() const {
  int d = -1;
  for (const auto& f : facets_) d = std::max(d, f.dim());
  return d;
}

bool ColoredComplex::contains(const Simplex& s) const {
  for (const auto& f : facets_)
    if (f.contains_face(s)) return true;
  return false;
}

bool ColoredComplex::contains_vertex(const Vertex& v) const {
  for (const auto& f : facets_)
    if (f.contains(v)) return true;
  return false;
}

std::vector<Simplex> ColoredComplex::simplices(int k) const {
  std::set<Simplex> out;
  for (const auto& f : facets_) {
    for (auto& s : f.faces(k)) out.insert(std::move(s));
  }
  return std::vector<Simplex>(out.begin(), out.end());
}

std::vector<Simplex> ColoredComplex::all_simplices(bool include_empty) const {
  std::vector<Simplex> out;
  if (include_empty) out.push_back(Simplex());
  for (int k = 0; k <= dim(); ++k) {
    auto s = simplices(k);
    out.insert(out.end(), s.begin(), s.end());
  }
  return out;
}

std::vector<Vertex> ColoredComplex::vertex_list() const {
  std::set<Vertex> out;
  for (const auto& f : facets_)
    for (const auto& v : f.vertices()) out.insert(v);
  return std::vector<Vertex>(out.begin(), out.end());
}

std::vector<Simplex> ColoredComplex::facets_of_dim(int k) const {
  std::vector<Simplex> out;
  for (const auto& f : facets_)
    if (f.dim() == k) out.push_back(f);
  return out;
}

std::string ColoredComplex::to_string() const {
  std::ostringstream out;
  out << "[";
  bool first = true;
  for (const auto& f : facets_) {
    if (!first) out << ",";
    first = false;
    out << f.to_string();
  }
  out << "]";
  return out.str();
}

ColoredComplex star(const Simplex& s, const ColoredComplex& k) {
  if (!k.contains(s)) throw NotInComplex("star of " + s.to_string());
  std::vector<Simplex> gens;
  for (const auto& f : k.facets())
    if (f.contains_face(s)) gens.push_back(f);
  return ColoredComplex::closure(gens);
}

ColoredComplex link(const Simplex& s, const ColoredComplex& k) {
  if (!k.contains(s)) throw NotInComplex("link of " + s.to_string());
  std::vector<Simplex> gens;
  for (const auto& f : k.facets())
    if (f.contains_face(s)) gens.push_back(f.without(s));
  return ColoredComplex::closure(gens);
}

ColoredComplex skeleton(const ColoredComplex& k, int l) {
  std::vector<Simplex> gens;
  for (const auto& f : k.facets()) {
    if (f.dim() <= l) {
      gens.push_back(f);
    } else {
      auto faces = f.faces(l);
      gens.insert(gens.end(), faces.begin(), faces.end());
    }
  }
  return ColoredComplex::closure(gens);
}

ColoredComplex complex_union(const ColoredComplex& a, const ColoredComplex& b) {
  std::vector<Simplex> gens = a.facets();
  gens.insert(gens.end(), b.facets().begin(), b.facets().end());
  return ColoredComplex::closure(gens);
}

ColoredComplex complex_intersection(const ColoredComplex& a,
                                    const ColoredComplex& b) {
  // Facet-wise: the maximal common faces of facet pairs generate the
  // intersection, since membership in each complex is subset-of-some-facet.
  std::vector<Simplex> gens;
  for (const auto& fa : a.facets()) {
    for (const auto& fb : b.facets()) {
      std::vector<Vertex> common;
      for (const auto& v : fa.vertices())
        if (fb.contains(v)) common.push_back(v);
      if (!common.empty()) gens.push_back(Simplex(std::move(common)));
    }
  }
  return ColoredComplex::closure(gens);
}

PseudomanifoldReport is_pseudomanifold(const ColoredComplex& k, int dim) {
  PseudomanifoldReport rep;
  for (const auto& f : k.facets()) {
    if (f.dim() != dim) {
      rep.ok = false;
      rep.violated = 'a';
      rep.witness = f;
      return rep;
    }
  }
  auto facets = k.facets_of_dim(dim);
  std::map<Simplex, std::vector<std::size_t>> by_ridge;
  for (std::size_t i = 0; i < facets.size(); ++i) {
    for (const auto& r : facets[i].faces(dim - 1)) by_ridge[r].push_back(i);
  }
  for (const auto& [ridge, owners] : by_ridge) {
    if (owners.size() > 2) {
      rep.ok = false;
      rep.violated = 'b';
      rep.witness = ridge;
      return rep;
    }
  }
  if (facets.size() > 1) {
    std::vector<char> seen(facets.size(), 0);
    std::deque<std::size_t> queue{0};
    seen[0] = 1;
    std::size_t reached = 1;
    while (!queue.empty()) {
      std::size_t i = queue.front();
      queue.pop_front();
      for (const auto& r : facets[i].faces(dim - 1)) {
        for (std::size_t j : by_ridge[r]) {
          if (!seen[j]) {
            seen[j] = 1;
            ++reached;
            queue.push_back(j);
          }
        }
      }
    }
    if (reached != facets.size()) {
      for (std::size_t i = 0; i < facets.size(); ++i) {
        if (!seen[i]) {
          rep.ok = false;
          rep.violated = 'c';
          rep.witness = facets[i];
          return rep;
        }
      }
    }
  }
  rep.ok = true;
  return rep;
}

FacetWalk facet_equivalence_sequence(const ColoredComplex& k, int dim,
                                     const Simplex& last) {
  auto pm = is_pseudomanifold(k, dim);
  if (!pm.ok)
    throw NotPseudomanifold(std::string("condition (") + pm.violated +
                            ") fails at " + pm.witness.to_string());
  auto facets = k.facets_of_dim(dim);
  auto it = std::find(facets.begin(), facets.end(), last);
  if (it == facets.end()) throw NotInComplex("walk target " + last.to_string());

  std::map<Simplex, std::vector<std::size_t>> by_ridge;
  for (std::size_t i = 0; i < facets.size(); ++i)
    for (const auto& r : facets[i].faces(dim - 1)) by_ridge[r].push_back(i);

  FacetWalk walk;
  std::vector<char> visited(facets.size(), 0);
  // Depth-first with doubling back: the walk both starts and ends at `last`,
  // and consecutive entries always share a (dim-1)-face.
  std::function<void(std::size_t)> visit = [&](std::size_t i) {
    visited[i] = 1;
    walk.facets.push_back(facets[i]);
    for (const auto& r : facets[i].faces(dim - 1)) {
      for (std::size_t j : by_ridge[r]) {
        if (!visited[j]) {
          walk.shared.push_back(r);
          visit(j);
          walk.shared.push_back(r);
          walk.facets.push_back(facets[i]);
        }
      }
    }
  };
  visit(static_cast<std::size_t>(it - facets.begin()));
  return walk;
}

}  // namespace chroma
