#include "oracles.hpp"

#include <algorithm>
#include <deque>
#include <map>

namespace oracles {

using chroma::ColoredComplex;
using chroma::ProcessId;
using chroma::Simplex;
using chroma::Vertex;
using chroma::View;

std::uint64_t fubini(int n) {
  std::vector<std::uint64_t> a(static_cast<std::size_t>(n) + 1, 0);
  a[0] = 1;
  std::vector<std::vector<std::uint64_t>> c(a.size(),
                                            std::vector<std::uint64_t>(a.size(), 0));
  for (std::size_t i = 0; i < a.size(); ++i) {
    c[i][0] = 1;
    for (std::size_t j = 1; j <= i; ++j)
      c[i][j] = c[i - 1][j - 1] + (j <= i - 1 ? c[i - 1][j] : 0);
  }
  for (std::size_t m = 1; m < a.size(); ++m) {
    for (std::size_t k = 1; k <= m; ++k) a[m] += c[m][k] * a[m - k];
  }
  return a[static_cast<std::size_t>(n)];
}

std::vector<std::vector<std::set<ProcessId>>> ordered_set_partitions(
    const std::set<ProcessId>& ids) {
  std::vector<ProcessId> pool(ids.begin(), ids.end());
  int n = static_cast<int>(pool.size());
  std::vector<std::vector<std::set<ProcessId>>> out;
  if (n == 0) {
    out.emplace_back();
    return out;
  }
  for (int m = 1; m <= n; ++m) {
    std::vector<int> f(static_cast<std::size_t>(n), 0);
    while (true) {
      std::vector<std::set<ProcessId>> blocks(static_cast<std::size_t>(m));
      for (int i = 0; i < n; ++i)
        blocks[static_cast<std::size_t>(f[static_cast<std::size_t>(i)])].insert(
            pool[static_cast<std::size_t>(i)]);
      bool surjective = true;
      for (const auto& b : blocks)
        if (b.empty()) surjective = false;
      if (surjective) out.push_back(blocks);
      int i = n - 1;
      while (i >= 0 && f[static_cast<std::size_t>(i)] == m - 1) {
        f[static_cast<std::size_t>(i)] = 0;
        --i;
      }
      if (i < 0) break;
      ++f[static_cast<std::size_t>(i)];
    }
  }
  return out;
}

std::vector<Simplex> brute_force_ch_facets(const Simplex& base) {
  int n = base.dim();
  // Candidate faces per color: all faces of the base containing that color.
  std::vector<std::vector<Simplex>> options;
  for (ProcessId p : base.ids()) {
    std::vector<Simplex> faces;
    for (const auto& f : base.all_faces())
      if (f.has_color(p)) faces.push_back(f);
    options.push_back(faces);
  }
  std::vector<Simplex> out;
  std::vector<std::size_t> pick(options.size(), 0);
  auto colors = base.ids();
  while (true) {
    std::vector<Simplex> chosen;
    for (std::size_t i = 0; i < pick.size(); ++i)
      chosen.push_back(options[i][pick[i]]);
    // Condition 1: the seen faces admit a containment ordering.
    std::vector<Simplex> sorted = chosen;
    std::sort(sorted.begin(), sorted.end(), [](const Simplex& a, const Simplex& b) {
      return a.size() < b.size();
    });
    bool chain = true;
    for (std::size_t i = 1; i < sorted.size(); ++i)
      if (!sorted[i].contains_face(sorted[i - 1])) chain = false;
    // Condition 2: if color i appears in the face seen by color j, then the
    // face seen by i is contained in the face seen by j.
    bool coherent = true;
    for (std::size_t i = 0; i < chosen.size() && coherent; ++i) {
      for (std::size_t j = 0; j < chosen.size() && coherent; ++j) {
        if (chosen[j].has_color(colors[i]) && !chosen[j].contains_face(chosen[i]))
          coherent = false;
      }
    }
    if (chain && coherent) {
      std::vector<Vertex> vs;
      for (std::size_t i = 0; i < chosen.size(); ++i) {
        std::vector<std::pair<ProcessId, View>> entries;
        for (const auto& v : chosen[i].vertices())
          entries.emplace_back(v.color, v.view);
        vs.emplace_back(colors[i], View::snapshot(entries));
      }
      out.push_back(Simplex(vs));
    }
    std::size_t i = 0;
    while (i < pick.size() && pick[i] + 1 == options[i].size()) {
      pick[i] = 0;
      ++i;
    }
    if (i == pick.size()) break;
    ++pick[i];
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  (void)n;
  return out;
}

Simplex brute_force_carrier(const Simplex& base_facet, int depth,
                            const Simplex& s) {
  for (int d = 0; d <= base_facet.dim(); ++d) {
    for (const auto& face : base_facet.faces(d)) {
      auto sub =
          chroma::iterated_subdivision(ColoredComplex::closure({face}), depth);
      if (sub.complex.contains(s)) return face;
    }
  }
  throw chroma::NotInComplex("no face carries " + s.to_string());
}

int brute_force_active_distance(const ColoredComplex& k,
                                const std::set<Vertex>& a,
                                const std::set<Vertex>& b,
                                const std::set<Vertex>& terminated) {
  auto vertices = k.vertex_list();
  std::map<Vertex, std::size_t> index;
  for (std::size_t i = 0; i < vertices.size(); ++i) index[vertices[i]] = i;
  std::vector<std::vector<std::pair<std::size_t, int>>> adj(vertices.size());
  for (const auto& e : k.simplices(1)) {
    const Vertex& u = e.vertices()[0];
    const Vertex& v = e.vertices()[1];
    int w = (!terminated.count(u) && !terminated.count(v)) ? 1 : 0;
    adj[index[u]].emplace_back(index[v], w);
    adj[index[v]].emplace_back(index[u], w);
  }
  const int inf = 1 << 29;
  std::vector<int> dist(vertices.size(), inf);
  std::deque<std::size_t> queue;
  for (const auto& v : a) {
    auto it = index.find(v);
    if (it != index.end()) {
      dist[it->second] = 0;
      queue.push_back(it->second);
    }
  }
  while (!queue.empty()) {  // 0-1 BFS
    std::size_t u = queue.front();
    queue.pop_front();
    for (auto [v, w] : adj[u]) {
      if (dist[u] + w < dist[v]) {
        dist[v] = dist[u] + w;
        if (w == 0)
          queue.push_front(v);
        else
          queue.push_back(v);
      }
    }
  }
  int best = inf;
  for (const auto& v : b) {
    auto it = index.find(v);
    if (it != index.end()) best = std::min(best, dist[it->second]);
  }
  return best == inf ? -1 : best;
}

}  // namespace oracles
