#include "doctest.h"

#include <algorithm>
#include <set>

#include "chroma/subdivision.hpp"
#include "chroma/topology.hpp"
#include "oracles.hpp"

using namespace chroma;

namespace {

Vertex iv(ProcessId p, const std::string& value) {
  return Vertex(p, View::input(value));
}

Simplex simplex(std::initializer_list<Vertex> vs) {
  return Simplex(std::vector<Vertex>(vs));
}

}  // namespace

TEST_CASE("closure basics") {
  CHECK(ColoredComplex::closure({}).empty());

  auto edge = simplex({iv(0, "a"), iv(1, "b")});
  auto k = ColoredComplex::closure({edge});
  CHECK(k.facets().size() == 1);
  CHECK(k.simplices(0).size() == 2);
  CHECK(k.all_simplices().size() == 3);
  CHECK(k.contains(simplex({iv(0, "a")})));
  CHECK(k.contains(Simplex()));
  CHECK_FALSE(k.contains(simplex({iv(0, "b")})));

  // The 2-process binary consensus input complex: 4 edges, 4 vertices.
  std::vector<Simplex> edges;
  for (int a = 0; a <= 1; ++a)
    for (int b = 0; b <= 1; ++b)
      edges.push_back(
          simplex({iv(0, std::to_string(a)), iv(1, std::to_string(b))}));
  auto cons = ColoredComplex::closure(edges);
  CHECK(cons.facets().size() == 4);
  CHECK(cons.dim() == 1);
  CHECK(cons.simplices(0).size() == 4);
}

TEST_CASE("closure rejects duplicated colors") {
  CHECK_THROWS_AS(simplex({iv(0, "a"), iv(0, "b")}), DuplicateColor);
}

TEST_CASE("closure drops dominated generators") {
  auto tri = simplex({iv(0, "a"), iv(1, "b"), iv(2, "c")});
  auto k = ColoredComplex::closure({tri, simplex({iv(0, "a"), iv(1, "b")})});
  CHECK(k.facets().size() == 1);
}

TEST_CASE("star link join skeleton") {
  auto tri = simplex({iv(0, "a"), iv(1, "b"), iv(2, "c")});
  auto k = ColoredComplex::closure({tri});
  auto v = simplex({iv(0, "a")});

  SUBCASE("link of a vertex in one simplex is the opposite face") {
    auto l = link(v, k);
    CHECK(l.facets().size() == 1);
    CHECK(l.facets()[0] == simplex({iv(1, "b"), iv(2, "c")}));
  }
  SUBCASE("star contains the whole facet") {
    auto s = star(v, k);
    CHECK(s.facets().size() == 1);
    CHECK(s.facets()[0] == tri);
  }
  SUBCASE("self join deduplicates") { CHECK(join(tri, tri) == tri); }
  SUBCASE("join with color clash throws") {
    CHECK_THROWS_AS(join(tri, simplex({iv(0, "x")})), DuplicateColor);
  }
  SUBCASE("0-skeleton") {
    auto sk = skeleton(k, 0);
    CHECK(sk.facets().size() == 3);
    CHECK(sk.dim() == 0);
  }
  SUBCASE("link of a missing simplex throws") {
    CHECK_THROWS_AS(link(simplex({iv(0, "zzz")}), k), NotInComplex);
  }
}

TEST_CASE("star link duality") {
  // Every simplex of star(S,K) is the join of a face of S and a simplex of
  // link(S,K).
  std::vector<Simplex> tris;
  tris.push_back(simplex({iv(0, "a"), iv(1, "b"), iv(2, "c")}));
  tris.push_back(simplex({iv(0, "a"), iv(1, "b"), iv(2, "d")}));
  tris.push_back(simplex({iv(0, "e"), iv(1, "b"), iv(2, "d")}));
  auto k = ColoredComplex::closure(tris);
  auto s = simplex({iv(1, "b")});
  auto st = star(s, k);
  auto lk = link(s, k);
  for (const auto& t : st.all_simplices()) {
    bool decomposed = false;
    for (const auto& face : s.all_faces(true)) {
      Simplex rest = t.without(face);
      if (join(face, rest) == t && lk.contains(rest) &&
          t.contains_face(face) && face == t.restricted_to({1})) {
        decomposed = true;
      }
    }
    CHECK(decomposed);
  }
}

TEST_CASE("pseudomanifold checks") {
  auto tri = simplex({iv(0, "a"), iv(1, "b"), iv(2, "c")});
  SUBCASE("single facet") {
    CHECK(is_pseudomanifold(ColoredComplex::closure({tri}), 2).ok);
  }
  SUBCASE("two triangles sharing only a vertex fail (c)") {
    auto other = simplex({iv(0, "a"), iv(1, "x"), iv(2, "y")});
    auto rep = is_pseudomanifold(ColoredComplex::closure({tri, other}), 2);
    CHECK_FALSE(rep.ok);
    CHECK(rep.violated == 'c');
  }
  SUBCASE("dangling edge fails (a)") {
    auto rep = is_pseudomanifold(
        ColoredComplex::closure({tri, simplex({iv(0, "a"), iv(1, "z")})}), 2);
    CHECK_FALSE(rep.ok);
    CHECK(rep.violated == 'a');
  }
  SUBCASE("three triangles around one edge fail (b)") {
    auto t2 = simplex({iv(0, "a"), iv(1, "b"), iv(2, "d")});
    auto t3 = simplex({iv(0, "a"), iv(1, "b"), iv(2, "e")});
    auto rep = is_pseudomanifold(ColoredComplex::closure({tri, t2, t3}), 2);
    CHECK_FALSE(rep.ok);
    CHECK(rep.violated == 'b');
  }
}

TEST_CASE("facet equivalence sequences") {
  SUBCASE("single facet") {
    auto tri = simplex({iv(0, "a"), iv(1, "b"), iv(2, "c")});
    auto k = ColoredComplex::closure({tri});
    auto walk = facet_equivalence_sequence(k, 2, tri);
    CHECK(walk.facets.size() == 1);
    CHECK(walk.facets[0] == tri);
  }
  SUBCASE("path of three edges ends at the requested facet") {
    auto e1 = simplex({iv(0, "a"), iv(1, "b")});
    auto e2 = simplex({iv(1, "b"), iv(2, "c")});
    auto e3 = simplex({iv(2, "c"), iv(0, "d")});
    auto k = ColoredComplex::closure({e1, e2, e3});
    auto walk = facet_equivalence_sequence(k, 1, e3);
    CHECK(walk.facets.back() == e3);
    std::set<Simplex> covered(walk.facets.begin(), walk.facets.end());
    CHECK(covered.size() == 3);
    for (std::size_t i = 0; i + 1 < walk.facets.size(); ++i) {
      CHECK(walk.facets[i].contains_face(walk.shared[i]));
      CHECK(walk.facets[i + 1].contains_face(walk.shared[i]));
      CHECK(walk.shared[i].dim() == 0);
    }
  }
  SUBCASE("non-pseudomanifold input throws") {
    auto e1 = simplex({iv(0, "a"), iv(1, "b")});
    auto e2 = simplex({iv(0, "x"), iv(1, "y")});
    CHECK_THROWS_AS(
        facet_equivalence_sequence(ColoredComplex::closure({e1, e2}), 1, e1),
        NotPseudomanifold);
  }
}

TEST_CASE("non-boundary complexes") {
  auto s2 = simplex({iv(0, "a"), iv(1, "b"), iv(2, "c")});
  SUBCASE("Ch^1(s^2) keeps only the central simplex") {
    auto sub = chromatic_subdivide(ColoredComplex::closure({s2}));
    auto nb = non_boundary_complex(sub);
    CHECK(nb.facets().size() == 1);
    CHECK(nb.facets()[0].dim() == 2);
    CHECK(carrier(nb.facets()[0], sub) == s2);
  }
  SUBCASE("Ch^2(s^1) interior edge count matches the carrier oracle") {
    auto s1 = simplex({iv(0, "a"), iv(1, "b")});
    auto sub = iterated_subdivision(ColoredComplex::closure({s1}), 2);
    CHECK(sub.complex.facets().size() == 9);
    auto nb = non_boundary_complex(sub);
    int oracle_count = 0;
    for (const auto& e : sub.complex.facets()) {
      bool interior = true;
      for (const auto& v : e.vertices())
        if (oracles::brute_force_carrier(s1, 2, simplex({v})) != s1)
          interior = false;
      if (interior) ++oracle_count;
    }
    CHECK(oracle_count == 7);
    CHECK(static_cast<int>(nb.facets_of_dim(1).size()) == oracle_count);
  }
  SUBCASE("Ch^1(s^0) is the vertex itself") {
    auto s0 = simplex({iv(0, "a")});
    auto sub = chromatic_subdivide(ColoredComplex::closure({s0}));
    auto nb = non_boundary_complex(sub);
    CHECK(nb.facets().size() == 1);
    CHECK(nb.facets()[0].dim() == 0);
  }
  SUBCASE("interior of Ch^2(s^2) is a pseudomanifold") {
    auto sub = iterated_subdivision(ColoredComplex::closure({s2}), 2);
    auto nb = non_boundary_complex(sub);
    CHECK(is_pseudomanifold(nb, 2).ok);
  }
}

TEST_CASE("subdivision of a pseudomanifold is a pseudomanifold") {
  auto t1 = simplex({iv(0, "a"), iv(1, "b"), iv(2, "c")});
  auto t2 = simplex({iv(0, "a"), iv(1, "b"), iv(2, "d")});
  auto k = ColoredComplex::closure({t1, t2});
  REQUIRE(is_pseudomanifold(k, 2).ok);
  auto sub = chromatic_subdivide(k);
  CHECK(is_pseudomanifold(sub.complex, 2).ok);
}
