#include "doctest.h"

#include <algorithm>
#include <random>
#include <set>

#include "chroma/subdivision.hpp"
#include "chroma/topology.hpp"
#include "oracles.hpp"

using namespace chroma;

namespace {

Vertex iv(ProcessId p, const std::string& value) {
  return Vertex(p, View::input(value));
}

Simplex standard_simplex(int n) {
  std::vector<Vertex> vs;
  for (int i = 0; i <= n; ++i) vs.push_back(iv(i, "v" + std::to_string(i)));
  return Simplex(vs);
}

}  // namespace

TEST_CASE("ordered partition enumeration matches the oracle") {
  for (int n = 0; n <= 4; ++n) {
    std::set<ProcessId> ids;
    for (int i = 0; i < n; ++i) ids.insert(i);
    auto mine = ordered_partitions(ids);
    auto oracle = oracles::ordered_set_partitions(ids);
    CHECK(mine.size() == oracle.size());
    CHECK(mine.size() == oracles::fubini(n));
    std::set<std::vector<std::set<ProcessId>>> a, b;
    for (const auto& s : mine) a.insert(s.steps);
    for (const auto& s : oracle) b.insert(s);
    CHECK(a == b);
  }
}

TEST_CASE("facet counts of Ch(s^n)") {
  for (int n = 0; n <= 3; ++n) {
    auto sub = chromatic_subdivide(ColoredComplex::closure({standard_simplex(n)}));
    CHECK(sub.complex.facets().size() == oracles::fubini(n + 1));
    for (const auto& f : sub.complex.facets()) CHECK(f.dim() == n);
  }
}

TEST_CASE("Ch matches the condition-based construction") {
  for (int n = 1; n <= 3; ++n) {
    auto base = standard_simplex(n);
    auto sub = chromatic_subdivide(ColoredComplex::closure({base}));
    auto brute = oracles::brute_force_ch_facets(base);
    auto mine = sub.complex.facets();
    std::sort(mine.begin(), mine.end());
    CHECK(mine == brute);
  }
}

TEST_CASE("Ch of a single vertex is the vertex") {
  auto s0 = standard_simplex(0);
  auto sub = chromatic_subdivide(ColoredComplex::closure({s0}));
  CHECK(sub.complex.facets().size() == 1);
  auto v = sub.complex.facets()[0].vertices()[0];
  CHECK(v.color == 0);
  // Its view is the singleton snapshot of its own input.
  CHECK(v.view.entries().size() == 1);
}

TEST_CASE("schedule round trips over Ch(s^2)") {
  auto base = standard_simplex(2);
  std::set<ProcessId> ids{0, 1, 2};
  auto parts = ordered_partitions(ids);
  CHECK(parts.size() == 13);
  std::set<Simplex> facets;
  for (const auto& p : parts) {
    auto f = facet_from_schedule(base, p);
    CHECK(schedule_from_facet(base, f) == p);
    facets.insert(f);
  }
  CHECK(facets.size() == 13);
}

TEST_CASE("facet_from_schedule small cases") {
  auto base = Simplex({iv(0, "a"), iv(1, "b")});
  SUBCASE("concurrent writeread") {
    auto f = facet_from_schedule(base, Schedule({{0, 1}}));
    auto v0 = *f.vertex_of(0);
    auto v1 = *f.vertex_of(1);
    CHECK(v0.view == v1.view);
    CHECK(v0.view.entries().size() == 2);
  }
  SUBCASE("sequential case") {
    auto f = facet_from_schedule(base, Schedule({{0}, {1}}));
    CHECK(f.vertex_of(0)->view.entries().size() == 1);
    CHECK(f.vertex_of(1)->view.entries().size() == 2);
  }
  SUBCASE("not a partition") {
    CHECK_THROWS_AS(facet_from_schedule(base, Schedule({std::set<ProcessId>{0}})),
                    NotAPartition);
    CHECK_THROWS_AS(facet_from_schedule(base, Schedule({{0}, {0, 1}})),
                    NotAPartition);
  }
}

TEST_CASE("coloring law for subdivision simplices") {
  auto base = standard_simplex(2);
  auto sub = iterated_subdivision(ColoredComplex::closure({base}), 2);
  for (const auto& s : sub.complex.all_simplices()) {
    auto car = carrier(s, sub);
    auto sc = s.ids();
    auto cc = car.ids();
    CHECK(std::includes(cc.begin(), cc.end(), sc.begin(), sc.end()));
  }
}

TEST_CASE("carrier equals union of vertex carriers and brute force") {
  auto base = standard_simplex(2);
  auto sub = iterated_subdivision(ColoredComplex::closure({base}), 2);
  auto edges = sub.complex.simplices(1);
  std::mt19937 rng(11);
  std::shuffle(edges.begin(), edges.end(), rng);
  for (std::size_t i = 0; i < 12 && i < edges.size(); ++i) {
    auto mine = carrier(edges[i], sub);
    CHECK(mine == oracles::brute_force_carrier(base, 2, edges[i]));
    Simplex unions;
    for (const auto& v : edges[i].vertices())
      unions = join(unions, carrier(Simplex({v}), sub));
    CHECK(mine == unions);
  }
}

TEST_CASE("vertex determinism across facets") {
  // Two facets share a vertex of color p iff p reads the same processes in
  // every round of their schedules.
  auto base = standard_simplex(2);
  std::set<ProcessId> ids{0, 1, 2};
  auto parts = ordered_partitions(ids);
  for (const auto& a : parts) {
    for (const auto& b : parts) {
      auto fa = facet_from_schedule(base, a);
      auto fb = facet_from_schedule(base, b);
      for (ProcessId p : ids) {
        std::set<ProcessId> seen_a, seen_b;
        for (const auto& s : a.steps) {
          seen_a.insert(s.begin(), s.end());
          if (s.count(p)) break;
        }
        for (const auto& s : b.steps) {
          seen_b.insert(s.begin(), s.end());
          if (s.count(p)) break;
        }
        bool same_vertex = *fa.vertex_of(p) == *fb.vertex_of(p);
        CHECK(same_vertex == (seen_a == seen_b));
      }
    }
  }
}

TEST_CASE("nonuniform subdivision") {
  auto base = standard_simplex(2);
  auto k = identity_subdivision(ColoredComplex::closure({base}));

  SUBCASE("bottom everywhere degenerates to Ch") {
    DecisionMap bot;
    for (const auto& v : base.vertices()) bot.set(v, Decision::bottom());
    auto chi = nonuniform_subdivide(k, bot);
    auto ch = chromatic_subdivide(k);
    CHECK(chi.complex == ch.complex);
  }
  SUBCASE("one terminated vertex gives 3 joined facets") {
    DecisionMap d;
    d.set(base.vertices()[0], Decision::output("x"));
    d.set(base.vertices()[1], Decision::bottom());
    d.set(base.vertices()[2], Decision::bottom());
    auto chi = nonuniform_subdivide(k, d);
    CHECK(chi.complex.facets().size() == 3);
    for (const auto& f : chi.complex.facets()) {
      CHECK(f.dim() == 2);
      CHECK(f.contains(base.vertices()[0]));
    }
  }
  SUBCASE("all terminated is the identity") {
    DecisionMap d;
    for (const auto& v : base.vertices()) d.set(v, Decision::output("x"));
    auto chi = nonuniform_subdivide(k, d);
    CHECK(chi.complex == k.complex);
  }
  SUBCASE("undefined vertex throws") {
    DecisionMap d;
    d.set(base.vertices()[0], Decision::bottom());
    CHECK_THROWS_AS(nonuniform_subdivide(k, d), UndefinedVertex);
  }
}

TEST_CASE("decision maps are write once") {
  DecisionMap d;
  Vertex v = iv(0, "a");
  d.set(v, Decision::bottom());
  d.set(v, Decision::bottom());  // idempotent rewrite is fine
  CHECK_THROWS(d.set(v, Decision::output("1")));
  Vertex w = iv(1, "b");
  d.set(w, Decision::output("1"));
  CHECK_THROWS(d.set(w, Decision::output("2")));
}

TEST_CASE("apply_schedule matches subdivision facets") {
  auto base = standard_simplex(2);
  auto c0 = Configuration::initial(base);

  SUBCASE("all concurrent") {
    auto c = apply_schedule(c0, {0, 1, 2});
    for (ProcessId p : {0, 1, 2})
      CHECK(c.state_vertex(p).view.entries().size() == 3);
  }
  SUBCASE("solo second step sees only own state") {
    auto c = apply_schedule(apply_schedule(c0, {0, 1, 2}), {0});
    auto v = c.state_vertex(0);
    CHECK(v.view.entries().size() == 1);
    CHECK(v.view.depth() == 2);
  }
  SUBCASE("two-round replay equals facet composition") {
    std::vector<Schedule> rounds = {Schedule({{0}, {1, 2}}),
                                    Schedule({{1}, {0, 2}})};
    Configuration c = c0;
    for (const auto& r : rounds)
      for (const auto& step : r.steps) c = apply_schedule(c, step);
    CHECK(c.round_simplex() == facet_from_rounds(base, rounds));
    CHECK(rounds_from_facet(base, c.round_simplex()) ==
          std::vector<Schedule>(rounds));
  }
  SUBCASE("inactive and mixed-object errors") {
    CHECK_THROWS_AS(apply_schedule(c0, {7}), InactiveProcess);
    auto c = apply_schedule(c0, {0});
    CHECK_THROWS_AS(apply_schedule(c, {0, 1}), MixedObjects);
  }
}

TEST_CASE("limit of an ordered partition") {
  Schedule s({{0, 2}, {1}, {3}});
  auto lim = limit_schedule(s, {1, 2, 3});
  CHECK(lim == Schedule({{2}, {1}, {3}}));
  CHECK(limit_schedule(s, {}).empty());
}

TEST_CASE("ancestor extraction") {
  auto base = standard_simplex(2);
  auto f = facet_from_rounds(
      base, {Schedule({{0}, {1, 2}}), Schedule({{2}, {0, 1}}),
             Schedule({{0, 1, 2}})});
  auto v = *f.vertex_of(1);
  CHECK(v.view.depth() == 3);
  auto a2 = ancestor_at_depth(v, 2);
  auto f2 = facet_from_rounds(base,
                              {Schedule({{0}, {1, 2}}), Schedule({{2}, {0, 1}})});
  CHECK(a2 == *f2.vertex_of(1));
  CHECK(ancestor_at_depth(v, 0) == *base.vertex_of(1));
}
