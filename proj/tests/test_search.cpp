#include "doctest.h"

#include <set>

#include "chroma/search.hpp"

using namespace chroma;

namespace {

Vertex iv(ProcessId p, const std::string& value) {
  return Vertex(p, View::input(value));
}

Simplex simplex(std::initializer_list<Vertex> vs) {
  return Simplex(std::vector<Vertex>(vs));
}

ColoredTask consensus3() {
  return colorize(consensus_task(3, {"0", "1", "2"}), 3);
}

ColoredTask set_agreement32() { return colorize(set_agreement_task(3, 2), 3); }

}  // namespace

TEST_CASE("a vertex label finds a constant consensus protocol") {
  auto t = consensus3();
  auto r = search_partial_protocol(t, simplex({iv(0, "0")}));
  REQUIRE(r.status == SearchStatus::FOUND);
  CHECK(r.depth == 0);
  REQUIRE(r.protocol.has_value());
  CHECK(solves(*r.protocol, t).ok);
  for (const auto& [v, d] : r.protocol->delta.assignments())
    if (d.is_output()) CHECK(d.value == "0");
}

TEST_CASE("a full-facet label decides at round one") {
  auto t = consensus3();
  auto u = simplex({iv(0, "0"), iv(1, "1"), iv(2, "2")});
  auto r = search_partial_protocol(t, u);
  REQUIRE(r.status == SearchStatus::FOUND);
  REQUIRE(r.protocol.has_value());
  CHECK(r.protocol->r_m == 2);
  CHECK(solves(*r.protocol, t).ok);
  // Everyone adopts one value of the chosen restricted output.
  std::set<std::string> values;
  for (const auto& [v, d] : r.protocol->delta.assignments())
    if (d.is_output()) values.insert(d.value);
  CHECK(values.size() == 1);
}

TEST_CASE("set agreement vertex labels all succeed at depth zero") {
  auto t = set_agreement32();
  for (const auto& v : t.input.vertex_list()) {
    CAPTURE(v.to_string());
    auto r = search_partial_protocol(t, Simplex({v}));
    REQUIRE(r.status == SearchStatus::FOUND);
    CHECK(r.depth == 0);
    CHECK(solves(*r.protocol, t).ok);
  }
}

TEST_CASE("a label with no allowed outputs is infeasible") {
  ColoredTask t;
  t.processes = 2;
  auto edge = simplex({iv(0, "a"), iv(1, "b")});
  auto out = simplex({iv(0, "x"), iv(1, "x")});
  t.input = ColoredComplex::closure({edge});
  t.output = ColoredComplex::closure({out});
  for (const auto& s : edge.all_faces())
    t.delta.set(s, ColoredComplex::closure({out}));
  t.delta.set(simplex({iv(0, "a")}), ColoredComplex());
  auto r = search_partial_protocol(t, simplex({iv(0, "a")}));
  CHECK(r.status == SearchStatus::INFEASIBLE);
  CHECK(!r.witness.empty());
}

TEST_CASE("budget exhaustion is reported as unknown") {
  auto t = consensus3();
  SearchBudget tiny{3, 0};
  auto r = search_partial_protocol(t, simplex({iv(0, "0")}), tiny);
  CHECK(r.status == SearchStatus::UNKNOWN);
  CHECK(r.witness == "node budget exhausted");
}

TEST_CASE("sequence labels restrict the head protocol") {
  auto t = consensus3();
  Label label =
      make_label(t.input, {simplex({iv(0, "0")}), simplex({iv(1, "1")})});
  auto r = search_partial_protocol(t, label);
  REQUIRE(r.status == SearchStatus::FOUND);
  CHECK(r.protocol->label == label);
  CHECK(solves(*r.protocol, t).ok);
}

TEST_CASE("restrictions of one protocol glue back to its round-1 complex") {
  auto t = set_agreement32();
  auto u = simplex({iv(0, "0")});
  auto r = search_partial_protocol(t, u);
  REQUIRE(r.status == SearchStatus::FOUND);
  const auto& p = *r.protocol;

  // Every choice of the next step yields a smaller compatible protocol;
  // together they cover the whole round-1 complex of p.
  std::set<Simplex> seconds;
  for (const auto& f : t.input.facets()) {
    if (!f.contains_face(u)) continue;
    Simplex rest = f.without(f.restricted_to(u.id_set()));
    for (const auto& u2 : rest.all_faces()) seconds.insert(u2);
  }
  REQUIRE(!seconds.empty());
  std::set<Simplex> covered;
  std::vector<PartialProtocol> parts;
  for (const auto& u2 : seconds) {
    Label l = make_label(t.input, {u, u2});
    parts.push_back(restrict_protocol(p, l));
    CHECK(solves(parts.back(), t).ok);
    for (const auto& f : parts.back().f(1).complex.facets()) covered.insert(f);
  }
  std::set<Simplex> whole(p.f(1).complex.facets().begin(),
                          p.f(1).complex.facets().end());
  CHECK(covered == whole);
  for (std::size_t i = 1; i < parts.size(); ++i)
    CHECK(compatible(parts[0], parts[i]).ok);
}

TEST_CASE("consensus admits no compatible family") {
  auto t = consensus3();
  auto r = search_compatible_family(t);
  CHECK(r.labels.size() == 27 * 13);
  REQUIRE(r.status == SearchStatus::INFEASIBLE);
  REQUIRE(r.clash.size() >= 2);
  // Every clashing label can commit to some value, but no value suits all.
  std::set<std::string> common = r.clash[0].second;
  for (const auto& [label, forced] : r.clash) {
    CHECK(!forced.empty());
    std::set<std::string> next;
    for (const auto& x : forced)
      if (common.count(x)) next.insert(x);
    common = next;
  }
  CHECK(common.empty());
  // Two directly overlapping labels forced to disjoint value sets.
  CHECK(!r.clash_shared.empty());
}

TEST_CASE("set agreement admits a compatible family") {
  auto t = set_agreement32();
  auto r = search_compatible_family(t);
  REQUIRE(r.status == SearchStatus::FOUND);
  REQUIRE(r.family.size() == r.labels.size());
  // The search audits everything; re-audit a sample here.
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(solves(r.family[i], t).ok);
    CHECK(r.family[i].label == r.labels[i]);
  }
  for (std::size_t i = 1; i < 40; ++i)
    CHECK(compatible(r.family[0], r.family[i]).ok);
}

TEST_CASE("every nonempty input simplex is a single-simplex label") {
  auto t = set_agreement32();
  auto ls = simplex_labels(t.input);
  CHECK(ls.size() == 63);  // 9 vertices + 27 edges + 27 facets
  for (const auto& l : ls) CHECK(l.sequence.size() == 1);
}

TEST_CASE("set agreement has a compatible family over simplex labels") {
  auto t = set_agreement32();
  SearchBudget b;
  b.min_depth = 3;  // round 2 has no family; skipping it keeps the test fast
  auto r = search_compatible_family(t, simplex_labels(t.input), b);
  REQUIRE(r.status == SearchStatus::FOUND);
  REQUIRE(r.family.size() == 63);
  CHECK(r.family[0].r_m == 3);
  for (std::size_t i = 0; i < r.family.size(); i += 13) {
    CHECK(solves(r.family[i], t).ok);
    CHECK(r.family[i].label == r.labels[i]);
  }
  for (std::size_t i = 1; i < 20; ++i)
    CHECK(compatible(r.family[0], r.family[i]).ok);
}

TEST_CASE("consensus has no compatible family over simplex labels") {
  auto t = consensus3();
  auto r = search_compatible_family(t, simplex_labels(t.input));
  REQUIRE(r.status == SearchStatus::INFEASIBLE);
  CHECK(!r.clash.empty());
  CHECK(!r.clash_shared.empty());
}

TEST_CASE("a task with free outputs has a family") {
  ColoredTask t;
  t.processes = 3;
  auto facet = simplex({iv(0, "a"), iv(1, "b"), iv(2, "c")});
  auto out = simplex({iv(0, "x"), iv(1, "y"), iv(2, "z")});
  t.input = ColoredComplex::closure({facet});
  t.output = ColoredComplex::closure({out});
  for (const auto& s : facet.all_faces())
    t.delta.set(s, ColoredComplex::closure({out}));
  auto r = search_compatible_family(t);
  CHECK(r.labels.size() == 13);
  CHECK(r.status == SearchStatus::FOUND);
}

TEST_CASE("one dimensional decisions") {
  SUBCASE("two dimensional inputs are rejected") {
    CHECK_THROWS_AS(decide_1dim(consensus3()), NotOneDimensional);
  }
  SUBCASE("the double cover of the triangle is impossible") {
    auto t = colorize(hexagone_task(), 2);
    auto d = decide_1dim(t);
    CHECK(!d.solvable);
    CHECK(!d.cycle.empty());
    CHECK(d.detail.find("components") != std::string::npos);
  }
  SUBCASE("the trivial covering is solvable in place") {
    ValueComplex cycle = ValueComplex::closure(
        {{"a0", "a1"}, {"a1", "a2"}, {"a2", "a0"}});
    std::map<Value, Value> id = {
        {"a0", "a0"}, {"a1", "a1"}, {"a2", "a2"}};
    auto t = colorize(covering_task(cycle, id), 2);
    auto d = decide_1dim(t);
    REQUIRE(d.solvable);
    CHECK(d.depth == 0);
  }
  SUBCASE("walking a long output path needs two subdivisions") {
    ColorlessTask stretch;
    stretch.name = "stretch";
    stretch.inputs = ValueComplex::closure({{"L", "R"}});
    stretch.outputs = ValueComplex::closure(
        {{"m0", "m1"}, {"m1", "m2"}, {"m2", "m3"}, {"m3", "m4"}});
    stretch.delta_star[{"L"}] = ValueComplex::closure({{"m0"}});
    stretch.delta_star[{"R"}] = ValueComplex::closure({{"m4"}});
    stretch.delta_star[{"L", "R"}] = stretch.outputs;
    stretch.validate();
    auto t = colorize(stretch, 2);
    auto d = decide_1dim(t);
    REQUIRE(d.solvable);
    CHECK(d.depth == 2);
    auto sub = iterated_subdivision(t.input, d.depth);
    CHECK(!simplicial_map_violation(sub, t.delta, d.decision).has_value());
  }
}
