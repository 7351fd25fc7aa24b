#include "doctest.h"

#include <algorithm>

#include "chroma/tasks.hpp"

using namespace chroma;

namespace {

Vertex iv(ProcessId p, const std::string& value) {
  return Vertex(p, View::input(value));
}

Simplex simplex(std::initializer_list<Vertex> vs) {
  return Simplex(std::vector<Vertex>(vs));
}

// A two-process task where the solo output x disappears on the edge; it
// violates both monotonicity and superset inheritance.
ColoredTask forgetful_task() {
  ColoredTask t;
  t.name = "forgetful";
  t.processes = 2;
  auto edge = simplex({iv(0, "a"), iv(1, "b")});
  t.input = ColoredComplex::closure({edge});
  t.output = ColoredComplex::closure(
      {simplex({iv(0, "x")}), simplex({iv(0, "y"), iv(1, "y")})});
  t.delta.set(simplex({iv(0, "a")}),
              ColoredComplex::closure({simplex({iv(0, "x")})}));
  t.delta.set(simplex({iv(1, "b")}),
              ColoredComplex::closure({simplex({iv(1, "y")})}));
  t.delta.set(edge,
              ColoredComplex::closure({simplex({iv(0, "y"), iv(1, "y")})}));
  return t;
}

}  // namespace

TEST_CASE("value complex closure and membership") {
  auto tri = ValueComplex::closure({{"a", "b", "c"}, {"a", "b"}, {"c", "d"}});
  CHECK(tri.facets.size() == 2);  // the edge {a,b} is dominated
  CHECK(tri.dim() == 2);
  CHECK(tri.contains({"a", "c"}));
  CHECK(tri.contains({"d"}));
  CHECK_FALSE(tri.contains({"a", "d"}));
  CHECK(tri.contains({}));
  auto full = ValueComplex::closure({{"a", "b", "c"}});
  CHECK(full.all_simplices().size() == 7);
}

TEST_CASE("consensus task shape and colorization") {
  auto t = consensus_task(3, {"0", "1", "2"});
  t.validate();
  CHECK(t.inputs.facets.size() == 1);
  CHECK(t.outputs.facets.size() == 3);
  CHECK(t.delta({"0", "2"}) == ValueComplex::closure({{"0"}, {"2"}}));

  auto c = colorize(t, 3);
  CHECK(c.input.facets().size() == 27);
  CHECK(c.output.facets().size() == 3);
  auto rainbow = simplex({iv(0, "0"), iv(1, "1"), iv(2, "2")});
  CHECK(c.delta.at(rainbow).facets().size() == 3);
  for (const auto& f : c.delta.at(rainbow).facets())
    CHECK(project_values(f).size() == 1);
  CHECK(check_monotone(c).ok);
  CHECK(check_colorless_property(c).ok);
}

TEST_CASE("binary consensus inputs for three processes") {
  auto c = colorize(consensus_task(3, {"0", "1"}), 3);
  CHECK(c.input.facets().size() == 8);
  CHECK(c.input.dim() == 2);
}

TEST_CASE("set agreement shape and colorization") {
  auto t = set_agreement_task(3, 2);
  t.validate();
  CHECK(t.outputs.facets.size() == 3);  // the three 2-subsets
  CHECK(t.delta({"0", "1", "2"}).dim() == 1);

  auto c = colorize(t, 3);
  CHECK(c.input.facets().size() == 27);
  CHECK(c.output.facets().size() == 21);  // 3^3 minus the 6 rainbow facets
  auto rainbow = simplex({iv(0, "0"), iv(1, "1"), iv(2, "2")});
  CHECK(c.delta.at(rainbow).facets().size() == 21);
  CHECK(check_monotone(c).ok);
  CHECK(check_colorless_property(c).ok);
}

TEST_CASE("colorization commutes with value projection") {
  auto t = set_agreement_task(3, 2);
  auto c = colorize(t, 3);
  for (const auto& sigma : c.input.all_simplices()) {
    std::vector<ValueSet> projected;
    for (const auto& f : c.delta.at(sigma).facets())
      projected.push_back(project_values(f));
    CHECK(ValueComplex::closure(projected) == t.delta(project_values(sigma)));
  }
}

TEST_CASE("violations are witnessed") {
  auto t = forgetful_task();
  auto m = check_monotone(t);
  CHECK_FALSE(m.ok);
  CHECK(m.big == simplex({iv(0, "a"), iv(1, "b")}));
  auto p = check_colorless_property(t);
  CHECK_FALSE(p.ok);
  CHECK(p.value == "x");
}

TEST_CASE("colorless task validation rejects bad maps") {
  auto t = consensus_task(2, {"0", "1"});
  SUBCASE("missing entry") {
    t.delta_star.erase({"0"});
    CHECK_THROWS_AS(t.validate(), InvalidTask);
  }
  SUBCASE("dimension bound") {
    t.delta_star[{"0"}] = ValueComplex::closure({{"0", "1"}});
    t.delta_star[{"0", "1"}] = ValueComplex::closure({{"0", "1"}});
    t.outputs = ValueComplex::closure({{"0", "1"}});
    CHECK_THROWS_AS(t.validate(), InvalidTask);
  }
  SUBCASE("image outside outputs") {
    t.delta_star[{"0"}] = ValueComplex::closure({{"zzz"}});
    CHECK_THROWS_AS(t.validate(), InvalidTask);
  }
  SUBCASE("non-monotone") {
    t.delta_star[{"0", "1"}] = ValueComplex::closure({{"1"}});
    CHECK_THROWS_AS(t.validate(), InvalidTask);
  }
}

TEST_CASE("restricted outputs and link task for consensus") {
  auto c = colorize(consensus_task(3, {"0", "1", "2"}), 3);
  SUBCASE("solo vertex pins one label") {
    auto u = simplex({iv(0, "0")});
    auto labels = restricted_outputs(c, u);
    REQUIRE(labels.size() == 1);
    CHECK(labels[0].label_facet == simplex({iv(0, "0")}));
    CHECK(labels[0].component.facets().size() == 1);

    auto lt = link_task(c, u, 0);
    CHECK(lt.processes == 2);
    CHECK(lt.input.facets().size() == 9);
    CHECK(lt.output.facets().size() == 1);
    CHECK(lt.output.facets()[0] == simplex({iv(1, "0"), iv(2, "0")}));
    for (const auto& sigma : lt.input.all_simplices())
      CHECK_FALSE(lt.delta.at(sigma).empty());
    CHECK(check_monotone(lt).ok);
  }
  SUBCASE("rainbow facet allows all three labels") {
    auto u = simplex({iv(0, "0"), iv(1, "1"), iv(2, "2")});
    auto labels = restricted_outputs(c, u);
    CHECK(labels.size() == 3);
    for (const auto& l : labels) CHECK(l.component.facets().size() == 1);
  }
  SUBCASE("bad label index throws") {
    CHECK_THROWS_AS(link_task(c, simplex({iv(0, "0")}), 5), LabelNotAllowed);
  }
  SUBCASE("simplex outside the input complex throws") {
    CHECK_THROWS_AS(restricted_outputs(c, simplex({iv(0, "9")})),
                    NotInComplex);
  }
}

TEST_CASE("hexagone covering task") {
  auto t = hexagone_task();
  t.validate();
  CHECK(t.inputs.facets.size() == 3);  // a 3-cycle
  CHECK(t.outputs.facets.size() == 6);
  CHECK(t.delta({"u0"}) == ValueComplex::closure({{"v0"}, {"v3"}}));
  CHECK(t.delta({"u0", "u1"}) ==
        ValueComplex::closure({{"v0", "v1"}, {"v3", "v4"}}));
  // Non-trivial: every input simplex has at least two sheets.
  for (const auto& [sigma, img] : t.delta_star)
    CHECK(img.facets.size() >= 2);

  auto c = colorize(t, 2);
  CHECK(check_monotone(c).ok);
  CHECK(check_colorless_property(c).ok);
}

TEST_CASE("intersecting sheets are rejected") {
  auto path = ValueComplex::closure({{"a", "b"}, {"b", "c"}});
  std::map<Value, Value> f{{"a", "u0"}, {"b", "u1"}, {"c", "u0"}};
  auto w = find_intersecting_sheets(path, f);
  REQUIRE(w.has_value());
  CHECK(w->base == ValueSet{"u0", "u1"});
  CHECK_THROWS_AS(covering_task(path, f), NotACovering);

  std::map<Value, Value> partial{{"a", "u0"}};
  CHECK_THROWS_AS(find_intersecting_sheets(path, partial), InvalidTask);
}
