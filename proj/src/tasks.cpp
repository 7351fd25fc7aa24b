#include "chroma/tasks.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

namespace chroma {

namespace {

bool subset(const ValueSet& a, const ValueSet& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

std::string set_to_string(const ValueSet& s) {
  std::ostringstream os;
  os << '{';
  bool first = true;
  for (const auto& v : s) {
    if (!first) os << ',';
    os << v;
    first = false;
  }
  os << '}';
  return os.str();
}

// All functions ids -> values, as colored simplices with input views.
std::vector<Simplex> assignments(const std::vector<ProcessId>& ids,
                                 const std::vector<Value>& values) {
  std::vector<Simplex> out;
  std::vector<Vertex> cur;
  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (i == ids.size()) {
      out.emplace_back(cur);
      return;
    }
    for (const auto& v : values) {
      cur.emplace_back(ids[i], View::input(v));
      rec(i + 1);
      cur.pop_back();
    }
  };
  rec(0);
  return out;
}

// The subcomplex of k spanned by colors in `ids` (empty faces dropped).
ColoredComplex restrict_complex(const ColoredComplex& k,
                                const std::set<ProcessId>& ids) {
  std::vector<Simplex> gens;
  for (const auto& f : k.facets()) {
    Simplex r = f.restricted_to(ids);
    if (!r.empty()) gens.push_back(r);
  }
  return ColoredComplex::closure(gens);
}

}  // namespace

ValueComplex ValueComplex::closure(std::vector<ValueSet> generators) {
  std::sort(generators.begin(), generators.end());
  generators.erase(std::unique(generators.begin(), generators.end()),
                   generators.end());
  ValueComplex k;
  for (const auto& g : generators) {
    if (g.empty()) continue;
    bool dominated = false;
    for (const auto& h : generators)
      if (h != g && subset(g, h)) dominated = true;
    if (!dominated) k.facets.push_back(g);
  }
  return k;
}

int ValueComplex::dim() const {
  int d = -1;
  for (const auto& f : facets) d = std::max(d, static_cast<int>(f.size()) - 1);
  return d;
}

bool ValueComplex::contains(const ValueSet& s) const {
  if (s.empty()) return true;
  for (const auto& f : facets)
    if (subset(s, f)) return true;
  return false;
}

std::vector<ValueSet> ValueComplex::all_simplices() const {
  std::set<ValueSet> seen;
  for (const auto& f : facets) {
    std::vector<Value> vs(f.begin(), f.end());
    for (std::uint32_t mask = 1; mask < (1u << vs.size()); ++mask) {
      ValueSet s;
      for (std::size_t i = 0; i < vs.size(); ++i)
        if (mask & (1u << i)) s.insert(vs[i]);
      seen.insert(s);
    }
  }
  std::vector<ValueSet> out(seen.begin(), seen.end());
  std::stable_sort(out.begin(), out.end(),
                   [](const ValueSet& a, const ValueSet& b) {
                     if (a.size() != b.size()) return a.size() < b.size();
                     return a < b;
                   });
  return out;
}

std::set<Value> ValueComplex::values() const {
  std::set<Value> out;
  for (const auto& f : facets) out.insert(f.begin(), f.end());
  return out;
}

const ValueComplex& ColorlessTask::delta(const ValueSet& sigma) const {
  auto it = delta_star.find(sigma);
  if (it == delta_star.end())
    throw InvalidTask("delta* undefined on " + set_to_string(sigma));
  return it->second;
}

void ColorlessTask::validate() const {
  for (const auto& s : inputs.all_simplices()) {
    const ValueComplex& img = delta(s);
    if (img.empty())
      throw InvalidTask("delta* empty on " + set_to_string(s));
    if (img.dim() > static_cast<int>(s.size()) - 1)
      throw InvalidTask("delta* exceeds dimension of " + set_to_string(s));
    for (const auto& f : img.facets)
      if (!outputs.contains(f))
        throw InvalidTask("delta* image outside outputs on " +
                          set_to_string(s));
    for (const auto& t : inputs.all_simplices()) {
      if (!subset(s, t)) continue;
      for (const auto& f : img.facets)
        if (!delta(t).contains(f))
          throw InvalidTask("delta* not monotone between " + set_to_string(s) +
                            " and " + set_to_string(t));
    }
  }
}

void CarrierMap::set(const Simplex& s, ColoredComplex image) {
  map_[s] = std::move(image);
}

const ColoredComplex& CarrierMap::at(const Simplex& s) const {
  auto it = map_.find(s);
  if (it == map_.end())
    throw InvalidTask("carrier map undefined on " + s.to_string());
  return it->second;
}

ValueSet project_values(const Simplex& s) {
  ValueSet out;
  for (const auto& v : s.vertices())
    out.insert(v.view.is_input() ? v.view.value() : v.view.to_string());
  return out;
}

ColoredTask colorize(const ColorlessTask& t, int n_plus_1) {
  if (n_plus_1 < 1) throw InvalidTask("need at least one process");
  std::vector<ProcessId> all_ids(n_plus_1);
  for (int i = 0; i < n_plus_1; ++i) all_ids[i] = i;

  auto pseudosphere = [&](const ValueComplex& k) {
    std::vector<Simplex> gens;
    for (const auto& f : k.facets) {
      std::vector<Value> vals(f.begin(), f.end());
      for (auto& s : assignments(all_ids, vals)) gens.push_back(std::move(s));
    }
    return ColoredComplex::closure(gens);
  };

  ColoredTask out;
  out.name = t.name;
  out.processes = n_plus_1;
  out.input = pseudosphere(t.inputs);
  out.output = pseudosphere(t.outputs);
  for (const auto& sigma : out.input.all_simplices()) {
    const ValueComplex& img = t.delta(project_values(sigma));
    std::set<Value> img_values = img.values();
    std::vector<Value> vals(img_values.begin(), img_values.end());
    std::vector<Simplex> gens;
    for (auto& s : assignments(sigma.ids(), vals))
      if (img.contains(project_values(s))) gens.push_back(std::move(s));
    out.delta.set(sigma, ColoredComplex::closure(gens));
  }
  return out;
}

PropertyWitness check_colorless_property(const ColoredTask& t) {
  // Allowed outputs per color on each input simplex.
  auto allowed = [&](const Simplex& sigma, ProcessId c) {
    ValueSet vals;
    for (const auto& rho : t.delta.at(sigma).facets()) {
      auto v = rho.vertex_of(c);
      if (v && v->view.is_input()) vals.insert(v->view.value());
    }
    return vals;
  };
  for (const auto& big : t.input.all_simplices()) {
    for (const auto& small : big.all_faces()) {
      for (ProcessId c : small.ids()) {
        for (const auto& v : allowed(small, c)) {
          for (ProcessId c2 : big.ids()) {
            if (allowed(big, c2).count(v)) continue;
            PropertyWitness w;
            w.ok = false;
            w.small = small;
            w.big = big;
            w.color = c2;
            w.value = v;
            return w;
          }
        }
      }
    }
  }
  return PropertyWitness{};
}

MonotonicityWitness check_monotone(const ColoredTask& t) {
  for (const auto& big : t.input.all_simplices()) {
    const ColoredComplex& big_img = t.delta.at(big);
    for (const auto& small : big.all_faces()) {
      if (small == big) continue;
      for (const auto& f : t.delta.at(small).facets()) {
        if (big_img.contains(f)) continue;
        MonotonicityWitness w;
        w.ok = false;
        w.small = small;
        w.big = big;
        return w;
      }
    }
  }
  return MonotonicityWitness{};
}

std::vector<RestrictedOutput> restricted_outputs(const ColoredTask& t,
                                                 const Simplex& u) {
  if (!t.input.contains(u) || u.empty())
    throw NotInComplex("not a nonempty input simplex: " + u.to_string());
  const ColoredComplex& img = t.delta.at(u);
  ColoredComplex restricted = restrict_complex(t.output, u.id_set());
  std::vector<RestrictedOutput> out;
  for (const auto& label : restricted.facets()) {
    if (!img.contains(label)) continue;
    std::vector<Simplex> gens;
    for (const auto& f : t.output.facets_of_dim(t.processes - 1))
      if (f.contains_face(label)) gens.push_back(f);
    if (gens.empty()) continue;
    out.push_back(RestrictedOutput{label, ColoredComplex::closure(gens)});
  }
  return out;
}

ColoredTask link_task(const ColoredTask& t, const Simplex& u, std::size_t i) {
  auto labels = restricted_outputs(t, u);
  if (i >= labels.size())
    throw LabelNotAllowed("label index " + std::to_string(i) +
                          " out of range");
  std::set<ProcessId> rest_ids;
  for (const auto& f : t.input.facets())
    for (ProcessId p : f.ids())
      if (!u.has_color(p)) rest_ids.insert(p);

  ColoredTask out;
  out.name = t.name + "/link";
  out.processes = t.processes - static_cast<int>(u.size());
  out.input = link(u, t.input);
  out.output = restrict_complex(labels[i].component, rest_ids);
  for (const auto& sigma : out.input.all_simplices()) {
    ColoredComplex img = restrict_complex(t.delta.at(join(sigma, u)), rest_ids);
    out.delta.set(sigma, complex_intersection(img, out.output));
  }
  return out;
}

ColorlessTask consensus_task(int n_plus_1, const std::vector<Value>& values) {
  if (n_plus_1 < 1 || values.empty())
    throw InvalidTask("consensus needs processes and values");
  ColorlessTask t;
  t.name = "consensus_" + std::to_string(n_plus_1);
  ValueSet all(values.begin(), values.end());
  t.inputs = ValueComplex::closure({all});
  std::vector<ValueSet> singles;
  for (const auto& v : all) singles.push_back({v});
  t.outputs = ValueComplex::closure(singles);
  for (const auto& s : t.inputs.all_simplices()) {
    std::vector<ValueSet> out;
    for (const auto& v : s) out.push_back({v});
    t.delta_star[s] = ValueComplex::closure(out);
  }
  return t;
}

ColorlessTask set_agreement_task(int n_plus_1, int k) {
  if (n_plus_1 < 1 || k < 1) throw InvalidTask("bad set agreement parameters");
  ColorlessTask t;
  t.name = "set_agreement_" + std::to_string(n_plus_1) + "_" +
           std::to_string(k);
  ValueSet all;
  for (int i = 0; i < n_plus_1; ++i) all.insert(std::to_string(i));
  t.inputs = ValueComplex::closure({all});
  auto k_subsets = [&](const ValueSet& s) {
    std::vector<Value> vs(s.begin(), s.end());
    std::vector<ValueSet> out;
    for (std::uint32_t mask = 1; mask < (1u << vs.size()); ++mask) {
      ValueSet sub;
      for (std::size_t i = 0; i < vs.size(); ++i)
        if (mask & (1u << i)) sub.insert(vs[i]);
      if (static_cast<int>(sub.size()) <= k) out.push_back(sub);
    }
    return out;
  };
  t.outputs = ValueComplex::closure(k_subsets(all));
  for (const auto& s : t.inputs.all_simplices())
    t.delta_star[s] = ValueComplex::closure(k_subsets(s));
  return t;
}

std::vector<ValueSet> sheets_of(const ValueComplex& o_star,
                                const std::map<Value, Value>& f,
                                const ValueSet& tau) {
  auto image = [&](const ValueSet& rho) {
    ValueSet img;
    for (const auto& v : rho) {
      auto it = f.find(v);
      if (it == f.end()) throw InvalidTask("cover map undefined on " + v);
      img.insert(it->second);
    }
    return img;
  };
  std::vector<ValueSet> in_fiber;
  for (const auto& rho : o_star.all_simplices())
    if (subset(image(rho), tau)) in_fiber.push_back(rho);
  std::vector<ValueSet> sheets;
  for (const auto& rho : in_fiber) {
    bool maximal = true;
    for (const auto& other : in_fiber)
      if (other != rho && subset(rho, other)) maximal = false;
    if (maximal) sheets.push_back(rho);
  }
  return sheets;
}

std::optional<CoveringWitness> find_intersecting_sheets(
    const ValueComplex& o_star, const std::map<Value, Value>& f) {
  std::vector<ValueSet> image_facets;
  for (const auto& rho : o_star.facets) {
    ValueSet img;
    for (const auto& v : rho) {
      auto it = f.find(v);
      if (it == f.end()) throw InvalidTask("cover map undefined on " + v);
      img.insert(it->second);
    }
    image_facets.push_back(img);
  }
  ValueComplex base = ValueComplex::closure(image_facets);
  for (const auto& tau : base.all_simplices()) {
    auto sheets = sheets_of(o_star, f, tau);
    for (std::size_t a = 0; a < sheets.size(); ++a)
      for (std::size_t b = a + 1; b < sheets.size(); ++b) {
        ValueSet inter;
        std::set_intersection(sheets[a].begin(), sheets[a].end(),
                              sheets[b].begin(), sheets[b].end(),
                              std::inserter(inter, inter.begin()));
        if (!inter.empty())
          return CoveringWitness{tau, sheets[a], sheets[b]};
      }
  }
  return std::nullopt;
}

ColorlessTask covering_task(const ValueComplex& o_star,
                            const std::map<Value, Value>& f) {
  if (auto w = find_intersecting_sheets(o_star, f))
    throw NotACovering("sheets " + set_to_string(w->sheet_a) + " and " +
                       set_to_string(w->sheet_b) + " intersect over " +
                       set_to_string(w->base));
  ColorlessTask t;
  t.name = "covering";
  std::vector<ValueSet> image_facets;
  for (const auto& rho : o_star.facets) {
    ValueSet img;
    for (const auto& v : rho) img.insert(f.at(v));
    image_facets.push_back(img);
  }
  t.inputs = ValueComplex::closure(image_facets);
  t.outputs = o_star;
  for (const auto& tau : t.inputs.all_simplices())
    t.delta_star[tau] = ValueComplex::closure(sheets_of(o_star, f, tau));
  t.validate();
  return t;
}

ColorlessTask hexagone_task() {
  std::vector<ValueSet> cycle;
  for (int i = 0; i < 6; ++i)
    cycle.push_back({"v" + std::to_string(i), "v" + std::to_string((i + 1) % 6)});
  ValueComplex o_star = ValueComplex::closure(cycle);
  std::map<Value, Value> f;
  for (int i = 0; i < 6; ++i)
    f["v" + std::to_string(i)] = "u" + std::to_string(i % 3);
  ColorlessTask t = covering_task(o_star, f);
  t.name = "hexagone";
  return t;
}

}  // namespace chroma
