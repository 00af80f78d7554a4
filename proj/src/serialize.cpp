#include "sparselab/serialize.hpp"

#include <fstream>
#include <string>

#include "sparselab/error.hpp"

namespace sparselab {

namespace {

[[noreturn]] void parse_error(const std::string& what) { fail(ErrorCode::parse, what); }

const json& member(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) parse_error(std::string("missing field '") + key + "'");
  return j.at(key);
}

std::vector<std::size_t> positions_from_json(const json& j) {
  if (!j.is_array()) parse_error("expected an array of cell positions");
  std::vector<std::size_t> out;
  for (const auto& p : j) {
    if (!p.is_number_unsigned()) parse_error("cell positions are nonnegative integers");
    out.push_back(p.get<std::size_t>());
  }
  return out;
}

json optional_rational(const std::optional<Rational>& q) { return q ? rational_to_json(*q) : json(nullptr); }

json ball_id_or_null(const std::optional<BallId>& id) { return id ? json(*id) : json(nullptr); }

}  // namespace

json rational_to_json(const Rational& q) { return to_string(q); }

Rational rational_from_json(const json& j) {
  if (j.is_string()) return parse_rational(j.get<std::string>());
  if (j.is_number_integer()) return Rational(mpz_class(std::to_string(j.get<long long>())));
  if (j.is_number_unsigned()) return Rational(mpz_class(std::to_string(j.get<unsigned long long>())));
  // Floats go through their shortest decimal text, not the binary value.
  if (j.is_number_float()) return parse_rational(j.dump());
  parse_error("expected a rational, got " + j.dump());
}

json space_to_json(const CellSpace& space) {
  json cells = json::array();
  for (CellId c : space.order()) cells.push_back(rational_to_json(space.cell_measure(c)));
  return json{{"cells", cells}};
}

CellSpace space_from_json(const json& j) {
  const json& cells = member(j, "cells");
  if (!cells.is_array()) parse_error("'cells' must be an array of measures");
  std::vector<Rational> measures;
  for (const auto& c : cells) measures.push_back(rational_from_json(c));
  return CellSpace(measures);
}

json set_to_json(const CellSpace& space, const MeasurableSet& set) { return space.positions_of(set); }

MeasurableSet set_from_json(const CellSpace& space, const json& j) {
  return space.set_from_positions(positions_from_json(j));
}

json basis_to_json(const BallBasis& basis) {
  const CellSpace& space = basis.space();
  json out = space_to_json(space);
  json balls = json::array();
  json hulls = json::array();
  for (const Ball& b : basis.balls()) {
    balls.push_back(set_to_json(space, b.set));
    hulls.push_back(ball_id_or_null(basis.hull(b.id)));
  }
  out["balls"] = balls;
  out["hull"] = hulls;
  out["hull_constant"] = optional_rational(basis.hull_constant());
  out["contains_full_space"] = basis.contains_full_space();
  return out;
}

BallBasis basis_from_json(const json& j) {
  CellSpace space = space_from_json(j);
  const json& balls = member(j, "balls");
  if (!balls.is_array()) parse_error("'balls' must be an array of cell-position arrays");
  std::vector<MeasurableSet> sets;
  for (const auto& b : balls) sets.push_back(set_from_json(space, b));
  BallBasis basis = BallBasis::from_sets(std::move(space), std::move(sets));
  if (j.contains("hull") && !j.at("hull").is_null()) {
    const json& hulls = j.at("hull");
    if (!hulls.is_array() || hulls.size() != basis.size()) parse_error("'hull' must list one entry per ball");
    for (std::size_t i = 0; i < basis.size(); ++i) {
      const auto computed = basis.hull(static_cast<BallId>(i));
      const bool listed = !hulls[i].is_null();
      if (listed != computed.has_value() || (listed && hulls[i].get<BallId>() != *computed))
        parse_error("listed hull of ball " + std::to_string(i) + " disagrees with the computed hull");
    }
  }
  return basis;
}

MartingaleNode tree_from_json(const json& j) {
  MartingaleNode node{rational_from_json(member(j, "weight")), {}};
  if (j.contains("children")) {
    const json& children = j.at("children");
    if (!children.is_array()) parse_error("'children' must be an array");
    for (const auto& c : children) node.children.push_back(tree_from_json(c));
  }
  return node;
}

json tree_to_json(const MartingaleNode& node) {
  json out{{"weight", rational_to_json(node.weight)}};
  if (!node.children.empty()) {
    json children = json::array();
    for (const auto& c : node.children) children.push_back(tree_to_json(c));
    out["children"] = children;
  }
  return out;
}

BallBasis basis_from_spec(const json& j, const std::filesystem::path& base_dir) {
  const std::string kind = member(j, "kind").get<std::string>();
  if (kind == "dyadic") {
    const json& depth = member(j, "depth");
    if (!depth.is_number_integer() || depth.get<long long>() < 0 || depth.get<long long>() > 20)
      parse_error("'depth' must be an integer in 0..20");
    return dyadic_basis(depth.get<unsigned>());
  }
  if (kind == "martingale") {
    if (j.contains("tree")) return martingale_basis(tree_from_json(j.at("tree")));
    std::filesystem::path path = member(j, "path").get<std::string>();
    if (path.is_relative()) path = base_dir / path;
    return martingale_basis(tree_from_json(read_json_file(path)));
  }
  if (kind == "inline") return basis_from_json(j);
  parse_error("unknown basis kind '" + kind + "'");
}

json function_to_json(const CellSpace& space, const StepFunction& f) {
  json values = json::array();
  for (const auto& v : space.values_in_order(f)) values.push_back(rational_to_json(v));
  return json{{"values", values}};
}

StepFunction function_from_json(const CellSpace& space, const json& j) {
  if (j.is_object() && j.contains("constant")) return space.constant_function(rational_from_json(j.at("constant")));
  const json& values = member(j, "values");
  if (!values.is_array()) parse_error("'values' must be an array");
  std::vector<Rational> v;
  for (const auto& x : values) v.push_back(rational_from_json(x));
  return space.function_from_values(v);
}

json collection_to_json(const CellSpace& space, const SparseCollection& s) {
  json out{{"balls", s.balls}, {"gamma", rational_to_json(s.gamma)}};
  if (s.witnesses) {
    json w = json::array();
    for (const auto& e : *s.witnesses) w.push_back(set_to_json(space, space.migrate(e)));
    out["witnesses"] = w;
  }
  return out;
}

SparseCollection collection_from_json(const BallBasis& basis, const json& j) {
  SparseCollection s;
  const json& balls = member(j, "balls");
  if (!balls.is_array()) parse_error("'balls' must be an array of ball ids");
  for (const auto& b : balls) {
    if (!b.is_number_unsigned() || b.get<std::size_t>() >= basis.size())
      parse_error("unknown ball id " + b.dump());
    s.balls.push_back(b.get<BallId>());
  }
  s.gamma = rational_from_json(member(j, "gamma"));
  if (j.contains("witnesses") && !j.at("witnesses").is_null()) {
    std::vector<MeasurableSet> w;
    for (const auto& e : j.at("witnesses")) w.push_back(set_from_json(basis.space(), e));
    if (w.size() != s.balls.size()) parse_error("one witness per ball is required");
    s.witnesses = std::move(w);
  }
  return s;
}

json radical_function_to_json(const CellSpace& space, const RadicalFunction& values) {
  json cells = json::array();
  for (CellId c : space.order()) {
    const RootSum& v = values[c];
    json terms = json::array();
    for (const auto& t : v.terms()) terms.push_back(rational_to_json(t));
    const Interval iv = v.enclose(128);
    cells.push_back(json{{"terms", terms},
                         {"value", iv.midpoint()},
                         {"lower", iv.lower()},
                         {"upper", iv.upper()},
                         {"exact", optional_rational(v.exact())}});
  }
  return json{{"r", values.r()}, {"cells", cells}};
}

json axiom_report_to_json(const AxiomReport& report, const std::optional<Rational>& doubling) {
  auto pair_or_null = [](const std::optional<std::pair<CellId, CellId>>& p) {
    return p ? json::array({p->first, p->second}) : json(nullptr);
  };
  return json{{"ok", report.all_ok()},
              {"B1", report.b1_ok},
              {"B2", report.b2_ok},
              {"B3", report.b3_ok},
              {"B4", report.b4_ok},
              {"K", optional_rational(report.hull_constant)},
              {"doubling", optional_rational(doubling)},
              {"B2_witness", pair_or_null(report.b2_witness)},
              {"B3_witness", pair_or_null(report.b3_witness)},
              {"B4_failures", report.b4_failures}};
}

json sparseness_to_json(const CellSpace& space, const SparsenessResult& result) {
  json out{{"feasible", result.feasible},
           {"demand", rational_to_json(result.demand)},
           {"max_flow", rational_to_json(result.supply)}};
  if (result.feasible) {
    json w = json::array();
    for (const auto& e : result.witnesses) w.push_back(set_to_json(space, space.migrate(e)));
    out["witnesses"] = w;
    out["space"] = space_to_json(space);
  } else {
    out["violating"] = result.violating;
  }
  return out;
}

json flattening_to_json(const BallBasis& basis, const FlatteningResult& result) {
  const CellSpace& space = basis.space();
  json steps = json::array();
  for (const auto& s : result.steps) {
    steps.push_back(json{{"selected", s.selected},
                         {"hull", s.hull},
                         {"double_hull", s.double_hull},
                         {"cover", ball_id_or_null(s.cover)},
                         {"cover_family_infimum", optional_rational(s.family_infimum)},
                         {"fresh_part", set_to_json(space, space.migrate(s.fresh_part))},
                         {"xi", rational_to_json(s.xi)},
                         {"spread", s.spread ? set_to_json(space, space.migrate(*s.spread)) : json(nullptr)}});
  }
  return json{{"lambda", rational_to_json(result.lambda)},
              {"r", result.r},
              {"delta", rational_to_json(result.delta)},
              {"retries", result.retries},
              {"space", space_to_json(space)},
              {"exceptional", set_to_json(space, space.migrate(result.exceptional))},
              {"exceptional_measure", rational_to_json(space.measure(space.migrate(result.exceptional)))},
              {"flattened", function_to_json(space, space.migrate(result.flattened))["values"]},
              {"steps", steps}};
}

json flattening_report_to_json(const FlatteningReport& report) {
  return json{{"level_set_covered", report.level_set_covered},
              {"bounded", report.bounded},
              {"flattened_matches", report.flattened_matches},
              {"domination_finite", report.domination_finite},
              {"measure_constant", rational_to_json(report.measure_constant)},
              {"domination_constant", rational_to_json(report.domination_constant)},
              {"minimal_constant", rational_to_json(report.minimal_constant())},
              {"worst_ball", ball_id_or_null(report.worst_ball)}};
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::invalid_argument, "cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    parse_error("invalid JSON in '" + path.string() + "': " + e.what());
  }
}

}  // namespace sparselab
