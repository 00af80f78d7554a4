#pragma once

#include <filesystem>

#include <json.hpp>

#include "sparselab/constructions.hpp"

namespace sparselab {

using json = nlohmann::json;

// Rationals travel as "p/q" strings; integers and decimals are accepted on
// input. Cells are referred to by their position in the leftmost order.

json rational_to_json(const Rational& q);
Rational rational_from_json(const json& j);

json space_to_json(const CellSpace& space);
CellSpace space_from_json(const json& j);

json set_to_json(const CellSpace& space, const MeasurableSet& set);
MeasurableSet set_from_json(const CellSpace& space, const json& j);

/// {"cells": [...], "balls": [[positions]...], "hull": [...], "hull_constant": ...}
json basis_to_json(const BallBasis& basis);
/// Reads {"cells", "balls"}; a "hull" entry, when present, must agree with
/// the computed hulls.
BallBasis basis_from_json(const json& j);

/// {"weight": "p/q", "children": [...]}
MartingaleNode tree_from_json(const json& j);
json tree_to_json(const MartingaleNode& node);

/// Basis description used by configs:
///   {"kind": "dyadic", "depth": d}
///   {"kind": "martingale", "tree": {...}} or {"kind": "martingale", "path": "tree.json"}
///   {"kind": "inline", "cells": [...], "balls": [...]}
/// Relative paths resolve against `base_dir`.
BallBasis basis_from_spec(const json& j, const std::filesystem::path& base_dir = {});

json function_to_json(const CellSpace& space, const StepFunction& f);
/// {"values": [...]} in leftmost order, or {"constant": "p/q"}.
StepFunction function_from_json(const CellSpace& space, const json& j);

/// {"balls": [ids], "gamma": "p/q", "witnesses": [[positions]...]}
json collection_to_json(const CellSpace& space, const SparseCollection& s);
SparseCollection collection_from_json(const BallBasis& basis, const json& j);

json radical_function_to_json(const CellSpace& space, const RadicalFunction& values);
json axiom_report_to_json(const AxiomReport& report, const std::optional<Rational>& doubling);
json sparseness_to_json(const CellSpace& space, const SparsenessResult& result);
json flattening_to_json(const BallBasis& basis, const FlatteningResult& result);
json flattening_report_to_json(const FlatteningReport& report);

json read_json_file(const std::filesystem::path& path);

}  // namespace sparselab
