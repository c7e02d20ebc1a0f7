#pragma once

#include <string>

#include "shapemle/solver.hpp"

namespace shapemle {

// Result record as a single JSON document:
//   {setting, alpha, beta, knots[], theta[], slopes[], loglik, newton_steps,
//    local_searches, converged, certificate{integral_of_density, mean_match,
//    knot_equalities[], grid_max_h, passed}}
// theta[] holds the values at the knots and slopes[] the affine-piece slopes
// left to right; for knot-free models theta[] holds the value at 0. Numbers
// round-trip exactly (shortest-representation doubles).
std::string to_json(const FitResult& result);

// The model fields alone (setting, alpha, beta, knots, theta, slopes).
std::string model_to_json(const Model& model);

// Parse a model from a result record or a bare model document.
// Throws InvalidInput on schema violations.
Model model_from_json(const std::string& text);

}  // namespace shapemle
