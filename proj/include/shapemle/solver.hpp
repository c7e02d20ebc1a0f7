#pragma once

#include <vector>

#include "shapemle/objective.hpp"
#include "shapemle/spline.hpp"

namespace shapemle {

// Residuals of the global-optimality characterization. The estimate is the
// global maximizer iff the density integrates to one, the mean equation holds
// (Settings 1 and 2A), the directional derivative vanishes at every active
// kink, and the h-score is nonpositive elsewhere.
struct CertificateReport {
    double integral_of_density = 0.0;     // should be 1
    double mean_match = 0.0;              // integral of x e^theta dM minus the sample mean
    std::vector<double> knot_equalities;  // DL(theta, V_tau) at the active knots
    double grid_max_h = 0.0;              // max localized score over the audit grid
    bool passed = false;
};

struct TraceEntry {
    int outer = 0;
    double loglik = 0.0;
    std::size_t active_knots = 0;
};

struct FitResult {
    Model model;
    double loglik = 0.0;
    std::vector<TraceEntry> trace;
    int newton_steps = 0;
    int local_searches = 0;
    CertificateReport certificate;
    bool converged = false;
};

// Locally optimal start with all constraints active: the one-parameter
// exponential-family MLE. Setting 1 solves c'(kappa) = mean on [x1, xn] by
// safeguarded Newton; 2A returns the affine theta with slope = mean; 2B (unit
// rate) returns theta(x) = k+ x + alpha log(1 - k+), k = 1 - alpha/mean, with
// a single knot at 0. Gamma settings require beta == 1 here (fit() owns the
// rescaling for beta != 1).
Model start(const WeightedSample& sample, const SolverConfig& config);

// Alternative Setting-1 start: interpolate the Gaussian log-density
// -(x - mean)^2 / (2 var) on ceil(2 n^{1/3}) quantile-indexed interior sample
// points plus the endpoints, then normalize. Requires n >= 3.
Model start_gaussian_spline(const WeightedSample& sample, const SolverConfig& config);

struct NewtonStep {
    Model proposal;  // same knot set, updated coefficients
    double delta;    // DL(theta, proposal - theta) = g' H^{-1} g >= 0
};

// One Newton step for L restricted to the model's knot set.
NewtonStep newton(const Model& model, const WeightedSample& sample);

// Halve the proposal until L(new) >= L(model) + delta/3, blend with the
// largest feasible step t_o (dropping the knots whose kink hits zero), and
// normalize. The result is feasible with strictly larger L.
Model step_size_correction(const Model& model, const Model& proposal, double delta,
                           const WeightedSample& sample);

// Alternate step-size correction and Newton steps until the decrement drops
// to config.delta1. newton_steps, if given, is incremented per Newton solve.
Model local_search(Model model, Model proposal, double delta, const WeightedSample& sample,
                   const SolverConfig& config, int* newton_steps = nullptr);

struct KnotCandidate {
    double tau = 0.0;
    double h = 0.0;  // DL(theta, V_{tau,theta})
};

// Best admission candidate per D(theta)-interval (so their localized kinks
// have disjoint supports). Settings 2A-B search each gap between consecutive
// sample points / knots with the closed-form inversion of h'(tau) = 0 and a
// bisection fallback; Setting 1 scans the interior sample points.
std::vector<KnotCandidate> scan_candidates(const Model& model, const WeightedSample& sample,
                                           double delta_o);

// Overall best candidate; h = -inf when no admissible location exists.
KnotCandidate new_knot(const Model& model, const WeightedSample& sample, double delta2,
                       double delta_o);

// Gradient-type proposal admitting several kinks at once with Newton-type
// coefficients lambda = h / integral of V^2 e^theta dM.
NewtonStep multi_knot_proposal(const Model& model, const WeightedSample& sample,
                               const std::vector<KnotCandidate>& candidates);

// The full active-set loop: start, local search, knot admission until the
// best candidate's score drops to delta2, then certification.
FitResult fit(const WeightedSample& sample, const SolverConfig& config);

// Evaluate the optimality certificate; tolerances are 1e-8 for the density
// integral, 1e-6 for the mean equation, and 2 delta2 for the h conditions.
// Gamma models with beta != 1 are checked in the unit-rate scale.
CertificateReport certify(const Model& model, const WeightedSample& sample,
                          const SolverConfig& config);

}  // namespace shapemle
