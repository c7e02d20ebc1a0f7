#pragma once

#include <Eigen/Dense>
#include <vector>

#include "shapemle/data_model.hpp"

namespace shapemle {

// Piecewise-linear candidate function theta with an explicit list of active
// kink locations. The kink set is combinatorial state: knots enter and leave
// only through insert_knot / remove_knot, never by re-deriving them from
// floating-point slopes.
//
// Parametrizations (m = tau.size()):
//   LogConcave          tau = {x_1 = tau_1 < ... < tau_m = x_n}, m >= 2,
//                       coef = (theta(tau_1), ..., theta(tau_m)); theta = -inf
//                       outside [tau_1, tau_m].
//   TailInflationGauss  coef = (theta'(tau_1-), theta(tau_1..tau_m),
//                       theta'(tau_m+)), dimension m + 2; for m = 0,
//                       coef = (theta(0), slope) describes an affine theta.
//   TailInflationGamma  domain [0, inf), theta constant left of tau_1,
//                       coef = (theta(tau_1..tau_m), theta'(tau_m+)),
//                       dimension m + 1; for m = 0, coef = (constant).
//                       tau_1 = 0 is allowed (kink at the origin).
class Model {
  public:
    Model(Setting setting, std::vector<double> tau, Eigen::VectorXd coef);

    const Setting& setting() const { return setting_; }
    const std::vector<double>& tau() const { return tau_; }
    const Eigen::VectorXd& coef() const { return coef_; }
    Eigen::VectorXd& coef() { return coef_; }
    std::size_t m() const { return tau_.size(); }
    Eigen::Index dim() const { return coef_.size(); }

    // theta(x); -inf outside the domain (LogConcave outside [tau_1, tau_m],
    // TailInflationGamma for x < 0).
    double operator()(double x) const;

    // Value at an active knot.
    double value_at(std::size_t j) const;
    // One-sided slopes. For LogConcave the outside slopes are +-inf.
    double slope_left(std::size_t j) const;   // theta'(tau_j -)
    double slope_right(std::size_t j) const;  // theta'(tau_j +)

    // Kink coefficients beta_tau = xi (theta'(tau+) - theta'(tau-)) for the
    // deactivated constraints; for LogConcave the boundary knots tau_1, tau_m
    // are not constraints and get no entry (so the vector has m - 2 entries,
    // aligned with tau_2 .. tau_{m-1}).
    std::vector<double> betas() const;
    // Knot indices corresponding to betas(), into tau().
    std::vector<std::size_t> beta_knots() const;

    // Affine pieces covering the (finite or infinite) domain, left to right.
    struct Piece {
        double lo, hi;      // hi = +inf for the right tail, lo = -inf for the left
        double value_lo;    // theta at lo (at the finite anchor for tails)
        double slope;
        double anchor;      // finite point where value_lo is taken
    };
    std::vector<Piece> pieces() const;

    // Insert a new knot; the function is unchanged (theta(t) is interpolated).
    // t must not coincide with an existing knot, must be interior for
    // LogConcave, and >= 0 for TailInflationGamma.
    Model insert_knot(double t) const;
    // Remove knot j (the function changes unless beta_j = 0). LogConcave
    // requires m > 2 and an interior j.
    Model remove_knot(std::size_t j) const;

    // Convex combination (1 - t) * a + t * b; requires identical tau.
    static Model blend(const Model& a, const Model& b, double t);

    // Add a constant (used to normalize the fitted density).
    void shift(double c) { coef_ += c * shift_direction(); }
    Eigen::VectorXd shift_direction() const;  // d(coef)/d(constant shift)

    // Weights w-tilde with sum_i w_i theta(x_i) = wtilde . coef for any coef
    // with this knot set. Requires the sample to lie in the domain.
    Eigen::VectorXd collapsed_weights(const WeightedSample& sample) const;

  private:
    Setting setting_;
    std::vector<double> tau_;
    Eigen::VectorXd coef_;
};

}  // namespace shapemle
