#pragma once

#include <Eigen/Dense>

#include "shapemle/spline.hpp"

namespace shapemle {

// Log-likelihood functional
//   L(theta) = sum_i w_i theta(x_i) - Integral e^theta dM + 1,
// whose maximizer over the constraint cone is automatically a probability
// density with respect to the reference measure M.
//
// All routines here expect the model in the reference scale of the setting
// (N(0,1), Gamma(alpha, 1), or Lebesgue); rate transformations are the
// caller's business.

struct TriDiag {
    Eigen::VectorXd diag;
    Eigen::VectorXd off;  // superdiagonal, size dim - 1
};

struct Evaluation {
    double loglik = -std::numeric_limits<double>::infinity();
    bool feasible = false;  // loglik > -inf
    bool exact = true;      // false if some moment was only available as a bound
    Eigen::VectorXd grad;
    TriDiag neg_hessian;
};

// Value only; returns -inf when the density integral is infinite or overflows.
// When a tail moment is only available as an upper bound, the result is a
// lower bound for L (safe for sufficient-increase tests).
double loglik(const Model& model, const WeightedSample& sample);

// Value, gradient and negative Hessian of L in the model's coefficient
// parametrization. The negative Hessian is symmetric tridiagonal and positive
// definite whenever the evaluation is feasible and exact.
Evaluation eval_full(const Model& model, const WeightedSample& sample);

// Integral of e^theta dM (+inf when not integrable).
double density_integral(const Model& model);
// Integral of x e^theta dM; requires a feasible model.
double mean_integral(const Model& model);

// Directional derivative DL(theta, V_tau) for the plain kink
// V_tau(x) = xi (x - tau)^+ restricted to the domain.
double dl_simple_kink(const Model& model, const WeightedSample& sample, double tau);

// Localized kink score h(tau) = DL(theta, V_{tau,theta}) and, in the tail
// inflation settings, the one-sided derivative h'(tau+) (h'(tau-) with
// left_limit = true). For LogConcave only h is meaningful and hprime is 0.
struct KinkScore {
    double h = 0.0;
    double hprime = 0.0;
};
KinkScore h_localized(const Model& model, const WeightedSample& sample, double tau,
                      bool left_limit = false);

// Integral of V_{tau,theta}^2 e^theta dM (step size scale for multi-knot
// proposals).
double v2_integral(const Model& model, double tau);

}  // namespace shapemle
