#pragma once

#include <optional>

#include "shapemle/errors.hpp"

namespace shapemle {

// ---------------------------------------------------------------------------
// Scalar primitives: standard normal, regularized incomplete gamma, and their
// inverses. All implemented in-repo on top of <cmath> erfc/lgamma.
// ---------------------------------------------------------------------------

double norm_pdf(double z);
double norm_cdf(double z);
double log_norm_cdf(double z);  // accurate for z down to ~ -1e7
double norm_quantile(double p);

// Regularized lower incomplete gamma P(s, x) and upper Q(s, x) = 1 - P(s, x).
double gamma_p(double s, double x);
double gamma_q(double s, double x);
// Quantile of Gamma(s, 1): inverse of P(s, .) on [0, 1).
double gamma_quantile(double s, double p);

// ---------------------------------------------------------------------------
// Exponential moments of a linear exponent over a unit interval (Lebesgue):
//   J_{ab}(r, s) = Integral_0^1 (1-v)^a v^b exp((1-v) r + v s) dv,  a + b <= 2.
// ---------------------------------------------------------------------------

enum class JOrder { J, J10, J01, J20, J11, J02 };

double j1(double r, double s, JOrder order);
// Exposed branches for the series/exact agreement checks.
double j1_exact(double r, double s, JOrder order);
double j1_series(double r, double s, JOrder order);

// ---------------------------------------------------------------------------
// Gaussian reference N(0,1): tail moments
//   K_l(theta0, theta1; a) = Integral_a^inf (x-a)^l exp(theta0 + theta1 (x-a)) phi(x) dx
// and interval moments
//   J_{lm}(theta0, theta1; a, b) =
//     Integral_a^b ((b-x)/(b-a))^l ((x-a)/(b-a))^m
//       exp(((b-x) theta0 + (x-a) theta1)/(b-a)) phi(x) dx.
// Left-tail integrals use the reflection K(theta0, -theta1; -a).
// ---------------------------------------------------------------------------

double gauss_k(double theta0, double theta1, double a, int ell);
double log_gauss_k(double theta0, double theta1, double a);  // ell = 0 only

struct FlaggedValue {
    double value = 0.0;
    bool is_bound = false;  // value is only a bound/floor, not the exact moment

    operator double() const { return value; }
};

FlaggedValue gauss_j(double theta0, double theta1, double a, double b, JOrder order);

enum class GaussInvertKind {
    RightTail,  // K(theta* , +theta1; +tau) = c
    LeftTail,   // K(theta* , -theta1; -tau) = c
    Interval,   // J(theta0, theta* ; tau0, tau) = c
};

// Solve for tau in the Gaussian case, where theta* = theta0 + theta1 (tau - tau0).
// Empty optional means no solution exists (a normal outcome).
std::optional<double> invert_gauss(GaussInvertKind kind, double theta0, double theta1,
                                   double tau0, double c);

// ---------------------------------------------------------------------------
// Gamma(alpha, 1) reference: partial integrals G_s(a,b), tail moments K_l and
// interval moments J_{lm} analogous to the Gaussian family.
// ---------------------------------------------------------------------------

double gamma_g(double s, double a, double b);  // b may be +inf

// Returns +inf (a value, not an error) when theta1 >= 1.
double gamma_k(double alpha, double theta0, double theta1, double c, int ell);

// Exact for any slope on a finite interval; a flagged upper bound is returned
// only when the tilted exponent is astronomically large ((slope-1) b > 500).
FlaggedValue gamma_j(double alpha, double theta0, double theta1, double a, double b,
                     JOrder order);

enum class GammaInvertKind {
    Left,      // exp(theta0) G_alpha(tau) = c             (theta1 unused)
    Interval,  // J(theta0, theta* ; tau0, tau) = c
    Tail,      // K(theta* , theta1; tau) = c
};

std::optional<double> invert_gamma(GammaInvertKind kind, double alpha, double theta0,
                                   double theta1, double tau0, double c);

}  // namespace shapemle
