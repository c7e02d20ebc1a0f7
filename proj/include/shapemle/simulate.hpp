#pragma once

#include <cstdint>
#include <vector>

#include "shapemle/spline.hpp"

namespace shapemle {

// Counter-based pseudo-random stream (splitmix64 output function over a
// per-stream key). Identical (seed, stream) always reproduces the identical
// draw sequence, and distinct stream ids never overlap, so replications can
// fork cheap independent streams from one seed.
class RngStream {
  public:
    explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0);

    std::uint64_t next_u64();
    double uniform();                         // open interval (0, 1)
    double normal();                          // N(0,1), ratio of uniforms
    double gamma(double shape, double rate);  // Marsaglia-Tsang squeeze

  private:
    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

// Exact CDF of the density proportional to e^theta against the model's
// reference measure (Lebesgue on [tau_1, tau_m] / N(0,1) / Gamma(alpha,beta)),
// normalized by its total mass. Shared by the samplers and the KS tests.
double model_cdf(const Model& theta, double x);

// n i.i.d. draws from N(mu, sigma^2).
std::vector<double> gauss_sample(std::size_t n, double mu, double sigma, RngStream& rng);

// Exact inverse-CDF sampling from a log-concave model: the segment is chosen
// by its exact mass, the within-segment exponential CDF inverted in closed
// form.
std::vector<double> sample_piecewise_logaffine(std::size_t n, const Model& theta,
                                               RngStream& rng);

// Exact inverse-CDF sampling from a Gaussian tail-inflation model. The
// density is a finite mixture of truncated Gaussians (one per affine piece of
// theta), so each draw needs one tail-moment inversion.
std::vector<double> simulate_2a(std::size_t n, const Model& theta, RngStream& rng);

// Acceptance-rejection sampling from a Gamma tail-inflation model with
// envelope Y ~ Gamma(alpha, beta - gamma), gamma the limiting right slope of
// theta; a proposal is accepted when U <= exp(theta(Y) - theta(0) - gamma Y),
// which is a genuine probability because the ratio decreases from 1 at 0.
// Throws InvalidEnvelope when gamma >= beta. proposals, if given, receives
// the number of envelope draws consumed (for acceptance-rate checks).
std::vector<double> simulate_2b(std::size_t n, const Model& theta, RngStream& rng,
                                std::int64_t* proposals = nullptr);

}  // namespace shapemle
