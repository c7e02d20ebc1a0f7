#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "quadrature.hpp"
#include "shapemle/objective.hpp"
#include "shapemle/simulate.hpp"
#include "shapemle/special_functions.hpp"

using namespace shapemle;

namespace {

// Conservative 99% Kolmogorov band with 50% slack, n = 1e5.
constexpr std::size_t kN = 100000;
const double kBand = 1.63 / std::sqrt(static_cast<double>(kN)) * 1.5;

template <typename F>
double ks_distance(std::vector<double> xs, const F& cdf) {
    std::sort(xs.begin(), xs.end());
    double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double f = cdf(xs[i]);
        d = std::max(d, std::fabs(f - static_cast<double>(i) / n));
        d = std::max(d, std::fabs(f - static_cast<double>(i + 1) / n));
    }
    return d;
}

Model tent_model() {
    Eigen::VectorXd c(3);
    c << -2.0, 0.7, -1.5;
    return Model(Setting::log_concave(), {-1.0, 0.5, 2.0}, c);
}

Model kinked_gauss_model() {
    Eigen::VectorXd c(4);
    c << -0.8, 0.1, 0.0, 0.6;  // slopes -0.8, -1/15, 0.6: convex
    return Model(Setting::tail_gauss(), {-0.5, 1.0}, c);
}

// The replication example: theta(x) = 0.25 x+ + 0.25 (x-2)+ + 0.1 (x-4)+
// + 0.2 (x-6)+ - log c against Gamma(1,1).
Model staircase_gamma_model() {
    Eigen::VectorXd c(5);
    c << 0.0, 0.5, 1.5, 2.7, 0.8;
    Model th(Setting::tail_gamma(1.0, 1.0), {0.0, 2.0, 4.0, 6.0}, c);
    th.shift(-std::log(density_integral(th)));
    return th;
}

}  // namespace

TEST_CASE("rng streams are deterministic and distinct") {
    RngStream a(7, 3), b(7, 3), c(7, 4), d(8, 3);
    bool same = true, diff_stream = false, diff_seed = false;
    for (int i = 0; i < 256; ++i) {
        std::uint64_t va = a.next_u64();
        same = same && (va == b.next_u64());
        diff_stream = diff_stream || (va != c.next_u64());
        diff_seed = diff_seed || (va != d.next_u64());
    }
    CHECK(same);
    CHECK(diff_stream);
    CHECK(diff_seed);

    RngStream e(42);
    for (int i = 0; i < 10000; ++i) {
        double u = e.uniform();
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
    }
}

TEST_CASE("normal and gamma variates match their distributions") {
    RngStream rng(101);
    std::vector<double> zs(kN), gs(kN);
    for (double& z : zs) z = rng.normal();
    for (double& g : gs) g = rng.gamma(2.3, 1.7);
    CHECK(ks_distance(zs, [](double z) { return norm_cdf(z); }) < kBand);
    CHECK(ks_distance(gs, [](double g) { return gamma_p(2.3, 1.7 * g); }) < kBand);

    RngStream r2(5);
    std::vector<double> small(kN);
    for (double& g : small) g = r2.gamma(0.4, 1.0);  // shape < 1 boost path
    CHECK(ks_distance(small, [](double g) { return gamma_p(0.4, g); }) < kBand);
}

TEST_CASE("gauss_sample draws N(mu, sigma^2)") {
    RngStream rng(3);
    std::vector<double> xs = gauss_sample(kN, 0.0, 1.0, rng);
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(kN);
    CHECK(std::fabs(mean) < 4.0 / std::sqrt(static_cast<double>(kN)));
    CHECK(ks_distance(xs, [](double z) { return norm_cdf(z); }) < kBand);
}

TEST_CASE("model_cdf agrees with the quadrature oracle") {
    SUBCASE("log-concave") {
        Model th = tent_model();
        double total = oracle::integrate([&](double x) { return std::exp(th(x)); }, -1.0, 2.0);
        for (double t : {-0.9, -0.3, 0.2, 0.5, 0.9, 1.7}) {
            double below = oracle::integrate([&](double x) { return std::exp(th(x)); }, -1.0, t);
            CHECK(model_cdf(th, t) == doctest::Approx(below / total).epsilon(1e-10));
        }
        CHECK(model_cdf(th, -1.5) == 0.0);
        CHECK(model_cdf(th, 3.0) == 1.0);
    }
    SUBCASE("gaussian tail inflation") {
        Model th = kinked_gauss_model();
        auto dens = [&](double x) { return std::exp(th(x)) * norm_pdf(x); };
        double total = oracle::integrate(dens, -12.0, 12.0);
        for (double t : {-3.0, -0.5, 0.0, 0.8, 1.0, 2.5})
            CHECK(model_cdf(th, t) ==
                  doctest::Approx(oracle::integrate(dens, -12.0, t) / total).epsilon(1e-9));
    }
    SUBCASE("gamma tail inflation, rate != 1") {
        double alpha = 1.5, beta = 2.0;
        Eigen::VectorXd c(3);
        c << 0.0, 0.4, 0.9;
        Model th(Setting::tail_gamma(alpha, beta), {0.0, 1.0}, c);
        auto f = [&](double x) {
            return std::exp(th(x) - beta * x) * std::pow(beta, alpha);
        };
        double total = oracle::integrate_gamma_weight(alpha, f, 40.0);
        for (double t : {0.2, 0.7, 1.0, 1.8, 4.0})
            CHECK(model_cdf(th, t) ==
                  doctest::Approx(oracle::integrate_gamma_weight(alpha, f, t) / total)
                      .epsilon(1e-9));
    }
}

TEST_CASE("piecewise log-affine sampler is exact") {
    SUBCASE("uniform density on [0, 1]") {
        Model th(Setting::log_concave(), {0.0, 1.0}, Eigen::VectorXd::Zero(2));
        RngStream rng(11);
        std::vector<double> xs = sample_piecewise_logaffine(kN, th, rng);
        double mean = 0.0;
        for (double x : xs) {
            REQUIRE(x >= 0.0);
            REQUIRE(x <= 1.0);
            mean += x;
        }
        mean /= static_cast<double>(kN);
        CHECK(std::fabs(mean - 0.5) < 4.0 / std::sqrt(12.0 * static_cast<double>(kN)));
        CHECK(ks_distance(xs, [](double t) { return std::clamp(t, 0.0, 1.0); }) < kBand);
    }
    SUBCASE("tent log-density against the exact cdf") {
        Model th = tent_model();
        RngStream rng(12);
        std::vector<double> xs = sample_piecewise_logaffine(kN, th, rng);
        CHECK(ks_distance(xs, [&](double t) { return model_cdf(th, t); }) < kBand);
    }
    SUBCASE("deterministic under a fixed seed") {
        Model th = tent_model();
        RngStream r1(99), r2(99);
        CHECK(sample_piecewise_logaffine(50, th, r1) ==
              sample_piecewise_logaffine(50, th, r2));
    }
}

TEST_CASE("gaussian tail-inflation sampler is exact") {
    SUBCASE("theta = 0 gives N(0,1)") {
        Eigen::VectorXd c(2);
        c << 0.0, 0.0;
        Model th(Setting::tail_gauss(), {}, c);
        RngStream rng(21);
        std::vector<double> xs = simulate_2a(kN, th, rng);
        double mean = 0.0;
        for (double x : xs) mean += x;
        mean /= static_cast<double>(kN);
        CHECK(std::fabs(mean) < 4.0 / std::sqrt(static_cast<double>(kN)));
        CHECK(ks_distance(xs, [](double z) { return norm_cdf(z); }) < kBand);
    }
    SUBCASE("kinked theta against the exact cdf") {
        Model th = kinked_gauss_model();
        RngStream rng(22);
        std::vector<double> xs = simulate_2a(kN, th, rng);
        CHECK(ks_distance(xs, [&](double t) { return model_cdf(th, t); }) < kBand);
    }
}

TEST_CASE("gamma tail-inflation sampler") {
    SUBCASE("staircase example: normalization, KS, acceptance rate") {
        Model th = staircase_gamma_model();
        // e^{theta(0)} of the normalized staircase is the known constant.
        CHECK(std::exp(th(0.0)) == doctest::Approx(0.619).epsilon(0.01));

        RngStream rng(31);
        std::int64_t proposals = 0;
        std::vector<double> xs = simulate_2b(kN, th, rng, &proposals);
        CHECK(ks_distance(xs, [&](double t) { return model_cdf(th, t); }) < kBand);

        // P(accept) = e^{-theta(0)} (1 - gamma/beta)^alpha, gamma = 0.8.
        double p = std::exp(-th(0.0)) * 0.2;
        double phat = static_cast<double>(kN) / static_cast<double>(proposals);
        double se = p * std::sqrt((1.0 - p) / static_cast<double>(kN));
        CHECK(std::fabs(phat - p) < 3.0 * se);
    }
    SUBCASE("linear theta with the envelope slope accepts every proposal") {
        Eigen::VectorXd c(2);
        c << 0.3, 0.6;
        Model th(Setting::tail_gamma(1.2, 1.0), {0.0}, c);
        RngStream rng(32);
        std::int64_t proposals = 0;
        std::vector<double> xs = simulate_2b(1000, th, rng, &proposals);
        CHECK(proposals == 1000);
    }
    SUBCASE("slope at the rate is rejected") {
        Eigen::VectorXd c(2);
        c << 0.0, 1.0;
        Model th(Setting::tail_gamma(1.0, 1.0), {0.0}, c);
        RngStream rng(33);
        CHECK_THROWS_AS(simulate_2b(10, th, rng), InvalidEnvelope);
    }
    SUBCASE("deterministic under a fixed seed") {
        Model th = staircase_gamma_model();
        RngStream r1(7), r2(7);
        CHECK(simulate_2b(200, th, r1) == simulate_2b(200, th, r2));
    }
}
