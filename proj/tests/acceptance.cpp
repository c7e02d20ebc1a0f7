// Acceptance gate: one self-contained check per release criterion, each
// printing a single PASS/FAIL line. Exit status is the number of failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "quadrature.hpp"
#include "shapemle/objective.hpp"
#include "shapemle/serialize.hpp"
#include "shapemle/simulate.hpp"
#include "shapemle/solver.hpp"
#include "shapemle/special_functions.hpp"

using namespace shapemle;

namespace {

// ---------------------------------------------------------------------------
// Harness
// ---------------------------------------------------------------------------

struct Check {
    bool ok = true;
    std::string detail;

    void require(bool cond, const std::string& what) {
        if (!cond && ok) {
            ok = false;
            detail = what;
        }
    }
};

int g_failures = 0;

template <typename F>
void criterion(int number, const std::string& title, F body) {
    Check c;
    auto t0 = std::chrono::steady_clock::now();
    try {
        body(c);
    } catch (const std::exception& e) {
        c.require(false, std::string("exception: ") + e.what());
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::ostringstream line;
    line << "CRITERION " << number << ": " << (c.ok ? "PASS" : "FAIL") << " - " << title << " ("
         << secs << " s)";
    if (!c.ok) line << " [" << c.detail << "]";
    std::cout << line.str() << std::endl;
    if (!c.ok) ++g_failures;
}

double rel_err(double got, double want) {
    return std::fabs(got - want) / std::max(std::fabs(want), 1e-280);
}

double elapsed(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Accumulates every converged fit produced by the suite for the structural
// invariant sweep at the end.
std::vector<FitResult> g_fits;

// ---------------------------------------------------------------------------
// Shared fixtures
// ---------------------------------------------------------------------------

WeightedSample to_sample(const std::vector<double>& xs) { return ingest_points(xs); }

Model staircase_gamma_model() {
    Eigen::VectorXd c(5);
    c << 0.0, 0.5, 1.5, 2.7, 0.8;
    Model th(Setting::tail_gamma(1.0, 1.0), {0.0, 2.0, 4.0, 6.0}, c);
    th.shift(-std::log(density_integral(th)));
    return th;
}

Model tent_model() {
    Eigen::VectorXd c(3);
    c << -2.0, 0.7, -1.5;
    return Model(Setting::log_concave(), {-1.0, 0.5, 2.0}, c);
}

Model kinked_gauss_model() {
    Eigen::VectorXd c(4);
    c << -0.8, 0.1, 0.0, 0.6;
    return Model(Setting::tail_gauss(), {-0.5, 1.0}, c);
}

bool slopes_monotone(const Model& m) {
    std::size_t k = m.m();
    switch (m.setting().kind) {
        case SettingKind::LogConcave: {
            for (std::size_t j = 0; j + 2 < k; ++j)
                if (!(m.slope_right(j + 1) < m.slope_right(j))) return false;
            return true;
        }
        case SettingKind::TailInflationGauss: {
            if (k == 0) return true;
            double prev = m.slope_left(0);
            for (std::size_t j = 0; j < k; ++j) {
                if (!(m.slope_right(j) > prev)) return false;
                prev = m.slope_right(j);
            }
            return true;
        }
        case SettingKind::TailInflationGamma: {
            if (k == 0) return true;
            // theta is flat left of the first knot; a knot at the origin may
            // carry a zero kink without breaking isotonicity.
            double prev = 0.0;
            for (std::size_t j = 0; j < k; ++j) {
                bool at_origin = j == 0 && m.tau()[0] == 0.0;
                double s = m.slope_right(j);
                if (at_origin ? !(s >= prev) : !(s > prev)) return false;
                prev = s;
            }
            return true;
        }
    }
    return false;
}

// ---------------------------------------------------------------------------
// Criterion 8 helper: restricted Newton polish ignoring the shape constraint.
// ---------------------------------------------------------------------------

struct Polished {
    double loglik = -std::numeric_limits<double>::infinity();
    bool feasible = false;
};

Polished polish_on_knot_set(Model th, const WeightedSample& sp) {
    double cur = loglik(th, sp);
    for (int it = 0; it < 100; ++it) {
        NewtonStep st = newton(th, sp);
        if (!(st.delta > 1e-11)) break;
        double t = 1.0;
        Model cand = st.proposal;
        double lc = loglik(cand, sp);
        for (int half = 0; half < 60 && lc < cur + t * st.delta / 3.0; ++half) {
            t *= 0.5;
            cand = Model::blend(th, st.proposal, t);
            lc = loglik(cand, sp);
        }
        if (!(lc > cur)) break;
        th = std::move(cand);
        cur = lc;
    }
    bool feas = true;
    for (double b : th.betas()) feas = feas && b >= -1e-9;
    return {cur, feas};
}

}  // namespace

// ---------------------------------------------------------------------------
// Criteria
// ---------------------------------------------------------------------------

static void criterion_1(Check& c) {
    // Near-diagonal Taylor branch vs the exact closed form. Gaps far below
    // ~5e-3 are excluded because the exact branch itself loses precision
    // there, which is exactly why the series exists.
    RngStream rng(1);
    auto t0 = std::chrono::steady_clock::now();
    for (int rep = 0; rep < 10000 && c.ok; ++rep) {
        double m = -10.0 + 20.0 * rng.uniform();
        double d = (0.005 + 0.005 * rng.uniform()) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
        double r = m + 0.5 * d, s = m - 0.5 * d;
        for (JOrder o : {JOrder::J, JOrder::J10, JOrder::J20, JOrder::J11}) {
            double e = rel_err(j1_series(r, s, o), j1_exact(r, s, o));
            c.require(e < 1e-10, "series/exact mismatch " + std::to_string(e));
        }
    }
    c.require(elapsed(t0) < 1.0, "runtime over 1 s");
}

static void criterion_2(Check& c) {
    RngStream rng(2);
    auto t0 = std::chrono::steady_clock::now();
    auto U = [&](double a, double b) { return a + (b - a) * rng.uniform(); };

    for (int rep = 0; rep < 1000 && c.ok; ++rep) {
        // j1 on the unit interval.
        {
            double r = U(-8, 8), s = U(-8, 8);
            if (std::fabs(r - s) < 0.05) s = r + 0.05;
            JOrder o = static_cast<JOrder>(rep % 6);
            auto [p, q] = std::array<std::pair<int, int>, 6>{
                {{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}}}[rep % 6];
            double want = oracle::integrate(
                [&](double v) {
                    return std::pow(1.0 - v, p) * std::pow(v, q) *
                           std::exp((1.0 - v) * r + v * s);
                },
                0.0, 1.0);
            c.require(rel_err(j1(r, s, o), want) < 1e-9, "j1 vs oracle");
        }
        // Gaussian tail moments. The integrand peaks near x = t1 and is
        // negligible 12 standard units further out, so a finite window split
        // at the peak is a sharper oracle than the semi-infinite map.
        {
            double t0v = U(-2, 2), t1 = U(-2, 2), a = U(-4, 4);
            int ell = rep % 3;
            auto f = [&](double x) {
                return std::pow(x - a, ell) * std::exp(t0v + t1 * (x - a)) * norm_pdf(x);
            };
            double peak = std::max(a + 1e-3, t1);
            double hi = std::max(a, t1) + 14.0;
            double want = oracle::integrate(f, a, peak) + oracle::integrate(f, peak, hi);
            c.require(rel_err(gauss_k(t0v, t1, a, ell), want) < 1e-9, "gauss_k vs oracle");
        }
        // Gaussian interval moments.
        {
            double t0v = U(-2, 2), t1 = U(-2, 2), a = U(-4, 3), b = a + U(0.05, 4.0);
            JOrder o = static_cast<JOrder>(rep % 6);
            auto [p, q] = std::array<std::pair<int, int>, 6>{
                {{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}}}[rep % 6];
            double want = oracle::integrate(
                [&](double x) {
                    double v = (x - a) / (b - a);
                    return std::pow(1.0 - v, p) * std::pow(v, q) *
                           std::exp((1.0 - v) * t0v + v * t1) * norm_pdf(x);
                },
                a, b);
            c.require(rel_err(gauss_j(t0v, t1, a, b, o).value, want) < 1e-9,
                      "gauss_j vs oracle");
        }
        // Gamma partials, tail and interval moments.
        {
            double al = U(0.4, 4.0), a = U(0.05, 3.0), b = a + U(0.05, 4.0);
            double want = oracle::integrate(
                [&](double x) { return std::exp((al - 1.0) * std::log(x) - x - std::lgamma(al)); },
                a, b);
            c.require(rel_err(gamma_g(al, a, b), want) < 1e-9, "gamma_g vs oracle");

            double t0v = U(-2, 2), t1 = U(-2.0, 0.85), cc = U(0.05, 4.0);
            int ell = rep % 3;
            auto fk = [&](double x) {
                return std::pow(x - cc, ell) * std::exp(t0v + t1 * (x - cc) +
                                                        (al - 1.0) * std::log(x) - x -
                                                        std::lgamma(al));
            };
            // The exponent decays at rate 1 - t1; cut where the tail is below
            // the 1e-9 target and split at the mode of the tilted density.
            double peak = std::max(cc + 1e-3, (al + 1.0) / (1.0 - t1));
            double hi = peak + 60.0 / (1.0 - t1);
            double wk = oracle::integrate(fk, cc, peak) + oracle::integrate(fk, peak, hi);
            c.require(rel_err(gamma_k(al, t0v, t1, cc, ell), wk) < 1e-9, "gamma_k vs oracle");

            double tb = U(-2, 2);
            JOrder o = static_cast<JOrder>(rep % 6);
            auto [p, q] = std::array<std::pair<int, int>, 6>{
                {{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}}}[rep % 6];
            double wj = oracle::integrate(
                [&](double x) {
                    double v = (x - a) / (b - a);
                    return std::pow(1.0 - v, p) * std::pow(v, q) *
                           std::exp((1.0 - v) * t0v + v * tb + (al - 1.0) * std::log(x) - x -
                                    std::lgamma(al));
                },
                a, b);
            c.require(rel_err(gamma_j(al, t0v, tb, a, b, o).value, wj) < 1e-9,
                      "gamma_j vs oracle");
        }
        // Scalar cdfs against the oracle, and quantile round trips.
        {
            double z = U(-5, 5);
            double want = 1.0 - oracle::integrate_to_inf([](double x) { return norm_pdf(x); }, z);
            c.require(std::fabs(norm_cdf(z) - want) < 1e-12, "norm_cdf vs oracle");
            double pr = U(0.001, 0.999);
            c.require(std::fabs(norm_cdf(norm_quantile(pr)) - pr) < 1e-11,
                      "norm_quantile round trip");
            double al = U(0.4, 4.0), x = U(0.05, 8.0);
            double wp = oracle::integrate_gamma_weight(
                al, [](double t) { return std::exp(-t); }, x);
            c.require(rel_err(gamma_p(al, x), wp) < 1e-9, "gamma_p vs oracle");
            c.require(std::fabs(gamma_p(al, gamma_quantile(al, pr)) - pr) < 1e-10,
                      "gamma_quantile round trip");
        }
        // Inversions: forward-evaluate at the returned location.
        {
            double t0v = U(-1.5, 1.5), t1 = U(-1.5, 1.5), tau0 = U(-2, 2);
            double tau = tau0 + U(0.1, 3.0);
            double th_star = t0v + t1 * (tau - tau0);
            double cr = gauss_k(th_star, t1, tau, 0);
            if (auto inv = invert_gauss(GaussInvertKind::RightTail, t0v, t1, tau0, cr)) {
                double back = gauss_k(t0v + t1 * (*inv - tau0), t1, *inv, 0);
                c.require(rel_err(back, cr) < 1e-9, "invert_gauss RightTail");
            } else {
                c.require(false, "invert_gauss RightTail: no solution");
            }
            double cl = gauss_k(th_star, -t1, -tau, 0);
            if (auto inv = invert_gauss(GaussInvertKind::LeftTail, t0v, t1, tau0, cl)) {
                double back = gauss_k(t0v + t1 * (*inv - tau0), -t1, -*inv, 0);
                c.require(rel_err(back, cl) < 1e-9, "invert_gauss LeftTail");
            } else {
                c.require(false, "invert_gauss LeftTail: no solution");
            }
            double ci = gauss_j(t0v, th_star, tau0, tau, JOrder::J).value;
            if (auto inv = invert_gauss(GaussInvertKind::Interval, t0v, t1, tau0, ci)) {
                double back = gauss_j(t0v, t0v + t1 * (*inv - tau0), tau0, *inv, JOrder::J);
                c.require(rel_err(back, ci) < 1e-8, "invert_gauss Interval");
            }

            // The gamma inversions are defined for isotonic slopes in [0, 1).
            double al = U(0.5, 3.0), tg0 = U(0.0, 1.5), tg1 = U(0.0, 0.8);
            double tgt = U(0.3, 4.0);
            double ck = gamma_k(al, tg0 + tg1 * (tgt - 0.2), tg1, tgt, 0);
            if (auto inv = invert_gamma(GammaInvertKind::Tail, al, tg0, tg1, 0.2, ck)) {
                double back = gamma_k(al, tg0 + tg1 * (*inv - 0.2), tg1, *inv, 0);
                c.require(rel_err(back, ck) < 1e-9, "invert_gamma Tail");
            } else {
                c.require(false, "invert_gamma Tail: no solution");
            }
            double cleft = std::exp(tg0) * gamma_p(al, tgt);
            if (auto inv = invert_gamma(GammaInvertKind::Left, al, tg0, 0.0, 0.0, cleft)) {
                c.require(rel_err(std::exp(tg0) * gamma_p(al, *inv), cleft) < 1e-9,
                          "invert_gamma Left");
            } else {
                c.require(false, "invert_gamma Left: no solution");
            }
            double cj = gamma_j(al, tg0, tg0 + tg1 * tgt, 0.3, 0.3 + tgt, JOrder::J).value;
            if (auto inv = invert_gamma(GammaInvertKind::Interval, al, tg0, tg1, 0.3, cj)) {
                double back =
                    gamma_j(al, tg0, tg0 + tg1 * (*inv - 0.3), 0.3, *inv, JOrder::J).value;
                c.require(rel_err(back, cj) < 1e-8, "invert_gamma Interval");
            }
        }
    }
    c.require(elapsed(t0) < 30.0, "runtime over 30 s");
}

static void criterion_3(Check& c) {
    RngStream rng(3);
    auto t0 = std::chrono::steady_clock::now();
    auto U = [&](double a, double b) { return a + (b - a) * rng.uniform(); };

    auto check_model = [&](const Model& th, const WeightedSample& sp) {
        Evaluation ev = eval_full(th, sp);
        if (!ev.feasible || !ev.exact) return;  // not a finite-moment instance
        Eigen::Index d = th.dim();
        double gscale = std::max(1.0, ev.grad.cwiseAbs().maxCoeff());
        double hscale = std::max(
            {1.0, ev.neg_hessian.diag.cwiseAbs().maxCoeff(),
             d > 1 ? ev.neg_hessian.off.cwiseAbs().maxCoeff() : 0.0});
        for (Eigen::Index k = 0; k < d; ++k) {
            double eps = 1e-5;
            Model up = th, dn = th;
            up.coef()[k] += eps;
            dn.coef()[k] -= eps;
            double fd = (loglik(up, sp) - loglik(dn, sp)) / (2.0 * eps);
            c.require(std::fabs(fd - ev.grad[k]) / gscale <= 1e-6, "gradient vs fd");
            Eigen::VectorXd gdiff = (eval_full(up, sp).grad - eval_full(dn, sp).grad) /
                                    (2.0 * eps);
            for (Eigen::Index i = 0; i < d; ++i) {
                double analytic = 0.0;
                if (i == k) analytic = -ev.neg_hessian.diag[k];
                else if (i == k + 1) analytic = -ev.neg_hessian.off[k];
                else if (i + 1 == k) analytic = -ev.neg_hessian.off[i];
                c.require(std::fabs(gdiff[i] - analytic) / hscale <= 1e-4, "hessian vs fd");
            }
        }
    };

    for (int rep = 0; rep < 200 && c.ok; ++rep) {
        // Setting 1 on [-2, 2].
        {
            std::size_t m = 2 + static_cast<std::size_t>(rng.uniform() * 4.0);
            std::vector<double> tau{-2.0};
            for (std::size_t j = 0; j + 2 < m; ++j) tau.push_back(U(-1.8, 1.8));
            tau.push_back(2.0);
            std::sort(tau.begin(), tau.end());
            Eigen::VectorXd coef(static_cast<long>(m));
            for (long k = 0; k < coef.size(); ++k) coef[k] = U(-1.0, 1.0);
            std::vector<double> xs(15);
            for (double& x : xs) x = U(-1.9, 1.9);
            check_model(Model(Setting::log_concave(), tau, coef), to_sample(xs));
        }
        // Setting 2A.
        {
            std::size_t m = static_cast<std::size_t>(rng.uniform() * 5.0);
            std::vector<double> tau;
            for (std::size_t j = 0; j < m; ++j) tau.push_back(U(-2.0, 2.0));
            std::sort(tau.begin(), tau.end());
            Eigen::VectorXd coef(static_cast<long>(std::max<std::size_t>(m + 2, 2)));
            for (long k = 0; k < coef.size(); ++k) coef[k] = U(-1.2, 1.2);
            std::vector<double> xs(15);
            for (double& x : xs) x = U(-2.5, 2.5);
            check_model(Model(Setting::tail_gauss(), tau, coef), to_sample(xs));
        }
        // Setting 2B (unit rate), tail slope kept below 1.
        {
            double alpha = U(0.6, 3.0);
            std::size_t m = static_cast<std::size_t>(rng.uniform() * 5.0);
            std::vector<double> tau;
            for (std::size_t j = 0; j < m; ++j) tau.push_back(U(0.0, 3.0));
            std::sort(tau.begin(), tau.end());
            Eigen::VectorXd coef(static_cast<long>(m + 1));
            for (long k = 0; k + 1 < coef.size(); ++k) coef[k] = U(-1.0, 1.0);
            coef[coef.size() - 1] = U(-0.5, 0.85);
            std::vector<double> xs(15);
            for (double& x : xs) x = U(0.05, 5.0);
            check_model(Model(Setting::tail_gamma(alpha, 1.0), tau, coef), to_sample(xs));
        }
    }
    c.require(elapsed(t0) < 30.0, "runtime over 30 s");
}

static void criterion_4(Check& c) {
    WeightedSample sp = to_sample({0.0, 1.0});
    FitResult res = fit(sp, SolverConfig::defaults(Setting::log_concave(), 2));
    c.require(res.converged, "did not converge");
    c.require(res.model.m() == 2, "interior knots present");
    c.require(std::fabs(res.loglik) <= 1e-10, "loglik not 0");
    c.require(std::fabs(res.model.coef()[0]) <= 1e-10 && std::fabs(res.model.coef()[1]) <= 1e-10,
              "theta not identically 0");
    c.require(std::fabs(res.certificate.integral_of_density - 1.0) <= 1e-10,
              "integral residual");
    c.require(std::fabs(res.certificate.mean_match) <= 1e-10, "mean residual");
    c.require(res.certificate.grid_max_h <= 1e-10, "h residual");
    g_fits.push_back(res);
}

static void criterion_5(Check& c) {
    for (std::uint64_t seed = 1; seed <= 20 && c.ok; ++seed) {
        RngStream rng(seed);
        WeightedSample sp = to_sample(gauss_sample(400, 0.5, 1.25, rng));
        SolverConfig cfg = SolverConfig::defaults(Setting::tail_gauss(), 400);
        auto t0 = std::chrono::steady_clock::now();
        FitResult res = fit(sp, cfg);
        double secs = elapsed(t0);
        c.require(res.converged, "seed " + std::to_string(seed) + ": not converged");
        c.require(res.model.m() >= 2 && res.model.m() <= 20,
                  "seed " + std::to_string(seed) + ": knot count " +
                      std::to_string(res.model.m()));
        c.require(res.newton_steps < 500, "seed " + std::to_string(seed) + ": newton steps");
        c.require(res.certificate.passed, "seed " + std::to_string(seed) + ": certificate");
        c.require(res.certificate.grid_max_h <= 2.0 * cfg.delta2,
                  "seed " + std::to_string(seed) + ": h over 2*delta2");
        c.require(secs < 5.0, "seed " + std::to_string(seed) + ": runtime");
        g_fits.push_back(res);
    }
}

static void criterion_6(Check& c) {
    Model truth = staircase_gamma_model();
    for (std::uint64_t seed = 1; seed <= 20 && c.ok; ++seed) {
        RngStream rng(seed);
        WeightedSample sp = to_sample(simulate_2b(400, truth, rng));
        SolverConfig cfg = SolverConfig::defaults(Setting::tail_gamma(1.0, 1.0), 400);
        auto t0 = std::chrono::steady_clock::now();
        FitResult res = fit(sp, cfg);
        double secs = elapsed(t0);
        c.require(res.converged, "seed " + std::to_string(seed) + ": not converged");
        c.require(res.model.m() >= 1 && res.model.m() <= 15,
                  "seed " + std::to_string(seed) + ": knot count " +
                      std::to_string(res.model.m()));
        bool pos_increasing = res.model.m() >= 1 && slopes_monotone(res.model) &&
                              res.model.slope_right(0) >= 0.0 &&
                              res.model.slope_right(res.model.m() - 1) > 0.0;
        c.require(pos_increasing, "seed " + std::to_string(seed) + ": slope ladder");
        c.require(res.certificate.passed, "seed " + std::to_string(seed) + ": certificate");
        c.require(secs < 5.0, "seed " + std::to_string(seed) + ": runtime");
        g_fits.push_back(res);
    }
}

static void criterion_7(Check& c) {
    constexpr std::size_t n = 100000;
    auto ks = [](std::vector<double> xs, auto cdf) {
        std::sort(xs.begin(), xs.end());
        double nn = static_cast<double>(xs.size()), d = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            double f = cdf(xs[i]);
            d = std::max(d, std::fabs(f - static_cast<double>(i) / nn));
            d = std::max(d, std::fabs(f - static_cast<double>(i + 1) / nn));
        }
        return d;
    };

    {
        Model th = tent_model();
        RngStream rng(71);
        double d = ks(sample_piecewise_logaffine(n, th, rng),
                      [&](double t) { return model_cdf(th, t); });
        c.require(d < 0.01, "log-concave sampler KS " + std::to_string(d));
    }
    {
        Model th = kinked_gauss_model();
        RngStream rng(72);
        double d = ks(simulate_2a(n, th, rng), [&](double t) { return model_cdf(th, t); });
        c.require(d < 0.01, "2a sampler KS " + std::to_string(d));
    }
    {
        Model th = staircase_gamma_model();
        RngStream rng(73);
        double d = ks(simulate_2b(n, th, rng), [&](double t) { return model_cdf(th, t); });
        c.require(d < 0.01, "2b sampler KS " + std::to_string(d));
    }
    {
        RngStream rng(74);
        double d = ks(gauss_sample(n, 0.5, 1.25, rng),
                      [](double t) { return norm_cdf((t - 0.5) / 1.25); });
        c.require(d < 0.01, "gauss_sample KS " + std::to_string(d));
    }
    {
        // Linear theta with the envelope slope: the ratio is identically 1.
        Eigen::VectorXd co(2);
        co << 0.2, 0.5;
        Model th(Setting::tail_gamma(1.3, 1.0), {0.0}, co);
        RngStream rng(75);
        std::int64_t proposals = 0;
        simulate_2b(5000, th, rng, &proposals);
        c.require(proposals == 5000, "linear theta did not accept every proposal");
    }
}

static void criterion_8(Check& c) {
    RngStream rng(8);
    auto t0 = std::chrono::steady_clock::now();

    auto run_instance = [&](const Setting& setting, const std::vector<double>& xs) {
        WeightedSample sp = to_sample(xs);
        SolverConfig cfg = SolverConfig::defaults(setting, sp.n());
        // The default admission threshold delta2 leaves a suboptimality gap of
        // its own order; push it well below the 1e-6 comparison tolerance.
        cfg.delta1 = 1e-14;
        cfg.delta2 = 1e-7;
        cfg.delta_o = 1e-8;
        FitResult res = fit(sp, cfg);
        c.require(res.converged && res.certificate.passed, "small instance fit/certificate");
        g_fits.push_back(res);

        // Candidate knot locations for the brute-force sweep.
        std::vector<double> grid;
        if (setting.kind == SettingKind::LogConcave) {
            grid.assign(sp.points().begin() + 1, sp.points().end() - 1);
        } else {
            double lo = setting.kind == SettingKind::TailInflationGamma ? 0.0
                                                                        : sp.points().front();
            double hi = sp.points().back();
            for (int k = 0; k < 15; ++k)
                grid.push_back(lo + (hi - lo) * (k + (setting.kind == SettingKind::TailInflationGamma ? 0 : 1)) /
                                        16.0);
        }

        std::vector<std::vector<double>> knot_sets{{}};
        for (std::size_t i = 0; i < grid.size(); ++i) {
            knot_sets.push_back({grid[i]});
            for (std::size_t j = i + 1; j < grid.size(); ++j)
                knot_sets.push_back({grid[i], grid[j]});
        }

        Model base = start(sp, cfg);
        double best_feasible = -std::numeric_limits<double>::infinity();
        for (const std::vector<double>& ks : knot_sets) {
            Model th = base;
            bool valid = true;
            for (double t : ks) {
                if (std::binary_search(th.tau().begin(), th.tau().end(), t)) continue;
                try {
                    th = th.insert_knot(t);
                } catch (const InvalidInput&) {
                    valid = false;
                    break;
                }
            }
            if (!valid) continue;
            Polished p = polish_on_knot_set(th, sp);
            if (p.feasible) best_feasible = std::max(best_feasible, p.loglik);
            c.require(!(p.loglik > res.loglik + 1e-6) || !p.feasible,
                      "feasible brute-force candidate beats the fit by " +
                          std::to_string(p.loglik - res.loglik));
        }
        c.require(res.loglik >= best_feasible - 1e-6,
                  "fit below brute-force optimum by " +
                      std::to_string(best_feasible - res.loglik));
    };

    for (int rep = 0; rep < 10 && c.ok; ++rep) {
        std::vector<double> a(5), b(5), g(5);
        for (double& x : a) x = rng.normal();
        for (double& x : b) x = 0.3 + 1.2 * rng.normal();
        for (double& x : g) x = rng.gamma(1.3, 1.0);
        run_instance(Setting::log_concave(), a);
        run_instance(Setting::tail_gauss(), b);
        run_instance(Setting::tail_gamma(1.3, 1.0), g);
    }
    c.require(elapsed(t0) < 120.0, "runtime over 2 min");
}

static void criterion_9(Check& c) {
    c.require(!g_fits.empty(), "no fits recorded");
    for (const FitResult& res : g_fits) {
        if (!res.converged) continue;
        c.require(std::fabs(res.certificate.integral_of_density - 1.0) <= 1e-8,
                  "density integral off");
        if (res.model.setting().kind != SettingKind::TailInflationGamma)
            c.require(std::fabs(res.certificate.mean_match) <= 1e-6, "mean equation off");
        c.require(slopes_monotone(res.model), "slope monotonicity violated");
        for (std::size_t i = 1; i < res.trace.size(); ++i)
            c.require(res.trace[i].loglik >= res.trace[i - 1].loglik - 1e-9,
                      "loglik trace decreased");
    }

    // Bit-identical determinism: refit one representative instance per setting.
    auto refit_twice = [&](const Setting& setting, const std::vector<double>& xs) {
        WeightedSample sp = to_sample(xs);
        SolverConfig cfg = SolverConfig::defaults(setting, sp.n());
        FitResult r1 = fit(sp, cfg), r2 = fit(sp, cfg);
        bool same = r1.model.tau() == r2.model.tau() &&
                    r1.model.coef().size() == r2.model.coef().size() &&
                    std::memcmp(r1.model.coef().data(), r2.model.coef().data(),
                                sizeof(double) * r1.model.coef().size()) == 0 &&
                    std::memcmp(&r1.loglik, &r2.loglik, sizeof(double)) == 0 &&
                    r1.newton_steps == r2.newton_steps;
        c.require(same, "repeated fit not bit-identical");
    };
    RngStream rng(9);
    refit_twice(Setting::log_concave(), gauss_sample(80, 0.0, 1.0, rng));
    refit_twice(Setting::tail_gauss(), gauss_sample(200, 0.5, 1.25, rng));
    {
        std::vector<double> g(200);
        for (double& x : g) x = rng.gamma(1.0, 0.8);
        refit_twice(Setting::tail_gamma(1.0, 1.0), g);
    }
}

int main() {
    criterion(1, "near-diagonal series matches the exact unit-interval moments to 1e-10",
              criterion_1);
    criterion(2, "special functions match the adaptive-quadrature oracle to 1e-9", criterion_2);
    criterion(3, "gradient and Hessian match central finite differences", criterion_3);
    criterion(4, "two-point fixture recovers the uniform density exactly", criterion_4);
    criterion(5, "N(0.5, 1.25^2) replication, n=400, 20 seeds", criterion_5);
    criterion(6, "Gamma staircase replication, n=400, 20 seeds", criterion_6);
    criterion(7, "samplers pass KS at n=1e5; linear-ratio acceptance is exact", criterion_7);
    criterion(8, "fit matches the brute-force small-instance optimum", criterion_8);
    criterion(9, "structural invariants and determinism across the suite", criterion_9);
    return g_failures;
}
