#include "shapemle/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>

#include "shapemle/special_functions.hpp"

namespace shapemle {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void normalize(Model& model) { model.shift(-std::log(density_integral(model))); }

// --------------------------------------------------------------------------
// Starting points
// --------------------------------------------------------------------------

// g(u) = 1/(1 - e^{-u}) - 1/u, the mean of the exponential tilt e^{ux} on
// [0,1]; increasing from 0 to 1 with g(0) = 1/2.
double g_fun(double u) {
    if (std::abs(u) < 1e-4) return 0.5 + u / 12.0 - u * u * u / 720.0;
    return 1.0 / (-std::expm1(-u)) - 1.0 / u;
}

double g_deriv(double u) {
    if (std::abs(u) < 1e-4) return 1.0 / 12.0 - u * u / 240.0;
    if (std::abs(u) > 500.0) return 1.0 / (u * u);
    double em = std::expm1(-u);  // e^{-u} - 1
    return 1.0 / (u * u) - (em + 1.0) / (em * em);
}

// Solve g(u) = r for r in (0,1) by Newton with a bisection safeguard.
double solve_g(double r) {
    if (std::abs(r - 0.5) < 1e-16) return 0.0;
    double lo = -1.0, hi = 1.0;
    while (g_fun(lo) > r && lo > -1e18) lo *= 2.0;
    while (g_fun(hi) < r && hi < 1e18) hi *= 2.0;
    double u = 0.0;
    for (int it = 0; it < 200; ++it) {
        double f = g_fun(u) - r;
        if (std::abs(f) < 1e-16) break;
        (f > 0.0 ? hi : lo) = u;
        double un = u - f / g_deriv(u);
        if (!(un > lo && un < hi)) un = 0.5 * (lo + hi);
        if (std::abs(un - u) <= 1e-15 * (1.0 + std::abs(u))) return un;
        u = un;
    }
    return u;
}

// log((e^u - 1)/u)
double log_expm1_over(double u) {
    if (std::abs(u) < 1e-5) return u / 2.0 + u * u / 24.0;
    if (u > 500.0) return u - std::log(u);
    return std::log(std::expm1(u) / u);
}

void require_positive_support(const WeightedSample& sample) {
    if (!(sample.points().front() > 0.0))
        throw InvalidInput("Gamma setting requires strictly positive data");
}

}  // namespace

Model start(const WeightedSample& sample, const SolverConfig& config) {
    const Setting& s = config.setting;
    switch (s.kind) {
        case SettingKind::LogConcave: {
            double x1 = sample.points().front(), xn = sample.points().back();
            double del = xn - x1;
            double u = solve_g((sample.mean() - x1) / del);
            // theta(x) = kappa x - log integral of e^{kappa x} over [x1, xn]
            double v1 = -std::log(del) - log_expm1_over(u);
            Eigen::VectorXd coef(2);
            coef << v1, v1 + u;
            return Model(s, {x1, xn}, std::move(coef));
        }
        case SettingKind::TailInflationGauss: {
            double mu = sample.mean();
            Eigen::VectorXd coef(2);
            coef << -0.5 * mu * mu, mu;
            return Model(s, {}, std::move(coef));
        }
        case SettingKind::TailInflationGamma: {
            if (s.beta != 1.0) throw InvalidInput("start: Gamma rate must be 1 here");
            require_positive_support(sample);
            double kap = 1.0 - s.alpha / sample.mean();
            if (!(kap > 0.0)) {
                // constraint at 0 stays active: theta = 0 with empty kink set
                Eigen::VectorXd coef = Eigen::VectorXd::Zero(1);
                return Model(s, {}, std::move(coef));
            }
            Eigen::VectorXd coef(2);
            coef << s.alpha * std::log1p(-kap), kap;
            return Model(s, {0.0}, std::move(coef));
        }
    }
    throw InvalidInput("start: unknown setting");
}

Model start_gaussian_spline(const WeightedSample& sample, const SolverConfig& config) {
    if (config.setting.kind != SettingKind::LogConcave)
        throw InvalidInput("start_gaussian_spline: Setting 1 only");
    std::size_t n = sample.n();
    if (n < 3) throw InvalidInput("start_gaussian_spline: needs n >= 3");
    std::size_t mn = static_cast<std::size_t>(
        std::ceil(2.0 * std::cbrt(static_cast<double>(n))));
    mn = std::min(mn, n - 2);
    std::vector<double> tau{sample.points().front()};
    for (std::size_t k = 1; k <= mn; ++k) {
        std::size_t idx = static_cast<std::size_t>(std::lround(
            static_cast<double>(k) * static_cast<double>(n - 1) /
            static_cast<double>(mn + 1)));
        idx = std::clamp<std::size_t>(idx, 1, n - 2);
        tau.push_back(sample.point(idx));
    }
    tau.push_back(sample.points().back());
    std::sort(tau.begin(), tau.end());
    tau.erase(std::unique(tau.begin(), tau.end()), tau.end());
    double mu = sample.mean(), v = sample.variance();
    Eigen::VectorXd coef(static_cast<Eigen::Index>(tau.size()));
    for (Eigen::Index j = 0; j < coef.size(); ++j) {
        double d = tau[static_cast<std::size_t>(j)] - mu;
        coef[j] = -d * d / (2.0 * v);
    }
    Model model(config.setting, std::move(tau), std::move(coef));
    normalize(model);
    return model;
}

// --------------------------------------------------------------------------
// Newton step on the current knot set
// --------------------------------------------------------------------------

namespace {

// LDL^T solve for a symmetric positive definite tridiagonal system.
bool tridiag_solve(const Eigen::VectorXd& diag, const Eigen::VectorXd& off,
                   const Eigen::VectorXd& rhs, Eigen::VectorXd& x) {
    Eigen::Index n = diag.size();
    Eigen::VectorXd d(n), l(std::max<Eigen::Index>(n - 1, 0));
    d[0] = diag[0];
    if (!(d[0] > 0.0) || !std::isfinite(d[0])) return false;
    for (Eigen::Index i = 1; i < n; ++i) {
        l[i - 1] = off[i - 1] / d[i - 1];
        d[i] = diag[i] - l[i - 1] * off[i - 1];
        if (!(d[i] > 0.0) || !std::isfinite(d[i])) return false;
    }
    x = rhs;
    for (Eigen::Index i = 1; i < n; ++i) x[i] -= l[i - 1] * x[i - 1];
    x.array() /= d.array();
    for (Eigen::Index i = n - 2; i >= 0; --i) x[i] -= l[i] * x[i + 1];
    return x.allFinite();
}

}  // namespace

NewtonStep newton(const Model& model, const WeightedSample& sample) {
    Evaluation ev = eval_full(model, sample);
    if (!ev.feasible) throw InvalidInput("newton: model with non-finite log-likelihood");
    Eigen::Index n = model.dim();
    Eigen::VectorXd dir(n);
    double ridge = 0.0;
    double base = 1e-10 * ev.neg_hessian.diag.sum() / static_cast<double>(n);
    if (!(base > 0.0)) base = 1e-10;
    int tries = 0;
    while (!tridiag_solve(ev.neg_hessian.diag.array() + ridge, ev.neg_hessian.off, ev.grad,
                          dir)) {
        if (++tries > 10) throw FactorizationFailure("newton: tridiagonal factorization failed");
        ridge = ridge == 0.0 ? base : ridge * 10.0;
    }
    double delta = ev.grad.dot(dir);
    if (delta < 0.0) delta = 0.0;  // exact value is a PD quadratic form
    Model proposal = model;
    proposal.coef() += dir;
    return {std::move(proposal), delta};
}

// --------------------------------------------------------------------------
// Step-size correction and local search
// --------------------------------------------------------------------------

Model step_size_correction(const Model& model, const Model& proposal, double delta,
                           const WeightedSample& sample) {
    double L0 = loglik(model, sample);
    if (!std::isfinite(L0)) throw InvalidInput("step_size_correction: infeasible base model");
    Model prop = proposal;
    int halvings = 0;
    while (loglik(prop, sample) < L0 + delta / 3.0) {
        if (++halvings > 60)
            throw NoProgress("step_size_correction: halving exhausted without ascent");
        prop = Model::blend(model, prop, 0.5);
        delta /= 2.0;
    }
    // Largest feasible blend; track directly which kinks hit zero.
    std::vector<double> b0 = model.betas(), b1 = prop.betas();
    double t_o = 1.0;
    for (std::size_t k = 0; k < b1.size(); ++k)
        if (b1[k] < 0.0) t_o = std::min(t_o, b0[k] / (b0[k] - b1[k]));
    if (!(t_o > 0.0))
        throw NoProgress("step_size_correction: blocking constraint at zero step");
    Model out = Model::blend(model, prop, t_o);
    if (t_o < 1.0) {
        std::vector<std::size_t> knots = model.beta_knots();
        std::vector<std::size_t> drop;
        for (std::size_t k = 0; k < b1.size(); ++k)
            if (b1[k] < 0.0 && b0[k] / (b0[k] - b1[k]) <= t_o + 1e-12) drop.push_back(knots[k]);
        for (auto it = drop.rbegin(); it != drop.rend(); ++it) out = out.remove_knot(*it);
    }
    normalize(out);
    return out;
}

Model local_search(Model model, Model proposal, double delta, const WeightedSample& sample,
                   const SolverConfig& config, int* newton_steps) {
    int iters = 0;
    while (delta > config.delta1) {
        if (++iters > config.max_newton)
            throw IterationCap("local_search: Newton iteration cap reached");
        model = step_size_correction(model, proposal, delta, sample);
        NewtonStep step = newton(model, sample);
        if (newton_steps) ++*newton_steps;
        proposal = std::move(step.proposal);
        delta = step.delta;
    }
    return model;
}

// --------------------------------------------------------------------------
// Knot admission
// --------------------------------------------------------------------------

namespace {

// Solve h'(tau) = 0 on (a, b) by the closed-form quantile inversions. Within
// the gap, h'(tau) = h'(a+) - (T(tau) - T(a)) for a single moving reference
// moment T, so the target value for T is read off from h'(a+).
std::optional<double> invert_hprime(const Model& model, double a, double b, double hp_a) {
    const Setting& s = model.setting();
    const std::vector<double>& t = model.tau();
    std::size_t m = t.size();
    bool gauss = s.kind == SettingKind::TailInflationGauss;
    double mid = 0.5 * (a + b);
    if (m == 0) {
        if (gauss) {
            double c = gauss_k(model(a), model.coef()[1], a, 0) - hp_a;
            return invert_gauss(GaussInvertKind::RightTail, model.coef()[0], model.coef()[1],
                                0.0, c);
        }
        double c = gamma_k(s.alpha, model(a), 0.0, a, 0) - hp_a;
        return invert_gamma(GammaInvertKind::Tail, s.alpha, model.coef()[0], 0.0, 0.0, c);
    }
    if (mid < t.front()) {
        if (gauss) {
            double c = gauss_k(model(a), -model.coef()[0], -a, 0) + hp_a;
            return invert_gauss(GaussInvertKind::LeftTail, model.value_at(0), model.coef()[0],
                                t.front(), c);
        }
        double c = std::exp(model.value_at(0)) * gamma_p(s.alpha, a) + hp_a;
        return invert_gamma(GammaInvertKind::Left, s.alpha, model.value_at(0), 0.0, 0.0, c);
    }
    if (mid > t.back()) {
        double sr = model.coef()[model.dim() - 1];
        double Ka = gauss ? gauss_k(model(a), sr, a, 0) : gamma_k(s.alpha, model(a), sr, a, 0);
        double c = Ka - hp_a;
        return gauss ? invert_gauss(GaussInvertKind::RightTail, model.value_at(m - 1), sr,
                                    t.back(), c)
                     : invert_gamma(GammaInvertKind::Tail, s.alpha, model.value_at(m - 1), sr,
                                    t.back(), c);
    }
    auto it = std::upper_bound(t.begin(), t.end(), mid);
    std::size_t j = static_cast<std::size_t>(it - t.begin()) - 1;
    double thj = model.value_at(j), sl = model.slope_right(j);
    double Ja = 0.0;
    if (a > t[j])
        Ja = gauss ? gauss_j(thj, model(a), t[j], a, JOrder::J).value
                   : gamma_j(s.alpha, thj, model(a), t[j], a, JOrder::J).value;
    double c = Ja + hp_a;
    return gauss ? invert_gauss(GaussInvertKind::Interval, thj, sl, t[j], c)
                 : invert_gamma(GammaInvertKind::Interval, s.alpha, thj, sl, t[j], c);
}

// Fallback search on [a, b] when the closed form is unavailable; returns a
// near-maximizer or a point certifying the interval maximum is <= 2 delta_o.
KnotCandidate bisect_interval(const Model& model, const WeightedSample& sample, double a,
                              double b, double delta_o) {
    double tau = 0.5 * (a + b), del = 0.5 * (b - a);
    for (int it = 0; it < 200; ++it) {
        KinkScore ks = h_localized(model, sample, tau);
        double bound = std::abs(ks.hprime) * del;
        if (!(bound > delta_o && ks.h + bound > delta_o)) return {tau, ks.h};
        if (ks.hprime >= 0.0) {
            a = tau;
            tau = 0.5 * (tau + b);
        } else {
            b = tau;
            tau = 0.5 * (a + tau);
        }
        del /= 2.0;
    }
    return {tau, h_localized(model, sample, tau).h};
}

}  // namespace

std::vector<KnotCandidate> scan_candidates(const Model& model, const WeightedSample& sample,
                                           double delta_o) {
    const Setting& s = model.setting();
    const std::vector<double>& t = model.tau();
    std::map<std::size_t, KnotCandidate> best;  // per D(theta)-interval
    auto consider = [&](std::size_t group, double tau, double h) {
        auto [it, inserted] = best.try_emplace(group, KnotCandidate{tau, h});
        if (inserted) return;
        if (h > it->second.h + 1e-14 ||
            (std::abs(h - it->second.h) <= 1e-14 && tau < it->second.tau))
            it->second = {tau, h};
    };
    auto group_of = [&](double x) {
        return static_cast<std::size_t>(std::upper_bound(t.begin(), t.end(), x) - t.begin());
    };
    auto in_D = [&](double x) { return std::binary_search(t.begin(), t.end(), x); };

    if (s.kind == SettingKind::LogConcave) {
        for (std::size_t i = 1; i + 1 < sample.n(); ++i) {
            double x = sample.point(i);
            if (in_D(x)) continue;
            consider(group_of(x), x, h_localized(model, sample, x).h);
        }
        std::vector<KnotCandidate> out;
        for (const auto& [g, cand] : best) out.push_back(cand);
        return out;
    }

    double x1 = sample.points().front(), xn = sample.points().back();
    auto admissible = [&](double tau) {
        if (in_D(tau)) return false;
        if (s.kind == SettingKind::TailInflationGamma && tau == 0.0) return true;
        return tau > x1 && tau < xn;
    };
    if (s.kind == SettingKind::TailInflationGamma && x1 > 0.0 && !in_D(0.0))
        consider(0, 0.0, h_localized(model, sample, 0.0).h);

    std::vector<double> grid = sample.points();
    for (double tj : t)
        if (tj > x1 && tj < xn) grid.push_back(tj);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        double a = grid[i], b = grid[i + 1];
        std::size_t group = group_of(0.5 * (a + b));
        KinkScore ka = h_localized(model, sample, a);
        if (ka.hprime <= 0.0) {
            if (admissible(a)) consider(group, a, ka.h);
            continue;
        }
        KinkScore kb = h_localized(model, sample, b, true);
        if (kb.hprime >= 0.0) {
            if (admissible(b)) consider(group, b, kb.h);
            continue;
        }
        std::optional<double> tau = invert_hprime(model, a, b, ka.hprime);
        KnotCandidate cand;
        if (tau && *tau > a && *tau < b)
            cand = {*tau, h_localized(model, sample, *tau).h};
        else
            cand = bisect_interval(model, sample, a, b, delta_o);
        if (admissible(cand.tau)) consider(group, cand.tau, cand.h);
    }
    std::vector<KnotCandidate> out;
    for (const auto& [g, cand] : best) out.push_back(cand);
    return out;
}

KnotCandidate new_knot(const Model& model, const WeightedSample& sample, double delta2,
                       double delta_o) {
    (void)delta2;  // the scan already locates exact per-interval maxima
    KnotCandidate best{sample.points().front(), -kInf};
    for (const KnotCandidate& c : scan_candidates(model, sample, delta_o)) {
        if (c.h > best.h + 1e-14 || (std::abs(c.h - best.h) <= 1e-14 && c.tau < best.tau))
            best = c;
    }
    return best;
}

NewtonStep multi_knot_proposal(const Model& model, const WeightedSample& sample,
                               const std::vector<KnotCandidate>& candidates) {
    (void)sample;
    if (candidates.empty()) throw EmptyCandidates("multi_knot_proposal: no candidates");
    const Setting& s = model.setting();
    const std::vector<double>& t = model.tau();
    std::size_t m = t.size();

    std::vector<KnotCandidate> cands = candidates;
    std::sort(cands.begin(), cands.end(),
              [](const KnotCandidate& a, const KnotCandidate& b) { return a.tau < b.tau; });
    double delta = 0.0;
    std::vector<double> lambda(cands.size());
    for (std::size_t k = 0; k < cands.size(); ++k) {
        double v2 = v2_integral(model, cands[k].tau);
        if (!(v2 > 0.0)) throw EmptyCandidates("multi_knot_proposal: degenerate kink");
        lambda[k] = cands[k].h / v2;
        if (!(lambda[k] > 0.0)) throw EmptyCandidates("multi_knot_proposal: nonpositive score");
        delta += lambda[k] * cands[k].h;
    }

    Model prop = model;
    for (const KnotCandidate& c : cands) prop = prop.insert_knot(c.tau);

    Eigen::Index off = s.kind == SettingKind::TailInflationGauss ? 1 : 0;
    for (std::size_t k = 0; k < cands.size(); ++k) {
        double tau = cands[k].tau;
        if (m == 0) {
            // V = (x - tau)^+ bumps the right tail slope
            prop.coef()[prop.dim() - 1] += lambda[k];
            continue;
        }
        double vtau;  // V_{tau,theta}(tau)
        if (tau < t.front()) {
            vtau = tau - t.front();
        } else if (tau > t.back()) {
            vtau = -(tau - t.back());
        } else {
            auto it = std::upper_bound(t.begin(), t.end(), tau);
            std::size_t j = static_cast<std::size_t>(it - t.begin()) - 1;
            double a = t[j], b = t[j + 1];
            double tent = (tau - a) * (b - tau) / (b - a);
            vtau = s.kind == SettingKind::LogConcave ? tent : -tent;
        }
        auto pit = std::lower_bound(prop.tau().begin(), prop.tau().end(), tau);
        Eigen::Index pos = static_cast<Eigen::Index>(pit - prop.tau().begin());
        prop.coef()[off + pos] += lambda[k] * vtau;
    }
    return {std::move(prop), delta};
}

// --------------------------------------------------------------------------
// Certification
// --------------------------------------------------------------------------

namespace {

constexpr double kIntegralTol = 1e-8;
constexpr double kMeanTol = 1e-6;

// Gamma models with rate beta are fitted and certified at unit rate:
// theta(x) = theta_unit(beta x).
Model gamma_to_unit(const Model& model) {
    double beta = model.setting().beta;
    std::vector<double> tau = model.tau();
    for (double& v : tau) v *= beta;
    Eigen::VectorXd coef = model.coef();
    if (!tau.empty()) coef[coef.size() - 1] /= beta;
    return Model(Setting::tail_gamma(model.setting().alpha, 1.0), std::move(tau),
                 std::move(coef));
}

Model gamma_from_unit(const Model& unit, double beta) {
    std::vector<double> tau = unit.tau();
    for (double& v : tau) v /= beta;
    Eigen::VectorXd coef = unit.coef();
    if (!tau.empty()) coef[coef.size() - 1] *= beta;
    return Model(Setting::tail_gamma(unit.setting().alpha, beta), std::move(tau),
                 std::move(coef));
}

}  // namespace

CertificateReport certify(const Model& model, const WeightedSample& sample,
                          const SolverConfig& config) {
    const Setting& s = model.setting();
    if (s.kind == SettingKind::TailInflationGamma && s.beta != 1.0)
        return certify(gamma_to_unit(model), sample.scaled(s.beta), config);

    CertificateReport rep;
    double h_tol = 2.0 * config.delta2;
    rep.integral_of_density = density_integral(model);
    bool ok = std::abs(rep.integral_of_density - 1.0) <= kIntegralTol;
    if (s.kind != SettingKind::TailInflationGamma) {
        rep.mean_match = mean_integral(model) - sample.mean();
        ok = ok && std::abs(rep.mean_match) <= kMeanTol;
    }

    std::vector<double> betas = model.betas();
    std::vector<std::size_t> knots = model.beta_knots();
    for (std::size_t k = 0; k < knots.size(); ++k) {
        double r = dl_simple_kink(model, sample, model.tau()[knots[k]]);
        rep.knot_equalities.push_back(r);
        ok = ok && (betas[k] > 1e-12 ? std::abs(r) <= h_tol : r <= h_tol);
    }

    double scale = s.kind == SettingKind::TailInflationGauss ? sample.stddev()
                   : s.kind == SettingKind::TailInflationGamma ? 1.0
                                                               : 0.0;
    double lo = sample.points().front() - 4.0 * scale;
    double hi = sample.points().back() + 4.0 * scale;
    if (s.kind == SettingKind::TailInflationGamma) lo = std::max(lo, 0.0);
    std::vector<double> bounds{lo};
    for (double tj : model.tau())
        if (tj > lo && tj < hi) bounds.push_back(tj);
    bounds.push_back(hi);
    rep.grid_max_h = -kInf;
    for (std::size_t i = 0; i + 1 < bounds.size(); ++i) {
        double u = bounds[i], v = bounds[i + 1];
        for (int k = 0; k < 1000; ++k) {
            double tau = u + (v - u) * (k + 1) / 1001.0;
            rep.grid_max_h = std::max(rep.grid_max_h, h_localized(model, sample, tau).h);
        }
    }
    ok = ok && rep.grid_max_h <= h_tol;
    rep.passed = ok;
    return rep;
}

// --------------------------------------------------------------------------
// The outer loop
// --------------------------------------------------------------------------

FitResult fit(const WeightedSample& sample, const SolverConfig& config) {
    config.validate();
    const Setting& s = config.setting;
    if (s.kind == SettingKind::TailInflationGamma && s.beta != 1.0) {
        SolverConfig unit_cfg = config;
        unit_cfg.setting = Setting::tail_gamma(s.alpha, 1.0);
        require_positive_support(sample);
        FitResult res = fit(sample.scaled(s.beta), unit_cfg);
        res.model = gamma_from_unit(res.model, s.beta);
        return res;
    }

    Model th = (s.kind == SettingKind::LogConcave && config.gaussian_spline_start)
                   ? start_gaussian_spline(sample, config)
                   : start(sample, config);
    FitResult res{th, 0.0, {}, 0, 0, {}, false};
    bool capped = false;
    int outer = 0;
    try {
        NewtonStep step = newton(th, sample);
        ++res.newton_steps;
        if (step.delta > config.delta1) {
            th = local_search(th, step.proposal, step.delta, sample, config,
                              &res.newton_steps);
            ++res.local_searches;
        }
        res.trace.push_back({0, loglik(th, sample), th.m()});

        if (config.multi_knot_first_round) {
            std::vector<KnotCandidate> cands = scan_candidates(th, sample, config.delta_o);
            std::erase_if(cands, [&](const KnotCandidate& c) { return c.h <= config.delta2; });
            if (!cands.empty()) {
                NewtonStep prop = multi_knot_proposal(th, sample, cands);
                Model base = th;
                for (const KnotCandidate& c : cands)
                    if (!std::binary_search(base.tau().begin(), base.tau().end(), c.tau))
                        base = base.insert_knot(c.tau);
                th = local_search(std::move(base), prop.proposal, prop.delta, sample, config,
                                  &res.newton_steps);
                ++res.local_searches;
                ++outer;
                res.trace.push_back({outer, loglik(th, sample), th.m()});
            }
        }

        KnotCandidate kc = new_knot(th, sample, config.delta2, config.delta_o);
        while (kc.h > config.delta2) {
            if (++outer > config.max_outer) {
                capped = true;
                break;
            }
            Model with_knot = th.insert_knot(kc.tau);
            NewtonStep step2 = newton(with_knot, sample);
            ++res.newton_steps;
            th = local_search(std::move(with_knot), step2.proposal, step2.delta, sample,
                              config, &res.newton_steps);
            ++res.local_searches;
            res.trace.push_back({outer, loglik(th, sample), th.m()});
            kc = new_knot(th, sample, config.delta2, config.delta_o);
        }
    } catch (const IterationCap&) {
        capped = true;
    }
    res.model = th;
    res.loglik = loglik(th, sample);
    res.certificate = certify(th, sample, config);
    res.converged = !capped && res.certificate.passed;
    return res;
}

}  // namespace shapemle
