#include "shapemle/objective.hpp"

#include <cmath>
#include <limits>

#include "shapemle/special_functions.hpp"

namespace shapemle {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Interval moment of the reference measure over [a, b] with theta linear
// from va to vb. For the Lebesgue reference the unit-interval moments are
// scaled by the length, matching the gradient/Hessian formulas.
FlaggedValue seg(const Setting& s, double va, double vb, double a, double b, JOrder o) {
    switch (s.kind) {
        case SettingKind::LogConcave: return {(b - a) * j1(va, vb, o), false};
        case SettingKind::TailInflationGauss: return gauss_j(va, vb, a, b, o);
        case SettingKind::TailInflationGamma: return gamma_j(s.alpha, va, vb, a, b, o);
    }
    return {0.0, false};
}

// Right-tail moment from c, theta(c) = v with slope q. +inf when not
// integrable (Gamma with q >= 1).
double rtail(const Setting& s, double v, double q, double c, int ell) {
    if (s.kind == SettingKind::TailInflationGauss) return gauss_k(v, q, c, ell);
    return gamma_k(s.alpha, v, q, c, ell);
}

// Left-tail moment: integral over (-inf, c] of (c - x)^ell e^theta phi,
// theta(c) = v with slope q left of c (Gauss only).
double ltail(double v, double q, double c, int ell) { return gauss_k(v, -q, -c, ell); }

Evaluation infeasible_eval(Eigen::Index dim) {
    Evaluation ev;
    ev.feasible = false;
    ev.exact = false;
    ev.grad = Eigen::VectorXd::Zero(dim);
    ev.neg_hessian.diag = Eigen::VectorXd::Zero(dim);
    ev.neg_hessian.off = Eigen::VectorXd::Zero(std::max<Eigen::Index>(dim - 1, 0));
    return ev;
}

double weighted_sum(const Model& model, const WeightedSample& sample) {
    double tot = 0.0;
    for (std::size_t i = 0; i < sample.n(); ++i) {
        double v = model(sample.point(i));
        if (!std::isfinite(v)) return -kInf;
        tot += sample.weight(i) * v;
    }
    return tot;
}

struct SegSet {
    double J = 0, J10 = 0, J01 = 0, J20 = 0, J11 = 0, J02 = 0;
    bool exact = true;
};

SegSet seg_all(const Setting& s, double va, double vb, double a, double b) {
    SegSet out;
    auto get = [&](JOrder o) {
        FlaggedValue v = seg(s, va, vb, a, b, o);
        out.exact = out.exact && !v.is_bound;
        return v.value;
    };
    out.J = get(JOrder::J);
    out.J10 = get(JOrder::J10);
    out.J01 = get(JOrder::J01);
    out.J20 = get(JOrder::J20);
    out.J11 = get(JOrder::J11);
    out.J02 = get(JOrder::J02);
    return out;
}

Evaluation eval_impl(const Model& model, const WeightedSample& sample) {
    const Setting& s = model.setting();
    const std::vector<double>& tau = model.tau();
    std::size_t m = tau.size();
    Eigen::Index dim = model.dim();

    Evaluation ev = infeasible_eval(dim);
    double wth = weighted_sum(model, sample);
    if (wth == -kInf) return ev;
    Eigen::VectorXd wt = model.collapsed_weights(sample);
    Eigen::VectorXd& g = ev.grad;
    Eigen::VectorXd& d = ev.neg_hessian.diag;
    Eigen::VectorXd& e = ev.neg_hessian.off;

    if (m == 0) {
        if (s.kind == SettingKind::TailInflationGauss) {
            double c0 = model.coef()[0], c1 = model.coef()[1];
            double le = c0 + 0.5 * c1 * c1;
            if (le > 700.0) return ev;
            double I = std::exp(le);
            ev.loglik = wth - I + 1.0;
            g << wt[0] - I, wt[1] - I * c1;
            d << I, I * (1.0 + c1 * c1);
            e << I * c1;
        } else {
            double c = model.coef()[0];
            if (c > 700.0) return ev;
            double I = std::exp(c);
            ev.loglik = wth - I + 1.0;
            g << wt[0] - I;
            d << I;
        }
        ev.feasible = true;
        ev.exact = true;
        return ev;
    }

    bool exact = true;
    double integral = 0.0;

    // Interior segments.
    std::vector<SegSet> segs(m > 0 ? m - 1 : 0);
    for (std::size_t k = 0; k + 1 < m; ++k) {
        segs[k] = seg_all(s, model.value_at(k), model.value_at(k + 1), tau[k], tau[k + 1]);
        exact = exact && segs[k].exact;
        integral += segs[k].J;
    }

    switch (s.kind) {
        case SettingKind::LogConcave: {
            for (std::size_t j = 0; j < m; ++j) {
                Eigen::Index J = static_cast<Eigen::Index>(j);
                g[J] = wt[J];
                d[J] = 0.0;
                if (j + 1 < m) {
                    g[J] -= segs[j].J10;
                    d[J] += segs[j].J20;
                    e[J] = segs[j].J11;
                }
                if (j > 0) {
                    g[J] -= segs[j - 1].J01;
                    d[J] += segs[j - 1].J02;
                }
            }
            break;
        }
        case SettingKind::TailInflationGauss: {
            double sl = model.coef()[0], sr = model.coef()[dim - 1];
            double KL0 = ltail(model.value_at(0), sl, tau.front(), 0);
            double KL1 = ltail(model.value_at(0), sl, tau.front(), 1);
            double KL2 = ltail(model.value_at(0), sl, tau.front(), 2);
            double KR0 = rtail(s, model.value_at(m - 1), sr, tau.back(), 0);
            double KR1 = rtail(s, model.value_at(m - 1), sr, tau.back(), 1);
            double KR2 = rtail(s, model.value_at(m - 1), sr, tau.back(), 2);
            integral += KL0 + KR0;
            Eigen::Index M = static_cast<Eigen::Index>(m);
            g[0] = wt[0] + KL1;
            d[0] = KL2;
            e[0] = -KL1;
            for (std::size_t j = 1; j <= m; ++j) {
                Eigen::Index J = static_cast<Eigen::Index>(j);
                g[J] = wt[J];
                d[J] = 0.0;
                if (j == 1) {
                    g[J] -= KL0;
                    d[J] += KL0;
                } else {
                    g[J] -= segs[j - 2].J01;
                    d[J] += segs[j - 2].J02;
                }
                if (j == m) {
                    g[J] -= KR0;
                    d[J] += KR0;
                    e[J] = KR1;
                } else {
                    g[J] -= segs[j - 1].J10;
                    d[J] += segs[j - 1].J20;
                    e[J] = segs[j - 1].J11;
                }
            }
            g[M + 1] = wt[M + 1] - KR1;
            d[M + 1] = KR2;
            break;
        }
        case SettingKind::TailInflationGamma: {
            double sr = model.coef()[dim - 1];
            double KR0 = rtail(s, model.value_at(m - 1), sr, tau.back(), 0);
            if (std::isinf(KR0)) return ev;
            double KR1 = rtail(s, model.value_at(m - 1), sr, tau.back(), 1);
            double KR2 = rtail(s, model.value_at(m - 1), sr, tau.back(), 2);
            double G0 = 0.0;
            if (tau.front() > 0.0)
                G0 = seg(s, model.value_at(0), model.value_at(0), 0.0, tau.front(), JOrder::J);
            integral += G0 + KR0;
            Eigen::Index M = static_cast<Eigen::Index>(m);
            for (std::size_t j = 0; j < m; ++j) {
                Eigen::Index J = static_cast<Eigen::Index>(j);
                g[J] = wt[J];
                d[J] = 0.0;
                if (j == 0) {
                    g[J] -= G0;
                    d[J] += G0;
                } else {
                    g[J] -= segs[j - 1].J01;
                    d[J] += segs[j - 1].J02;
                }
                if (j + 1 == m) {
                    g[J] -= KR0;
                    d[J] += KR0;
                    e[J] = KR1;
                } else {
                    g[J] -= segs[j].J10;
                    d[J] += segs[j].J20;
                    e[J] = segs[j].J11;
                }
            }
            g[M] = wt[M] - KR1;
            d[M] = KR2;
            break;
        }
    }

    if (!std::isfinite(integral)) return ev;
    ev.loglik = wth - integral + 1.0;
    ev.feasible = true;
    ev.exact = exact;
    return ev;
}

}  // namespace

Evaluation eval_full(const Model& model, const WeightedSample& sample) {
    try {
        return eval_impl(model, sample);
    } catch (const OverflowError&) {
        return infeasible_eval(model.dim());
    }
}

double loglik(const Model& model, const WeightedSample& sample) {
    try {
        double wth = weighted_sum(model, sample);
        if (wth == -kInf) return -kInf;
        double I = density_integral(model);
        if (!std::isfinite(I)) return -kInf;
        return wth - I + 1.0;
    } catch (const OverflowError&) {
        return -kInf;
    }
}

double density_integral(const Model& model) {
    const Setting& s = model.setting();
    double tot = 0.0;
    for (const Model::Piece& p : model.pieces()) {
        if (std::isinf(p.hi)) {
            tot += rtail(s, p.value_lo, p.slope, p.lo, 0);
        } else if (std::isinf(p.lo)) {
            tot += ltail(p.value_lo + p.slope * (p.hi - p.anchor), p.slope, p.hi, 0);
        } else {
            double va = p.value_lo + p.slope * (p.lo - p.anchor);
            double vb = p.value_lo + p.slope * (p.hi - p.anchor);
            tot += seg(s, va, vb, p.lo, p.hi, JOrder::J).value;
        }
    }
    return tot;
}

double mean_integral(const Model& model) {
    const Setting& s = model.setting();
    double tot = 0.0;
    for (const Model::Piece& p : model.pieces()) {
        if (std::isinf(p.hi)) {
            double K0 = rtail(s, p.value_lo, p.slope, p.lo, 0);
            double K1 = rtail(s, p.value_lo, p.slope, p.lo, 1);
            tot += p.lo * K0 + K1;
        } else if (std::isinf(p.lo)) {
            double vc = p.value_lo + p.slope * (p.hi - p.anchor);
            tot += p.hi * ltail(vc, p.slope, p.hi, 0) - ltail(vc, p.slope, p.hi, 1);
        } else {
            double va = p.value_lo + p.slope * (p.lo - p.anchor);
            double vb = p.value_lo + p.slope * (p.hi - p.anchor);
            double I0 = seg(s, va, vb, p.lo, p.hi, JOrder::J).value;
            double I1 = (p.hi - p.lo) * seg(s, va, vb, p.lo, p.hi, JOrder::J01).value;
            tot += p.lo * I0 + I1;
        }
    }
    return tot;
}

double dl_simple_kink(const Model& model, const WeightedSample& sample, double tau) {
    const Setting& s = model.setting();
    double plus_model = 0.0;
    for (const Model::Piece& p : model.pieces()) {
        if (!std::isinf(p.hi) && p.hi <= tau) continue;
        if (std::isinf(p.hi)) {
            double c = std::max(p.lo, tau);
            double vc = p.value_lo + p.slope * (c - p.anchor);
            plus_model += (c - tau) * rtail(s, vc, p.slope, c, 0) + rtail(s, vc, p.slope, c, 1);
            continue;
        }
        double a = std::isinf(p.lo) ? tau : std::max(p.lo, tau);
        if (std::isinf(p.lo) && tau >= p.hi) continue;
        double b = p.hi;
        if (!(a < b)) continue;
        double va = p.value_lo + p.slope * (a - p.anchor);
        double vb = p.value_lo + p.slope * (b - p.anchor);
        double I0 = seg(s, va, vb, a, b, JOrder::J).value;
        double I1 = (b - a) * seg(s, va, vb, a, b, JOrder::J01).value;
        plus_model += (a - tau) * I0 + I1;
    }
    return s.xi() * (sample.plus_moment(tau) - plus_model);
}

namespace {

// sum of w_i (x_i - lo) over lo < x_i <= hi
double ramp_sum(const WeightedSample& sample, double lo, double hi) {
    return sample.first_moment(lo, hi) - lo * sample.mass(lo, hi);
}

// sum of w_i (hi - x_i) over lo < x_i <= hi
double ramp_sum_rev(const WeightedSample& sample, double lo, double hi) {
    return hi * sample.mass(lo, hi) - sample.first_moment(lo, hi);
}

KinkScore h_log_concave(const Model& model, const WeightedSample& sample, double tau) {
    const std::vector<double>& t = model.tau();
    if (tau <= t.front() || tau >= t.back()) return {0.0, 0.0};
    auto it = std::upper_bound(t.begin(), t.end(), tau);
    std::size_t j = static_cast<std::size_t>(it - t.begin()) - 1;
    if (tau == t[j]) return {0.0, 0.0};
    double a = t[j], b = t[j + 1], del = b - a;
    double va = model.value_at(j), vb = model.value_at(j + 1);
    double vs = ((b - tau) * va + (tau - a) * vb) / del;
    double emp = (b - tau) / del * ramp_sum(sample, a, tau) +
                 (tau - a) / del * ramp_sum_rev(sample, tau, b);
    double h = emp -
               (tau - a) * (tau - a) * (b - tau) / del * j1(vs, va, JOrder::J10) -
               (tau - a) * (b - tau) * (b - tau) / del * j1(vs, vb, JOrder::J10);
    return {h, 0.0};
}

}  // namespace

KinkScore h_localized(const Model& model, const WeightedSample& sample, double tau,
                      bool left_limit) {
    const Setting& s = model.setting();
    if (s.kind == SettingKind::LogConcave) return h_log_concave(model, sample, tau);
    if (s.kind == SettingKind::TailInflationGamma && tau < 0.0)
        throw InvalidInput("h_localized: tau must be nonnegative");

    const std::vector<double>& t = model.tau();
    std::size_t m = t.size();
    KinkScore out;
    if (m == 0) {
        // V_{tau,theta} = (x - tau)^+
        double v = model(tau);
        double q = s.kind == SettingKind::TailInflationGauss ? model.coef()[1] : 0.0;
        out.h = sample.plus_moment(tau) - rtail(s, v, q, tau, 1);
        out.hprime = rtail(s, v, q, tau, 0) - (1.0 - sample.cdf(tau));
    } else if (tau < t.front() || (left_limit && tau == t.front())) {
        double t1 = t.front(), v1 = model.value_at(0);
        double vs = model(tau);
        if (s.kind == SettingKind::TailInflationGauss) {
            double sl = model.coef()[0];
            out.hprime = sample.cdf(tau) - ltail(vs, sl, tau, 0);
            double J10v = tau < t1 ? seg(s, vs, v1, tau, t1, JOrder::J10).value : 0.0;
            out.h = (tau - t1) * (out.hprime - J10v) - ramp_sum_rev(sample, tau, t1);
        } else {
            double E = std::exp(v1);
            out.hprime = sample.cdf(tau) - E * gamma_p(s.alpha, tau);
            out.h = (tau - t1) * out.hprime +
                    E * (t1 * gamma_g(s.alpha, tau, t1) -
                         s.alpha * gamma_g(s.alpha + 1.0, tau, t1)) -
                    ramp_sum_rev(sample, tau, t1);
        }
    } else if (tau >= t.back() && !(left_limit && tau == t.back())) {
        double tm = t.back(), vm = model.value_at(m - 1);
        double sr = model.coef()[model.dim() - 1];
        double vs = vm + (tau - tm) * sr;
        out.hprime = rtail(s, vs, sr, tau, 0) - (1.0 - sample.cdf(tau));
        double J01v = tau > tm ? seg(s, vm, vs, tm, tau, JOrder::J01).value : 0.0;
        out.h = (tau - tm) * (out.hprime + J01v) - ramp_sum(sample, tm, tau);
    } else {
        // For a left limit at an active knot use the region to its left.
        auto it = left_limit ? std::lower_bound(t.begin(), t.end(), tau)
                             : std::upper_bound(t.begin(), t.end(), tau);
        std::size_t j = static_cast<std::size_t>(it - t.begin()) - 1;
        double a = t[j], b = t[j + 1];
        double va = model.value_at(j), vb = model.value_at(j + 1);
        double vs = model(tau);
        double cst = -ramp_sum_rev(sample, a, b) / (b - a) +
                     seg(s, va, vb, a, b, JOrder::J10).value;
        double Jmove = tau > a ? seg(s, va, vs, a, tau, JOrder::J).value : 0.0;
        out.hprime = sample.mass(a, tau) + cst - Jmove;
        double J01v = tau > a ? seg(s, va, vs, a, tau, JOrder::J01).value : 0.0;
        out.h = (tau - a) * (out.hprime + J01v) - ramp_sum(sample, a, tau);
    }
    if (left_limit) out.hprime -= sample.cdf(tau) - sample.cdf_left(tau);
    return out;
}

double v2_integral(const Model& model, double tau) {
    const Setting& s = model.setting();
    const std::vector<double>& t = model.tau();
    std::size_t m = t.size();
    if (s.kind == SettingKind::LogConcave) {
        if (tau <= t.front() || tau >= t.back()) return 0.0;
        auto it = std::upper_bound(t.begin(), t.end(), tau);
        std::size_t j = static_cast<std::size_t>(it - t.begin()) - 1;
        if (tau == t[j]) return 0.0;
        double a = t[j], b = t[j + 1], del = b - a;
        double va = model.value_at(j), vb = model.value_at(j + 1);
        double vs = model(tau);
        double c = (tau - a) * (b - tau) / del;
        return c * c * (seg(s, va, vs, a, tau, JOrder::J02).value +
                        seg(s, vs, vb, tau, b, JOrder::J20).value);
    }
    if (m == 0) {
        if (s.kind == SettingKind::TailInflationGauss)
            return rtail(s, model(tau), model.coef()[1], tau, 2);
        return rtail(s, model.coef()[0], 0.0, tau, 2);
    }
    if (tau < t.front()) {
        double t1 = t.front(), v1 = model.value_at(0);
        double vs = model(tau);
        double c = tau - t1;
        double K0;
        if (s.kind == SettingKind::TailInflationGauss)
            K0 = ltail(vs, model.coef()[0], tau, 0);
        else
            K0 = std::exp(v1) * gamma_p(s.alpha, tau);
        double J20v = tau < t1 ? seg(s, vs, v1, tau, t1, JOrder::J20).value : 0.0;
        return c * c * (K0 + J20v);
    }
    if (tau >= t.back()) {
        double tm = t.back(), vm = model.value_at(m - 1);
        double sr = model.coef()[model.dim() - 1];
        double vs = vm + (tau - tm) * sr;
        double c = tau - tm;
        double J02v = tau > tm ? seg(s, vm, vs, tm, tau, JOrder::J02).value : 0.0;
        return c * c * (J02v + rtail(s, vs, sr, tau, 0));
    }
    auto it = std::upper_bound(t.begin(), t.end(), tau);
    std::size_t j = static_cast<std::size_t>(it - t.begin()) - 1;
    double a = t[j], b = t[j + 1], del = b - a;
    if (tau == a) return 0.0;
    double va = model.value_at(j), vb = model.value_at(j + 1);
    double vs = model(tau);
    double c = (tau - a) * (b - tau) / del;
    return c * c * (seg(s, va, vs, a, tau, JOrder::J02).value +
                    seg(s, vs, vb, tau, b, JOrder::J20).value);
}

}  // namespace shapemle
