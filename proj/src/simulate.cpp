#include "shapemle/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "shapemle/errors.hpp"
#include "shapemle/special_functions.hpp"

namespace shapemle {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream)
    : key_(mix64(mix64(seed + 0x9E3779B97F4A7C15ull) ^
                 (stream * 0xD1B54A32D192ED03ull + 0x8CB92BA72F3D8DD7ull))) {}

std::uint64_t RngStream::next_u64() {
    counter_ += 0x9E3779B97F4A7C15ull;
    return mix64(key_ + counter_);
}

double RngStream::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53 + 0x1.0p-54;
}

double RngStream::normal() {
    // Leva's ratio-of-uniforms with quadratic squeeze bounds.
    for (;;) {
        double u = uniform();
        double v = 1.7156 * (uniform() - 0.5);
        double x = u - 0.449871;
        double y = std::fabs(v) + 0.386595;
        double q = x * x + y * (0.19600 * y - 0.25472 * x);
        if (q < 0.27597) return v / u;
        if (q <= 0.27846 && v * v <= -4.0 * u * u * std::log(u)) return v / u;
    }
}

double RngStream::gamma(double shape, double rate) {
    if (!(shape > 0.0) || !(rate > 0.0))
        throw InvalidInput("RngStream::gamma: shape and rate must be positive");
    if (shape < 1.0) {
        // Boost a Gamma(shape + 1) draw down by U^{1/shape}.
        double boost = std::pow(uniform(), 1.0 / shape);
        return gamma(shape + 1.0, rate) * boost;
    }
    double d = shape - 1.0 / 3.0;
    double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        double u = uniform();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v / rate;
    }
}

namespace {

// Gamma models with rate beta != 1 are handled in the unit-rate scale
// (x -> beta x leaves the values unchanged and divides the tail slope by
// beta), where the special functions live.
Model gamma_to_unit_scale(const Model& th) {
    const Setting& s = th.setting();
    if (s.beta == 1.0) return th;
    std::vector<double> tu(th.tau());
    for (double& t : tu) t *= s.beta;
    Eigen::VectorXd c = th.coef();
    if (th.m() > 0) c[c.size() - 1] /= s.beta;
    return Model(Setting::tail_gamma(s.alpha, 1.0), std::move(tu), std::move(c));
}

// Mass of e^theta dM restricted to piece p and (-inf, t]; t is clamped to the
// piece. M is Lebesgue / N(0,1) / Gamma(alpha,1) by the model's setting.
double piece_mass_below(const Model& th, const Model::Piece& p, double t) {
    t = std::min(t, p.hi);
    if (t <= p.lo) return 0.0;
    switch (th.setting().kind) {
        case SettingKind::LogConcave: {
            double len = t - p.lo;
            double s = p.slope;
            if (std::fabs(s) * len < 1e-12)
                return std::exp(p.value_lo + 0.5 * s * len) * len;
            return std::exp(p.value_lo) * std::expm1(s * len) / s;
        }
        case SettingKind::TailInflationGauss: {
            if (t == kInf) return gauss_k(p.value_lo, p.slope, p.lo, 0);
            double vt = p.value_lo + p.slope * (t - p.anchor);
            double below_t = gauss_k(vt, -p.slope, -t, 0);
            if (p.lo == -kInf) return below_t;
            double vlo = p.value_lo + p.slope * (p.lo - p.anchor);
            return below_t - gauss_k(vlo, -p.slope, -p.lo, 0);
        }
        case SettingKind::TailInflationGamma: {
            // Anchored at p.lo = p.anchor; unit rate assumed by the caller.
            double above_lo = gamma_k(th.setting().alpha, p.value_lo, p.slope, p.lo, 0);
            if (t == kInf) return above_lo;
            double vt = p.value_lo + p.slope * (t - p.anchor);
            return above_lo - gamma_k(th.setting().alpha, vt, p.slope, t, 0);
        }
    }
    return 0.0;  // unreachable
}

struct PieceTable {
    std::vector<Model::Piece> pieces;
    std::vector<double> cum;  // cumulative piece masses
    double total = 0.0;
};

PieceTable tabulate(const Model& th) {
    PieceTable tab;
    tab.pieces = th.pieces();
    tab.cum.reserve(tab.pieces.size());
    for (const Model::Piece& p : tab.pieces) {
        tab.total += piece_mass_below(th, p, p.hi);
        tab.cum.push_back(tab.total);
    }
    if (!(tab.total > 0.0) || !std::isfinite(tab.total))
        throw NonIntegrable("model density has non-finite total mass");
    return tab;
}

// Monotone bisection for tau in piece p with piece_mass_below(th, p, tau) = r.
double bisect_piece(const Model& th, const Model::Piece& p, double r) {
    double lo = p.lo, hi = p.hi;
    if (lo == -kInf) {
        lo = p.anchor - 1.0;
        double span = 1.0;
        while (piece_mass_below(th, p, lo) > r && span < 1e12) {
            span *= 2.0;
            lo = p.anchor - span;
        }
    }
    if (hi == kInf) {
        hi = p.anchor + 1.0;
        double span = 1.0;
        while (piece_mass_below(th, p, hi) < r && span < 1e12) {
            span *= 2.0;
            hi = p.anchor + span;
        }
    }
    for (int it = 0; it < 200 && hi - lo > 1e-14 * (1.0 + std::fabs(lo)); ++it) {
        double mid = 0.5 * (lo + hi);
        (piece_mass_below(th, p, mid) < r ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// tau in piece p with piece_mass_below(th, p, tau) = r, 0 < r < piece mass.
double invert_piece(const Model& th, const Model::Piece& p, double r) {
    switch (th.setting().kind) {
        case SettingKind::LogConcave: {
            double s = p.slope;
            double x = r * std::exp(-p.value_lo);
            double len = (std::fabs(s) * (p.hi - p.lo) < 1e-12) ? x : std::log1p(x * s) / s;
            return std::min(p.lo + len, p.hi);
        }
        case SettingKind::TailInflationGauss: {
            if (p.lo == -kInf) {
                if (auto t = invert_gauss(GaussInvertKind::LeftTail, p.value_lo, p.slope,
                                          p.anchor, r))
                    return *t;
                return bisect_piece(th, p, r);
            }
            double c = gauss_k(p.value_lo, p.slope, p.lo, 0) - r;
            if (c > 0.0)
                if (auto t = invert_gauss(GaussInvertKind::RightTail, p.value_lo, p.slope,
                                          p.anchor, c))
                    return *t;
            return bisect_piece(th, p, r);
        }
        case SettingKind::TailInflationGamma: {
            double alpha = th.setting().alpha;
            double c = gamma_k(alpha, p.value_lo, p.slope, p.lo, 0) - r;
            if (c > 0.0)
                if (auto t = invert_gamma(GammaInvertKind::Tail, alpha, p.value_lo, p.slope,
                                          p.anchor, c))
                    return *t;
            return bisect_piece(th, p, r);
        }
    }
    return p.anchor;  // unreachable
}

double draw_inverse_cdf(const Model& th, const PieceTable& tab, double u) {
    double target = u * tab.total;
    std::size_t k = static_cast<std::size_t>(
        std::lower_bound(tab.cum.begin(), tab.cum.end(), target) - tab.cum.begin());
    if (k >= tab.pieces.size()) k = tab.pieces.size() - 1;
    double r = target - (k == 0 ? 0.0 : tab.cum[k - 1]);
    return invert_piece(th, tab.pieces[k], r);
}

void require_kind(const Model& th, SettingKind kind, const char* who) {
    if (th.setting().kind != kind)
        throw InvalidInput(std::string(who) + ": model has the wrong setting");
}

}  // namespace

double model_cdf(const Model& theta, double x) {
    Model th = theta.setting().kind == SettingKind::TailInflationGamma
                   ? gamma_to_unit_scale(theta)
                   : theta;
    if (theta.setting().kind == SettingKind::TailInflationGamma) x *= theta.setting().beta;
    PieceTable tab = tabulate(th);
    double below = 0.0;
    for (const Model::Piece& p : tab.pieces) {
        if (x <= p.lo) break;
        below += piece_mass_below(th, p, x);
    }
    return std::clamp(below / tab.total, 0.0, 1.0);
}

std::vector<double> gauss_sample(std::size_t n, double mu, double sigma, RngStream& rng) {
    if (!(sigma > 0.0)) throw InvalidInput("gauss_sample: sigma must be positive");
    std::vector<double> out(n);
    for (double& x : out) x = mu + sigma * rng.normal();
    return out;
}

std::vector<double> sample_piecewise_logaffine(std::size_t n, const Model& theta,
                                               RngStream& rng) {
    require_kind(theta, SettingKind::LogConcave, "sample_piecewise_logaffine");
    PieceTable tab = tabulate(theta);
    std::vector<double> out(n);
    for (double& x : out) x = draw_inverse_cdf(theta, tab, rng.uniform());
    return out;
}

std::vector<double> simulate_2a(std::size_t n, const Model& theta, RngStream& rng) {
    require_kind(theta, SettingKind::TailInflationGauss, "simulate_2a");
    PieceTable tab = tabulate(theta);
    std::vector<double> out(n);
    for (double& x : out) x = draw_inverse_cdf(theta, tab, rng.uniform());
    return out;
}

std::vector<double> simulate_2b(std::size_t n, const Model& theta, RngStream& rng,
                                std::int64_t* proposals) {
    require_kind(theta, SettingKind::TailInflationGamma, "simulate_2b");
    double alpha = theta.setting().alpha;
    double beta = theta.setting().beta;
    double slope = theta.pieces().back().slope;
    if (!(slope < beta))
        throw InvalidEnvelope("simulate_2b: limiting slope of theta must be below the rate");
    double theta0 = theta(0.0);
    std::vector<double> out;
    out.reserve(n);
    std::int64_t count = 0;
    while (out.size() < n) {
        double y = rng.gamma(alpha, beta - slope);
        double u = rng.uniform();
        ++count;
        if (std::log(u) <= theta(y) - theta0 - slope * y) out.push_back(y);
    }
    if (proposals) *proposals = count;
    return out;
}

}  // namespace shapemle
