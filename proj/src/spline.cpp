#include "shapemle/spline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace shapemle {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

Model::Model(Setting setting, std::vector<double> tau, Eigen::VectorXd coef)
    : setting_(setting), tau_(std::move(tau)), coef_(std::move(coef)) {
    for (std::size_t j = 0; j < tau_.size(); ++j) {
        if (!std::isfinite(tau_[j])) throw InvalidInput("Model: non-finite knot");
        if (j > 0 && !(tau_[j] > tau_[j - 1]))
            throw InvalidInput("Model: knots must be strictly increasing");
    }
    for (Eigen::Index i = 0; i < coef_.size(); ++i)
        if (!std::isfinite(coef_[i])) throw InvalidInput("Model: non-finite coefficient");
    std::size_t m = tau_.size();
    switch (setting_.kind) {
        case SettingKind::LogConcave:
            if (m < 2) throw InvalidInput("Model: LogConcave needs at least 2 knots");
            if (coef_.size() != static_cast<Eigen::Index>(m))
                throw InvalidInput("Model: coefficient dimension must equal m");
            break;
        case SettingKind::TailInflationGauss:
            if (coef_.size() != static_cast<Eigen::Index>(m == 0 ? 2 : m + 2))
                throw InvalidInput("Model: coefficient dimension must be m + 2");
            break;
        case SettingKind::TailInflationGamma:
            if (!tau_.empty() && tau_.front() < 0.0)
                throw InvalidInput("Model: Gamma knots must be nonnegative");
            if (coef_.size() != static_cast<Eigen::Index>(m == 0 ? 1 : m + 1))
                throw InvalidInput("Model: coefficient dimension must be m + 1");
            break;
    }
}

double Model::value_at(std::size_t j) const {
    switch (setting_.kind) {
        case SettingKind::LogConcave: return coef_[static_cast<Eigen::Index>(j)];
        case SettingKind::TailInflationGauss: return coef_[static_cast<Eigen::Index>(j) + 1];
        case SettingKind::TailInflationGamma: return coef_[static_cast<Eigen::Index>(j)];
    }
    return 0.0;
}

double Model::slope_right(std::size_t j) const {
    std::size_t m = tau_.size();
    if (j + 1 < m) return (value_at(j + 1) - value_at(j)) / (tau_[j + 1] - tau_[j]);
    switch (setting_.kind) {
        case SettingKind::LogConcave: return -kInf;
        case SettingKind::TailInflationGauss: return coef_[coef_.size() - 1];
        case SettingKind::TailInflationGamma: return coef_[coef_.size() - 1];
    }
    return 0.0;
}

double Model::slope_left(std::size_t j) const {
    if (j > 0) return (value_at(j) - value_at(j - 1)) / (tau_[j] - tau_[j - 1]);
    switch (setting_.kind) {
        case SettingKind::LogConcave: return kInf;
        case SettingKind::TailInflationGauss: return coef_[0];
        case SettingKind::TailInflationGamma: return 0.0;  // constant left of tau_1
    }
    return 0.0;
}

double Model::operator()(double x) const {
    std::size_t m = tau_.size();
    if (setting_.kind == SettingKind::TailInflationGamma && x < 0.0) return -kInf;
    if (m == 0) {
        if (setting_.kind == SettingKind::TailInflationGauss) return coef_[0] + coef_[1] * x;
        return coef_[0];
    }
    if (x <= tau_.front()) {
        if (setting_.kind == SettingKind::LogConcave)
            return x == tau_.front() ? coef_[0] : -kInf;
        return value_at(0) + slope_left(0) * (x - tau_.front());
    }
    if (x >= tau_.back()) {
        if (setting_.kind == SettingKind::LogConcave)
            return x == tau_.back() ? value_at(m - 1) : -kInf;
        return value_at(m - 1) + slope_right(m - 1) * (x - tau_.back());
    }
    auto it = std::upper_bound(tau_.begin(), tau_.end(), x);
    std::size_t j = static_cast<std::size_t>(it - tau_.begin()) - 1;
    double t = (x - tau_[j]) / (tau_[j + 1] - tau_[j]);
    return (1.0 - t) * value_at(j) + t * value_at(j + 1);
}

std::vector<std::size_t> Model::beta_knots() const {
    std::vector<std::size_t> idx;
    std::size_t m = tau_.size();
    if (setting_.kind == SettingKind::LogConcave) {
        for (std::size_t j = 1; j + 1 < m; ++j) idx.push_back(j);
    } else {
        for (std::size_t j = 0; j < m; ++j) idx.push_back(j);
    }
    return idx;
}

std::vector<double> Model::betas() const {
    std::vector<double> out;
    for (std::size_t j : beta_knots())
        out.push_back(setting_.xi() * (slope_right(j) - slope_left(j)));
    return out;
}

std::vector<Model::Piece> Model::pieces() const {
    std::vector<Piece> out;
    std::size_t m = tau_.size();
    if (m == 0) {
        if (setting_.kind == SettingKind::TailInflationGauss) {
            out.push_back({-kInf, 0.0, coef_[0], coef_[1], 0.0});
            out.push_back({0.0, kInf, coef_[0], coef_[1], 0.0});
        } else {
            out.push_back({0.0, kInf, coef_[0], 0.0, 0.0});
        }
        return out;
    }
    if (setting_.kind == SettingKind::TailInflationGauss)
        out.push_back({-kInf, tau_.front(), value_at(0), slope_left(0), tau_.front()});
    else if (setting_.kind == SettingKind::TailInflationGamma && tau_.front() > 0.0)
        out.push_back({0.0, tau_.front(), value_at(0), 0.0, 0.0});
    for (std::size_t j = 0; j + 1 < m; ++j)
        out.push_back({tau_[j], tau_[j + 1], value_at(j), slope_right(j), tau_[j]});
    if (setting_.kind != SettingKind::LogConcave)
        out.push_back({tau_.back(), kInf, value_at(m - 1), slope_right(m - 1), tau_.back()});
    return out;
}

Model Model::insert_knot(double t) const {
    if (!std::isfinite(t)) throw InvalidInput("insert_knot: non-finite location");
    auto it = std::lower_bound(tau_.begin(), tau_.end(), t);
    if (it != tau_.end() && *it == t) throw InvalidInput("insert_knot: knot already active");
    std::size_t pos = static_cast<std::size_t>(it - tau_.begin());
    std::size_t m = tau_.size();
    if (setting_.kind == SettingKind::LogConcave && (pos == 0 || pos == m))
        throw InvalidInput("insert_knot: LogConcave knots must be interior");
    if (setting_.kind == SettingKind::TailInflationGamma && t < 0.0)
        throw InvalidInput("insert_knot: Gamma knots must be nonnegative");

    std::vector<double> ntau(tau_);
    ntau.insert(ntau.begin() + static_cast<std::ptrdiff_t>(pos), t);

    if (m == 0) {
        if (setting_.kind == SettingKind::TailInflationGauss) {
            Eigen::VectorXd c(3);
            c << coef_[1], coef_[0] + coef_[1] * t, coef_[1];
            return Model(setting_, std::move(ntau), std::move(c));
        }
        Eigen::VectorXd c(2);
        c << coef_[0], 0.0;
        return Model(setting_, std::move(ntau), std::move(c));
    }
    // Value entries start at offset 1 for Gauss, 0 otherwise.
    Eigen::Index off = setting_.kind == SettingKind::TailInflationGauss ? 1 : 0;
    double v = t < tau_.front()   ? value_at(0) + slope_left(0) * (t - tau_.front())
               : t > tau_.back()  ? value_at(m - 1) + slope_right(m - 1) * (t - tau_.back())
                                  : (*this)(t);
    Eigen::VectorXd c(coef_.size() + 1);
    Eigen::Index ins = off + static_cast<Eigen::Index>(pos);
    c.head(ins) = coef_.head(ins);
    c[ins] = v;
    c.tail(coef_.size() - ins) = coef_.tail(coef_.size() - ins);
    return Model(setting_, std::move(ntau), std::move(c));
}

Model Model::remove_knot(std::size_t j) const {
    std::size_t m = tau_.size();
    if (j >= m) throw InvalidInput("remove_knot: index out of range");
    if (setting_.kind == SettingKind::LogConcave) {
        if (m <= 2) throw InvalidInput("remove_knot: LogConcave needs 2 knots");
        if (j == 0 || j == m - 1)
            throw InvalidInput("remove_knot: boundary knots are fixed");
    }
    std::vector<double> ntau(tau_);
    ntau.erase(ntau.begin() + static_cast<std::ptrdiff_t>(j));
    if (m == 1) {
        if (setting_.kind == SettingKind::TailInflationGauss) {
            // Keep the right slope; at a zero kink both slopes agree.
            Eigen::VectorXd c(2);
            c << coef_[1] - coef_[2] * tau_[0], coef_[2];
            return Model(setting_, std::move(ntau), std::move(c));
        }
        Eigen::VectorXd c(1);
        c << coef_[0];
        return Model(setting_, std::move(ntau), std::move(c));
    }
    Eigen::Index off = setting_.kind == SettingKind::TailInflationGauss ? 1 : 0;
    Eigen::Index del = off + static_cast<Eigen::Index>(j);
    Eigen::VectorXd c(coef_.size() - 1);
    c.head(del) = coef_.head(del);
    c.tail(coef_.size() - 1 - del) = coef_.tail(coef_.size() - 1 - del);
    return Model(setting_, std::move(ntau), std::move(c));
}

Model Model::blend(const Model& a, const Model& b, double t) {
    if (a.setting_ != b.setting_ || a.tau_ != b.tau_)
        throw InvalidInput("blend: models must share setting and knots");
    return Model(a.setting_, a.tau_, (1.0 - t) * a.coef_ + t * b.coef_);
}

Eigen::VectorXd Model::shift_direction() const {
    Eigen::VectorXd d = Eigen::VectorXd::Zero(coef_.size());
    std::size_t m = tau_.size();
    switch (setting_.kind) {
        case SettingKind::LogConcave:
            d.setOnes();
            break;
        case SettingKind::TailInflationGauss:
            if (m == 0)
                d[0] = 1.0;
            else
                d.segment(1, static_cast<Eigen::Index>(m)).setOnes();
            break;
        case SettingKind::TailInflationGamma:
            if (m == 0)
                d[0] = 1.0;
            else
                d.head(static_cast<Eigen::Index>(m)).setOnes();
            break;
    }
    return d;
}

Eigen::VectorXd Model::collapsed_weights(const WeightedSample& sample) const {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(coef_.size());
    std::size_t m = tau_.size();
    Eigen::Index off = setting_.kind == SettingKind::TailInflationGauss ? 1 : 0;
    for (std::size_t i = 0; i < sample.n(); ++i) {
        double x = sample.point(i), wi = sample.weight(i);
        if (m == 0) {
            if (setting_.kind == SettingKind::TailInflationGauss) {
                w[0] += wi;
                w[1] += wi * x;
            } else {
                w[0] += wi;
            }
            continue;
        }
        if (x <= tau_.front()) {
            if (setting_.kind == SettingKind::LogConcave && x < tau_.front())
                throw InvalidInput("collapsed_weights: sample point left of the domain");
            w[off] += wi;
            if (setting_.kind == SettingKind::TailInflationGauss)
                w[0] += wi * (x - tau_.front());
            // TailInflationGamma: constant region, value weight only
            continue;
        }
        if (x >= tau_.back()) {
            if (setting_.kind == SettingKind::LogConcave && x > tau_.back())
                throw InvalidInput("collapsed_weights: sample point right of the domain");
            w[off + static_cast<Eigen::Index>(m) - 1] += wi;
            if (setting_.kind != SettingKind::LogConcave)
                w[w.size() - 1] += wi * (x - tau_.back());
            continue;
        }
        auto it = std::upper_bound(tau_.begin(), tau_.end(), x);
        Eigen::Index j = static_cast<Eigen::Index>(it - tau_.begin()) - 1;
        double lam = (x - tau_[static_cast<std::size_t>(j)]) /
                     (tau_[static_cast<std::size_t>(j) + 1] - tau_[static_cast<std::size_t>(j)]);
        w[off + j] += wi * (1.0 - lam);
        w[off + j + 1] += wi * lam;
    }
    return w;
}

}  // namespace shapemle
