#include "shapemle/data_model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

namespace shapemle {

Setting Setting::tail_gamma(double alpha, double beta) {
    if (!(std::isfinite(alpha) && alpha > 0.0) || !(std::isfinite(beta) && beta > 0.0))
        throw InvalidInput("Gamma reference requires finite alpha > 0 and beta > 0");
    return {SettingKind::TailInflationGamma, alpha, beta};
}

WeightedSample::WeightedSample(std::vector<double> points, std::vector<double> weights)
    : points_(std::move(points)), weights_(std::move(weights)) {
    if (points_.size() != weights_.size())
        throw InvalidInput("points/weights length mismatch");
    if (points_.size() < 2)
        throw DegenerateSample("need at least 2 distinct support points");
    double wsum = 0.0;
    for (std::size_t i = 0; i < points_.size(); ++i) {
        if (!std::isfinite(points_[i])) throw InvalidInput("non-finite support point");
        if (!(weights_[i] > 0.0) || !std::isfinite(weights_[i]))
            throw InvalidInput("weights must be strictly positive and finite");
        if (i > 0 && !(points_[i] > points_[i - 1]))
            throw InvalidInput("support points must be strictly increasing");
        wsum += weights_[i];
    }
    if (std::abs(wsum - 1.0) > 1e-12)
        throw InvalidInput("weights must sum to 1");

    cum_w_.resize(points_.size());
    cum_wx_.resize(points_.size());
    double cw = 0.0, cwx = 0.0;
    for (std::size_t i = 0; i < points_.size(); ++i) {
        cw += weights_[i];
        cwx += weights_[i] * points_[i];
        cum_w_[i] = cw;
        cum_wx_[i] = cwx;
    }
    mean_ = cwx;
    double v = 0.0;
    for (std::size_t i = 0; i < points_.size(); ++i) {
        double d = points_[i] - mean_;
        v += weights_[i] * d * d;
    }
    variance_ = v;
}

double WeightedSample::stddev() const { return std::sqrt(variance_); }

double WeightedSample::cdf(double t) const {
    auto it = std::upper_bound(points_.begin(), points_.end(), t);
    if (it == points_.begin()) return 0.0;
    return cum_w_[static_cast<std::size_t>(it - points_.begin()) - 1];
}

double WeightedSample::cdf_left(double t) const {
    auto it = std::lower_bound(points_.begin(), points_.end(), t);
    if (it == points_.begin()) return 0.0;
    return cum_w_[static_cast<std::size_t>(it - points_.begin()) - 1];
}

double WeightedSample::mass(double lo, double hi) const { return cdf(hi) - cdf(lo); }

double WeightedSample::first_moment(double lo, double hi) const {
    auto cum = [this](double t) {
        auto it = std::upper_bound(points_.begin(), points_.end(), t);
        if (it == points_.begin()) return 0.0;
        return cum_wx_[static_cast<std::size_t>(it - points_.begin()) - 1];
    };
    return cum(hi) - cum(lo);
}

double WeightedSample::plus_moment(double t) const {
    auto it = std::upper_bound(points_.begin(), points_.end(), t);
    std::size_t i = static_cast<std::size_t>(it - points_.begin());
    if (i == points_.size()) return 0.0;
    double wtail = cum_w_.back() - (i == 0 ? 0.0 : cum_w_[i - 1]);
    double wxtail = cum_wx_.back() - (i == 0 ? 0.0 : cum_wx_[i - 1]);
    return wxtail - t * wtail;
}

WeightedSample WeightedSample::scaled(double c) const {
    std::vector<double> xs(points_);
    for (double& x : xs) x *= c;
    return WeightedSample(std::move(xs), weights_);
}

WeightedSample ingest(std::vector<std::pair<double, double>> raw_pairs) {
    std::vector<std::pair<double, double>> pairs;
    pairs.reserve(raw_pairs.size());
    for (const auto& [x, w] : raw_pairs) {
        if (!std::isfinite(x) || !std::isfinite(w) || w < 0.0)
            throw InvalidInput("ingest: non-finite value or negative weight");
        if (w > 0.0) pairs.emplace_back(x, w);
    }
    std::sort(pairs.begin(), pairs.end());
    std::vector<double> xs, ws;
    for (const auto& [x, w] : pairs) {
        if (!xs.empty() && x == xs.back())
            ws.back() += w;
        else {
            xs.push_back(x);
            ws.push_back(w);
        }
    }
    if (xs.size() < 2)
        throw DegenerateSample("ingest: fewer than 2 distinct points with positive weight");
    double total = 0.0;
    for (double w : ws) total += w;
    for (double& w : ws) w /= total;
    // Re-fix the tail so the sum is exactly representable as 1 within 1e-12.
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < ws.size(); ++i) s += ws[i];
    ws.back() = 1.0 - s;
    return WeightedSample(std::move(xs), std::move(ws));
}

WeightedSample ingest_points(const std::vector<double>& xs) {
    std::vector<std::pair<double, double>> pairs;
    pairs.reserve(xs.size());
    for (double x : xs) pairs.emplace_back(x, 1.0);
    return ingest(std::move(pairs));
}

namespace {

bool parse_double(const std::string& tok, double& out) {
    try {
        std::size_t pos = 0;
        out = std::stod(tok, &pos);
        while (pos < tok.size() && std::isspace(static_cast<unsigned char>(tok[pos]))) ++pos;
        return pos == tok.size();
    } catch (const std::exception&) {
        return false;
    }
}

std::vector<std::string> split_line(const std::string& line, char delim) {
    std::vector<std::string> toks;
    if (delim == ' ') {
        std::istringstream ss(line);
        std::string t;
        while (ss >> t) toks.push_back(t);
    } else {
        std::string cur;
        for (char c : line) {
            if (c == delim) {
                toks.push_back(cur);
                cur.clear();
            } else
                cur.push_back(c);
        }
        toks.push_back(cur);
    }
    return toks;
}

char detect_delim(const std::string& line) {
    if (line.find(',') != std::string::npos) return ',';
    if (line.find(';') != std::string::npos) return ';';
    return ' ';
}

}  // namespace

std::vector<std::pair<double, double>> read_csv(std::istream& in) {
    std::vector<std::pair<double, double>> out;
    std::string line;
    std::size_t lineno = 0;
    bool first_content = true;
    char delim = ' ';
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        bool blank = line.find_first_not_of(" \t") == std::string::npos;
        if (blank) continue;
        if (first_content) {
            delim = detect_delim(line);
            auto toks = split_line(line, delim);
            double v;
            if (toks.empty() || !parse_double(toks[0], v)) {
                first_content = false;  // header line
                continue;
            }
            first_content = false;
        }
        auto toks = split_line(line, delim);
        double x, w = 1.0;
        if (toks.empty() || toks.size() > 2 || !parse_double(toks[0], x) ||
            (toks.size() == 2 && !parse_double(toks[1], w)))
            throw InvalidInput("malformed CSV row at line " + std::to_string(lineno));
        out.emplace_back(x, w);
    }
    return out;
}

std::vector<std::pair<double, double>> read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::ios_base::failure("cannot open " + path);
    return read_csv(in);
}

SolverConfig SolverConfig::defaults(Setting setting, std::size_t n) {
    SolverConfig cfg;
    cfg.setting = setting;
    double dn = static_cast<double>(n);
    cfg.delta1 = 1e-10 / dn;
    cfg.delta2 = 1e-4 / dn;
    cfg.delta_o = cfg.delta2 / 10.0;
    return cfg;
}

void SolverConfig::validate() const {
    if (!(delta1 > 0.0 && delta2 > 0.0 && delta_o > 0.0))
        throw InvalidInput("tolerances must be strictly positive");
    if (!(delta1 < delta2)) throw InvalidInput("delta1 must be smaller than delta2");
    if (max_newton <= 0 || max_outer <= 0)
        throw InvalidInput("iteration caps must be positive");
    if (setting.kind == SettingKind::TailInflationGamma)
        Setting::tail_gamma(setting.alpha, setting.beta);
}

}  // namespace shapemle
