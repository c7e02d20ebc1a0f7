#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "shapemle/errors.hpp"

namespace shapemle {

enum class SettingKind {
    LogConcave,          // concave log-density, Lebesgue reference
    TailInflationGauss,  // convex log-density-ratio, N(0,1) reference
    TailInflationGamma,  // convex isotonic log-density-ratio, Gamma reference
};

struct Setting {
    SettingKind kind = SettingKind::LogConcave;
    double alpha = 1.0;  // Gamma shape, TailInflationGamma only
    double beta = 1.0;   // Gamma rate, TailInflationGamma only

    static Setting log_concave() { return {SettingKind::LogConcave, 1.0, 1.0}; }
    static Setting tail_gauss() { return {SettingKind::TailInflationGauss, 1.0, 1.0}; }
    static Setting tail_gamma(double alpha, double beta);

    // Sign of the kink basis functions: kinks are xi*(x-tau)^+ with
    // nonnegative coefficients, so xi = -1 encodes concavity and
    // xi = +1 convexity.
    double xi() const { return kind == SettingKind::LogConcave ? -1.0 : +1.0; }

    bool operator==(const Setting&) const = default;
};

// The empirical measure: sorted distinct support points with positive
// weights summing to one. Immutable after construction.
class WeightedSample {
  public:
    WeightedSample(std::vector<double> points, std::vector<double> weights);

    std::size_t n() const { return points_.size(); }
    const std::vector<double>& points() const { return points_; }
    const std::vector<double>& weights() const { return weights_; }
    double point(std::size_t i) const { return points_[i]; }
    double weight(std::size_t i) const { return weights_[i]; }

    double mean() const { return mean_; }
    double variance() const { return variance_; }
    double stddev() const;

    // Empirical CDF F(t) = sum of w_i over x_i <= t.
    double cdf(double t) const;
    // Left limit F(t-) = sum of w_i over x_i < t.
    double cdf_left(double t) const;
    // Sum of w_i over x_i in (lo, hi].
    double mass(double lo, double hi) const;
    // Sum of w_i * x_i over x_i in (lo, hi].
    double first_moment(double lo, double hi) const;
    // Sum of w_i * (x_i - t)^+ over all i.
    double plus_moment(double t) const;

    // Sample with all points multiplied by c > 0 (weights unchanged).
    WeightedSample scaled(double c) const;

  private:
    std::vector<double> points_;
    std::vector<double> weights_;
    std::vector<double> cum_w_;   // cumulative weights
    std::vector<double> cum_wx_;  // cumulative weighted points
    double mean_ = 0.0;
    double variance_ = 0.0;
};

// Merge duplicate x values by summing weights, drop zero-weight pairs,
// sort ascending and normalize weights to sum one.
WeightedSample ingest(std::vector<std::pair<double, double>> raw_pairs);

// Equal weights 1/n.
WeightedSample ingest_points(const std::vector<double>& xs);

// CSV with one column (x) or two columns (x, w). An optional header line is
// detected by a non-numeric first row; comma, semicolon or whitespace
// delimiters are auto-detected from the first data row.
std::vector<std::pair<double, double>> read_csv(std::istream& in);
std::vector<std::pair<double, double>> read_csv_file(const std::string& path);

struct SolverConfig {
    Setting setting;
    double delta1 = 1e-10;   // local-search tolerance on the Newton decrement
    double delta2 = 1e-4;    // knot-admission tolerance
    double delta_o = 1e-5;   // bisection precision
    int max_newton = 200;    // Newton steps per local search
    int max_outer = 500;     // outer knot-admission rounds
    std::uint64_t seed = 0;
    bool multi_knot_first_round = false;  // gradient multi-knot proposal for round one
    bool gaussian_spline_start = false;   // LogConcave only

    static SolverConfig defaults(Setting setting, std::size_t n);
    void validate() const;
};

}  // namespace shapemle
