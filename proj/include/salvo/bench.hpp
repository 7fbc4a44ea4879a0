#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "salvo/rng.hpp"

namespace salvo {
namespace bench {

using Objective = std::function<double(double, double)>;

/// Two-parameter multimodal test objective: one population parameter theta_i
/// coupled to a single neighbor parameter theta_c.
inline double eggholder_variant(double theta_i, double theta_c) {
    const double a = (30.0 * theta_c + 47.0) * std::sin(std::sqrt(std::abs(30.0 * theta_c + 15.0 * theta_i + 47.0)));
    const double b = 30.0 * theta_i * std::sin(std::sqrt(std::abs(30.0 * theta_i - (30.0 * theta_c + 47.0))));
    return (a - b) / 200.0 - 0.2;
}

/// The neighbor-averaged objective: trapezoid quadrature of the objective
/// against the Gaussian density of theta_c, truncated to [-2, 2] and
/// renormalized. This is the "real" curve the estimators are judged against.
inline double marginal_objective(double theta_i, double neighbor_mean, double sigma,
                                 int resolution = 2048,
                                 const Objective& objective = eggholder_variant) {
    if (resolution < 16)
        throw std::invalid_argument("marginal_objective: resolution must be >= 16");
    if (!(sigma > 0.0))
        throw std::invalid_argument("marginal_objective: sigma must be positive");

    const double lo = -2.0, hi = 2.0;
    const double h = (hi - lo) / (resolution - 1);
    double weighted = 0.0, mass = 0.0;
    for (int k = 0; k < resolution; ++k) {
        const double tc = lo + k * h;
        const double z = (tc - neighbor_mean) / sigma;
        double w = std::exp(-0.5 * z * z);
        if (k == 0 || k == resolution - 1)
            w *= 0.5;  // trapezoid end weights
        weighted += w * objective(theta_i, tc);
        mass += w;
    }
    return weighted / mass;
}

struct BenchPoint {
    double theta_i = -0.3;
    double theta_c = -0.3;
};

struct GradientTrial {
    double reference = 0.0;  // finite-difference gradient of the normalized marginal
    double rescaled = 0.0;   // confidence-rescaled estimate, same scale
    double plain = 0.0;      // unweighted estimate, same scale

    double error_rescaled() const { return std::abs(rescaled - reference); }
    double error_plain() const { return std::abs(plain - reference); }
    /// 1-D stand-in for cosine similarity: sign-weighted relative agreement.
    double agreement_rescaled() const { return agreement(rescaled); }
    double agreement_plain() const { return agreement(plain); }

private:
    double agreement(double estimate) const {
        if (reference == 0.0)
            return estimate == 0.0 ? 1.0 : -1.0;
        const double rel = std::abs(estimate - reference) / std::abs(reference);
        return (estimate * reference >= 0.0 ? 1.0 : -1.0) * (1.0 - std::min(rel, 1.0));
    }
};

/// One seeded comparison trial: m mirrored joint perturbations at sigma, both
/// estimators computed from the same samples, both compared against the
/// central-difference gradient of the marginal objective. Sampled and curve
/// values share one affine [0, 1] normalization fixed by the curve's range
/// over the confined domain; mirrored pairs share confidence weights, so the
/// shift cancels and only the deterministic scale remains.
inline GradientTrial gradient_comparison_trial(BenchPoint point, int m, double sigma,
                                               std::uint64_t seed, int resolution = 2048,
                                               const Objective& objective = eggholder_variant) {
    if (m < 2 || m % 2 != 0)
        throw std::invalid_argument("gradient_comparison_trial: m must be even and >= 2");

    auto marginal = [&](double ti) {
        return marginal_objective(ti, point.theta_c, sigma, resolution, objective);
    };

    constexpr int kCurvePoints = 256;
    double curve_min = std::numeric_limits<double>::infinity();
    double curve_max = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < kCurvePoints; ++k) {
        const double v = marginal(-2.0 + 4.0 * k / (kCurvePoints - 1));
        curve_min = std::min(curve_min, v);
        curve_max = std::max(curve_max, v);
    }
    const double scale = curve_max > curve_min ? curve_max - curve_min : 1.0;

    const double fd_step = 1e-5;
    GradientTrial trial;
    trial.reference = (marginal(point.theta_i + fd_step) - marginal(point.theta_i - fd_step)) /
                      (2.0 * fd_step * scale);

    auto engine = make_engine(seed, {0xe66ULL});
    std::normal_distribution<double> normal(0.0, sigma);
    std::vector<double> eps_i(static_cast<std::size_t>(m)), eps_c(static_cast<std::size_t>(m));
    for (int k = 0; k < m / 2; ++k) {
        const double ei = normal(engine);
        const double ec = normal(engine);
        eps_i[static_cast<std::size_t>(2 * k)] = ei;
        eps_c[static_cast<std::size_t>(2 * k)] = ec;
        eps_i[static_cast<std::size_t>(2 * k + 1)] = -ei;
        eps_c[static_cast<std::size_t>(2 * k + 1)] = -ec;
    }

    double max_log_conf = -std::numeric_limits<double>::infinity();
    std::vector<double> log_conf(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) {
        const double ec = eps_c[static_cast<std::size_t>(k)];
        log_conf[static_cast<std::size_t>(k)] = -0.5 * ec * ec / (sigma * sigma);
        max_log_conf = std::max(max_log_conf, log_conf[static_cast<std::size_t>(k)]);
    }

    double sum_plain = 0.0, sum_rescaled = 0.0;
    for (int k = 0; k < m; ++k) {
        const double f = (objective(point.theta_i + eps_i[static_cast<std::size_t>(k)],
                                    point.theta_c + eps_c[static_cast<std::size_t>(k)]) -
                          curve_min) / scale;
        const double w = std::exp(log_conf[static_cast<std::size_t>(k)] - max_log_conf);
        sum_plain += f * eps_i[static_cast<std::size_t>(k)];
        sum_rescaled += f * w * eps_i[static_cast<std::size_t>(k)];
    }
    trial.plain = sum_plain / (m * sigma * sigma);
    trial.rescaled = sum_rescaled / (m * sigma * sigma);
    return trial;
}

struct ComparisonStudy {
    int trials = 0;
    int rescaled_wins = 0;  // trials where the rescaled error is strictly smaller
    double median_error_rescaled = 0.0;
    double median_error_plain = 0.0;
    std::vector<GradientTrial> rows;
};

inline ComparisonStudy run_comparison_study(BenchPoint point, int m, double sigma, int trials,
                                            std::uint64_t seed, int resolution = 2048) {
    ComparisonStudy study;
    study.trials = trials;
    std::vector<double> err_r, err_p;
    for (int t = 0; t < trials; ++t) {
        const auto row = gradient_comparison_trial(point, m, sigma,
                                                   derive_seed(seed, {static_cast<std::uint64_t>(t)}),
                                                   resolution);
        err_r.push_back(row.error_rescaled());
        err_p.push_back(row.error_plain());
        if (row.error_rescaled() < row.error_plain())
            ++study.rescaled_wins;
        study.rows.push_back(row);
    }
    auto median = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        const std::size_t mid = v.size() / 2;
        return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
    };
    study.median_error_rescaled = median(err_r);
    study.median_error_plain = median(err_p);
    return study;
}

}  // namespace bench
}  // namespace salvo
