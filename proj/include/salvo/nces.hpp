#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "salvo/policy.hpp"
#include "salvo/rng.hpp"
#include "salvo/topology.hpp"

namespace salvo {

/// The co-evolving populations: one parameter vector per missile plus the
/// shared sampling and update hyperparameters.
struct Ecosystem {
    std::vector<ParamVector> params;
    double sigma = 0.2;
    double eta_alpha = 0.015;
    double eta_alpha_min = 0.005;
    double eta_alpha_max = 0.1;
    std::uint64_t generation = 0;

    int population_count() const { return static_cast<int>(params.size()); }
    Eigen::Index dim() const { return params.empty() ? 0 : params.front().size(); }
};

/// One sampled generation: m mirrored perturbation sets per population and, once
/// evaluated, the raw and rank-shaped fitnesses of every joint sample.
struct Generation {
    std::vector<std::vector<ParamVector>> perturbations;  // [population][sample]
    std::vector<std::vector<double>> raw_fitness;         // [population][sample]
    std::vector<std::vector<double>> shaped_fitness;      // [population][sample]
    double sigma = 0.0;

    int population_count() const { return static_cast<int>(perturbations.size()); }
    int sample_count() const {
        return perturbations.empty() ? 0 : static_cast<int>(perturbations.front().size());
    }
};

/// Draws m mirrored Gaussian perturbations per population: samples 2j and 2j+1
/// form a (+e, -e) pair. Deterministic under the seed.
inline Generation sample_generation(const Ecosystem& ecosystem, int m, std::uint64_t seed) {
    if (m < 2 || m % 2 != 0)
        throw std::invalid_argument("sample_generation: population size must be even and >= 2");

    Generation gen;
    gen.sigma = ecosystem.sigma;
    const int n = ecosystem.population_count();
    gen.perturbations.resize(n);
    gen.raw_fitness.assign(n, std::vector<double>(m, 0.0));
    gen.shaped_fitness.assign(n, std::vector<double>(m, 0.0));

    std::normal_distribution<double> normal(0.0, ecosystem.sigma);
    for (int i = 0; i < n; ++i) {
        auto engine = make_engine(seed, {static_cast<std::uint64_t>(i)});
        const Eigen::Index dim = ecosystem.params[static_cast<std::size_t>(i)].size();
        auto& samples = gen.perturbations[static_cast<std::size_t>(i)];
        samples.reserve(m);
        for (int j = 0; j < m / 2; ++j) {
            ParamVector eps(dim);
            for (Eigen::Index d = 0; d < dim; ++d)
                eps[d] = normal(engine);
            samples.push_back(eps);
            samples.push_back(-eps);
        }
    }
    return gen;
}

/// Rank-based utility shaping. Rank 1 is the best raw fitness; utilities are
/// scale-free, sum to zero, and tied raw values share their positions' mean.
inline std::vector<double> shape_fitness(std::span<const double> raw) {
    const int m = static_cast<int>(raw.size());
    if (m < 2)
        throw std::invalid_argument("shape_fitness: need at least two samples");

    std::vector<int> order(raw.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return raw[static_cast<std::size_t>(a)] > raw[static_cast<std::size_t>(b)];
    });

    const double log_half = std::log(m / 2.0 + 1.0);
    std::vector<double> by_rank(raw.size());
    double denom = 0.0;
    for (int k = 0; k < m; ++k)
        denom += std::max(0.0, log_half - std::log(static_cast<double>(k + 1)));
    for (int k = 0; k < m; ++k)
        by_rank[static_cast<std::size_t>(k)] =
            std::max(0.0, log_half - std::log(static_cast<double>(k + 1))) / denom - 1.0 / m;

    std::vector<double> shaped(raw.size());
    int start = 0;
    while (start < m) {
        int end = start;
        while (end + 1 < m && raw[static_cast<std::size_t>(order[static_cast<std::size_t>(end + 1)])] ==
                                  raw[static_cast<std::size_t>(order[static_cast<std::size_t>(start)])])
            ++end;
        double mean = 0.0;
        for (int k = start; k <= end; ++k)
            mean += by_rank[static_cast<std::size_t>(k)];
        mean /= (end - start + 1);
        for (int k = start; k <= end; ++k)
            shaped[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = mean;
        start = end + 1;
    }
    return shaped;
}

/// Confidence of each joint sample for population i, from its neighbors'
/// perturbation densities. Computed in log space, averaged per dimension, and
/// normalized by the per-generation maximum: the best-trusted sample has
/// weight exactly 1 and the ordering matches the density product. Without the
/// per-dimension average the product over hundreds of genome dimensions
/// concentrates all weight on a single mirrored pair and the update direction
/// degenerates; with one neighbor of dimension one this reduces to the plain
/// normalized density.
inline std::vector<double> confidence_weights(const Generation& generation,
                                              const Topology& topology, int i) {
    const int m = generation.sample_count();
    const auto& neighbors = topology.neighbors(i);
    std::vector<double> log_conf(static_cast<std::size_t>(m), 0.0);
    Eigen::Index neighbor_dims = 0;
    for (int c : neighbors)
        neighbor_dims += generation.perturbations[static_cast<std::size_t>(c)].front().size();
    if (neighbor_dims == 0)
        return std::vector<double>(static_cast<std::size_t>(m), 1.0);
    const double inv_two_sigma_sq =
        1.0 / (2.0 * generation.sigma * generation.sigma * static_cast<double>(neighbor_dims));
    for (int k = 0; k < m; ++k) {
        double sum_sq = 0.0;
        for (int c : neighbors)
            sum_sq += generation.perturbations[static_cast<std::size_t>(c)][static_cast<std::size_t>(k)]
                          .squaredNorm();
        log_conf[static_cast<std::size_t>(k)] = -sum_sq * inv_two_sigma_sq;
    }
    const double max_log = *std::max_element(log_conf.begin(), log_conf.end());
    std::vector<double> weights(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k)
        weights[static_cast<std::size_t>(k)] = std::exp(log_conf[static_cast<std::size_t>(k)] - max_log);
    return weights;
}

enum class GradientMode { rescaled, plain };
enum class FitnessKind { shaped, raw };

/// Sampled natural-gradient estimate for population i:
/// g_i = 1/(m sigma^2) * sum_k f_i^k * w_i^k * eps_i^k,
/// where w is the neighbor-confidence weight (rescaled mode) or 1 (plain mode).
inline ParamVector estimate_gradient(const Generation& generation, const Topology& topology, int i,
                                     GradientMode mode = GradientMode::rescaled,
                                     FitnessKind kind = FitnessKind::shaped) {
    const int m = generation.sample_count();
    const auto& eps = generation.perturbations[static_cast<std::size_t>(i)];
    const auto& fitness = (kind == FitnessKind::shaped ? generation.shaped_fitness
                                                       : generation.raw_fitness)[static_cast<std::size_t>(i)];
    std::vector<double> weights;
    if (mode == GradientMode::rescaled)
        weights = confidence_weights(generation, topology, i);

    ParamVector g = ParamVector::Zero(eps.front().size());
    for (int k = 0; k < m; ++k) {
        const double w = mode == GradientMode::rescaled ? weights[static_cast<std::size_t>(k)] : 1.0;
        g += fitness[static_cast<std::size_t>(k)] * w * eps[static_cast<std::size_t>(k)];
    }
    g /= m * generation.sigma * generation.sigma;
    return g;
}

/// Simultaneous co-evolutionary update: every population moves with the shared
/// learning rate from the same snapshot, then the generation counter advances.
inline void update_params(Ecosystem& ecosystem, const std::vector<ParamVector>& gradients) {
    if (static_cast<int>(gradients.size()) != ecosystem.population_count())
        throw std::invalid_argument("update_params: gradient count mismatch");
    for (std::size_t i = 0; i < gradients.size(); ++i)
        if (gradients[i].size() != ecosystem.params[i].size())
            throw std::invalid_argument("update_params: gradient dimension mismatch");
    for (std::size_t i = 0; i < gradients.size(); ++i)
        ecosystem.params[i] += ecosystem.eta_alpha * gradients[i];
    ++ecosystem.generation;
}

/// Evaluates a joint parameter set, returning one fitness per missile.
using JointEvaluator = std::function<std::vector<double>(const std::vector<ParamVector>&)>;

struct LrAdaptation {
    std::vector<double> candidates;
    std::vector<double> scores;  // summed G_i per candidate
    double selected = 0.0;
};

/// Elitist learning-rate adaptation. Candidates are linear multiples of the
/// current rate, clipped to the bounds; each is scored by the summed fitness
/// delta of stepping every population with it instead of the current rate.
/// All missiles share the selected rate; ties pick the lowest index.
inline LrAdaptation adapt_learning_rate(const Ecosystem& ecosystem,
                                        const std::vector<ParamVector>& gradients,
                                        const JointEvaluator& evaluate, int l) {
    if (l < 2 || l % 2 != 0)
        throw std::invalid_argument("adapt_learning_rate: l must be even and >= 2");
    if (static_cast<int>(gradients.size()) != ecosystem.population_count())
        throw std::invalid_argument("adapt_learning_rate: gradient count mismatch");

    auto stepped = [&](double rate) {
        std::vector<ParamVector> params = ecosystem.params;
        for (std::size_t i = 0; i < params.size(); ++i)
            params[i] += rate * gradients[i];
        return params;
    };

    const std::vector<double> baseline = evaluate(stepped(ecosystem.eta_alpha));
    const double baseline_sum = std::accumulate(baseline.begin(), baseline.end(), 0.0);

    LrAdaptation result;
    for (int k = -l / 2; k <= l / 2; ++k) {
        const double rate = std::clamp((1.0 + 0.1 * k) * ecosystem.eta_alpha,
                                       ecosystem.eta_alpha_min, ecosystem.eta_alpha_max);
        result.candidates.push_back(rate);
        if (rate == ecosystem.eta_alpha) {
            result.scores.push_back(0.0);  // self-difference
            continue;
        }
        const std::vector<double> scored = evaluate(stepped(rate));
        result.scores.push_back(std::accumulate(scored.begin(), scored.end(), 0.0) - baseline_sum);
    }

    const auto best = std::max_element(result.scores.begin(), result.scores.end());
    result.selected = result.candidates[static_cast<std::size_t>(best - result.scores.begin())];
    return result;
}

/// Scores one nominal impact angle: the total initial-policy fitness with that
/// angle installed.
using AngleEvaluator = std::function<double(double)>;

struct ImpactAngleBootstrap {
    std::vector<double> samples;
    std::vector<double> scores;
    double selected = 0.0;
};

/// Samples h nominal impact angles uniformly over [-pi, pi] and keeps the one
/// with the best total fitness under the initial parameters.
inline ImpactAngleBootstrap bootstrap_impact_angle(const AngleEvaluator& evaluate, int h,
                                                   std::uint64_t seed) {
    if (h < 1)
        throw std::invalid_argument("bootstrap_impact_angle: need at least one sample");
    auto engine = make_engine(seed, {0xb007ULL});
    std::uniform_real_distribution<double> uniform(-kPi, kPi);

    ImpactAngleBootstrap result;
    for (int k = 0; k < h; ++k) {
        const double angle = uniform(engine);
        result.samples.push_back(angle);
        result.scores.push_back(evaluate(angle));
    }
    const auto best = std::max_element(result.scores.begin(), result.scores.end());
    result.selected = result.samples[static_cast<std::size_t>(best - result.scores.begin())];
    return result;
}

}  // namespace salvo
