#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include "salvo/engagement.hpp"
#include "salvo/guidance.hpp"
#include "salvo/nces.hpp"
#include "salvo/policy.hpp"
#include "salvo/reward.hpp"
#include "salvo/rng.hpp"
#include "salvo/topology.hpp"

namespace salvo {

struct InitialMissile {
    Vec2 position{0.0, 0.0};
    double velocity = 0.0;
    double flight_path_angle = 0.0;
};

/// Uniform sampling box for one missile's initial position (randomized cases).
struct InitialMissileBox {
    double x_min = 0.0, x_max = 0.0;
    double y_min = 0.0, y_max = 0.0;
    double velocity = 0.0;
    double flight_path_angle = 0.0;
};

/// Full engagement description: initial conditions, communication graph,
/// desired impact geometry, physical limits, reward shape, and timing.
struct Scenario {
    std::vector<InitialMissile> missiles;       // fixed initial conditions
    std::vector<InitialMissileBox> missile_boxes;  // if non-empty, sampled per episode
    TargetState target;
    Topology topology;
    ImpactAngleSpec impact_angles;
    Constraints constraints;
    RewardParams reward;
    GuidanceParams guidance;
    PolicyLayout policy;
    TerminationParams termination;
    double tau = 0.005;
    int frameskip = 12;
    double time_limit = 60.0;
    double t_go_saturation = 100.0;  // consensus-error saturation for opening geometry
    std::uint64_t seed = 0;

    int missile_count() const {
        return static_cast<int>(missile_boxes.empty() ? missiles.size() : missile_boxes.size());
    }

    double evaluation_interval() const { return tau * frameskip; }

    /// Worst achievable flight reward over a full episode; assigned to aborted
    /// or failed rollouts so their ranks stay meaningful.
    double fitness_floor() const { return -(reward.beta_a + reward.beta_t) * time_limit; }

    std::vector<InitialMissile> initial_missiles(std::uint64_t episode_seed) const {
        if (missile_boxes.empty())
            return missiles;
        auto engine = make_engine(seed, {episode_seed, 0x1c5ULL});
        std::vector<InitialMissile> out;
        out.reserve(missile_boxes.size());
        for (const auto& box : missile_boxes) {
            std::uniform_real_distribution<double> ux(box.x_min, box.x_max);
            std::uniform_real_distribution<double> uy(box.y_min, box.y_max);
            const double x = ux(engine);
            const double y = uy(engine);
            out.push_back({Vec2{x, y}, box.velocity, box.flight_path_angle});
        }
        return out;
    }

    void validate() const {
        constraints.validate();
        reward.validate();
        guidance.validate();
        if (missile_count() == 0)
            throw std::invalid_argument("Scenario: no missiles");
        if (topology.size() != missile_count())
            throw std::invalid_argument("Scenario: topology size does not match missile count");
        if (static_cast<int>(impact_angles.relative.size()) < missile_count() - 1)
            throw std::invalid_argument("Scenario: impact-angle spec too short");
        if (!(tau > 0.0) || frameskip < 1 || !(time_limit > 0.0))
            throw std::invalid_argument("Scenario: invalid timing parameters");
    }
};

struct MissileOutcome {
    bool intercepted = false;
    double fitness = 0.0;
    double e_t = 0.0;    // consensus time error at the terminal step, s
    double e_a = 0.0;    // consensus angle error at the terminal step, rad
    double e_xi = 0.0;   // LOS-angle error at the terminal step, rad
    double miss_distance = std::numeric_limits<double>::infinity();  // ZEM, m
    double impact_time = std::numeric_limits<double>::quiet_NaN();   // s
};

struct TraceRow {
    double time = 0.0;
    int missile = 0;
    double x = 0.0, y = 0.0;
    double velocity = 0.0;
    double flight_path_angle = 0.0;
    double los_angle = 0.0;
    double a_l = 0.0, a_v = 0.0;
};

struct ErrorRow {
    double time = 0.0;
    int missile = 0;
    double e_t = 0.0;
    double e_a = 0.0;
};

struct RolloutResult {
    std::vector<MissileOutcome> missiles;
    double episode_time = 0.0;
    bool aborted = false;
    std::vector<TraceRow> trace;       // filled when requested
    std::vector<ErrorRow> error_rows;  // filled when requested, one per evaluation step
};

struct RolloutOptions {
    std::uint64_t episode_seed = 0;
    bool record_trace = false;
};

namespace detail {

inline bool finite_state(const MissileState& m) {
    return m.position.allFinite() && std::isfinite(m.velocity) && std::isfinite(m.flight_path_angle);
}

}  // namespace detail

/// Closed-loop episode: every `frameskip` steps the consensus errors are
/// recomputed and each active missile's command is refreshed from the hybrid
/// guidance law, then held. Flight rewards accrue once per evaluation step;
/// each missile's terminal reward is applied once at its own terminal step.
inline RolloutResult rollout(const Scenario& scenario, std::span<const ParamVector> params,
                             const RolloutOptions& options = {}) {
    const int n = scenario.missile_count();
    if (static_cast<int>(params.size()) != n)
        throw std::invalid_argument("rollout: expected one parameter vector per missile");

    std::vector<PolicyNetwork> nets;
    nets.reserve(params.size());
    for (const auto& p : params)
        nets.push_back(PolicyNetwork::decode(p, scenario.policy, scenario.constraints.a_lmax,
                                             scenario.constraints.a_vmax));

    std::vector<MissileState> missiles;
    for (const auto& init : scenario.initial_missiles(options.episode_seed))
        missiles.push_back({init.position, init.velocity, wrap_angle(init.flight_path_angle)});
    TargetState target = scenario.target;

    std::vector<double> desired(n);
    for (int i = 0; i < n; ++i)
        desired[static_cast<std::size_t>(i)] = desired_impact_angle(scenario.impact_angles, i);

    RolloutResult result;
    result.missiles.assign(static_cast<std::size_t>(n), {});

    std::vector<FitnessAccumulator> fitness(static_cast<std::size_t>(n));
    std::vector<TerminalDetector> detectors(static_cast<std::size_t>(n),
                                            TerminalDetector(scenario.termination));
    for (int i = 0; i < n; ++i)
        detectors[static_cast<std::size_t>(i)].update(
            target.position - missiles[static_cast<std::size_t>(i)].position, 0.0);
    std::vector<Command> commands(static_cast<std::size_t>(n));
    std::vector<double> t_go(static_cast<std::size_t>(n), 0.0);
    std::vector<double> e_xi(static_cast<std::size_t>(n), 0.0);
    std::vector<RelativeGeometry> geometry(static_cast<std::size_t>(n));

    const double dt_eval = scenario.evaluation_interval();
    const long total_steps = std::lround(std::ceil(scenario.time_limit / scenario.tau));
    int active_count = n;

    auto abort_with_floor = [&](double now) {
        for (int i = 0; i < n; ++i)
            result.missiles[static_cast<std::size_t>(i)].fitness = scenario.fitness_floor();
        result.aborted = true;
        result.episode_time = now;
    };

    for (long step = 0; step < total_steps && active_count > 0; ++step) {
        const double now = static_cast<double>(step) * scenario.tau;

        // Refresh observations and commands at evaluation steps.
        if (step % scenario.frameskip == 0) {
            for (int i = 0; i < n; ++i) {
                auto& m = missiles[static_cast<std::size_t>(i)];
                if (!m.active)
                    continue;  // terminated missiles keep their last t_go and e_xi
                geometry[static_cast<std::size_t>(i)] = relative_geometry(m, target);
                t_go[static_cast<std::size_t>(i)] = time_to_go(geometry[static_cast<std::size_t>(i)]);
                e_xi[static_cast<std::size_t>(i)] =
                    wrap_angle(geometry[static_cast<std::size_t>(i)].los_angle - desired[static_cast<std::size_t>(i)]);
            }
            for (int i = 0; i < n; ++i) {
                auto& m = missiles[static_cast<std::size_t>(i)];
                if (!m.active)
                    continue;
                const double e_t = consensus_time_error(t_go, scenario.topology, i,
                                                        scenario.t_go_saturation);
                const double e_a = consensus_angle_error(e_xi, scenario.topology, i);
                const Command tracking = png_command(geometry[static_cast<std::size_t>(i)], m.velocity,
                                                     scenario.guidance.nav_constant);
                const Command consensus = nets[static_cast<std::size_t>(i)].forward(
                    make_observation(e_a, e_t, e_xi[static_cast<std::size_t>(i)]));
                commands[static_cast<std::size_t>(i)] =
                    blend_and_clamp(tracking, consensus, scenario.guidance.gain, scenario.constraints);
                fitness[static_cast<std::size_t>(i)].add_flight(
                    flight_reward(e_a, e_t, scenario.reward), dt_eval);
                if (options.record_trace)
                    result.error_rows.push_back({now, i, e_t, e_a});
            }
        }

        if (options.record_trace) {
            for (int i = 0; i < n; ++i) {
                const auto& m = missiles[static_cast<std::size_t>(i)];
                if (!m.active)
                    continue;
                const Vec2 rel = target.position - m.position;
                result.trace.push_back({now, i, m.position.x(), m.position.y(), m.velocity,
                                        m.flight_path_angle, std::atan2(rel.y(), rel.x()),
                                        commands[static_cast<std::size_t>(i)].a_l,
                                        commands[static_cast<std::size_t>(i)].a_v});
            }
        }

        // Advance every entity from the pre-step snapshot.
        const TargetState target_before = target;
        bool target_stepped = false;
        for (int i = 0; i < n; ++i) {
            auto& m = missiles[static_cast<std::size_t>(i)];
            if (!m.active)
                continue;
            auto [m_next, t_next] = step_dynamics(m, target_before, commands[static_cast<std::size_t>(i)],
                                                  scenario.tau, now, scenario.constraints);
            m = m_next;
            if (!target_stepped) {
                target = t_next;
                target_stepped = true;
            }
            if (!detail::finite_state(m)) {
                abort_with_floor(now);
                return result;
            }
        }
        const double after = now + scenario.tau;

        // Terminal detection against the post-step state.
        for (int i = 0; i < n; ++i) {
            auto& m = missiles[static_cast<std::size_t>(i)];
            if (!m.active)
                continue;
            auto& det = detectors[static_cast<std::size_t>(i)];
            const auto terminal = det.update(target.position - m.position, after);
            if (!terminal)
                continue;

            // Diagnostics at this missile's own terminal step. Its remaining
            // time is zero and its impact LOS is the approach direction (the
            // relative-velocity bearing, exact in the small-miss limit; the
            // raw LOS degenerates as the range collapses). Other missiles'
            // observations refresh here so the terminal errors are not stale
            // by a frameskip window. All values are then held for neighbors.
            for (int j = 0; j < n; ++j) {
                const auto& other = missiles[static_cast<std::size_t>(j)];
                if (j == i || !other.active)
                    continue;
                const auto geom = relative_geometry(other, target);
                t_go[static_cast<std::size_t>(j)] = time_to_go(geom);
                e_xi[static_cast<std::size_t>(j)] =
                    wrap_angle(geom.los_angle - desired[static_cast<std::size_t>(j)]);
            }
            const Vec2 approach = m.velocity_vector() - target.velocity_vector();
            t_go[static_cast<std::size_t>(i)] = 0.0;
            e_xi[static_cast<std::size_t>(i)] = wrap_angle(
                std::atan2(approach.y(), approach.x()) - desired[static_cast<std::size_t>(i)]);
            const double term_e_t =
                consensus_time_error(t_go, scenario.topology, i, scenario.t_go_saturation);
            const double term_e_a = consensus_angle_error(e_xi, scenario.topology, i);
            const double term_e_xi = e_xi[static_cast<std::size_t>(i)];
            fitness[static_cast<std::size_t>(i)].add_terminal(
                terminal_reward(term_e_xi, term_e_t, true, scenario.reward));

            auto& outcome = result.missiles[static_cast<std::size_t>(i)];
            outcome.intercepted = true;
            outcome.e_t = term_e_t;
            outcome.e_a = term_e_a;
            outcome.e_xi = term_e_xi;
            outcome.miss_distance = terminal->miss_distance;
            outcome.impact_time = terminal->impact_time;

            m.active = false;
            m.terminated_at = terminal->impact_time;
            --active_count;
        }
        result.episode_time = after;
    }

    // Missiles that never intercepted: report end-of-episode errors and the
    // closest approach achieved. No terminal reward.
    for (int i = 0; i < n; ++i) {
        auto& outcome = result.missiles[static_cast<std::size_t>(i)];
        if (!result.missiles[static_cast<std::size_t>(i)].intercepted) {
            outcome.e_t = consensus_time_error(t_go, scenario.topology, i, scenario.t_go_saturation);
            outcome.e_a = consensus_angle_error(e_xi, scenario.topology, i);
            outcome.e_xi = e_xi[static_cast<std::size_t>(i)];
            outcome.miss_distance = detectors[static_cast<std::size_t>(i)].min_range();
        }
        outcome.fitness = fitness[static_cast<std::size_t>(i)].fitness();
    }
    if (result.aborted)
        for (auto& outcome : result.missiles)
            outcome.fitness = scenario.fitness_floor();
    return result;
}

namespace detail {

/// Runs tasks 0..count-1 on `workers` threads. Tasks write disjoint slots, so
/// results are identical for any worker count.
template <typename Fn>
void parallel_for(int count, int workers, Fn&& fn) {
    if (workers <= 1) {
        for (int k = 0; k < count; ++k)
            fn(k);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    const int spawn = std::min(workers, count);
    pool.reserve(static_cast<std::size_t>(spawn));
    for (int w = 0; w < spawn; ++w) {
        pool.emplace_back([&] {
            for (int k = next.fetch_add(1); k < count; k = next.fetch_add(1))
                fn(k);
        });
    }
    for (auto& t : pool)
        t.join();
}

}  // namespace detail

/// Signature of the per-sample evaluation; swappable for fault-injection tests.
using RolloutFn = std::function<RolloutResult(const Scenario&, std::span<const ParamVector>,
                                              const RolloutOptions&)>;

/// Evaluates every joint sample of a generation: sample k rolls out the joint
/// parameters {theta_i + eps_i^k}. Samples are independent; results land in
/// sample order regardless of scheduling. A failed sample is retried once,
/// then assigned the fitness floor.
inline void evaluate_generation_with(const RolloutFn& run, const Scenario& scenario,
                                     const Ecosystem& ecosystem, Generation& generation,
                                     int workers) {
    const int n = ecosystem.population_count();
    const int m = generation.sample_count();

    detail::parallel_for(m, workers, [&](int k) {
        std::vector<ParamVector> joint(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
            joint[static_cast<std::size_t>(i)] =
                ecosystem.params[static_cast<std::size_t>(i)] +
                generation.perturbations[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
        RolloutOptions options;
        options.episode_seed = derive_seed(scenario.seed,
                                           {ecosystem.generation, static_cast<std::uint64_t>(k)});
        for (int attempt = 0; attempt < 2; ++attempt) {
            try {
                const RolloutResult r = run(scenario, joint, options);
                for (int i = 0; i < n; ++i)
                    generation.raw_fitness[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] =
                        r.missiles[static_cast<std::size_t>(i)].fitness;
                return;
            } catch (const std::exception&) {
                // retried once below
            }
        }
        for (int i = 0; i < n; ++i)
            generation.raw_fitness[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] =
                scenario.fitness_floor();
    });

    for (int i = 0; i < n; ++i)
        generation.shaped_fitness[static_cast<std::size_t>(i)] =
            shape_fitness(generation.raw_fitness[static_cast<std::size_t>(i)]);
}

inline void evaluate_generation(const Scenario& scenario, const Ecosystem& ecosystem,
                                Generation& generation, int workers = 1) {
    evaluate_generation_with(
        [](const Scenario& s, std::span<const ParamVector> p, const RolloutOptions& o) {
            return rollout(s, p, o);
        },
        scenario, ecosystem, generation, workers);
}

struct TrainConfig {
    int generations = 150;
    int population = 40;  // m, even
    int workers = 1;
    double sigma = 0.2;
    double init_sigma = 0.2;  // scale of the seeded Gaussian theta_init; 0 = zero init
    double eta_alpha = 0.015;
    double eta_alpha_min = 0.005;
    double eta_alpha_max = 0.1;
    int adapt_every = 50;      // rho; 0 disables adaptation
    int adapt_l = 20;          // candidate-list size
    int bootstrap_samples = 16;  // h; 0 skips the impact-angle bootstrap
    int plateau_patience = 0;  // generations without improvement; 0 disables
    double plateau_epsilon = 1e-3;
    GradientMode mode = GradientMode::rescaled;
    std::uint64_t seed = 0;
};

struct HistoryRow {
    std::uint64_t generation = 0;
    std::vector<double> mean_fitness;  // per missile, over the generation's samples
    double eta_alpha = 0.0;
};

struct TrainResult {
    Ecosystem ecosystem;
    double nominal_impact_angle = 0.0;  // selected Xi_d1
    std::vector<HistoryRow> history;
    Scenario scenario;  // with the bootstrapped Xi_d1 installed
};

/// Full training loop: bootstrap the nominal impact angle, then iterate
/// sample -> parallel evaluation -> per-population rescaled gradients ->
/// simultaneous update, adapting the shared learning rate every `adapt_every`
/// generations on the same episode seed as the surrounding generation.
inline TrainResult train(Scenario scenario, const TrainConfig& config,
                         std::optional<Ecosystem> resume = std::nullopt) {
    scenario.validate();
    const int n = scenario.missile_count();

    Ecosystem ecosystem;
    if (resume) {
        ecosystem = std::move(*resume);
    } else {
        ecosystem.params.assign(static_cast<std::size_t>(n),
                                ParamVector::Zero(scenario.policy.param_count()));
        if (config.init_sigma > 0.0) {
            // Hidden layers start random so output-layer perturbations see rich
            // features; the output layer starts at zero so the initial command
            // is exactly zero and the impact-angle bootstrap scores the clean
            // tracking-law behavior.
            const Eigen::Index hidden =
                3 * scenario.policy.q1 + scenario.policy.q1 * scenario.policy.q2;
            std::normal_distribution<double> normal(0.0, config.init_sigma);
            for (int i = 0; i < n; ++i) {
                auto engine = make_engine(config.seed, {0x1217ULL, static_cast<std::uint64_t>(i)});
                for (Eigen::Index d = 0; d < hidden; ++d)
                    ecosystem.params[static_cast<std::size_t>(i)][d] = normal(engine);
            }
        }
        ecosystem.sigma = config.sigma;
        ecosystem.eta_alpha = config.eta_alpha;
        ecosystem.eta_alpha_min = config.eta_alpha_min;
        ecosystem.eta_alpha_max = config.eta_alpha_max;
    }

    auto evaluate_joint = [&](const std::vector<ParamVector>& params, std::uint64_t episode_seed) {
        RolloutOptions options;
        options.episode_seed = episode_seed;
        const RolloutResult r = rollout(scenario, params, options);
        std::vector<double> out(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
            out[static_cast<std::size_t>(i)] = r.missiles[static_cast<std::size_t>(i)].fitness;
        return out;
    };

    TrainResult result;
    if (config.bootstrap_samples > 0 && ecosystem.generation == 0) {
        const auto boot = bootstrap_impact_angle(
            [&](double angle) {
                Scenario probe = scenario;
                probe.impact_angles.nominal = angle;
                RolloutOptions options;
                options.episode_seed = derive_seed(scenario.seed, {0});
                const RolloutResult r = rollout(probe, ecosystem.params, options);
                double total = 0.0;
                for (const auto& m : r.missiles)
                    total += m.fitness;
                return total;
            },
            config.bootstrap_samples, config.seed);
        scenario.impact_angles.nominal = boot.selected;
    }
    result.nominal_impact_angle = scenario.impact_angles.nominal;

    double best_mean = -std::numeric_limits<double>::infinity();
    int stale = 0;

    for (int g = 0; g < config.generations; ++g) {
        Generation generation =
            sample_generation(ecosystem, config.population,
                              derive_seed(config.seed, {0x5a17ULL, ecosystem.generation}));
        evaluate_generation(scenario, ecosystem, generation, config.workers);

        std::vector<ParamVector> gradients;
        gradients.reserve(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
            gradients.push_back(estimate_gradient(generation, scenario.topology, i, config.mode));

        HistoryRow row;
        row.generation = ecosystem.generation;
        row.eta_alpha = ecosystem.eta_alpha;
        row.mean_fitness.resize(static_cast<std::size_t>(n));
        double overall = 0.0;
        for (int i = 0; i < n; ++i) {
            const auto& raw = generation.raw_fitness[static_cast<std::size_t>(i)];
            const double mean = std::accumulate(raw.begin(), raw.end(), 0.0) / raw.size();
            row.mean_fitness[static_cast<std::size_t>(i)] = mean;
            overall += mean / n;
        }
        result.history.push_back(std::move(row));

        const std::uint64_t adapt_seed =
            derive_seed(scenario.seed, {ecosystem.generation, 0});  // reuse sample 0's episode
        const Ecosystem snapshot = ecosystem;
        update_params(ecosystem, gradients);

        if (config.adapt_every > 0 && config.adapt_l >= 2 &&
            ecosystem.generation % static_cast<std::uint64_t>(config.adapt_every) == 0) {
            const auto adaptation = adapt_learning_rate(
                snapshot, gradients,
                [&](const std::vector<ParamVector>& params) {
                    return evaluate_joint(params, adapt_seed);
                },
                config.adapt_l);
            ecosystem.eta_alpha = adaptation.selected;
        }

        if (config.plateau_patience > 0) {
            if (overall > best_mean + config.plateau_epsilon) {
                best_mean = overall;
                stale = 0;
            } else if (++stale >= config.plateau_patience) {
                break;
            }
        }
    }

    result.ecosystem = std::move(ecosystem);
    result.scenario = std::move(scenario);
    return result;
}

}  // namespace salvo
