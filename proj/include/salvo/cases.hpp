#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "salvo/harness.hpp"
#include "salvo/io.hpp"
#include "salvo/math.hpp"

namespace salvo {

// --- Built-in engagement cases ------------------------------------------------

/// Four missiles against a stationary target at (9500, 9000); relative impact
/// angles 20, 60, 30 degrees.
inline Scenario case1_scenario() {
    Scenario s;
    s.missiles = {{Vec2{1900.0, 17000.0}, 700.0, deg_to_rad(-25.0)},
                  {Vec2{1500.0, 13000.0}, 650.0, deg_to_rad(0.0)},
                  {Vec2{1400.0, 4000.0}, 700.0, deg_to_rad(5.0)},
                  {Vec2{3000.0, 1300.0}, 680.0, deg_to_rad(10.0)}};
    s.target.position = Vec2{9500.0, 9000.0};
    s.target.velocity = 0.0;
    s.topology = Topology::chain(4);
    s.impact_angles.relative = {deg_to_rad(20.0), deg_to_rad(60.0), deg_to_rad(30.0)};
    s.frameskip = 12;
    return s;
}

/// Same missiles as case 1 but a weaving target: lateral acceleration
/// 5g*sin(pi*t/7) at a fixed 130 m/s and initial flight-path angle 162 deg.
inline Scenario case2_scenario() {
    Scenario s = case1_scenario();
    s.target.velocity = 130.0;
    s.target.flight_path_angle = deg_to_rad(162.0);
    s.target.maneuver = {5.0 * kGravity, kPi / 7.0, 0.0};
    return s;
}

/// Five missiles with uniformly sampled initial positions, all at 600 m/s and
/// zero flight-path angle, 25-degree relative impact angles, target (10000, 9000).
inline Scenario case3_scenario() {
    Scenario s;
    for (int i = 1; i <= 5; ++i)
        s.missile_boxes.push_back({2000.0, 2600.0, 11000.0 - 2000.0 * i, 13000.0 - 2000.0 * i,
                                   600.0, 0.0});
    s.target.position = Vec2{10000.0, 9000.0};
    s.target.velocity = 0.0;
    s.topology = Topology::chain(5);
    s.impact_angles.relative.assign(4, deg_to_rad(25.0));
    s.frameskip = 40;
    return s;
}

enum class CaseName { case1, case2, case3_mc };

inline CaseName parse_case_name(const std::string& name) {
    if (name == "case1")
        return CaseName::case1;
    if (name == "case2")
        return CaseName::case2;
    if (name == "case3-mc" || name == "case3")
        return CaseName::case3_mc;
    throw std::invalid_argument("unknown case: " + name);
}

inline std::string case_name_string(CaseName name) {
    switch (name) {
        case CaseName::case1: return "case1";
        case CaseName::case2: return "case2";
        default: return "case3-mc";
    }
}

inline Scenario make_case_scenario(CaseName name) {
    switch (name) {
        case CaseName::case1: return case1_scenario();
        case CaseName::case2: return case2_scenario();
        default: return case3_scenario();
    }
}

/// Desk-scale training profile; finishes in minutes on a workstation. The
/// exploration scale and policy width shrink with the population so the
/// rank-based gradient stays resolvable; the reference budget stays
/// selectable via full_scale.
inline TrainConfig desk_train_config(CaseName name) {
    TrainConfig c;
    c.population = 40;
    c.generations = name == CaseName::case3_mc ? 150 : 300;
    c.sigma = 0.1;
    c.bootstrap_samples = 64;
    return c;
}

inline PolicyLayout desk_policy_layout() { return {8, 8}; }

inline TrainConfig full_train_config(CaseName name) {
    TrainConfig c;
    c.population = 140;
    c.generations = name == CaseName::case3_mc ? 400 : 600;
    return c;
}

// --- Result tables -------------------------------------------------------------

struct ResultRow {
    int missile = 0;
    double e_t_s = 0.0;
    double e_a_deg = 0.0;
    double zem_m = 0.0;
    double impact_time_s = 0.0;
    bool intercepted = false;
};

inline std::vector<ResultRow> result_table(const RolloutResult& rollout_result) {
    std::vector<ResultRow> rows;
    for (std::size_t i = 0; i < rollout_result.missiles.size(); ++i) {
        const auto& m = rollout_result.missiles[i];
        rows.push_back({static_cast<int>(i), m.e_t, rad_to_deg(m.e_a), m.miss_distance,
                        m.impact_time, m.intercepted});
    }
    return rows;
}

// --- Monte-Carlo study ----------------------------------------------------------

struct EpisodeRecord {
    int episode = 0;
    std::vector<MissileOutcome> missiles;
};

/// Per-missile statistics over episodes, taken on absolute values.
struct McStats {
    std::vector<double> mean_abs_e_a_deg, max_abs_e_a_deg, min_abs_e_a_deg;
    std::vector<double> mean_abs_e_t_s, max_abs_e_t_s, min_abs_e_t_s;
    std::vector<double> mean_zem_m, max_zem_m, min_zem_m;
};

struct MonteCarloResult {
    std::vector<EpisodeRecord> episodes;
    McStats stats;
};

inline McStats compute_mc_stats(const std::vector<EpisodeRecord>& episodes) {
    if (episodes.empty())
        throw std::invalid_argument("compute_mc_stats: no episodes");
    const std::size_t n = episodes.front().missiles.size();
    McStats stats;
    auto fill = [&](auto value, std::vector<double>& mean, std::vector<double>& max,
                    std::vector<double>& min) {
        for (std::size_t i = 0; i < n; ++i) {
            double sum = 0.0;
            double hi = -std::numeric_limits<double>::infinity();
            double lo = std::numeric_limits<double>::infinity();
            for (const auto& ep : episodes) {
                const double v = value(ep.missiles[i]);
                sum += v;
                hi = std::max(hi, v);
                lo = std::min(lo, v);
            }
            mean.push_back(sum / static_cast<double>(episodes.size()));
            max.push_back(hi);
            min.push_back(lo);
        }
    };
    fill([](const MissileOutcome& m) { return std::abs(rad_to_deg(m.e_a)); },
         stats.mean_abs_e_a_deg, stats.max_abs_e_a_deg, stats.min_abs_e_a_deg);
    fill([](const MissileOutcome& m) { return std::abs(m.e_t); },
         stats.mean_abs_e_t_s, stats.max_abs_e_t_s, stats.min_abs_e_t_s);
    fill([](const MissileOutcome& m) { return m.miss_distance; },
         stats.mean_zem_m, stats.max_zem_m, stats.min_zem_m);
    return stats;
}

/// Runs `episodes` independent engagements with per-episode sampled initial
/// conditions and aggregates the per-missile statistics.
inline MonteCarloResult run_monte_carlo(const Scenario& scenario,
                                        const std::vector<ParamVector>& params, int episodes,
                                        int workers = 1) {
    if (episodes < 1)
        throw std::invalid_argument("run_monte_carlo: need at least one episode");
    MonteCarloResult result;
    result.episodes.assign(static_cast<std::size_t>(episodes), {});
    detail::parallel_for(episodes, workers, [&](int e) {
        RolloutOptions options;
        options.episode_seed = static_cast<std::uint64_t>(e);
        const RolloutResult r = rollout(scenario, params, options);
        result.episodes[static_cast<std::size_t>(e)] = {e, r.missiles};
    });
    result.stats = compute_mc_stats(result.episodes);
    return result;
}

// --- Case orchestration -----------------------------------------------------------

struct CaseOverrides {
    std::optional<double> eta;
    std::optional<int> population;
    std::optional<int> generations;
    std::optional<int> workers;
    std::optional<std::uint64_t> seed;
    bool skip_training = false;
    bool full_scale = false;
    std::optional<std::string> checkpoint;  // load parameters (and Xi_d1) from file
    int episodes = 200;                     // Monte-Carlo mode
    std::optional<Scenario> scenario;       // full replacements from a config file
    std::optional<TrainConfig> training;
};

struct CaseRun {
    std::string name;
    Scenario scenario;  // as evaluated (bootstrapped or loaded Xi_d1 installed)
    TrainConfig training;
    std::vector<ParamVector> params;
    std::vector<HistoryRow> history;
    std::uint64_t trained_generations = 0;
    RolloutResult evaluation;  // demonstrative episode with trace
    std::vector<ResultRow> table;
    std::optional<MonteCarloResult> monte_carlo;
};

inline CaseRun run_case(CaseName name, const CaseOverrides& overrides = {}) {
    CaseRun run;
    run.name = case_name_string(name);

    Scenario scenario = overrides.scenario ? *overrides.scenario : make_case_scenario(name);
    if (!overrides.scenario && !overrides.full_scale)
        scenario.policy = desk_policy_layout();
    TrainConfig config = overrides.training
                             ? *overrides.training
                             : (overrides.full_scale ? full_train_config(name) : desk_train_config(name));
    if (overrides.eta)
        scenario.guidance.gain = *overrides.eta;
    if (overrides.seed) {
        scenario.seed = *overrides.seed;
        config.seed = *overrides.seed;
    }
    if (overrides.population)
        config.population = *overrides.population;
    if (overrides.generations)
        config.generations = *overrides.generations;
    if (overrides.workers)
        config.workers = *overrides.workers;
    scenario.validate();

    const int n = scenario.missile_count();
    std::vector<ParamVector> params(static_cast<std::size_t>(n),
                                    ParamVector::Zero(scenario.policy.param_count()));
    std::optional<Ecosystem> resume;
    if (overrides.checkpoint) {
        const Checkpoint ckpt = load_checkpoint(*overrides.checkpoint);
        if (ckpt.policy.q1 != scenario.policy.q1 || ckpt.policy.q2 != scenario.policy.q2 ||
            ckpt.ecosystem.population_count() != n)
            throw std::runtime_error("run_case: checkpoint does not match the scenario");
        scenario.impact_angles.nominal = ckpt.nominal_impact_angle;
        params = ckpt.ecosystem.params;
        resume = ckpt.ecosystem;
    }

    if (!overrides.skip_training) {
        TrainResult trained = train(scenario, config, resume);
        scenario = trained.scenario;
        params = trained.ecosystem.params;
        run.history = std::move(trained.history);
        run.trained_generations = trained.ecosystem.generation;
    }

    run.scenario = scenario;
    run.training = config;
    run.params = params;

    RolloutOptions options;
    options.record_trace = true;
    options.episode_seed = 0;
    run.evaluation = rollout(scenario, params, options);
    run.table = result_table(run.evaluation);

    if (name == CaseName::case3_mc)
        run.monte_carlo = run_monte_carlo(scenario, params, overrides.episodes, config.workers);
    return run;
}

// --- Artifact emission --------------------------------------------------------------

/// Writes trajectories.csv, errors.csv, history.csv, summary.json (and, for
/// Monte-Carlo runs, episodes.csv) under out_dir.
inline void emit_artifacts(const CaseRun& run, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);

    {
        CsvWriter csv(out_dir / "trajectories.csv");
        csv.row({"t", "missile", "x", "y", "v", "alpha", "xi", "a_l", "a_v"});
        for (const auto& r : run.evaluation.trace)
            csv.row({CsvWriter::field(r.time), CsvWriter::field(r.missile), CsvWriter::field(r.x),
                     CsvWriter::field(r.y), CsvWriter::field(r.velocity),
                     CsvWriter::field(r.flight_path_angle), CsvWriter::field(r.los_angle),
                     CsvWriter::field(r.a_l), CsvWriter::field(r.a_v)});
    }
    {
        CsvWriter csv(out_dir / "errors.csv");
        csv.row({"t", "missile", "e_t", "e_a"});
        for (const auto& r : run.evaluation.error_rows)
            csv.row({CsvWriter::field(r.time), CsvWriter::field(r.missile),
                     CsvWriter::field(r.e_t), CsvWriter::field(r.e_a)});
    }
    {
        CsvWriter csv(out_dir / "history.csv");
        std::vector<std::string> header{"generation", "eta_alpha"};
        for (int i = 0; i < run.scenario.missile_count(); ++i)
            header.push_back("mean_fitness_" + std::to_string(i + 1));
        csv.row(header);
        for (const auto& row : run.history) {
            std::vector<std::string> fields{CsvWriter::field(row.generation),
                                            CsvWriter::field(row.eta_alpha)};
            for (double f : row.mean_fitness)
                fields.push_back(CsvWriter::field(f));
            csv.row(fields);
        }
    }
    if (run.monte_carlo) {
        CsvWriter csv(out_dir / "episodes.csv");
        csv.row({"episode", "missile", "e_t", "e_a_deg", "zem", "impact_time", "intercepted"});
        for (const auto& ep : run.monte_carlo->episodes)
            for (std::size_t i = 0; i < ep.missiles.size(); ++i) {
                const auto& m = ep.missiles[i];
                csv.row({CsvWriter::field(ep.episode), CsvWriter::field(static_cast<int>(i)),
                         CsvWriter::field(m.e_t), CsvWriter::field(rad_to_deg(m.e_a)),
                         CsvWriter::field(m.miss_distance), CsvWriter::field(m.impact_time),
                         m.intercepted ? "1" : "0"});
            }
    }

    json summary;
    summary["case"] = run.name;
    summary["scenario"] = to_json(run.scenario);
    summary["training"] = to_json(run.training);
    summary["trained_generations"] = run.trained_generations;
    summary["nominal_impact_angle_deg"] = rad_to_deg(run.scenario.impact_angles.nominal);
    summary["results"] = json::array();
    for (const auto& row : run.table)
        summary["results"].push_back({{"missile", row.missile + 1},
                                      {"e_t_s", row.e_t_s},
                                      {"e_a_deg", row.e_a_deg},
                                      {"zem_m", row.zem_m},
                                      {"impact_time_s", row.impact_time_s},
                                      {"intercepted", row.intercepted}});
    if (run.monte_carlo) {
        const auto& st = run.monte_carlo->stats;
        summary["monte_carlo"] = {{"episodes", run.monte_carlo->episodes.size()},
                                  {"abs_e_a_deg", {{"mean", st.mean_abs_e_a_deg},
                                                   {"max", st.max_abs_e_a_deg},
                                                   {"min", st.min_abs_e_a_deg}}},
                                  {"abs_e_t_s", {{"mean", st.mean_abs_e_t_s},
                                                 {"max", st.max_abs_e_t_s},
                                                 {"min", st.min_abs_e_t_s}}},
                                  {"zem_m", {{"mean", st.mean_zem_m},
                                             {"max", st.max_zem_m},
                                             {"min", st.min_zem_m}}}};
    }

    std::ofstream out(out_dir / "summary.json");
    if (!out)
        throw std::runtime_error("emit_artifacts: cannot write summary.json");
    out << summary.dump(2) << '\n';
}

}  // namespace salvo
