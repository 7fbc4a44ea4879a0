// Command-line front end: train consensus controllers, reproduce the built-in
// engagement cases, run the gradient-estimator benchmark, and run Monte-Carlo
// robustness studies. All outputs are CSV files plus a summary.json.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "salvo/bench.hpp"
#include "salvo/cases.hpp"
#include "salvo/io.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    std::string case_name = "case1";
    std::string checkpoint;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    std::optional<int> population;
    std::optional<int> generations;
    std::optional<double> eta;
    std::optional<int> workers;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "JSON config file (scenario/training tree)");
    cmd->add_option("--case", flags.case_name, "built-in case: case1, case2, case3-mc");
    cmd->add_option("--seed", flags.seed, "master random seed");
    cmd->add_option("--population", flags.population, "population size m (even)");
    cmd->add_option("--generations", flags.generations, "training generations");
    cmd->add_option("--eta", flags.eta, "guidance gain in [0,1]; 0 = pure PNG");
    cmd->add_option("--workers", flags.workers, "parallel rollout workers");
    cmd->add_option("--checkpoint", flags.checkpoint, "checkpoint file to load/resume");
    cmd->add_option("--out-dir", flags.out_dir, "output directory");
}

salvo::CaseOverrides overrides_from(const CommonFlags& flags) {
    salvo::CaseOverrides o;
    o.eta = flags.eta;
    o.population = flags.population;
    o.generations = flags.generations;
    o.workers = flags.workers;
    o.seed = flags.seed;
    if (!flags.checkpoint.empty())
        o.checkpoint = flags.checkpoint;
    if (!flags.config_path.empty()) {
        std::ifstream in(flags.config_path);
        if (!in)
            throw std::runtime_error("cannot open config file: " + flags.config_path);
        salvo::json doc = salvo::json::parse(in);
        if (doc.contains("scenario"))
            o.scenario = salvo::scenario_from_json(doc.at("scenario"));
        if (doc.contains("training"))
            o.training = salvo::train_config_from_json(doc.at("training"));
    }
    return o;
}

void print_table(const salvo::CaseRun& run) {
    std::printf("%-8s %12s %12s %12s %12s\n", "missile", "e_t (s)", "e_a (deg)", "ZEM (m)",
                "impact (s)");
    for (const auto& row : run.table)
        std::printf("M%-7d %12.4g %12.4g %12.4g %12.3f\n", row.missile + 1, row.e_t_s, row.e_a_deg,
                    row.zem_m, row.impact_time_s);
    if (run.monte_carlo) {
        const auto& st = run.monte_carlo->stats;
        std::printf("\nMonte-Carlo statistics over %zu episodes (absolute values):\n",
                    run.monte_carlo->episodes.size());
        std::printf("%-8s %-6s", "index", "stat");
        for (std::size_t i = 0; i < st.mean_abs_e_a_deg.size(); ++i)
            std::printf(" %11s%zu", "M", i + 1);
        std::printf("\n");
        auto line = [&](const char* index, const char* stat, const std::vector<double>& v) {
            std::printf("%-8s %-6s", index, stat);
            for (double x : v)
                std::printf(" %12.4g", x);
            std::printf("\n");
        };
        line("e_a(deg)", "mean", st.mean_abs_e_a_deg);
        line("", "max", st.max_abs_e_a_deg);
        line("", "min", st.min_abs_e_a_deg);
        line("e_t(s)", "mean", st.mean_abs_e_t_s);
        line("", "max", st.max_abs_e_t_s);
        line("", "min", st.min_abs_e_t_s);
        line("ZEM(m)", "mean", st.mean_zem_m);
        line("", "max", st.max_zem_m);
        line("", "min", st.min_zem_m);
    }
}

void save_run_checkpoint(const salvo::CaseRun& run, const std::filesystem::path& out_dir) {
    salvo::Checkpoint ckpt;
    ckpt.ecosystem.params = run.params;
    ckpt.ecosystem.generation = run.trained_generations;
    ckpt.policy = run.scenario.policy;
    ckpt.nominal_impact_angle = run.scenario.impact_angles.nominal;
    salvo::save_checkpoint(out_dir / "checkpoint.bin", ckpt);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"salvo: co-evolutionary cooperative guidance laboratory"};
    app.require_subcommand(1);

    CommonFlags train_flags, case_flags, mc_flags, bench_flags;

    auto* train_cmd = app.add_subcommand("train", "train consensus controllers on a scenario");
    add_common(train_cmd, train_flags);

    auto* case_cmd = app.add_subcommand("run-case", "train (or load) and evaluate a built-in case");
    add_common(case_cmd, case_flags);
    bool skip_training = false;
    bool full_scale = false;
    int case_episodes = 200;
    case_cmd->add_flag("--skip-training", skip_training, "evaluate without training");
    case_cmd->add_flag("--full-scale", full_scale, "reference training budget (population 140)");
    case_cmd->add_option("--episodes", case_episodes, "Monte-Carlo episodes (case3-mc)");

    auto* mc_cmd = app.add_subcommand("monte-carlo", "Monte-Carlo robustness study (case 3)");
    add_common(mc_cmd, mc_flags);
    bool mc_skip_training = false;
    int mc_episodes = 200;
    mc_cmd->add_option("--episodes", mc_episodes, "number of episodes");
    mc_cmd->add_flag("--skip-training", mc_skip_training, "evaluate without training");

    auto* bench_cmd = app.add_subcommand("bench-gradient",
                                         "rescaled vs plain gradient estimator comparison");
    int bench_trials = 200;
    int bench_m = 140;
    double bench_sigma = 0.2;
    double theta_i = salvo::bench::BenchPoint{}.theta_i;
    double theta_c = salvo::bench::BenchPoint{}.theta_c;
    int bench_resolution = 2048;
    std::uint64_t bench_seed = 0;
    std::string bench_out = "out";
    bench_cmd->add_option("--trials", bench_trials, "number of seeded trials");
    bench_cmd->add_option("--population", bench_m, "samples per trial (even)");
    bench_cmd->add_option("--sigma", bench_sigma, "sampling standard deviation");
    bench_cmd->add_option("--theta-i", theta_i, "evaluation point, own parameter");
    bench_cmd->add_option("--theta-c", theta_c, "evaluation point, neighbor parameter");
    bench_cmd->add_option("--resolution", bench_resolution, "quadrature resolution");
    bench_cmd->add_option("--seed", bench_seed, "base seed");
    bench_cmd->add_option("--out-dir", bench_out, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*train_cmd || *case_cmd || *mc_cmd) {
            CommonFlags& flags = *train_cmd ? train_flags : (*case_cmd ? case_flags : mc_flags);
            salvo::CaseOverrides overrides = overrides_from(flags);
            salvo::CaseName name = salvo::parse_case_name(*mc_cmd ? "case3-mc" : flags.case_name);
            if (*case_cmd) {
                overrides.skip_training = skip_training;
                overrides.full_scale = full_scale;
                overrides.episodes = case_episodes;
            }
            if (*mc_cmd) {
                overrides.skip_training = mc_skip_training;
                overrides.episodes = mc_episodes;
            }

            const salvo::CaseRun run = salvo::run_case(name, overrides);
            const std::filesystem::path out_dir(flags.out_dir);
            salvo::emit_artifacts(run, out_dir);
            save_run_checkpoint(run, out_dir);
            print_table(run);
            std::printf("\nartifacts written to %s\n", out_dir.string().c_str());
            return 0;
        }

        // bench-gradient
        const salvo::bench::BenchPoint point{theta_i, theta_c};
        const auto study = salvo::bench::run_comparison_study(point, bench_m, bench_sigma,
                                                              bench_trials, bench_seed,
                                                              bench_resolution);
        std::filesystem::create_directories(bench_out);
        {
            salvo::CsvWriter csv(std::filesystem::path(bench_out) / "bench_trials.csv");
            csv.row({"trial", "reference", "rescaled", "plain", "err_rescaled", "err_plain"});
            for (std::size_t t = 0; t < study.rows.size(); ++t) {
                const auto& r = study.rows[t];
                csv.row({salvo::CsvWriter::field(static_cast<int>(t)),
                         salvo::CsvWriter::field(r.reference), salvo::CsvWriter::field(r.rescaled),
                         salvo::CsvWriter::field(r.plain),
                         salvo::CsvWriter::field(r.error_rescaled()),
                         salvo::CsvWriter::field(r.error_plain())});
            }
        }
        std::printf("trials=%d rescaled_wins=%d (%.1f%%)\n", study.trials, study.rescaled_wins,
                    100.0 * study.rescaled_wins / study.trials);
        std::printf("median |error|: rescaled=%.6f plain=%.6f\n", study.median_error_rescaled,
                    study.median_error_plain);
        std::printf("trial rows written to %s/bench_trials.csv\n", bench_out.c_str());
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
