// ldg: exact solvers, sampled estimators, and training loops for
// log-density policy gradients on tabular MDPs.
//
// Exit codes: 0 success, 2 configuration error, 3 model or assumption
// error, 4 I/O error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ldg/csv.hpp"
#include "ldg/errors.hpp"
#include "ldg/exact.hpp"
#include "ldg/harness.hpp"
#include "ldg/minmax.hpp"
#include "ldg/serialize.hpp"
#include "ldg/td.hpp"

namespace {

using namespace ldg;

// "grid-<side>" or a path to a model JSON file.
TabularMdp resolve_env(const std::string& env) {
    if (env.size() > 5 && env.substr(env.size() - 5) == ".json")
        return load_mdp_json(env);
    return make_env<double>(env);
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir);
}

int run_solve(const std::string& env, double gamma, double lambda,
              const std::string& out) {
    TabularMdp mdp = resolve_env(env);
    SoftmaxPolicy policy = SoftmaxPolicy::zeros(mdp);
    OccupancyTable occ = solve_occupancy(mdp, policy, gamma);
    GradTable grad = solve_log_density_gradient(mdp, policy, gamma, lambda);
    ensure_dir(out);
    {
        auto os = open_output(out + "/occupancy.csv");
        write_occupancy_csv(os, occ, mdp.num_actions);
    }
    {
        auto os = open_output(out + "/grad.csv");
        write_grad_csv(os, grad, mdp.num_actions);
    }
    if (gamma < 1.0) {
        ValueTables vals = solve_values(mdp, policy, gamma);
        // reuse the pair-table writer for Q(s, a)
        OccupancyTable qocc;
        qocc.gamma = gamma;
        qocc.d = vals.q;
        auto os = open_output(out + "/values.csv");
        write_occupancy_csv(os, qocc, mdp.num_actions);
    }
    double j_gamma = policy_performance(mdp, policy, gamma);
    double j_one = policy_performance(mdp, policy, 1.0);
    std::printf("J_gamma=%.12g J_1=%.12g tables written to %s\n", j_gamma,
                j_one, out.c_str());
    return 0;
}

int run_td(const std::string& env, double gamma, std::uint64_t seed,
           long iters, double step_a, double step_b,
           const std::string& out) {
    TabularMdp mdp = resolve_env(env);
    SoftmaxPolicy policy = SoftmaxPolicy::zeros(mdp);
    ensure_dir(out);
    GradTable reference = solve_log_density_gradient(mdp, policy, gamma, 1.0);
    OccupancyTable occ = solve_occupancy(mdp, policy, gamma);
    auto curve = open_output(out + "/td_curve.csv");
    TdCurveOptionsT<double> copts;
    copts.reference = &reference;
    copts.occupancy = &occ;
    copts.stride = std::max<long>(1, iters / 200);
    copts.out = &curve;
    Rng rng(seed);
    GradTable w = run_td0(mdp, policy, gamma, iters,
                          StepSchedule::robbins_monro(step_a, step_b), rng,
                          copts);
    auto os = open_output(out + "/w_td.csv");
    write_grad_csv(os, w, mdp.num_actions);
    double err = weighted_l1_distance(occ.d, w.w, reference.w);
    std::printf("weighted_L1_error=%.12g after %ld steps; tables in %s\n",
                err, iters, out.c_str());
    return 0;
}

int run_minmax(const std::string& env, double gamma, std::uint64_t seed,
               long iters, double lambda, double sched_c,
               const std::string& out) {
    TabularMdp mdp = resolve_env(env);
    SoftmaxPolicy policy = SoftmaxPolicy::zeros(mdp);
    ensure_dir(out);
    GradTable exact = solve_log_density_gradient(mdp, policy, gamma, lambda);
    FeatureMap features = one_hot_features(mdp);
    ProjectionSets sets = default_projection_sets(exact.w.norm());
    SaddleSolution reference;
    reference.alpha = exact.w;  // one-hot features: w = alpha
    reference.beta = MatrixX<double>::Zero(features.dim, mdp.num_pairs());
    reference.tau = VectorX<double>::Zero(mdp.num_pairs());
    auto log = open_output(out + "/minmax_log.csv");
    SaddleRunOptions opts;
    opts.log = &log;
    opts.log_stride = std::max<long>(1, iters / 100);
    opts.reference = &reference;
    opts.log_gap = true;
    Rng rng(seed);
    ProjectedRunResult run =
        run_projected_ldg(mdp, policy, gamma, features, lambda, sets, iters,
                          SaddleSchedule::inv_sqrt(sched_c), rng, opts);
    GradTable learned;
    learned.gamma = gamma;
    learned.w = w_from_linear(features, run.alpha_bar);
    auto os = open_output(out + "/w_minmax.csv");
    write_grad_csv(os, learned, mdp.num_actions);
    std::printf("|w_avg - w_exact|_F=%.12g after %ld steps; tables in %s\n",
                (learned.w - exact.w).norm(), iters, out.c_str());
    return 0;
}

int run_train(const std::optional<std::string>& env,
              const std::optional<std::string>& config_path,
              const std::optional<std::uint64_t>& seed,
              const std::string& out, bool four_way) {
    ExperimentConfig cfg;
    if (config_path) cfg = load_config_json(*config_path);
    if (env) cfg.env = *env;
    if (seed) cfg.seeds = {*seed};
    cfg.validate();
    TabularMdp mdp = resolve_env(cfg.env);
    std::vector<TrainingRecord> records =
        four_way ? compare_estimators(mdp, cfg) : train(mdp, cfg);
    emit_report(records, out);
    // final mean J1 per estimator
    std::map<std::string, std::pair<double, long>> fin;
    long last = 0;
    for (const TrainingRecord& r : records) last = std::max(last, r.iteration);
    for (const TrainingRecord& r : records)
        if (r.iteration == last) {
            auto& slot = fin[r.estimator];
            slot.first += r.j1;
            slot.second += 1;
        }
    for (const auto& [name, sum] : fin)
        std::printf("%s: final mean J1 = %.6g over %ld seeds\n", name.c_str(),
                    sum.first / static_cast<double>(sum.second), sum.second);
    std::printf("report written to %s\n", out.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Log-density policy gradients for tabular MDPs: exact solvers, "
        "sampled estimators, and training comparisons"};
    app.require_subcommand(1);

    std::string env = "grid-3";
    double gamma = 1.0;
    double lambda = 1.0;
    std::uint64_t seed = 1;
    std::string out = "out";
    std::optional<std::string> cfg_env;
    std::optional<std::string> cfg_path;
    std::optional<std::uint64_t> cfg_seed;
    long iters = 100000;
    double step_a = 1.0, step_b = 100.0, sched_c = 0.5;

    auto* solve = app.add_subcommand("solve",
                                     "Write exact occupancy, value, and "
                                     "gradient tables for the uniform policy");
    solve->add_option("--env", env, "grid-<side> or model JSON path");
    solve->add_option("--gamma", gamma, "occupancy discount in [0, 1]");
    solve->add_option("--lambda", lambda, "mean regularizer (gamma = 1)");
    solve->add_option("--out", out, "output directory");

    auto* td = app.add_subcommand(
        "td", "Backward-bootstrapping TD(0) for the gradient table");
    td->add_option("--env", env, "grid-<side> or model JSON path");
    td->add_option("--gamma", gamma, "occupancy discount in [0, 1]");
    td->add_option("--seed", seed, "RNG seed");
    td->add_option("--iters", iters, "number of TD steps");
    td->add_option("--step-a", step_a, "step size numerator a in a/(b+t)");
    td->add_option("--step-b", step_b, "step size offset b in a/(b+t)");
    td->add_option("--out", out, "output directory");

    auto* minmax = app.add_subcommand(
        "minmax", "Projected stochastic saddle-point gradient estimation");
    minmax->add_option("--env", env, "grid-<side> or model JSON path");
    minmax->add_option("--gamma", gamma, "occupancy discount in [0, 1]");
    minmax->add_option("--seed", seed, "RNG seed");
    minmax->add_option("--iters", iters, "number of saddle steps");
    minmax->add_option("--lambda", lambda, "mean regularizer weight");
    minmax->add_option("--schedule-c", sched_c, "step scale c in c/sqrt(t)");
    minmax->add_option("--out", out, "output directory");

    auto* train_cmd = app.add_subcommand(
        "train", "Policy optimization with one configured estimator");
    train_cmd->add_option("--env", cfg_env, "overrides the config env");
    train_cmd->add_option("--config", cfg_path, "JSON experiment config");
    train_cmd->add_option("--seed", cfg_seed,
                          "run a single seed instead of the config list");
    train_cmd->add_option("--out", out, "report directory");

    auto* compare = app.add_subcommand(
        "compare", "Train all four estimators under shared settings");
    compare->add_option("--env", cfg_env, "overrides the config env");
    compare->add_option("--config", cfg_path, "JSON experiment config");
    compare->add_option("--seed", cfg_seed,
                        "run a single seed instead of the config list");
    compare->add_option("--out", out, "report directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (solve->parsed()) return run_solve(env, gamma, lambda, out);
        if (td->parsed())
            return run_td(env, gamma, seed, iters, step_a, step_b, out);
        if (minmax->parsed())
            return run_minmax(env, gamma, seed, iters, lambda, sched_c, out);
        if (train_cmd->parsed())
            return run_train(cfg_env, cfg_path, cfg_seed, out, false);
        if (compare->parsed())
            return run_train(cfg_env, cfg_path, cfg_seed, out, true);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const AssumptionError& e) {
        std::cerr << "assumption error: " << e.what() << '\n';
        return 3;
    } catch (const ModelError& e) {
        std::cerr << "model error: " << e.what() << '\n';
        return 3;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
