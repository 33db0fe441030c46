#ifndef LDG_HARNESS_HPP
#define LDG_HARNESS_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "ldg/csv.hpp"
#include "ldg/errors.hpp"
#include "ldg/exact.hpp"
#include "ldg/mdp.hpp"
#include "ldg/minmax.hpp"
#include "ldg/policy.hpp"
#include "ldg/rng.hpp"
#include "ldg/sampling.hpp"
#include "ldg/svg.hpp"

namespace ldg {

enum class Estimator { reinforce, theoretical_pg, theoretical_ldg, minmax_ldg };

inline Estimator parse_estimator(const std::string& tag) {
    if (tag == "reinforce") return Estimator::reinforce;
    if (tag == "theoretical-pg") return Estimator::theoretical_pg;
    if (tag == "theoretical-ldg") return Estimator::theoretical_ldg;
    if (tag == "minmax-ldg") return Estimator::minmax_ldg;
    throw ConfigError("unknown estimator tag: " + tag);
}

inline const char* estimator_name(Estimator e) {
    switch (e) {
        case Estimator::reinforce: return "reinforce";
        case Estimator::theoretical_pg: return "theoretical-pg";
        case Estimator::theoretical_ldg: return "theoretical-ldg";
        default: return "minmax-ldg";
    }
}

// Settings for one training run. gamma_eval discounts the objective the
// score-function estimators target; gamma_train is the occupancy discount
// the density-gradient estimators solve under (1 = average reward).
struct ExperimentConfig {
    std::string env = "grid-3";
    std::string estimator = "minmax-ldg";
    double gamma_eval = 0.9;
    double gamma_train = 1.0;
    double eta = 0.1;
    long iterations = 200;
    long budget = 10000;  // environment samples per policy update
    long horizon = 100;   // episode length for the score-function estimator
    double lambda = 1.0;
    double radius_scale = 10.0;
    std::string schedule = "inv-sqrt";  // inv-sqrt | inv-sqrt-mstar | constant
    double schedule_c = 0.5;
    bool residual_correction = false;
    bool warm_start = true;
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};

    void validate() const {
        Estimator e = parse_estimator(estimator);
        if (!(gamma_eval >= 0.0 && gamma_eval <= 1.0))
            throw ConfigError("gamma_eval must lie in [0, 1]");
        if (!(gamma_train >= 0.0 && gamma_train <= 1.0))
            throw ConfigError("gamma_train must lie in [0, 1]");
        if ((e == Estimator::reinforce || e == Estimator::theoretical_pg) &&
            gamma_eval >= 1.0)
            throw ConfigError("score-function estimators need gamma_eval < 1");
        if (!(eta >= 0.0)) throw ConfigError("eta must be nonnegative");
        if (iterations < 1) throw ConfigError("iterations must be positive");
        if (budget < 1) throw ConfigError("budget must be positive");
        if (horizon < 1) throw ConfigError("horizon must be positive");
        if (gamma_train >= 1.0 && lambda <= 0.0 &&
            (e == Estimator::theoretical_ldg || e == Estimator::minmax_ldg))
            throw ConfigError("lambda must be positive when gamma_train = 1");
        if (radius_scale <= 0.0)
            throw ConfigError("radius_scale must be positive");
        if (schedule != "inv-sqrt" && schedule != "inv-sqrt-mstar" &&
            schedule != "constant")
            throw ConfigError("unknown schedule: " + schedule);
        if (schedule_c <= 0.0) throw ConfigError("schedule_c must be positive");
        if (seeds.empty()) throw ConfigError("at least one seed is required");
    }
};

struct TrainingRecord {
    std::string estimator;
    std::uint64_t seed = 0;
    long iteration = 0;  // 1-based, written after the policy update
    double j1 = 0.0;
    std::optional<double> gradient_error;  // cosine distance to exact grad J_1
    long long samples_consumed = 0;        // cumulative per seed
    long long wall_clock_ns = 0;           // cumulative per seed
};

// Practical score-function gradient, no baseline: per episode accumulates
// sum_t grad log pi(a_t|s_t) * G_t with G_t the discounted return-to-go,
// averaged over fixed-length episodes. States are weighted by visitation,
// not by gamma^t, matching the common implementation of the method.
template <typename Scalar>
VectorX<Scalar> gradient_reinforce(const TabularMdpT<Scalar>& mdp,
                                   const SoftmaxPolicyT<Scalar>& policy,
                                   Scalar gamma, long episodes, long horizon,
                                   Rng& rng) {
    if (!(gamma >= Scalar(0) && gamma < Scalar(1)))
        throw ConfigError("episodic score-function gradient needs gamma < 1");
    if (episodes < 1 || horizon < 1)
        throw ConfigError("episodes and horizon must be positive");
    VectorX<Scalar> grad = VectorX<Scalar>::Zero(mdp.num_pairs());
    MatrixX<Scalar> probs = policy_probs(policy, mdp);
    std::vector<Scalar> returns(static_cast<std::size_t>(horizon));
    for (long e = 0; e < episodes; ++e) {
        auto traj = sample_trajectory(mdp, policy, horizon, rng);
        Scalar tail = Scalar(0);
        for (long t = horizon; t-- > 0;) {
            tail = traj[static_cast<std::size_t>(t)].r + gamma * tail;
            returns[static_cast<std::size_t>(t)] = tail;
        }
        for (long t = 0; t < horizon; ++t) {
            const auto& step = traj[static_cast<std::size_t>(t)];
            Scalar coef = returns[static_cast<std::size_t>(t)];
            for (Index b = 0; b < mdp.num_actions; ++b)
                grad(mdp.pair_index(step.s, b)) +=
                    coef * ((b == step.a ? Scalar(1) : Scalar(0)) -
                            probs(step.s, b));
        }
    }
    return grad / Scalar(episodes);
}

namespace detail {

inline std::optional<double> cosine_distance(const VectorX<double>& a,
                                             const VectorX<double>& b) {
    double na = a.norm(), nb = b.norm();
    if (na < 1e-300 || nb < 1e-300) return std::nullopt;
    return 1.0 - a.dot(b) / (na * nb);
}

}  // namespace detail

// Plain gradient ascent from theta = 0 for one seed; appends one record per
// iteration. The sampled estimators draw from rng; the closed-form ones do
// not touch it.
inline void train_one_seed(const TabularMdpT<double>& mdp,
                           const ExperimentConfig& cfg, std::uint64_t seed,
                           std::vector<TrainingRecord>& out) {
    const Estimator kind = parse_estimator(cfg.estimator);
    SoftmaxPolicyT<double> policy = SoftmaxPolicyT<double>::zeros(mdp);
    Rng rng(seed);
    long long samples = 0;
    const auto start = std::chrono::steady_clock::now();

    SaddleStateT<double> saddle;
    FeatureMapT<double> features = one_hot_features(mdp);
    bool saddle_ready = false;
    std::vector<StateActionPair> sink;

    for (long k = 1; k <= cfg.iterations; ++k) {
        const double lam = cfg.lambda > 0.0 ? cfg.lambda : 1.0;
        GradientReportT<double> reference =
            exact_policy_gradient_ldg(mdp, policy, 1.0, lam);
        VectorX<double> ghat;
        switch (kind) {
            case Estimator::reinforce: {
                long episodes = std::max<long>(1, cfg.budget / cfg.horizon);
                ghat = gradient_reinforce(mdp, policy, cfg.gamma_eval,
                                          episodes, cfg.horizon, rng);
                samples += episodes * cfg.horizon;
                break;
            }
            case Estimator::theoretical_pg: {
                if (cfg.residual_correction)
                    ghat = residual_decomposition(mdp, policy, cfg.gamma_eval)
                               .grad;
                else
                    ghat = practical_policy_gradient(mdp, policy,
                                                     cfg.gamma_eval)
                               .grad;
                break;
            }
            case Estimator::theoretical_ldg: {
                ghat = exact_policy_gradient_ldg(mdp, policy, cfg.gamma_train,
                                                 cfg.lambda)
                           .grad;
                break;
            }
            case Estimator::minmax_ldg: {
                GradTableT<double> exact_w = solve_log_density_gradient(
                    mdp, policy, cfg.gamma_train, cfg.lambda);
                ProjectionSets sets =
                    default_projection_sets(exact_w.w.norm());
                double scale = cfg.radius_scale / 10.0;
                sets.r_x *= scale;
                sets.r_y *= scale;
                sets.r_z *= scale;
                SaddleSchedule schedule = SaddleSchedule::inv_sqrt(
                    cfg.schedule_c);
                if (cfg.schedule == "constant")
                    schedule = SaddleSchedule::constant(cfg.schedule_c);
                else if (cfg.schedule == "inv-sqrt-mstar") {
                    OccupancyTableT<double> occ =
                        solve_occupancy(mdp, policy, cfg.gamma_train);
                    StepScaleT<double> sc = step_scale(
                        mdp, policy, occ, features, cfg.lambda, sets);
                    schedule =
                        SaddleSchedule::theory(cfg.schedule_c, sc.m_star);
                }
                if (!saddle_ready || !cfg.warm_start) {
                    saddle = make_saddle_state(features, mdp.num_pairs(),
                                               cfg.lambda);
                    saddle_ready = true;
                }
                saddle.lambda = cfg.lambda;
                sink.clear();
                SaddleRunOptionsT<double> opts;
                opts.sample_sink = &sink;
                ProjectedRunResultT<double> run = run_projected_ldg_from(
                    std::move(saddle), mdp, policy, cfg.gamma_train, features,
                    cfg.lambda, sets, cfg.budget, schedule, rng, opts);
                saddle = std::move(run.state);
                MatrixX<double> w_bar =
                    w_from_linear(features, run.alpha_bar);
                ghat = estimate_gradient_from_w(sink, mdp, w_bar);
                samples += cfg.budget;
                break;
            }
        }
        policy.theta += cfg.eta * ghat;
        TrainingRecord rec;
        rec.estimator = cfg.estimator;
        rec.seed = seed;
        rec.iteration = k;
        rec.j1 = policy_performance(mdp, policy, 1.0);
        rec.gradient_error = detail::cosine_distance(ghat, reference.grad);
        rec.samples_consumed = samples;
        rec.wall_clock_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                                std::chrono::steady_clock::now() - start)
                                .count();
        out.push_back(std::move(rec));
    }
}

inline std::vector<TrainingRecord> train(const TabularMdpT<double>& mdp,
                                         const ExperimentConfig& cfg) {
    cfg.validate();
    std::vector<TrainingRecord> records;
    records.reserve(cfg.seeds.size() * static_cast<std::size_t>(cfg.iterations));
    for (std::uint64_t seed : cfg.seeds) train_one_seed(mdp, cfg, seed, records);
    return records;
}

inline std::vector<TrainingRecord> train(const ExperimentConfig& cfg) {
    cfg.validate();
    TabularMdpT<double> mdp = make_env<double>(cfg.env);
    return train(mdp, cfg);
}

inline void sort_records(std::vector<TrainingRecord>& records) {
    std::stable_sort(records.begin(), records.end(),
                     [](const TrainingRecord& a, const TrainingRecord& b) {
                         return std::tie(a.estimator, a.seed, a.iteration) <
                                std::tie(b.estimator, b.seed, b.iteration);
                     });
}

// Runs all four estimators under the shared settings of base (its own
// estimator tag is ignored) and merges the records by (estimator, seed,
// iteration).
inline std::vector<TrainingRecord> compare_estimators(
    const TabularMdpT<double>& mdp, const ExperimentConfig& base) {
    static const char* tags[] = {"reinforce", "theoretical-pg",
                                 "theoretical-ldg", "minmax-ldg"};
    std::vector<TrainingRecord> all;
    for (const char* tag : tags) {
        ExperimentConfig cfg = base;
        cfg.estimator = tag;
        std::vector<TrainingRecord> part = train(mdp, cfg);
        all.insert(all.end(), std::make_move_iterator(part.begin()),
                   std::make_move_iterator(part.end()));
    }
    sort_records(all);
    return all;
}

inline void write_curves_csv(std::ostream& os,
                             const std::vector<TrainingRecord>& records) {
    os << "estimator,seed,iteration,J1,gradient_error,samples_consumed,"
          "wall_clock_ns\n";
    for (const TrainingRecord& r : records) {
        os << r.estimator << ',' << r.seed << ',' << r.iteration << ','
           << format_value(r.j1) << ',';
        if (r.gradient_error) os << format_value(*r.gradient_error);
        os << ',' << r.samples_consumed << ',' << r.wall_clock_ns << '\n';
    }
}

inline std::vector<TrainingRecord> read_curves_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw IoError("empty curves file");
    std::vector<TrainingRecord> records;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f = split_csv_line(line);
        if (f.size() != 7) throw IoError("curves row needs 7 fields");
        TrainingRecord r;
        r.estimator = f[0];
        r.seed = static_cast<std::uint64_t>(std::stoull(f[1]));
        r.iteration = std::stol(f[2]);
        r.j1 = parse_value(f[3]);
        if (!f[4].empty()) r.gradient_error = parse_value(f[4]);
        r.samples_consumed = std::stoll(f[5]);
        r.wall_clock_ns = std::stoll(f[6]);
        records.push_back(std::move(r));
    }
    return records;
}

inline std::vector<ChartSeries> curve_series(
    const std::vector<TrainingRecord>& records) {
    // estimator -> iteration -> J1 values across seeds
    std::map<std::string, std::map<long, std::vector<double>>> grouped;
    for (const TrainingRecord& r : records)
        grouped[r.estimator][r.iteration].push_back(r.j1);
    std::vector<ChartSeries> series;
    for (const auto& [name, per_iter] : grouped) {
        ChartSeries s;
        s.name = name;
        for (const auto& [iter, vals] : per_iter) {
            double mean = 0.0;
            for (double v : vals) mean += v;
            mean /= static_cast<double>(vals.size());
            double var = 0.0;
            for (double v : vals) var += (v - mean) * (v - mean);
            var /= static_cast<double>(vals.size());
            s.x.push_back(static_cast<double>(iter));
            s.mean.push_back(mean);
            s.sd.push_back(std::sqrt(var));
        }
        series.push_back(std::move(s));
    }
    return series;
}

// Writes curves.csv and curves.svg under out_dir, creating it if needed.
inline void emit_report(const std::vector<TrainingRecord>& records,
                        const std::string& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + out_dir);
    {
        std::ofstream csv = open_output(out_dir + "/curves.csv");
        write_curves_csv(csv, records);
        if (!csv) throw IoError("failed writing curves.csv");
    }
    if (!records.empty()) {
        std::ofstream svg = open_output(out_dir + "/curves.svg");
        write_line_chart(svg, "Average reward during training", "iteration",
                         "J1 (mean over seeds, band = 1 sd)",
                         curve_series(records));
        if (!svg) throw IoError("failed writing curves.svg");
    }
}

}  // namespace ldg

#endif
