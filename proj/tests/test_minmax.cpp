#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include <Eigen/Eigenvalues>

#include "ldg/csv.hpp"
#include "ldg/exact.hpp"
#include "ldg/features.hpp"
#include "ldg/minmax.hpp"
#include "support.hpp"

using namespace ldg;
using namespace ldgtest;

namespace {

MatrixX<double> random_table(Index rows, Index cols, Rng& rng) {
    MatrixX<double> m(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j)
            m(i, j) = 2.0 * rng.uniform() - 1.0;
    return m;
}

// Closed-form maximizer of the saddle loss over (f, tau) at a fixed w:
// f* = D^{-1} nu with nu the weighted flow-derivative residual, tau* the
// d-mean of w.
void inner_maximizer(const TabularMdp& mdp, const SoftmaxPolicy& pol,
                     const OccupancyTable& occ, const MatrixX<double>& w,
                     MatrixX<double>& f_star, VectorX<double>& tau_star) {
    MatrixX<double> probs = policy_probs(pol, mdp);
    MatrixX<double> p = pair_transition(mdp, probs);
    MatrixX<double> score_mat = score_matrix(mdp, probs);
    MatrixX<double> dw = occ.d.asDiagonal() * w;
    MatrixX<double> nu = dw - occ.d.asDiagonal() * score_mat -
                         occ.gamma * p.transpose() * dw;
    f_star = occ.d.cwiseInverse().asDiagonal() * nu;
    tau_star = w.transpose() * occ.d;
}

}  // namespace

TEST_CASE("projection sets") {
    ProjectionSets sets{1.0, 2.0, 3.0};
    CHECK_NOTHROW(sets.validate());
    sets.r_y = 0.0;
    CHECK_THROWS_AS(sets.validate(), ConfigError);

    ProjectionSets none = default_projection_sets();
    CHECK(none.r_x == 100.0);
    ProjectionSets small = default_projection_sets(0.3);
    CHECK(small.r_x == 10.0);  // floored at 10
    ProjectionSets big = default_projection_sets(2.0);
    CHECK(big.r_x == 20.0);
    CHECK(big.r_y == 20.0);
    CHECK(big.r_z == 20.0);
}

TEST_CASE("saddle state initialization") {
    TabularMdp mdp = make_two_state();
    FeatureMap feat = one_hot_features(mdp);
    SaddleState st = make_saddle_state(feat, mdp.num_pairs(), 0.5);
    CHECK(st.alpha.rows() == 4);
    CHECK(st.alpha.cols() == 4);
    CHECK(st.alpha.cwiseAbs().maxCoeff() == 0.0);
    CHECK(st.beta.cwiseAbs().maxCoeff() == 0.0);
    CHECK(st.tau.cwiseAbs().maxCoeff() == 0.0);
    CHECK(st.lambda == 0.5);
    CHECK(st.step_index == 0);
}

TEST_CASE("saddle system assembly") {
    SUBCASE("single pair arithmetic") {
        TabularMdp mdp = make_single();
        SoftmaxPolicy pol = SoftmaxPolicy::zeros(mdp);
        OccupancyTable occ = solve_occupancy(mdp, pol, 0.5);
        FeatureMap feat = one_hot_features(mdp);
        SaddleSystem sys = assemble_saddle_system(mdp, pol, occ, feat, 1.0);
        CHECK(sys.a(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
        CHECK(sys.b.cwiseAbs().maxCoeff() < 1e-14);
        CHECK(sys.c(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(sys.u(0) == doctest::Approx(1.0).epsilon(1e-14));
        MatrixX<double> g_expected(3, 3);
        g_expected << 0.0, -0.5, -1.0, 0.5, -1.0, 0.0, 1.0, 0.0, -1.0;
        CHECK((sys.g - g_expected).cwiseAbs().maxCoeff() < 1e-14);
        CHECK(sys.h.cwiseAbs().maxCoeff() < 1e-14);
    }
    SUBCASE("lambda zero wipes the multiplier couplings") {
        TabularMdp mdp = make_two_state();
        SoftmaxPolicy pol = SoftmaxPolicy::zeros(mdp);
        OccupancyTable occ = solve_occupancy(mdp, pol, 0.9);
        FeatureMap feat = one_hot_features(mdp);
        SaddleSystem sys = assemble_saddle_system(mdp, pol, occ, feat, 0.0);
        Index d = feat.dim;
        CHECK(sys.g.col(2 * d).cwiseAbs().maxCoeff() == 0.0);
        CHECK(sys.g.row(2 * d).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("expected-update matrix is Hurwitz with the penalty active") {
        TabularMdp mdp = make_two_state();
        Rng rng(3);
        SoftmaxPolicy pol = make_random_policy(mdp, rng, 0.5);
        FeatureMap feat = one_hot_features(mdp);
        for (double gamma : {0.9, 1.0}) {
            CAPTURE(gamma);
            OccupancyTable occ = solve_occupancy(mdp, pol, gamma);
            SaddleSystem sys =
                assemble_saddle_system(mdp, pol, occ, feat, 1.0);
            Eigen::EigenSolver<MatrixX<double>> eig(sys.g);
            CHECK(eig.eigenvalues().real().maxCoeff() < 0.0);
        }
    }
}

TEST_CASE("saddle step") {
    SUBCASE("zero step leaves the state unchanged") {
        TabularMdp mdp = make_two_state();
        SoftmaxPolicy pol = SoftmaxPolicy::zeros(mdp);
        MatrixX<double> probs = policy_probs(pol, mdp);
        MatrixX<double> score_mat = score_matrix(mdp, probs);
        FeatureMap feat = one_hot_features(mdp);
        Rng rng(5);
        SaddleState st = make_saddle_state(feat, mdp.num_pairs(), 1.0);
        st.alpha = random_table(4, 4, rng);
        st.beta = random_table(4, 4, rng);
        SaddleState before = st;
        TransitionSample smp{0, 1, 1, 0, false};
        saddle_step(st, score_mat, feat, mdp, smp, 0.9, 0.0);
        CHECK((st.alpha - before.alpha).cwiseAbs().maxCoeff() == 0.0);
        CHECK((st.beta - before.beta).cwiseAbs().maxCoeff() == 0.0);
        CHECK(st.step_index == 1);
    }
    SUBCASE("single-pair arithmetic") {
        TabularMdp mdp = make_single();
        SoftmaxPolicy pol = SoftmaxPolicy::zeros(mdp);
        MatrixX<double> probs = policy_probs(pol, mdp);
        MatrixX<double> score_mat = score_matrix(mdp, probs);
        FeatureMap feat = one_hot_features(mdp);
        SaddleState st = make_saddle_state(feat, 1, 1.0);
        st.alpha(0, 0) = 1.0;
        st.beta(0, 0) = 1.0;
        st.tau(0) = 1.0;
        TransitionSample smp{0, 0, 0, 0, false};
        // delta = 1 - gamma = 0.5; alpha' = 1 - eps (0.5 beta + tau)
        // beta' = 1 + eps (0.5 alpha - 0 - beta); tau' = 1 + eps (alpha - 1)
        saddle_step(st, score_mat, feat, mdp, smp, 0.5, 0.1);
        CHECK(st.alpha(0, 0) == doctest::Approx(0.85).epsilon(1e-14));
        CHECK(st.beta(0, 0) == doctest::Approx(0.95).epsilon(1e-14));
        CHECK(st.tau(0) == doctest::Approx(1.0).epsilon(1e-14));
    }
    SUBCASE("averaged stochastic increment matches the assembled system") {
        TabularMdp mdp = make_two_state();
        Rng rng(7);
        SoftmaxPolicy pol = make_random_policy(mdp, rng, 0.5);
        MatrixX<double> probs = policy_probs(pol, mdp);
        MatrixX<double> score_mat = score_matrix(mdp, probs);
        FeatureMap feat = one_hot_features(mdp);
        double gamma = 0.9, lambda = 1.0;
        OccupancyTable occ = solve_occupancy(mdp, pol, gamma);
        SaddleSystem sys =
            assemble_saddle_system(mdp, pol, occ, feat, lambda);
        const Index d = feat.dim;
        const Index n = mdp.num_pairs();

        SaddleState st = make_saddle_state(feat, n, lambda);
        st.alpha = random_table(d, n, rng);
        st.beta = random_table(d, n, rng);
        st.tau = random_table(n, 1, rng);

        ExactOccupancySampler sampler(mdp, probs, occ);
        MatrixX<double> acc_a = MatrixX<double>::Zero(d, n);
        MatrixX<double> acc_b = MatrixX<double>::Zero(d, n);
        VectorX<double> acc_t = VectorX<double>::Zero(n);
        const long draws = 200000;
        for (long i = 0; i < draws; ++i) {
            SaddleState probe = st;
            saddle_step(probe, score_mat, feat, mdp, sampler.sample(rng),
                        gamma, 1.0);
            acc_a += probe.alpha - st.alpha;
            acc_b += probe.beta - st.beta;
            acc_t += probe.tau - st.tau;
        }
        acc_a /= static_cast<double>(draws);
        acc_b /= static_cast<double>(draws);
        acc_t /= static_cast<double>(draws);

        for (Index i = 0; i < n; ++i) {
            VectorX<double> z(2 * d + 1);
            z << st.alpha.col(i), st.beta.col(i), st.tau(i);
            VectorX<double> expected = sys.g * z + sys.h.col(i);
            VectorX<double> got(2 * d + 1);
            got << acc_a.col(i), acc_b.col(i), acc_t(i);
            CHECK((got - expected).cwiseAbs().maxCoeff() < 2e-2);
        }
    }
}

TEST_CASE("saddle fixed point") {
    SUBCASE("single-action chain has the zero solution") {
        TabularMdp mdp = make_cycle();
        SoftmaxPolicy pol = SoftmaxPolicy::zeros(mdp);
        OccupancyTable occ = solve_occupancy(mdp, pol, 0.9);
        FeatureMap feat = one_hot_features(mdp);
        SaddleSystem sys = assemble_saddle_system(mdp, pol, occ, feat, 1.0);
        SaddleSolution sol = solve_saddle_fixed_point(sys);
        CHECK(sol.alpha.cwiseAbs().maxCoeff() < 1e-12);
        CHECK(sol.beta.cwiseAbs().maxCoeff() < 1e-12);
        CHECK(sol.tau.cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("bandit at gamma one recovers the score table") {
        TabularMdp mdp = make_bandit();
        Rng rng(9);
        SoftmaxPolicy pol = make_random_policy(mdp, rng, 0.8);
        MatrixX<double> probs = policy_probs(pol, mdp);
        MatrixX<double> score_mat = score_matrix(mdp, probs);
        OccupancyTable occ = solve_occupancy(mdp, pol, 1.0);
        FeatureMap feat = one_hot_features(mdp);
        SaddleSystem sys = assemble_saddle_system(mdp, pol, occ, feat, 1.0);
        SaddleSolution sol = solve_saddle_fixed_point(sys);
        CHECK((w_from_linear(feat, sol.alpha) - score_mat)
                  .cwiseAbs()
                  .maxCoeff() < 1e-8);
    }
    SUBCASE("one-hot solution matches the direct solver on the grid") {
        TabularMdp grid = make_gridworld(3);
        Rng rng(11);
        SoftmaxPolicy pol = make_random_policy(grid, rng, 0.3);
        OccupancyTable occ = solve_occupancy(grid, pol, 0.9);
        FeatureMap feat = one_hot_features(grid);
        SaddleSystem sys =
            assemble_saddle_system(grid, pol, occ, feat, 1.0);
        SaddleSolution sol = solve_saddle_fixed_point(sys);
        GradTable exact = solve_log_density_gradient(grid, pol, 0.9);
        CHECK((w_from_linear(feat, sol.alpha) - exact.w)
                  .cwiseAbs()
                  .maxCoeff() < 1e-8);
    }
    SUBCASE("dual components vanish and the residual closes") {
        TabularMdp mdp = make_two_state();
        Rng rng(13);
        SoftmaxPolicy pol = make_random_policy(mdp, rng, 0.5);
        FeatureMap feat = one_hot_features(mdp);
        for (double gamma : {0.5, 1.0}) {
            CAPTURE(gamma);
            OccupancyTable occ = solve_occupancy(mdp, pol, gamma);
            SaddleSystem sys =
                assemble_saddle_system(mdp, pol, occ, feat, 1.0);
            SaddleSolution sol = solve_saddle_fixed_point(sys);
            CHECK(sol.beta.cwiseAbs().maxCoeff() < 1e-10);
            CHECK(sol.tau.cwiseAbs().maxCoeff() < 1e-10);
            MatrixX<double> z(2 * feat.dim + 1, mdp.num_pairs());
            z << sol.alpha, sol.beta, sol.tau.transpose();
            CHECK((sys.g * z + sys.h).cwiseAbs().maxCoeff() < 1e-10);
        }
    }
    SUBCASE("penalty strength does not move the solution below gamma one") {
        TabularMdp mdp = make_two_state();
        Rng rng(15);
        SoftmaxPolicy pol = make_random_policy(mdp, rng, 0.5);
        FeatureMap feat = one_hot_features(mdp);
        for (double gamma : {0.0, 0.5, 0.9}) {
            CAPTURE(gamma);
            OccupancyTable occ = solve_occupancy(mdp, pol, gamma);
            SaddleSolution with = solve_saddle_fixed_point(
                assemble_saddle_system(mdp, pol, occ, feat, 1.0));
            SaddleSolution without = solve_saddle_fixed_point(
                assemble_saddle_system(mdp, pol, occ, feat, 0.0));
            CHECK((with.alpha - without.alpha).cwiseAbs().maxCoeff() <
                  1e-8);
        }
    }
    SUBCASE("lambda zero at gamma one is rejected") {
        TabularMdp mdp = make_two_state();
        SoftmaxPolicy pol = SoftmaxPolicy::zeros(mdp);
        OccupancyTable occ = solve_occupancy(mdp, pol, 1.0);
        FeatureMap feat = one_hot_features(mdp);
        SaddleSystem sys = assemble_saddle_system(mdp, pol, occ, feat, 0.0);
        CHECK_THROWS_AS(solve_saddle_fixed_point(sys), AssumptionError);
    }
    SUBCASE("restricted features leave a nonzero dual") {
        TabularMdp mdp = make_two_state();
        SoftmaxPolicy pol = SoftmaxPolicy::zeros(mdp);
        pol.theta << 0.3, -0.2, 0.1, 0.4;
        OccupancyTable occ = solve_occupancy(mdp, pol, 0.9);
        MatrixX<double> table(2, 4);
        table << 1.0, -1.0, 2.0, 0.5, 0.3, 2.0, -1.0, 1.0;
        FeatureMap feat = custom_features(table);
        SaddleSystem sys = assemble_saddle_system(mdp, pol, occ, feat, 1.0);
        SaddleSolution sol = solve_saddle_fixed_point(sys);
        CHECK(sol.beta.norm() > 1e-3);
    }
}

TEST_CASE("saddle loss and duality") {
    TabularMdp mdp = make_two_state();
    Rng rng(17);
    SoftmaxPolicy pol = make_random_policy(mdp, rng, 0.5);
    const Index nsa = mdp.num_pairs();
    double lambda = 1.0;

    SUBCASE("zero dual pair gives zero loss") {
        OccupancyTable occ = solve_occupancy(mdp, pol, 0.9);
        MatrixX<double> w = random_table(nsa, nsa, rng);
        MatrixX<double> f0 = MatrixX<double>::Zero(nsa, nsa);
        VectorX<double> t0 = VectorX<double>::Zero(nsa);
        CHECK(loss_L(mdp, pol, occ, w, f0, t0, lambda) == 0.0);
    }
    SUBCASE("exact table maximizes to zero") {
        OccupancyTable occ = solve_occupancy(mdp, pol, 1.0);
        GradTable exact = solve_log_density_gradient(mdp, pol, 1.0);
        for (int k = 0; k < 5; ++k) {
            MatrixX<double> f = random_table(nsa, nsa, rng);
            VectorX<double> tau = random_table(nsa, 1, rng);
            CHECK(loss_L(mdp, pol, occ, exact.w, f, tau, lambda) <= 1e-10);
        }
    }
    SUBCASE("closed-form inner maximum equals the direct objective") {
        for (double gamma : {0.9, 1.0}) {
            CAPTURE(gamma);
            OccupancyTable occ = solve_occupancy(mdp, pol, gamma);
            for (int k = 0; k < 5; ++k) {
                MatrixX<double> w = random_table(nsa, nsa, rng);
                MatrixX<double> f_star;
                VectorX<double> tau_star;
                inner_maximizer(mdp, pol, occ, w, f_star, tau_star);
                double attained =
                    loss_L(mdp, pol, occ, w, f_star, tau_star, lambda);
                double direct = direct_objective(mdp, pol, occ, w, lambda);
                CHECK(attained ==
                      doctest::Approx(direct).epsilon(1e-10));
                // any other dual pair does worse
                MatrixX<double> f = random_table(nsa, nsa, rng);
                VectorX<double> tau = random_table(nsa, 1, rng);
                CHECK(loss_L(mdp, pol, occ, w, f, tau, lambda) <=
                      attained + 1e-12);
            }
        }
    }
    SUBCASE("block form agrees with the table form for linear iterates") {
        OccupancyTable occ = solve_occupancy(mdp, pol, 0.9);
        FeatureMap feat = one_hot_features(mdp);
        SaddleSystem sys =
            assemble_saddle_system(mdp, pol, occ, feat, lambda);
        MatrixX<double> alpha = random_table(nsa, nsa, rng);
        MatrixX<double> beta = random_table(nsa, nsa, rng);
        VectorX<double> tau = random_table(nsa, 1, rng);
        double via_blocks = loss_from_blocks(sys, alpha, beta, tau);
        double via_tables =
            loss_L(mdp, pol, occ, w_from_linear(feat, alpha),
                   w_from_linear(feat, beta), tau, lambda);
        CHECK(via_blocks == doctest::Approx(via_tables).epsilon(1e-10));
    }
}

TEST_CASE("projected stochastic saddle runs") {
    TabularMdp mdp = make_two_state();
    SoftmaxPolicy pol = SoftmaxPolicy::zeros(mdp);
    pol.theta << 0.3, -0.2, 0.1, 0.4;
    double gamma = 0.9, lambda = 1.0;
    FeatureMap feat = one_hot_features(mdp);
    OccupancyTable occ = solve_occupancy(mdp, pol, gamma);
    SaddleSystem sys = assemble_saddle_system(mdp, pol, occ, feat, lambda);
    SaddleSolution sol = solve_saddle_fixed_point(sys);
    ProjectionSets sets = default_projection_sets(sol.alpha.norm());

    SUBCASE("zero schedule returns the initial iterates") {
        Rng rng(19);
        ProjectedRunResult run = run_projected_ldg(
            mdp, pol, gamma, feat, lambda, sets, 1,
            SaddleSchedule::constant(0.0), rng);
        CHECK(run.alpha_bar.cwiseAbs().maxCoeff() == 0.0);
        CHECK(run.state.step_index == 1);
    }
    SUBCASE("empty run is rejected") {
        Rng rng(19);
        CHECK_THROWS_AS(
            run_projected_ldg(mdp, pol, gamma, feat, lambda, sets, 0,
                              SaddleSchedule::inv_sqrt(0.5), rng),
            ConfigError);
    }
    SUBCASE("averaged iterates approach the fixed point") {
        double dist = 0.0;
        for (std::uint64_t seed = 1; seed <= 3; ++seed) {
            Rng rng(seed);
            ProjectedRunResult run = run_projected_ldg(
                mdp, pol, gamma, feat, lambda, sets, 100000,
                SaddleSchedule::inv_sqrt(0.5), rng);
            dist += (run.alpha_bar - sol.alpha).norm();
        }
        CHECK(dist / 3.0 < 5e-2);
    }
    SUBCASE("longer runs shrink the averaged distance substantially") {
        auto mean_distance = [&](long m) {
            double total = 0.0;
            for (std::uint64_t seed = 1; seed <= 10; ++seed) {
                Rng rng(seed);
                ProjectedRunResult run = run_projected_ldg(
                    mdp, pol, gamma, feat, lambda, sets, m,
                    SaddleSchedule::inv_sqrt(0.5), rng);
                total += (run.alpha_bar - sol.alpha).norm();
            }
            return total / 10.0;
        };
        double short_run = mean_distance(1000);
        double long_run = mean_distance(100000);
        CHECK(short_run / long_run >= 5.0);
    }
    SUBCASE("same seed reproduces the run") {
        Rng r1(23), r2(23);
        ProjectedRunResult a =
            run_projected_ldg(mdp, pol, gamma, feat, lambda, sets, 3000,
                              SaddleSchedule::inv_sqrt(0.5), r1);
        ProjectedRunResult b =
            run_projected_ldg(mdp, pol, gamma, feat, lambda, sets, 3000,
                              SaddleSchedule::inv_sqrt(0.5), r2);
        CHECK((a.alpha_bar - b.alpha_bar).cwiseAbs().maxCoeff() == 0.0);
        CHECK((a.state.alpha - b.state.alpha).cwiseAbs().maxCoeff() ==
              0.0);
    }
    SUBCASE("continuation matches a single longer run") {
        Rng r1(29), r2(29);
        ProjectedRunResult whole =
            run_projected_ldg(mdp, pol, gamma, feat, lambda, sets, 1000,
                              SaddleSchedule::inv_sqrt(0.5), r1);
        ProjectedRunResult half =
            run_projected_ldg(mdp, pol, gamma, feat, lambda, sets, 500,
                              SaddleSchedule::inv_sqrt(0.5), r2);
        ProjectedRunResult rest = run_projected_ldg_from(
            half.state, mdp, pol, gamma, feat, lambda, sets, 500,
            SaddleSchedule::inv_sqrt(0.5), r2);
        CHECK(rest.state.step_index == 1000);
        CHECK((rest.state.alpha - whole.state.alpha)
                  .cwiseAbs()
                  .maxCoeff() == 0.0);
    }
    SUBCASE("sample sink records every drawn pair") {
        std::vector<StateActionPair> sink;
        SaddleRunOptions opts;
        opts.sample_sink = &sink;
        Rng rng(31);
        run_projected_ldg(mdp, pol, gamma, feat, lambda, sets, 2500,
                          SaddleSchedule::inv_sqrt(0.5), rng, opts);
        CHECK(sink.size() == 2500);
        for (const StateActionPair& sa : sink) {
            CHECK(sa.state >= 0);
            CHECK(sa.state < mdp.num_states);
            CHECK(sa.action >= 0);
            CHECK(sa.action < mdp.num_actions);
        }
    }
    SUBCASE("run log carries the expected columns") {
        std::ostringstream log;
        SaddleRunOptions opts;
        opts.log = &log;
        opts.log_stride = 1000;
        opts.reference = &sol;
        opts.log_gap = true;
        Rng rng(37);
        run_projected_ldg(mdp, pol, gamma, feat, lambda, sets, 2000,
                          SaddleSchedule::inv_sqrt(0.5), rng, opts);
        std::istringstream in(log.str());
        std::string line;
        std::getline(in, line);
        CHECK(line ==
              "iteration,distance_to_fixed_point,optimality_gap,"
              "wall_clock_ns");
        int rows = 0;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            ++rows;
            CHECK(split_csv_line(line).size() == 4);
        }
        CHECK(rows == 2);
    }
}

TEST_CASE("optimality gap") {
    TabularMdp mdp = make_two_state();
    SoftmaxPolicy pol = SoftmaxPolicy::zeros(mdp);
    pol.theta << 0.3, -0.2, 0.1, 0.4;
    double gamma = 0.9, lambda = 1.0;
    OccupancyTable occ = solve_occupancy(mdp, pol, gamma);
    FeatureMap feat = one_hot_features(mdp);
    SaddleSystem sys = assemble_saddle_system(mdp, pol, occ, feat, lambda);
    SaddleSolution sol = solve_saddle_fixed_point(sys);
    ProjectionSets sets = default_projection_sets(sol.alpha.norm());

    SUBCASE("vanishes at the saddle point") {
        double gap = optimality_gap(mdp, pol, occ, feat, lambda, sets,
                                    sol.alpha, sol.beta, sol.tau);
        CHECK(std::abs(gap) < 1e-8);
    }
    SUBCASE("positive away from the saddle point") {
        MatrixX<double> a0 = MatrixX<double>::Zero(feat.dim, mdp.num_pairs());
        VectorX<double> t0 = VectorX<double>::Zero(mdp.num_pairs());
        double gap =
            optimality_gap(mdp, pol, occ, feat, lambda, sets, a0, a0, t0);
        CHECK(gap > 1e-3);
    }
    SUBCASE("nonnegative at arbitrary feasible iterates") {
        Rng rng(41);
        for (int k = 0; k < 5; ++k) {
            SaddleState st = make_saddle_state(feat, mdp.num_pairs(), lambda);
            st.alpha = random_table(feat.dim, mdp.num_pairs(), rng);
            st.beta = random_table(feat.dim, mdp.num_pairs(), rng);
            st.tau = random_table(mdp.num_pairs(), 1, rng);
            project_saddle_state(st, sets);
            double gap = optimality_gap(mdp, pol, occ, feat, lambda, sets,
                                        st.alpha, st.beta, st.tau);
            CHECK(gap >= -1e-10);
        }
    }
    SUBCASE("restricted features separate the primal from the saddle") {
        MatrixX<double> table(2, 4);
        table << 1.0, -1.0, 2.0, 0.5, 0.3, 2.0, -1.0, 1.0;
        FeatureMap restricted = custom_features(table);
        SaddleSystem rsys =
            assemble_saddle_system(mdp, pol, occ, restricted, lambda);
        SaddleSolution rsol = solve_saddle_fixed_point(rsys);
        REQUIRE(rsol.beta.norm() > 1e-3);
        ProjectionSets rsets = default_projection_sets(rsol.alpha.norm());
        double at_saddle =
            optimality_gap(mdp, pol, occ, restricted, lambda, rsets,
                           rsol.alpha, rsol.beta, rsol.tau);
        CHECK(std::abs(at_saddle) < 1e-8);
        MatrixX<double> b0 = MatrixX<double>::Zero(2, mdp.num_pairs());
        VectorX<double> t0 = VectorX<double>::Zero(mdp.num_pairs());
        double at_primal_only = optimality_gap(mdp, pol, occ, restricted,
                                               lambda, rsets, rsol.alpha,
                                               b0, t0);
        CHECK(at_primal_only > 1e-4);
    }
}

TEST_CASE("step-size scale") {
    SUBCASE("single pair is fully degenerate") {
        TabularMdp mdp = make_single();
        SoftmaxPolicy pol = SoftmaxPolicy::zeros(mdp);
        OccupancyTable occ = solve_occupancy(mdp, pol, 0.5);
        FeatureMap feat = one_hot_features(mdp);
        ProjectionSets unit{1.0, 1.0, 1.0};
        StepScale scale = step_scale(mdp, pol, occ, feat, 1.0, unit);
        CHECK(scale.sigma1_sq == 0.0);
        CHECK(scale.sigma3_sq == 0.0);
        CHECK(scale.sigma4_sq == 0.0);
        CHECK(scale.d_alpha == 1.0);
        CHECK(scale.d_y == 2.0);
        CHECK(scale.m_star == 0.0);
        CHECK_THROWS_AS(SaddleSchedule::theory(0.5, scale.m_star),
                        ConfigError);
    }
    SUBCASE("positive on a stochastic model and monotone in the radii") {
        TabularMdp mdp = make_two_state();
        Rng rng(43);
        SoftmaxPolicy pol = make_random_policy(mdp, rng, 0.5);
        OccupancyTable occ = solve_occupancy(mdp, pol, 0.9);
        FeatureMap feat = one_hot_features(mdp);
        ProjectionSets sets{10.0, 10.0, 10.0};
        StepScale base = step_scale(mdp, pol, occ, feat, 1.0, sets);
        CHECK(base.m_star > 0.0);
        ProjectionSets doubled{20.0, 20.0, 20.0};
        StepScale bigger = step_scale(mdp, pol, occ, feat, 1.0, doubled);
        CHECK(bigger.m_star > base.m_star);
        SaddleSchedule sched = SaddleSchedule::theory(2.0, base.m_star);
        CHECK(sched.eps(4) ==
              doctest::Approx(1.0 / base.m_star).epsilon(1e-12));
    }
}

TEST_CASE("gradient estimation from a learned table") {
    TabularMdp mdp = make_bandit();
    SoftmaxPolicy pol = SoftmaxPolicy::zeros(mdp);
    MatrixX<double> probs = policy_probs(pol, mdp);
    MatrixX<double> score_mat = score_matrix(mdp, probs);

    SUBCASE("empty sample set is rejected") {
        CHECK_THROWS_AS(
            estimate_gradient_from_w({}, mdp, score_mat), ConfigError);
    }
    SUBCASE("uniform bandit samples with the exact table") {
        // Both arms once: the average is exactly the uniform-occupancy
        // gradient (0.25, -0.25).
        std::vector<StateActionPair> samples{{0, 0}, {0, 1}};
        VectorX<double> grad =
            estimate_gradient_from_w(samples, mdp, score_mat);
        CHECK(grad(0) == doctest::Approx(0.25).epsilon(1e-14));
        CHECK(grad(1) == doctest::Approx(-0.25).epsilon(1e-14));
    }
    SUBCASE("zero reward gives a zero estimate") {
        TabularMdp zero = mdp;
        zero.reward.setZero();
        std::vector<StateActionPair> samples{{0, 0}, {0, 1}, {0, 0}};
        VectorX<double> grad =
            estimate_gradient_from_w(samples, zero, score_mat);
        CHECK(grad.cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("end-to-end learned table on the bandit") {
        double lambda = 1.0;
        FeatureMap feat = one_hot_features(mdp);
        OccupancyTable occ = solve_occupancy(mdp, pol, 1.0);
        SaddleSystem sys =
            assemble_saddle_system(mdp, pol, occ, feat, lambda);
        SaddleSolution sol = solve_saddle_fixed_point(sys);
        ProjectionSets sets = default_projection_sets(sol.alpha.norm());
        std::vector<StateActionPair> sink;
        SaddleRunOptions opts;
        opts.sample_sink = &sink;
        Rng rng(47);
        ProjectedRunResult run = run_projected_ldg(
            mdp, pol, 1.0, feat, lambda, sets, 50000,
            SaddleSchedule::inv_sqrt(0.5), rng, opts);
        VectorX<double> grad = estimate_gradient_from_w(
            sink, mdp, w_from_linear(feat, run.alpha_bar));
        CHECK(std::abs(grad(0) - 0.25) < 5e-2);
        CHECK(std::abs(grad(1) + 0.25) < 5e-2);
    }
}

TEST_CASE("linear parameterization of tables") {
    TabularMdp mdp = make_two_state();
    FeatureMap one_hot = one_hot_features(mdp);
    Rng rng(53);
    MatrixX<double> alpha = random_table(4, 4, rng);
    CHECK((w_from_linear(one_hot, alpha) - alpha).cwiseAbs().maxCoeff() ==
          0.0);

    MatrixX<double> table(1, 4);
    table << 1.0, 2.0, 3.0, 4.0;
    FeatureMap feat = custom_features(table);
    MatrixX<double> a1 = MatrixX<double>::Constant(1, 2, 0.5);
    MatrixX<double> w = w_from_linear(feat, a1);
    CHECK(w.rows() == 4);
    CHECK(w.cols() == 2);
    CHECK(w(2, 0) == doctest::Approx(1.5).epsilon(1e-14));

    MatrixX<double> degenerate = MatrixX<double>::Zero(0, 4);
    CHECK_THROWS_AS(custom_features(degenerate), ConfigError);
}
