#ifndef LDG_MINMAX_HPP
#define LDG_MINMAX_HPP

#include <chrono>
#include <cmath>
#include <ostream>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "ldg/csv.hpp"
#include "ldg/errors.hpp"
#include "ldg/exact.hpp"
#include "ldg/features.hpp"
#include "ldg/sampling.hpp"

namespace ldg {

// Frobenius-ball radii for the primal (alpha), dual (beta) and mean
// multiplier (tau) iterates.
struct ProjectionSets {
    double r_x = 100.0;
    double r_y = 100.0;
    double r_z = 100.0;

    void validate() const {
        if (r_x <= 0.0 || r_y <= 0.0 || r_z <= 0.0)
            throw ConfigError("projection sets: radii must be positive");
    }
};

// Ball radii sized from the primal fixed-point norm when an exact solution
// is available (10x its Frobenius norm, floored at 10 so the sets never
// degenerate: the dual components of the saddle point sit at the origin and
// fit inside any positive ball). Without a reference solution use 100.
inline ProjectionSets default_projection_sets(double alpha_star_norm = -1) {
    if (alpha_star_norm < 0.0) return {100.0, 100.0, 100.0};
    double r = 10.0 * std::max(1.0, alpha_star_norm);
    return {r, r, r};
}

template <typename Scalar>
struct SaddleStateT {
    MatrixX<Scalar> alpha;  // d_f x n, primal: w ~ alpha^T Phi
    MatrixX<Scalar> beta;   // d_f x n, dual:   f ~ beta^T Phi
    VectorX<Scalar> tau;    // n
    Scalar lambda = Scalar(1);
    long step_index = 0;
};

using SaddleState = SaddleStateT<double>;

template <typename Scalar>
SaddleStateT<Scalar> make_saddle_state(const FeatureMapT<Scalar>& features,
                                       Index n, Scalar lambda) {
    SaddleStateT<Scalar> st;
    st.alpha = MatrixX<Scalar>::Zero(features.dim, n);
    st.beta = MatrixX<Scalar>::Zero(features.dim, n);
    st.tau = VectorX<Scalar>::Zero(n);
    st.lambda = lambda;
    return st;
}

// Expected-update system for the saddle iteration, acting per parameter
// column on the stacked vector z_i = [alpha_i; beta_i; tau_i]:
//   dz = G z + h,  G = [[0, -A, -lambda u], [A^T, -C, 0],
//                       [lambda u^T, 0, -lambda]],  h_i = [0; -B_i; 0],
// with A = Psi D (I - gamma P_pi) Psi^T, B = Psi D G_score,
// C = Psi D Psi^T, u = Psi d.
template <typename Scalar>
struct SaddleSystemT {
    MatrixX<Scalar> a;  // d_f x d_f
    MatrixX<Scalar> b;  // d_f x n
    MatrixX<Scalar> c;  // d_f x d_f
    VectorX<Scalar> u;  // d_f
    Scalar lambda = Scalar(1);
    MatrixX<Scalar> g;  // (2 d_f + 1) x (2 d_f + 1)
    MatrixX<Scalar> h;  // (2 d_f + 1) x n
};

using SaddleSystem = SaddleSystemT<double>;

template <typename Scalar>
SaddleSystemT<Scalar> assemble_saddle_system(
    const TabularMdpT<Scalar>& mdp, const SoftmaxPolicyT<Scalar>& policy,
    const OccupancyTableT<Scalar>& occ, const FeatureMapT<Scalar>& features,
    Scalar lambda) {
    features.validate();
    MatrixX<Scalar> probs = policy_probs(policy, mdp);
    MatrixX<Scalar> p = pair_transition(mdp, probs);
    MatrixX<Scalar> score_mat = score_matrix(mdp, probs);
    const MatrixX<Scalar>& psi = features.table;
    const Index d = features.dim;
    const Index n = score_mat.cols();

    SaddleSystemT<Scalar> sys;
    sys.lambda = lambda;
    MatrixX<Scalar> dpsi_t = occ.d.asDiagonal() * psi.transpose();
    sys.a = psi * (dpsi_t - occ.gamma * MatrixX<Scalar>(
                                            occ.d.asDiagonal() * p *
                                            psi.transpose()));
    sys.b = psi * (occ.d.asDiagonal() * score_mat);
    sys.c = psi * dpsi_t;
    sys.u = psi * occ.d;

    sys.g = MatrixX<Scalar>::Zero(2 * d + 1, 2 * d + 1);
    sys.g.block(0, d, d, d) = -sys.a;
    sys.g.block(0, 2 * d, d, 1) = -lambda * sys.u;
    sys.g.block(d, 0, d, d) = sys.a.transpose();
    sys.g.block(d, d, d, d) = -sys.c;
    sys.g.block(2 * d, 0, 1, d) = lambda * sys.u.transpose();
    sys.g(2 * d, 2 * d) = -lambda;

    sys.h = MatrixX<Scalar>::Zero(2 * d + 1, n);
    sys.h.middleRows(d, d) = -sys.b;
    return sys;
}

// One stochastic primal-dual update with step eps on a forward sample
// (x = (s,a), x2 = (s2,a2)). With delta = Phi (Phi - gamma Phi2)^T and
// g_t the score at the unprimed pair:
//   alpha -= eps (delta beta + lambda Phi tau^T)
//   beta  += eps (delta^T alpha - Phi g_t^T - Phi Phi^T beta)
//   tau   += eps lambda (alpha^T Phi - tau)
// All three read the pre-update iterates (simultaneous update).
template <typename Scalar>
void saddle_step(SaddleStateT<Scalar>& state,
                 const MatrixX<Scalar>& score_mat,
                 const FeatureMapT<Scalar>& features,
                 const TabularMdpT<Scalar>& mdp,
                 const TransitionSample& smp, Scalar gamma, Scalar eps) {
    if (state.alpha.rows() != features.dim)
        throw ConfigError("saddle_step: state/feature dim mismatch");
    Index x = mdp.pair_index(smp.s, smp.a);
    Index x2 = mdp.pair_index(smp.s2, smp.a2);
    auto phi = features.col(x);
    auto phi2 = features.col(x2);

    Eigen::Matrix<Scalar, 1, Eigen::Dynamic> phi_beta =
        phi.transpose() * state.beta;                       // 1 x n
    Eigen::Matrix<Scalar, 1, Eigen::Dynamic> phi2_beta =
        phi2.transpose() * state.beta;                      // 1 x n
    Eigen::Matrix<Scalar, 1, Eigen::Dynamic> phi_alpha =
        phi.transpose() * state.alpha;                      // 1 x n

    MatrixX<Scalar> alpha_step =
        phi * (phi_beta - gamma * phi2_beta +
               state.lambda * state.tau.transpose());
    MatrixX<Scalar> beta_step =
        (phi - gamma * phi2) * phi_alpha -
        phi * (score_mat.row(x) + phi_beta);
    state.alpha -= eps * alpha_step;
    state.beta += eps * beta_step;
    state.tau +=
        eps * state.lambda * (phi_alpha.transpose() - state.tau);
    ++state.step_index;
}

template <typename Scalar>
void project_saddle_state(SaddleStateT<Scalar>& state,
                          const ProjectionSets& sets) {
    Scalar na = state.alpha.norm();
    if (na > Scalar(sets.r_x)) state.alpha *= Scalar(sets.r_x) / na;
    Scalar nb = state.beta.norm();
    if (nb > Scalar(sets.r_y)) state.beta *= Scalar(sets.r_y) / nb;
    Scalar nt = state.tau.norm();
    if (nt > Scalar(sets.r_z)) state.tau *= Scalar(sets.r_z) / nt;
}

template <typename Scalar>
struct SaddleSolutionT {
    MatrixX<Scalar> alpha;
    MatrixX<Scalar> beta;
    VectorX<Scalar> tau;
};

using SaddleSolution = SaddleSolutionT<double>;

// Stationary point of dz = G z + h, i.e. the solution of G z + h = 0.
// For lambda = 0 the tau row of G vanishes identically, so the reduced
// block system [[0, -A], [A^T, -C]] is solved instead (requires A
// nonsingular) and tau is fixed at zero.
template <typename Scalar>
SaddleSolutionT<Scalar> solve_saddle_fixed_point(
    const SaddleSystemT<Scalar>& sys) {
    const Index d = sys.a.rows();
    const Index n = sys.b.cols();
    SaddleSolutionT<Scalar> sol;
    if (sys.lambda > Scalar(0)) {
        Eigen::PartialPivLU<MatrixX<Scalar>> lu(sys.g);
        if (lu.rcond() < kRcondFloor)
            throw AssumptionError(
                "saddle fixed point: G is singular (feature columns "
                "dependent or chain degenerate)");
        MatrixX<Scalar> z = lu.solve(-sys.h);
        sol.alpha = z.topRows(d);
        sol.beta = z.middleRows(d, d);
        sol.tau = z.row(2 * d).transpose();
    } else {
        MatrixX<Scalar> gr = MatrixX<Scalar>::Zero(2 * d, 2 * d);
        gr.block(0, d, d, d) = -sys.a;
        gr.block(d, 0, d, d) = sys.a.transpose();
        gr.block(d, d, d, d) = -sys.c;
        MatrixX<Scalar> hr = MatrixX<Scalar>::Zero(2 * d, n);
        hr.bottomRows(d) = -sys.b;
        Eigen::PartialPivLU<MatrixX<Scalar>> lu(gr);
        if (lu.rcond() < kRcondFloor)
            throw AssumptionError(
                "saddle fixed point: A is singular and lambda = 0 "
                "(Assumption 1 violated)");
        MatrixX<Scalar> z = lu.solve(-hr);
        sol.alpha = z.topRows(d);
        sol.beta = z.bottomRows(d);
        sol.tau = VectorX<Scalar>::Zero(n);
    }
    return sol;
}

// Table w represented by a linear parameterization: W = Psi^T alpha.
template <typename Scalar>
MatrixX<Scalar> w_from_linear(const FeatureMapT<Scalar>& features,
                              const MatrixX<Scalar>& alpha) {
    return features.table.transpose() * alpha;
}

// Saddle loss evaluated exactly over tables (five terms):
//   E_d[f.w] - E_d[f.g] - gamma E[(P f).w] - 1/2 E_d[|f|^2]
//   + lambda (tau . E_d[w] - 1/2 |tau|^2).
template <typename Scalar>
Scalar loss_L(const TabularMdpT<Scalar>& mdp,
              const SoftmaxPolicyT<Scalar>& policy,
              const OccupancyTableT<Scalar>& occ,
              const MatrixX<Scalar>& w_table, const MatrixX<Scalar>& f_table,
              const VectorX<Scalar>& tau, Scalar lambda) {
    if (w_table.rows() != mdp.num_pairs() ||
        f_table.rows() != mdp.num_pairs() ||
        w_table.cols() != f_table.cols() || tau.size() != w_table.cols())
        throw ConfigError("loss_L: table shape mismatch");
    MatrixX<Scalar> probs = policy_probs(policy, mdp);
    MatrixX<Scalar> p = pair_transition(mdp, probs);
    MatrixX<Scalar> score_mat = score_matrix(mdp, probs);
    MatrixX<Scalar> df = occ.d.asDiagonal() * f_table;
    Scalar t1 = df.cwiseProduct(w_table).sum();
    Scalar t2 = -df.cwiseProduct(score_mat).sum();
    Scalar t3 = -occ.gamma * (occ.d.asDiagonal() * (p * f_table))
                                 .cwiseProduct(w_table)
                                 .sum();
    Scalar t4 = -df.cwiseProduct(f_table).sum() / Scalar(2);
    VectorX<Scalar> mean_w = w_table.transpose() * occ.d;
    Scalar t5 = lambda * (tau.dot(mean_w) - tau.squaredNorm() / Scalar(2));
    return t1 + t2 + t3 + t4 + t5;
}

// Same loss through the assembled blocks, for linear iterates.
template <typename Scalar>
Scalar loss_from_blocks(const SaddleSystemT<Scalar>& sys,
                        const MatrixX<Scalar>& alpha,
                        const MatrixX<Scalar>& beta,
                        const VectorX<Scalar>& tau) {
    Scalar bilinear = (alpha.transpose() * sys.a * beta).trace();
    Scalar linear = -(beta.cwiseProduct(sys.b)).sum();
    Scalar quad = -(beta.transpose() * sys.c * beta).trace() / Scalar(2);
    VectorX<Scalar> ua = alpha.transpose() * sys.u;
    Scalar reg =
        sys.lambda * (tau.dot(ua) - tau.squaredNorm() / Scalar(2));
    return bilinear + linear + quad + reg;
}

// The re-weighted least-squares objective the saddle problem dualizes:
//   1/2 sum_x |nu(x)|^2 / d(x) + lambda/2 |E_d[w]|^2,
// where nu is the rowwise residual of the weighted flow-derivative
// identity D W - D G - gamma P^T D W. Its minimizer over unrestricted w is
// the exact log-density-gradient table, and for any w the (f, tau)
// maximization of loss_L attains exactly this value.
template <typename Scalar>
Scalar direct_objective(const TabularMdpT<Scalar>& mdp,
                        const SoftmaxPolicyT<Scalar>& policy,
                        const OccupancyTableT<Scalar>& occ,
                        const MatrixX<Scalar>& w_table, Scalar lambda) {
    if (occ.d.minCoeff() <= Scalar(0))
        throw ModelError("direct_objective: occupancy has zero mass");
    MatrixX<Scalar> probs = policy_probs(policy, mdp);
    MatrixX<Scalar> p = pair_transition(mdp, probs);
    MatrixX<Scalar> score_mat = score_matrix(mdp, probs);
    MatrixX<Scalar> dw = occ.d.asDiagonal() * w_table;
    MatrixX<Scalar> nu = dw - occ.d.asDiagonal() * score_mat -
                         occ.gamma * p.transpose() * dw;
    Scalar quad = (occ.d.cwiseInverse().asDiagonal() * nu.cwiseAbs2())
                      .sum() /
                  Scalar(2);
    VectorX<Scalar> mean_w = w_table.transpose() * occ.d;
    return quad + lambda * mean_w.squaredNorm() / Scalar(2);
}

// Step schedules for the projected saddle iteration. The theory schedule
// c/(M* sqrt(t)) uses the variance-based scale M* from step_scale; the
// plain c/sqrt(t) keeps the same decay with a practical scale; constant
// steps serve diagnostics.
struct SaddleSchedule {
    enum class Kind { inv_sqrt_mstar, inv_sqrt, constant };

    Kind kind = Kind::inv_sqrt_mstar;
    double c = 1.0;
    double m_star = 1.0;

    double eps(long t) const {
        switch (kind) {
            case Kind::inv_sqrt_mstar:
                return c / (m_star * std::sqrt(static_cast<double>(t)));
            case Kind::inv_sqrt:
                return c / std::sqrt(static_cast<double>(t));
            default:
                return c;
        }
    }

    static SaddleSchedule theory(double c, double m_star) {
        if (m_star <= 0.0)
            throw ConfigError(
                "saddle schedule: M* must be positive (degenerate "
                "second-moment bounds)");
        return {Kind::inv_sqrt_mstar, c, m_star};
    }
    static SaddleSchedule inv_sqrt(double c) {
        return {Kind::inv_sqrt, c, 1.0};
    }
    static SaddleSchedule constant(double c) {
        return {Kind::constant, c, 1.0};
    }
};

// Optional instrumentation for run_projected_ldg.
template <typename Scalar>
struct SaddleRunOptionsT {
    // Record each sampled (s, a); feeds gradient estimation from the run.
    std::vector<StateActionPair>* sample_sink = nullptr;
    // Run-log CSV (iteration, distance_to_fixed_point, optimality_gap,
    // wall_clock_ns) every stride steps; distance and gap columns are
    // emitted only when the reference solution / gap context are given.
    std::ostream* log = nullptr;
    Index log_stride = 1000;
    const SaddleSolutionT<Scalar>* reference = nullptr;
    // Evaluate the optimality gap at log points (costs an exact solve each
    // time); requires sets used by the run.
    bool log_gap = false;
};

using SaddleRunOptions = SaddleRunOptionsT<double>;

template <typename Scalar>
struct ProjectedRunResultT {
    SaddleStateT<Scalar> state;      // final iterates
    MatrixX<Scalar> alpha_bar;       // eps-weighted averages
    MatrixX<Scalar> beta_bar;
    VectorX<Scalar> tau_bar;
};

using ProjectedRunResult = ProjectedRunResultT<double>;

template <typename Scalar>
Scalar optimality_gap(const TabularMdpT<Scalar>& mdp,
                      const SoftmaxPolicyT<Scalar>& policy,
                      const OccupancyTableT<Scalar>& occ,
                      const FeatureMapT<Scalar>& features, Scalar lambda,
                      const ProjectionSets& sets,
                      const MatrixX<Scalar>& alpha_bar,
                      const MatrixX<Scalar>& beta_bar,
                      const VectorX<Scalar>& tau_bar);

// Projected stochastic saddle iteration (continues from the given state;
// step indices resume, so schedules keep decaying across calls). Samples
// are drawn i.i.d. from the solved occupancy. Returns the eps-weighted
// averages of the projected iterates; a zero total weight returns the
// current iterates unchanged.
template <typename Scalar>
ProjectedRunResultT<Scalar> run_projected_ldg_from(
    SaddleStateT<Scalar> state, const TabularMdpT<Scalar>& mdp,
    const SoftmaxPolicyT<Scalar>& policy, Scalar gamma,
    const FeatureMapT<Scalar>& features, Scalar lambda,
    const ProjectionSets& sets, long m, const SaddleSchedule& schedule,
    Rng& rng, const SaddleRunOptionsT<Scalar>& opts = {}) {
    if (m < 1) throw ConfigError("run_projected_ldg: m < 1");
    sets.validate();
    OccupancyTableT<Scalar> occ = solve_occupancy(mdp, policy, gamma);
    MatrixX<Scalar> probs = policy_probs(policy, mdp);
    MatrixX<Scalar> score_mat = score_matrix(mdp, probs);
    ExactOccupancySamplerT<Scalar> sampler(mdp, probs, occ);

    MatrixX<Scalar> acc_alpha =
        MatrixX<Scalar>::Zero(state.alpha.rows(), state.alpha.cols());
    MatrixX<Scalar> acc_beta = acc_alpha;
    VectorX<Scalar> acc_tau = VectorX<Scalar>::Zero(state.tau.size());
    Scalar eps_sum = Scalar(0);

    const bool log = opts.log != nullptr;
    if (log)
        *opts.log << "iteration,distance_to_fixed_point,optimality_gap,"
                     "wall_clock_ns\n";
    auto t0 = std::chrono::steady_clock::now();
    for (long i = 0; i < m; ++i) {
        TransitionSample smp = sampler.sample(rng);
        if (opts.sample_sink)
            opts.sample_sink->push_back({smp.s, smp.a});
        Scalar eps =
            static_cast<Scalar>(schedule.eps(state.step_index + 1));
        saddle_step(state, score_mat, features, mdp, smp, gamma, eps);
        project_saddle_state(state, sets);
        acc_alpha += eps * state.alpha;
        acc_beta += eps * state.beta;
        acc_tau += eps * state.tau;
        eps_sum += eps;
        if (log && ((i + 1) % opts.log_stride == 0 || i + 1 == m)) {
            auto ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
            *opts.log << (i + 1) << ',';
            if (opts.reference)
                *opts.log << format_value(
                    (state.alpha - opts.reference->alpha).norm());
            *opts.log << ',';
            if (opts.log_gap && eps_sum > Scalar(0))
                *opts.log << format_value(optimality_gap(
                    mdp, policy, occ, features, lambda, sets,
                    MatrixX<Scalar>(acc_alpha / eps_sum),
                    MatrixX<Scalar>(acc_beta / eps_sum),
                    VectorX<Scalar>(acc_tau / eps_sum)));
            *opts.log << ',' << ns << '\n';
        }
    }

    ProjectedRunResultT<Scalar> result;
    if (eps_sum > Scalar(0)) {
        result.alpha_bar = acc_alpha / eps_sum;
        result.beta_bar = acc_beta / eps_sum;
        result.tau_bar = acc_tau / eps_sum;
    } else {
        result.alpha_bar = state.alpha;
        result.beta_bar = state.beta;
        result.tau_bar = state.tau;
    }
    result.state = std::move(state);
    return result;
}

template <typename Scalar>
ProjectedRunResultT<Scalar> run_projected_ldg(
    const TabularMdpT<Scalar>& mdp, const SoftmaxPolicyT<Scalar>& policy,
    Scalar gamma, const FeatureMapT<Scalar>& features, Scalar lambda,
    const ProjectionSets& sets, long m, const SaddleSchedule& schedule,
    Rng& rng, const SaddleRunOptionsT<Scalar>& opts = {}) {
    SaddleStateT<Scalar> init =
        make_saddle_state(features, mdp.num_pairs(), lambda);
    return run_projected_ldg_from(std::move(init), mdp, policy, gamma,
                                  features, lambda, sets, m, schedule, rng,
                                  opts);
}

// Optimality gap at the averaged iterates:
//   max_{(beta,tau) in Y x Z} L(alpha_bar, ., .)
//   - min_{alpha in X} L(., beta_bar, tau_bar).
// The inner max is a concave quadratic: its unconstrained stationary point
// (beta_i = C^{-1}(A^T alpha_i - b_i), tau = u^T alpha) is used when it
// lies inside Y x Z; otherwise projected gradient ascent to 1e-10. The
// inner min is linear in alpha, minimized in closed form on the Frobenius
// ball.
template <typename Scalar>
Scalar optimality_gap(const TabularMdpT<Scalar>& mdp,
                      const SoftmaxPolicyT<Scalar>& policy,
                      const OccupancyTableT<Scalar>& occ,
                      const FeatureMapT<Scalar>& features, Scalar lambda,
                      const ProjectionSets& sets,
                      const MatrixX<Scalar>& alpha_bar,
                      const MatrixX<Scalar>& beta_bar,
                      const VectorX<Scalar>& tau_bar) {
    sets.validate();
    SaddleSystemT<Scalar> sys =
        assemble_saddle_system(mdp, policy, occ, features, lambda);

    // Inner maximization over (beta, tau).
    MatrixX<Scalar> rhs =
        sys.a.transpose() * alpha_bar - sys.b;  // d x n
    VectorX<Scalar> ua = alpha_bar.transpose() * sys.u;
    Eigen::LDLT<MatrixX<Scalar>> cldlt(sys.c);
    if (cldlt.info() != Eigen::Success)
        throw AssumptionError("optimality_gap: C is not positive definite");
    MatrixX<Scalar> beta_opt = cldlt.solve(rhs);
    VectorX<Scalar> tau_opt = ua;
    if (beta_opt.norm() > Scalar(sets.r_y) ||
        tau_opt.norm() > Scalar(sets.r_z)) {
        // Constrained case: projected gradient ascent. The tau block is
        // spherical, so its constrained maximizer is the projection of the
        // unconstrained one; beta needs the iteration.
        Scalar tn = tau_opt.norm();
        if (tn > Scalar(sets.r_z)) tau_opt *= Scalar(sets.r_z) / tn;
        Scalar lip = sys.c.norm() + Scalar(1e-12);
        Scalar step = Scalar(1) / lip;
        MatrixX<Scalar> beta = beta_opt;
        Scalar bn = beta.norm();
        if (bn > Scalar(sets.r_y)) beta *= Scalar(sets.r_y) / bn;
        for (int it = 0; it < 200000; ++it) {
            MatrixX<Scalar> grad = rhs - sys.c * beta;
            MatrixX<Scalar> next = beta + step * grad;
            Scalar nn = next.norm();
            if (nn > Scalar(sets.r_y)) next *= Scalar(sets.r_y) / nn;
            Scalar moved = (next - beta).norm();
            beta = next;
            if (moved < Scalar(1e-10)) break;
        }
        beta_opt = beta;
    }
    Scalar max_val = loss_from_blocks(sys, alpha_bar, beta_opt, tau_opt);

    // Inner minimization over alpha: L is linear with Frobenius gradient
    // Gamma = A beta_bar + lambda u tau_bar^T.
    MatrixX<Scalar> gamma_mat =
        sys.a * beta_bar + lambda * sys.u * tau_bar.transpose();
    Scalar const_part =
        -(beta_bar.cwiseProduct(sys.b)).sum() -
        (beta_bar.transpose() * sys.c * beta_bar).trace() / Scalar(2) -
        lambda * tau_bar.squaredNorm() / Scalar(2);
    Scalar min_val = -Scalar(sets.r_x) * gamma_mat.norm() + const_part;

    Scalar gap = max_val - min_val;
    return gap > Scalar(0) ? gap : Scalar(0);
}

// Second-moment statistics of the stochastic update blocks, evaluated by
// exact summation over the sampling distribution, and the step-size scale
// M* they imply for the theory schedule.
template <typename Scalar>
struct StepScaleT {
    Scalar sigma1_sq = 0, sigma2_sq = 0, sigma3_sq = 0, sigma4_sq = 0;
    Scalar c_alpha = 0, c_y = 0;
    Scalar d_alpha = 0, d_y = 0;
    Scalar m_star = 0;
};

using StepScale = StepScaleT<double>;

template <typename Scalar>
StepScaleT<Scalar> step_scale(const TabularMdpT<Scalar>& mdp,
                              const SoftmaxPolicyT<Scalar>& policy,
                              const OccupancyTableT<Scalar>& occ,
                              const FeatureMapT<Scalar>& features,
                              Scalar lambda, const ProjectionSets& sets) {
    MatrixX<Scalar> probs = policy_probs(policy, mdp);
    MatrixX<Scalar> p = pair_transition(mdp, probs);
    MatrixX<Scalar> score_mat = score_matrix(mdp, probs);
    SaddleSystemT<Scalar> sys =
        assemble_saddle_system(mdp, policy, occ, features, lambda);
    const Index nsa = mdp.num_pairs();
    const MatrixX<Scalar>& psi = features.table;

    Scalar var_delta = 0;   // E |delta_t - A|_F^2
    Scalar var_phi = 0;     // E |Phi_t - u|^2
    Scalar var_phiphi = 0;  // E |Phi Phi^T - C|_F^2
    Scalar var_phig = 0;    // E |Phi g_t^T - B|_F^2
    for (Index x = 0; x < nsa; ++x) {
        Scalar dx = occ.d(x);
        if (dx <= Scalar(0)) continue;
        var_phi += dx * (psi.col(x) - sys.u).squaredNorm();
        var_phiphi +=
            dx * (psi.col(x) * psi.col(x).transpose() - sys.c)
                     .squaredNorm();
        var_phig += dx * (psi.col(x) * score_mat.row(x) - sys.b)
                             .squaredNorm();
        for (Index x2 = 0; x2 < nsa; ++x2) {
            Scalar q = dx * p(x, x2);
            if (q <= Scalar(0)) continue;
            MatrixX<Scalar> delta =
                psi.col(x) *
                (psi.col(x) - occ.gamma * psi.col(x2)).transpose();
            var_delta += q * (delta - sys.a).squaredNorm();
        }
    }

    StepScaleT<Scalar> out;
    out.sigma1_sq = var_delta + lambda * lambda * var_phi;
    out.sigma2_sq = out.sigma1_sq;  // transposed block, same Frobenius size
    out.sigma3_sq = var_phiphi;     // the lambda block is constant
    out.sigma4_sq = var_phig;
    out.d_alpha = Scalar(sets.r_x) * Scalar(sets.r_x);
    out.d_y = Scalar(sets.r_y) * Scalar(sets.r_y) +
              Scalar(sets.r_z) * Scalar(sets.r_z);
    Scalar mean1 =
        sys.a.squaredNorm() + lambda * lambda * sys.u.squaredNorm();
    Scalar mean2 = mean1;
    Scalar mean3 = sys.c.squaredNorm() + lambda * lambda;
    Scalar mean4 = sys.b.squaredNorm();
    out.c_alpha = out.sigma1_sq * out.d_y * out.d_y +
                  out.sigma1_sq * mean1;
    out.c_y = out.sigma2_sq * out.d_y * out.d_y + out.sigma2_sq * mean2 +
              out.sigma3_sq * out.d_y * out.d_y + out.sigma3_sq * mean3 +
              out.sigma4_sq * mean4;
    out.m_star = std::sqrt(
        Scalar(2) * out.c_alpha * out.c_alpha * out.d_alpha * out.d_alpha +
        Scalar(2) * out.c_y * out.c_y * out.d_y * out.d_y);
    return out;
}

// Gradient estimate from a learned w: (1/m) sum w(s_i, a_i) r(s_i, a_i).
template <typename Scalar>
VectorX<Scalar> estimate_gradient_from_w(
    const std::vector<StateActionPair>& samples,
    const TabularMdpT<Scalar>& mdp, const MatrixX<Scalar>& w_table) {
    if (samples.empty())
        throw ConfigError("estimate_gradient_from_w: empty sample set");
    VectorX<Scalar> grad = VectorX<Scalar>::Zero(w_table.cols());
    for (const StateActionPair& sa : samples)
        grad += mdp.reward(sa.state, sa.action) *
                w_table.row(mdp.pair_index(sa.state, sa.action))
                    .transpose();
    return grad / static_cast<Scalar>(samples.size());
}

}  // namespace ldg

#endif
