#ifndef LDG_TD_HPP
#define LDG_TD_HPP

#include <chrono>
#include <ostream>

#include <Eigen/Dense>

#include "ldg/errors.hpp"
#include "ldg/exact.hpp"
#include "ldg/features.hpp"
#include "ldg/sampling.hpp"

namespace ldg {

// Learning-rate schedule for the stochastic estimators: either a constant
// step or the Robbins-Monro family a/(b+t), which is square-summable but
// not summable as the convergence conditions require.
struct StepSchedule {
    enum class Kind { constant, robbins_monro };

    Kind kind = Kind::robbins_monro;
    double a = 1.0;
    double b = 100.0;

    double step(long t) const {
        if (a < 0.0 || (kind == Kind::robbins_monro && b < 0.0))
            throw ConfigError("step schedule: negative parameters");
        return kind == Kind::constant ? a
                                      : a / (b + static_cast<double>(t));
    }

    static StepSchedule constant(double a) {
        return {Kind::constant, a, 0.0};
    }
    static StepSchedule robbins_monro(double a = 1.0, double b = 100.0) {
        return {Kind::robbins_monro, a, b};
    }
};

// d-weighted L1 distance between two tables, summed over parameter columns:
// sum_x d(x) sum_j |u - v|(x, j). The metric in which the expected backup
// is a gamma-contraction.
template <typename Scalar>
Scalar weighted_l1_distance(const VectorX<Scalar>& d,
                            const MatrixX<Scalar>& u,
                            const MatrixX<Scalar>& v) {
    return (d.asDiagonal() * (u - v).cwiseAbs()).sum();
}

// Expected backup operator: Y W = gamma D^{-1} P_pi^T D W + G. Its unique
// fixed point is the exact log-density-gradient table.
template <typename Scalar>
GradTableT<Scalar> apply_operator_Y(const TabularMdpT<Scalar>& mdp,
                                    const SoftmaxPolicyT<Scalar>& policy,
                                    const OccupancyTableT<Scalar>& occ,
                                    const GradTableT<Scalar>& w) {
    if (occ.d.minCoeff() <= Scalar(0))
        throw ModelError("apply_operator_Y: occupancy has zero mass");
    MatrixX<Scalar> probs = policy_probs(policy, mdp);
    MatrixX<Scalar> p = pair_transition(mdp, probs);
    MatrixX<Scalar> g = score_matrix(mdp, probs);
    GradTableT<Scalar> out;
    out.gamma = occ.gamma;
    out.w = occ.gamma * (occ.d.cwiseInverse().asDiagonal() *
                         (p.transpose() * (occ.d.asDiagonal() * w.w))) +
            g;
    return out;
}

template <typename Scalar>
struct TdStateT {
    GradTableT<Scalar> w;
    long step_count = 0;
    StepSchedule schedule;
};

using TdState = TdStateT<double>;

// One backward-TD update at row (s2, a2). The bootstrap term carries no
// explicit gamma factor: the Bernoulli gate of the backward sampler already
// realizes both gamma and the kernel sub-normalization in expectation
// (inactive draws regress the row toward the score alone).
template <typename Scalar>
void td0_step(TdStateT<Scalar>& state, const MatrixX<Scalar>& score_mat,
              const TabularMdpT<Scalar>& mdp,
              const BackwardDrawT<Scalar>& draw) {
    const TransitionSample& smp = draw.sample;
    Scalar alpha =
        static_cast<Scalar>(state.schedule.step(state.step_count));
    ++state.step_count;
    Index x2 = mdp.pair_index(smp.s2, smp.a2);
    if (draw.bootstrap_active) {
        Index x = mdp.pair_index(smp.s, smp.a);
        state.w.w.row(x2) += alpha * (state.w.w.row(x) + score_mat.row(x2) -
                                      state.w.w.row(x2));
    } else {
        state.w.w.row(x2) +=
            alpha * (score_mat.row(x2) - state.w.w.row(x2));
    }
}

// Optional diagnostics sink for run_td0: distance-to-exact curve rows
// (iteration, weighted_L1_error, wall_clock_ns) every `stride` steps.
template <typename Scalar>
struct TdCurveOptionsT {
    const GradTableT<Scalar>* reference = nullptr;
    const OccupancyTableT<Scalar>* occupancy = nullptr;
    Index stride = 1000;
    std::ostream* out = nullptr;
};

using TdCurveOptions = TdCurveOptionsT<double>;

template <typename Scalar>
GradTableT<Scalar> run_td0(const TabularMdpT<Scalar>& mdp,
                           const SoftmaxPolicyT<Scalar>& policy,
                           Scalar gamma, long iterations,
                           const StepSchedule& schedule, Rng& rng,
                           const TdCurveOptionsT<Scalar>& curve = {}) {
    if (iterations < 1) throw ConfigError("run_td0: iterations < 1");
    OccupancyTableT<Scalar> occ = solve_occupancy(mdp, policy, gamma);
    MatrixX<Scalar> probs = policy_probs(policy, mdp);
    MatrixX<Scalar> score_mat = score_matrix(mdp, probs);
    BackwardSamplerT<Scalar> sampler(mdp, probs, occ);

    TdStateT<Scalar> state;
    state.w.gamma = gamma;
    state.w.w = MatrixX<Scalar>::Zero(mdp.num_pairs(), mdp.num_pairs());
    state.schedule = schedule;

    const bool emit = curve.out && curve.reference && curve.occupancy;
    if (emit) *curve.out << "iteration,weighted_L1_error,wall_clock_ns\n";
    auto t0 = std::chrono::steady_clock::now();
    for (long t = 0; t < iterations; ++t) {
        td0_step(state, score_mat, mdp, sampler.sample(rng));
        if (emit && ((t + 1) % curve.stride == 0 || t + 1 == iterations)) {
            auto ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
            *curve.out << (t + 1) << ','
                       << weighted_l1_distance(curve.occupancy->d,
                                               state.w.w,
                                               curve.reference->w)
                       << ',' << ns << '\n';
        }
    }
    return state.w;
}

template <typename Scalar>
struct ContractionDiagnosticT {
    Scalar lhs = Scalar(0);  // weighted L1 distance after the backup
    Scalar rhs = Scalar(0);  // gamma times the distance before
    // At gamma = 1 the operator is only non-expansive, so the guarantee
    // weakens to lhs <= distance-before (rhs equals that distance).
    bool nonexpansive_only = false;
};

using ContractionDiagnostic = ContractionDiagnosticT<double>;

template <typename Scalar>
ContractionDiagnosticT<Scalar> contraction_diagnostic(
    const TabularMdpT<Scalar>& mdp, const SoftmaxPolicyT<Scalar>& policy,
    const OccupancyTableT<Scalar>& occ, const GradTableT<Scalar>& u,
    const GradTableT<Scalar>& v) {
    GradTableT<Scalar> yu = apply_operator_Y(mdp, policy, occ, u);
    GradTableT<Scalar> yv = apply_operator_Y(mdp, policy, occ, v);
    ContractionDiagnosticT<Scalar> diag;
    diag.lhs = weighted_l1_distance(occ.d, yu.w, yv.w);
    diag.rhs = occ.gamma * weighted_l1_distance(occ.d, u.w, v.w);
    diag.nonexpansive_only = occ.gamma >= Scalar(1);
    return diag;
}

template <typename Scalar>
struct LinearTdStateT {
    MatrixX<Scalar> zeta;  // d_f x n
    FeatureMapT<Scalar> features;
};

using LinearTdState = LinearTdStateT<double>;

// Linear-function-approximation TD step on a forward sample
// ((s,a) ~ d_gamma, s2 ~ P, a2 ~ pi):
//   zeta += alpha Phi(s2,a2) (gamma zeta^T Phi(s,a) + g(s2,a2)
//                             - zeta^T Phi(s2,a2))^T.
template <typename Scalar>
void linear_td_step(LinearTdStateT<Scalar>& state,
                    const MatrixX<Scalar>& score_mat,
                    const TabularMdpT<Scalar>& mdp,
                    const TransitionSample& smp, Scalar gamma,
                    Scalar alpha) {
    if (state.zeta.rows() != state.features.dim)
        throw ConfigError("linear_td_step: zeta/feature dim mismatch");
    Index x = mdp.pair_index(smp.s, smp.a);
    Index x2 = mdp.pair_index(smp.s2, smp.a2);
    Eigen::Matrix<Scalar, 1, Eigen::Dynamic> target =
        gamma * (state.features.col(x).transpose() * state.zeta) +
        score_mat.row(x2) -
        state.features.col(x2).transpose() * state.zeta;
    state.zeta += alpha * state.features.col(x2) * target;
}

template <typename Scalar>
struct LinearTdSystemT {
    MatrixX<Scalar> a;  // d_f x d_f
    MatrixX<Scalar> g;  // d_f x n
};

using LinearTdSystem = LinearTdSystemT<double>;

// Exact expectations of the linear-TD update pieces under the forward
// sampling distribution d_gamma(s,a) P(s2|s,a) pi(a2|s2):
//   A = E[Phi2 (gamma Phi - Phi2)^T],  g = E[Phi2 score(s2,a2)^T],
// so the expected update is alpha (A zeta + g) and the fixed point solves
// A zeta + g = 0. Note the successor marginal P_pi^T d_gamma differs from
// d_gamma itself when gamma < 1 unless d0 is already stationary.
template <typename Scalar>
LinearTdSystemT<Scalar> assemble_linear_td_system(
    const TabularMdpT<Scalar>& mdp, const SoftmaxPolicyT<Scalar>& policy,
    const OccupancyTableT<Scalar>& occ,
    const FeatureMapT<Scalar>& features) {
    MatrixX<Scalar> probs = policy_probs(policy, mdp);
    MatrixX<Scalar> p = pair_transition(mdp, probs);
    MatrixX<Scalar> score_mat = score_matrix(mdp, probs);
    const MatrixX<Scalar>& psi = features.table;
    VectorX<Scalar> succ = p.transpose() * occ.d;  // successor-pair marginal
    LinearTdSystemT<Scalar> sys;
    sys.a = occ.gamma * psi * p.transpose() * occ.d.asDiagonal() *
                psi.transpose() -
            psi * succ.asDiagonal() * psi.transpose();
    sys.g = psi * succ.asDiagonal() * score_mat;
    return sys;
}

// Fixed point of the assembled system; a singular A means the convergence
// assumption of the linear analysis fails (always the case at gamma = 1,
// where A annihilates the all-ones feature combination).
template <typename Scalar>
MatrixX<Scalar> solve_linear_td_fixed_point(
    const LinearTdSystemT<Scalar>& sys) {
    Eigen::PartialPivLU<MatrixX<Scalar>> lu(sys.a);
    if (lu.rcond() < kRcondFloor)
        throw AssumptionError(
            "linear TD: matrix A is singular (convergence assumption "
            "violated)");
    return lu.solve(-sys.g);
}

}  // namespace ldg

#endif
