#ifndef LDG_EXACT_HPP
#define LDG_EXACT_HPP

#include <cmath>
#include <optional>

#include <Eigen/Dense>

#include "ldg/errors.hpp"
#include "ldg/mdp.hpp"
#include "ldg/policy.hpp"

namespace ldg {

// Reciprocal-condition floor for the dense solves; below this the system is
// treated as numerically singular (condition estimate above 1e12).
inline constexpr double kRcondFloor = 1e-12;

// Discounted occupancy d_gamma over state-action pairs plus its state
// marginal. d solves the Bellman flow equation
//   d(s2, a2) = (1-gamma) d0(s2) pi(a2|s2)
//             + gamma sum_{s,a} d(s,a) P(s2|s,a) pi(a2|s2),
// with the stationarity equations and normalization replacing it at gamma=1.
template <typename Scalar>
struct OccupancyTableT {
    Scalar gamma = Scalar(0);
    VectorX<Scalar> d;        // |S||A|
    VectorX<Scalar> d_state;  // |S|
};

using OccupancyTable = OccupancyTableT<double>;

template <typename Scalar>
struct ValueTablesT {
    Scalar gamma = Scalar(0);
    VectorX<Scalar> q;  // |S||A|
    VectorX<Scalar> v;  // |S|
};

using ValueTables = ValueTablesT<double>;

// Rows approximate grad_theta log d_gamma(s, a); exact solves satisfy the
// differentiated flow identity
//   D W = D G + gamma P_pi^T D W                                   (*)
// (D = diag(d), G = stacked scores) and the zero-mean property d^T W = 0.
template <typename Scalar>
struct GradTableT {
    Scalar gamma = Scalar(0);
    MatrixX<Scalar> w;  // |S||A| x n
};

using GradTable = GradTableT<double>;

enum class GradientMethod { classical, practical, ldg, residual_corrected };

template <typename Scalar>
struct GradientReportT {
    VectorX<Scalar> grad;
    GradientMethod method = GradientMethod::classical;
    Scalar gamma_eval = Scalar(0);
    std::optional<VectorX<Scalar>> residual_term;
};

using GradientReport = GradientReportT<double>;

// Max-abs residual of the Bellman flow equation at the given occupancy.
template <typename Scalar>
Scalar flow_residual(const TabularMdpT<Scalar>& mdp,
                     const MatrixX<Scalar>& probs,
                     const OccupancyTableT<Scalar>& occ) {
    MatrixX<Scalar> p = pair_transition(mdp, probs);
    VectorX<Scalar> rhs = (Scalar(1) - occ.gamma) *
                              pair_initial_dist(mdp, probs) +
                          occ.gamma * p.transpose() * occ.d;
    return (occ.d - rhs).template lpNorm<Eigen::Infinity>();
}

template <typename Scalar>
OccupancyTableT<Scalar> solve_occupancy(const TabularMdpT<Scalar>& mdp,
                                        const SoftmaxPolicyT<Scalar>& policy,
                                        Scalar gamma) {
    if (gamma < Scalar(0) || gamma > Scalar(1))
        throw ConfigError("solve_occupancy: gamma outside [0, 1]");
    const Index nsa = mdp.num_pairs();
    MatrixX<Scalar> probs = policy_probs(policy, mdp);
    MatrixX<Scalar> p = pair_transition(mdp, probs);
    VectorX<Scalar> d0 = pair_initial_dist(mdp, probs);

    OccupancyTableT<Scalar> occ;
    occ.gamma = gamma;
    if (gamma < Scalar(1)) {
        MatrixX<Scalar> sys =
            MatrixX<Scalar>::Identity(nsa, nsa) - gamma * p.transpose();
        Eigen::PartialPivLU<MatrixX<Scalar>> lu(sys);
        if (lu.rcond() < kRcondFloor)
            throw ModelError("solve_occupancy: flow system ill-conditioned");
        occ.d = lu.solve((Scalar(1) - gamma) * d0);
    } else {
        // Stationarity plus the normalization row, solved as a stacked
        // least-squares system; rank deficiency means the chain has more
        // than one stationary distribution.
        MatrixX<Scalar> sys(nsa + 1, nsa);
        sys.topRows(nsa) =
            MatrixX<Scalar>::Identity(nsa, nsa) - p.transpose();
        sys.row(nsa).setOnes();
        VectorX<Scalar> rhs = VectorX<Scalar>::Zero(nsa + 1);
        rhs(nsa) = Scalar(1);
        Eigen::ColPivHouseholderQR<MatrixX<Scalar>> qr(sys);
        if (qr.rank() < nsa)
            throw ModelError(
                "solve_occupancy: stationary distribution not unique "
                "(non-ergodic chain)");
        occ.d = qr.solve(rhs);
    }
    if (occ.d.minCoeff() < Scalar(-1e-10))
        throw ModelError("solve_occupancy: negative occupancy mass");
    occ.d = occ.d.cwiseMax(Scalar(0));
    occ.d_state = VectorX<Scalar>::Zero(mdp.num_states);
    for (Index s = 0; s < mdp.num_states; ++s)
        for (Index a = 0; a < mdp.num_actions; ++a)
            occ.d_state(s) += occ.d(mdp.pair_index(s, a));
    if (std::abs(occ.d.sum() - Scalar(1)) > Scalar(1e-10))
        throw ModelError("solve_occupancy: occupancy does not normalize");
    if (flow_residual(mdp, probs, occ) > Scalar(1e-10))
        throw ModelError("solve_occupancy: flow residual too large");
    return occ;
}

template <typename Scalar>
ValueTablesT<Scalar> solve_values(const TabularMdpT<Scalar>& mdp,
                                  const SoftmaxPolicyT<Scalar>& policy,
                                  Scalar gamma_eval) {
    if (gamma_eval < Scalar(0) || gamma_eval >= Scalar(1))
        throw ConfigError(
            "solve_values: Q undefined outside gamma in [0, 1)");
    const Index nsa = mdp.num_pairs();
    MatrixX<Scalar> probs = policy_probs(policy, mdp);
    MatrixX<Scalar> p = pair_transition(mdp, probs);
    MatrixX<Scalar> sys =
        MatrixX<Scalar>::Identity(nsa, nsa) - gamma_eval * p;
    Eigen::PartialPivLU<MatrixX<Scalar>> lu(sys);
    if (lu.rcond() < kRcondFloor)
        throw ModelError("solve_values: Bellman system ill-conditioned");
    ValueTablesT<Scalar> val;
    val.gamma = gamma_eval;
    val.q = lu.solve(mdp.reward_flat());
    val.v = VectorX<Scalar>::Zero(mdp.num_states);
    for (Index s = 0; s < mdp.num_states; ++s)
        for (Index a = 0; a < mdp.num_actions; ++a)
            val.v(s) += probs(s, a) * val.q(mdp.pair_index(s, a));
    return val;
}

// Max rowwise residual of the differentiated flow identity (*) above.
template <typename Scalar>
Scalar grad_table_residual(const TabularMdpT<Scalar>& mdp,
                           const MatrixX<Scalar>& probs,
                           const OccupancyTableT<Scalar>& occ,
                           const GradTableT<Scalar>& grad) {
    MatrixX<Scalar> p = pair_transition(mdp, probs);
    MatrixX<Scalar> g = score_matrix(mdp, probs);
    MatrixX<Scalar> dw = occ.d.asDiagonal() * grad.w;
    MatrixX<Scalar> res =
        dw - occ.d.asDiagonal() * g - occ.gamma * p.transpose() * dw;
    return res.template lpNorm<Eigen::Infinity>();
}

// Exact solve of grad_theta log d_gamma as the |S||A| x n table W. For
// gamma < 1 the weighted system (*) is nonsingular and solved by LU; at
// gamma = 1 it is singular along the all-ones direction, so the zero-mean
// constraint d^T W = 0 is appended and the stack solved by least squares.
// lambda is accepted for interface parity with the penalized formulation;
// the hard constraint replaces it (and must be positive when gamma = 1 to
// acknowledge the regularized problem being solved).
template <typename Scalar>
GradTableT<Scalar> solve_log_density_gradient(
    const TabularMdpT<Scalar>& mdp, const SoftmaxPolicyT<Scalar>& policy,
    Scalar gamma, Scalar lambda = Scalar(1)) {
    if (gamma == Scalar(1) && lambda <= Scalar(0))
        throw ConfigError(
            "solve_log_density_gradient: lambda must be > 0 at gamma = 1");
    OccupancyTableT<Scalar> occ = solve_occupancy(mdp, policy, gamma);
    const Index nsa = mdp.num_pairs();
    MatrixX<Scalar> probs = policy_probs(policy, mdp);
    MatrixX<Scalar> p = pair_transition(mdp, probs);
    MatrixX<Scalar> g = score_matrix(mdp, probs);

    GradTableT<Scalar> grad;
    grad.gamma = gamma;
    if (gamma == Scalar(0)) {
        // The occupancy is the initial pair law d0(s) pi(a|s); only the
        // policy factor depends on theta, so the table is the score matrix.
        // This also covers restricted starts, where zero-mass pairs would
        // make the weighted system below indeterminate.
        grad.w = g;
        return grad;
    }
    if (occ.d.minCoeff() <= Scalar(0))
        throw ModelError(
            "solve_log_density_gradient: occupancy has zero mass "
            "(ergodicity violated)");
    MatrixX<Scalar> dg = occ.d.asDiagonal() * g;
    if (gamma < Scalar(1)) {
        MatrixX<Scalar> sys = MatrixX<Scalar>::Identity(nsa, nsa) -
                              gamma * p.transpose();
        Eigen::PartialPivLU<MatrixX<Scalar>> lu(sys);
        if (lu.rcond() < kRcondFloor)
            throw ModelError(
                "solve_log_density_gradient: system ill-conditioned");
        MatrixX<Scalar> dw = lu.solve(dg);
        grad.w = occ.d.cwiseInverse().asDiagonal() * dw;
    } else {
        MatrixX<Scalar> sys(nsa + 1, nsa);
        sys.topRows(nsa) =
            (MatrixX<Scalar>::Identity(nsa, nsa) - p.transpose()) *
            MatrixX<Scalar>(occ.d.asDiagonal());
        sys.row(nsa) = occ.d.transpose();
        MatrixX<Scalar> rhs(nsa + 1, g.cols());
        rhs.topRows(nsa) = dg;
        rhs.row(nsa).setZero();
        Eigen::ColPivHouseholderQR<MatrixX<Scalar>> qr(sys);
        if (qr.rank() < nsa)
            throw ModelError(
                "solve_log_density_gradient: singular weighted system "
                "(non-ergodic chain)");
        grad.w = qr.solve(rhs);
    }
    return grad;
}

// State-marginal rows grad_theta log d_gamma(s). Derived from the
// factorization log d(s,a) = log d(s) + log pi(a|s): subtracting the score
// from w(s,a) must give the same row for every action; the returned value is
// the pi-average of w, which coincides by the zero-mean score identity.
template <typename Scalar>
MatrixX<Scalar> state_log_density_gradient(
    const GradTableT<Scalar>& grad, const TabularMdpT<Scalar>& mdp,
    const SoftmaxPolicyT<Scalar>& policy) {
    MatrixX<Scalar> probs = policy_probs(policy, mdp);
    MatrixX<Scalar> g = score_matrix(mdp, probs);
    MatrixX<Scalar> out =
        MatrixX<Scalar>::Zero(mdp.num_states, grad.w.cols());
    for (Index s = 0; s < mdp.num_states; ++s) {
        Index x0 = mdp.pair_index(s, 0);
        Eigen::Matrix<Scalar, 1, Eigen::Dynamic> ref =
            grad.w.row(x0) - g.row(x0);
        for (Index a = 1; a < mdp.num_actions; ++a) {
            Index x = mdp.pair_index(s, a);
            Scalar dev = (grad.w.row(x) - g.row(x) - ref)
                             .template lpNorm<Eigen::Infinity>();
            if (dev > Scalar(1e-6))
                throw ModelError(
                    "state_log_density_gradient: rows disagree across "
                    "actions (numerically inconsistent table)");
        }
        for (Index a = 0; a < mdp.num_actions; ++a)
            out.row(s) += probs(s, a) * grad.w.row(mdp.pair_index(s, a));
    }
    return out;
}

template <typename Scalar>
Scalar policy_performance(const TabularMdpT<Scalar>& mdp,
                          const SoftmaxPolicyT<Scalar>& policy,
                          Scalar gamma) {
    OccupancyTableT<Scalar> occ = solve_occupancy(mdp, policy, gamma);
    return occ.d.dot(mdp.reward_flat());
}

// Policy gradient theorem form: sum d_gamma(s,a) Q_gamma(s,a) score(s,a).
// Only defined for gamma < 1 (no Q at gamma = 1).
template <typename Scalar>
GradientReportT<Scalar> exact_policy_gradient_classical(
    const TabularMdpT<Scalar>& mdp, const SoftmaxPolicyT<Scalar>& policy,
    Scalar gamma) {
    if (gamma >= Scalar(1))
        throw ConfigError(
            "exact_policy_gradient_classical: requires gamma < 1");
    OccupancyTableT<Scalar> occ = solve_occupancy(mdp, policy, gamma);
    ValueTablesT<Scalar> val = solve_values(mdp, policy, gamma);
    MatrixX<Scalar> probs = policy_probs(policy, mdp);
    MatrixX<Scalar> g = score_matrix(mdp, probs);
    GradientReportT<Scalar> rep;
    rep.grad = g.transpose() * occ.d.cwiseProduct(val.q);
    rep.method = GradientMethod::classical;
    rep.gamma_eval = gamma;
    return rep;
}

// Log-density-gradient form: sum d_gamma(s,a) w(s,a) r(s,a). Valid for all
// gamma in [0, 1]; at gamma = 1 this is the exact average-reward gradient.
template <typename Scalar>
GradientReportT<Scalar> exact_policy_gradient_ldg(
    const TabularMdpT<Scalar>& mdp, const SoftmaxPolicyT<Scalar>& policy,
    Scalar gamma, Scalar lambda = Scalar(1)) {
    OccupancyTableT<Scalar> occ = solve_occupancy(mdp, policy, gamma);
    GradTableT<Scalar> grad =
        solve_log_density_gradient(mdp, policy, gamma, lambda);
    GradientReportT<Scalar> rep;
    rep.grad =
        grad.w.transpose() * occ.d.cwiseProduct(mdp.reward_flat());
    rep.method = GradientMethod::ldg;
    rep.gamma_eval = gamma;
    return rep;
}

// The estimate actor-critic implementations actually compute: stationary
// weighting d_1 with a discounted critic Q_{gamma_eval}.
template <typename Scalar>
GradientReportT<Scalar> practical_policy_gradient(
    const TabularMdpT<Scalar>& mdp, const SoftmaxPolicyT<Scalar>& policy,
    Scalar gamma_eval) {
    if (gamma_eval >= Scalar(1))
        throw ConfigError("practical_policy_gradient: requires gamma < 1");
    OccupancyTableT<Scalar> occ =
        solve_occupancy(mdp, policy, Scalar(1));
    ValueTablesT<Scalar> val = solve_values(mdp, policy, gamma_eval);
    MatrixX<Scalar> probs = policy_probs(policy, mdp);
    MatrixX<Scalar> g = score_matrix(mdp, probs);
    GradientReportT<Scalar> rep;
    rep.grad = g.transpose() * occ.d.cwiseProduct(val.q);
    rep.method = GradientMethod::practical;
    rep.gamma_eval = gamma_eval;
    return rep;
}

// Splits the exact average-reward gradient into the practical estimate plus
// the term it omits:
//   grad J_1 = E_{d_1}[Q_g score] + (1-g) E_{d_1(s)}[grad log d_1(s) V_g(s)].
// grad carries the full sum; residual_term the correction alone.
template <typename Scalar>
GradientReportT<Scalar> residual_decomposition(
    const TabularMdpT<Scalar>& mdp, const SoftmaxPolicyT<Scalar>& policy,
    Scalar gamma_eval) {
    GradientReportT<Scalar> practical =
        practical_policy_gradient(mdp, policy, gamma_eval);
    OccupancyTableT<Scalar> occ = solve_occupancy(mdp, policy, Scalar(1));
    ValueTablesT<Scalar> val = solve_values(mdp, policy, gamma_eval);
    GradTableT<Scalar> grad =
        solve_log_density_gradient(mdp, policy, Scalar(1));
    MatrixX<Scalar> state_grad =
        state_log_density_gradient(grad, mdp, policy);
    GradientReportT<Scalar> rep;
    rep.residual_term =
        (Scalar(1) - gamma_eval) *
        (state_grad.transpose() * occ.d_state.cwiseProduct(val.v));
    rep.grad = practical.grad + *rep.residual_term;
    rep.method = GradientMethod::residual_corrected;
    rep.gamma_eval = gamma_eval;
    return rep;
}

}  // namespace ldg

#endif
