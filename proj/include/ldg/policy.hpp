#ifndef LDG_POLICY_HPP
#define LDG_POLICY_HPP

#include <cmath>

#include <Eigen/Dense>

#include "ldg/errors.hpp"
#include "ldg/mdp.hpp"

namespace ldg {

// Tabular softmax policy: one logit per (s, a), n = |S||A| parameters,
// pi(a|s) = exp(theta[s,a]) / sum_b exp(theta[s,b]). Full support by
// construction, which is what the ergodicity assumption needs.
template <typename Scalar>
struct SoftmaxPolicyT {
    VectorX<Scalar> theta;

    static SoftmaxPolicyT zeros(const TabularMdpT<Scalar>& mdp) {
        return SoftmaxPolicyT{VectorX<Scalar>::Zero(mdp.num_pairs())};
    }
};

using SoftmaxPolicy = SoftmaxPolicyT<double>;

// Action probabilities, one row per state. Logits are max-shifted per row
// before exponentiation so large theta cannot overflow.
template <typename Scalar>
MatrixX<Scalar> policy_probs(const SoftmaxPolicyT<Scalar>& policy,
                             const TabularMdpT<Scalar>& mdp) {
    if (policy.theta.size() != mdp.num_pairs())
        throw ConfigError("policy: theta length != |S||A|");
    MatrixX<Scalar> probs(mdp.num_states, mdp.num_actions);
    for (Index s = 0; s < mdp.num_states; ++s) {
        for (Index a = 0; a < mdp.num_actions; ++a)
            probs(s, a) = policy.theta(mdp.pair_index(s, a));
        probs.row(s).array() -= probs.row(s).maxCoeff();
        probs.row(s) = probs.row(s).array().exp();
        probs.row(s) /= probs.row(s).sum();
    }
    return probs;
}

// Score vector grad_theta log pi(a|s), length n. Nonzero only on row s:
// entry (s, b) is 1{b=a} - pi(b|s).
template <typename Scalar>
VectorX<Scalar> score(const SoftmaxPolicyT<Scalar>& policy,
                      const TabularMdpT<Scalar>& mdp, Index s, Index a) {
    if (s < 0 || s >= mdp.num_states || a < 0 || a >= mdp.num_actions)
        throw ConfigError("score: index out of range");
    MatrixX<Scalar> probs = policy_probs(policy, mdp);
    VectorX<Scalar> g = VectorX<Scalar>::Zero(mdp.num_pairs());
    for (Index b = 0; b < mdp.num_actions; ++b)
        g(mdp.pair_index(s, b)) = (b == a ? Scalar(1) : Scalar(0)) -
                                  probs(s, b);
    return g;
}

// All score vectors stacked: row (s, a) is score(policy, s, a). The exact
// solvers consume this |S||A| x n matrix directly.
template <typename Scalar>
MatrixX<Scalar> score_matrix(const TabularMdpT<Scalar>& mdp,
                             const MatrixX<Scalar>& probs) {
    const Index nsa = mdp.num_pairs();
    MatrixX<Scalar> g = MatrixX<Scalar>::Zero(nsa, nsa);
    for (Index s = 0; s < mdp.num_states; ++s)
        for (Index a = 0; a < mdp.num_actions; ++a) {
            Index x = mdp.pair_index(s, a);
            for (Index b = 0; b < mdp.num_actions; ++b)
                g(x, mdp.pair_index(s, b)) =
                    (b == a ? Scalar(1) : Scalar(0)) - probs(s, b);
        }
    return g;
}

// State-action transition matrix of the policy-induced chain over flattened
// pairs: entry ((s,a), (s2,a2)) = P(s2|s,a) * pi(a2|s2).
template <typename Scalar>
MatrixX<Scalar> pair_transition(const TabularMdpT<Scalar>& mdp,
                                const MatrixX<Scalar>& probs) {
    const Index nsa = mdp.num_pairs();
    MatrixX<Scalar> p(nsa, nsa);
    for (Index x = 0; x < nsa; ++x)
        for (Index s2 = 0; s2 < mdp.num_states; ++s2)
            for (Index a2 = 0; a2 < mdp.num_actions; ++a2)
                p(x, mdp.pair_index(s2, a2)) =
                    mdp.transition(x, s2) * probs(s2, a2);
    return p;
}

// Initial distribution over pairs: d0(s) * pi(a|s).
template <typename Scalar>
VectorX<Scalar> pair_initial_dist(const TabularMdpT<Scalar>& mdp,
                                  const MatrixX<Scalar>& probs) {
    VectorX<Scalar> d0(mdp.num_pairs());
    for (Index s = 0; s < mdp.num_states; ++s)
        for (Index a = 0; a < mdp.num_actions; ++a)
            d0(mdp.pair_index(s, a)) = mdp.initial_dist(s) * probs(s, a);
    return d0;
}

}  // namespace ldg

#endif
