#ifndef LDG_TESTS_SUPPORT_HPP
#define LDG_TESTS_SUPPORT_HPP

#include <cmath>

#include "ldg/exact.hpp"
#include "ldg/mdp.hpp"
#include "ldg/policy.hpp"
#include "ldg/rng.hpp"

namespace ldgtest {

using namespace ldg;

// One state, one action, reward 1: the smallest legal MDP. Scores and all
// gradient tables are identically zero.
inline TabularMdp make_single(double discount = 0.9, double reward = 1.0) {
    TabularMdp mdp;
    mdp.num_states = 1;
    mdp.num_actions = 1;
    mdp.transition = MatrixX<double>::Ones(1, 1);
    mdp.reward = MatrixX<double>::Constant(1, 1, reward);
    mdp.initial_dist = VectorX<double>::Ones(1);
    mdp.discount = discount;
    mdp.validate();
    return mdp;
}

// Two-armed bandit: one state, restart every step, r = (1, 0). At theta = 0
// the exact policy gradient is (0.25, -0.25) for every discount.
inline TabularMdp make_bandit(double discount = 1.0) {
    TabularMdp mdp;
    mdp.num_states = 1;
    mdp.num_actions = 2;
    mdp.transition = MatrixX<double>::Ones(2, 1);
    mdp.reward = MatrixX<double>(1, 2);
    mdp.reward << 1.0, 0.0;
    mdp.initial_dist = VectorX<double>::Ones(1);
    mdp.discount = discount;
    mdp.validate();
    return mdp;
}

// Deterministic two-state cycle with a single action, d0 = (1, 0).
inline TabularMdp make_cycle(double discount = 0.5) {
    TabularMdp mdp;
    mdp.num_states = 2;
    mdp.num_actions = 1;
    mdp.transition = MatrixX<double>(2, 2);
    mdp.transition << 0.0, 1.0, 1.0, 0.0;
    mdp.reward = MatrixX<double>(2, 1);
    mdp.reward << 1.0, 0.0;
    mdp.initial_dist = VectorX<double>(2);
    mdp.initial_dist << 1.0, 0.0;
    mdp.discount = discount;
    mdp.validate();
    return mdp;
}

// Strongly mixing two-state two-action MDP; both actions keep the chain
// close to uniform so stochastic estimators settle quickly.
inline TabularMdp make_two_state(double discount = 1.0) {
    TabularMdp mdp;
    mdp.num_states = 2;
    mdp.num_actions = 2;
    mdp.transition = MatrixX<double>(4, 2);
    mdp.transition << 0.55, 0.45, 0.4, 0.6, 0.45, 0.55, 0.6, 0.4;
    mdp.reward = MatrixX<double>(2, 2);
    mdp.reward << 1.0, 0.0, 0.0, 0.5;
    mdp.initial_dist = VectorX<double>(2);
    mdp.initial_dist << 0.5, 0.5;
    mdp.discount = discount;
    mdp.validate();
    return mdp;
}

// Swap-symmetric two-state MDP: under theta = 0 the induced chain has
// stationary distribution (0.5, 0.5) equal to d0, so the undiscounted
// state distribution coincides with every d_gamma marginal.
inline TabularMdp make_symmetric_two_state(double discount = 1.0) {
    TabularMdp mdp;
    mdp.num_states = 2;
    mdp.num_actions = 2;
    mdp.transition = MatrixX<double>(4, 2);
    mdp.transition << 0.9, 0.1, 0.3, 0.7, 0.1, 0.9, 0.7, 0.3;
    mdp.reward = MatrixX<double>(2, 2);
    mdp.reward << 1.0, 0.0, 0.0, 0.5;
    mdp.initial_dist = VectorX<double>(2);
    mdp.initial_dist << 0.5, 0.5;
    mdp.discount = discount;
    mdp.validate();
    return mdp;
}

// Random ergodic MDP: transition rows and d0 get a floor before
// normalization, so every entry is positive and the chain mixes.
inline TabularMdp make_random_ergodic(Rng& rng, Index max_states = 6,
                                      Index max_actions = 3,
                                      double discount = 1.0) {
    TabularMdp mdp;
    mdp.num_states =
        2 + static_cast<Index>(rng.uniform() * static_cast<double>(
                                                   max_states - 1));
    if (mdp.num_states > max_states) mdp.num_states = max_states;
    mdp.num_actions =
        1 + static_cast<Index>(rng.uniform() * static_cast<double>(
                                                   max_actions));
    if (mdp.num_actions > max_actions) mdp.num_actions = max_actions;
    mdp.transition = MatrixX<double>(mdp.num_pairs(), mdp.num_states);
    for (Index x = 0; x < mdp.num_pairs(); ++x) {
        for (Index s2 = 0; s2 < mdp.num_states; ++s2)
            mdp.transition(x, s2) = 0.05 + rng.uniform();
        mdp.transition.row(x) /= mdp.transition.row(x).sum();
    }
    mdp.reward = MatrixX<double>(mdp.num_states, mdp.num_actions);
    for (Index s = 0; s < mdp.num_states; ++s)
        for (Index a = 0; a < mdp.num_actions; ++a)
            mdp.reward(s, a) = rng.uniform();
    mdp.initial_dist = VectorX<double>(mdp.num_states);
    for (Index s = 0; s < mdp.num_states; ++s)
        mdp.initial_dist(s) = 0.05 + rng.uniform();
    mdp.initial_dist /= mdp.initial_dist.sum();
    mdp.discount = discount;
    mdp.validate();
    return mdp;
}

inline SoftmaxPolicy make_random_policy(const TabularMdp& mdp, Rng& rng,
                                        double scale = 0.5) {
    SoftmaxPolicy policy = SoftmaxPolicy::zeros(mdp);
    for (Index i = 0; i < policy.theta.size(); ++i)
        policy.theta(i) = scale * (2.0 * rng.uniform() - 1.0);
    return policy;
}

// Central finite differences of J_gamma(theta), step h on each component.
inline VectorX<double> fd_policy_gradient(const TabularMdp& mdp,
                                          const SoftmaxPolicy& policy,
                                          double gamma, double h = 1e-5) {
    VectorX<double> grad(policy.theta.size());
    SoftmaxPolicy probe = policy;
    for (Index i = 0; i < policy.theta.size(); ++i) {
        probe.theta(i) = policy.theta(i) + h;
        double up = policy_performance(mdp, probe, gamma);
        probe.theta(i) = policy.theta(i) - h;
        double dn = policy_performance(mdp, probe, gamma);
        probe.theta(i) = policy.theta(i);
        grad(i) = (up - dn) / (2.0 * h);
    }
    return grad;
}

// Central finite differences of log d_gamma(s, a) w.r.t. each theta
// component, one row per pair.
inline MatrixX<double> fd_log_density_gradient(const TabularMdp& mdp,
                                               const SoftmaxPolicy& policy,
                                               double gamma,
                                               double h = 1e-5) {
    MatrixX<double> w(mdp.num_pairs(), policy.theta.size());
    SoftmaxPolicy probe = policy;
    for (Index i = 0; i < policy.theta.size(); ++i) {
        probe.theta(i) = policy.theta(i) + h;
        VectorX<double> up =
            solve_occupancy(mdp, probe, gamma).d.array().log();
        probe.theta(i) = policy.theta(i) - h;
        VectorX<double> dn =
            solve_occupancy(mdp, probe, gamma).d.array().log();
        probe.theta(i) = policy.theta(i);
        w.col(i) = (up - dn) / (2.0 * h);
    }
    return w;
}

}  // namespace ldgtest

#endif
