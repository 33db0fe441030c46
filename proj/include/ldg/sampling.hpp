#ifndef LDG_SAMPLING_HPP
#define LDG_SAMPLING_HPP

#include <vector>

#include <Eigen/Dense>

#include "ldg/errors.hpp"
#include "ldg/exact.hpp"
#include "ldg/mdp.hpp"
#include "ldg/policy.hpp"
#include "ldg/rng.hpp"

namespace ldg {

template <typename Scalar>
struct TrajectoryStepT {
    Index s = 0;
    Index a = 0;
    Scalar r = Scalar(0);
};

using TrajectoryStep = TrajectoryStepT<double>;

// On-policy rollout of the plain chain: s0 ~ d0, a_t ~ pi, s_{t+1} ~ P.
template <typename Scalar>
std::vector<TrajectoryStepT<Scalar>> sample_trajectory(
    const TabularMdpT<Scalar>& mdp, const SoftmaxPolicyT<Scalar>& policy,
    Index horizon, Rng& rng) {
    if (horizon < 1) throw ConfigError("sample_trajectory: horizon < 1");
    MatrixX<Scalar> probs = policy_probs(policy, mdp);
    std::vector<TrajectoryStepT<Scalar>> out;
    out.reserve(static_cast<std::size_t>(horizon));
    Index s = rng.categorical(mdp.initial_dist);
    for (Index t = 0; t < horizon; ++t) {
        Index a = rng.categorical(probs.row(s));
        out.push_back({s, a, mdp.reward(s, a)});
        s = rng.categorical(mdp.transition.row(mdp.pair_index(s, a)));
    }
    return out;
}

// Draws (s, a) i.i.d. from the solved occupancy, then the forward pair
// s2 ~ P(.|s,a), a2 ~ pi(.|s2). The default sampling mode: matches the
// i.i.d.-from-d_gamma assumption of the saddle analysis.
template <typename Scalar>
class ExactOccupancySamplerT {
  public:
    ExactOccupancySamplerT(const TabularMdpT<Scalar>& mdp,
                           const MatrixX<Scalar>& probs,
                           const OccupancyTableT<Scalar>& occ)
        : mdp_(mdp), probs_(probs), d_(occ.d) {
        if (d_.size() != mdp.num_pairs())
            throw ConfigError(
                "occupancy sampler: table does not match the MDP");
    }

    TransitionSample sample(Rng& rng) const {
        Index x = rng.categorical(d_);
        Index s = x / mdp_.num_actions;
        Index a = x % mdp_.num_actions;
        Index s2 = rng.categorical(mdp_.transition.row(x));
        Index a2 = rng.categorical(probs_.row(s2));
        return {s, a, s2, a2, false};
    }

  private:
    const TabularMdpT<Scalar>& mdp_;
    MatrixX<Scalar> probs_;
    VectorX<Scalar> d_;
};

using ExactOccupancySampler = ExactOccupancySamplerT<double>;

// Restart-chain sampler whose stationary state-action law is d_gamma: with
// probability (1-gamma) a step restarts from d0 instead of following P.
// Successive samples are consecutive chain transitions, so they are
// correlated; restart_flag marks the steps whose successor was a restart
// draw (consumers needing s2 ~ P must skip those). At gamma = 1 the plain
// ergodic chain is advanced through a burn-in first.
template <typename Scalar>
class TrajectoryOccupancySamplerT {
  public:
    TrajectoryOccupancySamplerT(const TabularMdpT<Scalar>& mdp,
                                const MatrixX<Scalar>& probs, Scalar gamma,
                                Rng& rng, Index burn_in = 1000)
        : mdp_(mdp), probs_(probs), gamma_(gamma) {
        if (gamma < Scalar(0) || gamma > Scalar(1))
            throw ConfigError("occupancy sampler: gamma outside [0, 1]");
        s_ = rng.categorical(mdp_.initial_dist);
        a_ = rng.categorical(probs_.row(s_));
        if (gamma_ == Scalar(1)) {
            for (Index t = 0; t < burn_in; ++t) advance(rng, false);
        }
    }

    TransitionSample sample(Rng& rng) {
        Index s = s_;
        Index a = a_;
        bool restart =
            gamma_ < Scalar(1) && rng.uniform() < Scalar(1) - gamma_;
        advance(rng, restart);
        return {s, a, s_, a_, restart};
    }

  private:
    void advance(Rng& rng, bool restart) {
        s_ = restart
                 ? rng.categorical(mdp_.initial_dist)
                 : rng.categorical(
                       mdp_.transition.row(mdp_.pair_index(s_, a_)));
        a_ = rng.categorical(probs_.row(s_));
    }

    const TabularMdpT<Scalar>& mdp_;
    MatrixX<Scalar> probs_;
    Scalar gamma_;
    Index s_ = 0;
    Index a_ = 0;
};

using TrajectoryOccupancySampler = TrajectoryOccupancySamplerT<double>;

template <typename Scalar>
struct BackwardDrawT {
    TransitionSample sample;
    bool bootstrap_active = false;
};

using BackwardDraw = BackwardDrawT<double>;

// Backward-pair sampler: draws the successor (s2, a2) ~ d_gamma, then with
// probability M(s2, a2) draws the predecessor (s, a) from the normalized
// backward kernel P_b(. | s2, a2) proportional to d(s,a) P(s2|s,a) pi(a2|s2).
// The gate mass M = 1 - (1-gamma) d0(s2) pi(a2|s2) / d(s2,a2) equals the
// total sub-normalized backward mass scaled by gamma (Bellman flow), so an
// update that omits its own gamma factor has expectation exactly the Y
// operator applied at (s2, a2). At gamma = 1, M is identically 1; at
// gamma = 0 it is identically 0 and the kernel is never consulted.
template <typename Scalar>
class BackwardSamplerT {
  public:
    BackwardSamplerT(const TabularMdpT<Scalar>& mdp,
                     const MatrixX<Scalar>& probs,
                     const OccupancyTableT<Scalar>& occ)
        : num_actions_(mdp.num_actions), d_(occ.d) {
        const Index nsa = mdp.num_pairs();
        if (d_.size() != nsa)
            throw ConfigError(
                "backward sampler: table does not match the MDP");
        if (d_.minCoeff() <= Scalar(0))
            throw ModelError(
                "backward sampler: occupancy has zero mass (ergodicity "
                "violated)");
        VectorX<Scalar> d0 = pair_initial_dist(mdp, probs);
        MatrixX<Scalar> p = pair_transition(mdp, probs);
        gate_ = VectorX<Scalar>(nsa);
        kernel_ = MatrixX<Scalar>::Zero(nsa, nsa);
        for (Index x2 = 0; x2 < nsa; ++x2) {
            Scalar m = Scalar(1) - (Scalar(1) - occ.gamma) * d0(x2) / d_(x2);
            gate_(x2) = std::min(std::max(m, Scalar(0)), Scalar(1));
            VectorX<Scalar> unnorm = d_.cwiseProduct(p.col(x2));
            Scalar mass = unnorm.sum();
            if (mass > Scalar(0)) {
                kernel_.row(x2) = unnorm.transpose() / mass;
            } else if (gate_(x2) > Scalar(1e-14)) {
                throw ModelError(
                    "backward sampler: positive gate with empty backward "
                    "kernel");
            }
        }
    }

    Scalar gate(Index x2) const { return gate_(x2); }

    BackwardDrawT<Scalar> sample(Rng& rng) const {
        Index x2 = rng.categorical(d_);
        Index s2 = x2 / num_actions_;
        Index a2 = x2 % num_actions_;
        if (rng.uniform() < gate_(x2)) {
            Index x = rng.categorical(kernel_.row(x2));
            return {{x / num_actions_, x % num_actions_, s2, a2, false},
                    true};
        }
        // Restart boundary: no predecessor; (s, a) mirrors (s2, a2) but is
        // ignored by consumers.
        return {{s2, a2, s2, a2, true}, false};
    }

  private:
    Index num_actions_;
    VectorX<Scalar> d_;
    VectorX<Scalar> gate_;
    MatrixX<Scalar> kernel_;
};

using BackwardSampler = BackwardSamplerT<double>;

}  // namespace ldg

#endif
