#ifndef LDG_MDP_HPP
#define LDG_MDP_HPP

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "ldg/errors.hpp"

namespace ldg {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Index = Eigen::Index;

struct StateActionPair {
    Index state = 0;
    Index action = 0;
};

// One sample from the occupancy-weighted forward chain: (s, a) then the
// successor pair (s2, a2). restart_flag marks s2 as a restart draw from the
// initial distribution instead of a transition draw (trajectory-mode
// sampling of the discounted chain; exact mode never restarts).
struct TransitionSample {
    Index s = 0;
    Index a = 0;
    Index s2 = 0;
    Index a2 = 0;
    bool restart_flag = false;
};

// Finite MDP (S, A, P, r, gamma, d0). Transitions are stored row-major over
// flattened (s, a) pairs: transition.row(s * num_actions + a) is P(. | s, a).
template <typename Scalar>
struct TabularMdpT {
    Index num_states = 0;
    Index num_actions = 0;
    MatrixX<Scalar> transition;    // |S||A| x |S|
    MatrixX<Scalar> reward;        // |S| x |A|
    VectorX<Scalar> initial_dist;  // |S|
    Scalar discount = Scalar(0);

    Index num_pairs() const { return num_states * num_actions; }
    Index pair_index(Index s, Index a) const { return s * num_actions + a; }

    // Reward over flattened pairs, matching the transition row order.
    VectorX<Scalar> reward_flat() const {
        VectorX<Scalar> r(num_pairs());
        for (Index s = 0; s < num_states; ++s)
            for (Index a = 0; a < num_actions; ++a)
                r(pair_index(s, a)) = reward(s, a);
        return r;
    }

    void validate() const {
        if (num_states < 1 || num_actions < 1)
            throw ConfigError("mdp: need at least one state and action");
        if (transition.rows() != num_pairs() ||
            transition.cols() != num_states)
            throw ConfigError("mdp: transition shape mismatch");
        if (reward.rows() != num_states || reward.cols() != num_actions)
            throw ConfigError("mdp: reward shape mismatch");
        if (initial_dist.size() != num_states)
            throw ConfigError("mdp: initial_dist length mismatch");
        if (discount < Scalar(0) || discount > Scalar(1))
            throw ConfigError("mdp: discount outside [0, 1]");
        for (Index x = 0; x < num_pairs(); ++x) {
            if (transition.row(x).minCoeff() < Scalar(0))
                throw ConfigError("mdp: negative transition probability");
            if (std::abs(transition.row(x).sum() - Scalar(1)) > Scalar(1e-12))
                throw ConfigError("mdp: transition row does not sum to 1");
        }
        if (initial_dist.minCoeff() < Scalar(0))
            throw ConfigError("mdp: negative initial probability");
        if (std::abs(initial_dist.sum() - Scalar(1)) > Scalar(1e-12))
            throw ConfigError("mdp: initial_dist does not sum to 1");
        if (!reward.allFinite())
            throw ConfigError("mdp: non-finite reward");
    }
};

using TabularMdp = TabularMdpT<double>;

// Deterministic gridworld on a side x side board, actions up/down/left/right
// with wall clamping. Reward 1 for any action taken in the goal cell
// (bottom-right); the goal teleports to the start cell (top-left) so the
// chain stays recurrent. States are indexed row * side + col.
template <typename Scalar = double>
TabularMdpT<Scalar> make_gridworld(Index side, Scalar discount = Scalar(1)) {
    if (side < 2) throw ConfigError("gridworld: side must be >= 2");
    TabularMdpT<Scalar> m;
    m.num_states = side * side;
    m.num_actions = 4;
    m.transition = MatrixX<Scalar>::Zero(m.num_pairs(), m.num_states);
    m.reward = MatrixX<Scalar>::Zero(m.num_states, 4);
    m.initial_dist = VectorX<Scalar>::Zero(m.num_states);
    m.discount = discount;

    const Index start = 0;
    const Index goal = side * side - 1;
    m.initial_dist(start) = Scalar(1);

    const Index drow[4] = {-1, 1, 0, 0};
    const Index dcol[4] = {0, 0, -1, 1};
    for (Index row = 0; row < side; ++row) {
        for (Index col = 0; col < side; ++col) {
            Index s = row * side + col;
            for (Index a = 0; a < 4; ++a) {
                Index next;
                if (s == goal) {
                    next = start;
                    m.reward(s, a) = Scalar(1);
                } else {
                    Index nr = std::min(std::max(row + drow[a], Index(0)),
                                        side - 1);
                    Index nc = std::min(std::max(col + dcol[a], Index(0)),
                                        side - 1);
                    next = nr * side + nc;
                }
                m.transition(m.pair_index(s, a), next) = Scalar(1);
            }
        }
    }
    m.validate();
    return m;
}

// Environment lookup by name; currently "grid-<side>".
template <typename Scalar = double>
TabularMdpT<Scalar> make_env(const std::string& name) {
    const std::string prefix = "grid-";
    if (name.rfind(prefix, 0) == 0) {
        Index side = 0;
        try {
            side = static_cast<Index>(std::stol(name.substr(prefix.size())));
        } catch (const std::exception&) {
            throw ConfigError("unknown environment: " + name);
        }
        return make_gridworld<Scalar>(side);
    }
    throw ConfigError("unknown environment: " + name);
}

}  // namespace ldg

#endif
