#ifndef LDG_FEATURES_HPP
#define LDG_FEATURES_HPP

#include <Eigen/Dense>

#include "ldg/errors.hpp"
#include "ldg/mdp.hpp"

namespace ldg {

// Linear feature map over state-action pairs. Column x of table is
// Phi(s, a) for the flattened pair x; the stacked matrix is what the linear
// TD and saddle estimators consume.
template <typename Scalar>
struct FeatureMapT {
    enum class Kind { one_hot, custom };

    Index dim = 0;
    MatrixX<Scalar> table;  // dim x |S||A|
    Kind kind = Kind::custom;

    auto col(Index x) const { return table.col(x); }

    void validate() const {
        if (dim != table.rows() || dim < 1)
            throw ConfigError("feature map: dim does not match table");
        if (kind == Kind::one_hot) {
            if (table.rows() != table.cols() ||
                !table.isApprox(
                    MatrixX<Scalar>::Identity(table.rows(), table.cols())))
                throw ConfigError(
                    "feature map: one-hot kind requires identity table");
        }
    }
};

using FeatureMap = FeatureMapT<double>;

template <typename Scalar>
FeatureMapT<Scalar> one_hot_features(const TabularMdpT<Scalar>& mdp) {
    FeatureMapT<Scalar> f;
    f.dim = mdp.num_pairs();
    f.table = MatrixX<Scalar>::Identity(f.dim, f.dim);
    f.kind = FeatureMapT<Scalar>::Kind::one_hot;
    return f;
}

template <typename Scalar>
FeatureMapT<Scalar> custom_features(const MatrixX<Scalar>& table) {
    FeatureMapT<Scalar> f;
    f.dim = table.rows();
    f.table = table;
    f.kind = FeatureMapT<Scalar>::Kind::custom;
    f.validate();
    return f;
}

}  // namespace ldg

#endif
