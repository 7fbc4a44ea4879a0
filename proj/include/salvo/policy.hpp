#pragma once

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>

#include "salvo/engagement.hpp"

namespace salvo {

/// Flattened policy-network weights; the genome the evolution strategy perturbs.
/// Layout: W1 row-major, then W2 row-major, then W3 row-major.
using ParamVector = Eigen::VectorXd;

struct PolicyLayout {
    int q1 = 16;
    int q2 = 16;

    int param_count() const { return 3 * q1 + q1 * q2 + 2 * q2; }
};

/// Observation fed to the consensus controller, in fixed order.
inline Eigen::Vector3d make_observation(double e_a, double e_t, double e_xi) {
    return {e_a, e_t, e_xi};
}

/// Three-layer perceptron mapping consensus-error features to a bounded
/// acceleration command. Hidden activation is the logistic sigmoid; the output
/// passes through tanh and is scaled per channel by the actuator limits, so the
/// command always satisfies |a_l| <= a_lmax, |a_v| <= a_vmax.
class PolicyNetwork {
public:
    PolicyNetwork(Eigen::MatrixXd w1, Eigen::MatrixXd w2, Eigen::MatrixXd w3, double a_lmax,
                  double a_vmax)
        : w1_(std::move(w1)), w2_(std::move(w2)), w3_(std::move(w3)), a_lmax_(a_lmax), a_vmax_(a_vmax) {
        if (w1_.rows() != 3 || w2_.rows() != w1_.cols() || w3_.rows() != w2_.cols() || w3_.cols() != 2)
            throw std::invalid_argument("PolicyNetwork: inconsistent weight shapes");
    }

    static PolicyNetwork zeros(PolicyLayout layout, double a_lmax, double a_vmax) {
        return PolicyNetwork(Eigen::MatrixXd::Zero(3, layout.q1),
                             Eigen::MatrixXd::Zero(layout.q1, layout.q2),
                             Eigen::MatrixXd::Zero(layout.q2, 2), a_lmax, a_vmax);
    }

    Command forward(const Eigen::Vector3d& observation) const {
        const Eigen::VectorXd h0 = sigmoid(observation);
        const Eigen::VectorXd z1 = w1_.transpose() * h0;
        const Eigen::VectorXd z2 = w2_.transpose() * sigmoid(z1);
        const Eigen::Vector2d raw = w3_.transpose() * z2;
        return {a_lmax_ * std::tanh(raw[0]), a_vmax_ * std::tanh(raw[1])};
    }

    ParamVector encode() const {
        ParamVector v(3 * w1_.cols() + w1_.cols() * w2_.cols() + 2 * w2_.cols());
        Eigen::Index at = 0;
        for (const auto* w : {&w1_, &w2_, &w3_})
            for (Eigen::Index r = 0; r < w->rows(); ++r)
                for (Eigen::Index c = 0; c < w->cols(); ++c)
                    v[at++] = (*w)(r, c);
        return v;
    }

    static PolicyNetwork decode(const ParamVector& params, PolicyLayout layout, double a_lmax,
                                double a_vmax) {
        if (params.size() != layout.param_count())
            throw std::length_error("PolicyNetwork::decode: parameter count mismatch");
        Eigen::MatrixXd w1(3, layout.q1), w2(layout.q1, layout.q2), w3(layout.q2, 2);
        Eigen::Index at = 0;
        for (auto* w : {&w1, &w2, &w3})
            for (Eigen::Index r = 0; r < w->rows(); ++r)
                for (Eigen::Index c = 0; c < w->cols(); ++c)
                    (*w)(r, c) = params[at++];
        return PolicyNetwork(std::move(w1), std::move(w2), std::move(w3), a_lmax, a_vmax);
    }

    const Eigen::MatrixXd& w1() const { return w1_; }
    const Eigen::MatrixXd& w2() const { return w2_; }
    const Eigen::MatrixXd& w3() const { return w3_; }

private:
    template <typename Derived>
    static Eigen::VectorXd sigmoid(const Eigen::MatrixBase<Derived>& x) {
        return (1.0 / (1.0 + (-x.array()).exp())).matrix();
    }

    Eigen::MatrixXd w1_;  // 3 x q1
    Eigen::MatrixXd w2_;  // q1 x q2
    Eigen::MatrixXd w3_;  // q2 x 2
    double a_lmax_;
    double a_vmax_;
};

}  // namespace salvo
