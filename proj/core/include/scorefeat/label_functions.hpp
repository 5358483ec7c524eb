#pragma once

#include <Eigen/Dense>
#include <string>
#include <variant>

#include "scorefeat/tensor.hpp"

namespace scorefeat {

/// Synthetic label models G(x) with registered analytic derivatives; used
/// both as data generators and as derivative oracles.

struct LinearLabel {
  Eigen::VectorXd w;  // G(x) = wᵀx
};

struct QuadraticLabel {
  Eigen::MatrixXd a;  // G(x) = xᵀAx
};

struct CubicNetworkLabel {
  Eigen::VectorXd a;  // G(x) = Σ_j a_j (u_jᵀx)³
  Eigen::MatrixXd u;  // columns u_j
};

struct SigmoidNetworkLabel {
  Eigen::VectorXd a;  // G(x) = Σ_j a_j σ(u_jᵀx), logistic σ
  Eigen::MatrixXd u;
};

using LabelFunction =
    std::variant<LinearLabel, QuadraticLabel, CubicNetworkLabel, SigmoidNetworkLabel>;

int label_function_dim(const LabelFunction& g);
std::string label_function_name(const LabelFunction& g);

double eval(const LabelFunction& g, const Eigen::VectorXd& x);

/// Analytic ∇^{(m)}G(x), m in 1..4. Throws when the derivative is not
/// registered for the given family/order.
SymmetricTensor derivative(const LabelFunction& g, const Eigen::VectorXd& x, int order);

bool has_analytic_derivative(const LabelFunction& g, int order);

}  // namespace scorefeat
