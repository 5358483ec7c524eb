#pragma once

#include <Eigen/Dense>
#include <functional>

#include "scorefeat/tensor.hpp"

namespace scorefeat {

/// Nested central differences for the order-m derivative tensor of a scalar
/// function; entry (i_1..i_m) applies the central difference operator once
/// per index with per-coordinate steps. Output is symmetrized.
SymmetricTensor finite_difference_derivative(
    const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
    int order, const Eigen::VectorXd& steps);

/// Default step sizes by derivative order (1e-5 / 1e-4 / 1e-2, orders 1/2/3+),
/// scaled per coordinate by `scale`.
Eigen::VectorXd default_fd_steps(int order, const Eigen::VectorXd& scale);

}  // namespace scorefeat
