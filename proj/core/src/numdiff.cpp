#include "scorefeat/numdiff.hpp"

#include <stdexcept>

namespace scorefeat {

namespace {

double nested_central(const std::function<double(const Eigen::VectorXd&)>& f,
                      Eigen::VectorXd& x, std::span<const int> idx,
                      const Eigen::VectorXd& steps, std::size_t pos) {
  if (pos == idx.size()) return f(x);
  const int i = idx[pos];
  const double h = steps[i];
  x[i] += h;
  const double fp = nested_central(f, x, idx, steps, pos + 1);
  x[i] -= 2.0 * h;
  const double fm = nested_central(f, x, idx, steps, pos + 1);
  x[i] += h;
  return (fp - fm) / (2.0 * h);
}

}  // namespace

Eigen::VectorXd default_fd_steps(int order, const Eigen::VectorXd& scale) {
  double base = 1e-2;
  if (order == 1) base = 1e-5;
  else if (order == 2) base = 1e-4;
  Eigen::VectorXd steps(scale.size());
  for (Eigen::Index i = 0; i < scale.size(); ++i) {
    steps[i] = base * (scale[i] > 0.0 ? scale[i] : 1.0);
  }
  return steps;
}

SymmetricTensor finite_difference_derivative(
    const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
    int order, const Eigen::VectorXd& steps) {
  if (order < 1 || order > 4) {
    throw std::invalid_argument("finite_difference_derivative: order must be 1..4");
  }
  if (steps.size() != x.size()) {
    throw std::invalid_argument("finite_difference_derivative: step count mismatch");
  }
  const int d = static_cast<int>(x.size());
  std::vector<double> vals(pow_dim(d, order));
  Eigen::VectorXd point = x;
  for_each_sorted_index(order, d, [&](std::span<const int> idx) {
    assign_orbit(vals, idx, d, nested_central(f, point, idx, steps, 0));
  });
  return SymmetricTensor::from_symmetric_unchecked(order, d, std::move(vals));
}

}  // namespace scorefeat
