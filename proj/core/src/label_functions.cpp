#include "scorefeat/label_functions.hpp"

#include <cmath>
#include <stdexcept>

namespace scorefeat {

namespace {

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// derivatives of the logistic in terms of s = σ(z)
double logistic_deriv(double z, int order) {
  const double s = logistic(z);
  const double s1 = s * (1.0 - s);
  switch (order) {
    case 0:
      return s;
    case 1:
      return s1;
    case 2:
      return s1 * (1.0 - 2.0 * s);
    case 3:
      return s1 * (1.0 - 6.0 * s + 6.0 * s * s);
    case 4:
      return s1 * (1.0 - 2.0 * s) * (1.0 - 12.0 * s + 12.0 * s * s);
    default:
      throw std::invalid_argument("logistic derivative order not supported");
  }
}

/// Σ_j c_j u_j^{⊗m} built orbit-canonically.
SymmetricTensor rank_terms(const Eigen::MatrixXd& u, const Eigen::VectorXd& c, int order) {
  const int d = static_cast<int>(u.rows());
  std::vector<double> vals(pow_dim(d, order), 0.0);
  for_each_sorted_index(order, d, [&](std::span<const int> idx) {
    double v = 0.0;
    for (Eigen::Index j = 0; j < u.cols(); ++j) {
      double p = c[j];
      for (int i : idx) p *= u(i, j);
      v += p;
    }
    assign_orbit(vals, idx, d, v);
  });
  return SymmetricTensor::from_symmetric_unchecked(order, d, std::move(vals));
}

}  // namespace

int label_function_dim(const LabelFunction& g) {
  return std::visit(
      [](const auto& f) -> int {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, LinearLabel>) {
          return static_cast<int>(f.w.size());
        } else if constexpr (std::is_same_v<T, QuadraticLabel>) {
          return static_cast<int>(f.a.rows());
        } else {
          return static_cast<int>(f.u.rows());
        }
      },
      g);
}

std::string label_function_name(const LabelFunction& g) {
  return std::visit(
      [](const auto& f) -> std::string {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, LinearLabel>) return "linear";
        else if constexpr (std::is_same_v<T, QuadraticLabel>) return "quadratic";
        else if constexpr (std::is_same_v<T, CubicNetworkLabel>) return "cubic_network";
        else return "sigmoid_network";
      },
      g);
}

double eval(const LabelFunction& g, const Eigen::VectorXd& x) {
  return std::visit(
      [&](const auto& f) -> double {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, LinearLabel>) {
          return f.w.dot(x);
        } else if constexpr (std::is_same_v<T, QuadraticLabel>) {
          return x.dot(f.a * x);
        } else if constexpr (std::is_same_v<T, CubicNetworkLabel>) {
          const Eigen::VectorXd z = f.u.transpose() * x;
          double s = 0.0;
          for (Eigen::Index j = 0; j < z.size(); ++j) s += f.a[j] * z[j] * z[j] * z[j];
          return s;
        } else {
          const Eigen::VectorXd z = f.u.transpose() * x;
          double s = 0.0;
          for (Eigen::Index j = 0; j < z.size(); ++j) s += f.a[j] * logistic(z[j]);
          return s;
        }
      },
      g);
}

bool has_analytic_derivative(const LabelFunction& g, int order) {
  if (order < 1 || order > 4) return false;
  return std::visit(
      [&](const auto& f) -> bool {
        using T = std::decay_t<decltype(f)>;
        (void)f;
        if constexpr (std::is_same_v<T, LinearLabel>) return true;
        else if constexpr (std::is_same_v<T, QuadraticLabel>) return true;
        else if constexpr (std::is_same_v<T, CubicNetworkLabel>) return order <= 3;
        else return true;
      },
      g);
}

SymmetricTensor derivative(const LabelFunction& g, const Eigen::VectorXd& x, int order) {
  if (!has_analytic_derivative(g, order)) {
    throw std::invalid_argument("no registered analytic derivative of order " +
                                std::to_string(order) + " for " + label_function_name(g));
  }
  const int d = label_function_dim(g);
  return std::visit(
      [&](const auto& f) -> SymmetricTensor {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, LinearLabel>) {
          if (order == 1) {
            std::vector<double> vals(f.w.data(), f.w.data() + f.w.size());
            return SymmetricTensor::from_symmetric_unchecked(1, d, std::move(vals));
          }
          return SymmetricTensor(order, d);
        } else if constexpr (std::is_same_v<T, QuadraticLabel>) {
          if (order == 1) {
            const Eigen::VectorXd gvec = (f.a + f.a.transpose()) * x;
            std::vector<double> vals(gvec.data(), gvec.data() + gvec.size());
            return SymmetricTensor::from_symmetric_unchecked(1, d, std::move(vals));
          }
          if (order == 2) {
            const Eigen::MatrixXd h = f.a + f.a.transpose();
            std::vector<double> vals(pow_dim(d, 2));
            for_each_sorted_index(2, d, [&](std::span<const int> idx) {
              assign_orbit(vals, idx, d, h(idx[0], idx[1]));
            });
            return SymmetricTensor::from_symmetric_unchecked(2, d, std::move(vals));
          }
          return SymmetricTensor(order, d);
        } else if constexpr (std::is_same_v<T, CubicNetworkLabel>) {
          // ∇^m Σ a_j z_j³ = Σ a_j · (3!/(3-m)!) z_j^{3-m} · u_j^{⊗m}
          const Eigen::VectorXd z = f.u.transpose() * x;
          Eigen::VectorXd c(z.size());
          for (Eigen::Index j = 0; j < z.size(); ++j) {
            switch (order) {
              case 1: c[j] = 3.0 * f.a[j] * z[j] * z[j]; break;
              case 2: c[j] = 6.0 * f.a[j] * z[j]; break;
              default: c[j] = 6.0 * f.a[j]; break;
            }
          }
          return rank_terms(f.u, c, order);
        } else {
          const Eigen::VectorXd z = f.u.transpose() * x;
          Eigen::VectorXd c(z.size());
          for (Eigen::Index j = 0; j < z.size(); ++j) {
            c[j] = f.a[j] * logistic_deriv(z[j], order);
          }
          return rank_terms(f.u, c, order);
        }
      },
      g);
}

}  // namespace scorefeat
