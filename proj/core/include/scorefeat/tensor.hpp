#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

namespace scorefeat {

/// Dense symmetric tensor of order m (0..4) over R^d, row-major storage of
/// all d^m entries. Entries related by an index permutation are equal
/// bit-exactly; every construction path goes through a canonical-orbit fill
/// so the invariant never depends on floating-point associativity.
class SymmetricTensor {
 public:
  SymmetricTensor() = default;
  SymmetricTensor(int order, int dim);  // zero tensor

  /// Builds from raw values, symmetrizing (orbit average) if needed.
  static SymmetricTensor from_values(int order, int dim, std::vector<double> values);

  /// Builds from values already known to be bit-exactly symmetric.
  /// Verified only in debug builds.
  static SymmetricTensor from_symmetric_unchecked(int order, int dim,
                                                  std::vector<double> values);

  int order() const { return order_; }
  int dim() const { return dim_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& mutable_values() { return values_; }

  double at(std::span<const int> idx) const;
  double at(std::initializer_list<int> idx) const;

  /// Scalar content of an order-0 tensor.
  double scalar_value() const;

  /// Bit-exact permutation symmetry check.
  bool is_symmetric() const;

 private:
  int order_ = 0;
  int dim_ = 0;
  std::vector<double> values_;
};

// -- index helpers ----------------------------------------------------------

std::size_t pow_dim(int dim, int order);
std::size_t flat_index(std::span<const int> idx, int dim);

/// Visits every non-decreasing multi-index of the given order, one
/// representative per symmetry orbit.
void for_each_sorted_index(int order, int dim,
                           const std::function<void(std::span<const int>)>& fn);

/// Writes `value` at every permutation of `sorted_idx`.
void assign_orbit(std::vector<double>& values, std::span<const int> sorted_idx,
                  int dim, double value);

// -- operations -------------------------------------------------------------

/// u^{⊗m}: entry (i_1..i_m) = ∏_t u[i_t].
SymmetricTensor sym_outer_power(const Eigen::VectorXd& u, int order);

/// Average of a dense array over all index permutations.
SymmetricTensor symmetrize(int order, int dim, std::span<const double> raw);

/// Multilinear form with v in `times` slots; order drops by `times`.
SymmetricTensor contract(const SymmetricTensor& t, const Eigen::VectorXd& v, int times);

/// Full contraction T(v,...,v).
double contract_scalar(const SymmetricTensor& t, const Eigen::VectorXd& v);

/// Entry (j_1..j_m) = Σ T[i_1..i_m]·∏ W(i_t, j_t); maps u^{⊗m} to (Wᵀu)^{⊗m}.
SymmetricTensor multilinear_transform(const SymmetricTensor& t, const Eigen::MatrixXd& w);

/// t1 + c·t2.
SymmetricTensor add_scaled(const SymmetricTensor& t1, const SymmetricTensor& t2, double c);

double frobenius_norm(const SymmetricTensor& t);

/// Mode-1 unfolding, d × d^{m-1}, remaining indices row-major.
Eigen::MatrixXd unfold(const SymmetricTensor& t);

}  // namespace scorefeat
