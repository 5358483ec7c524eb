#include "scorefeat/tensor.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>

namespace scorefeat {

namespace {

void check_order(int order) {
  if (order < 0 || order > 4) {
    throw std::invalid_argument("tensor order must be in 0..4, got " +
                                std::to_string(order));
  }
}

void check_dim(int dim) {
  if (dim < 1) {
    throw std::invalid_argument("tensor dim must be >= 1, got " + std::to_string(dim));
  }
}

}  // namespace

std::size_t pow_dim(int dim, int order) {
  std::size_t n = 1;
  for (int i = 0; i < order; ++i) n *= static_cast<std::size_t>(dim);
  return n;
}

std::size_t flat_index(std::span<const int> idx, int dim) {
  std::size_t f = 0;
  for (int i : idx) f = f * static_cast<std::size_t>(dim) + static_cast<std::size_t>(i);
  return f;
}

void for_each_sorted_index(int order, int dim,
                           const std::function<void(std::span<const int>)>& fn) {
  if (order == 0) {
    fn({});
    return;
  }
  std::vector<int> idx(static_cast<std::size_t>(order), 0);
  while (true) {
    fn(idx);
    // advance to the next non-decreasing tuple
    int pos = order - 1;
    while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == dim - 1) --pos;
    if (pos < 0) break;
    int v = ++idx[static_cast<std::size_t>(pos)];
    for (int t = pos + 1; t < order; ++t) idx[static_cast<std::size_t>(t)] = v;
  }
}

void assign_orbit(std::vector<double>& values, std::span<const int> sorted_idx,
                  int dim, double value) {
  std::vector<int> perm(sorted_idx.begin(), sorted_idx.end());
  do {
    values[flat_index(perm, dim)] = value;
  } while (std::next_permutation(perm.begin(), perm.end()));
}

SymmetricTensor::SymmetricTensor(int order, int dim) {
  check_order(order);
  check_dim(dim);
  order_ = order;
  dim_ = dim;
  values_.assign(pow_dim(dim, order), 0.0);
}

SymmetricTensor SymmetricTensor::from_values(int order, int dim,
                                             std::vector<double> values) {
  check_order(order);
  check_dim(dim);
  if (values.size() != pow_dim(dim, order)) {
    throw std::invalid_argument("value count does not match dim^order");
  }
  // an already-symmetric input is kept bit-for-bit; the orbit average in
  // symmetrize would otherwise perturb it by a rounding step ((3v)/3 != v)
  bool exact = true;
  for_each_sorted_index(order, dim, [&](std::span<const int> idx) {
    if (!exact) return;
    const double v = values[flat_index(idx, dim)];
    std::vector<int> perm(idx.begin(), idx.end());
    do {
      if (values[flat_index(perm, dim)] != v) {
        exact = false;
        return;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
  });
  if (exact) return from_symmetric_unchecked(order, dim, std::move(values));
  return symmetrize(order, dim, values);
}

SymmetricTensor SymmetricTensor::from_symmetric_unchecked(int order, int dim,
                                                          std::vector<double> values) {
  check_order(order);
  check_dim(dim);
  if (values.size() != pow_dim(dim, order)) {
    throw std::invalid_argument("value count does not match dim^order");
  }
  SymmetricTensor t;
  t.order_ = order;
  t.dim_ = dim;
  t.values_ = std::move(values);
  assert(t.is_symmetric());
  return t;
}

double SymmetricTensor::at(std::span<const int> idx) const {
  if (static_cast<int>(idx.size()) != order_) {
    throw std::invalid_argument("index arity does not match tensor order");
  }
  for (int i : idx) {
    if (i < 0 || i >= dim_) throw std::out_of_range("tensor index out of range");
  }
  return values_[flat_index(idx, dim_)];
}

double SymmetricTensor::at(std::initializer_list<int> idx) const {
  return at(std::span<const int>(idx.begin(), idx.size()));
}

double SymmetricTensor::scalar_value() const {
  if (order_ != 0) throw std::logic_error("scalar_value on tensor of order > 0");
  return values_[0];
}

bool SymmetricTensor::is_symmetric() const {
  bool ok = true;
  for_each_sorted_index(order_, dim_, [&](std::span<const int> idx) {
    const double ref = values_[flat_index(idx, dim_)];
    std::vector<int> perm(idx.begin(), idx.end());
    while (std::next_permutation(perm.begin(), perm.end())) {
      const double v = values_[flat_index(perm, dim_)];
      if (!(v == ref) && !(std::isnan(v) && std::isnan(ref))) ok = false;
    }
  });
  return ok;
}

SymmetricTensor sym_outer_power(const Eigen::VectorXd& u, int order) {
  if (order < 1 || order > 4) {
    throw std::invalid_argument("sym_outer_power supports orders 1..4");
  }
  if (u.size() == 0) throw std::invalid_argument("sym_outer_power: empty vector");
  if (!u.allFinite()) throw std::invalid_argument("sym_outer_power: non-finite input");
  const int dim = static_cast<int>(u.size());
  std::vector<double> vals(pow_dim(dim, order));
  for_each_sorted_index(order, dim, [&](std::span<const int> idx) {
    double p = 1.0;
    for (int i : idx) p *= u[i];
    assign_orbit(vals, idx, dim, p);
  });
  return SymmetricTensor::from_symmetric_unchecked(order, dim, std::move(vals));
}

SymmetricTensor symmetrize(int order, int dim, std::span<const double> raw) {
  if (raw.size() != pow_dim(dim, order)) {
    throw std::invalid_argument("symmetrize: value count does not match dim^order");
  }
  std::vector<double> vals(raw.size());
  for_each_sorted_index(order, dim, [&](std::span<const int> idx) {
    std::vector<int> perm(idx.begin(), idx.end());
    double sum = 0.0;
    int count = 0;
    do {
      sum += raw[flat_index(perm, dim)];
      ++count;
    } while (std::next_permutation(perm.begin(), perm.end()));
    assign_orbit(vals, idx, dim, sum / count);
  });
  return SymmetricTensor::from_symmetric_unchecked(order, dim, std::move(vals));
}

SymmetricTensor contract(const SymmetricTensor& t, const Eigen::VectorXd& v, int times) {
  if (times < 0 || times > t.order()) {
    throw std::invalid_argument("contract: times must be in 0..order");
  }
  if (static_cast<int>(v.size()) != t.dim()) {
    throw std::invalid_argument("contract: vector length does not match tensor dim");
  }
  const int dim = t.dim();
  std::vector<double> vals = t.values();
  int order = t.order();
  for (int c = 0; c < times; ++c) {
    const std::size_t rest = pow_dim(dim, order - 1);
    std::vector<double> out(rest, 0.0);
    for (int i = 0; i < dim; ++i) {
      const double vi = v[i];
      const double* row = vals.data() + static_cast<std::size_t>(i) * rest;
      for (std::size_t j = 0; j < rest; ++j) out[j] += vi * row[j];
    }
    vals = std::move(out);
    --order;
  }
  // contracting mode 1 of a symmetric tensor keeps the rest symmetric,
  // and the i-summation order is identical for permuted entries
  return SymmetricTensor::from_symmetric_unchecked(order, dim, std::move(vals));
}

double contract_scalar(const SymmetricTensor& t, const Eigen::VectorXd& v) {
  return contract(t, v, t.order()).scalar_value();
}

SymmetricTensor multilinear_transform(const SymmetricTensor& t, const Eigen::MatrixXd& w) {
  if (w.rows() != t.dim()) {
    throw std::invalid_argument("multilinear_transform: W row count must equal tensor dim");
  }
  const int m = t.order();
  const int d = t.dim();
  const int k = static_cast<int>(w.cols());
  if (k < 1) throw std::invalid_argument("multilinear_transform: W needs >= 1 column");
  if (m == 0) {
    return SymmetricTensor::from_symmetric_unchecked(0, k, t.values());
  }
  // apply W along mode 1, rotate that mode to the back; m rounds restore order
  std::vector<double> vals = t.values();
  std::vector<int> dims(static_cast<std::size_t>(m), d);
  for (int round = 0; round < m; ++round) {
    const int d0 = dims[0];
    std::size_t rest = 1;
    for (std::size_t j = 1; j < dims.size(); ++j) rest *= static_cast<std::size_t>(dims[j]);
    std::vector<double> out(rest * static_cast<std::size_t>(k), 0.0);
    // out[r*k + c] = sum_i vals[i*rest + r] * W(i, c)
    for (int i = 0; i < d0; ++i) {
      const double* row = vals.data() + static_cast<std::size_t>(i) * rest;
      for (std::size_t r = 0; r < rest; ++r) {
        const double x = row[r];
        if (x == 0.0) continue;
        double* orow = out.data() + r * static_cast<std::size_t>(k);
        for (int c = 0; c < k; ++c) orow[c] += x * w(i, c);
      }
    }
    vals = std::move(out);
    for (std::size_t j = 0; j + 1 < dims.size(); ++j) dims[j] = dims[j + 1];
    dims.back() = k;
  }
  // rounding differs across permuted entries; re-impose exact symmetry by
  // copying the canonical (sorted-index) entry over its orbit
  std::vector<double> sym(vals.size());
  for_each_sorted_index(m, k, [&](std::span<const int> idx) {
    assign_orbit(sym, idx, k, vals[flat_index(idx, k)]);
  });
  return SymmetricTensor::from_symmetric_unchecked(m, k, std::move(sym));
}

SymmetricTensor add_scaled(const SymmetricTensor& t1, const SymmetricTensor& t2, double c) {
  if (t1.order() != t2.order() || t1.dim() != t2.dim()) {
    throw std::invalid_argument("add_scaled: shape mismatch");
  }
  std::vector<double> vals(t1.values().size());
  for (std::size_t i = 0; i < vals.size(); ++i) {
    vals[i] = t1.values()[i] + c * t2.values()[i];
  }
  return SymmetricTensor::from_symmetric_unchecked(t1.order(), t1.dim(), std::move(vals));
}

double frobenius_norm(const SymmetricTensor& t) {
  double s = 0.0;
  for (double v : t.values()) s += v * v;
  return std::sqrt(s);
}

Eigen::MatrixXd unfold(const SymmetricTensor& t) {
  if (t.order() < 1) throw std::invalid_argument("unfold: order must be >= 1");
  const int d = t.dim();
  const std::size_t rest = pow_dim(d, t.order() - 1);
  Eigen::MatrixXd m(d, static_cast<Eigen::Index>(rest));
  for (int i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < rest; ++j) {
      m(i, static_cast<Eigen::Index>(j)) = t.values()[static_cast<std::size_t>(i) * rest + j];
    }
  }
  return m;
}

}  // namespace scorefeat
