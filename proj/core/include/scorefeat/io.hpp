#pragma once

#include <filesystem>
#include <string>

#include "scorefeat/decomposition.hpp"
#include "scorefeat/density.hpp"
#include "scorefeat/moments.hpp"
#include "scorefeat/tensor.hpp"

namespace scorefeat {

/// Text tensor format: line 1 `order=<m> dim=<d>`, then whitespace-separated
/// row-major values at 17 significant digits.
void save_tensor(const SymmetricTensor& t, const std::filesystem::path& path);
SymmetricTensor load_tensor(const std::filesystem::path& path);

/// JSON model document {type, means, covariances (row-major), weights}.
void save_density(const DensityModel& model, const std::filesystem::path& path);
DensityModel load_density(const std::filesystem::path& path);
std::string density_to_json(const DensityModel& model);
DensityModel density_from_json(const std::string& text);

/// JSON CP document {order, dim, rank, weights, components (row-major)}.
void save_cp(const CpModel& cp, const std::filesystem::path& path);
CpModel load_cp(const std::filesystem::path& path);

/// Dataset CSV: header row, inputs x_0..x_{d-1}, labels y_0..y_{p-1}.
void save_dataset(const LabeledDataset& data, const std::filesystem::path& path);
LabeledDataset load_dataset(const std::filesystem::path& path);

/// Inputs-only CSV (x_* columns; y_* columns ignored when present).
Eigen::MatrixXd load_inputs(const std::filesystem::path& path);

/// Feature CSV: f_0..f_{k-1} plus y_* passthrough when labels are given.
void save_features(const Eigen::MatrixXd& features, const Eigen::MatrixXd* labels,
                   const std::filesystem::path& path);

std::string format_double(double v);  // 17 significant digits

}  // namespace scorefeat
