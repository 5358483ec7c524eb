#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "scorefeat/decomposition.hpp"
#include "scorefeat/density.hpp"
#include "scorefeat/features.hpp"
#include "scorefeat/label_functions.hpp"
#include "scorefeat/moments.hpp"

namespace scorefeat {

struct PipelineConfig {
  std::uint64_t seed = 0;
  int threads = 1;
  std::filesystem::path out_dir = "run_out";
  std::filesystem::path data;       // labeled CSV
  std::filesystem::path unlabeled;  // optional CSV for density fitting

  std::string density_family = "gaussian";  // gaussian | gmm
  int density_k = 1;
  std::filesystem::path density_model;  // load instead of fit when set

  int moment_order = 3;
  std::string label_transform = "identity";

  int rank = 1;
  int restarts = 30;
  int max_iter = 200;
  double tol = 1e-10;
  std::string m2_source = "identity";  // identity | square | none | <tensor path>
  std::string path_mode = "auto";      // auto | undercomplete | overcomplete

  std::string sigma = "identity";
  bool scale_by_weight = false;

  double head_ridge = -1.0;  // < 0 disables the ridge head
  double holdout_fraction = 0.2;

  static PipelineConfig from_json_file(const std::filesystem::path& path);
  std::string to_json() const;
};

struct PipelineError : std::runtime_error {
  PipelineError(std::string stage_name, const std::string& message)
      : std::runtime_error("stage " + stage_name + ": " + message),
        stage(std::move(stage_name)) {}
  std::string stage;
};

struct RunReport {
  std::string json;  // full machine-readable report
  double decomposition_residual = 0.0;
  double head_r2 = 0.0;
  CpModel cp;
};

/// Fig-style end-to-end batch: density → cross-moments (order 2 and m) →
/// decomposition → features → optional ridge head, all artifacts persisted
/// under config.out_dir plus report.json (timing fields quarantined under
/// "timings").
RunReport run_pipeline(const PipelineConfig& config);

// -- synthetic data ---------------------------------------------------------

struct SyntheticSpec {
  DensityModel input_model = GaussianModel(Eigen::VectorXd::Zero(1),
                                           Eigen::MatrixXd::Identity(1, 1));
  LabelFunction label_model = LinearLabel{Eigen::VectorXd::Ones(1)};
  double noise = 0.0;
  int n = 0;
  std::uint64_t seed = 0;

  static SyntheticSpec from_json_file(const std::filesystem::path& path);
};

LabeledDataset generate_synthetic(const SyntheticSpec& spec);

/// Writes data CSV plus a ground-truth JSON for downstream scoring.
void write_synthetic(const SyntheticSpec& spec, const std::filesystem::path& csv_path,
                     const std::filesystem::path& truth_path);

/// Random orthonormal d×k frame, deterministic in the seed.
Eigen::MatrixXd random_orthonormal(int d, int k, std::uint64_t seed);

// -- verification -----------------------------------------------------------

struct CheckResult {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double threshold = 0.0;
  std::string detail;
};

/// Registered suites: score-recursion, stein-identity, stein-decay,
/// cp-recovery, transfer, pipeline, all.
std::vector<CheckResult> run_verify_suite(const std::string& suite, std::uint64_t seed,
                                          const std::filesystem::path& work_dir);

bool is_known_suite(const std::string& suite);

}  // namespace scorefeat
