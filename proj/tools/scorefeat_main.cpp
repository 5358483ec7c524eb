#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "scorefeat/decomposition.hpp"
#include "scorefeat/density.hpp"
#include "scorefeat/features.hpp"
#include "scorefeat/io.hpp"
#include "scorefeat/moments.hpp"
#include "scorefeat/pipeline.hpp"
#include "scorefeat/rng.hpp"
#include "scorefeat/transfer.hpp"

namespace fs = std::filesystem;
using namespace scorefeat;

namespace {

int cmd_fit_density(const std::string& input, const std::string& family, int k,
                    std::uint64_t seed, const std::string& out) {
  const Eigen::MatrixXd data = load_inputs(input);
  DensityModel model = GaussianModel(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1));
  if (family == "gaussian") {
    model = fit_gaussian(data);
  } else if (family == "gmm") {
    FitReport report;
    model = fit_gmm(data, k, EmConfig{}, seed, &report);
    if (!report.converged) {
      std::cerr << "warning: EM did not converge within the iteration budget\n";
    }
    std::cerr << "log-likelihood: " << report.log_likelihood << "\n";
  } else {
    std::cerr << "unknown model family: " << family << "\n";
    return 2;
  }
  save_density(model, out);
  std::cout << "wrote " << out << "\n";
  return 0;
}

int cmd_score(const std::string& density, const std::string& data_path, int order,
              int row, const std::string& out) {
  const DensityModel model = load_density(density);
  const Eigen::MatrixXd inputs = load_inputs(data_path);
  SymmetricTensor result;
  if (row >= 0) {
    if (row >= inputs.rows()) {
      std::cerr << "row " << row << " out of range (" << inputs.rows() << " rows)\n";
      return 2;
    }
    result = score_tensor(model, inputs.row(row).transpose(), order);
  } else {
    // average score over all rows; ≈ 0 when the model fits the data
    SymmetricTensor acc(order, static_cast<int>(inputs.cols()));
    for (Eigen::Index i = 0; i < inputs.rows(); ++i) {
      acc = add_scaled(acc, score_tensor(model, inputs.row(i).transpose(), order), 1.0);
    }
    std::vector<double> vals = acc.values();
    for (double& v : vals) v /= static_cast<double>(inputs.rows());
    result = SymmetricTensor::from_symmetric_unchecked(order, static_cast<int>(inputs.cols()),
                                                       std::move(vals));
  }
  save_tensor(result, out);
  std::cout << "wrote " << out << " (frobenius norm " << frobenius_norm(result) << ")\n";
  return 0;
}

int cmd_cross_moment(const std::string& data_path, const std::string& density, int order,
                     const std::string& transform, int threads, const std::string& out) {
  const LabeledDataset data = load_dataset(data_path);
  const DensityModel model = load_density(density);
  const CrossMomentReport report =
      cross_moment(data, model, order, parse_label_transform(transform), threads);
  save_tensor(report.moments.front(), out);
  for (std::size_t c = 1; c < report.moments.size(); ++c) {
    const fs::path extra = fs::path(out).replace_extension("c" + std::to_string(c) + ".tensor");
    save_tensor(report.moments[c], extra);
    std::cout << "wrote " << extra.string() << "\n";
  }
  std::cout << "wrote " << out << " (N=" << report.sample_count << ", stderr~"
            << report.standard_error_estimate.front() << ")\n";
  return 0;
}

int cmd_decompose(const std::string& tensor_path, const std::string& m2_path, int rank,
                  int restarts, std::uint64_t seed, const std::string& out) {
  const SymmetricTensor t = load_tensor(tensor_path);
  std::optional<SymmetricTensor> m2;
  if (!m2_path.empty()) m2 = load_tensor(m2_path);
  PowerConfig config;
  config.seed = seed;
  if (restarts > 0) config.restarts = restarts;
  DecompositionReport report = t.order() == 2
                                   ? decompose_matrix(t, rank)
                                   : tensor_power_method(t, rank, config, m2 ? &*m2 : nullptr);
  save_cp(report.cp, out);
  std::cout << "wrote " << out << " (residual " << report.residual << ", "
            << report.iterations_used << " iterations)\n";
  return report.converged ? 0 : 1;
}

int cmd_featurize(const std::string& data_path, const std::string& cp_path,
                  const std::string& sigma, bool scale_by_weight, const std::string& out) {
  const CpModel cp = load_cp(cp_path);
  FeatureMap map;
  map.components = cp.components;
  map.nonlinearity = parse_nonlinearity(sigma);
  if (scale_by_weight) map.scales = cp.weights;

  Eigen::MatrixXd inputs;
  std::optional<LabeledDataset> labeled;
  try {
    labeled = load_dataset(data_path);
    inputs = labeled->inputs;
  } catch (const std::exception&) {
    inputs = load_inputs(data_path);
  }
  const Eigen::MatrixXd features = featurize(map, inputs);
  save_features(features, labeled ? &labeled->labels : nullptr, out);
  std::cout << "wrote " << out << "\n";
  return 0;
}

int cmd_transfer(const std::string& density, const std::string& data_path,
                 const std::string& out) {
  const DensityModel model = load_density(density);
  const auto* mix = std::get_if<GaussianMixtureModel>(&model);
  if (!mix) {
    std::cerr << "transfer requires a mixture model\n";
    return 2;
  }
  const Eigen::MatrixXd inputs = load_inputs(data_path);
  const TransferReport report = refit_mixture_weights(*mix, inputs);
  save_density(report.model, out);
  std::cout << "wrote " << out << " (weight shift " << report.weight_shift
            << ", log-likelihood gain " << report.loglik_gain << ")\n";
  if (report.floored_component) {
    std::cerr << "warning: a component hit the 1e-12 weight floor\n";
  }
  return 0;
}

int cmd_synth(const std::string& spec_path, const std::string& out,
              const std::string& truth) {
  const SyntheticSpec spec = SyntheticSpec::from_json_file(spec_path);
  write_synthetic(spec, out, truth.empty() ? out + ".truth.json" : truth);
  std::cout << "wrote " << out << "\n";
  return 0;
}

int cmd_run(const std::string& config_path, std::uint64_t seed, bool seed_given,
            int threads) {
  PipelineConfig config = PipelineConfig::from_json_file(config_path);
  if (seed_given) config.seed = seed;
  if (threads > 0) config.threads = threads;
  const RunReport report = run_pipeline(config);
  std::cout << report.json;
  return 0;
}

int cmd_verify(const std::string& suite, std::uint64_t seed, const std::string& out_dir) {
  if (!is_known_suite(suite)) {
    std::cerr << "unknown verify suite: " << suite
              << " (known: score-recursion stein-identity stein-decay cp-recovery "
                 "transfer pipeline all)\n";
    return 2;
  }
  fs::path work = out_dir.empty()
                      ? fs::temp_directory_path() / ("scorefeat-verify-" + std::to_string(seed))
                      : fs::path(out_dir);
  fs::create_directories(work);
  const auto results = run_verify_suite(suite, seed, work);
  bool all_pass = true;
  for (const auto& r : results) {
    std::printf("%-34s %s  measured=%.6g threshold=%.6g%s%s\n", r.name.c_str(),
                r.passed ? "PASS" : "FAIL", r.measured, r.threshold,
                r.detail.empty() ? "" : "  ", r.detail.c_str());
    all_pass = all_pass && r.passed;
  }
  return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"score-function feature extraction pipeline"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  int threads = 1;
  app.add_option("--seed", seed, "global random seed")->capture_default_str();
  app.add_option("--threads", threads, "worker threads (0 = all cores)")
      ->capture_default_str();

  // fit-density
  auto* fit = app.add_subcommand("fit-density", "fit a density model to unlabeled data");
  std::string fit_input, fit_model = "gaussian", fit_out = "model.json";
  int fit_k = 1;
  fit->add_option("--input", fit_input, "input CSV (x_* columns)")->required();
  fit->add_option("--model", fit_model, "gaussian | gmm")->capture_default_str();
  fit->add_option("--k", fit_k, "mixture component count")->capture_default_str();
  fit->add_option("--out", fit_out, "output model path")->capture_default_str();

  // score
  auto* score = app.add_subcommand("score", "evaluate score tensors of a model");
  std::string score_density, score_data, score_out = "score.tensor";
  int score_order = 1, score_row = -1;
  score->add_option("--density", score_density, "model JSON")->required();
  score->add_option("--data", score_data, "input CSV")->required();
  score->add_option("--order", score_order, "score order m (1..4)")->capture_default_str();
  score->add_option("--row", score_row, "single row index (default: average over rows)");
  score->add_option("--out", score_out, "output tensor path")->capture_default_str();

  // cross-moment
  auto* cm = app.add_subcommand("cross-moment", "form E[y·S_m(x)] from labeled data");
  std::string cm_data, cm_density, cm_transform = "identity", cm_out = "moment.tensor";
  int cm_order = 3;
  cm->add_option("--data", cm_data, "labeled CSV")->required();
  cm->add_option("--density", cm_density, "model JSON")->required();
  cm->add_option("--order", cm_order, "moment order m (1..4)")->capture_default_str();
  cm->add_option("--transform", cm_transform, "identity | square | centered")
      ->capture_default_str();
  cm->add_option("--out", cm_out, "output tensor path")->capture_default_str();

  // decompose
  auto* dec = app.add_subcommand("decompose", "symmetric CP decomposition of a moment");
  std::string dec_tensor, dec_m2, dec_out = "cp.json";
  int dec_rank = 1, dec_restarts = 0;
  dec->add_option("--tensor", dec_tensor, "moment tensor path")->required();
  dec->add_option("--m2", dec_m2, "order-2 moment for whitening (optional)");
  dec->add_option("--rank", dec_rank, "number of components k")->required();
  dec->add_option("--restarts", dec_restarts, "power-iteration restarts");
  dec->add_option("--out", dec_out, "output CP model path")->capture_default_str();

  // featurize
  auto* feat = app.add_subcommand("featurize", "apply σ(u_jᵀx) feature maps");
  std::string feat_data, feat_cp, feat_sigma = "identity", feat_out = "features.csv";
  bool feat_scale = false;
  feat->add_option("--data", feat_data, "input CSV")->required();
  feat->add_option("--cp", feat_cp, "CP model JSON")->required();
  feat->add_option("--sigma", feat_sigma, "identity | sigmoid | tanh | relu | cube")
      ->capture_default_str();
  feat->add_flag("--scale-by-weight", feat_scale, "multiply features by λ_j");
  feat->add_option("--out", feat_out, "output CSV")->capture_default_str();

  // transfer
  auto* tr = app.add_subcommand("transfer", "re-estimate mixture weights on new inputs");
  std::string tr_density, tr_data, tr_out = "model_transferred.json";
  tr->add_option("--density", tr_density, "source mixture JSON")->required();
  tr->add_option("--data", tr_data, "new input CSV")->required();
  tr->add_option("--out", tr_out, "output model path")->capture_default_str();

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic labeled dataset");
  std::string synth_spec, synth_out = "data.csv", synth_truth;
  synth->add_option("--spec", synth_spec, "synthetic spec JSON")->required();
  synth->add_option("--out", synth_out, "output CSV")->capture_default_str();
  synth->add_option("--truth", synth_truth, "ground-truth JSON path");

  // run
  auto* run = app.add_subcommand("run", "run the full pipeline from a config");
  std::string run_config;
  run->add_option("--config", run_config, "pipeline config JSON")->required();

  // verify
  auto* verify = app.add_subcommand("verify", "run a verification suite");
  std::string verify_suite, verify_out;
  verify->add_option("--suite", verify_suite, "suite name")->required();
  verify->add_option("--out", verify_out, "scratch directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*fit) return cmd_fit_density(fit_input, fit_model, fit_k, seed, fit_out);
    if (*score) return cmd_score(score_density, score_data, score_order, score_row, score_out);
    if (*cm) return cmd_cross_moment(cm_data, cm_density, cm_order, cm_transform, threads, cm_out);
    if (*dec) return cmd_decompose(dec_tensor, dec_m2, dec_rank, dec_restarts, seed, dec_out);
    if (*feat) return cmd_featurize(feat_data, feat_cp, feat_sigma, feat_scale, feat_out);
    if (*tr) return cmd_transfer(tr_density, tr_data, tr_out);
    if (*synth) return cmd_synth(synth_spec, synth_out, synth_truth);
    if (*run) return cmd_run(run_config, seed, app.count("--seed") > 0, threads);
    if (*verify) return cmd_verify(verify_suite, seed, verify_out);
  } catch (const PipelineError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
