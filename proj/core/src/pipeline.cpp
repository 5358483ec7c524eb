#include "scorefeat/pipeline.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "scorefeat/io.hpp"
#include "scorefeat/rng.hpp"

namespace scorefeat {

namespace {

using nlohmann::json;

json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Eigen::VectorXd vector_from_json(const json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = j[static_cast<std::size_t>(i)].get<double>();
  return v;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) arr.push_back(m(i, c));
  }
  return arr;
}

Eigen::MatrixXd matrix_from_json(const json& j, Eigen::Index rows, Eigen::Index cols) {
  if (static_cast<Eigen::Index>(j.size()) != rows * cols) {
    throw std::runtime_error("matrix entry count mismatch in JSON document");
  }
  Eigen::MatrixXd m(rows, cols);
  Eigen::Index idx = 0;
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = j[idx++].get<double>();
  }
  return m;
}

json label_function_to_json(const LabelFunction& g) {
  json doc;
  doc["type"] = label_function_name(g);
  std::visit(
      [&](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, LinearLabel>) {
          doc["w"] = vector_to_json(f.w);
        } else if constexpr (std::is_same_v<T, QuadraticLabel>) {
          doc["dim"] = static_cast<int>(f.a.rows());
          doc["a_matrix"] = matrix_to_json(f.a);
        } else {
          doc["a"] = vector_to_json(f.a);
          doc["dim"] = static_cast<int>(f.u.rows());
          doc["components"] = matrix_to_json(f.u);
        }
      },
      g);
  return doc;
}

LabelFunction label_function_from_json(const json& doc) {
  const std::string type = doc.at("type").get<std::string>();
  if (type == "linear") return LinearLabel{vector_from_json(doc.at("w"))};
  if (type == "quadratic") {
    const int d = doc.at("dim").get<int>();
    return QuadraticLabel{matrix_from_json(doc.at("a_matrix"), d, d)};
  }
  const Eigen::VectorXd a = vector_from_json(doc.at("a"));
  const int d = doc.at("dim").get<int>();
  const Eigen::MatrixXd u = matrix_from_json(doc.at("components"), d, a.size());
  if (type == "cubic_network") return CubicNetworkLabel{a, u};
  if (type == "sigmoid_network") return SigmoidNetworkLabel{a, u};
  throw std::runtime_error("unknown label model type: " + type);
}

}  // namespace

PipelineConfig PipelineConfig::from_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config: " + path.string());
  const json doc = json::parse(in);
  PipelineConfig cfg;
  cfg.seed = doc.value("seed", cfg.seed);
  cfg.threads = doc.value("threads", cfg.threads);
  cfg.out_dir = doc.value("out_dir", cfg.out_dir.string());
  cfg.data = doc.value("data", cfg.data.string());
  cfg.unlabeled = doc.value("unlabeled", cfg.unlabeled.string());
  cfg.density_family = doc.value("density_family", cfg.density_family);
  cfg.density_k = doc.value("density_k", cfg.density_k);
  cfg.density_model = doc.value("density_model", cfg.density_model.string());
  cfg.moment_order = doc.value("moment_order", cfg.moment_order);
  cfg.label_transform = doc.value("label_transform", cfg.label_transform);
  cfg.rank = doc.value("rank", cfg.rank);
  cfg.restarts = doc.value("restarts", cfg.restarts);
  cfg.max_iter = doc.value("max_iter", cfg.max_iter);
  cfg.tol = doc.value("tol", cfg.tol);
  cfg.m2_source = doc.value("m2_source", cfg.m2_source);
  cfg.path_mode = doc.value("path_mode", cfg.path_mode);
  cfg.sigma = doc.value("sigma", cfg.sigma);
  cfg.scale_by_weight = doc.value("scale_by_weight", cfg.scale_by_weight);
  cfg.head_ridge = doc.value("head_ridge", cfg.head_ridge);
  cfg.holdout_fraction = doc.value("holdout_fraction", cfg.holdout_fraction);
  return cfg;
}

std::string PipelineConfig::to_json() const {
  json doc;
  doc["seed"] = seed;
  doc["threads"] = threads;
  doc["out_dir"] = out_dir.string();
  doc["data"] = data.string();
  doc["unlabeled"] = unlabeled.string();
  doc["density_family"] = density_family;
  doc["density_k"] = density_k;
  doc["density_model"] = density_model.string();
  doc["moment_order"] = moment_order;
  doc["label_transform"] = label_transform;
  doc["rank"] = rank;
  doc["restarts"] = restarts;
  doc["max_iter"] = max_iter;
  doc["tol"] = tol;
  doc["m2_source"] = m2_source;
  doc["path_mode"] = path_mode;
  doc["sigma"] = sigma;
  doc["scale_by_weight"] = scale_by_weight;
  doc["head_ridge"] = head_ridge;
  doc["holdout_fraction"] = holdout_fraction;
  return doc.dump(2);
}

Eigen::MatrixXd random_orthonormal(int d, int k, std::uint64_t seed) {
  if (k > d) throw std::invalid_argument("random_orthonormal: k must be <= d");
  Rng rng(seed);
  Eigen::MatrixXd a(d, k);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < k; ++j) a(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(d, k);
  const Eigen::MatrixXd r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  for (int j = 0; j < k; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

SyntheticSpec SyntheticSpec::from_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read synthetic spec: " + path.string());
  const json doc = json::parse(in);
  SyntheticSpec spec;
  spec.seed = doc.value("seed", spec.seed);
  spec.n = doc.at("n").get<int>();
  spec.noise = doc.value("noise", 0.0);
  spec.input_model = density_from_json(doc.at("input_model").dump());
  spec.label_model = label_function_from_json(doc.at("label_model"));
  return spec;
}

LabeledDataset generate_synthetic(const SyntheticSpec& spec) {
  if (spec.noise < 0.0) throw std::invalid_argument("generate_synthetic: negative noise");
  if (label_function_dim(spec.label_model) != model_dim(spec.input_model)) {
    throw std::invalid_argument("generate_synthetic: label/input dimension mismatch");
  }
  LabeledDataset data;
  data.inputs = sample(spec.input_model, spec.n, mix_seed(spec.seed, 0x5a01));
  data.labels.resize(spec.n, 1);
  Rng noise_rng(mix_seed(spec.seed, 0x5a02));
  for (int i = 0; i < spec.n; ++i) {
    double y = eval(spec.label_model, data.inputs.row(i).transpose());
    if (spec.noise > 0.0) y += spec.noise * noise_rng.normal();
    data.labels(i, 0) = y;
  }
  return data;
}

void write_synthetic(const SyntheticSpec& spec, const std::filesystem::path& csv_path,
                     const std::filesystem::path& truth_path) {
  const LabeledDataset data = generate_synthetic(spec);
  save_dataset(data, csv_path);
  json truth;
  truth["label_model"] = label_function_to_json(spec.label_model);
  truth["input_model"] = json::parse(density_to_json(spec.input_model));
  truth["noise"] = spec.noise;
  truth["n"] = spec.n;
  truth["seed"] = spec.seed;
  std::ofstream out(truth_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write truth file: " + truth_path.string());
  out << truth.dump(2) << "\n";
}

namespace {

class StageTimer {
 public:
  explicit StageTimer(json& timings, std::string name)
      : timings_(timings), name_(std::move(name)),
        start_(std::chrono::steady_clock::now()) {}
  ~StageTimer() {
    const auto elapsed = std::chrono::steady_clock::now() - start_;
    timings_[name_] =
        std::chrono::duration_cast<std::chrono::duration<double>>(elapsed).count();
  }

 private:
  json& timings_;
  std::string name_;
  std::chrono::steady_clock::time_point start_;
};

/// Writes through a .partial path, renamed on stage completion.
class ArtifactWriter {
 public:
  explicit ArtifactWriter(std::filesystem::path path) : path_(std::move(path)) {}
  const std::filesystem::path& partial() const& {
    partial_path_ = path_;
    partial_path_ += ".partial";
    return partial_path_;
  }
  void commit() { std::filesystem::rename(partial(), path_); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  mutable std::filesystem::path partial_path_;
};

}  // namespace

RunReport run_pipeline(const PipelineConfig& config) {
  namespace fs = std::filesystem;
  fs::create_directories(config.out_dir);
  json report;
  report["version"] = "0.1.0";
  report["seed"] = config.seed;
  report["config"] = json::parse(config.to_json());
  json& timings = report["timings"];
  json& artifacts = report["artifacts"];

  // -- ingest ---------------------------------------------------------------
  LabeledDataset data;
  {
    StageTimer timer(timings, "ingest");
    try {
      data = load_dataset(config.data);
    } catch (const std::exception& e) {
      throw PipelineError("ingest", e.what());
    }
  }

  // -- density --------------------------------------------------------------
  DensityModel model = GaussianModel(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1));
  {
    StageTimer timer(timings, "density");
    try {
      Eigen::MatrixXd train = data.inputs;
      if (!config.unlabeled.empty()) train = load_inputs(config.unlabeled);
      if (!config.density_model.empty()) {
        model = load_density(config.density_model);
      } else if (config.density_family == "gaussian") {
        model = fit_gaussian(train);
      } else if (config.density_family == "gmm") {
        FitReport fit;
        model = fit_gmm(train, config.density_k, EmConfig{},
                        mix_seed(config.seed, 0xd0), &fit);
        report["density"]["converged"] = fit.converged;
        report["density"]["em_iterations"] = fit.iterations;
        report["density"]["log_likelihood"] = fit.log_likelihood;
      } else {
        throw std::runtime_error("unknown density family: " + config.density_family);
      }
      report["density"]["family"] = config.density_family;
      ArtifactWriter out(config.out_dir / "model.json");
      save_density(model, out.partial());
      out.commit();
      artifacts["density"] = out.path().string();
    } catch (const PipelineError&) {
      throw;
    } catch (const std::exception& e) {
      throw PipelineError("density", e.what());
    }
  }

  // -- cross moments --------------------------------------------------------
  SymmetricTensor moment;
  std::optional<SymmetricTensor> m2;
  {
    StageTimer timer(timings, "cross-moment");
    try {
      const LabelTransform transform = parse_label_transform(config.label_transform);
      CrossMomentReport cm =
          cross_moment(data, model, config.moment_order, transform, config.threads);
      moment = cm.moments.front();
      ArtifactWriter out(config.out_dir / "moment.tensor");
      save_tensor(moment, out.partial());
      out.commit();
      artifacts["moment"] = out.path().string();
      for (std::size_t c = 1; c < cm.moments.size(); ++c) {
        ArtifactWriter extra(config.out_dir / ("moment_c" + std::to_string(c) + ".tensor"));
        save_tensor(cm.moments[c], extra.partial());
        extra.commit();
      }
      report["moment"]["order"] = config.moment_order;
      report["moment"]["sample_count"] = cm.sample_count;
      report["moment"]["standard_error"] = cm.standard_error_estimate;

      if (config.m2_source == "identity" || config.m2_source == "square" ||
          config.m2_source == "centered") {
        CrossMomentReport cm2 = cross_moment(
            data, model, 2, parse_label_transform(config.m2_source), config.threads);
        m2 = cm2.moments.front();
      } else if (config.m2_source != "none") {
        m2 = load_tensor(config.m2_source);
      }
      if (m2) {
        ArtifactWriter out2(config.out_dir / "moment2.tensor");
        save_tensor(*m2, out2.partial());
        out2.commit();
        artifacts["moment2"] = out2.path().string();
        report["moment"]["m2_source"] = config.m2_source;
      }
    } catch (const std::exception& e) {
      throw PipelineError("cross-moment", e.what());
    }
  }

  // -- decomposition --------------------------------------------------------
  DecompositionReport decomp;
  {
    StageTimer timer(timings, "decompose");
    try {
      PowerConfig pc;
      pc.max_iter = config.max_iter;
      pc.tol = config.tol;
      pc.restarts = config.restarts;
      pc.seed = mix_seed(config.seed, 0xdec0);
      if (config.moment_order == 2) {
        decomp = decompose_matrix(moment, config.rank);
      } else {
        const SymmetricTensor* m2_ptr = m2 ? &*m2 : nullptr;
        if (config.path_mode == "undercomplete") {
          if (!m2_ptr) throw std::runtime_error("undercomplete path requires an m2 source");
          const WhitenResult wr = whiten(*m2_ptr, config.rank);  // fails loudly if k > d
          (void)wr;
          decomp = tensor_power_method(moment, config.rank, pc, m2_ptr);
        } else if (config.path_mode == "overcomplete") {
          decomp = tensor_power_method(moment, config.rank, pc, nullptr);
        } else {
          decomp = tensor_power_method(moment, config.rank, pc, m2_ptr);
        }
      }
      ArtifactWriter out(config.out_dir / "cp.json");
      save_cp(decomp.cp, out.partial());
      out.commit();
      artifacts["cp"] = out.path().string();
      report["decomposition"]["residual"] = decomp.residual;
      report["decomposition"]["iterations"] = decomp.iterations_used;
      report["decomposition"]["restarts"] = decomp.restarts_used;
      report["decomposition"]["converged"] = decomp.converged;
    } catch (const std::exception& e) {
      throw PipelineError("decompose", e.what());
    }
  }

  // -- features -------------------------------------------------------------
  Eigen::MatrixXd features;
  {
    StageTimer timer(timings, "featurize");
    try {
      FeatureMap map;
      map.components = decomp.cp.components;
      map.nonlinearity = parse_nonlinearity(config.sigma);
      if (config.scale_by_weight) map.scales = decomp.cp.weights;
      features = featurize(map, data.inputs);
      ArtifactWriter out(config.out_dir / "features.csv");
      save_features(features, &data.labels, out.partial());
      out.commit();
      artifacts["features"] = out.path().string();
    } catch (const std::exception& e) {
      throw PipelineError("featurize", e.what());
    }
  }

  // -- ridge head -----------------------------------------------------------
  double head_r2 = 0.0;
  if (config.head_ridge >= 0.0) {
    StageTimer timer(timings, "head");
    try {
      const Eigen::Index n = features.rows();
      std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
      for (Eigen::Index i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
      Rng rng(mix_seed(config.seed, 0x4ead));
      for (Eigen::Index i = n - 1; i > 0; --i) {
        const int j = rng.index(static_cast<int>(i) + 1);
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
      }
      const Eigen::Index n_hold =
          static_cast<Eigen::Index>(config.holdout_fraction * static_cast<double>(n));
      const Eigen::Index n_train = n - n_hold;
      if (n_train < 1) throw std::runtime_error("holdout fraction leaves no training rows");
      Eigen::MatrixXd f_train(n_train, features.cols()), f_hold(n_hold, features.cols());
      Eigen::MatrixXd y_train(n_train, data.labels.cols()), y_hold(n_hold, data.labels.cols());
      for (Eigen::Index i = 0; i < n_train; ++i) {
        f_train.row(i) = features.row(idx[static_cast<std::size_t>(i)]);
        y_train.row(i) = data.labels.row(idx[static_cast<std::size_t>(i)]);
      }
      for (Eigen::Index i = 0; i < n_hold; ++i) {
        f_hold.row(i) = features.row(idx[static_cast<std::size_t>(n_train + i)]);
        y_hold.row(i) = data.labels.row(idx[static_cast<std::size_t>(n_train + i)]);
      }
      const RidgeHead head = fit_ridge_head(f_train, y_train, config.head_ridge);
      report["head"]["ridge"] = config.head_ridge;
      report["head"]["r2_train"] = r_squared(predict(head, f_train), y_train);
      if (n_hold > 0) {
        head_r2 = r_squared(predict(head, f_hold), y_hold);
        report["head"]["r2_holdout"] = head_r2;
      } else {
        head_r2 = report["head"]["r2_train"].get<double>();
      }
    } catch (const std::exception& e) {
      throw PipelineError("head", e.what());
    }
  }

  RunReport result;
  result.decomposition_residual = decomp.residual;
  result.head_r2 = head_r2;
  result.cp = decomp.cp;
  result.json = report.dump(2) + "\n";
  {
    ArtifactWriter out(config.out_dir / "report.json");
    std::ofstream rp(out.partial(), std::ios::binary);
    rp << result.json;
    rp.close();
    out.commit();
  }
  return result;
}

}  // namespace scorefeat
