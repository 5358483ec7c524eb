#include "scorefeat/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace scorefeat {

namespace {

using nlohmann::json;

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path.string());
  return in;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) rows.push_back(m(i, j));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, Eigen::Index rows, Eigen::Index cols) {
  if (static_cast<Eigen::Index>(j.size()) != rows * cols) {
    throw std::runtime_error("matrix entry count mismatch in JSON document");
  }
  Eigen::MatrixXd m(rows, cols);
  Eigen::Index idx = 0;
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index jj = 0; jj < cols; ++jj) m(i, jj) = j[idx++].get<double>();
  }
  return m;
}

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

}  // namespace

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

void save_tensor(const SymmetricTensor& t, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "order=" << t.order() << " dim=" << t.dim() << "\n";
  const std::size_t per_line = 16;
  for (std::size_t i = 0; i < t.values().size(); ++i) {
    out << format_double(t.values()[i]);
    out << ((i % per_line == per_line - 1 || i + 1 == t.values().size()) ? "\n" : " ");
  }
}

SymmetricTensor load_tensor(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string header;
  if (!std::getline(in, header)) throw std::runtime_error("empty tensor file: " + path.string());
  int order = -1, dim = -1;
  if (std::sscanf(header.c_str(), "order=%d dim=%d", &order, &dim) != 2) {
    throw std::runtime_error("bad tensor header in " + path.string());
  }
  const std::size_t count = pow_dim(dim, order);
  std::vector<double> vals;
  vals.reserve(count);
  // istream double extraction is not correctly rounded on all platforms;
  // from_chars is, which keeps the text format a bit-exact round trip
  std::string tok;
  while (in >> tok) {
    double v = 0.0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size()) {
      throw std::runtime_error("bad tensor value '" + tok + "' in " + path.string());
    }
    vals.push_back(v);
  }
  if (vals.size() != count) {
    throw std::runtime_error("tensor value count mismatch in " + path.string());
  }
  return SymmetricTensor::from_values(order, dim, std::move(vals));
}

std::string density_to_json(const DensityModel& model) {
  json doc;
  const int d = model_dim(model);
  doc["dim"] = d;
  if (const auto* g = std::get_if<GaussianModel>(&model)) {
    doc["type"] = "gaussian";
    doc["means"] = json::array({vector_to_json(g->mean())});
    doc["covariances"] = json::array({matrix_to_json(g->covariance())});
    doc["weights"] = json::array({1.0});
  } else {
    const auto& mix = std::get<GaussianMixtureModel>(model);
    doc["type"] = "gmm";
    json means = json::array(), covs = json::array();
    for (const auto& c : mix.components()) {
      means.push_back(vector_to_json(c.mean()));
      covs.push_back(matrix_to_json(c.covariance()));
    }
    doc["means"] = means;
    doc["covariances"] = covs;
    doc["weights"] = vector_to_json(mix.weights());
  }
  return doc.dump(2) + "\n";
}

DensityModel density_from_json(const std::string& text) {
  const json doc = json::parse(text);
  const std::string type = doc.at("type").get<std::string>();
  const int d = doc.at("dim").get<int>();
  std::vector<GaussianModel> comps;
  for (std::size_t i = 0; i < doc.at("means").size(); ++i) {
    comps.emplace_back(vector_from_json(doc.at("means")[i]),
                       matrix_from_json(doc.at("covariances")[i], d, d));
  }
  if (type == "gaussian") {
    if (comps.size() != 1) throw std::runtime_error("gaussian model must have one component");
    return comps.front();
  }
  if (type != "gmm") throw std::runtime_error("unknown density type: " + type);
  return GaussianMixtureModel(vector_from_json(doc.at("weights")), std::move(comps));
}

void save_density(const DensityModel& model, const std::filesystem::path& path) {
  open_out(path) << density_to_json(model);
}

DensityModel load_density(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  return density_from_json(buf.str());
}

void save_cp(const CpModel& cp, const std::filesystem::path& path) {
  json doc;
  doc["order"] = cp.order;
  doc["dim"] = cp.dim;
  doc["rank"] = cp.rank;
  doc["weights"] = vector_to_json(cp.weights);
  doc["components"] = matrix_to_json(cp.components);
  open_out(path) << doc.dump(2) << "\n";
}

CpModel load_cp(const std::filesystem::path& path) {
  auto in = open_in(path);
  const json doc = json::parse(in);
  CpModel cp;
  cp.order = doc.at("order").get<int>();
  cp.dim = doc.at("dim").get<int>();
  cp.rank = doc.at("rank").get<int>();
  cp.weights = vector_from_json(doc.at("weights"));
  cp.components = matrix_from_json(doc.at("components"), cp.dim, cp.rank);
  cp.validate();
  return cp;
}

void save_dataset(const LabeledDataset& data, const std::filesystem::path& path) {
  auto out = open_out(path);
  for (int j = 0; j < data.input_dim(); ++j) out << (j ? "," : "") << "x_" << j;
  for (int c = 0; c < data.label_dim(); ++c) out << ",y_" << c;
  out << "\n";
  for (Eigen::Index i = 0; i < data.inputs.rows(); ++i) {
    for (int j = 0; j < data.input_dim(); ++j) {
      out << (j ? "," : "") << format_double(data.inputs(i, j));
    }
    for (int c = 0; c < data.label_dim(); ++c) out << "," << format_double(data.labels(i, c));
    out << "\n";
  }
}

namespace {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

CsvTable read_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty CSV: " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::stringstream hs(line);
  std::string cell;
  while (std::getline(hs, cell, ',')) table.header.push_back(cell);
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ls(line);
    while (std::getline(ls, cell, ',')) {
      double v = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (res.ec != std::errc{}) throw std::runtime_error("bad CSV number: " + cell);
      row.push_back(v);
    }
    if (row.size() != table.header.size()) {
      throw std::runtime_error("CSV row width mismatch in " + path.string());
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace

LabeledDataset load_dataset(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path);
  std::vector<std::size_t> x_cols, y_cols;
  for (std::size_t j = 0; j < table.header.size(); ++j) {
    if (table.header[j].rfind("x_", 0) == 0) x_cols.push_back(j);
    else if (table.header[j].rfind("y_", 0) == 0) y_cols.push_back(j);
  }
  if (x_cols.empty()) throw std::runtime_error("no x_* columns in " + path.string());
  if (y_cols.empty()) throw std::runtime_error("no y_* columns in " + path.string());
  LabeledDataset data;
  data.inputs.resize(static_cast<Eigen::Index>(table.rows.size()),
                     static_cast<Eigen::Index>(x_cols.size()));
  data.labels.resize(static_cast<Eigen::Index>(table.rows.size()),
                     static_cast<Eigen::Index>(y_cols.size()));
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    for (std::size_t j = 0; j < x_cols.size(); ++j) {
      data.inputs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          table.rows[i][x_cols[j]];
    }
    for (std::size_t j = 0; j < y_cols.size(); ++j) {
      data.labels(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          table.rows[i][y_cols[j]];
    }
  }
  data.validate();
  return data;
}

Eigen::MatrixXd load_inputs(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path);
  std::vector<std::size_t> x_cols;
  for (std::size_t j = 0; j < table.header.size(); ++j) {
    if (table.header[j].rfind("x_", 0) == 0) x_cols.push_back(j);
  }
  if (x_cols.empty()) throw std::runtime_error("no x_* columns in " + path.string());
  Eigen::MatrixXd inputs(static_cast<Eigen::Index>(table.rows.size()),
                         static_cast<Eigen::Index>(x_cols.size()));
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    for (std::size_t j = 0; j < x_cols.size(); ++j) {
      inputs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          table.rows[i][x_cols[j]];
    }
  }
  return inputs;
}

void save_features(const Eigen::MatrixXd& features, const Eigen::MatrixXd* labels,
                   const std::filesystem::path& path) {
  auto out = open_out(path);
  for (Eigen::Index j = 0; j < features.cols(); ++j) out << (j ? "," : "") << "f_" << j;
  if (labels) {
    for (Eigen::Index c = 0; c < labels->cols(); ++c) out << ",y_" << c;
  }
  out << "\n";
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    for (Eigen::Index j = 0; j < features.cols(); ++j) {
      out << (j ? "," : "") << format_double(features(i, j));
    }
    if (labels) {
      for (Eigen::Index c = 0; c < labels->cols(); ++c) {
        out << "," << format_double((*labels)(i, c));
      }
    }
    out << "\n";
  }
}

}  // namespace scorefeat
