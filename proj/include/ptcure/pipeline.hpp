#pragma once

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ptcure/errors.hpp"
#include "ptcure/types.hpp"

namespace ptcure {

enum class ColumnKind { numeric, categorical };

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::numeric;
};

struct TabularSchema {
  std::vector<ColumnSpec> features;
  std::string time_column = "time";
  std::string event_column = "event";
};

// Column-typed view of a CSV: numeric and categorical covariates plus
// outcomes. Encoding into a model-ready matrix happens in FittedPipeline.
struct RawTable {
  TabularSchema schema;
  Index n = 0;
  std::vector<Vector> numeric;                      // per feature; empty if categorical
  std::vector<std::vector<std::string>> categorical;  // per feature; empty if numeric
  Vector time;
  IntVector event;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

inline bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size() && std::isfinite(out);
}

}  // namespace detail

// Strict CSV reader: schema columns must all be present (extras are
// ignored); offending rows are reported with their line numbers.
inline RawTable load_csv(const std::string& path, const TabularSchema& schema) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("'" + path + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = detail::split_csv_line(line);

  auto column_of = [&header](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<int>(it - header.begin());
  };
  std::vector<int> feature_col(schema.features.size());
  std::vector<std::string> missing;
  for (std::size_t f = 0; f < schema.features.size(); ++f) {
    feature_col[f] = column_of(schema.features[f].name);
    if (feature_col[f] < 0) missing.push_back(schema.features[f].name);
  }
  const int time_col = column_of(schema.time_column);
  const int event_col = column_of(schema.event_column);
  if (time_col < 0) missing.push_back(schema.time_column);
  if (event_col < 0) missing.push_back(schema.event_column);
  if (!missing.empty()) {
    std::string msg = "'" + path + "' is missing columns:";
    for (const auto& m : missing) msg += " " + m;
    throw ValidationError(msg);
  }

  RawTable table;
  table.schema = schema;
  table.numeric.resize(schema.features.size());
  table.categorical.resize(schema.features.size());
  std::vector<std::vector<double>> numeric_buf(schema.features.size());
  std::vector<double> time_buf;
  std::vector<int> event_buf;
  std::vector<std::string> problems;

  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() < header.size()) {
      problems.push_back("line " + std::to_string(line_no) + ": expected " +
                         std::to_string(header.size()) + " cells, got " +
                         std::to_string(cells.size()));
      continue;
    }
    bool row_ok = true;
    std::vector<double> row_numeric(schema.features.size(), 0.0);
    for (std::size_t f = 0; f < schema.features.size() && row_ok; ++f) {
      if (schema.features[f].kind == ColumnKind::numeric) {
        if (!detail::parse_double(cells[feature_col[f]], row_numeric[f])) {
          problems.push_back("line " + std::to_string(line_no) + ": column '" +
                             schema.features[f].name + "' is not numeric: '" +
                             cells[feature_col[f]] + "'");
          row_ok = false;
        }
      }
    }
    double t = 0.0;
    if (row_ok && (!detail::parse_double(cells[time_col], t) || !(t > 0.0))) {
      problems.push_back("line " + std::to_string(line_no) + ": column '" +
                         schema.time_column + "' must be a positive number, got '" +
                         cells[time_col] + "'");
      row_ok = false;
    }
    double ev = 0.0;
    if (row_ok && (!detail::parse_double(cells[event_col], ev) || (ev != 0.0 && ev != 1.0))) {
      problems.push_back("line " + std::to_string(line_no) + ": column '" +
                         schema.event_column + "' must be 0 or 1, got '" +
                         cells[event_col] + "'");
      row_ok = false;
    }
    if (!row_ok) continue;
    for (std::size_t f = 0; f < schema.features.size(); ++f) {
      if (schema.features[f].kind == ColumnKind::numeric)
        numeric_buf[f].push_back(row_numeric[f]);
      else
        table.categorical[f].push_back(cells[feature_col[f]]);  // empty cell = own level
    }
    time_buf.push_back(t);
    event_buf.push_back(static_cast<int>(ev));
  }
  if (!problems.empty()) {
    std::string msg = "'" + path + "' has invalid rows:";
    const std::size_t shown = std::min<std::size_t>(problems.size(), 8);
    for (std::size_t i = 0; i < shown; ++i) msg += "\n  " + problems[i];
    if (problems.size() > shown)
      msg += "\n  ... and " + std::to_string(problems.size() - shown) + " more";
    throw ValidationError(msg);
  }
  table.n = static_cast<Index>(time_buf.size());
  if (table.n == 0) throw ValidationError("'" + path + "' contains no data rows");
  for (std::size_t f = 0; f < schema.features.size(); ++f)
    if (schema.features[f].kind == ColumnKind::numeric)
      table.numeric[f] = Eigen::Map<Vector>(numeric_buf[f].data(), table.n);
  table.time = Eigen::Map<Vector>(time_buf.data(), table.n);
  table.event = Eigen::Map<IntVector>(event_buf.data(), table.n);
  return table;
}

enum class EncodingKind { one_hot, target };
enum class PcaScope { full, numeric };

struct PipelineConfig {
  EncodingKind encoding = EncodingKind::one_hot;
  bool drop_first = false;          // drop one indicator per categorical
  double target_smoothing = 20.0;   // m in (n_c mean_c + m prior)/(n_c + m)
  bool use_pca = false;
  double pca_variance_target = 0.95;
  PcaScope pca_scope = PcaScope::full;
  bool normalize = true;            // z-score numeric/target-encoded columns
};

// Fit-once / apply-many preprocessing state. Test data is always mapped
// with training-set statistics.
struct FittedPipeline {
  PipelineConfig config;
  TabularSchema schema;
  std::vector<std::vector<std::string>> categories;        // per feature (sorted)
  std::vector<std::map<std::string, double>> target_values;  // per feature
  double target_prior = 0.0;
  Vector norm_mean, norm_sd;              // per encoded column; sd<=0 => passthrough
  std::vector<int> constant_columns;      // encoded columns left unscaled
  bool pca_fitted = false;
  Vector pca_mean;
  Matrix pca_components;                  // d x k
  Vector pca_explained;                   // eigenvalues of kept components
  std::vector<int> pca_column_set;        // encoded columns PCA was fit on
  std::vector<std::string> feature_names;  // final model-space names

  Index encoded_width() const {
    Index w = 0;
    for (std::size_t f = 0; f < schema.features.size(); ++f) {
      if (schema.features[f].kind == ColumnKind::numeric)
        w += 1;
      else if (config.encoding == EncodingKind::target)
        w += 1;
      else
        w += static_cast<Index>(categories[f].size()) - (config.drop_first ? 1 : 0);
    }
    return w;
  }
};

namespace detail {

inline Matrix encode_columns(const FittedPipeline& pipe, const RawTable& table,
                             std::vector<char>* scaled_mask = nullptr) {
  const auto& schema = pipe.schema;
  const Index n = table.n;
  Matrix out(n, pipe.encoded_width());
  if (scaled_mask) scaled_mask->assign(static_cast<std::size_t>(out.cols()), 0);
  Index col = 0;
  for (std::size_t f = 0; f < schema.features.size(); ++f) {
    if (schema.features[f].kind == ColumnKind::numeric) {
      out.col(col) = table.numeric[f];
      if (scaled_mask) (*scaled_mask)[col] = 1;
      ++col;
    } else if (pipe.config.encoding == EncodingKind::target) {
      const auto& values = pipe.target_values[f];
      for (Index i = 0; i < n; ++i) {
        const auto it = values.find(table.categorical[f][i]);
        out(i, col) = it == values.end() ? pipe.target_prior : it->second;
      }
      if (scaled_mask) (*scaled_mask)[col] = 1;
      ++col;
    } else {
      const auto& cats = pipe.categories[f];
      const std::size_t first = pipe.config.drop_first ? 1 : 0;
      const Index width = static_cast<Index>(cats.size() - first);
      out.middleCols(col, width).setZero();
      for (Index i = 0; i < n; ++i) {
        const auto it = std::lower_bound(cats.begin(), cats.end(), table.categorical[f][i]);
        if (it != cats.end() && *it == table.categorical[f][i]) {
          const auto pos = static_cast<std::size_t>(it - cats.begin());
          if (pos >= first) out(i, col + static_cast<Index>(pos - first)) = 1.0;
        }
        // unseen level: all-zero block
      }
      col += width;
    }
  }
  return out;
}

}  // namespace detail

inline FittedPipeline fit_pipeline(const RawTable& table, const PipelineConfig& config) {
  if (table.n == 0) throw ValidationError("fit_pipeline: empty table");
  FittedPipeline pipe;
  pipe.config = config;
  pipe.schema = table.schema;
  pipe.categories.resize(table.schema.features.size());
  pipe.target_values.resize(table.schema.features.size());

  double event_rate = 0.0;
  for (Index i = 0; i < table.n; ++i) event_rate += table.event[i];
  event_rate /= static_cast<double>(table.n);
  pipe.target_prior = event_rate;

  for (std::size_t f = 0; f < table.schema.features.size(); ++f) {
    if (table.schema.features[f].kind != ColumnKind::categorical) continue;
    std::map<std::string, std::pair<long, double>> stats;  // count, event sum
    for (Index i = 0; i < table.n; ++i) {
      auto& s = stats[table.categorical[f][i]];
      s.first += 1;
      s.second += table.event[i];
    }
    for (const auto& [cat, s] : stats) {
      pipe.categories[f].push_back(cat);
      const double n_c = static_cast<double>(s.first);
      pipe.target_values[f][cat] =
          (s.second + config.target_smoothing * event_rate) / (n_c + config.target_smoothing);
    }
  }

  std::vector<char> scaled;
  Matrix encoded = detail::encode_columns(pipe, table, &scaled);

  pipe.norm_mean = Vector::Zero(encoded.cols());
  pipe.norm_sd = Vector::Zero(encoded.cols());
  if (config.normalize && table.n >= 2) {
    for (Index c = 0; c < encoded.cols(); ++c) {
      if (!scaled[c]) continue;
      const double mean = encoded.col(c).mean();
      const double sd = std::sqrt((encoded.col(c).array() - mean).square().sum() /
                                  static_cast<double>(table.n - 1));
      if (sd > 0.0) {
        pipe.norm_mean[c] = mean;
        pipe.norm_sd[c] = sd;
        encoded.col(c) = (encoded.col(c).array() - mean) / sd;
      } else {
        pipe.constant_columns.push_back(static_cast<int>(c));
      }
    }
  }

  // model-space names before any PCA
  std::vector<std::string> names;
  for (std::size_t f = 0; f < table.schema.features.size(); ++f) {
    const auto& spec = table.schema.features[f];
    if (spec.kind == ColumnKind::numeric)
      names.push_back(spec.name);
    else if (config.encoding == EncodingKind::target)
      names.push_back(spec.name + "(target)");
    else
      for (std::size_t c = config.drop_first ? 1 : 0; c < pipe.categories[f].size(); ++c)
        names.push_back(spec.name + "=" + pipe.categories[f][c]);
  }

  if (config.use_pca) {
    if (config.pca_variance_target <= 0.0 || config.pca_variance_target > 1.0)
      throw ValidationError("pca variance target must lie in (0, 1]");
    for (Index c = 0; c < encoded.cols(); ++c)
      if (config.pca_scope == PcaScope::full || scaled[c])
        pipe.pca_column_set.push_back(static_cast<int>(c));
    const Index d = static_cast<Index>(pipe.pca_column_set.size());
    if (d == 0) throw ValidationError("pca: no columns selected");
    Matrix sub(table.n, d);
    for (Index j = 0; j < d; ++j) sub.col(j) = encoded.col(pipe.pca_column_set[j]);
    pipe.pca_mean = sub.colwise().mean();
    sub.rowwise() -= pipe.pca_mean.transpose();
    const Matrix cov = (sub.transpose() * sub) / std::max<double>(1.0, table.n - 1.0);
    const double total_var = cov.trace();
    if (!(total_var > 0.0)) throw ValidationError("pca: input has zero variance");
    Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
    // ascending eigenvalues; walk from the top until the target is reached
    Index keep = 0;
    double captured = 0.0;
    for (Index j = d - 1; j >= 0; --j) {
      captured += std::max(0.0, eig.eigenvalues()[j]);
      ++keep;
      if (captured / total_var >= config.pca_variance_target) break;
    }
    pipe.pca_components.resize(d, keep);
    pipe.pca_explained.resize(keep);
    for (Index j = 0; j < keep; ++j) {
      pipe.pca_components.col(j) = eig.eigenvectors().col(d - 1 - j);
      pipe.pca_explained[j] = eig.eigenvalues()[d - 1 - j];
    }
    pipe.pca_fitted = true;

    std::vector<std::string> pca_names;
    for (Index j = 0; j < keep; ++j) pca_names.push_back("pc" + std::to_string(j + 1));
    if (config.pca_scope == PcaScope::numeric) {
      for (Index c = 0; c < encoded.cols(); ++c)
        if (!scaled[c]) pca_names.push_back(names[static_cast<std::size_t>(c)]);
    }
    names = std::move(pca_names);
  }

  pipe.feature_names = std::move(names);
  return pipe;
}

inline Dataset apply_pipeline(const FittedPipeline& pipe, const RawTable& table) {
  std::vector<char> scaled;
  Matrix encoded = detail::encode_columns(pipe, table, &scaled);
  if (pipe.config.normalize) {
    for (Index c = 0; c < encoded.cols(); ++c)
      if (pipe.norm_sd[c] > 0.0)
        encoded.col(c) = (encoded.col(c).array() - pipe.norm_mean[c]) / pipe.norm_sd[c];
  }
  Dataset out;
  if (pipe.pca_fitted) {
    const Index d = static_cast<Index>(pipe.pca_column_set.size());
    Matrix sub(table.n, d);
    for (Index j = 0; j < d; ++j) sub.col(j) = encoded.col(pipe.pca_column_set[j]);
    sub.rowwise() -= pipe.pca_mean.transpose();
    Matrix scores = sub * pipe.pca_components;
    if (pipe.config.pca_scope == PcaScope::numeric) {
      std::vector<Index> passthrough;
      for (Index c = 0; c < encoded.cols(); ++c)
        if (!scaled[c]) passthrough.push_back(c);
      Matrix x(table.n, scores.cols() + static_cast<Index>(passthrough.size()));
      x.leftCols(scores.cols()) = scores;
      for (std::size_t j = 0; j < passthrough.size(); ++j)
        x.col(scores.cols() + static_cast<Index>(j)) = encoded.col(passthrough[j]);
      out.covariates = std::move(x);
    } else {
      out.covariates = std::move(scores);
    }
  } else {
    out.covariates = std::move(encoded);
  }
  out.time = table.time;
  out.event = table.event;
  out.feature_names = pipe.feature_names;
  validate(out);
  return out;
}

// Full-precision CSV writer for numeric datasets (x1..xq, time, event).
inline void write_csv(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  out.precision(17);
  for (Index c = 0; c < data.cols(); ++c) {
    const std::string name = c < static_cast<Index>(data.feature_names.size())
                                 ? data.feature_names[static_cast<std::size_t>(c)]
                                 : "x" + std::to_string(c + 1);
    out << name << ",";
  }
  out << "time,event\n";
  for (Index i = 0; i < data.rows(); ++i) {
    for (Index c = 0; c < data.cols(); ++c) out << data.covariates(i, c) << ",";
    out << data.time[i] << "," << data.event[i] << "\n";
  }
  if (!out) throw ValidationError("failed while writing '" + path + "'");
}

// Identity pipeline for data that is already numeric and model-ready.
inline FittedPipeline identity_pipeline(const std::vector<std::string>& feature_names) {
  FittedPipeline pipe;
  pipe.config.normalize = false;
  for (const auto& name : feature_names)
    pipe.schema.features.push_back({name, ColumnKind::numeric});
  pipe.categories.resize(feature_names.size());
  pipe.target_values.resize(feature_names.size());
  pipe.norm_mean = Vector::Zero(static_cast<Index>(feature_names.size()));
  pipe.norm_sd = Vector::Zero(static_cast<Index>(feature_names.size()));
  pipe.feature_names = feature_names;
  return pipe;
}

// Map linear coefficients from model space back to encoded-column units by
// undoing the z-scoring. PCA mixes columns, so PC-space coefficients are
// returned unchanged in that case.
inline std::pair<Vector, double> descale_linear(const FittedPipeline& pipe,
                                                const Vector& weights, double bias) {
  if (pipe.pca_fitted || weights.size() != pipe.norm_sd.size())
    return {weights, bias};
  Vector w = weights;
  double b = bias;
  for (Index c = 0; c < w.size(); ++c) {
    if (pipe.norm_sd[c] > 0.0) {
      w[c] /= pipe.norm_sd[c];
      b -= weights[c] * pipe.norm_mean[c] / pipe.norm_sd[c];
    }
  }
  return {w, b};
}

}  // namespace ptcure
