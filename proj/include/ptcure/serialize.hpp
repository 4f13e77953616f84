#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ptcure/cure_model.hpp"
#include "ptcure/errors.hpp"
#include "ptcure/types.hpp"

namespace ptcure {

inline constexpr int kModelFormatVersion = 1;

namespace detail {

using nlohmann::json;

inline json vector_to_json(const Vector& v) {
  json arr = json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

inline Vector vector_from_json(const json& arr) {
  Vector v(static_cast<Index>(arr.size()));
  for (Index i = 0; i < v.size(); ++i) v[i] = arr[static_cast<std::size_t>(i)].get<double>();
  return v;
}

inline json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix matrix_from_json(const json& rows) {
  const Index r = static_cast<Index>(rows.size());
  const Index c = r > 0 ? static_cast<Index>(rows[0].size()) : 0;
  Matrix m(r, c);
  for (Index i = 0; i < r; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (static_cast<Index>(row.size()) != c)
      throw ValidationError("model file: ragged weight matrix");
    for (Index j = 0; j < c; ++j) m(i, j) = row[static_cast<std::size_t>(j)].get<double>();
  }
  return m;
}

inline json pipeline_to_json(const FittedPipeline& pipe) {
  json j;
  json features = json::array();
  for (const auto& f : pipe.schema.features)
    features.push_back({{"name", f.name},
                        {"kind", f.kind == ColumnKind::numeric ? "numeric" : "categorical"}});
  j["schema"] = {{"features", features},
                 {"time", pipe.schema.time_column},
                 {"event", pipe.schema.event_column}};
  j["config"] = {
      {"encoding", pipe.config.encoding == EncodingKind::one_hot ? "one_hot" : "target"},
      {"drop_first", pipe.config.drop_first},
      {"target_smoothing", pipe.config.target_smoothing},
      {"use_pca", pipe.config.use_pca},
      {"pca_variance_target", pipe.config.pca_variance_target},
      {"pca_scope", pipe.config.pca_scope == PcaScope::full ? "full" : "numeric"},
      {"normalize", pipe.config.normalize}};
  j["categories"] = pipe.categories;
  json target_values = json::array();
  for (const auto& values : pipe.target_values) {
    json m = json::object();
    for (const auto& [cat, val] : values) m[cat] = val;
    target_values.push_back(std::move(m));
  }
  j["target"] = {{"prior", pipe.target_prior}, {"values", target_values}};
  j["normalize"] = {{"mean", vector_to_json(pipe.norm_mean)},
                    {"sd", vector_to_json(pipe.norm_sd)},
                    {"constant_columns", pipe.constant_columns}};
  if (pipe.pca_fitted) {
    j["pca"] = {{"mean", vector_to_json(pipe.pca_mean)},
                {"components", matrix_to_json(pipe.pca_components)},
                {"explained", vector_to_json(pipe.pca_explained)},
                {"columns", pipe.pca_column_set}};
  } else {
    j["pca"] = nullptr;
  }
  j["feature_names"] = pipe.feature_names;
  return j;
}

inline FittedPipeline pipeline_from_json(const json& j) {
  FittedPipeline pipe;
  for (const auto& f : j.at("schema").at("features"))
    pipe.schema.features.push_back(
        {f.at("name").get<std::string>(),
         f.at("kind").get<std::string>() == "numeric" ? ColumnKind::numeric
                                                      : ColumnKind::categorical});
  pipe.schema.time_column = j.at("schema").at("time").get<std::string>();
  pipe.schema.event_column = j.at("schema").at("event").get<std::string>();
  const auto& cfg = j.at("config");
  pipe.config.encoding = cfg.at("encoding").get<std::string>() == "one_hot"
                             ? EncodingKind::one_hot
                             : EncodingKind::target;
  pipe.config.drop_first = cfg.at("drop_first").get<bool>();
  pipe.config.target_smoothing = cfg.at("target_smoothing").get<double>();
  pipe.config.use_pca = cfg.at("use_pca").get<bool>();
  pipe.config.pca_variance_target = cfg.at("pca_variance_target").get<double>();
  pipe.config.pca_scope = cfg.at("pca_scope").get<std::string>() == "full"
                              ? PcaScope::full
                              : PcaScope::numeric;
  pipe.config.normalize = cfg.at("normalize").get<bool>();
  pipe.categories = j.at("categories").get<std::vector<std::vector<std::string>>>();
  pipe.target_prior = j.at("target").at("prior").get<double>();
  for (const auto& m : j.at("target").at("values")) {
    std::map<std::string, double> values;
    for (auto it = m.begin(); it != m.end(); ++it) values[it.key()] = it.value().get<double>();
    pipe.target_values.push_back(std::move(values));
  }
  pipe.norm_mean = vector_from_json(j.at("normalize").at("mean"));
  pipe.norm_sd = vector_from_json(j.at("normalize").at("sd"));
  pipe.constant_columns = j.at("normalize").at("constant_columns").get<std::vector<int>>();
  if (!j.at("pca").is_null()) {
    pipe.pca_fitted = true;
    pipe.pca_mean = vector_from_json(j.at("pca").at("mean"));
    pipe.pca_components = matrix_from_json(j.at("pca").at("components"));
    pipe.pca_explained = vector_from_json(j.at("pca").at("explained"));
    pipe.pca_column_set = j.at("pca").at("columns").get<std::vector<int>>();
  }
  pipe.feature_names = j.at("feature_names").get<std::vector<std::string>>();
  return pipe;
}

}  // namespace detail

inline nlohmann::json model_to_json(const CureModel& model) {
  using detail::matrix_to_json;
  using detail::vector_to_json;
  nlohmann::json j;
  j["version"] = kModelFormatVersion;
  j["orthogonalize"] = model.orthogonalize;
  j["baseline"] = {{"cuts", vector_to_json(model.baseline.cuts)},
                   {"log_hazards", vector_to_json(model.baseline.log_hazards)}};
  nlohmann::json layers = nlohmann::json::array();
  for (int l = 0; l < model.net.hidden_layers(); ++l) {
    layers.push_back({{"units", model.net.specs[l].units},
                      {"activation", to_string(model.net.specs[l].activation)},
                      {"dropout", model.net.specs[l].dropout},
                      {"weights", matrix_to_json(model.net.weights[l])},
                      {"bias", vector_to_json(model.net.biases[l])}});
  }
  // the scalar output unit is stored as a final linear layer
  Matrix w_out(model.net.output_weights.size(), 1);
  w_out.col(0) = model.net.output_weights;
  Vector b_out(1);
  b_out[0] = model.net.output_bias;
  layers.push_back({{"units", 1},
                    {"activation", "linear"},
                    {"dropout", 0.0},
                    {"weights", matrix_to_json(w_out)},
                    {"bias", vector_to_json(b_out)}});
  j["layers"] = std::move(layers);
  if (model.net.has_linear_part)
    j["linear_part"] = {{"weights", vector_to_json(model.net.linear_weights)},
                        {"bias", model.net.linear_bias}};
  else
    j["linear_part"] = nullptr;
  j["preprocessing"] = detail::pipeline_to_json(model.preprocessing);
  j["feature_names"] = model.feature_names;
  return j;
}

inline CureModel model_from_json(const nlohmann::json& j) {
  using detail::matrix_from_json;
  using detail::vector_from_json;
  if (!j.contains("version") || !j.at("version").is_number_integer())
    throw ValidationError("model file: missing version field");
  if (j.at("version").get<int>() != kModelFormatVersion)
    throw ValidationError("model file: unsupported version " +
                          std::to_string(j.at("version").get<int>()) + " (expected " +
                          std::to_string(kModelFormatVersion) + ")");
  CureModel model;
  model.orthogonalize = j.at("orthogonalize").get<bool>();
  model.baseline.cuts = vector_from_json(j.at("baseline").at("cuts"));
  model.baseline.log_hazards = vector_from_json(j.at("baseline").at("log_hazards"));

  const auto& layers = j.at("layers");
  if (layers.empty()) throw ValidationError("model file: no layers");
  const std::size_t hidden = layers.size() - 1;
  for (std::size_t l = 0; l < hidden; ++l) {
    const auto& layer = layers[l];
    LayerSpec spec;
    spec.units = layer.at("units").get<int>();
    spec.activation = parse_activation(layer.at("activation").get<std::string>());
    spec.dropout = layer.at("dropout").get<double>();
    model.net.specs.push_back(spec);
    model.net.weights.push_back(matrix_from_json(layer.at("weights")));
    model.net.biases.push_back(vector_from_json(layer.at("bias")));
  }
  const auto& out_layer = layers[hidden];
  const Matrix w_out = matrix_from_json(out_layer.at("weights"));
  if (w_out.cols() != 1 || out_layer.at("units").get<int>() != 1)
    throw ValidationError("model file: output layer must have one unit");
  model.net.output_weights = w_out.col(0);
  model.net.output_bias = vector_from_json(out_layer.at("bias"))[0];
  model.net.input_dim = model.net.specs.empty()
                            ? static_cast<int>(model.net.output_weights.size())
                            : static_cast<int>(model.net.weights.front().rows());
  if (!j.at("linear_part").is_null()) {
    model.net.has_linear_part = true;
    model.net.linear_weights = vector_from_json(j.at("linear_part").at("weights"));
    model.net.linear_bias = j.at("linear_part").at("bias").get<double>();
  }
  model.preprocessing = detail::pipeline_from_json(j.at("preprocessing"));
  model.feature_names = j.at("feature_names").get<std::vector<std::string>>();

  // shape coherence
  int fan_in = model.net.input_dim;
  for (std::size_t l = 0; l < model.net.weights.size(); ++l) {
    if (model.net.weights[l].rows() != fan_in ||
        model.net.weights[l].cols() != model.net.specs[l].units ||
        model.net.biases[l].size() != model.net.specs[l].units)
      throw ValidationError("model file: layer " + std::to_string(l) +
                            " has inconsistent shapes");
    fan_in = model.net.specs[l].units;
  }
  if (model.net.output_weights.size() != fan_in)
    throw ValidationError("model file: output layer has inconsistent shape");
  return model;
}

inline void save_model(const CureModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  out << model_to_json(model).dump(2) << "\n";
  if (!out) throw ValidationError("failed while writing '" + path + "'");
}

inline CureModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("'" + path + "' is not a valid model file: " + e.what());
  }
  try {
    return model_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("'" + path + "' is not a valid model file: " + e.what());
  }
}

}  // namespace ptcure
