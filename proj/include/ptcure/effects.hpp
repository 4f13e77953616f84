#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "ptcure/cure_model.hpp"
#include "ptcure/errors.hpp"
#include "ptcure/pipeline.hpp"
#include "ptcure/types.hpp"

namespace ptcure {

enum class BaseRule { median, mean, zero };

inline BaseRule parse_base_rule(const std::string& s) {
  if (s == "median") return BaseRule::median;
  if (s == "mean") return BaseRule::mean;
  if (s == "zero") return BaseRule::zero;
  throw ValidationError("unknown base-value rule '" + s + "'");
}

struct EffectQuery {
  std::string var;
  std::string var2;  // empty for univariate curves
  int grid_size = 50;
  BaseRule base = BaseRule::median;
};

namespace detail {

inline int feature_index(const TabularSchema& schema, const std::string& name) {
  for (std::size_t f = 0; f < schema.features.size(); ++f)
    if (schema.features[f].name == name) return static_cast<int>(f);
  throw ValidationError("unknown covariate '" + name + "'");
}

inline double numeric_base(const Vector& col, BaseRule rule) {
  switch (rule) {
    case BaseRule::zero: return 0.0;
    case BaseRule::mean: return col.mean();
    case BaseRule::median: {
      std::vector<double> sorted(col.data(), col.data() + col.size());
      std::sort(sorted.begin(), sorted.end());
      const std::size_t n = sorted.size();
      return n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    }
  }
  return 0.0;
}

inline std::string modal_category(const std::vector<std::string>& col) {
  std::map<std::string, long> counts;
  for (const auto& v : col) ++counts[v];
  std::string best;
  long best_count = -1;
  for (const auto& [cat, count] : counts)
    if (count > best_count) {
      best = cat;
      best_count = count;
    }
  return best;
}

// One synthetic row per grid point: everything at base values except the
// varied covariates.
inline RawTable grid_table(const RawTable& data, const std::vector<int>& vary,
                           const std::vector<std::vector<double>>& values, BaseRule rule) {
  RawTable out;
  out.schema = data.schema;
  Index n = 1;
  for (const auto& v : values) n *= static_cast<Index>(v.size());
  out.n = n;
  out.numeric.resize(data.schema.features.size());
  out.categorical.resize(data.schema.features.size());
  for (std::size_t f = 0; f < data.schema.features.size(); ++f) {
    if (data.schema.features[f].kind == ColumnKind::numeric)
      out.numeric[f] = Vector::Constant(n, numeric_base(data.numeric[f], rule));
    else
      out.categorical[f].assign(static_cast<std::size_t>(n),
                                modal_category(data.categorical[f]));
  }
  // row-major sweep: the last varied covariate cycles fastest
  for (Index i = 0; i < n; ++i) {
    Index rem = i;
    for (std::size_t v = values.size(); v-- > 0;) {
      const Index m = static_cast<Index>(values[v].size());
      out.numeric[static_cast<std::size_t>(vary[v])][i] =
          values[v][static_cast<std::size_t>(rem % m)];
      rem /= m;
    }
  }
  out.time = Vector::Constant(n, 1.0);
  out.event = IntVector::Zero(n);
  return out;
}

inline std::vector<double> linspace(double lo, double hi, int count) {
  std::vector<double> g(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i)
    g[static_cast<std::size_t>(i)] =
        lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  return g;
}

}  // namespace detail

struct EffectCurve {
  std::vector<double> grid;
  Vector eta;
};

// Predictor profile over one numeric covariate's observed range, all other
// covariates pinned at base values.
inline EffectCurve covariate_effect(const CureModel& model, const RawTable& data,
                                    const EffectQuery& query) {
  if (query.grid_size < 2) throw ValidationError("grid size must be >= 2");
  const int f = detail::feature_index(data.schema, query.var);
  if (data.schema.features[static_cast<std::size_t>(f)].kind != ColumnKind::numeric)
    throw ValidationError("covariate_effect: '" + query.var + "' is not numeric");
  const auto& col = data.numeric[static_cast<std::size_t>(f)];
  EffectCurve curve;
  curve.grid = detail::linspace(col.minCoeff(), col.maxCoeff(), query.grid_size);
  const RawTable grid = detail::grid_table(data, {f}, {curve.grid}, query.base);
  curve.eta = model.eta(apply_pipeline(model.preprocessing, grid).covariates);
  return curve;
}

struct EffectSurface {
  std::vector<double> grid1, grid2;
  Matrix eta;  // grid1.size() x grid2.size()
};

// Bivariate interaction slice over two numeric covariates.
inline EffectSurface interaction_surface(const CureModel& model, const RawTable& data,
                                         const EffectQuery& query) {
  if (query.grid_size < 2) throw ValidationError("grid size must be >= 2");
  if (query.var2.empty())
    throw ValidationError("interaction_surface: second covariate required");
  const int f1 = detail::feature_index(data.schema, query.var);
  const int f2 = detail::feature_index(data.schema, query.var2);
  for (int f : {f1, f2})
    if (data.schema.features[static_cast<std::size_t>(f)].kind != ColumnKind::numeric)
      throw ValidationError("interaction_surface: covariates must be numeric");
  const auto& col1 = data.numeric[static_cast<std::size_t>(f1)];
  const auto& col2 = data.numeric[static_cast<std::size_t>(f2)];
  EffectSurface surface;
  surface.grid1 = detail::linspace(col1.minCoeff(), col1.maxCoeff(), query.grid_size);
  surface.grid2 = detail::linspace(col2.minCoeff(), col2.maxCoeff(), query.grid_size);
  const RawTable grid =
      detail::grid_table(data, {f1, f2}, {surface.grid1, surface.grid2}, query.base);
  const Vector eta = model.eta(apply_pipeline(model.preprocessing, grid).covariates);
  surface.eta.resize(static_cast<Index>(surface.grid1.size()),
                     static_cast<Index>(surface.grid2.size()));
  for (Index i = 0; i < surface.eta.rows(); ++i)
    for (Index j = 0; j < surface.eta.cols(); ++j)
      surface.eta(i, j) = eta[i * surface.eta.cols() + j];
  return surface;
}

}  // namespace ptcure
