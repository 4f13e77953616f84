#pragma once

#include <Eigen/QR>
#include <string>

#include "ptcure/errors.hpp"
#include "ptcure/net.hpp"
#include "ptcure/types.hpp"

namespace ptcure {

// Thin orthonormal basis Q of the column span of [1, X]. The projector
// P = QQ' and its complement are applied as Q(Q'.) products, never
// materialized as N x N matrices.
struct Projection {
  Matrix q_basis;  // N x r, orthonormal columns
};

inline Matrix with_intercept(const Matrix& x) {
  Matrix xt(x.rows(), x.cols() + 1);
  xt.col(0).setOnes();
  xt.rightCols(x.cols()) = x;
  return xt;
}

// Householder thin QR with a rank check on the R diagonal. Rank deficiency
// signals collinear covariates; callers must drop columns (e.g. one-hot
// with --drop-first) rather than orthogonalize against a degenerate span.
inline Projection qr_orthonormal(const Matrix& xtilde) {
  const Index n = xtilde.rows();
  const Index r = xtilde.cols();
  if (n < r)
    throw ValidationError("qr_orthonormal: need at least " + std::to_string(r) +
                          " rows for " + std::to_string(r) + " columns, got " +
                          std::to_string(n));
  Eigen::HouseholderQR<Matrix> qr(xtilde);
  const Matrix& qr_packed = qr.matrixQR();
  const double scale = xtilde.norm();
  for (Index k = 0; k < r; ++k) {
    if (std::abs(qr_packed(k, k)) < 1e-10 * scale)
      throw ValidationError(
          "qr_orthonormal: design is rank deficient at column " + std::to_string(k) +
          " (collinear covariates); drop redundant columns");
  }
  Projection proj;
  proj.q_basis = qr.householderQ() * Matrix::Identity(n, r);
  return proj;
}

// u - Q(Q'u): componentwise projection onto the orthogonal complement of
// the design span.
inline Matrix project_complement(const Projection& proj, const Matrix& u) {
  if (u.rows() != proj.q_basis.rows())
    throw ValidationError("project_complement: row count mismatch");
  return u - proj.q_basis * (proj.q_basis.transpose() * u);
}

inline Vector project_complement(const Projection& proj, const Vector& u) {
  if (u.size() != proj.q_basis.rows())
    throw ValidationError("project_complement: length mismatch");
  return u - proj.q_basis * (proj.q_basis.transpose() * u);
}

// Raw predictor before clamping.
//   off: eta = U w_out + b_out
//   on:  eta = X w_lin + b_lin + Pperp U w_out  (intercept lives in b_lin;
//        the projected term has no bias since 1_N lies in the design span)
inline Vector combine_predictor(const NetworkParams& params, const Matrix& x,
                                const Matrix& hidden, bool orthogonalize,
                                const Projection* proj = nullptr) {
  if (hidden.rows() != x.rows())
    throw ValidationError("combine_predictor: row count mismatch");
  if (hidden.cols() != params.hidden_output_dim())
    throw ValidationError("combine_predictor: hidden width mismatch");
  if (!orthogonalize)
    return (hidden * params.output_weights).array() + params.output_bias;

  if (!params.has_linear_part)
    throw ValidationError("combine_predictor: orthogonalized model lacks a linear part");
  if (x.rows() < x.cols() + 1)
    throw ValidationError("combine_predictor: batch of " + std::to_string(x.rows()) +
                          " rows is too small to orthogonalize against " +
                          std::to_string(x.cols() + 1) + " design columns");
  Projection local;
  if (!proj) {
    local = qr_orthonormal(with_intercept(x));
    proj = &local;
  }
  Vector nonlinear = project_complement(*proj, Vector(hidden * params.output_weights));
  return (x * params.linear_weights).array() + params.linear_bias + nonlinear.array();
}

}  // namespace ptcure
