#include "hsflow/linalg.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <fmt/format.h>

#include "hsflow/errors.hpp"

namespace hsflow {

namespace {

// Upper-triangular R with G = R^H R.
Mat cholesky_factor(const Mat& g, Eigen::Index dim) {
  if (g.size() == 0) return Mat::Identity(dim, dim);
  Eigen::LLT<Mat> llt(g);
  if (llt.info() != Eigen::Success) throw NumericalContractError("Gram matrix is not positive definite");
  return llt.matrixU();
}

Mat pseudo_inverse(const Mat& a, double cutoff) {
  if (a.size() == 0) return Mat::Zero(a.cols(), a.rows());
  Eigen::BDCSVD<Mat> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const double smax = s.size() > 0 ? s(0) : 0.0;
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(s.size());
  for (Eigen::Index k = 0; k < s.size(); ++k) {
    if (smax > 0 && s(k) > cutoff * smax) inv(k) = 1.0 / s(k);
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().adjoint();
}

}  // namespace

std::size_t numeric_rank(const Mat& a, double cutoff) {
  if (a.size() == 0) return 0;
  Eigen::BDCSVD<Mat> svd(a);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  std::size_t r = 0;
  for (Eigen::Index k = 0; k < s.size(); ++k)
    if (s(k) > cutoff * s(0)) ++r;
  return r;
}

Mat gram_adjoint(const Mat& a, const Mat& g_src, const Mat& g_dst) {
  if (a.cols() == 0 || a.rows() == 0) return Mat::Zero(a.cols(), a.rows());
  Eigen::LLT<Mat> llt(g_src);
  if (llt.info() != Eigen::Success) throw NumericalContractError("Gram matrix is not positive definite");
  return llt.solve(a.adjoint() * g_dst);
}

LeastSquares weighted_lstsq(const Mat& a, const Vec& b, const Mat& g_src, const Mat& g_dst, double cutoff) {
  LeastSquares out;
  out.x = Vec::Zero(a.cols());
  const Mat rd = cholesky_factor(g_dst, a.rows());
  if (a.cols() == 0 || a.rows() == 0) {
    out.residual = a.rows() == 0 ? 0.0 : (rd * b).norm();
    return out;
  }
  const Mat rs = cholesky_factor(g_src, a.cols());
  // Whitened problem: min ||R_d b - (R_d A R_s^{-1}) y||, x = R_s^{-1} y.
  const Mat rs_inv = rs.triangularView<Eigen::Upper>().solve(Mat::Identity(a.cols(), a.cols()));
  const Mat w = rd * a * rs_inv;
  const Vec y = pseudo_inverse(w, cutoff) * (rd * b);
  out.x = rs_inv * y;
  out.residual = (rd * (b - a * out.x)).norm();
  return out;
}

GreenOperator::GreenOperator(const Mat& op, const Mat& gram, double cutoff) {
  const Eigen::Index d = op.rows();
  if (op.cols() != d || gram.rows() != d) throw DegreeError("Green operator needs a square operator and matching Gram");
  pinv_ = Mat::Zero(d, d);
  projector_ = Mat::Identity(d, d);
  eigenvalues_ = Vec::Zero(d);
  kernel_dim_ = static_cast<std::size_t>(d);
  if (d == 0) return;

  const Mat r = cholesky_factor(gram, d);
  const Mat r_inv = r.triangularView<Eigen::Upper>().solve(Mat::Identity(d, d));
  Mat sym = r * op * r_inv;
  sym = 0.5 * (sym + sym.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<Mat> eig(sym);
  if (eig.info() != Eigen::Success) throw NumericalContractError("eigendecomposition of a Laplacian failed");
  const Eigen::VectorXd& lam = eig.eigenvalues();
  const Mat& v = eig.eigenvectors();
  eigenvalues_ = lam.cast<cplx>();
  max_eig_ = lam.maxCoeff();
  if (max_eig_ > 0) psd_defect_ = std::max(0.0, -lam.minCoeff() / max_eig_);
  if (max_eig_ <= 0) return;

  const double threshold = cutoff * max_eig_;
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(d);
  Mat kernel_vectors(d, 0);
  kernel_dim_ = 0;
  gap_ = 0.0;
  for (Eigen::Index k = 0; k < d; ++k) {
    if (lam(k) > threshold) {
      inv(k) = 1.0 / lam(k);
      if (gap_ == 0.0 || lam(k) < gap_) gap_ = lam(k);
      if (lam(k) < 1e3 * threshold) {
        ill_conditioned_ = true;
        warnings_.push_back(fmt::format("eigenvalue {:.3e} lies within 1e3 of the rank cutoff (condition {:.3e})",
                                        lam(k), max_eig_ / lam(k)));
      }
    } else {
      ++kernel_dim_;
    }
  }
  Mat v0(d, static_cast<Eigen::Index>(kernel_dim_));
  Eigen::Index c = 0;
  for (Eigen::Index k = 0; k < d; ++k)
    if (lam(k) <= threshold) v0.col(c++) = v.col(k);
  pinv_ = r_inv * v * inv.cast<cplx>().asDiagonal() * v.adjoint() * r;
  projector_ = r_inv * v0 * v0.adjoint() * r;
}

}  // namespace hsflow
