#pragma once

#include <string>
#include <vector>

#include "hsflow/forms.hpp"

namespace hsflow {

/// Relative singular-value threshold separating the numerical kernel.
inline constexpr double kDefaultRankCutoff = 1e-10;

/// Number of singular values above cutoff * sigma_max.
std::size_t numeric_rank(const Mat& a, double cutoff = kDefaultRankCutoff);

/// Gram adjoint G_src^{-1} A^H G_dst of A : src -> dst.
Mat gram_adjoint(const Mat& a, const Mat& g_src, const Mat& g_dst);

/// Weighted least squares: minimizes ||b - A x||_{G_dst} and, among the
/// minimizers, ||x||_{G_src}. Empty Gram matrices mean the identity.
struct LeastSquares {
  Vec x;
  double residual = 0.0;  // ||b - A x||_{G_dst}
};
LeastSquares weighted_lstsq(const Mat& a, const Vec& b, const Mat& g_src, const Mat& g_dst,
                            double cutoff = kDefaultRankCutoff);

/// Spectral data of an operator that is Hermitian positive semi-definite
/// with respect to a Gram inner product.
class GreenOperator {
 public:
  GreenOperator() = default;
  /// `op` acts on a space with Gram matrix `gram`; G * op must be Hermitian.
  GreenOperator(const Mat& op, const Mat& gram, double cutoff = kDefaultRankCutoff);

  std::size_t dim() const { return static_cast<std::size_t>(pinv_.rows()); }
  std::size_t kernel_dim() const { return kernel_dim_; }
  /// Moore-Penrose inverse in the Gram inner product: zero on the kernel.
  const Mat& inverse() const { return pinv_; }
  /// Orthogonal projector onto the kernel.
  const Mat& harmonic_projector() const { return projector_; }
  const Vec& eigenvalues() const { return eigenvalues_; }
  double max_eigenvalue() const { return max_eig_; }
  /// Smallest eigenvalue kept as nonzero (0 when the operator vanishes).
  double gap() const { return gap_; }
  double condition() const { return max_eig_ > 0 && gap_ > 0 ? max_eig_ / gap_ : 0.0; }
  /// Most negative eigenvalue relative to the largest (PSD defect).
  double psd_defect() const { return psd_defect_; }
  bool ill_conditioned() const { return ill_conditioned_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  Vec apply(const Vec& v) const { return pinv_ * v; }

 private:
  Mat pinv_;
  Mat projector_;
  Vec eigenvalues_;
  std::size_t kernel_dim_ = 0;
  double max_eig_ = 0.0;
  double gap_ = 0.0;
  double psd_defect_ = 0.0;
  bool ill_conditioned_ = false;
  std::vector<std::string> warnings_;
};

}  // namespace hsflow
