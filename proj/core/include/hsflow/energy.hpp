#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hsflow/positivity.hpp"
#include "hsflow/torsion.hpp"

namespace hsflow {

/// A metric omega_0 + del(conj u) + delbar(u) in the Aeppli class of a base
/// Hermitian-symplectic metric, together with its torsion form.
struct AeppliPoint {
  HermitianStructure base;
  Form potential;
  HermitianStructure realized;
  double positivity_margin = 0.0;
  Form rho;  // least-norm (2,0)-torsion of the realized metric
};

struct CorollaryReport {
  PositivityReport dbar_xi;
  double integral = 0.0;      // 2 Re int dbar xi ^ rho ^ conj(rho) ^ omega_{n-3}
  double differential = 0.0;  // the specialized differential at xi
  double rho_norm_sq = 0.0;
  bool differential_vanishes = false;
  /// True when semi-positivity and criticality force ||rho||^2 <= 0.
  bool derives_rho_zero = false;
  std::string conclusion;  // "Kahler", "not critical" or "inconclusive"
};

enum class FlowStatus { converged, stalled, positivity_blocked, max_iters };
const char* to_string(FlowStatus s);

struct FlowOptions {
  int max_iters = 500;
  double tol = 1e-8;
  double armijo_c = 1e-4;
  double initial_step = 1.0;
  double margin_floor_factor = 1e-6;
  double min_step = 1e-14;
};

struct FlowIterate {
  int iter = 0;
  double energy = 0.0;
  double grad_norm = 0.0;
  double step = 0.0;  // step accepted to reach this iterate (0 for the start)
  double margin = 0.0;
};

struct FlowTrace {
  std::vector<FlowIterate> iterates;
  FlowStatus status = FlowStatus::max_iters;
  Form final_potential;
};

/// F(omega) = ||rho_omega||^2 on the Aeppli orbit of a fixed H-s base metric.
class EnergyFunctional {
 public:
  /// Throws NotHermitianSymplectic when the base admits no completion.
  explicit EnergyFunctional(HermitianStructure base, double rank_cutoff = kDefaultRankCutoff);

  const HermitianStructure& base() const { return base_; }
  const FormComplex& complex() const { return base_.complex(); }

  /// Throws PositivityError when the shifted metric is not positive.
  AeppliPoint point(const Form& u) const;
  double energy(const AeppliPoint& pt) const;

  /// -2 Re <<u, delbar* omega>> + 2 Re int u ^ rho ^ conj(rho) ^ delbar omega_{n-3}.
  double differential(const AeppliPoint& pt, const Form& dir) const;
  /// Row vector L with differential(dir) = Re(L dir).
  Eigen::RowVectorXcd differential_functional(const AeppliPoint& pt) const;
  /// Exact derivative of the discrete functional:
  /// 2 Re <rho, del u> + int rho ^ conj(rho) ^ gamma ^ omega_{n-3}.
  Eigen::RowVectorXcd envelope_functional(const AeppliPoint& pt) const;
  double envelope_differential(const AeppliPoint& pt, const Form& dir) const;

  /// 2 ||rho||^2 + 2 Re int dbar xi ^ rho ^ conj(rho) ^ omega_{n-3}; requires
  /// rho = del xi (PreconditionError with the residual otherwise).
  double differential_special(const AeppliPoint& pt, const Form& xi) const;
  /// The integral term of differential_special.
  double special_integral(const AeppliPoint& pt, const Form& xi) const;
  /// ||rho - del xi|| and its tolerance 1e-8 (1 + ||rho||).
  std::pair<double, double> special_residual(const AeppliPoint& pt, const Form& xi) const;

  CorollaryReport corollary_check(const AeppliPoint& pt, const Form& xi, const SamplerSpec& spec = {}) const;

  /// Largest |dF| over the real and imaginary unit directions of the (1,0) basis.
  double criticality(const AeppliPoint& pt) const;

  FlowTrace gradient_descent(const Form& u0, const FlowOptions& options = {}) const;

 private:
  HermitianStructure base_;
  double cutoff_;
  Form rho_base_;  // a particular completion of the base metric
  CompletionProjector projector_;
  Mat real_gram_;  // base Gram on (1,0) in real coordinates

  GridForm rho_product(const AeppliPoint& pt) const;  // rho ^ conj(rho) sampled
};

}  // namespace hsflow
