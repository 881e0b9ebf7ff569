#pragma once

#include <map>
#include <optional>
#include <string>

#include "hsflow/hodge.hpp"

namespace hsflow {

/// Absolute tolerance 1e-8 (1 + ||omega||) used by all closedness tests.
double closedness_tolerance(const HermitianStructure& metric, double rel = 1e-8);

struct MetricClassification {
  bool kahler = false;
  bool skt = false;
  bool balanced = false;
  bool strongly_gauduchon = false;
  bool hermitian_symplectic = false;
  double tolerance = 0.0;
  /// d_omega, ddbar_omega, d_omega_n1, sg_distance, hs_residual.
  std::map<std::string, double> residuals;
};

struct Feasibility {
  bool feasible = false;
  double residual = 0.0;
  /// Least-norm solution of del rho = 0, delbar rho = -del omega (always filled).
  Form least_squares;
};

struct TorsionReport {
  Form rho20;
  Form rho02;
  double residual_constraint = 0.0;  // ||delbar rho20 + del omega||
  double residual_closed = 0.0;      // ||del rho20||
  double minimality_gap = 0.0;       // ||projection of rho20 onto ker del ^ ker delbar||
  double oracle_gap = 0.0;           // relative distance to the least-norm oracle
  double norm = 0.0;                 // ||rho20||
};

/// rel scales the closedness tolerance rel (1 + ||omega||).
MetricClassification classify(const OperatorBundle& bundle, double rel = 1e-8);
Feasibility hs_feasible(const OperatorBundle& bundle, double rel = 1e-8);

/// rho = -G_BC [delbar* del omega + delbar* del del* del omega] on (2,0).
Form torsion_formula(const OperatorBundle& bundle);
/// The same formula with del and delbar exchanged, on (0,2).
Form conjugate_torsion_formula(const OperatorBundle& bundle);

/// Throws NotHermitianSymplectic with the feasibility residual when the
/// metric admits no completion, and NumericalContractError when the formula
/// disagrees with the least-norm oracle beyond 1e-6 relative.
TorsionReport torsion_form(const OperatorBundle& bundle);

/// Least-norm projection onto the affine completion space for metrics in a
/// fixed complex: rho = rho_p - Pi rho_p, Pi the orthogonal projector onto
/// ker del ^ ker delbar in Lambda^{2,0}. Only needs the (2,0) Gram matrix.
class CompletionProjector {
 public:
  explicit CompletionProjector(const FormComplex& complex, double cutoff = kDefaultRankCutoff);
  /// Kernel basis (columns) of [del; delbar] on Lambda^{2,0}.
  const Mat& kernel() const { return kernel_; }
  Form minimize(const HermitianStructure& metric, const Form& particular) const;

 private:
  Mat kernel_;
};

}  // namespace hsflow
