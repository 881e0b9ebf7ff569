#pragma once

#include <map>
#include <memory>

#include "hsflow/linalg.hpp"
#include "hsflow/metric.hpp"

namespace hsflow {

/// Adjoints, Laplacians and Green operators of one Hermitian structure,
/// assembled per bidegree on first use. Cheap to copy.
class OperatorBundle {
 public:
  explicit OperatorBundle(HermitianStructure metric, double rank_cutoff = kDefaultRankCutoff);

  const HermitianStructure& metric() const;
  const FormComplex& complex() const;
  double rank_cutoff() const;

  /// del* : Lambda^{p+1,q} -> Lambda^{p,q}, where src = (p,q) is the source of del.
  const Mat& del_adjoint(Bidegree src) const;
  /// delbar* : Lambda^{p,q+1} -> Lambda^{p,q}.
  const Mat& delbar_adjoint(Bidegree src) const;
  /// del delbar : Lambda^{p,q} -> Lambda^{p+1,q+1}.
  Mat ddbar(Bidegree src) const;

  /// Six-term Bott-Chern Laplacian on Lambda^{p,q}.
  const Mat& laplacian_bc(Bidegree bd) const;
  /// delbar delbar* + delbar* delbar on Lambda^{p,q}.
  const Mat& laplacian_dbar(Bidegree bd) const;
  const GreenOperator& green_bc(Bidegree bd) const;
  const GreenOperator& green_dbar(Bidegree bd) const;

 private:
  struct Impl;
  std::shared_ptr<const Impl> impl_;
};

/// E^{-1} gamma, zero on the kernel of E.
Form apply_green(const GreenOperator& green, const Form& gamma);
/// Harmonic part F_E(gamma).
Form harmonic_part(const GreenOperator& green, const Form& gamma);

struct CohomologyEntry {
  std::size_t dim = 0;  // dim Lambda^{p,q}
  std::size_t h_dbar = 0;
  std::size_t h_bc = 0;
  std::size_t h_a = 0;
  double gap_dbar = 0.0;
  double gap_bc = 0.0;
};
using CohomologyTable = std::map<Bidegree, CohomologyEntry>;

/// Dolbeault and Bott-Chern numbers as kernel dimensions of the Laplacians,
/// Aeppli numbers from ranks. The Bott-Chern number is recomputed from
/// quotient ranks; a disagreement throws NumericalContractError.
CohomologyEntry cohomology_dims(const OperatorBundle& bundle, Bidegree bd);
CohomologyTable cohomology_table(const OperatorBundle& bundle);

}  // namespace hsflow
