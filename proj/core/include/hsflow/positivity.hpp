#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hsflow/complex.hpp"
#include "hsflow/grid.hpp"

namespace hsflow {

enum class PositivityVerdict { positive, semi_positive, refuted, inconclusive };

const char* to_string(PositivityVerdict v);

struct PositivityReport {
  PositivityVerdict verdict = PositivityVerdict::inconclusive;
  /// True when the verdict rests on sampling (only refutations are then sound).
  bool sampling_grade = true;
  /// Refuting covectors alpha_1..alpha_s as coefficient vectors on dz^1..dz^n.
  std::vector<Vec> witness;
  std::size_t witness_node = 0;
  double witness_pairing = 0.0;
  /// Smallest real pairing seen (or smallest eigenvalue for certificates).
  double min_pairing = 0.0;
  /// Largest imaginary part seen; nonzero means u is not a real form.
  double max_imaginary = 0.0;
  /// Smallest eigenvalue of the coefficient matrix in bidegrees (1,1), (n-1,n-1).
  std::optional<double> eigen_margin;
  std::size_t samples_used = 0;
};

struct SamplerSpec {
  std::size_t samples = 256;
  std::uint64_t seed = 0;
};

/// The real number c with u ^ (i a_1 ^ conj a_1) ^ ... ^ (i a_s ^ conj a_s) = c tau
/// at one node (imaginary part returned as well).
cplx tuple_pairing(const GridForm& u, std::size_t node, const std::vector<Vec>& alphas);

/// Pairs a (p,p)-form with decomposable strongly positive (n-p,n-p)-forms
/// built from coordinate-axis tuples and a seeded low-discrepancy sample.
PositivityReport check_weak_positivity(const FormComplex& complex, const Form& u, const SamplerSpec& spec = {});
PositivityReport check_weak_positivity(const GridForm& u, const SamplerSpec& spec = {});

/// Exact eigenvalue test of the Hermitian coefficient matrix of a (1,1)-form.
PositivityReport check_strong_positivity_11(const FormComplex& complex, const Form& u);

}  // namespace hsflow
