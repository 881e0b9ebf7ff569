#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hsflow/forms.hpp"

namespace hsflow {

enum class Backend { invariant, spectral };

const char* to_string(Backend b);

/// Coefficient polynomial c0 + c1 t + c2 t^2 + ...
using Poly = std::vector<cplx>;

cplx evaluate(const Poly& p, cplx t);
/// Parses `a`, `bi`, `a+bi` or `a-bi`; nullopt on malformed input.
std::optional<cplx> parse_complex_literal(const std::string& text);

/// c * (generator 2-form), generators 0-based:
/// e = phi^i ^ phi^j, f = phi^i ^ phibar^j, g = phibar^i ^ phibar^j.
template <typename Coef>
struct BasicStructureTerm {
  Coef c;
  char kind = 'e';
  int i = 0;
  int j = 0;
};

/// A coefficient of u = sum c e_mode dz^k.
template <typename Coef>
struct BasicPotentialTerm {
  ModeVector mode;
  int k = 0;
  Coef c;
};

/// h_{ij} Fourier coefficient at `mode` (empty mode for the invariant backend).
template <typename Coef>
struct BasicMetricEntry {
  ModeVector mode;
  int i = 0;
  int j = 0;
  Coef c;
};

/// A parsed model whose coefficients are numbers.
struct Model {
  Backend backend = Backend::invariant;
  int n = 0;
  std::vector<std::vector<BasicStructureTerm<cplx>>> d_phi;  // invariant: one list per generator
  std::vector<ModeVector> modes;                              // spectral, as listed (zero added later)
  int grid = 0;                                               // spectral nodes per active axis
  std::map<ModeVector, Mat> metric;                           // Fourier coefficients of h
  std::vector<BasicPotentialTerm<cplx>> potential;
  std::uint64_t hash = 0;                                     // FNV-1a of the source text
};

/// A parsed model whose coefficients may be polynomials in a parameter t.
struct ModelTemplate {
  Backend backend = Backend::invariant;
  int n = 0;
  std::vector<std::vector<BasicStructureTerm<Poly>>> d_phi;
  std::vector<ModeVector> modes;
  int grid = 0;
  std::vector<BasicMetricEntry<Poly>> metric;
  std::vector<BasicPotentialTerm<Poly>> potential;
  std::vector<cplx> t_samples;
  std::uint64_t hash = 0;

  bool is_constant() const;
  /// Evaluates every coefficient at t and validates the result.
  Model instantiate(cplx t) const;
};

std::uint64_t fnv1a(const std::string& text);

/// Smallest admissible grid for the mode set: (max(n,3)+1) K + 1 nodes per
/// active axis, K the largest mode entry.
int minimum_grid(int n, const std::vector<ModeVector>& modes);

/// Parses the line-oriented model grammar. Throws ParseError on syntax
/// errors (with line and column) and ValidationError when the model is
/// inconsistent. Rejects coefficients that depend on t.
Model parse_model(const std::string& text);
ModelTemplate parse_model_template(const std::string& text);
Model load_model(const std::string& path);
ModelTemplate load_model_template(const std::string& path);

/// Structural checks: d^2 = 0 on generators, integrability, unimodularity
/// (invariant); symmetric mode set, grid size, metric and potential modes
/// inside the mode set (spectral). Throws ValidationError.
void validate(const Model& model);

/// The invariant differential of phi^k (or of phibar^k when `conj`) as a
/// 2-form over the 2n real-ordered covectors (phi^1..phi^n, phibar^1..phibar^n):
/// map from covector bit mask to coefficient.
std::map<std::uint32_t, cplx> generator_differential(const Model& model, int k, bool conj);

/// Exterior derivative of a covector monomial (bit mask over 2n covectors)
/// in the invariant model, by the Leibniz rule.
std::map<std::uint32_t, cplx> invariant_d(const Model& model, std::uint32_t monomial);

}  // namespace hsflow
