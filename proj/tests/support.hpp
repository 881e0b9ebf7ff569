#pragma once

#include <random>
#include <string>

#include <fmt/format.h>

#include "hsflow/complex.hpp"
#include "hsflow/metric.hpp"
#include "hsflow/model.hpp"

namespace hsflow::testing {

inline std::string model_path(const std::string& name) { return std::string(HSFLOW_MODELS_DIR) + "/" + name; }

inline Model flat_torus(int n = 3) { return parse_model(fmt::format("kind invariant\nn {}\n", n)); }
inline Model iwasawa() { return load_model(model_path("iwasawa.model")); }
inline Model spectral_torus() { return load_model(model_path("spectral_torus.model")); }

inline double uniform(std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}
inline cplx gaussian(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  return {g(rng), g(rng)};
}

inline Vec random_vec(std::mt19937_64& rng, Eigen::Index size) {
  Vec v(size);
  for (Eigen::Index k = 0; k < size; ++k) v(k) = gaussian(rng);
  return v;
}

inline Form random_form(std::mt19937_64& rng, const FormComplex& c, Bidegree bd) {
  return Form(c.space_ptr(), bd, random_vec(rng, static_cast<Eigen::Index>(c.dim(bd))));
}

/// Positive Hermitian matrix with eigenvalues in roughly [0.5, 2].
inline Mat random_hermitian_metric(std::mt19937_64& rng, int n) {
  Mat a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = 0.3 * gaussian(rng);
  Mat h = 0.5 * (a + a.adjoint()) + Mat::Identity(n, n);
  Eigen::SelfAdjointEigenSolver<Mat> es(h);
  const double lo = es.eigenvalues().minCoeff();
  if (lo < 0.5) h += (0.5 - lo) * Mat::Identity(n, n);
  return h;
}

/// Copy of an invariant model with a constant metric h.
inline Model with_metric(Model m, const Mat& h) {
  m.metric.clear();
  m.metric[m.backend == Backend::spectral ? ModeVector(static_cast<std::size_t>(2 * m.n), 0) : ModeVector{}] = h;
  return m;
}

/// 2-step nilpotent invariant model: d phi^k = 0 for k < n, d phi^n a random
/// combination of phi^i ^ phi^j and phi^i ^ conj(phi^j) with i, j < n.
inline Model random_nilpotent(std::mt19937_64& rng, int n) {
  std::string text = fmt::format("kind invariant\nn {}\nd {} := ", n, n);
  bool first = true;
  auto term = [&](cplx c, char kind, int i, int j) {
    text += fmt::format("{}{:.6f}{:+.6f}i*{}({},{})", first ? "" : " + ", c.real(), c.imag(), kind, i, j);
    first = false;
  };
  for (int i = 1; i < n; ++i) {
    for (int j = 1; j < n; ++j) {
      if (i < j) term(gaussian(rng), 'e', i, j);
      term(0.5 * gaussian(rng), 'f', i, j);
    }
  }
  if (first) text += "0";
  return parse_model(text + "\n");
}

/// Spectral torus with axis modes |m| <= 1 (or the explicit list) and a
/// random Aeppli potential of total size potential_amp plus a random non-closed metric perturbation.
inline Model random_spectral(std::mt19937_64& rng, int n, double potential_amp, double metric_amp,
                             const std::string& modes = "modes axis K 1\n") {
  std::string text = fmt::format("kind spectral\nn {}\n{}", n, modes);
  auto axis_mode = [n](int axis, int sign) {
    std::string s;
    for (int a = 0; a < 2 * n; ++a) s += fmt::format("{} ", a == axis ? sign : 0);
    return s;
  };
  const Model probe = parse_model(text);
  // Split the amplitude over all terms so the shift stays well inside the cone.
  const double per_term = potential_amp / static_cast<double>(std::max<std::size_t>(1, probe.modes.size() * n));
  for (const auto& m : probe.modes) {
    bool zero = true;
    for (int v : m) zero = zero && v == 0;
    if (zero) continue;
    for (int k = 1; k <= n; ++k) {
      const cplx c = per_term * gaussian(rng);
      std::string ms;
      for (int v : m) ms += fmt::format("{} ", v);
      text += fmt::format("potential {}{} := {:.8f}{:+.8f}i\n", ms, k, c.real(), c.imag());
    }
  }
  // Constant off-diagonal metric terms are closed; add a non-constant one
  // along the first axis.
  if (metric_amp > 0.0 && n >= 2) {
    const cplx c = metric_amp * gaussian(rng);
    text += fmt::format("metric_mode {}h 1 2 := {:.8f}{:+.8f}i\n", axis_mode(0, 1), c.real(), c.imag());
  }
  return parse_model(text);
}

struct Built {
  Model model;
  std::shared_ptr<const FormComplex> complex;
  HermitianStructure metric;
};

inline Built build(const Model& m) {
  auto c = build_complex(m);
  return Built{m, c, HermitianStructure::from_model(m, c)};
}

inline double relative(double err, double scale) { return err / std::max(scale, 1e-300); }

}  // namespace hsflow::testing
