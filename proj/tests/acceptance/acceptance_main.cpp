// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "hsflow/energy.hpp"
#include "hsflow/errors.hpp"
#include "hsflow/kahler.hpp"
#include "oracles/oracles.hpp"
#include "support.hpp"

using namespace hsflow;
using namespace hsflow::testing;

namespace {

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      notes.push_back("failed: " + what);
    }
  }
  void note(const std::string& s) { notes.push_back(s); }
};

const char* kSmallModes3 = "mode 1 0 0 0 0 0\nmode -1 0 0 0 0 0\nmode 0 0 0 0 1 0\nmode 0 0 0 0 -1 0\n";
const char* kAxisModes4 = "mode 1 0 0 0 0 0 0 0\nmode -1 0 0 0 0 0 0 0\n";
// Diagonal modes couple the axes; along lines the energy is then not quadratic.
const char* kMixedModes3 =
    "mode 1 0 0 0 0 0\nmode -1 0 0 0 0 0\nmode 0 0 0 0 1 0\nmode 0 0 0 0 -1 0\nmode 1 0 0 0 1 0\nmode -1 0 0 0 -1 0\n"
    "mode 0 1 0 1 0 0\nmode 0 -1 0 -1 0 0\n";
const char* kMixedModes4 =
    "mode 1 0 0 0 0 0 0 0\nmode -1 0 0 0 0 0 0 0\nmode 0 0 0 0 0 1 0 0\nmode 0 0 0 0 0 -1 0 0\n"
    "mode 1 0 0 0 0 1 0 0\nmode -1 0 0 0 0 -1 0 0\n";

std::vector<Model> builtin_models() {
  std::vector<Model> out{load_model(model_path("flat_torus.model")), iwasawa(), spectral_torus()};
  for (const char* fam : {"torus_family.model", "jump_family.model"}) {
    const ModelTemplate tmpl = load_model_template(model_path(fam));
    const FamilySpec spec = family_from_template(tmpl);
    for (const cplx t : spec.t_samples) out.push_back(spec.model_at(t));
  }
  return out;
}

Built kahler_base(std::mt19937_64& rng, int n, const std::string& modes) {
  return build(with_metric(random_spectral(rng, n, 0.0, 0.0, modes), random_hermitian_metric(rng, n)));
}

Form scaled(const Form& u, double amp) { return u * cplx(amp / u.coeff_norm()); }

Form single_mode_potential(std::mt19937_64& rng, const FormComplex& c, std::size_t mode, double amp) {
  Vec coeffs = Vec::Zero(static_cast<Eigen::Index>(c.dim({1, 0})));
  for (std::size_t k = 0; k < c.dim({1, 0}); ++k)
    if (c.space().basis({1, 0}, k).mode == mode) coeffs(static_cast<Eigen::Index>(k)) = gaussian(rng);
  return Form(c.space_ptr(), {1, 0}, coeffs * (amp / coeffs.norm()));
}

std::size_t random_nonzero_mode(std::mt19937_64& rng, const FormComplex& c) {
  const auto& modes = c.space().modes();
  for (;;) {
    const std::size_t m = rng() % modes.size();
    if (m != modes.zero()) return m;
  }
}

Form constant_10(const FormComplex& c, cplx value) {
  return Form::basis_element(c.space_ptr(), {1, 0}, c.space().modes().zero() * static_cast<std::size_t>(c.n()), value);
}

double d_norm(const HermitianStructure& h, const Form& omega) {
  const FormComplex& c = h.complex();
  return std::hypot(h.norm(c.apply_del(omega)), h.norm(c.apply_delbar(omega)));
}

Form primitive_part(const HermitianStructure& h, const Form& u) {
  const Bidegree bd = u.bidegree();
  if (bd.p == 0 || bd.q == 0) return u;
  const Mat lstar = h.lefschetz_adjoint({bd.p - 1, bd.q - 1});
  const Mat l = h.lefschetz({bd.p - 1, bd.q - 1});
  const Vec y = (lstar * l).completeOrthogonalDecomposition().solve(lstar * u.coeffs());
  return Form(u.space_ptr(), bd, u.coeffs() - l * y);
}

// ---------------------------------------------------------------------------

Outcome complex_identities() {
  Outcome o;
  double worst = 0.0;
  for (const Model& m : builtin_models()) worst = std::max(worst, identity_defect(*build_complex(m)));
  std::mt19937_64 rng(101);
  for (int k = 0; k < 100; ++k) {
    // operators do not depend on the metric, but every sample carries one
    const Model m = k % 2 ? with_metric(random_nilpotent(rng, 2 + k % 3), random_hermitian_metric(rng, 2 + k % 3))
                          : random_spectral(rng, 2, 0.05, 0.05);
    const Built b = build(m);
    worst = std::max(worst, identity_defect(*b.complex));
  }
  o.require(worst <= 1e-12, "identity defect");
  o.note(fmt::format("max entry {:.3g}", worst));
  return o;
}

Outcome hodge_star() {
  Outcome o;
  std::mt19937_64 rng(102);
  std::vector<Built> cases;
  for (int n : {2, 3, 4}) cases.push_back(build(with_metric(random_nilpotent(rng, n), random_hermitian_metric(rng, n))));
  cases.push_back(build(random_spectral(rng, 2, 0.05, 0.05)));
  cases.push_back(build(spectral_torus()));

  double omega_err = 0.0;
  for (const Built& b : cases) {
    const int n = b.metric.n();
    for (int k = 0; k <= n; ++k) {
      const GridForm lhs = b.metric.hodge_star(b.metric.omega_power_sampled(k));
      const GridForm rhs = b.metric.omega_power_sampled(n - k);
      omega_err = std::max(omega_err, b.metric.norm(lhs + cplx(-1.0) * rhs) / b.metric.norm(rhs));
    }
  }
  o.require(omega_err <= 1e-10, "star omega_k = omega_{n-k}");

  double prim_err = 0.0;
  int prim_count = 0;
  while (prim_count < 50) {
    const Built& b = cases[static_cast<std::size_t>(1 + prim_count % 2)];  // invariant n = 3, 4
    const HermitianStructure& h = b.metric;
    const int n = h.n();
    const int p = static_cast<int>(rng() % static_cast<unsigned>(n + 1));
    const int q = static_cast<int>(rng() % static_cast<unsigned>(n - p + 1));
    const Form u = primitive_part(h, random_form(rng, *b.complex, {p, q}));
    if (u.coeff_norm() < 1e-8) continue;
    const int k = p + q;
    const double sign = ((k * k + k) / 2) % 2 ? -1.0 : 1.0;
    cplx ipq = 1.0;
    for (int j = 0; j < std::abs(p - q); ++j) ipq *= p > q ? cplx(0, 1) : cplx(0, -1);
    Form power = Form::basis_element(b.complex->space_ptr(), {0, 0}, 0);
    double fact = 1.0;
    for (int j = 0; j < n - k; ++j) {
      power = wedge(power, h.omega());
      fact *= j + 1;
    }
    const Form rhs = wedge(power, u) * (sign * ipq / fact);
    const Form lhs = h.hodge_star(u);
    prim_err = std::max(prim_err, (lhs - rhs).coeff_norm() / lhs.coeff_norm());
    ++prim_count;
  }
  o.require(prim_err <= 1e-8, "primitive formula");

  double starstar_err = 0.0;
  for (std::size_t c = 0; c < 3; ++c) {
    const Built& b = cases[c];
    const int n = b.metric.n();
    for (int p = 0; p <= n; ++p)
      for (int q = 0; q <= n; ++q) {
        if ((p + q) % 2 == 0) continue;
        const Form u = random_form(rng, *b.complex, {p, q});
        const Form back = -b.metric.hodge_star(b.metric.hodge_star(u));
        starstar_err = std::max(starstar_err, (back - u).coeff_norm() / u.coeff_norm());
      }
  }
  o.require(starstar_err <= 1e-12, "-star star = id on odd degrees");
  o.note(fmt::format("omega powers {:.3g}, primitive ({} forms) {:.3g}, star star {:.3g}", omega_err, prim_count,
                     prim_err, starstar_err));
  return o;
}

Outcome adjoints_and_decompositions() {
  Outcome o;
  std::mt19937_64 rng(103);
  std::vector<Built> cases;
  cases.push_back(build(with_metric(iwasawa(), random_hermitian_metric(rng, 3))));
  cases.push_back(build(with_metric(random_nilpotent(rng, 3), random_hermitian_metric(rng, 3))));
  cases.push_back(build(random_spectral(rng, 2, 0.05, 0.05)));
  std::vector<OperatorBundle> bundles;
  for (const Built& b : cases) bundles.emplace_back(b.metric);

  double adj_err = 0.0;
  for (int pair = 0; pair < 200; ++pair) {
    const std::size_t which = static_cast<std::size_t>(pair) % cases.size();
    const Built& b = cases[which];
    const OperatorBundle& ops = bundles[which];
    const int n = b.metric.n();
    const bool del = pair % 2 == 0;
    const int p = static_cast<int>(rng() % static_cast<unsigned>(n));
    const int q = static_cast<int>(rng() % static_cast<unsigned>(n + 1));
    const Bidegree src = del ? Bidegree{p, q} : Bidegree{q, p};
    const Bidegree dst = del ? Bidegree{p + 1, q} : Bidegree{q, p + 1};
    const Form u = random_form(rng, *b.complex, src);
    const Form v = random_form(rng, *b.complex, dst);
    const Form au = del ? b.complex->apply_del(u) : b.complex->apply_delbar(u);
    const Mat& star = del ? ops.del_adjoint(src) : ops.delbar_adjoint(src);
    const Form astar_v(u.space_ptr(), src, star * v.coeffs());
    const cplx lhs = b.metric.inner(au, v);
    const cplx rhs = b.metric.inner(u, astar_v);
    adj_err = std::max(adj_err, std::abs(lhs - rhs) / std::max(std::abs(lhs), b.metric.norm(au) * b.metric.norm(v)));
  }
  o.require(adj_err <= 1e-10, "adjoint identity");

  double decomp_err = 0.0;
  double green_err = 0.0;
  for (std::size_t which = 0; which < cases.size(); ++which) {
    const Built& b = cases[which];
    const OperatorBundle& ops = bundles[which];
    const HermitianStructure& h = b.metric;
    const FormComplex& c = *b.complex;
    const int n = h.n();
    for (int p = 0; p <= n; ++p)
      for (int q = 0; q <= n; ++q) {
        const Bidegree bd{p, q};
        const Form gamma = random_form(rng, c, bd);
        const double scale = h.norm(gamma);
        for (bool bc : {false, true}) {
          const GreenOperator& g = bc ? ops.green_bc(bd) : ops.green_dbar(bd);
          const Mat& lap = bc ? ops.laplacian_bc(bd) : ops.laplacian_dbar(bd);
          const Form harm = harmonic_part(g, gamma);
          const Form inv = apply_green(g, gamma);
          const Form lap_inv(gamma.space_ptr(), bd, lap * inv.coeffs());
          green_err = std::max(green_err, h.norm(lap_inv - (gamma - harm)) / scale);
        }
        // delbar: gamma = H + delbar delbar* G gamma + delbar* delbar G gamma, mutually orthogonal
        const Form inv = apply_green(ops.green_dbar(bd), gamma);
        const Form harm = harmonic_part(ops.green_dbar(bd), gamma);
        Form exact = c.zero(bd);
        Form coexact = c.zero(bd);
        if (q > 0) {
          const Form pre(gamma.space_ptr(), {p, q - 1}, ops.delbar_adjoint({p, q - 1}) * inv.coeffs());
          exact = c.apply_delbar(pre);
        }
        if (q < n) {
          const Form up = c.apply_delbar(inv);
          coexact = Form(gamma.space_ptr(), bd, ops.delbar_adjoint(bd) * up.coeffs());
        }
        decomp_err = std::max(decomp_err, h.norm(gamma - harm - exact - coexact) / scale);
        decomp_err = std::max(decomp_err, std::abs(h.inner(exact, coexact)) / (scale * scale));
        decomp_err = std::max(decomp_err, std::abs(h.inner(harm, exact + coexact)) / (scale * scale));
        // Bott-Chern: gamma - H = Im(del delbar) part + (Im del* + Im delbar*) part
        if (p > 0 && q > 0) {
          const Bidegree low{p - 1, q - 1};
          const Mat a = ops.ddbar(low);
          const Mat a_star = h.adjoint(a, low, bd);
          const Form inv_bc = apply_green(ops.green_bc(bd), gamma);
          const Form harm_bc = harmonic_part(ops.green_bc(bd), gamma);
          const Form ddbar_part(gamma.space_ptr(), bd, a * (a_star * inv_bc.coeffs()));
          const Form rest = gamma - harm_bc - ddbar_part;
          decomp_err = std::max(decomp_err, std::abs(h.inner(ddbar_part, rest)) / (scale * scale));
          const Form probe(gamma.space_ptr(), bd, a * random_vec(rng, a.cols()));
          decomp_err = std::max(decomp_err, std::abs(h.inner(rest, probe)) / (scale * h.norm(probe)));
          decomp_err = std::max(decomp_err, std::abs(h.inner(harm_bc, ddbar_part + rest)) / (scale * scale));
        }
      }
  }
  o.require(decomp_err <= 1e-8, "orthogonal decompositions");
  o.require(green_err <= 1e-8, "Green property");
  o.note(fmt::format("adjoint {:.3g} (200 pairs), decomposition {:.3g}, Green {:.3g}", adj_err, decomp_err, green_err));
  return o;
}

Outcome cohomology() {
  Outcome o;
  {
    const Built b = build(load_model(model_path("flat_torus.model")));
    const CohomologyTable t = cohomology_table(OperatorBundle(b.metric));
    o.require(t.at({0, 2}).h_bc == 3, "flat torus h_BC^{0,2} = 3");
    o.require(t.at({1, 1}).h_a == 9, "flat torus h_A^{1,1} = 9");
  }
  const Built iw = build(iwasawa());
  const CohomologyEntry oracle = rank_oracle(*iw.complex, {0, 1});
  o.require(oracle.h_dbar == 2, "rank oracle Iwasawa h_dbar^{0,1} = 2");
  o.require(cohomology_dims(OperatorBundle(iw.metric), {0, 1}).h_dbar == oracle.h_dbar, "Iwasawa h_dbar^{0,1}");

  std::size_t compared = 0;
  std::size_t mismatches = 0;
  std::vector<Model> models = builtin_models();
  std::mt19937_64 rng(104);
  for (int k = 0; k < 4; ++k) models.push_back(with_metric(random_nilpotent(rng, 3), random_hermitian_metric(rng, 3)));
  for (const Model& m : models) {
    const Built b = build(m);
    try {
      const CohomologyTable t = cohomology_table(OperatorBundle(b.metric));
      for (const auto& [bd, e] : t) {
        const CohomologyEntry r = rank_oracle(*b.complex, bd);
        ++compared;
        if (e.h_dbar != r.h_dbar || e.h_bc != r.h_bc || e.h_a != r.h_a) ++mismatches;
      }
    } catch (const NumericalContractError& e) {
      o.note(e.what());
      ++mismatches;
    }
  }
  o.require(mismatches == 0, "Laplacian kernels agree with quotient ranks");
  o.note(fmt::format("{} bidegrees over {} models, {} mismatches", compared, models.size(), mismatches));
  return o;
}

Outcome torsion() {
  Outcome o;
  std::mt19937_64 rng(105);
  const Model shape = spectral_torus();
  double worst_constraint = 0.0;
  double worst_oracle = 0.0;
  int count = 0;
  for (int k = 0; k < 20; ++k) {
    const Model m = with_metric(random_spectral(rng, 3, 0.06, 0.0, "modes axis K 1\n"), random_hermitian_metric(rng, 3));
    const Built b = build(m);
    const OperatorBundle ops(b.metric);
    if (!classify(ops).hermitian_symplectic || classify(ops).kahler) {
      o.require(false, "sample is not a non-Kahler H-s metric");
      continue;
    }
    const TorsionReport r = torsion_form(ops);
    const double scale = closedness_tolerance(b.metric) / 1e-8;
    worst_constraint = std::max({worst_constraint, r.residual_constraint / scale, r.residual_closed / scale});
    const Form oracle(b.complex->space_ptr(), {2, 0}, torsion_oracle(b.metric));
    worst_oracle = std::max(worst_oracle, b.metric.norm(r.rho20 - oracle) / b.metric.norm(oracle));
    ++count;
  }
  o.require(count >= 20, "at least 20 metrics");
  o.require(worst_constraint <= 1e-8, "constraint residuals");
  o.require(worst_oracle <= 1e-6, "least-norm oracle");
  o.note(fmt::format("{} metrics with {} modes, residual/scale {:.3g}, oracle gap {:.3g}", count,
                     build_complex(shape)->space().modes().size(), worst_constraint, worst_oracle));
  return o;
}

Outcome differential() {
  Outcome o;
  std::mt19937_64 rng(106);
  double worst_best = 0.0;
  double worst_order = 1e300;
  for (int pair = 0; pair < 20; ++pair) {
    const int n = pair % 5 == 4 ? 4 : 3;
    const Built b = kahler_base(rng, n, n == 3 ? kMixedModes3 : kMixedModes4);
    const EnergyFunctional f(b.metric);
    const Form u0 = scaled(random_form(rng, *b.complex, {1, 0}), 0.05);
    const Form dir = scaled(random_form(rng, *b.complex, {1, 0}), 1.0);
    const AeppliPoint pt = f.point(u0);
    const double analytic = f.differential(pt, dir);
    std::vector<double> errs;
    double best = 1e300;
    for (double s : {1e-2, 1e-3, 1e-4, 1e-5, 1e-6}) {
      const double fd = (f.energy(f.point(u0 + dir * cplx(s))) - f.energy(f.point(u0 - dir * cplx(s)))) / (2 * s);
      errs.push_back(std::abs(fd - analytic));
      best = std::min(best, errs.back() / std::abs(analytic));
    }
    worst_best = std::max(worst_best, best);
    worst_order = std::min(worst_order, std::log10(errs[0] / errs[1]));
  }
  o.require(worst_best <= 1e-4, "finite differences at best step");
  o.require(worst_order >= 1.9 && worst_order <= 2.1, "second-order step convergence");

  double kahler_worst = 0.0;
  for (int k = 0; k < 4; ++k) {
    const Built b = kahler_base(rng, 3, k < 2 ? kSmallModes3 : "modes axis K 1\n");
    const EnergyFunctional f(b.metric);
    const Form u = k % 2 ? constant_10(*b.complex, gaussian(rng)) : b.complex->zero({1, 0});
    kahler_worst = std::max(kahler_worst, f.criticality(f.point(u)));
  }
  o.require(kahler_worst <= 1e-10, "differential at Kahler points");
  o.note(fmt::format("worst best-step error {:.3g}, min observed order {:.3f}, Kahler criticality {:.3g}", worst_best,
                     worst_order, kahler_worst));
  return o;
}

Outcome special_formula() {
  Outcome o;
  std::mt19937_64 rng(107);
  double worst = 0.0;
  double second_term = 0.0;
  for (int k = 0; k < 20; ++k) {
    const int n = k % 5 == 4 ? 4 : 3;
    const Built b = kahler_base(rng, n, n == 3 ? kSmallModes3 : kAxisModes4);
    const EnergyFunctional f(b.metric);
    const Form xi = single_mode_potential(rng, *b.complex, random_nonzero_mode(rng, *b.complex), 0.05);
    const AeppliPoint pt = f.point(xi);
    const auto [res, tol] = f.special_residual(pt, xi);
    o.require(res <= tol, "rho = del xi on the sample");
    const double general = f.differential(pt, xi);
    worst = std::max(worst, std::abs(general - f.differential_special(pt, xi)) / std::abs(general));
    if (n == 3) {
      // second term = general formula minus -2 Re <<xi, delbar* omega>>
      const OperatorBundle ops(pt.realized);
      const Form dstar(xi.space_ptr(), {1, 0}, ops.delbar_adjoint({1, 0}) * pt.realized.omega().coeffs());
      const double first = -2.0 * pt.realized.inner(xi, dstar).real();
      second_term = std::max(second_term, std::abs(general - first));
    }
  }
  o.require(worst <= 1e-8, "special vs general formula");
  o.require(second_term <= 1e-12, "n = 3 second term");
  o.note(fmt::format("20 points, relative gap {:.3g}, n=3 second term {:.3g}", worst, second_term));
  return o;
}

Outcome flow() {
  Outcome o;
  const Built b = build(spectral_torus());
  const EnergyFunctional f(b.metric);
  const std::size_t modes = b.complex->space().modes().size();
  o.require(modes == 13, "13-mode set");
  o.require(b.metric.margin() >= 0.5, "initial margin >= 0.5");
  FlowOptions opts;
  opts.max_iters = 500;
  const FlowTrace trace = f.gradient_descent(b.complex->zero({1, 0}), opts);
  const AeppliPoint end = f.point(trace.final_potential);
  const double f_final = trace.iterates.back().energy;
  const double d_final = d_norm(end.realized, end.realized.omega());
  const int iters = trace.iterates.back().iter;
  o.require(f_final <= 1e-6, "final energy");
  o.require(d_final <= 1e-4, "final |d omega|");
  o.require(iters <= 500, "iteration budget");

  bool monotone = true;
  auto check_monotone = [&](const FlowTrace& t) {
    for (std::size_t k = 1; k < t.iterates.size(); ++k)
      monotone = monotone && t.iterates[k].energy <= t.iterates[k - 1].energy;
  };
  check_monotone(trace);
  std::mt19937_64 rng(108);
  for (int k = 0; k < 3; ++k) {
    const Built kb = kahler_base(rng, 3, kSmallModes3);
    const EnergyFunctional g(kb.metric);
    FlowOptions short_opts;
    short_opts.max_iters = 60;
    check_monotone(g.gradient_descent(scaled(random_form(rng, *kb.complex, {1, 0}), 0.05), short_opts));
  }
  o.require(monotone, "monotone energy");
  o.note(fmt::format("status {}, {} iterations, F {:.3g} -> {:.3g}, |d omega| {:.3g}, margin {:.4f}",
                     to_string(trace.status), iters, trace.iterates.front().energy, f_final, d_final,
                     end.positivity_margin));
  return o;
}

Outcome kahler_family() {
  Outcome o;
  const ModelTemplate tmpl = load_model_template(model_path("torus_family.model"));
  const FamilySpec spec = family_from_template(tmpl);
  double worst_d = 0.0;
  double worst_class = 0.0;
  double threshold = 0.0;
  bool all_positive_so_far = true;
  std::vector<std::pair<double, bool>> margins;
  for (const cplx t : spec.t_samples) {
    const Built b = build(spec.model_at(t));
    const KahlerConstruction k = kahler_in_class(OperatorBundle(b.metric));
    worst_d = std::max(worst_d, k.d_residual);
    const Form shift = b.complex->apply_del(conjugate(k.u_min)) + b.complex->apply_delbar(k.u_min);
    worst_class = std::max(worst_class, b.metric.norm(k.omega_tilde - b.metric.omega() - shift));
    if (t == cplx(0.0)) {
      o.require(k.u_min.coeff_norm() == 0.0, "u_min = 0 at t = 0");
      o.require((k.omega_tilde - b.metric.omega()).coeff_norm() == 0.0, "omega_tilde_0 = omega_0");
    }
    margins.emplace_back(std::abs(t), k.positive);
  }
  std::sort(margins.begin(), margins.end());
  for (const auto& [abs_t, positive] : margins) {
    all_positive_so_far = all_positive_so_far && positive;
    if (all_positive_so_far) threshold = abs_t;
  }
  o.require(worst_d <= 1e-8, "d omega_tilde");
  o.require(worst_class <= 1e-8, "same Aeppli class");
  o.require(threshold > 0.0, "positive margin below a threshold");
  o.note(fmt::format("{} samples, |d omega_tilde| {:.3g}, class residual {:.3g}, positive for |t| <= {}",
                     spec.t_samples.size(), worst_d, worst_class, threshold));
  return o;
}

Outcome closedness_diagnostics() {
  Outcome o;
  const ModelTemplate tmpl = load_model_template(model_path("torus_family.model"));
  const FamilySpec spec = family_from_template(tmpl);
  const FamilyTable table = family_diagnostics(spec);
  std::vector<double> ts, diffs;
  bool constant_dims = true;
  for (const FamilyRow& row : table.rows) {
    constant_dims = constant_dims && !row.dimension_jump && !row.infeasible;
    if (row.t != cplx(0.0) && row.rho_diff) {
      ts.push_back(std::abs(row.t));
      diffs.push_back(*row.rho_diff);
    }
  }
  o.require(constant_dims, "constant kernel dimensions");
  const auto order = observed_order(ts, diffs);
  // the differences halve exactly; allow roundoff in the log ratios
  o.require(order.has_value() && *order >= 1.0 - 1e-9, "observed order >= 1");

  FamilyConfig pre;
  pre.preflow = true;
  const FamilyTable flowed = family_diagnostics(spec, pre);
  double base_crit = 0.0;
  double max_other = 0.0;
  for (const FamilyRow& row : flowed.rows) {
    if (!row.criticality) continue;
    if (row.t == cplx(0.0))
      base_crit = *row.criticality;
    else
      max_other = std::max(max_other, *row.criticality);
  }
  o.require(base_crit <= max_other + 1e-6, "criticality at t = 0 bounded by the flowed samples");

  const FamilyTable jump = family_diagnostics(family_from_template(load_model_template(model_path("jump_family.model"))));
  std::size_t flagged = 0;
  for (const FamilyRow& row : jump.rows) flagged += row.dimension_jump && row.note.find("dimension jump") != std::string::npos;
  o.require(flagged > 0, "dimension-jumping family flagged");
  o.note(fmt::format("order {}, criticality t=0 {:.3g} vs max flowed {:.3g}, {} jump rows flagged",
                     order ? fmt::format("{:.17g}", *order) : std::string("n/a"), base_crit, max_other, flagged));
  return o;
}

Outcome corollary() {
  Outcome o;
  std::mt19937_64 rng(109);
  // Kahler points, flat and non-flat (omega_0 + i del delbar g), with constant xi
  const Built b = kahler_base(rng, 3, "modes axis K 1\n");
  const EnergyFunctional f(b.metric);
  const FormComplex& c = *b.complex;
  Vec g = Vec::Zero(static_cast<Eigen::Index>(c.dim({0, 0})));
  const std::size_t m = random_nonzero_mode(rng, c);
  g(static_cast<Eigen::Index>(m)) = 0.02;
  const Form g0(c.space_ptr(), {0, 0}, g);
  const Form real_g = g0 + conjugate(g0);
  int derived = 0;
  for (const Form& u : {c.zero({1, 0}), c.apply_del(real_g) * cplx(0, -0.5)}) {
    const AeppliPoint pt = f.point(u);
    const CorollaryReport r = f.corollary_check(pt, constant_10(c, cplx(0.3, -0.1)));
    o.require(r.dbar_xi.verdict == PositivityVerdict::semi_positive || r.dbar_xi.verdict == PositivityVerdict::positive,
              "semi-positive input");
    o.require(r.differential_vanishes, "vanishing differential");
    o.require(r.derives_rho_zero && r.conclusion == "Kahler", "derives rho = 0");
    derived += r.derives_rho_zero;
  }
  // indefinite: xi = i del g, delbar xi = -i del delbar g
  const Form xi = c.apply_del(real_g) * cplx(0, 1);
  const CorollaryReport r = f.corollary_check(f.point(c.zero({1, 0})), xi);
  o.require(r.dbar_xi.verdict == PositivityVerdict::refuted && !r.dbar_xi.witness.empty(), "refutation witness");
  double pairing = 0.0;
  if (!r.dbar_xi.witness.empty()) {
    pairing = tuple_pairing(sample(c.grid(), c.apply_delbar(xi)), r.dbar_xi.witness_node, r.dbar_xi.witness).real();
  }
  o.require(pairing < 0.0, "witness pairing is negative");
  o.require(!r.derives_rho_zero, "no conclusion from an indefinite input");
  o.note(fmt::format("{} Kahler derivations, witness pairing {:.3g}", derived, pairing));
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
    double budget_s;  // 0: no runtime bound
  };
  const std::vector<Criterion> criteria{
      {1, "complex identities", complex_identities, 5.0},
      {2, "Hodge star", hodge_star, 0.0},
      {3, "adjoints and decompositions", adjoints_and_decompositions, 0.0},
      {4, "cohomology tables", cohomology, 0.0},
      {5, "torsion formula", torsion, 60.0},
      {6, "differential of the energy", differential, 0.0},
      {7, "specialized differential", special_formula, 0.0},
      {8, "flow to Kahler", flow, 300.0},
      {9, "Kahler construction", kahler_family, 0.0},
      {10, "closedness diagnostics", closedness_diagnostics, 0.0},
      {11, "corollary checker", corollary, 10.0},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.notes.push_back(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_s > 0.0 && secs >= c.budget_s) o.require(false, fmt::format("runtime {:.1f}s over {}s", secs, c.budget_s));
    std::string detail;
    for (const auto& n : o.notes) detail += (detail.empty() ? "" : "; ") + n;
    std::printf("%s criterion %d (%s): %s [%.2fs]\n", o.pass ? "PASS" : "FAIL", c.id, c.name, detail.c_str(), secs);
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
