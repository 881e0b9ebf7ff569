#include "hsflow/kahler.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "hsflow/errors.hpp"

namespace hsflow {

namespace {

double gram_norm(const Vec& v, const Mat& g) { return std::sqrt(std::max(0.0, v.dot(g * v).real())); }

}  // namespace

SolveResult min_ddbar_solution(const OperatorBundle& bundle, const Form& v) {
  const Bidegree bd = v.bidegree();
  if (bd.p < 1 || bd.q < 1) throw DegreeError("del delbar has no preimage space below bidegree (1,1)");
  const HermitianStructure& h = bundle.metric();
  const Bidegree src{bd.p - 1, bd.q - 1};
  const Mat a = bundle.ddbar(src);
  const double distance = weighted_lstsq(a, v.coeffs(), h.gram(src), h.gram(bd), bundle.rank_cutoff()).residual;
  const double scale = h.norm(v);
  if (distance > 1e-8 * scale) {
    throw PreconditionError(
        fmt::format("right-hand side is not in the image of del delbar: distance {:.6e}", distance), distance);
  }
  const Vec u = h.adjoint(a, src, bd) * (bundle.green_bc(bd).inverse() * v.coeffs());
  SolveResult r{Form(v.space_ptr(), src, u)};
  r.image_distance = distance;
  r.residual = gram_norm(a * u - v.coeffs(), h.gram(bd));
  return r;
}

SolveResult neumann_dbar_solution(const OperatorBundle& bundle, const Form& rho) {
  const Bidegree bd = rho.bidegree();
  if (bd.q < 1) throw DegreeError("delbar has no preimage space in bidegree (p,0)");
  const HermitianStructure& h = bundle.metric();
  const FormComplex& c = bundle.complex();
  const Bidegree src{bd.p, bd.q - 1};
  const Mat& a = c.delbar(src);
  const double distance = weighted_lstsq(a, rho.coeffs(), h.gram(src), h.gram(bd), bundle.rank_cutoff()).residual;
  const double scale = h.norm(rho);
  if (distance > 1e-8 * scale) {
    throw PreconditionError(fmt::format("form is not delbar-exact: distance {:.6e}", distance), distance);
  }
  const Mat& adj = bundle.delbar_adjoint(src);
  const Vec phi = adj * (bundle.green_dbar(bd).inverse() * rho.coeffs());
  const Vec swapped = bundle.green_dbar(src).inverse() * (adj * rho.coeffs());
  SolveResult r{Form(rho.space_ptr(), src, phi)};
  r.image_distance = distance;
  r.residual = gram_norm(a * phi - rho.coeffs(), h.gram(bd));
  r.commutation = gram_norm(phi - swapped, h.gram(src));
  return r;
}

KahlerConstruction kahler_in_class(const OperatorBundle& bundle) {
  const HermitianStructure& h = bundle.metric();
  const FormComplex& c = bundle.complex();
  const Bidegree src{1, 0};
  const Bidegree dst{2, 1};
  const Form del_omega = c.apply_del(h.omega());
  const Mat a = bundle.ddbar(src);
  const double distance = weighted_lstsq(a, del_omega.coeffs(), h.gram(src), h.gram(dst), bundle.rank_cutoff()).residual;
  if (distance > closedness_tolerance(h)) {
    throw PreconditionError(
        fmt::format("del omega is not del-delbar-exact: distance to the image {:.6e}", distance), distance);
  }
  const Vec u = -(h.adjoint(a, src, dst) * (bundle.green_bc(dst).inverse() * del_omega.coeffs()));
  KahlerConstruction k{Form(c.space_ptr(), src, u), aeppli_shift(c, h.omega(), Form(c.space_ptr(), src, u))};
  k.hypothesis_distance = distance;
  k.d_residual = std::hypot(h.norm(c.apply_del(k.omega_tilde)), h.norm(c.apply_delbar(k.omega_tilde)));
  const Form shift = c.apply_del(conjugate(k.u_min)) + c.apply_delbar(k.u_min);
  k.aeppli_residual = h.norm(k.omega_tilde - h.omega() - shift);
  k.margin = metric_margin(c, k.omega_tilde);
  k.positive = k.margin > 0.0;
  return k;
}

FamilySpec family_from_template(const ModelTemplate& tmpl, std::vector<cplx> samples) {
  FamilySpec spec;
  spec.t_samples = samples.empty() ? tmpl.t_samples : std::move(samples);
  spec.model_at = [tmpl](cplx t) { return tmpl.instantiate(t); };
  return spec;
}

namespace {

struct RowState {
  FamilyRow row;
  std::optional<HermitianStructure> metric;
  std::optional<Vec> rho;
};

RowState evaluate_row(cplx t, const Model& model, const FamilyConfig& config) {
  RowState s;
  s.row.t = t;
  auto complex = build_complex(model);
  HermitianStructure metric = HermitianStructure::from_model(model, complex);
  OperatorBundle bundle(metric, config.rank_cutoff);
  for (const auto& bd : config.bc_bidegrees) s.row.h_bc[bd] = bundle.green_bc(bd).kernel_dim();
  for (const auto& bd : config.dbar_bidegrees) s.row.h_dbar[bd] = bundle.green_dbar(bd).kernel_dim();

  if (!hs_feasible(bundle).feasible) {
    s.row.infeasible = true;
    s.row.note = "not Hermitian-symplectic";
    s.metric = metric;
    return s;
  }
  if (config.preflow && t != cplx(0.0)) {
    const EnergyFunctional ef(metric, config.rank_cutoff);
    const FlowTrace trace = ef.gradient_descent(complex->zero({1, 0}), config.flow);
    metric = ef.point(trace.final_potential).realized;
    bundle = OperatorBundle(metric, config.rank_cutoff);
  }
  const TorsionReport torsion = torsion_form(bundle);
  s.row.rho_norm = torsion.norm;
  s.rho = torsion.rho20.coeffs();

  const EnergyFunctional ef(metric, config.rank_cutoff);
  s.row.criticality = ef.criticality(ef.point(complex->zero({1, 0})));

  std::vector<std::string> notes;
  try {
    s.row.beta_norm = metric.norm(neumann_dbar_solution(bundle, torsion.rho02).solution);
  } catch (const PreconditionError&) {
    notes.emplace_back("rho02 not delbar-exact");
  }
  try {
    const KahlerConstruction k = kahler_in_class(bundle);
    s.row.kahler_d_residual = k.d_residual;
    s.row.kahler_margin = k.margin;
  } catch (const PreconditionError&) {
    notes.emplace_back("del omega not del-delbar-exact");
  }
  for (const auto& n : notes) s.row.note += (s.row.note.empty() ? "" : "; ") + n;
  s.metric = metric;
  return s;
}

}  // namespace

FamilyTable family_diagnostics(const FamilySpec& spec, const FamilyConfig& config) {
  const auto zero_it = std::find(spec.t_samples.begin(), spec.t_samples.end(), cplx(0.0));
  if (zero_it == spec.t_samples.end()) throw InputError("family needs a sample at t = 0");
  if (!spec.model_at) throw InputError("family has no model generator");

  const RowState base = evaluate_row(0.0, spec.model_at(0.0), config);
  FamilyTable table;
  for (const cplx t : spec.t_samples) {
    RowState s = t == cplx(0.0) ? base : evaluate_row(t, spec.model_at(t), config);
    FamilyRow& row = s.row;
    row.dimension_jump = row.h_bc != base.row.h_bc || row.h_dbar != base.row.h_dbar;
    if (row.dimension_jump) row.note += std::string(row.note.empty() ? "" : "; ") + "dimension jump";
    if (s.rho && base.rho && s.rho->size() == base.rho->size()) {
      row.rho_diff = gram_norm(*s.rho - *base.rho, base.metric->gram({2, 0}));
    }
    if (row.criticality && base.row.criticality) row.criticality_diff = std::abs(*row.criticality - *base.row.criticality);
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::optional<double> observed_order(const std::vector<double>& abs_t, const std::vector<double>& diffs, double floor) {
  std::vector<std::pair<double, double>> pts;
  for (std::size_t k = 0; k < abs_t.size() && k < diffs.size(); ++k) {
    if (abs_t[k] > 0.0 && diffs[k] > floor) pts.emplace_back(abs_t[k], diffs[k]);
  }
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  if (pts.size() < 2) return std::nullopt;
  double order = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    order = std::min(order, std::log(pts[k].second / pts[k + 1].second) / std::log(pts[k].first / pts[k + 1].first));
  }
  return order;
}

}  // namespace hsflow
