#include "hsflow/report.hpp"

#include <fmt/format.h>

namespace hsflow {

const char* version() { return HSFLOW_VERSION; }

std::string format_real(double x) {
  if (x == 0.0) return "0";
  return fmt::format("{}", x);
}

std::string format_complex(cplx z) {
  const double re = z.real() == 0.0 ? 0.0 : z.real();
  const double im = z.imag() == 0.0 ? 0.0 : z.imag();
  return fmt::format("{}{}{}i", format_real(re), std::signbit(im) ? "-" : "+", format_real(std::abs(im)));
}

namespace {

std::string opt(const std::optional<double>& x) { return x ? format_real(*x) : ""; }

std::string bidegree_label(Bidegree bd) { return fmt::format("{}{}", bd.p, bd.q); }

const char* flag(bool b) { return b ? "true" : "false"; }

}  // namespace

std::string header_text(const ReportHeader& header) {
  std::string out = fmt::format("# tool=hsflow\n# version={}\n# command={}\n# model_hash={:016x}\n", version(),
                                header.command, header.model_hash);
  for (const auto& [k, v] : header.settings) out += fmt::format("# {}={}\n", k, v);
  return out;
}

std::string cohomology_csv(const CohomologyTable& table) {
  std::string out = "p,q,dim,h_dbar,h_bc,h_a,gap_dbar,gap_bc\n";
  for (const auto& [bd, e] : table) {
    out += fmt::format("{},{},{},{},{},{},{},{}\n", bd.p, bd.q, e.dim, e.h_dbar, e.h_bc, e.h_a,
                       format_real(e.gap_dbar), format_real(e.gap_bc));
  }
  return out;
}

std::string cohomology_text(const CohomologyTable& table) {
  std::string out;
  for (const auto& [bd, e] : table) {
    out += fmt::format("h_dbar[{0},{1}]={2} h_bc[{0},{1}]={3} h_a[{0},{1}]={4} gap_dbar={5} gap_bc={6}\n", bd.p, bd.q,
                       e.h_dbar, e.h_bc, e.h_a, format_real(e.gap_dbar), format_real(e.gap_bc));
  }
  return out;
}

std::string classification_text(const MetricClassification& c) {
  std::string out = fmt::format(
      "kahler={}\nskt={}\nbalanced={}\nstrongly_gauduchon={}\nhermitian_symplectic={}\ntolerance={}\n",
      flag(c.kahler), flag(c.skt), flag(c.balanced), flag(c.strongly_gauduchon), flag(c.hermitian_symplectic),
      format_real(c.tolerance));
  for (const auto& [k, v] : c.residuals) out += fmt::format("residual.{}={}\n", k, format_real(v));
  return out;
}

std::string torsion_text(const TorsionReport& r) {
  std::string out = fmt::format(
      "rho_norm={}\nresidual_constraint={}\nresidual_closed={}\nminimality_gap={}\noracle_gap={}\n",
      format_real(r.norm), format_real(r.residual_constraint), format_real(r.residual_closed),
      format_real(r.minimality_gap), format_real(r.oracle_gap));
  const Vec& c = r.rho20.coeffs();
  for (Eigen::Index k = 0; k < c.size(); ++k) {
    if (c(k) != cplx(0.0)) out += fmt::format("rho20[{}]={}\n", k, format_complex(c(k)));
  }
  return out;
}

std::string flow_csv(const FlowTrace& trace) {
  std::string out = "iter,F,grad_norm,step,margin\n";
  for (const auto& it : trace.iterates) {
    out += fmt::format("{},{},{},{},{}\n", it.iter, format_real(it.energy), format_real(it.grad_norm),
                       format_real(it.step), format_real(it.margin));
  }
  return out;
}

std::string flow_text(const FlowTrace& trace) {
  std::string out = fmt::format("status={}\niterations={}\n", to_string(trace.status),
                                trace.iterates.empty() ? 0 : trace.iterates.back().iter);
  if (!trace.iterates.empty()) {
    out += fmt::format("F_initial={}\nF_final={}\ngrad_norm_final={}\nmargin_final={}\n",
                       format_real(trace.iterates.front().energy), format_real(trace.iterates.back().energy),
                       format_real(trace.iterates.back().grad_norm), format_real(trace.iterates.back().margin));
  }
  return out;
}

std::string kahler_text(const KahlerConstruction& k) {
  return fmt::format(
      "hypothesis_distance={}\nd_residual={}\naeppli_residual={}\nmargin={}\npositive={}\nu_min_coeff_max={}\n",
      format_real(k.hypothesis_distance), format_real(k.d_residual), format_real(k.aeppli_residual),
      format_real(k.margin), flag(k.positive),
      format_real(k.u_min.coeffs().size() ? k.u_min.coeffs().cwiseAbs().maxCoeff() : 0.0));
}

std::string family_csv(const FamilyTable& table) {
  std::string out = "t";
  if (!table.rows.empty()) {
    for (const auto& [bd, v] : table.rows.front().h_bc) out += ",h_bc_" + bidegree_label(bd);
    for (const auto& [bd, v] : table.rows.front().h_dbar) out += ",h_dbar_" + bidegree_label(bd);
  }
  out += ",infeasible,dimension_jump,rho_norm,rho_diff,criticality,criticality_diff,beta_norm,"
         "kahler_d_residual,kahler_margin,note\n";
  for (const auto& row : table.rows) {
    out += format_complex(row.t);
    for (const auto& [bd, v] : row.h_bc) out += fmt::format(",{}", v);
    for (const auto& [bd, v] : row.h_dbar) out += fmt::format(",{}", v);
    out += fmt::format(",{},{},{},{},{},{},{},{},{},{}\n", flag(row.infeasible), flag(row.dimension_jump),
                       opt(row.rho_norm), opt(row.rho_diff), opt(row.criticality), opt(row.criticality_diff),
                       opt(row.beta_norm), opt(row.kahler_d_residual), opt(row.kahler_margin), row.note);
  }
  return out;
}

}  // namespace hsflow
