#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hsflow/energy.hpp"
#include "hsflow/hodge.hpp"
#include "hsflow/model.hpp"

namespace hsflow {

struct SolveResult {
  Form solution;
  double residual = 0.0;         // ||A solution - rhs||
  double image_distance = 0.0;   // distance of rhs to the image of A
  double commutation = 0.0;      // Neumann only: ||delbar* G v - G delbar* v||
};

/// u = (del delbar)* G_BC v, the least-norm solution of del delbar u = v.
/// Throws PreconditionError when v is farther than 1e-8 ||v|| from the image.
SolveResult min_ddbar_solution(const OperatorBundle& bundle, const Form& v);

/// phi = delbar* G_dbar rho, the least-norm solution of delbar phi = rho.
SolveResult neumann_dbar_solution(const OperatorBundle& bundle, const Form& rho);

struct KahlerConstruction {
  Form u_min;
  Form omega_tilde;
  double hypothesis_distance = 0.0;  // distance of del omega to Im(del delbar)
  double d_residual = 0.0;           // ||d omega_tilde||
  double aeppli_residual = 0.0;      // ||omega_tilde - omega - del conj(u) - delbar u||
  double margin = 0.0;               // smallest eigenvalue of omega_tilde
  bool positive = false;
};

/// omega_tilde = omega + del conj(u_min) + delbar u_min with
/// u_min = -(del delbar)* G_BC del omega. Throws PreconditionError naming the
/// distance when del omega is not del-delbar-exact.
KahlerConstruction kahler_in_class(const OperatorBundle& bundle);

struct FamilySpec {
  std::vector<cplx> t_samples;
  std::function<Model(cplx)> model_at;
};

/// Family from a template whose coefficients are polynomials in t. An empty
/// sample list falls back to the template's own t_samples.
FamilySpec family_from_template(const ModelTemplate& tmpl, std::vector<cplx> samples = {});

struct FamilyConfig {
  std::vector<Bidegree> bc_bidegrees{{0, 2}, {2, 1}};
  std::vector<Bidegree> dbar_bidegrees{{0, 1}, {0, 2}};
  /// Replace every sampled metric with t != 0 by the end point of its flow.
  bool preflow = false;
  FlowOptions flow;
  double rank_cutoff = kDefaultRankCutoff;
};

struct FamilyRow {
  cplx t;
  std::map<Bidegree, std::size_t> h_bc;
  std::map<Bidegree, std::size_t> h_dbar;
  bool infeasible = false;
  bool dimension_jump = false;
  std::optional<double> rho_norm;
  std::optional<double> rho_diff;  // ||rho_t - rho_0|| in the t = 0 metric
  std::optional<double> criticality;
  std::optional<double> criticality_diff;
  std::optional<double> beta_norm;  // least-norm delbar-primitive of rho^{0,2}
  std::optional<double> kahler_d_residual;
  std::optional<double> kahler_margin;
  std::string note;
};

struct FamilyTable {
  std::vector<FamilyRow> rows;
};

/// Requires a sample at t = 0. Rows whose metric is not Hermitian-symplectic
/// are flagged infeasible; rows whose cohomology differs from t = 0 are
/// flagged as dimension jumps.
FamilyTable family_diagnostics(const FamilySpec& spec, const FamilyConfig& config = {});

/// Smallest local order log(d_k / d_{k+1}) / log(|t_k| / |t_{k+1}|) over
/// successive samples with d above the roundoff floor; nullopt when fewer
/// than two usable samples remain.
std::optional<double> observed_order(const std::vector<double>& abs_t, const std::vector<double>& diffs,
                                     double floor = 1e-13);

}  // namespace hsflow
