#include "hsflow/torsion.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>
#include <fmt/format.h>

#include "hsflow/errors.hpp"

namespace hsflow {

namespace {

Mat vstack(const Mat& a, const Mat& b) {
  Mat out(a.rows() + b.rows(), a.cols());
  out << a, b;
  return out;
}

Mat block_diag(const Mat& a, const Mat& b) {
  Mat out = Mat::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  out.topLeftCorner(a.rows(), a.cols()) = a;
  out.bottomRightCorner(b.rows(), b.cols()) = b;
  return out;
}

const Mat& gram_or_empty(const HermitianStructure& h, Bidegree bd) {
  static const Mat empty;
  return h.complex().space().valid(bd) ? h.gram(bd) : empty;
}

}  // namespace

double closedness_tolerance(const HermitianStructure& metric, double rel) {
  return rel * (1.0 + metric.norm(metric.omega()));
}

Feasibility hs_feasible(const OperatorBundle& bundle, double rel) {
  const HermitianStructure& h = bundle.metric();
  const FormComplex& c = bundle.complex();
  const Bidegree src{2, 0};
  Feasibility out{false, 0.0, c.zero(src)};
  if (!c.space().valid(src)) {
    out.residual = h.norm(c.apply_del(h.omega()));
    out.feasible = out.residual <= closedness_tolerance(h, rel);
    return out;
  }
  const Mat a = vstack(c.del(src), c.delbar(src));
  const Vec del_omega = c.del({1, 1}) * h.omega().coeffs();
  Vec b = Vec::Zero(a.rows());
  b.tail(del_omega.size()) = -del_omega;
  const Mat g_dst = block_diag(gram_or_empty(h, {3, 0}), h.gram({2, 1}));
  const LeastSquares ls = weighted_lstsq(a, b, h.gram(src), g_dst, bundle.rank_cutoff());
  out.least_squares = Form(c.space_ptr(), src, ls.x);
  out.residual = ls.residual;
  out.feasible = out.residual <= closedness_tolerance(h, rel);
  return out;
}

MetricClassification classify(const OperatorBundle& bundle, double rel) {
  const HermitianStructure& h = bundle.metric();
  const FormComplex& c = bundle.complex();
  const int n = c.n();
  const Form& omega = h.omega();
  MetricClassification out;
  out.tolerance = closedness_tolerance(h, rel);

  const Form del_omega = c.apply_del(omega);
  const Form delbar_omega = c.apply_delbar(omega);
  const double d_omega = std::hypot(h.norm(del_omega), h.norm(delbar_omega));
  const double ddbar_omega = n >= 2 ? h.norm(c.apply_del(delbar_omega)) : 0.0;

  double d_omega_n1 = 0.0;
  double sg_distance = 0.0;
  if (n >= 2) {
    const auto& grid = c.grid();
    const GridForm power = h.omega_power_sampled(n - 2);
    const GridForm del_part = wedge(sample(grid, del_omega), power);
    const GridForm delbar_part = wedge(sample(grid, delbar_omega), power);
    d_omega_n1 = std::hypot(h.norm(del_part), h.norm(delbar_part));

    // del omega_{n-1} = del omega ^ omega_{n-2} against Im delbar from (n, n-2).
    const Form target = project(grid, del_part);
    const Bidegree src{n, n - 2};
    sg_distance = weighted_lstsq(c.delbar(src), target.coeffs(), h.gram(src), h.gram(target.bidegree()),
                                 bundle.rank_cutoff())
                      .residual;
  }
  const Feasibility hs = hs_feasible(bundle, rel);

  out.residuals = {{"d_omega", d_omega},
                   {"ddbar_omega", ddbar_omega},
                   {"d_omega_n1", d_omega_n1},
                   {"sg_distance", sg_distance},
                   {"hs_residual", hs.residual}};
  out.kahler = d_omega <= out.tolerance;
  out.skt = out.kahler || ddbar_omega <= out.tolerance;
  out.balanced = out.kahler || d_omega_n1 <= out.tolerance;
  out.strongly_gauduchon = out.balanced || sg_distance <= out.tolerance;
  out.hermitian_symplectic = out.kahler || hs.feasible;
  return out;
}

Form torsion_formula(const OperatorBundle& bundle) {
  const FormComplex& c = bundle.complex();
  const Bidegree target{2, 0};
  const Vec del_omega = c.del({1, 1}) * bundle.metric().omega().coeffs();
  const Vec inner = del_omega + c.del({1, 1}) * (bundle.del_adjoint({1, 1}) * del_omega);
  const Vec rhs = bundle.delbar_adjoint(target) * inner;
  return Form(c.space_ptr(), target, -(bundle.green_bc(target).inverse() * rhs));
}

Form conjugate_torsion_formula(const OperatorBundle& bundle) {
  const FormComplex& c = bundle.complex();
  const Bidegree target{0, 2};
  const Vec delbar_omega = c.delbar({1, 1}) * bundle.metric().omega().coeffs();
  const Vec inner = delbar_omega + c.delbar({1, 1}) * (bundle.delbar_adjoint({1, 1}) * delbar_omega);
  const Vec rhs = bundle.del_adjoint(target) * inner;
  return Form(c.space_ptr(), target, -(bundle.green_bc(target).inverse() * rhs));
}

TorsionReport torsion_form(const OperatorBundle& bundle) {
  const HermitianStructure& h = bundle.metric();
  const FormComplex& c = bundle.complex();
  const Feasibility hs = hs_feasible(bundle);
  if (!hs.feasible) {
    throw NotHermitianSymplectic(
        fmt::format("not Hermitian-symplectic: constraint delbar rho = -del omega, del rho = 0 has residual {:.6e}",
                    hs.residual),
        hs.residual);
  }
  const Form rho = torsion_formula(bundle);
  TorsionReport r{rho, conjugate(rho)};
  const Form del_omega = c.apply_del(h.omega());
  r.residual_constraint = h.norm(c.apply_delbar(rho) + del_omega);
  r.residual_closed = c.space().valid({3, 0}) ? h.norm(c.apply_del(rho)) : 0.0;
  r.minimality_gap = h.norm(harmonic_part(bundle.green_bc({2, 0}), rho));
  r.norm = h.norm(rho);
  const double tol = closedness_tolerance(h);
  r.oracle_gap = h.norm(rho - hs.least_squares) / std::max(h.norm(hs.least_squares), tol);
  if (r.oracle_gap > 1e-6) {
    throw NumericalContractError(
        fmt::format("torsion formula disagrees with the least-norm oracle (relative gap {:.3e})", r.oracle_gap));
  }
  return r;
}

CompletionProjector::CompletionProjector(const FormComplex& complex, double cutoff) {
  const Bidegree src{2, 0};
  const auto dim = static_cast<Eigen::Index>(complex.dim(src));
  const Mat a = vstack(complex.del(src), complex.delbar(src));
  if (a.rows() == 0 || a.norm() == 0.0) {
    kernel_ = Mat::Identity(dim, dim);
    return;
  }
  Eigen::BDCSVD<Mat> svd(a, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  Eigen::Index rank = 0;
  for (Eigen::Index k = 0; k < s.size(); ++k)
    if (s(k) > cutoff * s(0)) ++rank;
  kernel_ = svd.matrixV().rightCols(dim - rank);
}

Form CompletionProjector::minimize(const HermitianStructure& metric, const Form& particular) const {
  if (kernel_.cols() == 0) return particular;
  const Mat& g = metric.gram({2, 0});
  const Mat gk = g * kernel_;
  const Mat small = kernel_.adjoint() * gk;
  const Vec coeffs = Eigen::LLT<Mat>(small).solve(gk.adjoint() * particular.coeffs());
  return Form(particular.space_ptr(), particular.bidegree(), particular.coeffs() - kernel_ * coeffs);
}

}  // namespace hsflow
