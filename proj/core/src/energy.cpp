#include "hsflow/energy.hpp"

#include <cmath>

#include <Eigen/Cholesky>
#include <fmt/format.h>

#include "hsflow/errors.hpp"

namespace hsflow {

const char* to_string(FlowStatus s) {
  switch (s) {
    case FlowStatus::converged: return "converged";
    case FlowStatus::stalled: return "stalled";
    case FlowStatus::positivity_blocked: return "positivity_blocked";
    case FlowStatus::max_iters: return "max_iters";
  }
  return "?";
}

namespace {

Mat real_form(const Mat& g) {
  const Eigen::Index d = g.rows();
  Mat out(2 * d, 2 * d);
  const Mat a = g.real().cast<cplx>();
  const Mat b = g.imag().cast<cplx>();
  out << a, -b, b, a;
  return out;
}

Eigen::VectorXd real_coords(const Eigen::RowVectorXcd& l) {
  Eigen::VectorXd out(2 * l.size());
  out << l.real().transpose(), -l.imag().transpose();
  return out;
}

}  // namespace

EnergyFunctional::EnergyFunctional(HermitianStructure base, double rank_cutoff)
    : base_(std::move(base)),
      cutoff_(rank_cutoff),
      rho_base_(base_.complex().zero({2, 0})),
      projector_(base_.complex(), rank_cutoff) {
  if (base_.n() < 2) throw DegreeError("the energy functional needs n >= 2");
  const Feasibility hs = hs_feasible(OperatorBundle(base_, cutoff_));
  if (!hs.feasible) {
    throw NotHermitianSymplectic(
        fmt::format("base metric is not Hermitian-symplectic (feasibility residual {:.6e})", hs.residual), hs.residual);
  }
  rho_base_ = hs.least_squares;
  real_gram_ = real_form(base_.gram({1, 0}));
}

AeppliPoint EnergyFunctional::point(const Form& u) const {
  const FormComplex& c = complex();
  HermitianStructure realized = base_.with_omega(aeppli_shift(c, base_.omega(), u));
  const double margin = realized.margin();
  Form rho = projector_.minimize(realized, rho_base_ + c.apply_del(u));
  return AeppliPoint{base_, u, std::move(realized), margin, std::move(rho)};
}

double EnergyFunctional::energy(const AeppliPoint& pt) const {
  const double r = pt.realized.norm(pt.rho);
  return r * r;
}

GridForm EnergyFunctional::rho_product(const AeppliPoint& pt) const {
  const GridForm r = sample(complex().grid(), pt.rho);
  return wedge(r, conjugate(r));
}

Eigen::RowVectorXcd EnergyFunctional::differential_functional(const AeppliPoint& pt) const {
  const FormComplex& c = complex();
  const HermitianStructure& h = pt.realized;
  const Vec& w = h.omega().coeffs();
  Eigen::RowVectorXcd l = -2.0 * (w.adjoint() * h.gram({1, 1}) * c.delbar({1, 0}));
  const int n = c.n();
  if (n >= 4) {
    const auto& grid = c.grid();
    const GridForm dbar_omega = sample(grid, c.apply_delbar(h.omega()));
    const GridForm theta = wedge(wedge(rho_product(pt), dbar_omega), h.omega_power_sampled(n - 4));
    l += 2.0 * pairing_functional(grid, theta, {1, 0});
  }
  return l;
}

double EnergyFunctional::differential(const AeppliPoint& pt, const Form& dir) const {
  return (differential_functional(pt) * dir.coeffs())(0).real();
}

Eigen::RowVectorXcd EnergyFunctional::envelope_functional(const AeppliPoint& pt) const {
  const FormComplex& c = complex();
  const HermitianStructure& h = pt.realized;
  Eigen::RowVectorXcd l = 2.0 * (pt.rho.coeffs().adjoint() * h.gram({2, 0}) * c.del({1, 0}));
  const int n = c.n();
  if (n >= 3) {
    const GridForm theta = wedge(rho_product(pt), h.omega_power_sampled(n - 3));
    l += 2.0 * pairing_functional(c.grid(), theta, {1, 1}) * c.delbar({1, 0});
  }
  return l;
}

double EnergyFunctional::envelope_differential(const AeppliPoint& pt, const Form& dir) const {
  return (envelope_functional(pt) * dir.coeffs())(0).real();
}

std::pair<double, double> EnergyFunctional::special_residual(const AeppliPoint& pt, const Form& xi) const {
  const double residual = pt.realized.norm(pt.rho - complex().apply_del(xi));
  return {residual, 1e-8 * (1.0 + pt.realized.norm(pt.rho))};
}

double EnergyFunctional::special_integral(const AeppliPoint& pt, const Form& xi) const {
  const int n = complex().n();
  if (n < 3) return 0.0;
  const auto& grid = complex().grid();
  const GridForm dbar_xi = sample(grid, complex().apply_delbar(xi));
  const GridForm top = wedge(wedge(dbar_xi, rho_product(pt)), pt.realized.omega_power_sampled(n - 3));
  return 2.0 * integrate(top).real();
}

double EnergyFunctional::differential_special(const AeppliPoint& pt, const Form& xi) const {
  const auto [residual, tol] = special_residual(pt, xi);
  if (residual > tol) {
    throw PreconditionError(fmt::format("rho is not del xi: residual {:.6e} exceeds {:.6e}", residual, tol), residual);
  }
  return 2.0 * energy(pt) + special_integral(pt, xi);
}

CorollaryReport EnergyFunctional::corollary_check(const AeppliPoint& pt, const Form& xi, const SamplerSpec& spec) const {
  CorollaryReport r;
  r.differential = differential_special(pt, xi);
  r.integral = special_integral(pt, xi);
  r.rho_norm_sq = energy(pt);
  r.dbar_xi = check_weak_positivity(complex(), complex().apply_delbar(xi), spec);
  r.differential_vanishes = std::abs(r.differential) <= closedness_tolerance(pt.realized);
  const bool semi = r.dbar_xi.verdict == PositivityVerdict::positive ||
                    r.dbar_xi.verdict == PositivityVerdict::semi_positive;
  if (!semi) {
    r.conclusion = "inconclusive";
  } else if (r.differential_vanishes) {
    // 0 = 2 ||rho||^2 + (integral >= 0) forces rho = 0.
    r.derives_rho_zero = true;
    r.conclusion = "Kahler";
  } else {
    r.conclusion = "not critical";
  }
  return r;
}

double EnergyFunctional::criticality(const AeppliPoint& pt) const {
  const Eigen::RowVectorXcd l = differential_functional(pt);
  if (l.size() == 0) return 0.0;
  return std::max(l.real().cwiseAbs().maxCoeff(), l.imag().cwiseAbs().maxCoeff());
}

FlowTrace EnergyFunctional::gradient_descent(const Form& u0, const FlowOptions& options) const {
  FlowTrace trace{{}, FlowStatus::max_iters, u0};
  Form u = u0;
  AeppliPoint pt = point(u);
  double f = energy(pt);
  const double floor = options.margin_floor_factor * pt.positivity_margin;
  const Eigen::LLT<Mat> gram(real_gram_);
  const auto d = static_cast<Eigen::Index>(u.size());
  double last_step = 0.0;

  for (int iter = 0;; ++iter) {
    const Eigen::VectorXd ell = real_coords(envelope_functional(pt));
    const Eigen::VectorXd g = gram.solve(ell.cast<cplx>()).real();
    const double grad_norm = std::sqrt(std::max(0.0, ell.dot(g)));
    trace.iterates.push_back({iter, f, grad_norm, last_step, pt.positivity_margin});
    if (grad_norm <= options.tol) {
      trace.status = FlowStatus::converged;
      break;
    }
    if (iter >= options.max_iters) {
      trace.status = FlowStatus::max_iters;
      break;
    }
    Vec dir(d);
    for (Eigen::Index k = 0; k < d; ++k) dir(k) = cplx(g(k), g(d + k));
    const Form step_dir(u.space_ptr(), u.bidegree(), dir);

    double step = options.initial_step;
    bool accepted = false;
    bool only_positivity = true;
    while (step >= options.min_step) {
      const Form trial = u - step_dir * step;
      try {
        AeppliPoint next = point(trial);
        if (next.positivity_margin < floor) {
          step *= 0.5;
          continue;
        }
        const double f_next = energy(next);
        if (f_next <= f - options.armijo_c * step * grad_norm * grad_norm) {
          u = trial;
          pt = std::move(next);
          f = f_next;
          accepted = true;
          break;
        }
        only_positivity = false;
      } catch (const PositivityError&) {
      }
      step *= 0.5;
    }
    if (!accepted) {
      trace.status = only_positivity ? FlowStatus::positivity_blocked : FlowStatus::stalled;
      break;
    }
    last_step = step;
  }
  trace.final_potential = u;
  return trace;
}

}  // namespace hsflow
