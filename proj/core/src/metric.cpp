#include "hsflow/metric.hpp"

#include <cmath>
#include <limits>
#include <mutex>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "hsflow/errors.hpp"
#include "hsflow/linalg.hpp"

namespace hsflow {

namespace {

std::size_t mode_slot(const FormSpace& space, const ModeVector& mode) {
  if (space.modes().is_unit()) return 0;
  const auto k = space.modes().find(mode);
  if (!k) throw ValidationError("model coefficient refers to a mode outside the mode set");
  return *k;
}

// h_jk at every node: column j * n + k.
Mat sample_h(const FormComplex& complex, const Form& omega) {
  const int n = complex.n();
  const FormSpace& space = complex.space();
  const GridForm w = sample(complex.grid(), omega);
  Mat out(w.values.rows(), n * n);
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < n; ++k) {
      const auto c = static_cast<Eigen::Index>(space.monomial_index({1, 1}, Mask{1} << j, Mask{1} << k));
      out.col(j * n + k) = cplx(0.0, -1.0) * w.values.col(c);
    }
  }
  return out;
}

Mat h_from_row(const Mat& samples, Eigen::Index node, int n) {
  Mat h(n, n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) h(j, k) = samples(node, j * n + k);
  return h;
}

double min_eigenvalue(const Mat& h) {
  const Mat sym = 0.5 * (h + h.adjoint());
  Eigen::SelfAdjointEigenSolver<Mat> eig(sym, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

}  // namespace

Form metric_form(const Model& model, const std::shared_ptr<const FormComplex>& complex) {
  const auto& space = complex->space_ptr();
  const int n = model.n;
  Vec coeffs = Vec::Zero(static_cast<Eigen::Index>(space->dim({1, 1})));
  for (const auto& [mode, h] : model.metric) {
    const std::size_t k = mode_slot(*space, mode);
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) {
        const std::size_t mon = space->monomial_index({1, 1}, Mask{1} << a, Mask{1} << b);
        coeffs(static_cast<Eigen::Index>(space->index({1, 1}, k, mon))) += cplx(0.0, 1.0) * h(a, b);
      }
    }
  }
  return Form(space, {1, 1}, std::move(coeffs));
}

Form potential_form(const Model& model, const std::shared_ptr<const FormComplex>& complex) {
  const auto& space = complex->space_ptr();
  Vec coeffs = Vec::Zero(static_cast<Eigen::Index>(space->dim({1, 0})));
  for (const auto& term : model.potential) {
    const std::size_t k = mode_slot(*space, term.mode);
    const std::size_t mon = space->monomial_index({1, 0}, Mask{1} << term.k, 0);
    coeffs(static_cast<Eigen::Index>(space->index({1, 0}, k, mon))) += term.c;
  }
  return Form(space, {1, 0}, std::move(coeffs));
}

Form aeppli_shift(const FormComplex& complex, const Form& omega, const Form& u) {
  if (u.bidegree() != Bidegree{1, 0}) throw DegreeError("Aeppli potentials are (1,0)-forms");
  return omega + complex.apply_del(conjugate(u)) + complex.apply_delbar(u);
}

double metric_margin(const FormComplex& complex, const Form& omega) {
  const Mat samples = sample_h(complex, omega);
  double margin = std::numeric_limits<double>::infinity();
  for (Eigen::Index x = 0; x < samples.rows(); ++x) margin = std::min(margin, min_eigenvalue(h_from_row(samples, x, complex.n())));
  return margin;
}

struct HermitianStructure::Impl {
  std::shared_ptr<const FormComplex> complex;
  Form omega;
  Mat h_samples;                // nodes x n^2
  Eigen::VectorXd det_h;        // per node
  std::vector<Mat> minors;      // per node: det A[S, T] over subset masks, A = (h^{-1})^T
  double margin = 0.0;

  mutable std::vector<Mat> grams;
  mutable std::unique_ptr<std::once_flag[]> gram_once;

  Impl(std::shared_ptr<const FormComplex> c, Form w) : complex(std::move(c)), omega(std::move(w)) {}

  std::size_t slot(Bidegree bd) const { return static_cast<std::size_t>(bd.p * (complex->n() + 1) + bd.q); }

  // <dz^I ^ dzbar^J, dz^I' ^ dzbar^J'> = det A[I,I'] conj(det A[J,J']).
  cplx pair(std::size_t node, const Monomial& a, const Monomial& b) const {
    const Mat& m = minors[node];
    return m(a.holo, b.holo) * std::conj(m(a.anti, b.anti));
  }
};

HermitianStructure::HermitianStructure(std::shared_ptr<const FormComplex> complex, Form omega) {
  if (omega.bidegree() != Bidegree{1, 1}) throw DegreeError("a metric is a (1,1)-form");
  auto impl = std::make_shared<Impl>(std::move(complex), std::move(omega));
  const int n = impl->complex->n();
  impl->h_samples = sample_h(*impl->complex, impl->omega);
  const auto nodes = impl->h_samples.rows();
  impl->det_h.resize(nodes);
  impl->minors.resize(static_cast<std::size_t>(nodes));
  impl->margin = std::numeric_limits<double>::infinity();
  const std::size_t subsets = std::size_t{1} << n;
  for (Eigen::Index x = 0; x < nodes; ++x) {
    const Mat h = h_from_row(impl->h_samples, x, n);
    const double scale = 1.0 + h.norm();
    if ((h - h.adjoint()).norm() > 1e-10 * scale) {
      throw ValidationError(fmt::format("metric form is not real: Hermitian defect {:.3e} at node {}",
                                        (h - h.adjoint()).norm(), x));
    }
    impl->margin = std::min(impl->margin, min_eigenvalue(h));
    if (impl->margin <= 0.0) continue;
    impl->det_h(x) = h.determinant().real();
    const Mat a = h.inverse().transpose();
    Mat& m = impl->minors[static_cast<std::size_t>(x)];
    m = Mat::Zero(static_cast<Eigen::Index>(subsets), static_cast<Eigen::Index>(subsets));
    for (Mask s = 0; s < subsets; ++s) {
      const auto rows = mask_indices(s);
      for (Mask t = 0; t < subsets; ++t) {
        const auto cols = mask_indices(t);
        if (rows.size() != cols.size()) continue;
        if (rows.empty()) {
          m(s, t) = 1.0;
          continue;
        }
        Mat sub(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
        for (std::size_t i = 0; i < rows.size(); ++i)
          for (std::size_t j = 0; j < cols.size(); ++j)
            sub(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = a(rows[i], cols[j]);
        m(s, t) = sub.determinant();
      }
    }
  }
  if (!(impl->margin > 0.0)) {
    throw PositivityError(fmt::format("metric is not positive definite: smallest eigenvalue {:.6e}", impl->margin),
                          impl->margin);
  }
  const auto slots = static_cast<std::size_t>((n + 1) * (n + 1));
  impl->grams.resize(slots);
  impl->gram_once = std::make_unique<std::once_flag[]>(slots);
  impl_ = std::move(impl);
}

HermitianStructure HermitianStructure::from_model(const Model& model, std::shared_ptr<const FormComplex> complex) {
  Form omega = metric_form(model, complex);
  if (!model.potential.empty()) omega = aeppli_shift(*complex, omega, potential_form(model, complex));
  return HermitianStructure(std::move(complex), std::move(omega));
}

HermitianStructure HermitianStructure::with_omega(Form omega) const {
  return HermitianStructure(impl_->complex, std::move(omega));
}

const FormComplex& HermitianStructure::complex() const { return *impl_->complex; }
const std::shared_ptr<const FormComplex>& HermitianStructure::complex_ptr() const { return impl_->complex; }
const Form& HermitianStructure::omega() const { return impl_->omega; }
int HermitianStructure::n() const { return impl_->complex->n(); }
double HermitianStructure::margin() const { return impl_->margin; }

Mat HermitianStructure::h_at(std::size_t node) const {
  return h_from_row(impl_->h_samples, static_cast<Eigen::Index>(node), n());
}

double HermitianStructure::volume() const { return integrate(omega_power_sampled(n())).real(); }

Mat HermitianStructure::pointwise_gram(Bidegree bd, std::size_t node) const {
  const auto& mons = complex().space().monomials(bd);
  const auto mc = static_cast<Eigen::Index>(mons.size());
  Mat g(mc, mc);
  for (Eigen::Index a = 0; a < mc; ++a)
    for (Eigen::Index b = 0; b < mc; ++b)
      g(a, b) = impl_->pair(node, mons[static_cast<std::size_t>(a)], mons[static_cast<std::size_t>(b)]);
  return g;
}

Eigen::VectorXd HermitianStructure::pointwise_norm(const GridForm& u) const {
  Eigen::VectorXd out(u.values.rows());
  for (Eigen::Index x = 0; x < u.values.rows(); ++x) {
    const Mat g = pointwise_gram(u.bidegree, static_cast<std::size_t>(x));
    const Vec v = u.values.row(x).transpose();
    // <u, u> = sum_ab u_a conj(u_b) g_ab.
    out(x) = std::sqrt(std::max(0.0, (v.adjoint() * g.transpose() * v)(0).real()));
  }
  return out;
}

double HermitianStructure::norm(const GridForm& u) const {
  const Eigen::VectorXd pn = pointwise_norm(u);
  return std::sqrt(pn.cwiseAbs2().cwiseProduct(impl_->det_h).mean());
}

const Eigen::VectorXd& HermitianStructure::density() const { return impl_->det_h; }

const Mat& HermitianStructure::gram(Bidegree bd) const {
  const FormSpace& space = complex().space();
  space.require(bd);
  const Impl& im = *impl_;
  const std::size_t s = im.slot(bd);
  std::call_once(im.gram_once[s], [&] {
    const QuadratureGrid& grid = complex().grid();
    const auto& mons = space.monomials(bd);
    const std::size_t mc = mons.size();
    const std::size_t nodes = grid.size();
    Mat nodal(static_cast<Eigen::Index>(nodes), static_cast<Eigen::Index>(mc * mc));
    for (std::size_t x = 0; x < nodes; ++x) {
      const double dv = im.det_h(static_cast<Eigen::Index>(x));
      for (std::size_t a = 0; a < mc; ++a)
        for (std::size_t b = 0; b < mc; ++b)
          nodal(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(a * mc + b)) = dv * im.pair(x, mons[a], mons[b]);
    }
    const auto& diff = grid.differences();
    const Mat hat = grid.difference_fourier(nodal);
    const std::size_t modes = space.modes().size();
    Mat g(static_cast<Eigen::Index>(modes * mc), static_cast<Eigen::Index>(modes * mc));
    // G[(mb, b), (ma, a)] = mean(dV <e_a, e_b> e_{m_a - m_b}) = hat(m_b - m_a, (a, b)).
    for (std::size_t ma = 0; ma < modes; ++ma) {
      for (std::size_t mb = 0; mb < modes; ++mb) {
        const auto k = static_cast<Eigen::Index>(diff.pair_index[ma * modes + mb]);
        for (std::size_t a = 0; a < mc; ++a)
          for (std::size_t b = 0; b < mc; ++b)
            g(static_cast<Eigen::Index>(mb * mc + b), static_cast<Eigen::Index>(ma * mc + a)) =
                hat(k, static_cast<Eigen::Index>(a * mc + b));
      }
    }
    im.grams[s] = 0.5 * (g + g.adjoint());
  });
  return im.grams[s];
}

cplx HermitianStructure::inner(const Form& u, const Form& v) const {
  if (u.bidegree() != v.bidegree()) throw DegreeError("inner product of forms of different bidegrees");
  return v.coeffs().dot(gram(u.bidegree()) * u.coeffs());
}

double HermitianStructure::norm(const Form& u) const { return std::sqrt(std::max(0.0, inner(u, u).real())); }

Mat HermitianStructure::adjoint(const Mat& op, Bidegree src, Bidegree dst) const {
  const FormSpace& space = complex().space();
  if (op.rows() != static_cast<Eigen::Index>(space.dim(dst)) || op.cols() != static_cast<Eigen::Index>(space.dim(src))) {
    throw DegreeError("operator shape does not match its bidegrees");
  }
  if (op.size() == 0) return Mat::Zero(op.cols(), op.rows());
  return gram_adjoint(op, gram(src), gram(dst));
}

GridForm HermitianStructure::omega_power_sampled(int k) const {
  if (k < 0 || k > n()) throw DegreeError(fmt::format("omega power {} outside [0, {}]", k, n()));
  const auto& grid = complex().grid();
  GridForm out{complex().space_ptr(), {0, 0}, Mat::Ones(static_cast<Eigen::Index>(grid.size()), 1)};
  const GridForm w = sample(grid, omega());
  for (int j = 1; j <= k; ++j) out = (1.0 / j) * wedge(out, w);
  return out;
}

Form HermitianStructure::omega_power(int k) const { return project(complex().grid(), omega_power_sampled(k)); }

GridForm HermitianStructure::hodge_star(const GridForm& w) const {
  const FormSpace& space = complex().space();
  const int nn = n();
  const int b = w.bidegree.p;
  const int a = w.bidegree.q;
  const Bidegree out_bd{nn - a, nn - b};
  const Mask full = (Mask{1} << nn) - 1;
  const auto& out_mons = space.monomials(out_bd);
  const auto& in_mons = space.monomials(w.bidegree);

  std::vector<Monomial> comp(out_mons.size());
  std::vector<double> comp_sign(out_mons.size());
  for (std::size_t c = 0; c < out_mons.size(); ++c) {
    comp[c] = {full ^ out_mons[c].holo, full ^ out_mons[c].anti};
    comp_sign[c] = static_cast<double>(wedge_sign(nn, comp[c], out_mons[c]));
  }
  std::vector<Monomial> swapped(in_mons.size());
  for (std::size_t j = 0; j < in_mons.size(); ++j) swapped[j] = {in_mons[j].anti, in_mons[j].holo};
  const double parity = ((a * b) % 2 == 0) ? 1.0 : -1.0;
  const cplx tau = space.tau_in_top();

  Mat out = Mat::Zero(w.values.rows(), static_cast<Eigen::Index>(out_mons.size()));
  for (Eigen::Index x = 0; x < w.values.rows(); ++x) {
    const auto node = static_cast<std::size_t>(x);
    const cplx scale = tau * impl_->det_h(x) * parity;
    for (std::size_t c = 0; c < out_mons.size(); ++c) {
      cplx acc = 0.0;
      for (std::size_t j = 0; j < in_mons.size(); ++j) {
        const cplx wj = w.values(x, static_cast<Eigen::Index>(j));
        if (wj == cplx(0.0)) continue;
        acc += wj * impl_->pair(node, comp[c], swapped[j]);
      }
      out(x, static_cast<Eigen::Index>(c)) = scale * comp_sign[c] * acc;
    }
  }
  return {w.space, out_bd, std::move(out)};
}

Form HermitianStructure::hodge_star(const Form& u) const {
  const auto& grid = complex().grid();
  return project(grid, hodge_star(sample(grid, u)));
}

Mat HermitianStructure::lefschetz(Bidegree src) const { return wedge_matrix(omega(), src); }

Mat HermitianStructure::lefschetz_adjoint(Bidegree src) const {
  return adjoint(lefschetz(src), src, {src.p + 1, src.q + 1});
}

PrimitivityCheck HermitianStructure::is_primitive(const Form& u, double tol) const {
  const Bidegree bd = u.bidegree();
  PrimitivityCheck out;
  if (bd.p == 0 || bd.q == 0) {
    out.primitive = true;
    return out;
  }
  const Bidegree low{bd.p - 1, bd.q - 1};
  const Form lu(complex().space_ptr(), low, lefschetz_adjoint(low) * u.coeffs());
  out.residual = norm(lu);
  out.primitive = out.residual <= tol * norm(u);
  return out;
}

}  // namespace hsflow
