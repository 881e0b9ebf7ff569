#include "hsflow/hodge.hpp"

#include <mutex>

#include <fmt/format.h>

#include "hsflow/errors.hpp"

namespace hsflow {

struct OperatorBundle::Impl {
  HermitianStructure metric;
  double cutoff;
  std::size_t slots;

  // One lazily built item per bidegree slot.
  template <typename T>
  struct Lazy {
    std::vector<T> items;
    std::unique_ptr<std::once_flag[]> once;
    explicit Lazy(std::size_t n) : items(n), once(std::make_unique<std::once_flag[]>(n)) {}
  };
  mutable Lazy<Mat> del_adj;
  mutable Lazy<Mat> delbar_adj;
  mutable Lazy<Mat> bc;
  mutable Lazy<Mat> dbar;
  mutable Lazy<GreenOperator> green_bc;
  mutable Lazy<GreenOperator> green_dbar;

  Impl(HermitianStructure m, double c, std::size_t s)
      : metric(std::move(m)), cutoff(c), slots(s), del_adj(s), delbar_adj(s), bc(s), dbar(s), green_bc(s), green_dbar(s) {}

  std::size_t slot(Bidegree bd) const {
    metric.complex().space().require(bd);
    return static_cast<std::size_t>(bd.p * (metric.n() + 1) + bd.q);
  }
};

OperatorBundle::OperatorBundle(HermitianStructure metric, double rank_cutoff) {
  const int n = metric.n();
  impl_ = std::make_shared<const Impl>(std::move(metric), rank_cutoff, static_cast<std::size_t>((n + 1) * (n + 1)));
}

const HermitianStructure& OperatorBundle::metric() const { return impl_->metric; }
const FormComplex& OperatorBundle::complex() const { return impl_->metric.complex(); }
double OperatorBundle::rank_cutoff() const { return impl_->cutoff; }

const Mat& OperatorBundle::del_adjoint(Bidegree src) const {
  const auto s = impl_->slot(src);
  std::call_once(impl_->del_adj.once[s], [&] {
    impl_->del_adj.items[s] = metric().adjoint(complex().del(src), src, {src.p + 1, src.q});
  });
  return impl_->del_adj.items[s];
}

const Mat& OperatorBundle::delbar_adjoint(Bidegree src) const {
  const auto s = impl_->slot(src);
  std::call_once(impl_->delbar_adj.once[s], [&] {
    impl_->delbar_adj.items[s] = metric().adjoint(complex().delbar(src), src, {src.p, src.q + 1});
  });
  return impl_->delbar_adj.items[s];
}

Mat OperatorBundle::ddbar(Bidegree src) const {
  const FormComplex& c = complex();
  const Bidegree mid{src.p, src.q + 1};
  const Bidegree dst{src.p + 1, src.q + 1};
  if (!c.space().valid(mid)) return Mat::Zero(static_cast<Eigen::Index>(c.dim(dst)), static_cast<Eigen::Index>(c.dim(src)));
  return c.del(mid) * c.delbar(src);
}

const Mat& OperatorBundle::laplacian_bc(Bidegree bd) const {
  const auto s = impl_->slot(bd);
  std::call_once(impl_->bc.once[s], [&] {
    const FormComplex& c = complex();
    const HermitianStructure& h = metric();
    const int n = c.n();
    const int p = bd.p;
    const int q = bd.q;
    const auto d = static_cast<Eigen::Index>(c.dim(bd));
    Mat lap = Mat::Zero(d, d);

    lap += del_adjoint(bd) * c.del(bd);
    lap += delbar_adjoint(bd) * c.delbar(bd);
    if (p < n && q < n) {
      const Mat x = ddbar(bd);
      lap += h.adjoint(x, bd, {p + 1, q + 1}) * x;
    }
    if (p >= 1 && q >= 1) {
      const Bidegree low{p - 1, q - 1};
      const Mat y = ddbar(low);
      lap += y * h.adjoint(y, low, bd);
    }
    // del* delbar : (p,q) -> (p,q+1) -> (p-1,q+1).
    if (p >= 1 && q < n) {
      const Mat z = del_adjoint({p - 1, q + 1}) * c.delbar(bd);
      lap += h.adjoint(z, bd, {p - 1, q + 1}) * z;
    }
    // del* delbar : (p+1,q-1) -> (p+1,q) -> (p,q).
    if (q >= 1 && p < n) {
      const Bidegree from{p + 1, q - 1};
      const Mat w = del_adjoint(bd) * c.delbar(from);
      lap += w * h.adjoint(w, from, bd);
    }
    impl_->bc.items[s] = std::move(lap);
  });
  return impl_->bc.items[s];
}

const Mat& OperatorBundle::laplacian_dbar(Bidegree bd) const {
  const auto s = impl_->slot(bd);
  std::call_once(impl_->dbar.once[s], [&] {
    const FormComplex& c = complex();
    const auto d = static_cast<Eigen::Index>(c.dim(bd));
    Mat lap = delbar_adjoint(bd) * c.delbar(bd);
    if (bd.q >= 1) {
      const Bidegree low{bd.p, bd.q - 1};
      lap += c.delbar(low) * delbar_adjoint(low);
    }
    if (lap.size() == 0) lap = Mat::Zero(d, d);
    impl_->dbar.items[s] = std::move(lap);
  });
  return impl_->dbar.items[s];
}

const GreenOperator& OperatorBundle::green_bc(Bidegree bd) const {
  const auto s = impl_->slot(bd);
  std::call_once(impl_->green_bc.once[s], [&] {
    impl_->green_bc.items[s] = GreenOperator(laplacian_bc(bd), metric().gram(bd), impl_->cutoff);
  });
  return impl_->green_bc.items[s];
}

const GreenOperator& OperatorBundle::green_dbar(Bidegree bd) const {
  const auto s = impl_->slot(bd);
  std::call_once(impl_->green_dbar.once[s], [&] {
    impl_->green_dbar.items[s] = GreenOperator(laplacian_dbar(bd), metric().gram(bd), impl_->cutoff);
  });
  return impl_->green_dbar.items[s];
}

Form apply_green(const GreenOperator& green, const Form& gamma) {
  return Form(gamma.space_ptr(), gamma.bidegree(), green.inverse() * gamma.coeffs());
}

Form harmonic_part(const GreenOperator& green, const Form& gamma) {
  return Form(gamma.space_ptr(), gamma.bidegree(), green.harmonic_projector() * gamma.coeffs());
}

namespace {

Mat hstack(const Mat& a, const Mat& b) {
  Mat out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

Mat vstack(const Mat& a, const Mat& b) {
  Mat out(a.rows() + b.rows(), a.cols());
  out << a, b;
  return out;
}

}  // namespace

CohomologyEntry cohomology_dims(const OperatorBundle& bundle, Bidegree bd) {
  const FormComplex& c = bundle.complex();
  const double cut = bundle.rank_cutoff();
  const int p = bd.p;
  const int q = bd.q;
  CohomologyEntry e;
  e.dim = c.dim(bd);
  const auto& gd = bundle.green_dbar(bd);
  const auto& gb = bundle.green_bc(bd);
  e.h_dbar = gd.kernel_dim();
  e.h_bc = gb.kernel_dim();
  e.gap_dbar = gd.gap();
  e.gap_bc = gb.gap();

  const Mat ddbar_in = (p >= 1 && q >= 1) ? bundle.ddbar({p - 1, q - 1}) : Mat(static_cast<Eigen::Index>(e.dim), 0);
  const std::size_t rank_ddbar_in = numeric_rank(ddbar_in, cut);

  // Quotient route for Bott-Chern.
  const std::size_t closed = e.dim - numeric_rank(vstack(c.del(bd), c.delbar(bd)), cut);
  const std::size_t h_bc_quotient = closed - rank_ddbar_in;
  if (h_bc_quotient != e.h_bc) {
    throw NumericalContractError(fmt::format(
        "Bott-Chern dimension mismatch at ({},{}): Laplacian kernel {} vs quotient {}", p, q, e.h_bc, h_bc_quotient));
  }

  // Aeppli: ker(del delbar) / (Im del + Im delbar).
  const std::size_t ker_ddbar = e.dim - numeric_rank(bundle.ddbar(bd), cut);
  Mat del_in = p >= 1 ? c.del({p - 1, q}) : Mat(static_cast<Eigen::Index>(e.dim), 0);
  Mat delbar_in = q >= 1 ? c.delbar({p, q - 1}) : Mat(static_cast<Eigen::Index>(e.dim), 0);
  e.h_a = ker_ddbar - numeric_rank(hstack(del_in, delbar_in), cut);
  return e;
}

CohomologyTable cohomology_table(const OperatorBundle& bundle) {
  CohomologyTable out;
  const int n = bundle.complex().n();
  for (int p = 0; p <= n; ++p)
    for (int q = 0; q <= n; ++q) out[{p, q}] = cohomology_dims(bundle, {p, q});
  return out;
}

}  // namespace hsflow
