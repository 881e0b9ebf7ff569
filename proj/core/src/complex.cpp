#include "hsflow/complex.hpp"

#include <algorithm>
#include <bit>
#include <numbers>

#include <fmt/format.h>

#include "hsflow/errors.hpp"

namespace hsflow {

FormComplex::FormComplex(Backend backend, std::shared_ptr<const FormSpace> space,
                         std::shared_ptr<const QuadratureGrid> grid, std::vector<Mat> del, std::vector<Mat> delbar)
    : backend_(backend), space_(std::move(space)), grid_(std::move(grid)), del_(std::move(del)), delbar_(std::move(delbar)) {}

std::size_t FormComplex::slot(Bidegree bd) const {
  space_->require(bd);
  return static_cast<std::size_t>(bd.p * (n() + 1) + bd.q);
}

const Mat& FormComplex::del(Bidegree bd) const { return del_[slot(bd)]; }
const Mat& FormComplex::delbar(Bidegree bd) const { return delbar_[slot(bd)]; }

Form FormComplex::apply_del(const Form& u) const {
  const Bidegree b = u.bidegree();
  if (b.p == n()) throw DegreeError(fmt::format("del of a ({},{})-form leaves the complex", b.p, b.q));
  return Form(space_, {b.p + 1, b.q}, del(b) * u.coeffs());
}

Form FormComplex::apply_delbar(const Form& u) const {
  const Bidegree b = u.bidegree();
  if (b.q == n()) throw DegreeError(fmt::format("delbar of a ({},{})-form leaves the complex", b.p, b.q));
  return Form(space_, {b.p, b.q + 1}, delbar(b) * u.coeffs());
}

DFull d_full(const FormComplex& complex, const Form& u) {
  DFull out;
  if (u.bidegree().p < complex.n()) out.del = complex.apply_del(u);
  if (u.bidegree().q < complex.n()) out.delbar = complex.apply_delbar(u);
  return out;
}

cplx del_symbol(const ModeVector& m, int n, int j) {
  // d/dz_j e^{2 pi i m.x} = (1/2)(d/dx_j - i d/dy_j) = pi (m_{n+j} + i m_j).
  const auto a = static_cast<double>(m[static_cast<std::size_t>(j)]);
  const auto b = static_cast<double>(m[static_cast<std::size_t>(n + j)]);
  return std::numbers::pi * cplx(b, a);
}

cplx delbar_symbol(const ModeVector& m, int n, int j) {
  // d/dzbar_j = (1/2)(d/dx_j + i d/dy_j) gives i pi (m_j + i m_{n+j}).
  const auto a = static_cast<double>(m[static_cast<std::size_t>(j)]);
  const auto b = static_cast<double>(m[static_cast<std::size_t>(n + j)]);
  return std::numbers::pi * cplx(-b, a);
}

namespace {

struct Assembly {
  std::vector<Mat> del;
  std::vector<Mat> delbar;
};

Assembly empty_assembly(const FormSpace& space) {
  const int n = space.n();
  Assembly a;
  for (int p = 0; p <= n; ++p) {
    for (int q = 0; q <= n; ++q) {
      const auto src = static_cast<Eigen::Index>(space.dim({p, q}));
      a.del.push_back(Mat::Zero(static_cast<Eigen::Index>(space.dim({p + 1, q})), src));
      a.delbar.push_back(Mat::Zero(static_cast<Eigen::Index>(space.dim({p, q + 1})), src));
    }
  }
  return a;
}

Assembly assemble_spectral(const FormSpace& space) {
  const int n = space.n();
  Assembly a = empty_assembly(space);
  const auto& modes = space.modes();
  for (int p = 0; p <= n; ++p) {
    for (int q = 0; q <= n; ++q) {
      const std::size_t s = static_cast<std::size_t>(p * (n + 1) + q);
      const auto& mons = space.monomials({p, q});
      for (std::size_t k = 0; k < modes.size(); ++k) {
        for (std::size_t i = 0; i < mons.size(); ++i) {
          const auto col = static_cast<Eigen::Index>(space.index({p, q}, k, i));
          for (int j = 0; j < n; ++j) {
            const Mask bit = Mask{1} << j;
            if (p < n && !(mons[i].holo & bit)) {
              const int sign = wedge_sign(n, {bit, 0}, mons[i]);
              const auto row = space.index({p + 1, q}, k, space.monomial_index({p + 1, q}, mons[i].holo | bit, mons[i].anti));
              a.del[s](static_cast<Eigen::Index>(row), col) += static_cast<double>(sign) * del_symbol(modes[k], n, j);
            }
            if (q < n && !(mons[i].anti & bit)) {
              const int sign = wedge_sign(n, {0, bit}, mons[i]);
              const auto row = space.index({p, q + 1}, k, space.monomial_index({p, q + 1}, mons[i].holo, mons[i].anti | bit));
              a.delbar[s](static_cast<Eigen::Index>(row), col) += static_cast<double>(sign) * delbar_symbol(modes[k], n, j);
            }
          }
        }
      }
    }
  }
  return a;
}

Assembly assemble_invariant(const Model& model, const FormSpace& space) {
  const int n = space.n();
  Assembly a = empty_assembly(space);
  for (int p = 0; p <= n; ++p) {
    for (int q = 0; q <= n; ++q) {
      const std::size_t s = static_cast<std::size_t>(p * (n + 1) + q);
      const auto& mons = space.monomials({p, q});
      for (std::size_t i = 0; i < mons.size(); ++i) {
        const std::uint32_t full = mons[i].holo | (mons[i].anti << n);
        for (const auto& [mask, c] : invariant_d(model, full)) {
          const Mask holo = mask & ((1u << n) - 1);
          const Mask anti = mask >> n;
          const int dp = std::popcount(holo);
          const int dq = std::popcount(anti);
          const auto col = static_cast<Eigen::Index>(i);
          if (dp == p + 1 && dq == q) {
            a.del[s](static_cast<Eigen::Index>(space.monomial_index({dp, dq}, holo, anti)), col) += c;
          } else if (dp == p && dq == q + 1) {
            a.delbar[s](static_cast<Eigen::Index>(space.monomial_index({dp, dq}, holo, anti)), col) += c;
          } else {
            throw ValidationError("differential has a component outside bidegrees (p+1,q), (p,q+1)");
          }
        }
      }
    }
  }
  return a;
}

}  // namespace

std::shared_ptr<const FormComplex> build_complex(const Model& model) {
  validate(model);
  if (model.backend == Backend::invariant) {
    auto space = std::make_shared<const FormSpace>(model.n, ScalarModes::unit());
    auto grid = std::make_shared<const QuadratureGrid>(model.n, space->modes(), 1);
    Assembly a = assemble_invariant(model, *space);
    return std::make_shared<const FormComplex>(Backend::invariant, space, grid, std::move(a.del), std::move(a.delbar));
  }
  auto space = std::make_shared<const FormSpace>(model.n, ScalarModes::lattice(model.n, model.modes));
  auto grid = std::make_shared<const QuadratureGrid>(model.n, space->modes(), model.grid);
  Assembly a = assemble_spectral(*space);
  return std::make_shared<const FormComplex>(Backend::spectral, space, grid, std::move(a.del), std::move(a.delbar));
}

double identity_defect(const FormComplex& c) {
  const int n = c.n();
  double worst = 0.0;
  auto take = [&worst](const Mat& m) {
    if (m.size() > 0) worst = std::max(worst, m.cwiseAbs().maxCoeff());
  };
  for (int p = 0; p <= n; ++p) {
    for (int q = 0; q <= n; ++q) {
      if (p + 2 <= n) take(c.del({p + 1, q}) * c.del({p, q}));
      if (q + 2 <= n) take(c.delbar({p, q + 1}) * c.delbar({p, q}));
      if (p < n && q < n) take(c.del({p, q + 1}) * c.delbar({p, q}) + c.delbar({p + 1, q}) * c.del({p, q}));
    }
  }
  return worst;
}

}  // namespace hsflow
