#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "support.hpp"

using namespace hsflow;
using namespace hsflow::testing;

namespace {

cplx plane_wave(const ModeVector& m, const std::vector<double>& x) {
  double phase = 0.0;
  for (std::size_t k = 0; k < m.size(); ++k) phase += m[k] * x[k];
  return std::exp(cplx(0, 2 * std::numbers::pi * phase));
}

// Central difference of e_m along real coordinate axis k.
cplx partial(const ModeVector& m, std::vector<double> x, std::size_t k, double h) {
  x[k] += h;
  const cplx up = plane_wave(m, x);
  x[k] -= 2 * h;
  return (up - plane_wave(m, x)) / (2 * h);
}

}  // namespace

TEST(Symbols, MatchFiniteDifferences) {
  const int n = 3;
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    ModeVector m(2 * n);
    for (auto& v : m) v = static_cast<int>(rng() % 5) - 2;
    std::vector<double> x(2 * n);
    for (auto& v : x) v = uniform(rng, 0.0, 1.0);
    const cplx f = plane_wave(m, x);
    for (int j = 0; j < n; ++j) {
      const cplx dx = partial(m, x, j, 1e-5);
      const cplx dy = partial(m, x, n + j, 1e-5);
      const cplx dz = 0.5 * (dx - cplx(0, 1) * dy);
      const cplx dzbar = 0.5 * (dx + cplx(0, 1) * dy);
      EXPECT_LE(std::abs(del_symbol(m, n, j) * f - dz), 1e-6 * (1 + std::abs(dz)));
      EXPECT_LE(std::abs(delbar_symbol(m, n, j) * f - dzbar), 1e-6 * (1 + std::abs(dzbar)));
    }
  }
}

TEST(ComplexIdentities, BuiltInModels) {
  for (const Model& m : {flat_torus(3), iwasawa(), spectral_torus(), flat_torus(4)}) {
    EXPECT_LE(identity_defect(*build_complex(m)), 1e-12);
  }
}

TEST(ComplexIdentities, RandomNilpotentModels) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + trial % 3;
    EXPECT_LE(identity_defect(*build_complex(random_nilpotent(rng, n))), 1e-12);
  }
}

TEST(ComplexIdentities, ConjugationIntertwinesDelAndDelbar) {
  std::mt19937_64 rng(5);
  for (const Model& m : {iwasawa(), spectral_torus()}) {
    const auto c = build_complex(m);
    for (int p = 0; p < 3; ++p)
      for (int q = 0; q <= 3; ++q) {
        const Form u = random_form(rng, *c, {p, q});
        const Form lhs = conjugate(c->apply_del(u));
        const Form rhs = c->apply_delbar(conjugate(u));
        EXPECT_LE((lhs - rhs).coeff_norm(), 1e-12 * (1 + lhs.coeff_norm()));
      }
  }
}

TEST(ComplexIdentities, SpectralOperatorsPreserveModes) {
  const auto c = build_complex(spectral_torus());
  const FormSpace& s = c->space();
  for (const Bidegree bd : {Bidegree{0, 0}, Bidegree{1, 0}, Bidegree{1, 1}, Bidegree{2, 1}}) {
    for (const Mat* op : {&c->del(bd), &c->delbar(bd)}) {
      const Bidegree dst = op == &c->del(bd) ? Bidegree{bd.p + 1, bd.q} : Bidegree{bd.p, bd.q + 1};
      for (Eigen::Index r = 0; r < op->rows(); ++r)
        for (Eigen::Index col = 0; col < op->cols(); ++col)
          if ((*op)(r, col) != cplx(0.0)) {
            ASSERT_EQ(s.basis(dst, static_cast<std::size_t>(r)).mode, s.basis(bd, static_cast<std::size_t>(col)).mode);
          }
    }
  }
}

TEST(ComplexIdentities, DOfDIsZero) {
  std::mt19937_64 rng(9);
  const auto c = build_complex(iwasawa());
  const Form u = random_form(rng, *c, {1, 0});
  const DFull du = d_full(*c, u);
  ASSERT_TRUE(du.del && du.delbar);
  const Form dd = c->apply_del(*du.del);
  const Form mixed = c->apply_delbar(*du.del) + c->apply_del(*du.delbar);
  const Form bb = c->apply_delbar(*du.delbar);
  EXPECT_LE(dd.coeff_norm() + mixed.coeff_norm() + bb.coeff_norm(), 1e-13);
}

TEST(Differential, FlatTorusMetricIsClosed) {
  const Model m = flat_torus(3);
  const auto c = build_complex(m);
  const Form omega = metric_form(m, c);
  EXPECT_EQ(c->apply_del(omega).coeff_norm(), 0.0);
  EXPECT_EQ(c->apply_delbar(omega).coeff_norm(), 0.0);
}

TEST(Differential, IwasawaDelOmega) {
  // omega = i sum phi^k ^ conj(phi^k) and d phi^3 = -phi^1 ^ phi^2, so
  // del omega = -i phi^1 ^ phi^2 ^ conj(phi^3).
  const Model m = iwasawa();
  const auto c = build_complex(m);
  const Form d = c->apply_del(metric_form(m, c));
  EXPECT_LE(std::abs(d.coeff(0, 0b011, 0b100) - cplx(0, -1)), 1e-15);
  EXPECT_LE((d.coeffs().cwiseAbs().sum() - 1.0), 1e-15);
}

TEST(Differential, InvariantBackendHasUnitMode) {
  const auto c = build_complex(iwasawa());
  EXPECT_TRUE(c->space().modes().is_unit());
  EXPECT_EQ(c->grid().size(), 1u);
}
