#include "hsflow/grid.hpp"

#include <numbers>

#include <fmt/format.h>

#include "hsflow/errors.hpp"

namespace hsflow {

namespace {

using RowMat = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Mat coeffs_as_matrix(const Form& u) {
  const auto modes = static_cast<Eigen::Index>(u.space().modes().size());
  const auto mc = static_cast<Eigen::Index>(u.space().monomial_count(u.bidegree()));
  return Eigen::Map<const RowMat>(u.coeffs().data(), modes, mc);
}

void require_same(const GridForm& a, const GridForm& b) {
  if (a.values.rows() != b.values.rows()) throw DegreeError("sampled forms live on different grids");
}

}  // namespace

QuadratureGrid::QuadratureGrid(int n, const ScalarModes& modes, int nodes_per_axis)
    : n_(n), unit_(modes.is_unit()), axis_nodes_(static_cast<std::size_t>(2 * n), 1), modes_(modes) {
  if (!unit_) {
    if (nodes_per_axis < 1) throw ValidationError("grid node count must be positive");
    for (std::size_t k = 0; k < axis_nodes_.size(); ++k) {
      bool active = false;
      for (const auto& m : modes.all()) active = active || m[k] != 0;
      if (active) axis_nodes_[k] = nodes_per_axis;
    }
  }
  for (int a : axis_nodes_) size_ *= static_cast<std::size_t>(a);
  mode_table_.resize(static_cast<Eigen::Index>(size_), static_cast<Eigen::Index>(modes.size()));
  for (std::size_t k = 0; k < modes.size(); ++k) mode_table_.col(static_cast<Eigen::Index>(k)) = character(modes[k]);
}

Vec QuadratureGrid::character(const ModeVector& m) const {
  Vec out(static_cast<Eigen::Index>(size_));
  if (m.empty()) {
    out.setOnes();
    return out;
  }
  // All active axes share one node count N, so the phase is an integer mod N.
  int big = 1;
  for (int a : axis_nodes_) big = std::max(big, a);
  std::vector<cplx> roots(static_cast<std::size_t>(big));
  for (int r = 0; r < big; ++r) roots[static_cast<std::size_t>(r)] = std::polar(1.0, 2.0 * std::numbers::pi * r / big);

  std::vector<int> idx(axis_nodes_.size(), 0);
  for (std::size_t node = 0; node < size_; ++node) {
    long long phase = 0;
    for (std::size_t k = 0; k < idx.size(); ++k) phase += static_cast<long long>(m[k]) * idx[k];
    phase %= big;
    if (phase < 0) phase += big;
    out(static_cast<Eigen::Index>(node)) = roots[static_cast<std::size_t>(phase)];
    for (std::size_t k = idx.size(); k-- > 0;) {
      if (++idx[k] < axis_nodes_[k]) break;
      idx[k] = 0;
    }
  }
  return out;
}

Mat QuadratureGrid::analyze(const Mat& nodal) const {
  return mode_table_.adjoint() * nodal / static_cast<double>(size_);
}

Mat QuadratureGrid::fourier(const Mat& nodal, const std::vector<ModeVector>& freqs) const {
  Mat table(static_cast<Eigen::Index>(size_), static_cast<Eigen::Index>(freqs.size()));
  for (std::size_t k = 0; k < freqs.size(); ++k) table.col(static_cast<Eigen::Index>(k)) = character(freqs[k]);
  return table.adjoint() * nodal / static_cast<double>(size_);
}

const QuadratureGrid::Differences& QuadratureGrid::differences() const {
  std::call_once(differences_once_, [this] {
    const std::size_t m = modes_.size();
    differences_.pair_index.resize(m * m);
    for (std::size_t a = 0; a < m; ++a) {
      for (std::size_t b = 0; b < m; ++b) {
        const ModeVector diff = unit_ ? ModeVector{} : add(modes_[b], negate(modes_[a]));
        auto [it, inserted] = differences_.index.try_emplace(diff, differences_.freqs.size());
        if (inserted) differences_.freqs.push_back(diff);
        differences_.pair_index[a * m + b] = it->second;
      }
    }
    differences_.table.resize(static_cast<Eigen::Index>(size_), static_cast<Eigen::Index>(differences_.freqs.size()));
    for (std::size_t k = 0; k < differences_.freqs.size(); ++k) {
      differences_.table.col(static_cast<Eigen::Index>(k)) = character(differences_.freqs[k]);
    }
  });
  return differences_;
}

Mat QuadratureGrid::difference_fourier(const Mat& nodal) const {
  return differences().table.adjoint() * nodal / static_cast<double>(size_);
}

GridForm sample(const QuadratureGrid& grid, const Form& u) {
  return {u.space_ptr(), u.bidegree(), grid.synthesize(coeffs_as_matrix(u))};
}

GridForm wedge(const GridForm& a, const GridForm& b) {
  require_same(a, b);
  const FormSpace& space = *a.space;
  const Bidegree c{a.bidegree.p + b.bidegree.p, a.bidegree.q + b.bidegree.q};
  if (!space.valid(c)) {
    throw DegreeError(fmt::format("wedge of ({},{}) and ({},{}) exceeds n = {}", a.bidegree.p, a.bidegree.q,
                                  b.bidegree.p, b.bidegree.q, space.n()));
  }
  const auto& table = space.product_table(a.bidegree, b.bidegree);
  const auto mb = static_cast<std::size_t>(b.values.cols());
  Mat out = Mat::Zero(a.values.rows(), static_cast<Eigen::Index>(space.monomial_count(c)));
  for (std::size_t i = 0; i < static_cast<std::size_t>(a.values.cols()); ++i) {
    for (std::size_t j = 0; j < mb; ++j) {
      const auto& prod = table[i * mb + j];
      if (prod.sign == 0) continue;
      auto col = out.col(static_cast<Eigen::Index>(prod.monomial));
      const auto ai = a.values.col(static_cast<Eigen::Index>(i));
      const auto bj = b.values.col(static_cast<Eigen::Index>(j));
      if (prod.sign > 0) {
        col += ai.cwiseProduct(bj);
      } else {
        col -= ai.cwiseProduct(bj);
      }
    }
  }
  return {a.space, c, std::move(out)};
}

GridForm conjugate(const GridForm& a) {
  const FormSpace& space = *a.space;
  const Bidegree b = a.bidegree.conjugate();
  const auto& ma = space.monomials(a.bidegree);
  const double sign = ((a.bidegree.p * a.bidegree.q) % 2 == 0) ? 1.0 : -1.0;
  Mat out(a.values.rows(), static_cast<Eigen::Index>(space.monomial_count(b)));
  for (std::size_t i = 0; i < ma.size(); ++i) {
    const auto j = static_cast<Eigen::Index>(space.monomial_index(b, ma[i].anti, ma[i].holo));
    out.col(j) = sign * a.values.col(static_cast<Eigen::Index>(i)).conjugate();
  }
  return {a.space, b, std::move(out)};
}

GridForm operator+(const GridForm& a, const GridForm& b) {
  require_same(a, b);
  if (a.bidegree != b.bidegree) throw DegreeError("cannot add sampled forms of different bidegrees");
  return {a.space, a.bidegree, a.values + b.values};
}

GridForm operator*(cplx s, const GridForm& a) { return {a.space, a.bidegree, s * a.values}; }

Form project(const QuadratureGrid& grid, const GridForm& u) {
  RowMat coeffs = grid.analyze(u.values);
  Vec flat = Eigen::Map<const Vec>(coeffs.data(), coeffs.size());
  return Form(u.space, u.bidegree, std::move(flat));
}

cplx integrate(const GridForm& top) {
  const int n = top.space->n();
  if (top.bidegree != Bidegree{n, n}) {
    throw DegreeError(fmt::format("only ({0},{0})-forms can be integrated", n));
  }
  return top.values.col(0).mean() / top.space->tau_in_top();
}

Eigen::RowVectorXcd pairing_functional(const QuadratureGrid& grid, const GridForm& theta, Bidegree bd) {
  const FormSpace& space = *theta.space;
  const int n = space.n();
  if (bd.p + theta.bidegree.p != n || bd.q + theta.bidegree.q != n) {
    throw DegreeError("pairing requires complementary bidegrees");
  }
  const auto& table = space.product_table(bd, theta.bidegree);
  const std::size_t mu = space.monomial_count(bd);
  const std::size_t mt = space.monomial_count(theta.bidegree);
  // means(k, c) = mean over nodes of e_{m_k} * theta_c.
  const Mat means = grid.mode_table().transpose() * theta.values / static_cast<double>(grid.size());
  const std::size_t modes = space.modes().size();
  Eigen::RowVectorXcd out = Eigen::RowVectorXcd::Zero(static_cast<Eigen::Index>(modes * mu));
  const cplx inv_tau = 1.0 / space.tau_in_top();
  for (std::size_t i = 0; i < mu; ++i) {
    for (std::size_t c = 0; c < mt; ++c) {
      const auto& prod = table[i * mt + c];
      if (prod.sign == 0) continue;
      for (std::size_t k = 0; k < modes; ++k) {
        out(static_cast<Eigen::Index>(k * mu + i)) +=
            static_cast<double>(prod.sign) * inv_tau * means(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c));
      }
    }
  }
  return out;
}

}  // namespace hsflow
