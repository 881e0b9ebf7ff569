#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "hsflow/forms.hpp"

namespace hsflow {

/// Uniform tensor grid on the unit torus [0,1)^{2n}. Axes on which every
/// mode vanishes collapse to a single node, so the invariant backend (unit
/// mode) has exactly one node.
class QuadratureGrid {
 public:
  QuadratureGrid(int n, const ScalarModes& modes, int nodes_per_axis);

  int n() const { return n_; }
  std::size_t size() const { return size_; }
  const std::vector<int>& axis_nodes() const { return axis_nodes_; }

  /// e_m at every node, m a lattice vector of length 2n (empty = unit).
  Vec character(const ModeVector& m) const;
  /// nodes x |modes| table of the basis characters.
  const Mat& mode_table() const { return mode_table_; }

  /// Values at the nodes of sum_k coeffs(k, c) e_{m_k}; coeffs is |modes| x cols.
  Mat synthesize(const Mat& coeffs) const { return mode_table_ * coeffs; }
  /// Discrete Fourier coefficients on the mode set (exact for trigonometric
  /// polynomials whose modes alias onto no other mode of the set).
  Mat analyze(const Mat& nodal) const;
  /// Rows k: mean over nodes of nodal * e_{-freqs[k]}.
  Mat fourier(const Mat& nodal, const std::vector<ModeVector>& freqs) const;

  /// The difference set {m_a - m_b} of the mode set with its characters,
  /// built on first use.
  struct Differences {
    std::vector<ModeVector> freqs;
    std::map<ModeVector, std::size_t> index;
    std::vector<std::size_t> pair_index;  // a * |modes| + b -> index of m_b - m_a
    Mat table;                            // nodes x |freqs|
  };
  const Differences& differences() const;
  /// Rows k: mean over nodes of nodal * e_{-freqs[k]} over the difference set.
  Mat difference_fourier(const Mat& nodal) const;

 private:
  int n_;
  bool unit_;
  std::vector<int> axis_nodes_;
  std::size_t size_ = 1;
  ScalarModes modes_;
  Mat mode_table_;
  mutable std::once_flag differences_once_;
  mutable Differences differences_;
};

/// A form sampled at the quadrature nodes: values(node, monomial).
/// Products of sampled forms are exact pointwise, so integrals of
/// multi-factor products avoid intermediate mode truncation.
struct GridForm {
  std::shared_ptr<const FormSpace> space;
  Bidegree bidegree;
  Mat values;
};

GridForm sample(const QuadratureGrid& grid, const Form& u);
GridForm wedge(const GridForm& a, const GridForm& b);
GridForm conjugate(const GridForm& a);
GridForm operator+(const GridForm& a, const GridForm& b);
GridForm operator*(cplx s, const GridForm& a);
/// Orthogonal projection back onto the mode set.
Form project(const QuadratureGrid& grid, const GridForm& u);
/// Integral of a top-degree form, with the volume normalized so that the
/// integral of tau is 1.
cplx integrate(const GridForm& top);
/// Row vector c with integral(u ^ theta) = c * u.coeffs() for every u of
/// bidegree `bd` (bd + theta.bidegree must be (n,n)).
Eigen::RowVectorXcd pairing_functional(const QuadratureGrid& grid, const GridForm& theta, Bidegree bd);

}  // namespace hsflow
