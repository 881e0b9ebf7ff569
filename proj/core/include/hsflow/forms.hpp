#pragma once

#include <complex>
#include <compare>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace hsflow {

using cplx = std::complex<double>;
using Vec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXcd;

struct Bidegree {
  int p = 0;
  int q = 0;

  int total() const { return p + q; }
  Bidegree conjugate() const { return {q, p}; }
  auto operator<=>(const Bidegree&) const = default;
};

/// Subset of {0, .., n-1} stored as a bit mask; bit j stands for dz^{j+1}
/// (holomorphic part) or dzbar^{j+1} (antiholomorphic part).
using Mask = std::uint32_t;

std::vector<int> mask_indices(Mask mask);
int popcount(Mask mask);

/// Integer lattice vector of length 2n labelling the Fourier mode
/// exp(2 pi i m.x). The invariant backend uses the single empty vector.
using ModeVector = std::vector<int>;

ModeVector negate(const ModeVector& m);
ModeVector add(const ModeVector& a, const ModeVector& b);

/// Finite set of scalar modes, sorted lexicographically and closed under
/// negation. Either the single unit mode (invariant backend) or a
/// symmetric subset of Z^{2n} containing 0 (spectral backend).
class ScalarModes {
 public:
  static ScalarModes unit();
  /// Throws ValidationError when the set is not closed under negation or
  /// has vectors of the wrong length. The zero mode is added if missing.
  static ScalarModes lattice(int n, std::vector<ModeVector> modes);

  std::size_t size() const { return modes_.size(); }
  const ModeVector& operator[](std::size_t i) const { return modes_[i]; }
  const std::vector<ModeVector>& all() const { return modes_; }
  bool is_unit() const { return unit_; }

  std::size_t zero() const { return zero_; }
  std::size_t negated(std::size_t i) const { return negated_[i]; }
  std::optional<std::size_t> find(const ModeVector& m) const;
  /// Index of modes[a] + modes[b], or nullopt when the sum leaves the set.
  std::optional<std::size_t> sum(std::size_t a, std::size_t b) const;
  /// Largest |m_k| over all modes and coordinates.
  int max_abs() const;

 private:
  bool unit_ = true;
  std::vector<ModeVector> modes_;
  std::vector<std::size_t> negated_;
  std::size_t zero_ = 0;
  std::map<ModeVector, std::size_t> lookup_;
};

/// One element of the enumerated basis of Lambda^{p,q}:
/// e_mode * dz^I ^ dzbar^J with I = holo, J = anti.
struct BasisIndex {
  std::size_t mode = 0;
  Mask holo = 0;
  Mask anti = 0;

  std::vector<int> holo_indices() const { return mask_indices(holo); }
  std::vector<int> anti_indices() const { return mask_indices(anti); }
  bool operator==(const BasisIndex&) const = default;
};

/// Basis of Lambda^{p,q} in the fixed order: lexicographic on
/// (mode, I, J), multi-indices compared as increasing sequences.
std::vector<BasisIndex> enumerate_basis(int n, int p, int q, const ScalarModes& modes);

/// Covector monomial dz^I ^ dzbar^J.
struct Monomial {
  Mask holo = 0;
  Mask anti = 0;
};

/// Sign of reordering the concatenation (a, b) of two canonical monomials
/// into canonical order (holomorphic covectors first, each block
/// increasing). Returns 0 when they share a covector.
int wedge_sign(int n, const Monomial& a, const Monomial& b);

/// Bookkeeping shared by all forms over one complex: dimension, scalar
/// modes, monomial enumeration and product tables.
class FormSpace {
 public:
  FormSpace(int n, ScalarModes modes);

  int n() const { return n_; }
  const ScalarModes& modes() const { return modes_; }
  bool valid(Bidegree bd) const { return bd.p >= 0 && bd.q >= 0 && bd.p <= n_ && bd.q <= n_; }
  /// Throws DegreeError unless valid(bd).
  void require(Bidegree bd) const;

  const std::vector<Monomial>& monomials(Bidegree bd) const;
  std::size_t monomial_count(Bidegree bd) const;
  std::size_t monomial_index(Bidegree bd, Mask holo, Mask anti) const;
  /// Dimension of Lambda^{p,q}; zero for out-of-range bidegrees.
  std::size_t dim(Bidegree bd) const;
  std::size_t index(Bidegree bd, std::size_t mode, std::size_t monomial) const {
    return mode * monomial_count(bd) + monomial;
  }
  BasisIndex basis(Bidegree bd, std::size_t index) const;

  struct Product {
    std::size_t monomial = 0;
    int sign = 0;
  };
  /// Row-major table over (monomial of a, monomial of b).
  const std::vector<Product>& product_table(Bidegree a, Bidegree b) const;

  /// Coefficient c with tau = c * (dz^1..dz^n ^ dzbar^1..dzbar^n), where
  /// tau = (i dz^1 ^ dzbar^1) ^ ... ^ (i dz^n ^ dzbar^n).
  cplx tau_in_top() const { return tau_in_top_; }

 private:
  int n_;
  ScalarModes modes_;
  std::vector<std::vector<Monomial>> monomials_;  // by p * (n+1) + q
  std::vector<std::map<std::pair<Mask, Mask>, std::size_t>> monomial_lookup_;
  mutable std::mutex products_mutex_;
  mutable std::map<std::pair<Bidegree, Bidegree>, std::vector<Product>> products_;
  cplx tau_in_top_;

  std::size_t slot(Bidegree bd) const { return static_cast<std::size_t>(bd.p * (n_ + 1) + bd.q); }
};

/// A (p,q)-form: complex coefficients over the enumerated basis.
class Form {
 public:
  Form(std::shared_ptr<const FormSpace> space, Bidegree bidegree, Vec coeffs);

  static Form zero(std::shared_ptr<const FormSpace> space, Bidegree bidegree);
  static Form basis_element(std::shared_ptr<const FormSpace> space, Bidegree bidegree,
                            std::size_t index, cplx value = 1.0);

  const FormSpace& space() const { return *space_; }
  const std::shared_ptr<const FormSpace>& space_ptr() const { return space_; }
  Bidegree bidegree() const { return bidegree_; }
  const Vec& coeffs() const { return coeffs_; }
  std::size_t size() const { return static_cast<std::size_t>(coeffs_.size()); }

  cplx coeff(std::size_t mode, Mask holo, Mask anti) const;
  /// Euclidean norm of the coefficient vector (metric-free).
  double coeff_norm() const { return coeffs_.norm(); }

  Form operator+(const Form& other) const;
  Form operator-(const Form& other) const;
  Form operator-() const;
  Form operator*(cplx s) const;
  friend Form operator*(cplx s, const Form& f) { return f * s; }

 private:
  std::shared_ptr<const FormSpace> space_;
  Bidegree bidegree_;
  Vec coeffs_;

  void require_compatible(const Form& other) const;
};

/// Exterior product. Products of spectral modes that leave the mode set are
/// dropped (orthogonal projection back onto the mode set).
Form wedge(const Form& u, const Form& v);

/// Complex conjugation: (p,q) -> (q,p), mode m -> -m.
Form conjugate(const Form& u);

/// Matrix of u -> w ^ u on Lambda^{src} (Galerkin-truncated on the spectral backend).
Mat wedge_matrix(const Form& w, Bidegree src);

}  // namespace hsflow
