#pragma once

#include <memory>

#include "hsflow/complex.hpp"
#include "hsflow/forms.hpp"
#include "hsflow/grid.hpp"
#include "hsflow/model.hpp"

namespace hsflow {

/// The (1,1)-form i sum h_jk dz^j ^ dzbar^k of the model metric.
Form metric_form(const Model& model, const std::shared_ptr<const FormComplex>& complex);
/// The (1,0)-potential sum c e_m dz^k listed in the model (zero when absent).
Form potential_form(const Model& model, const std::shared_ptr<const FormComplex>& complex);
/// omega + del(conj u) + delbar(u) for a (1,0)-form u.
Form aeppli_shift(const FormComplex& complex, const Form& omega, const Form& u);

/// Smallest eigenvalue of the coefficient matrix h over the quadrature nodes
/// (negative or zero when omega is not positive). Non-throwing.
double metric_margin(const FormComplex& complex, const Form& omega);

struct PrimitivityCheck {
  bool primitive = false;
  double residual = 0.0;  // ||L* u||
};

/// A Hermitian metric omega on a form complex. All inner products are the
/// quadrature inner products int <u, v> dV over the grid, so Gram matrices,
/// the Hodge star and the wedge pairing agree exactly:
///   int u ^ *conj(v) = <u, v>  for u, v in the same bidegree.
/// Cheap to copy; Gram matrices are built on first use and shared.
class HermitianStructure {
 public:
  /// Throws ValidationError when omega is not real and PositivityError when
  /// it is not positive definite at every node.
  HermitianStructure(std::shared_ptr<const FormComplex> complex, Form omega);

  static HermitianStructure from_model(const Model& model, std::shared_ptr<const FormComplex> complex);
  HermitianStructure with_omega(Form omega) const;

  const FormComplex& complex() const;
  const std::shared_ptr<const FormComplex>& complex_ptr() const;
  const Form& omega() const;
  int n() const;

  /// Minimum over the nodes of the smallest eigenvalue of h.
  double margin() const;
  /// Coefficient matrix h at a quadrature node.
  Mat h_at(std::size_t node) const;
  /// Total volume int omega_n.
  double volume() const;

  /// Hermitian positive definite Gram matrix: <u, v> = v^H G u.
  const Mat& gram(Bidegree bd) const;
  cplx inner(const Form& u, const Form& v) const;
  double norm(const Form& u) const;
  /// Gram adjoint of op : Lambda^src -> Lambda^dst.
  Mat adjoint(const Mat& op, Bidegree src, Bidegree dst) const;

  /// Pointwise inner products <e_a, e_b> of the monomials of one bidegree at a node.
  Mat pointwise_gram(Bidegree bd, std::size_t node) const;
  /// Pointwise norm of a sampled form at every node.
  Eigen::VectorXd pointwise_norm(const GridForm& u) const;
  /// Quadrature L2 norm of a sampled form (agrees with norm() on the mode set).
  double norm(const GridForm& u) const;
  /// det h at every node (dV = det h tau).
  const Eigen::VectorXd& density() const;

  /// omega^k / k! sampled on the grid.
  GridForm omega_power_sampled(int k) const;
  /// omega^k / k! projected onto the mode set.
  Form omega_power(int k) const;

  /// Complex-linear Hodge star, Lambda^{p,q} -> Lambda^{n-q,n-p}.
  GridForm hodge_star(const GridForm& u) const;
  Form hodge_star(const Form& u) const;

  /// Matrix of L u = omega ^ u on Lambda^src.
  Mat lefschetz(Bidegree src) const;
  /// Matrix of L* : Lambda^{p+1,q+1} -> Lambda^{p,q}, where src = (p,q).
  Mat lefschetz_adjoint(Bidegree src) const;
  PrimitivityCheck is_primitive(const Form& u, double tol = 1e-10) const;

 private:
  struct Impl;
  std::shared_ptr<const Impl> impl_;
  explicit HermitianStructure(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
};

}  // namespace hsflow
