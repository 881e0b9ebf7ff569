#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "hsflow/forms.hpp"
#include "hsflow/grid.hpp"
#include "hsflow/model.hpp"

namespace hsflow {

/// A finite-dimensional bigraded complex: the degree spaces of a FormSpace
/// together with the matrices of del and delbar in the fixed basis order.
class FormComplex {
 public:
  FormComplex(Backend backend, std::shared_ptr<const FormSpace> space, std::shared_ptr<const QuadratureGrid> grid,
              std::vector<Mat> del, std::vector<Mat> delbar);

  Backend backend() const { return backend_; }
  int n() const { return space_->n(); }
  const FormSpace& space() const { return *space_; }
  const std::shared_ptr<const FormSpace>& space_ptr() const { return space_; }
  const QuadratureGrid& grid() const { return *grid_; }
  const std::shared_ptr<const QuadratureGrid>& grid_ptr() const { return grid_; }
  std::size_t dim(Bidegree bd) const { return space_->dim(bd); }

  /// del : Lambda^{p,q} -> Lambda^{p+1,q}. A dim(p+1,q) x dim(p,q) matrix,
  /// with zero rows when p = n.
  const Mat& del(Bidegree bd) const;
  /// delbar : Lambda^{p,q} -> Lambda^{p,q+1}.
  const Mat& delbar(Bidegree bd) const;

  Form apply_del(const Form& u) const;
  Form apply_delbar(const Form& u) const;

  Form zero(Bidegree bd) const { return Form::zero(space_, bd); }

 private:
  Backend backend_;
  std::shared_ptr<const FormSpace> space_;
  std::shared_ptr<const QuadratureGrid> grid_;
  std::vector<Mat> del_;
  std::vector<Mat> delbar_;

  std::size_t slot(Bidegree bd) const;
};

/// (del u, delbar u); a component is empty when its target bidegree leaves
/// the complex (the operator is zero there).
struct DFull {
  std::optional<Form> del;
  std::optional<Form> delbar;
};

DFull d_full(const FormComplex& complex, const Form& u);

std::shared_ptr<const FormComplex> build_complex(const Model& model);

/// Largest entry of del^2, delbar^2 and del delbar + delbar del over all bidegrees.
double identity_defect(const FormComplex& complex);

/// Coefficient of dz^j in del e_m (j 0-based), with z_j = x_j + i x_{n+j}.
cplx del_symbol(const ModeVector& m, int n, int j);
/// Coefficient of dzbar^j in delbar e_m.
cplx delbar_symbol(const ModeVector& m, int n, int j);

}  // namespace hsflow
