#include "hsflow/forms.hpp"

#include <algorithm>
#include <bit>
#include <fmt/format.h>

#include "hsflow/errors.hpp"

namespace hsflow {

std::vector<int> mask_indices(Mask mask) {
  std::vector<int> out;
  for (int j = 0; mask != 0; ++j, mask >>= 1) {
    if (mask & 1u) out.push_back(j);
  }
  return out;
}

int popcount(Mask mask) { return std::popcount(mask); }

ModeVector negate(const ModeVector& m) {
  ModeVector out(m.size());
  std::transform(m.begin(), m.end(), out.begin(), [](int v) { return -v; });
  return out;
}

ModeVector add(const ModeVector& a, const ModeVector& b) {
  ModeVector out(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = a[k] + b[k];
  return out;
}

// ---------------------------------------------------------------------------
// ScalarModes

ScalarModes ScalarModes::unit() {
  ScalarModes s;
  s.unit_ = true;
  s.modes_ = {ModeVector{}};
  s.negated_ = {0};
  s.zero_ = 0;
  s.lookup_[ModeVector{}] = 0;
  return s;
}

ScalarModes ScalarModes::lattice(int n, std::vector<ModeVector> modes) {
  const std::size_t len = static_cast<std::size_t>(2 * n);
  for (const auto& m : modes) {
    if (m.size() != len) {
      throw ValidationError(fmt::format("mode vector has {} entries, expected {}", m.size(), len));
    }
  }
  modes.push_back(ModeVector(len, 0));
  std::sort(modes.begin(), modes.end());
  modes.erase(std::unique(modes.begin(), modes.end()), modes.end());

  ScalarModes s;
  s.unit_ = false;
  s.modes_ = std::move(modes);
  for (std::size_t i = 0; i < s.modes_.size(); ++i) s.lookup_[s.modes_[i]] = i;
  s.negated_.resize(s.modes_.size());
  for (std::size_t i = 0; i < s.modes_.size(); ++i) {
    auto it = s.lookup_.find(negate(s.modes_[i]));
    if (it == s.lookup_.end()) {
      std::string text;
      for (int v : s.modes_[i]) text += fmt::format(" {}", v);
      throw ValidationError("mode set is not symmetric: missing the negative of mode" + text);
    }
    s.negated_[i] = it->second;
  }
  s.zero_ = s.lookup_.at(ModeVector(len, 0));
  return s;
}

std::optional<std::size_t> ScalarModes::find(const ModeVector& m) const {
  auto it = lookup_.find(m);
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> ScalarModes::sum(std::size_t a, std::size_t b) const {
  if (unit_) return 0;
  return find(add(modes_[a], modes_[b]));
}

int ScalarModes::max_abs() const {
  int best = 0;
  for (const auto& m : modes_)
    for (int v : m) best = std::max(best, std::abs(v));
  return best;
}

// ---------------------------------------------------------------------------
// Basis enumeration

namespace {

// All size-k subsets of {0..n-1}, ordered lexicographically as increasing
// sequences.
std::vector<Mask> subsets(int n, int k) {
  std::vector<Mask> out;
  std::vector<int> idx(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
  if (k > n) return out;
  while (true) {
    Mask m = 0;
    for (int v : idx) m |= Mask{1} << v;
    out.push_back(m);
    int i = k - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - k + i) --i;
    if (i < 0) break;
    ++idx[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < k; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
  return out;
}

Mask full_mask(int n, const Monomial& m) { return m.holo | (m.anti << n); }

}  // namespace

std::vector<BasisIndex> enumerate_basis(int n, int p, int q, const ScalarModes& modes) {
  if (n < 0 || p < 0 || q < 0 || p > n || q > n) {
    throw DegreeError(fmt::format("bidegree ({},{}) out of range for n = {}", p, q, n));
  }
  const auto holo = subsets(n, p);
  const auto anti = subsets(n, q);
  std::vector<BasisIndex> out;
  out.reserve(modes.size() * holo.size() * anti.size());
  for (std::size_t m = 0; m < modes.size(); ++m)
    for (Mask i : holo)
      for (Mask j : anti) out.push_back({m, i, j});
  return out;
}

int wedge_sign(int n, const Monomial& a, const Monomial& b) {
  const Mask fa = full_mask(n, a);
  const Mask fb = full_mask(n, b);
  if ((fa & fb) != 0) return 0;
  // Count inversions: pairs (x in a, y in b) with x > y.
  int inversions = 0;
  for (Mask rest = fb; rest != 0; rest &= rest - 1) {
    const int y = std::countr_zero(rest);
    inversions += std::popcount(fa >> (y + 1));
  }
  return (inversions % 2 == 0) ? 1 : -1;
}

// ---------------------------------------------------------------------------
// FormSpace

FormSpace::FormSpace(int n, ScalarModes modes) : n_(n), modes_(std::move(modes)) {
  if (n < 1 || n > 8) throw ValidationError(fmt::format("complex dimension {} not supported (1..8)", n));
  const std::size_t slots = static_cast<std::size_t>((n + 1) * (n + 1));
  monomials_.resize(slots);
  monomial_lookup_.resize(slots);
  for (int p = 0; p <= n; ++p) {
    for (int q = 0; q <= n; ++q) {
      const std::size_t s = slot({p, q});
      for (Mask i : subsets(n, p)) {
        for (Mask j : subsets(n, q)) {
          monomial_lookup_[s][{i, j}] = monomials_[s].size();
          monomials_[s].push_back({i, j});
        }
      }
    }
  }
  // tau = prod_j (i dz^j ^ dzbar^j) = i^n (-1)^{n(n-1)/2} dz^1..dz^n ^ dzbar^1..dzbar^n.
  cplx c = std::pow(cplx(0.0, 1.0), n);
  if (((n * (n - 1)) / 2) % 2 == 1) c = -c;
  tau_in_top_ = c;
}

void FormSpace::require(Bidegree bd) const {
  if (!valid(bd)) throw DegreeError(fmt::format("bidegree ({},{}) out of range for n = {}", bd.p, bd.q, n_));
}

const std::vector<Monomial>& FormSpace::monomials(Bidegree bd) const {
  require(bd);
  return monomials_[slot(bd)];
}

std::size_t FormSpace::monomial_count(Bidegree bd) const {
  if (!valid(bd)) return 0;
  return monomials_[slot(bd)].size();
}

std::size_t FormSpace::monomial_index(Bidegree bd, Mask holo, Mask anti) const {
  require(bd);
  return monomial_lookup_[slot(bd)].at({holo, anti});
}

std::size_t FormSpace::dim(Bidegree bd) const { return monomial_count(bd) * modes_.size(); }

BasisIndex FormSpace::basis(Bidegree bd, std::size_t index) const {
  const std::size_t mc = monomial_count(bd);
  const auto& mono = monomials(bd)[index % mc];
  return {index / mc, mono.holo, mono.anti};
}

const std::vector<FormSpace::Product>& FormSpace::product_table(Bidegree a, Bidegree b) const {
  std::lock_guard lock(products_mutex_);
  auto key = std::make_pair(a, b);
  auto it = products_.find(key);
  if (it != products_.end()) return it->second;
  const Bidegree c{a.p + b.p, a.q + b.q};
  require(a);
  require(b);
  require(c);
  const auto& ma = monomials(a);
  const auto& mb = monomials(b);
  std::vector<Product> table(ma.size() * mb.size());
  for (std::size_t i = 0; i < ma.size(); ++i) {
    for (std::size_t j = 0; j < mb.size(); ++j) {
      const int sign = wedge_sign(n_, ma[i], mb[j]);
      if (sign == 0) continue;
      table[i * mb.size() + j] = {monomial_index(c, ma[i].holo | mb[j].holo, ma[i].anti | mb[j].anti), sign};
    }
  }
  return products_.emplace(key, std::move(table)).first->second;
}

// ---------------------------------------------------------------------------
// Form

Form::Form(std::shared_ptr<const FormSpace> space, Bidegree bidegree, Vec coeffs)
    : space_(std::move(space)), bidegree_(bidegree), coeffs_(std::move(coeffs)) {
  space_->require(bidegree_);
  if (static_cast<std::size_t>(coeffs_.size()) != space_->dim(bidegree_)) {
    throw DegreeError(fmt::format("coefficient vector of length {} does not match dim Lambda^({},{}) = {}",
                                  coeffs_.size(), bidegree_.p, bidegree_.q, space_->dim(bidegree_)));
  }
}

Form Form::zero(std::shared_ptr<const FormSpace> space, Bidegree bidegree) {
  space->require(bidegree);
  const auto d = static_cast<Eigen::Index>(space->dim(bidegree));
  return Form(std::move(space), bidegree, Vec::Zero(d));
}

Form Form::basis_element(std::shared_ptr<const FormSpace> space, Bidegree bidegree, std::size_t index,
                         cplx value) {
  Form f = zero(std::move(space), bidegree);
  f.coeffs_(static_cast<Eigen::Index>(index)) = value;
  return f;
}

cplx Form::coeff(std::size_t mode, Mask holo, Mask anti) const {
  return coeffs_(static_cast<Eigen::Index>(space_->index(bidegree_, mode, space_->monomial_index(bidegree_, holo, anti))));
}

void Form::require_compatible(const Form& other) const {
  if (space_ != other.space_ && (space_->n() != other.space_->n() || coeffs_.size() != other.coeffs_.size())) {
    throw DegreeError("forms live on different complexes");
  }
  if (bidegree_ != other.bidegree_) {
    throw DegreeError(fmt::format("cannot add forms of bidegree ({},{}) and ({},{})", bidegree_.p, bidegree_.q,
                                  other.bidegree_.p, other.bidegree_.q));
  }
}

Form Form::operator+(const Form& other) const {
  require_compatible(other);
  return Form(space_, bidegree_, coeffs_ + other.coeffs_);
}

Form Form::operator-(const Form& other) const {
  require_compatible(other);
  return Form(space_, bidegree_, coeffs_ - other.coeffs_);
}

Form Form::operator-() const { return Form(space_, bidegree_, -coeffs_); }

Form Form::operator*(cplx s) const { return Form(space_, bidegree_, coeffs_ * s); }

Form wedge(const Form& u, const Form& v) {
  if (&u.space() != &v.space() && u.space().n() != v.space().n()) {
    throw DegreeError("wedge of forms from different complexes");
  }
  const FormSpace& space = u.space();
  const Bidegree a = u.bidegree();
  const Bidegree b = v.bidegree();
  const Bidegree c{a.p + b.p, a.q + b.q};
  if (!space.valid(c)) {
    throw DegreeError(fmt::format("wedge of ({},{}) and ({},{}) exceeds n = {}", a.p, a.q, b.p, b.q, space.n()));
  }
  const auto& table = space.product_table(a, b);
  const std::size_t ma = space.monomial_count(a);
  const std::size_t mb = space.monomial_count(b);
  const std::size_t mc = space.monomial_count(c);
  const auto& modes = space.modes();
  Vec out = Vec::Zero(static_cast<Eigen::Index>(space.dim(c)));
  for (std::size_t ka = 0; ka < modes.size(); ++ka) {
    for (std::size_t kb = 0; kb < modes.size(); ++kb) {
      const auto kc = modes.sum(ka, kb);
      if (!kc) continue;
      for (std::size_t i = 0; i < ma; ++i) {
        const cplx ui = u.coeffs()(static_cast<Eigen::Index>(ka * ma + i));
        if (ui == cplx(0.0)) continue;
        for (std::size_t j = 0; j < mb; ++j) {
          const auto& prod = table[i * mb + j];
          if (prod.sign == 0) continue;
          out(static_cast<Eigen::Index>(*kc * mc + prod.monomial)) +=
              static_cast<double>(prod.sign) * ui * v.coeffs()(static_cast<Eigen::Index>(kb * mb + j));
        }
      }
    }
  }
  return Form(u.space_ptr(), c, std::move(out));
}

Form conjugate(const Form& u) {
  const FormSpace& space = u.space();
  const Bidegree a = u.bidegree();
  const Bidegree b = a.conjugate();
  const auto& ma = space.monomials(a);
  const std::size_t mca = ma.size();
  const std::size_t mcb = space.monomial_count(b);
  // conj(dz^I ^ dzbar^J) = dzbar^I ^ dz^J = (-1)^{pq} dz^J ^ dzbar^I.
  const double sign = ((a.p * a.q) % 2 == 0) ? 1.0 : -1.0;
  Vec out = Vec::Zero(static_cast<Eigen::Index>(space.dim(b)));
  const auto& modes = space.modes();
  for (std::size_t k = 0; k < modes.size(); ++k) {
    const std::size_t kn = modes.negated(k);
    for (std::size_t i = 0; i < mca; ++i) {
      const std::size_t j = space.monomial_index(b, ma[i].anti, ma[i].holo);
      out(static_cast<Eigen::Index>(kn * mcb + j)) = sign * std::conj(u.coeffs()(static_cast<Eigen::Index>(k * mca + i)));
    }
  }
  return Form(u.space_ptr(), b, std::move(out));
}

Mat wedge_matrix(const Form& w, Bidegree src) {
  const FormSpace& space = w.space();
  const Bidegree a = w.bidegree();
  const Bidegree c{a.p + src.p, a.q + src.q};
  space.require(src);
  if (!space.valid(c)) {
    throw DegreeError(fmt::format("wedge of ({},{}) and ({},{}) exceeds n = {}", a.p, a.q, src.p, src.q, space.n()));
  }
  const auto& table = space.product_table(a, src);
  const std::size_t ma = space.monomial_count(a);
  const std::size_t mb = space.monomial_count(src);
  const std::size_t mc = space.monomial_count(c);
  const auto& modes = space.modes();
  Mat out = Mat::Zero(static_cast<Eigen::Index>(space.dim(c)), static_cast<Eigen::Index>(space.dim(src)));
  for (std::size_t ka = 0; ka < modes.size(); ++ka) {
    for (std::size_t i = 0; i < ma; ++i) {
      const cplx wi = w.coeffs()(static_cast<Eigen::Index>(ka * ma + i));
      if (wi == cplx(0.0)) continue;
      for (std::size_t kb = 0; kb < modes.size(); ++kb) {
        const auto kc = modes.sum(ka, kb);
        if (!kc) continue;
        for (std::size_t j = 0; j < mb; ++j) {
          const auto& prod = table[i * mb + j];
          if (prod.sign == 0) continue;
          out(static_cast<Eigen::Index>(*kc * mc + prod.monomial), static_cast<Eigen::Index>(kb * mb + j)) +=
              static_cast<double>(prod.sign) * wi;
        }
      }
    }
  }
  return out;
}

}  // namespace hsflow
