#include "hsflow/positivity.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <fmt/format.h>

#include "hsflow/errors.hpp"

namespace hsflow {

const char* to_string(PositivityVerdict v) {
  switch (v) {
    case PositivityVerdict::positive: return "positive";
    case PositivityVerdict::semi_positive: return "semi-positive";
    case PositivityVerdict::refuted: return "refuted";
    case PositivityVerdict::inconclusive: return "inconclusive";
  }
  return "?";
}

namespace {

std::shared_ptr<const FormSpace> pointwise_space(int n) {
  static std::mutex mutex;
  static std::map<int, std::shared_ptr<const FormSpace>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[n];
  if (!slot) slot = std::make_shared<const FormSpace>(n, ScalarModes::unit());
  return slot;
}

// i a ^ conj(a) as a constant (1,1)-form.
Form positive_line(const std::shared_ptr<const FormSpace>& space, const Vec& a) {
  const int n = space->n();
  Vec c(static_cast<Eigen::Index>(space->dim({1, 1})));
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k)
      c(static_cast<Eigen::Index>(space->monomial_index({1, 1}, Mask{1} << j, Mask{1} << k))) =
          cplx(0.0, 1.0) * a(j) * std::conj(a(k));
  return Form(space, {1, 1}, std::move(c));
}

// Row vector f over the (p,p) monomials with u ^ t = (f . u) tau for a
// constant (n-p,n-p)-form t.
Eigen::RowVectorXcd functional(const FormSpace& space, int p, const Form& t) {
  const int n = space.n();
  const Mask full = (Mask{1} << n) - 1;
  const auto& mons = space.monomials({p, p});
  Eigen::RowVectorXcd f(static_cast<Eigen::Index>(mons.size()));
  const cplx inv_tau = 1.0 / space.tau_in_top();
  for (std::size_t i = 0; i < mons.size(); ++i) {
    const Monomial comp{full ^ mons[i].holo, full ^ mons[i].anti};
    const int sign = wedge_sign(n, mons[i], comp);
    const std::size_t ci = t.space().monomial_index({n - p, n - p}, comp.holo, comp.anti);
    f(static_cast<Eigen::Index>(i)) = static_cast<double>(sign) * t.coeffs()(static_cast<Eigen::Index>(ci)) * inv_tau;
  }
  return f;
}

Form tuple_form(int n, const std::vector<Vec>& alphas) {
  const auto space = pointwise_space(n);
  Form t = Form::basis_element(space, {0, 0}, 0);
  for (const auto& a : alphas) t = wedge(t, positive_line(space, a));
  return t;
}

std::vector<int> first_primes(std::size_t count) {
  std::vector<int> primes;
  for (int c = 2; primes.size() < count; ++c) {
    bool prime = true;
    for (int p : primes) {
      if (p * p > c) break;
      if (c % p == 0) {
        prime = false;
        break;
      }
    }
    if (prime) primes.push_back(c);
  }
  return primes;
}

double radical_inverse(std::size_t index, int base) {
  double result = 0.0;
  double f = 1.0 / base;
  while (index > 0) {
    result += f * static_cast<double>(index % static_cast<std::size_t>(base));
    index /= static_cast<std::size_t>(base);
    f /= base;
  }
  return result;
}

std::vector<std::vector<Vec>> sample_tuples(int n, int s, const SamplerSpec& spec) {
  std::vector<std::vector<Vec>> out;
  if (s == 0) {
    out.emplace_back();
    return out;
  }
  // Coordinate-axis tuples first.
  std::vector<int> pick(static_cast<std::size_t>(s));
  for (int k = 0; k < s; ++k) pick[static_cast<std::size_t>(k)] = k;
  while (true) {
    std::vector<Vec> tuple;
    for (int k : pick) tuple.push_back(Vec::Unit(n, k));
    out.push_back(std::move(tuple));
    int k = s - 1;
    while (k >= 0 && pick[static_cast<std::size_t>(k)] == n - s + k) --k;
    if (k < 0) break;
    ++pick[static_cast<std::size_t>(k)];
    for (int j = k + 1; j < s; ++j) pick[static_cast<std::size_t>(j)] = pick[static_cast<std::size_t>(j - 1)] + 1;
  }
  // Halton points with a seeded Cranley-Patterson rotation.
  const std::size_t dims = static_cast<std::size_t>(2 * n * s);
  const auto primes = first_primes(dims);
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> shift(dims);
  for (auto& v : shift) v = unif(rng);
  for (std::size_t idx = 1; idx <= spec.samples; ++idx) {
    std::vector<Vec> tuple;
    std::size_t d = 0;
    for (int j = 0; j < s; ++j) {
      Vec a(n);
      for (int k = 0; k < n; ++k) {
        const double re = 2.0 * std::fmod(radical_inverse(idx, primes[d]) + shift[d], 1.0) - 1.0;
        ++d;
        const double im = 2.0 * std::fmod(radical_inverse(idx, primes[d]) + shift[d], 1.0) - 1.0;
        ++d;
        a(k) = cplx(re, im);
      }
      const double norm = a.norm();
      if (norm > 0) a /= norm;
      tuple.push_back(std::move(a));
    }
    out.push_back(std::move(tuple));
  }
  return out;
}

double value_scale(const GridForm& u) { return std::max(1.0, u.values.cwiseAbs().maxCoeff()); }

// Coefficient matrix c of u = i sum c_jk dz^j ^ dzbar^k at a node.
Mat coefficient_matrix_11(const GridForm& u, std::size_t node) {
  const FormSpace& space = *u.space;
  const int n = space.n();
  Mat c(n, n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k)
      c(j, k) = cplx(0.0, -1.0) *
                u.values(static_cast<Eigen::Index>(node),
                         static_cast<Eigen::Index>(space.monomial_index({1, 1}, Mask{1} << j, Mask{1} << k)));
  return c;
}

// M_jk = tau-coefficient of u ^ i dz^j ^ dzbar^k for an (n-1,n-1)-form u.
Mat coefficient_matrix_dual(const GridForm& u, std::size_t node) {
  const FormSpace& space = *u.space;
  const int n = space.n();
  const auto ps = pointwise_space(n);
  Mat m(n, n);
  const Eigen::RowVectorXcd row = u.values.row(static_cast<Eigen::Index>(node));
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < n; ++k) {
      const auto idx = ps->monomial_index({1, 1}, Mask{1} << j, Mask{1} << k);
      const Form t = Form::basis_element(ps, {1, 1}, idx, cplx(0.0, 1.0));
      m(j, k) = (functional(space, n - 1, t) * row.transpose())(0);
    }
  }
  return m;
}

// Covectors spanning {a : sum_k a_k w_k = 0}.
std::vector<Vec> annihilator(const Vec& w) {
  const auto n = w.size();
  Eigen::HouseholderQR<Mat> qr(w.conjugate());
  const Mat q = qr.householderQ() * Mat::Identity(n, n);
  std::vector<Vec> out;
  for (Eigen::Index k = 1; k < n; ++k) out.push_back(q.col(k));
  return out;
}

struct EigenResult {
  double margin = std::numeric_limits<double>::infinity();
  std::size_t node = 0;
  Vec vector;
};

EigenResult min_eigen(const GridForm& u, bool dual) {
  EigenResult r;
  for (Eigen::Index x = 0; x < u.values.rows(); ++x) {
    const auto node = static_cast<std::size_t>(x);
    Mat c = dual ? coefficient_matrix_dual(u, node) : coefficient_matrix_11(u, node);
    c = 0.5 * (c + c.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<Mat> eig(c);
    if (eig.eigenvalues()(0) < r.margin) {
      r.margin = eig.eigenvalues()(0);
      r.node = node;
      r.vector = eig.eigenvectors().col(0);
    }
  }
  return r;
}

// Turns a negative eigenvector into a verified refuting tuple.
bool eigen_witness(const GridForm& u, const EigenResult& e, bool dual, PositivityReport& report) {
  const int n = u.space->n();
  for (const Vec& v : {Vec(e.vector), Vec(e.vector.conjugate())}) {
    std::vector<Vec> tuple;
    if (dual) {
      tuple.push_back(v);
    } else {
      tuple = annihilator(v);
    }
    if (static_cast<int>(tuple.size()) != n - u.bidegree.p) continue;
    const double value = tuple_pairing(u, e.node, tuple).real();
    if (value < 0.0) {
      report.witness = std::move(tuple);
      report.witness_node = e.node;
      report.witness_pairing = value;
      return true;
    }
  }
  return false;
}

PositivityVerdict classify_margin(double margin, double scale) {
  if (margin < -1e-12 * scale) return PositivityVerdict::refuted;
  if (margin > 1e-10 * scale) return PositivityVerdict::positive;
  return PositivityVerdict::semi_positive;
}

}  // namespace

cplx tuple_pairing(const GridForm& u, std::size_t node, const std::vector<Vec>& alphas) {
  const int n = u.space->n();
  const int p = u.bidegree.p;
  if (u.bidegree.q != p || p + static_cast<int>(alphas.size()) != n) {
    throw DegreeError("tuple pairing needs a (p,p)-form and n-p covectors");
  }
  const Eigen::RowVectorXcd f = functional(*u.space, p, tuple_form(n, alphas));
  return (f * u.values.row(static_cast<Eigen::Index>(node)).transpose())(0);
}

PositivityReport check_weak_positivity(const GridForm& u, const SamplerSpec& spec) {
  const int n = u.space->n();
  const int p = u.bidegree.p;
  if (u.bidegree.q != p) throw DegreeError(fmt::format("positivity needs bidegree (p,p), got ({},{})", p, u.bidegree.q));
  const int s = n - p;
  const double scale = value_scale(u);

  PositivityReport report;
  const auto tuples = sample_tuples(n, s, spec);
  report.samples_used = tuples.size();
  Mat functionals(u.values.cols(), static_cast<Eigen::Index>(tuples.size()));
  for (std::size_t t = 0; t < tuples.size(); ++t) {
    functionals.col(static_cast<Eigen::Index>(t)) = functional(*u.space, p, tuple_form(n, tuples[t])).transpose();
  }
  const Mat pairings = u.values * functionals;
  Eigen::Index arg_node = 0;
  Eigen::Index arg_tuple = 0;
  report.min_pairing = pairings.real().minCoeff(&arg_node, &arg_tuple);
  report.max_imaginary = pairings.imag().cwiseAbs().maxCoeff();

  if (report.max_imaginary > 1e-10 * scale) {
    report.verdict = PositivityVerdict::inconclusive;
    return report;
  }
  report.verdict = classify_margin(report.min_pairing, scale);
  if (report.verdict == PositivityVerdict::refuted) {
    report.witness = tuples[static_cast<std::size_t>(arg_tuple)];
    report.witness_node = static_cast<std::size_t>(arg_node);
    report.witness_pairing = report.min_pairing;
  }

  const bool low = p == 1;
  const bool high = p == n - 1;
  if (low || high) {
    const EigenResult e = min_eigen(u, !low);
    report.eigen_margin = e.margin;
    report.sampling_grade = false;
    const PositivityVerdict exact = classify_margin(e.margin, scale);
    if (exact == PositivityVerdict::refuted && report.verdict != PositivityVerdict::refuted) {
      if (!eigen_witness(u, e, !low, report)) {
        throw NumericalContractError("negative eigenvalue without a refuting covector tuple");
      }
    }
    report.verdict = exact;
  }
  return report;
}

PositivityReport check_weak_positivity(const FormComplex& complex, const Form& u, const SamplerSpec& spec) {
  return check_weak_positivity(sample(complex.grid(), u), spec);
}

PositivityReport check_strong_positivity_11(const FormComplex& complex, const Form& u) {
  if (u.bidegree() != Bidegree{1, 1}) throw DegreeError("strong (1,1) positivity needs a (1,1)-form");
  const GridForm g = sample(complex.grid(), u);
  const double scale = value_scale(g);
  PositivityReport report;
  report.sampling_grade = false;
  report.samples_used = g.values.rows();
  for (Eigen::Index x = 0; x < g.values.rows(); ++x) {
    const Mat c = coefficient_matrix_11(g, static_cast<std::size_t>(x));
    report.max_imaginary = std::max(report.max_imaginary, (c - c.adjoint()).norm());
  }
  if (report.max_imaginary > 1e-10 * scale) {
    report.verdict = PositivityVerdict::inconclusive;
    return report;
  }
  const EigenResult e = min_eigen(g, false);
  report.eigen_margin = e.margin;
  report.min_pairing = e.margin;
  report.verdict = classify_margin(e.margin, scale);
  if (report.verdict == PositivityVerdict::refuted && !eigen_witness(g, e, false, report)) {
    throw NumericalContractError("negative eigenvalue without a refuting covector tuple");
  }
  return report;
}

}  // namespace hsflow
