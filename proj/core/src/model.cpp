#include "hsflow/model.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include <fmt/format.h>

#include "hsflow/errors.hpp"

namespace hsflow {

const char* to_string(Backend b) { return b == Backend::invariant ? "invariant" : "spectral"; }

cplx evaluate(const Poly& p, cplx t) {
  cplx acc = 0.0;
  for (auto it = p.rbegin(); it != p.rend(); ++it) acc = acc * t + *it;
  return acc;
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

int minimum_grid(int n, const std::vector<ModeVector>& modes) {
  int k = 0;
  for (const auto& m : modes)
    for (int v : m) k = std::max(k, std::abs(v));
  return (std::max(n, 3) + 1) * k + 1;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

class Cursor {
 public:
  Cursor(const std::string& line, std::size_t lineno) : line_(line), lineno_(lineno) {}

  [[noreturn]] void fail(const std::string& message) const { throw ParseError(lineno_, pos_ + 1, message); }
  [[noreturn]] void fail_at(std::size_t pos, const std::string& message) const {
    throw ParseError(lineno_, pos + 1, message);
  }

  void skip_ws() {
    while (pos_ < line_.size() && (line_[pos_] == ' ' || line_[pos_] == '\t' || line_[pos_] == '\r')) ++pos_;
  }
  bool eof() {
    skip_ws();
    return pos_ >= line_.size();
  }
  char peek() {
    skip_ws();
    return pos_ < line_.size() ? line_[pos_] : '\0';
  }
  char peek_raw() const { return pos_ < line_.size() ? line_[pos_] : '\0'; }
  char peek_raw(std::size_t ahead) const { return pos_ + ahead < line_.size() ? line_[pos_ + ahead] : '\0'; }
  std::size_t pos() const { return pos_; }
  void advance(std::size_t k = 1) { pos_ += k; }

  void expect(const std::string& token) {
    skip_ws();
    if (line_.compare(pos_, token.size(), token) != 0) fail(fmt::format("expected '{}'", token));
    pos_ += token.size();
  }
  bool accept(const std::string& token) {
    skip_ws();
    if (line_.compare(pos_, token.size(), token) != 0) return false;
    pos_ += token.size();
    return true;
  }

  std::string word() {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < line_.size() && (std::isalnum(static_cast<unsigned char>(line_[pos_])) || line_[pos_] == '_')) ++pos_;
    if (start == pos_) fail("expected a keyword");
    return line_.substr(start, pos_ - start);
  }

  int integer() {
    skip_ws();
    const std::size_t start = pos_;
    if (pos_ < line_.size() && (line_[pos_] == '-' || line_[pos_] == '+')) ++pos_;
    while (pos_ < line_.size() && std::isdigit(static_cast<unsigned char>(line_[pos_]))) ++pos_;
    std::string text = line_.substr(start, pos_ - start);
    if (!text.empty() && text[0] == '+') text.erase(0, 1);
    int value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
      fail_at(start, "expected an integer");
    }
    return value;
  }

  /// Maximal run of characters that can belong to a complex literal.
  std::string literal_token() {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < line_.size()) {
      const char c = line_[pos_];
      if (c == ' ' || c == '\t' || c == '\r' || c == ',' || c == ')' || c == '*') break;
      ++pos_;
    }
    if (start == pos_) fail("expected a complex literal");
    return line_.substr(start, pos_ - start);
  }

 private:
  const std::string& line_;
  std::size_t lineno_;
  std::size_t pos_ = 0;
};

std::optional<double> parse_real(std::string text) {
  if (!text.empty() && text[0] == '+') text.erase(0, 1);
  if (text.empty()) return std::nullopt;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  return v;
}

std::optional<double> parse_imag_factor(const std::string& text) {
  if (text.empty() || text == "+") return 1.0;
  if (text == "-") return -1.0;
  return parse_real(text);
}

// Accepts a, bi, a+bi, a-bi, i, -i, a+i with optional exponents.
std::optional<cplx> parse_complex(const std::string& s) {
  if (s.empty()) return std::nullopt;
  if (s.back() != 'i') {
    auto re = parse_real(s);
    if (!re) return std::nullopt;
    return cplx(*re, 0.0);
  }
  const std::string body = s.substr(0, s.size() - 1);
  std::size_t split = std::string::npos;
  for (std::size_t k = body.size(); k-- > 1;) {
    if ((body[k] == '+' || body[k] == '-') && body[k - 1] != 'e' && body[k - 1] != 'E') {
      split = k;
      break;
    }
  }
  if (split == std::string::npos) {
    auto im = parse_imag_factor(body);
    if (!im) return std::nullopt;
    return cplx(0.0, *im);
  }
  auto re = parse_real(body.substr(0, split));
  auto im = parse_imag_factor(body.substr(split));
  if (!re || !im) return std::nullopt;
  return cplx(*re, *im);
}

Poly read_coefficient(Cursor& cur) {
  cur.skip_ws();
  const std::size_t start = cur.pos();
  if (cur.accept("poly")) {
    cur.expect("(");
    Poly p;
    while (true) {
      const std::size_t at = cur.pos();
      const std::string tok = cur.literal_token();
      auto v = parse_complex(tok);
      if (!v) cur.fail_at(at, fmt::format("malformed complex literal '{}'", tok));
      p.push_back(*v);
      if (cur.accept(")")) break;
      cur.expect(",");
    }
    while (p.size() > 1 && p.back() == cplx(0.0)) p.pop_back();
    return p;
  }
  const std::string tok = cur.literal_token();
  auto v = parse_complex(tok);
  if (!v) cur.fail_at(start, fmt::format("malformed complex literal '{}'", tok));
  return Poly{*v};
}

int read_index(Cursor& cur, int n, const char* what) {
  cur.skip_ws();
  const std::size_t at = cur.pos();
  const int v = cur.integer();
  if (v < 1 || v > n) cur.fail_at(at, fmt::format("{} index {} outside 1..{}", what, v, n));
  return v - 1;
}

ModeVector read_mode(Cursor& cur, int n) {
  ModeVector m(static_cast<std::size_t>(2 * n));
  for (auto& v : m) v = cur.integer();
  return m;
}

bool starts_basis(Cursor& cur) {
  const char c = cur.peek();
  return (c == 'e' || c == 'f' || c == 'g') && cur.peek_raw(1) == '(';
}

BasicStructureTerm<Poly> read_basis(Cursor& cur, int n, Poly coef) {
  BasicStructureTerm<Poly> term;
  term.c = std::move(coef);
  cur.skip_ws();
  term.kind = cur.peek_raw();
  if (!starts_basis(cur)) cur.fail("expected e(i,j), f(i,j) or g(i,j)");
  cur.advance();
  cur.expect("(");
  term.i = read_index(cur, n, "generator");
  cur.expect(",");
  term.j = read_index(cur, n, "generator");
  cur.expect(")");
  return term;
}

// sum := term (sep term)*, sep = '+' | '-' followed by whitespace or a basis symbol.
std::vector<BasicStructureTerm<Poly>> read_structure_sum(Cursor& cur, int n) {
  std::vector<BasicStructureTerm<Poly>> terms;
  cur.skip_ws();
  if (cur.peek_raw() == '0' && (cur.peek_raw(1) == '\0' || cur.peek_raw(1) == ' ' || cur.peek_raw(1) == '#')) {
    cur.advance();
    return terms;
  }
  bool first = true;
  while (!cur.eof()) {
    double sign = 1.0;
    const char c = cur.peek();
    const char next = cur.peek_raw(1);
    const bool sign_char = c == '+' || c == '-';
    const bool separator = sign_char && (!first || next == ' ' || next == '\t' || next == 'e' || next == 'f' ||
                                         next == 'g' || next == 'p');
    if (separator) {
      sign = (c == '-') ? -1.0 : 1.0;
      cur.advance();
    } else if (!first) {
      cur.fail("expected '+' or '-' between terms");
    }
    first = false;
    Poly coef{1.0};
    if (!starts_basis(cur)) {
      coef = read_coefficient(cur);
      cur.expect("*");
    }
    for (auto& v : coef) v *= sign;
    terms.push_back(read_basis(cur, n, std::move(coef)));
  }
  if (terms.empty()) cur.fail("expected at least one term");
  return terms;
}

std::vector<ModeVector> axis_modes(int n, int k) {
  std::vector<ModeVector> out;
  for (int axis = 0; axis < 2 * n; ++axis) {
    for (int j = 1; j <= k; ++j) {
      for (int s : {-1, 1}) {
        ModeVector m(static_cast<std::size_t>(2 * n), 0);
        m[static_cast<std::size_t>(axis)] = s * j;
        out.push_back(m);
      }
    }
  }
  return out;
}

std::vector<ModeVector> box_modes(int n, int k) {
  std::vector<ModeVector> out;
  ModeVector m(static_cast<std::size_t>(2 * n), -k);
  while (true) {
    out.push_back(m);
    std::size_t a = 0;
    while (a < m.size() && m[a] == k) m[a++] = -k;
    if (a == m.size()) break;
    ++m[a];
  }
  return out;
}

}  // namespace

std::optional<cplx> parse_complex_literal(const std::string& text) { return parse_complex(text); }

ModelTemplate parse_model_template(const std::string& text) {
  ModelTemplate model;
  model.hash = fnv1a(text);
  bool have_kind = false;
  bool have_n = false;

  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    Cursor cur(line, lineno);
    if (cur.eof()) continue;
    const std::size_t key_pos = cur.pos();
    const std::string key = cur.word();

    auto require_header = [&]() {
      if (!have_kind || !have_n) cur.fail_at(key_pos, "'kind' and 'n' must precede other directives");
    };
    auto require_backend = [&](Backend b) {
      require_header();
      if (model.backend != b) {
        cur.fail_at(key_pos, fmt::format("'{}' is only valid for {} models", key, to_string(b)));
      }
    };

    if (key == "kind") {
      const std::size_t at = cur.pos();
      if (have_kind) cur.fail_at(key_pos, "kind given twice");
      const std::string kind = cur.word();
      if (kind == "invariant") {
        model.backend = Backend::invariant;
      } else if (kind == "spectral") {
        model.backend = Backend::spectral;
      } else {
        cur.fail_at(at, fmt::format("unknown kind '{}'", kind));
      }
      have_kind = true;
    } else if (key == "n") {
      const std::size_t at = cur.pos();
      if (have_n) cur.fail_at(key_pos, "n given twice");
      model.n = cur.integer();
      if (model.n < 1 || model.n > 8) cur.fail_at(at, "n must lie in 1..8");
      model.d_phi.assign(static_cast<std::size_t>(model.n), {});
      have_n = true;
    } else if (key == "d") {
      require_backend(Backend::invariant);
      const int k = read_index(cur, model.n, "generator");
      cur.expect(":=");
      auto terms = read_structure_sum(cur, model.n);
      auto& dst = model.d_phi[static_cast<std::size_t>(k)];
      dst.insert(dst.end(), terms.begin(), terms.end());
    } else if (key == "modes") {
      require_backend(Backend::spectral);
      const std::size_t at = cur.pos();
      const std::string shape = cur.word();
      cur.expect("K");
      const int k = cur.integer();
      if (k < 0) cur.fail("K must be non-negative");
      std::vector<ModeVector> extra;
      if (shape == "axis") {
        extra = axis_modes(model.n, k);
      } else if (shape == "box") {
        extra = box_modes(model.n, k);
      } else {
        cur.fail_at(at, fmt::format("unknown mode set shape '{}' (axis or box)", shape));
      }
      model.modes.insert(model.modes.end(), extra.begin(), extra.end());
    } else if (key == "mode") {
      require_backend(Backend::spectral);
      model.modes.push_back(read_mode(cur, model.n));
    } else if (key == "grid") {
      require_backend(Backend::spectral);
      const std::size_t at = cur.pos();
      model.grid = cur.integer();
      if (model.grid < 1) cur.fail_at(at, "grid must be positive");
    } else if (key == "metric" || key == "metric_mode") {
      require_header();
      BasicMetricEntry<Poly> entry;
      if (key == "metric_mode") {
        require_backend(Backend::spectral);
        entry.mode = read_mode(cur, model.n);
      } else if (model.backend == Backend::spectral) {
        entry.mode.assign(static_cast<std::size_t>(2 * model.n), 0);
      }
      cur.expect("h");
      entry.i = read_index(cur, model.n, "metric");
      entry.j = read_index(cur, model.n, "metric");
      cur.expect(":=");
      entry.c = read_coefficient(cur);
      model.metric.push_back(std::move(entry));
    } else if (key == "potential") {
      require_header();
      BasicPotentialTerm<Poly> term;
      if (model.backend == Backend::spectral) term.mode = read_mode(cur, model.n);
      term.k = read_index(cur, model.n, "potential");
      cur.expect(":=");
      term.c = read_coefficient(cur);
      model.potential.push_back(std::move(term));
    } else if (key == "t_samples") {
      cur.expect(":=");
      while (true) {
        const std::size_t at = cur.pos();
        const std::string tok = cur.literal_token();
        auto v = parse_complex(tok);
        if (!v) cur.fail_at(at, fmt::format("malformed complex literal '{}'", tok));
        model.t_samples.push_back(*v);
        if (cur.eof()) break;
        cur.expect(",");
      }
    } else {
      cur.fail_at(key_pos, fmt::format("unknown directive '{}'", key));
    }
    if (!cur.eof()) cur.fail("unexpected trailing text");
  }
  if (!have_kind) throw ParseError(lineno + 1, 1, "missing 'kind' directive");
  if (!have_n) throw ParseError(lineno + 1, 1, "missing 'n' directive");
  if (model.backend == Backend::spectral && model.modes.empty()) {
    throw ParseError(lineno + 1, 1, "spectral model needs a mode set ('modes' or 'mode' lines)");
  }
  return model;
}

bool ModelTemplate::is_constant() const {
  auto constant = [](const Poly& p) { return p.size() <= 1; };
  for (const auto& list : d_phi)
    for (const auto& t : list)
      if (!constant(t.c)) return false;
  for (const auto& e : metric)
    if (!constant(e.c)) return false;
  for (const auto& p : potential)
    if (!constant(p.c)) return false;
  return true;
}

Model ModelTemplate::instantiate(cplx t) const {
  Model m;
  m.backend = backend;
  m.n = n;
  m.hash = hash;
  m.modes = modes;
  m.grid = grid;
  if (backend == Backend::spectral && grid == 0) m.grid = minimum_grid(n, modes);
  m.d_phi.resize(d_phi.size());
  for (std::size_t k = 0; k < d_phi.size(); ++k) {
    for (const auto& term : d_phi[k]) m.d_phi[k].push_back({evaluate(term.c, t), term.kind, term.i, term.j});
  }
  for (const auto& p : potential) m.potential.push_back({p.mode, p.k, evaluate(p.c, t)});

  // Metric: the constant part starts at the identity; every explicit entry
  // also fixes its Hermitian partner h_{ji}(-m) = conj h_{ij}(m).
  const ModeVector zero = backend == Backend::spectral ? ModeVector(static_cast<std::size_t>(2 * n), 0) : ModeVector{};
  m.metric[zero] = Mat::Identity(n, n);
  std::map<std::tuple<ModeVector, int, int>, cplx> explicit_entries;
  for (const auto& e : metric) {
    const cplx c = evaluate(e.c, t);
    const auto key = std::make_tuple(e.mode, e.i, e.j);
    const auto partner = std::make_tuple(negate(e.mode), e.j, e.i);
    if (auto it = explicit_entries.find(partner); it != explicit_entries.end()) {
      if (std::abs(it->second - std::conj(c)) > 1e-12 * (1.0 + std::abs(c))) {
        throw ValidationError(fmt::format("metric entry h {} {} conflicts with its Hermitian partner", e.i + 1, e.j + 1));
      }
    }
    explicit_entries[key] = c;
  }
  for (const auto& [key, c] : explicit_entries) {
    const auto& [mode, i, j] = key;
    for (const auto& [mm, ii, jj, value] :
         {std::make_tuple(mode, i, j, c), std::make_tuple(negate(mode), j, i, std::conj(c))}) {
      auto [it, inserted] = m.metric.try_emplace(mm, Mat::Zero(n, n));
      it->second(ii, jj) = value;
    }
  }
  validate(m);
  return m;
}

Model parse_model(const std::string& text) {
  ModelTemplate t = parse_model_template(text);
  if (!t.is_constant()) throw ValidationError("coefficients depend on t; load the file as a family");
  return t.instantiate(0.0);
}

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(fmt::format("cannot open model file '{}'", path));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

Model load_model(const std::string& path) { return parse_model(read_file(path)); }
ModelTemplate load_model_template(const std::string& path) { return parse_model_template(read_file(path)); }

// ---------------------------------------------------------------------------
// Invariant differential

namespace {

// Sign that sorts `seq` into increasing order, or 0 when it repeats an entry.
int sort_sign(std::vector<int> seq) {
  int sign = 1;
  for (std::size_t a = 0; a < seq.size(); ++a) {
    for (std::size_t b = a + 1; b < seq.size(); ++b) {
      if (seq[a] == seq[b]) return 0;
      if (seq[a] > seq[b]) sign = -sign;
    }
  }
  return sign;
}

void add_term(std::map<std::uint32_t, cplx>& out, std::uint32_t mask, cplx c) {
  if (c == cplx(0.0)) return;
  out[mask] += c;
}

}  // namespace

std::map<std::uint32_t, cplx> generator_differential(const Model& model, int k, bool conj) {
  const int n = model.n;
  std::map<std::uint32_t, cplx> out;
  for (const auto& term : model.d_phi[static_cast<std::size_t>(k)]) {
    int a = term.i;
    int b = term.j;
    if (term.kind == 'f') b += n;
    if (term.kind == 'g') {
      a += n;
      b += n;
    }
    cplx c = term.c;
    if (conj) {
      a = a < n ? a + n : a - n;
      b = b < n ? b + n : b - n;
      c = std::conj(c);
    }
    const int sign = sort_sign({a, b});
    if (sign == 0) continue;
    add_term(out, (1u << a) | (1u << b), static_cast<double>(sign) * c);
  }
  return out;
}

std::map<std::uint32_t, cplx> invariant_d(const Model& model, std::uint32_t monomial) {
  const int n = model.n;
  std::vector<int> covectors;
  for (int c = 0; c < 2 * n; ++c)
    if (monomial & (1u << c)) covectors.push_back(c);
  std::map<std::uint32_t, cplx> out;
  for (std::size_t s = 0; s < covectors.size(); ++s) {
    const int c = covectors[s];
    const auto dc = generator_differential(model, c < n ? c : c - n, c >= n);
    const double leibniz = (s % 2 == 0) ? 1.0 : -1.0;
    for (const auto& [mask, coef] : dc) {
      std::vector<int> seq(covectors.begin(), covectors.begin() + static_cast<std::ptrdiff_t>(s));
      for (int x = 0; x < 2 * n; ++x)
        if (mask & (1u << x)) seq.push_back(x);
      seq.insert(seq.end(), covectors.begin() + static_cast<std::ptrdiff_t>(s) + 1, covectors.end());
      const int sign = sort_sign(seq);
      if (sign == 0) continue;
      std::uint32_t result = 0;
      for (int x : seq) result |= 1u << x;
      add_term(out, result, leibniz * sign * coef);
    }
  }
  return out;
}

void validate(const Model& model) {
  const int n = model.n;
  if (n < 1 || n > 8) throw ValidationError(fmt::format("complex dimension {} not supported (1..8)", n));

  for (const auto& [mode, h] : model.metric) {
    if (h.rows() != n || h.cols() != n) throw ValidationError("metric coefficient has wrong shape");
  }

  if (model.backend == Backend::invariant) {
    double scale = 1.0;
    for (const auto& list : model.d_phi)
      for (const auto& t : list) scale = std::max(scale, std::abs(t.c));
    const double tol = 1e-12 * scale * scale;
    for (int k = 0; k < n; ++k) {
      for (const auto& [mask, c] : generator_differential(model, k, false)) {
        const std::uint32_t anti = mask >> n;
        if (std::popcount(anti) == 2 && std::abs(c) > 1e-12 * scale) {
          throw ValidationError(fmt::format(
              "d phi^{} has a nonzero (0,2) component: the almost complex structure is not integrable", k + 1));
        }
      }
      for (bool conj : {false, true}) {
        std::map<std::uint32_t, cplx> dd;
        for (const auto& [mask, c] : generator_differential(model, k, conj)) {
          for (const auto& [m2, c2] : invariant_d(model, mask)) dd[m2] += c * c2;
        }
        for (const auto& [mask, c] : dd) {
          if (std::abs(c) > tol) {
            throw ValidationError(fmt::format("d^2 phi^{} != 0 (residual {:.3e}): structure constants violate Jacobi",
                                              k + 1, std::abs(c)));
          }
        }
      }
    }
    // Stokes needs d to vanish on forms of degree 2n - 1.
    const std::uint32_t full = (1u << (2 * n)) - 1;
    for (int c = 0; c < 2 * n; ++c) {
      for (const auto& [mask, v] : invariant_d(model, full & ~(1u << c))) {
        if (std::abs(v) > tol) {
          throw ValidationError("the structure constants are not unimodular: d is nonzero on top-minus-one forms");
        }
      }
    }
    for (const auto& p : model.potential) {
      if (!p.mode.empty()) throw ValidationError("invariant potentials carry no mode vector");
    }
    return;
  }

  const ScalarModes modes = ScalarModes::lattice(n, model.modes);
  const int need = minimum_grid(n, modes.all());
  if (model.grid < need) {
    throw ValidationError(fmt::format("grid {} too coarse for the mode set (need at least {})", model.grid, need));
  }
  for (const auto& [mode, h] : model.metric) {
    if (!modes.find(mode)) throw ValidationError("metric_mode outside the mode set");
  }
  for (const auto& p : model.potential) {
    if (!modes.find(p.mode)) throw ValidationError("potential mode outside the mode set");
  }
}

}  // namespace hsflow
