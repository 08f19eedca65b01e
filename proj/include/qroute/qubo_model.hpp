#pragma once

// Binary polynomials over named variable arrays and their compilation to
// QUBO form (linear + quadratic + offset).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qroute {

using Bits = std::vector<std::uint8_t>;

/// Thrown by compile() when a term of degree > 2 survives reduction.
class UncompilableDegreeError : public std::domain_error {
 public:
  explicit UncompilableDegreeError(std::vector<std::size_t> term)
      : std::domain_error(describe(term)), term_(std::move(term)) {}

  const std::vector<std::size_t>& term() const noexcept { return term_; }

 private:
  static std::string describe(const std::vector<std::size_t>& term) {
    std::string s = "term of degree " + std::to_string(term.size()) +
                    " cannot be compiled to QUBO: {";
    for (std::size_t i = 0; i < term.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(term[i]);
    }
    return s + "}";
  }
  std::vector<std::size_t> term_;
};

enum class VariableKind { kDecision, kSlack };

/// Named variable arrays laid out contiguously in registration order,
/// row-major inside each array.
class VariableRegistry {
 public:
  struct Entry {
    std::string name;
    std::vector<std::size_t> shape;
    std::size_t offset = 0;
    std::size_t size = 0;
    VariableKind kind = VariableKind::kDecision;
  };

  /// Returns the flat offset of the new array.
  std::size_t add_array(const std::string& name,
                        std::vector<std::size_t> shape,
                        VariableKind kind = VariableKind::kDecision) {
    if (shape.empty()) throw std::invalid_argument("empty shape for '" + name + "'");
    for (auto d : shape)
      if (d < 1) throw std::invalid_argument("zero extent in shape of '" + name + "'");
    if (find(name) != nullptr) throw std::invalid_argument("duplicate variable name '" + name + "'");
    Entry e;
    e.name = name;
    e.size = std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                             std::multiplies<>());
    e.shape = std::move(shape);
    e.offset = total_;
    e.kind = kind;
    total_ += e.size;
    entries_.push_back(std::move(e));
    return entries_.back().offset;
  }

  std::size_t total_count() const noexcept { return total_; }
  const std::vector<Entry>& entries() const noexcept { return entries_; }

  const Entry* find(const std::string& name) const {
    for (const auto& e : entries_)
      if (e.name == name) return &e;
    return nullptr;
  }

  const Entry& at(const std::string& name) const {
    const Entry* e = find(name);
    if (!e) throw std::out_of_range("unknown variable array '" + name + "'");
    return *e;
  }

  std::size_t index(const std::string& name, std::span<const std::size_t> multi) const {
    const Entry& e = at(name);
    if (multi.size() != e.shape.size())
      throw std::out_of_range("rank mismatch for '" + name + "'");
    std::size_t flat = 0;
    for (std::size_t d = 0; d < multi.size(); ++d) {
      if (multi[d] >= e.shape[d]) throw std::out_of_range("index out of range for '" + name + "'");
      flat = flat * e.shape[d] + multi[d];
    }
    return e.offset + flat;
  }

  std::size_t index(const std::string& name, std::initializer_list<std::size_t> multi) const {
    return index(name, std::span<const std::size_t>(multi.begin(), multi.size()));
  }

  /// Inverse of index(): (array name, multi-index) for a flat index.
  std::pair<std::string, std::vector<std::size_t>> locate(std::size_t flat) const {
    for (const auto& e : entries_) {
      if (flat < e.offset || flat >= e.offset + e.size) continue;
      std::size_t rem = flat - e.offset;
      std::vector<std::size_t> multi(e.shape.size());
      for (std::size_t d = e.shape.size(); d-- > 0;) {
        multi[d] = rem % e.shape[d];
        rem /= e.shape[d];
      }
      return {e.name, multi};
    }
    throw std::out_of_range("flat index " + std::to_string(flat) + " not registered");
  }

 private:
  std::vector<Entry> entries_;
  std::size_t total_ = 0;
};

using RegistryPtr = std::shared_ptr<VariableRegistry>;

inline RegistryPtr make_registry() { return std::make_shared<VariableRegistry>(); }

/// Multilinear polynomial over binary variables. Monomials are sorted,
/// duplicate-free index sets (x^2 = x is applied eagerly).
class BinaryPolynomial {
 public:
  using Monomial = std::vector<std::size_t>;
  using TermMap = std::map<Monomial, double>;

  explicit BinaryPolynomial(RegistryPtr reg) : reg_(std::move(reg)) {
    if (!reg_) throw std::invalid_argument("null registry");
  }

  static BinaryPolynomial constant(RegistryPtr reg, double c) {
    BinaryPolynomial p(std::move(reg));
    p.add_term({}, c);
    return p;
  }

  static BinaryPolynomial variable(RegistryPtr reg, std::size_t index, double coeff = 1.0) {
    BinaryPolynomial p(std::move(reg));
    p.add_term({index}, coeff);
    return p;
  }

  const RegistryPtr& registry() const noexcept { return reg_; }
  const TermMap& terms() const noexcept { return terms_; }
  bool empty() const noexcept { return terms_.empty(); }

  std::size_t degree() const {
    std::size_t d = 0;
    for (const auto& [m, c] : terms_) d = std::max(d, m.size());
    return d;
  }

  double coefficient(Monomial m) const {
    normalize(m);
    auto it = terms_.find(m);
    return it == terms_.end() ? 0.0 : it->second;
  }

  /// Adds c * prod(vars). Duplicated indices collapse.
  void add_term(Monomial vars, double c) {
    normalize(vars);
    accumulate(std::move(vars), c);
  }

  double evaluate(std::span<const std::uint8_t> sample) const {
    double total = 0.0;
    for (const auto& [m, c] : terms_) {
      bool on = true;
      for (auto v : m) {
        if (v >= sample.size()) throw std::out_of_range("sample too short");
        if (!sample[v]) { on = false; break; }
      }
      if (on) total += c;
    }
    return total;
  }

  BinaryPolynomial& operator+=(const BinaryPolynomial& o) {
    check_same(o);
    for (const auto& [m, c] : o.terms_) accumulate(m, c);
    return *this;
  }

  BinaryPolynomial& operator-=(const BinaryPolynomial& o) {
    check_same(o);
    for (const auto& [m, c] : o.terms_) accumulate(m, -c);
    return *this;
  }

  BinaryPolynomial& operator+=(double c) {
    accumulate({}, c);
    return *this;
  }

  BinaryPolynomial& operator*=(double s) {
    if (s == 0.0) {
      terms_.clear();
      return *this;
    }
    for (auto& [m, c] : terms_) c *= s;
    prune();
    return *this;
  }

  friend BinaryPolynomial operator+(BinaryPolynomial a, const BinaryPolynomial& b) { return a += b; }
  friend BinaryPolynomial operator-(BinaryPolynomial a, const BinaryPolynomial& b) { return a -= b; }
  friend BinaryPolynomial operator+(BinaryPolynomial a, double c) { return a += c; }
  friend BinaryPolynomial operator-(BinaryPolynomial a, double c) { return a += -c; }
  friend BinaryPolynomial operator*(BinaryPolynomial a, double s) { return a *= s; }
  friend BinaryPolynomial operator*(double s, BinaryPolynomial a) { return a *= s; }

  friend BinaryPolynomial operator*(const BinaryPolynomial& a, const BinaryPolynomial& b) {
    a.check_same(b);
    BinaryPolynomial out(a.reg_);
    for (const auto& [ma, ca] : a.terms_) {
      for (const auto& [mb, cb] : b.terms_) {
        Monomial m;
        m.reserve(ma.size() + mb.size());
        std::set_union(ma.begin(), ma.end(), mb.begin(), mb.end(), std::back_inserter(m));
        out.accumulate(std::move(m), ca * cb);
      }
    }
    return out;
  }

 private:
  static void normalize(Monomial& m) {
    std::sort(m.begin(), m.end());
    m.erase(std::unique(m.begin(), m.end()), m.end());
  }

  void accumulate(Monomial m, double c) {
    if (c == 0.0) return;
    auto [it, inserted] = terms_.try_emplace(std::move(m), c);
    if (!inserted) {
      it->second += c;
      if (it->second == 0.0) terms_.erase(it);
    }
  }

  void prune() {
    std::erase_if(terms_, [](const auto& kv) { return kv.second == 0.0; });
  }

  void check_same(const BinaryPolynomial& o) const {
    if (reg_ != o.reg_) throw std::invalid_argument("polynomials belong to different registries");
  }

  RegistryPtr reg_;
  TermMap terms_;
};

inline BinaryPolynomial poly_sum(const BinaryPolynomial& a, const BinaryPolynomial& b) { return a + b; }
inline BinaryPolynomial poly_product(const BinaryPolynomial& a, const BinaryPolynomial& b) { return a * b; }

/// p^2. Degree-1 inputs take a direct pairwise expansion.
inline BinaryPolynomial poly_square(const BinaryPolynomial& p) {
  if (p.degree() > 1) return p * p;
  double c0 = 0.0;
  std::vector<std::pair<std::size_t, double>> lin;
  for (const auto& [m, c] : p.terms()) {
    if (m.empty()) c0 = c;
    else lin.emplace_back(m[0], c);
  }
  BinaryPolynomial out(p.registry());
  out.add_term({}, c0 * c0);
  for (std::size_t a = 0; a < lin.size(); ++a) {
    const auto [va, ca] = lin[a];
    out.add_term({va}, ca * ca + 2.0 * c0 * ca);
    for (std::size_t b = a + 1; b < lin.size(); ++b)
      out.add_term({va, lin[b].first}, 2.0 * ca * lin[b].second);
  }
  return out;
}

/// Linear form sum(weights[i] * x[offset + i]).
inline BinaryPolynomial linear_form(const RegistryPtr& reg, std::size_t offset,
                                    std::span<const double> weights) {
  BinaryPolynomial p(reg);
  for (std::size_t i = 0; i < weights.size(); ++i) p.add_term({offset + i}, weights[i]);
  return p;
}

struct SlackEncoding {
  BinaryPolynomial form;         // sum of weight_l * s_l
  std::vector<double> weights;
  std::size_t offset = 0;        // flat index of s_0
};

/// Unary slack: ceil(upper/step) bits with weights step, 2*step, ...
inline SlackEncoding add_slack_unary(const RegistryPtr& reg, const std::string& name,
                                     double upper, double step) {
  if (!(upper > 0.0) || !(step > 0.0))
    throw std::invalid_argument("slack bounds must be positive");
  if (upper < step) throw std::invalid_argument("slack upper bound below step");
  const auto count = static_cast<std::size_t>(std::ceil(upper / step - 1e-12));
  std::vector<double> w(count);
  for (std::size_t l = 0; l < count; ++l) w[l] = static_cast<double>(l + 1) * step;
  const std::size_t off = reg->add_array(name, {count}, VariableKind::kSlack);
  return {linear_form(reg, off, w), std::move(w), off};
}

/// Bounded binary slack: weights 1,2,4,...,remainder covering exactly [0, upper].
inline SlackEncoding add_slack_binary(const RegistryPtr& reg, const std::string& name,
                                      long long upper) {
  if (upper < 1) throw std::invalid_argument("binary slack upper bound must be >= 1");
  std::vector<double> w;
  long long covered = 0;
  long long next = 1;
  while (covered + next <= upper) {
    w.push_back(static_cast<double>(next));
    covered += next;
    next *= 2;
  }
  if (covered < upper) w.push_back(static_cast<double>(upper - covered));
  const std::size_t off = reg->add_array(name, {w.size()}, VariableKind::kSlack);
  return {linear_form(reg, off, w), std::move(w), off};
}

/// Compiled QUBO. Quadratic entries are kept with i < j, sorted, nonzero.
struct QuboCompiled {
  struct Coupling {
    std::size_t i;
    std::size_t j;
    double w;
    friend bool operator==(const Coupling&, const Coupling&) = default;
  };

  std::vector<double> linear;
  std::vector<Coupling> quadratic;
  double offset = 0.0;

  std::size_t variable_count() const noexcept { return linear.size(); }
  bool all_zero() const {
    return quadratic.empty() &&
           std::all_of(linear.begin(), linear.end(), [](double w) { return w == 0.0; });
  }
};

inline QuboCompiled compile(const BinaryPolynomial& p) {
  QuboCompiled q;
  q.linear.assign(p.registry()->total_count(), 0.0);
  for (const auto& [m, c] : p.terms()) {
    switch (m.size()) {
      case 0: q.offset = c; break;
      case 1: q.linear.at(m[0]) = c; break;
      case 2: q.quadratic.push_back({m[0], m[1], c}); break;
      default: throw UncompilableDegreeError(m);
    }
  }
  for (const auto& c : q.quadratic)
    if (c.j >= q.linear.size()) throw std::out_of_range("term references unregistered variable");
  // std::map order already sorts (i, j) lexicographically.
  return q;
}

inline double energy(const QuboCompiled& q, std::span<const std::uint8_t> sample) {
  if (sample.size() != q.variable_count())
    throw std::invalid_argument("sample length " + std::to_string(sample.size()) +
                                " does not match variable count " +
                                std::to_string(q.variable_count()));
  double e = q.offset;
  for (std::size_t i = 0; i < q.linear.size(); ++i)
    if (sample[i]) e += q.linear[i];
  for (const auto& c : q.quadratic)
    if (sample[c.i] && sample[c.j]) e += c.w;
  return e;
}

}  // namespace qroute
