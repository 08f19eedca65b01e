#pragma once

// Minimizers for compiled QUBOs: simulated annealing, tabu search and a
// decomposition loop that repeatedly solves clamped sub-problems.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "qroute/parallel.hpp"
#include "qroute/qubo_model.hpp"

namespace qroute {

struct SampleRecord {
  Bits sample;
  double energy = 0.0;
  std::size_t occurrences = 1;
};

/// Records sorted ascending by energy, ties broken lexicographically by sample.
class SampleSet {
 public:
  SampleSet() = default;
  explicit SampleSet(std::vector<SampleRecord> records) : records_(std::move(records)) {
    sort();
  }

  const std::vector<SampleRecord>& records() const noexcept { return records_; }
  bool empty() const noexcept { return records_.empty(); }
  std::size_t size() const noexcept { return records_.size(); }

  const SampleRecord& first() const {
    if (records_.empty()) throw std::logic_error("empty sample set");
    return records_.front();
  }

  std::size_t total_occurrences() const {
    std::size_t n = 0;
    for (const auto& r : records_) n += r.occurrences;
    return n;
  }

  /// Merges identical samples, summing their occurrence counts.
  SampleSet aggregate() const {
    std::vector<SampleRecord> merged;
    for (const auto& r : records_) {
      if (!merged.empty() && merged.back().sample == r.sample)
        merged.back().occurrences += r.occurrences;
      else
        merged.push_back(r);
    }
    return SampleSet(std::move(merged));
  }

 private:
  void sort() {
    std::stable_sort(records_.begin(), records_.end(), [](const auto& a, const auto& b) {
      if (a.energy != b.energy) return a.energy < b.energy;
      return a.sample < b.sample;
    });
  }

  std::vector<SampleRecord> records_;
};

struct AnnealParams {
  std::size_t num_reads = 100;
  std::size_t sweeps = 1000;
  // Non-positive values are replaced by default_beta_range().
  double beta_hot = 0.0;
  double beta_cold = 0.0;
  std::uint64_t seed = 0;
};

/// Per-variable adjacency (CSR) of a compiled QUBO.
class NeighborTable {
 public:
  explicit NeighborTable(const QuboCompiled& q) : start_(q.variable_count() + 1, 0) {
    for (const auto& c : q.quadratic) {
      ++start_[c.i + 1];
      ++start_[c.j + 1];
    }
    std::partial_sum(start_.begin(), start_.end(), start_.begin());
    entries_.resize(start_.back());
    std::vector<std::size_t> fill(start_.begin(), start_.end() - 1);
    for (const auto& c : q.quadratic) {
      entries_[fill[c.i]++] = {c.j, c.w};
      entries_[fill[c.j]++] = {c.i, c.w};
    }
  }

  struct Neighbor {
    std::size_t var;
    double w;
  };

  std::span<const Neighbor> operator[](std::size_t v) const {
    return {entries_.data() + start_[v], start_[v + 1] - start_[v]};
  }

 private:
  std::vector<std::size_t> start_;
  std::vector<Neighbor> entries_;
};

namespace detail {

/// field[i] = linear[i] + sum_j J_ij s_j; flipping i changes energy by
/// (1 - 2 s_i) * field[i].
inline std::vector<double> local_fields(const QuboCompiled& q, const NeighborTable& nb,
                                        std::span<const std::uint8_t> s) {
  std::vector<double> f(q.linear);
  for (std::size_t i = 0; i < f.size(); ++i)
    for (const auto& n : nb[i])
      if (s[n.var]) f[i] += n.w;
  return f;
}

inline double flip_delta(std::uint8_t bit, double field) { return bit ? -field : field; }

inline void apply_flip(Bits& s, std::vector<double>& field, const NeighborTable& nb,
                       std::size_t v) {
  const double dir = s[v] ? -1.0 : 1.0;
  s[v] ^= 1u;
  for (const auto& n : nb[v]) field[n.var] += dir * n.w;
}

inline Bits random_bits(std::size_t n, std::mt19937_64& rng) {
  Bits s(n);
  for (auto& b : s) b = static_cast<std::uint8_t>(rng() & 1u);
  return s;
}

inline std::vector<double> geometric_schedule(double hot, double cold, std::size_t points) {
  std::vector<double> betas(points);
  if (points == 1) {
    betas[0] = hot;
    return betas;
  }
  const double ratio = std::log(cold / hot);
  for (std::size_t k = 0; k < points; ++k)
    betas[k] = hot * std::exp(ratio * static_cast<double>(k) / static_cast<double>(points - 1));
  return betas;
}

struct AnnealOutcome {
  Bits sample;
  double tracked_energy;  // energy maintained incrementally during the run
};

/// One annealing read from a uniform random start.
inline AnnealOutcome anneal_read(const QuboCompiled& q, const NeighborTable& nb,
                                 std::span<const double> betas, std::uint64_t stream_seed) {
  std::mt19937_64 rng(stream_seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const std::size_t n = q.variable_count();
  Bits s = random_bits(n, rng);
  std::vector<double> field = local_fields(q, nb, s);
  double e = energy(q, s);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (double beta : betas) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t v : order) {
      const double delta = flip_delta(s[v], field[v]);
      if (delta <= 0.0 || unif(rng) < std::exp(-beta * delta)) {
        apply_flip(s, field, nb, v);
        e += delta;
      }
    }
  }
  return {std::move(s), e};
}

}  // namespace detail

/// beta_hot = ln 2 / max per-variable coupling mass,
/// beta_cold = ln 100 / min nonzero coefficient magnitude.
inline std::pair<double, double> default_beta_range(const QuboCompiled& q) {
  if (q.variable_count() == 0 || q.all_zero())
    throw std::invalid_argument("cannot derive a temperature range for an all-zero QUBO");
  std::vector<double> mass(q.variable_count(), 0.0);
  double min_abs = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < q.linear.size(); ++i) {
    const double a = std::abs(q.linear[i]);
    mass[i] += a;
    if (a > 0.0) min_abs = std::min(min_abs, a);
  }
  for (const auto& c : q.quadratic) {
    const double a = std::abs(c.w);
    mass[c.i] += a;
    mass[c.j] += a;
    min_abs = std::min(min_abs, a);
  }
  const double max_mass = *std::max_element(mass.begin(), mass.end());
  return {std::log(2.0) / max_mass, std::log(100.0) / min_abs};
}

inline SampleSet simulated_annealing(const QuboCompiled& q, const AnnealParams& params) {
  if (q.variable_count() == 0) throw std::invalid_argument("empty QUBO");
  if (params.num_reads == 0 || params.sweeps == 0)
    throw std::invalid_argument("num_reads and sweeps must be positive");
  double hot = params.beta_hot;
  double cold = params.beta_cold;
  if (hot <= 0.0 || cold <= 0.0) {
    if (q.all_zero()) {
      hot = cold = 1.0;
    } else {
      const auto range = default_beta_range(q);
      if (hot <= 0.0) hot = range.first;
      if (cold <= 0.0) cold = range.second;
    }
  }
  if (hot > cold) throw std::invalid_argument("beta_hot must not exceed beta_cold");
  const auto betas = detail::geometric_schedule(hot, cold, params.sweeps);
  const NeighborTable nb(q);
  std::vector<SampleRecord> records(params.num_reads);
  parallel_for(params.num_reads, [&](std::size_t r) {
    auto out = detail::anneal_read(q, nb, betas, params.seed ^ static_cast<std::uint64_t>(r));
    records[r].energy = energy(q, out.sample);
    records[r].sample = std::move(out.sample);
    records[r].occurrences = 1;
  });
  return SampleSet(std::move(records));
}

/// Steepest single-flip descent with a tabu list. A tabu move is admissible
/// only when it would improve the incumbent. Returns every incumbent found.
inline SampleSet tabu_search(const QuboCompiled& q, std::size_t iters, std::size_t tenure,
                             std::uint64_t seed, std::optional<Bits> start = std::nullopt) {
  const std::size_t n = q.variable_count();
  if (n == 0) throw std::invalid_argument("empty QUBO");
  if (iters == 0 || tenure == 0) throw std::invalid_argument("iters and tenure must be positive");
  std::mt19937_64 rng(seed);
  Bits s = start ? *start : detail::random_bits(n, rng);
  if (s.size() != n) throw std::invalid_argument("start sample length mismatch");
  const NeighborTable nb(q);
  std::vector<double> field = detail::local_fields(q, nb, s);
  double e = energy(q, s);
  double best = e;
  std::vector<SampleRecord> trajectory{{s, e, 1}};
  std::vector<std::size_t> tabu_until(n, 0);
  std::vector<std::size_t> last_flip(n, 0);

  for (std::size_t it = 1; it <= iters; ++it) {
    std::size_t chosen = n;
    double chosen_delta = std::numeric_limits<double>::infinity();
    std::size_t ties = 0;
    for (std::size_t v = 0; v < n; ++v) {
      const double delta = detail::flip_delta(s[v], field[v]);
      const bool admissible = tabu_until[v] < it || e + delta < best;
      if (!admissible) continue;
      if (delta < chosen_delta) {
        chosen = v;
        chosen_delta = delta;
        ties = 1;
      } else if (delta == chosen_delta && (rng() % ++ties) == 0) {
        chosen = v;  // reservoir choice among equal moves
      }
    }
    if (chosen == n) {
      // Every move is tabu and none aspirates: release the oldest one.
      chosen = static_cast<std::size_t>(
          std::min_element(last_flip.begin(), last_flip.end()) - last_flip.begin());
      chosen_delta = detail::flip_delta(s[chosen], field[chosen]);
    }
    detail::apply_flip(s, field, nb, chosen);
    e += chosen_delta;
    tabu_until[chosen] = it + tenure;
    last_flip[chosen] = it;
    if (e < best) {
      e = energy(q, s);  // resynchronise on every new incumbent
      best = e;
      trajectory.push_back({s, e, 1});
    }
  }
  return SampleSet(std::move(trajectory));
}

enum class InnerSamplerKind { kAnneal, kTabu };

struct InnerSampler {
  InnerSamplerKind kind = InnerSamplerKind::kTabu;
  AnnealParams anneal{.num_reads = 20, .sweeps = 200};
  std::size_t tabu_iters = 500;
  std::size_t tabu_tenure = 0;  // 0: min(20, subsize / 4 + 1)
};

/// Sub-QUBO over `free_vars` with every other variable fixed to `incumbent`.
/// The clamped contribution is folded into the sub-QUBO offset, so the sub
/// energy of any sub-sample equals the full energy of the merged sample.
struct ClampedQubo {
  QuboCompiled sub;
  std::vector<std::size_t> free_vars;
};

inline ClampedQubo clamp_qubo(const QuboCompiled& q, std::span<const std::uint8_t> incumbent,
                              std::vector<std::size_t> free_vars) {
  const std::size_t n = q.variable_count();
  if (incumbent.size() != n) throw std::invalid_argument("incumbent length mismatch");
  std::vector<std::size_t> local(n, n);
  for (std::size_t k = 0; k < free_vars.size(); ++k) {
    if (free_vars[k] >= n || local[free_vars[k]] != n)
      throw std::invalid_argument("free variable list invalid");
    local[free_vars[k]] = k;
  }
  ClampedQubo out;
  out.sub.linear.assign(free_vars.size(), 0.0);
  out.sub.offset = q.offset;
  for (std::size_t v = 0; v < n; ++v) {
    if (local[v] != n) out.sub.linear[local[v]] += q.linear[v];
    else if (incumbent[v]) out.sub.offset += q.linear[v];
  }
  for (const auto& c : q.quadratic) {
    const bool fi = local[c.i] != n;
    const bool fj = local[c.j] != n;
    if (fi && fj) {
      auto a = local[c.i], b = local[c.j];
      if (a > b) std::swap(a, b);
      out.sub.quadratic.push_back({a, b, c.w});
    } else if (fi) {
      if (incumbent[c.j]) out.sub.linear[local[c.i]] += c.w;
    } else if (fj) {
      if (incumbent[c.i]) out.sub.linear[local[c.j]] += c.w;
    } else if (incumbent[c.i] && incumbent[c.j]) {
      out.sub.offset += c.w;
    }
  }
  std::sort(out.sub.quadratic.begin(), out.sub.quadratic.end(),
            [](const auto& a, const auto& b) { return std::pair(a.i, a.j) < std::pair(b.i, b.j); });
  out.free_vars = std::move(free_vars);
  return out;
}

struct DecompositionResult {
  SampleSet samples;                       // distinct incumbents
  std::vector<double> incumbent_energies;  // [0] = start, then one per round
};

/// QBSolv-style loop. Each round ranks variables by |flip delta| under the
/// incumbent and frees a `subsize` window of that ranking; the window slides
/// down the ranking after a round without improvement.
inline DecompositionResult decompose_solve_traced(const QuboCompiled& q, std::size_t subsize,
                                                  std::size_t rounds, const InnerSampler& inner,
                                                  std::uint64_t seed,
                                                  std::optional<Bits> start = std::nullopt) {
  const std::size_t n = q.variable_count();
  if (n == 0) throw std::invalid_argument("empty QUBO");
  if (subsize < 1) throw std::invalid_argument("subsize must be positive");
  if (subsize > n) throw std::invalid_argument("subsize exceeds variable count");
  std::mt19937_64 rng(seed);
  Bits incumbent = start ? *start : detail::random_bits(n, rng);
  double inc_e = energy(q, incumbent);
  DecompositionResult res;
  res.incumbent_energies.push_back(inc_e);
  std::vector<SampleRecord> seen{{incumbent, inc_e, 1}};
  const NeighborTable nb(q);
  std::size_t window = 0;

  for (std::size_t round = 0; round < rounds; ++round) {
    const auto field = detail::local_fields(q, nb, incumbent);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return std::abs(field[a]) > std::abs(field[b]);
    });
    const std::size_t begin = subsize == n ? 0 : (window * subsize) % (n - subsize + 1);
    std::vector<std::size_t> free_vars(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                       order.begin() + static_cast<std::ptrdiff_t>(begin + subsize));
    std::sort(free_vars.begin(), free_vars.end());
    const auto clamped = clamp_qubo(q, incumbent, free_vars);

    const std::uint64_t inner_seed = rng();
    Bits best_sub;
    if (inner.kind == InnerSamplerKind::kAnneal) {
      AnnealParams p = inner.anneal;
      p.seed = inner_seed;
      best_sub = clamped.sub.all_zero()
                     ? Bits(subsize, 0)
                     : simulated_annealing(clamped.sub, p).first().sample;
    } else {
      const std::size_t tenure =
          inner.tabu_tenure ? inner.tabu_tenure : std::min<std::size_t>(20, subsize / 4 + 1);
      Bits warm(subsize);
      for (std::size_t k = 0; k < subsize; ++k) warm[k] = incumbent[free_vars[k]];
      best_sub = tabu_search(clamped.sub, inner.tabu_iters, tenure, inner_seed, warm)
                     .first()
                     .sample;
    }
    Bits candidate = incumbent;
    for (std::size_t k = 0; k < subsize; ++k) candidate[free_vars[k]] = best_sub[k];
    const double cand_e = energy(q, candidate);
    if (cand_e < inc_e) {
      incumbent = std::move(candidate);
      inc_e = cand_e;
      seen.push_back({incumbent, inc_e, 1});
      window = 0;
    } else {
      if (cand_e == inc_e) incumbent = std::move(candidate);
      ++window;
    }
    res.incumbent_energies.push_back(inc_e);
  }
  res.samples = SampleSet(std::move(seen));
  return res;
}

inline SampleSet decompose_solve(const QuboCompiled& q, std::size_t subsize, std::size_t rounds,
                                 const InnerSampler& inner, std::uint64_t seed) {
  return decompose_solve_traced(q, subsize, rounds, inner, seed).samples;
}

}  // namespace qroute
