#pragma once

// Hartigan & Hartigan dip statistic (greatest convex minorant / least
// concave majorant construction) with a uniform-bootstrap p-value. Applied
// to the flattened pairwise-distance sample as a clusterability measure.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "qroute/instance_io.hpp"
#include "qroute/parallel.hpp"

namespace qroute {

/// Dip of an ascending-sorted sample, in [1/(2n), 1/4].
inline double dip_statistic_sorted(std::span<const double> sorted) {
  const long n = static_cast<long>(sorted.size());
  if (n < 2 || sorted.front() == sorted.back()) return n > 0 ? 0.5 / static_cast<double>(n) : 0.0;

  // 1-based views keep the index arithmetic identical to the classic routine.
  auto x = [&](long i) { return sorted[static_cast<std::size_t>(i - 1)]; };
  std::vector<long> mn(static_cast<std::size_t>(n + 1)), mj(static_cast<std::size_t>(n + 1));
  std::vector<long> gcm(static_cast<std::size_t>(n + 1)), lcm(static_cast<std::size_t>(n + 1));

  // Convex minorant break points.
  mn[1] = 1;
  for (long j = 2; j <= n; ++j) {
    mn[j] = j - 1;
    for (;;) {
      const long mnj = mn[j];
      const long mnmnj = mn[mnj];
      if (mnj == 1 || (x(j) - x(mnj)) * static_cast<double>(mnj - mnmnj) <
                          (x(mnj) - x(mnmnj)) * static_cast<double>(j - mnj))
        break;
      mn[j] = mnmnj;
    }
  }
  // Concave majorant break points.
  mj[n] = n;
  for (long k = n - 1; k >= 1; --k) {
    mj[k] = k + 1;
    for (;;) {
      const long mjk = mj[k];
      const long mjmjk = mj[mjk];
      if (mjk == n || (x(k) - x(mjk)) * static_cast<double>(mjk - mjmjk) <
                          (x(mjk) - x(mjmjk)) * static_cast<double>(k - mjk))
        break;
      mj[k] = mjmjk;
    }
  }

  double dip = 1.0;
  long low = 1, high = n;
  for (;;) {
    long i = 1;
    gcm[1] = high;
    while (gcm[i] > low) {
      gcm[i + 1] = mn[gcm[i]];
      ++i;
    }
    const long l_gcm = i;
    long ig = l_gcm;
    long ix = ig - 1;

    i = 1;
    lcm[1] = low;
    while (lcm[i] < high) {
      lcm[i + 1] = mj[lcm[i]];
      ++i;
    }
    const long l_lcm = i;
    long ih = l_lcm;
    long iv = 2;

    long double d = 0.0L;
    if (l_gcm != 2 || l_lcm != 2) {
      do {
        const long gcmix = gcm[ix];
        const long lcmiv = lcm[iv];
        if (gcmix > lcmiv) {
          const long gcmi1 = gcm[ix + 1];
          const long double dx =
              static_cast<long double>(lcmiv - gcmi1 + 1) -
              (static_cast<long double>(x(lcmiv)) - x(gcmi1)) * static_cast<long double>(gcmix - gcmi1) /
                  (x(gcmix) - x(gcmi1));
          ++iv;
          if (dx >= d) {
            d = dx;
            ig = ix + 1;
            ih = iv - 1;
          }
        } else {
          const long lcmiv1 = lcm[iv - 1];
          const long double dx =
              (static_cast<long double>(x(gcmix)) - x(lcmiv1)) * static_cast<long double>(lcmiv - lcmiv1) /
                  (x(lcmiv) - x(lcmiv1)) -
              static_cast<long double>(gcmix - lcmiv1 - 1);
          --ix;
          if (dx >= d) {
            d = dx;
            ig = ix + 1;
            ih = iv;
          }
        }
        if (ix < 1) ix = 1;
        if (iv > l_lcm) iv = l_lcm;
      } while (gcm[ix] != lcm[iv]);
    } else {
      d = 1.0L;
    }

    if (d < dip) break;

    double dip_l = 0.0;
    for (long j = ig; j < l_gcm; ++j) {
      double max_t = 1.0;
      const long jb = gcm[j + 1], je = gcm[j];
      if (je - jb > 1 && x(je) != x(jb)) {
        const double c = static_cast<double>(je - jb) / (x(je) - x(jb));
        for (long jj = jb; jj <= je; ++jj) {
          const double t = static_cast<double>(jj - jb + 1) - (x(jj) - x(jb)) * c;
          max_t = std::max(max_t, t);
        }
      }
      dip_l = std::max(dip_l, max_t);
    }
    double dip_u = 0.0;
    for (long j = ih; j < l_lcm; ++j) {
      double max_t = 1.0;
      const long jb = lcm[j], je = lcm[j + 1];
      if (je - jb > 1 && x(je) != x(jb)) {
        const double c = static_cast<double>(je - jb) / (x(je) - x(jb));
        for (long jj = jb; jj <= je; ++jj) {
          const double t = (x(jj) - x(jb)) * c - static_cast<double>(jj - jb - 1);
          max_t = std::max(max_t, t);
        }
      }
      dip_u = std::max(dip_u, max_t);
    }
    dip = std::max(dip, std::max(dip_l, dip_u));

    if (low == gcm[ig] && high == lcm[ih]) break;
    low = gcm[ig];
    high = lcm[ih];
  }
  return dip / (2.0 * static_cast<double>(n));
}

inline double dip_statistic(std::vector<double> sample) {
  std::sort(sample.begin(), sample.end());
  return dip_statistic_sorted(sample);
}

/// Bootstrap null distribution: dips of `bootstrap_n` sorted uniform samples
/// of size `sample_size`, generated from cumulative exponential spacings
/// (the dip is invariant under affine maps, so no normalisation is needed).
inline std::vector<double> uniform_dip_null(std::size_t sample_size, std::size_t bootstrap_n,
                                            std::uint64_t seed) {
  std::vector<double> null(bootstrap_n);
  parallel_for(bootstrap_n, [&](std::size_t b) {
    std::mt19937_64 rng(seed ^ (0x9e3779b97f4a7c15ULL * (b + 1)));
    std::exponential_distribution<double> expo(1.0);
    std::vector<double> u(sample_size);
    double acc = 0.0;
    for (auto& v : u) v = (acc += expo(rng));
    null[b] = dip_statistic_sorted(u);
  });
  return null;
}

/// Fraction of null dips >= `dip`.
inline double dip_p_value(double dip, std::span<const double> null_dips) {
  if (null_dips.empty()) throw std::invalid_argument("empty bootstrap distribution");
  const auto ge = std::count_if(null_dips.begin(), null_dips.end(), [&](double d) { return d >= dip; });
  return static_cast<double>(ge) / static_cast<double>(null_dips.size());
}

struct DipResult {
  double dip = 0.0;
  double p_value = 1.0;
};

/// Dip test on the pairwise distances of `coords`, each unordered pair once.
inline DipResult dip_clusterability(const std::vector<Point>& coords, std::size_t bootstrap_n,
                                    std::uint64_t seed) {
  if (coords.size() < 4) throw std::invalid_argument("dip test needs at least 4 points");
  if (bootstrap_n == 0) throw std::invalid_argument("bootstrap_n must be positive");
  std::vector<double> flat;
  flat.reserve(coords.size() * (coords.size() - 1) / 2);
  for (std::size_t i = 0; i < coords.size(); ++i)
    for (std::size_t j = i + 1; j < coords.size(); ++j) flat.push_back(euclidean(coords[i], coords[j]));
  std::sort(flat.begin(), flat.end());
  DipResult r;
  r.dip = dip_statistic_sorted(flat);
  const auto null = uniform_dip_null(flat.size(), bootstrap_n, seed);
  r.p_value = dip_p_value(r.dip, null);
  return r;
}

}  // namespace qroute
