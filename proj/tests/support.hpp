#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "epifilm/geometry.hpp"

namespace testing {

/// Deterministic generator for property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  /// Continuous profile: sum of a few random Fourier modes on `nodes` points,
  /// heights kept in [lo, hi].
  epifilm::Profile smooth_profile(double period, std::size_t nodes, double lo, double hi) {
    const int modes = integer(1, 4);
    std::vector<double> a(static_cast<std::size_t>(modes)), ph(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
      a[k] = uniform(0.0, 1.0);
      ph[k] = uniform(0.0, 2.0 * M_PI);
    }
    double amp = 0.0;
    for (const double v : a) amp += v;
    const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    return epifilm::Profile::sampled(period, nodes, [&](double x) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.size(); ++k) {
        s += a[k] * std::sin(2.0 * M_PI * static_cast<double>(k + 1) * x / period + ph[k]);
      }
      return mid + half * s / amp;
    });
  }

  /// Continuous profile with independent random node heights on irregular abscissae.
  epifilm::Profile rough_profile(double period, std::size_t nodes, double lo, double hi) {
    std::vector<epifilm::ProfileNode> ns;
    const double dx = period / static_cast<double>(nodes);
    for (std::size_t i = 0; i < nodes; ++i) {
      ns.push_back({dx * (static_cast<double>(i) + uniform(0.0, 0.8)), uniform(lo, hi)});
    }
    return epifilm::Profile(period, ns);
  }

 private:
  std::mt19937_64 rng_;
};

}  // namespace testing
