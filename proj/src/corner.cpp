#include "epifilm/corner.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>

#include "epifilm/errors.hpp"

namespace epifilm {

namespace {

using cd = std::complex<double>;
using cld = std::complex<long double>;

constexpr double kTwoPi = 2.0 * std::numbers::pi;
// Shortest distance kept between the counting contour and the strip edges,
// which always carry the trivial zeros alpha = 0 and alpha = 1.
constexpr double kEdge = 1e-6;

/// sin(alpha omega) - s alpha sin(omega), s = +-1.
template <class C>
C factor(double omega, C alpha, int s) {
  using R = typename C::value_type;
  const R w = static_cast<R>(omega);
  return std::sin(alpha * w) - static_cast<R>(s) * alpha * std::sin(w);
}

template <class C>
C factor_d(double omega, C alpha, int s) {
  using R = typename C::value_type;
  const R w = static_cast<R>(omega);
  return w * std::cos(alpha * w) - static_cast<R>(s) * std::sin(w);
}

template <class C>
C factor_dd(double omega, C alpha) {
  using R = typename C::value_type;
  const R w = static_cast<R>(omega);
  return -w * w * std::sin(alpha * w);
}

/// Damped Newton in double, polished in long double. Returns the root when
/// the final correction is below 1e-13.
std::optional<cd> newton(double omega, cd seed, int s) {
  cd z = seed;
  for (int it = 0; it < 80; ++it) {
    const cd g = factor(omega, z, s);
    const cd dg = factor_d(omega, z, s);
    if (std::abs(dg) < 1e-300) return std::nullopt;
    cd step = g / dg;
    if (std::abs(step) > 0.25) step *= 0.25 / std::abs(step);
    z -= step;
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()) || std::abs(z.imag()) > 40.0) {
      return std::nullopt;
    }
    if (std::abs(step) < 1e-12) break;
  }
  // Plain Newton is linear at a double zero; take the modified step there.
  cld y(z.real(), z.imag());
  long double last = 1.0L;
  for (int it = 0; it < 20; ++it) {
    const cld g = factor(omega, y, s);
    const cld dg = factor_d(omega, y, s);
    cld step;
    if (std::abs(dg) < 1e-7L) {
      const cld ddg = factor_dd(omega, y);
      if (std::abs(ddg) < 1e-300L) break;
      step = dg / ddg;  // Newton on g' locates the double zero
    } else {
      step = g / dg;
    }
    y -= step;
    last = std::abs(step);
    if (last < 1e-15L) break;
  }
  if (!(last < 1e-13L)) return std::nullopt;
  return cd(static_cast<double>(y.real()), static_cast<double>(y.imag()));
}

/// Zero order of one factor at a root: 0, 1 or 2.
int order(double omega, cd alpha, int s) {
  const cld a(alpha.real(), alpha.imag());
  if (std::abs(factor(omega, a, s)) > 1e-10L) return 0;
  return std::abs(factor_d(omega, a, s)) < 1e-8L ? 2 : 1;
}

/// Net change of arg g along the segment a -> b, subdividing until each
/// piece turns by less than 0.3 rad.
double arg_change(double omega, int s, cd a, cd b, cd ga, cd gb, int depth) {
  const double d = std::arg(gb / ga);
  if (std::abs(d) < 0.3 || depth > 48) return d;
  const cd m = 0.5 * (a + b);
  const cd gm = factor(omega, m, s);
  return arg_change(omega, s, a, m, ga, gm, depth + 1) +
         arg_change(omega, s, m, b, gm, gb, depth + 1);
}

int winding(double omega, double re_lo, double re_hi, double im_max) {
  const std::array<cd, 4> corners{cd(re_lo, -im_max), cd(re_hi, -im_max), cd(re_hi, im_max),
                                  cd(re_lo, im_max)};
  int total = 0;
  for (const int s : {1, -1}) {
    double turn = 0.0;
    for (std::size_t e = 0; e < 4; ++e) {
      const cd a = corners[e];
      const cd b = corners[(e + 1) % 4];
      const int pieces = static_cast<int>(std::ceil(std::abs(b - a) / 0.01));
      for (int k = 0; k < pieces; ++k) {
        const cd p = a + (b - a) * (static_cast<double>(k) / pieces);
        const cd q = a + (b - a) * (static_cast<double>(k + 1) / pieces);
        turn += arg_change(omega, s, p, q, factor(omega, p, s), factor(omega, q, s), 0);
      }
    }
    total += static_cast<int>(std::lround(turn / kTwoPi));
  }
  return total;
}

}  // namespace

std::complex<double> corner_function(double omega, std::complex<double> alpha) {
  const cd s = std::sin(alpha * omega);
  return s * s - alpha * alpha * std::sin(omega) * std::sin(omega);
}

double corner_residual(double omega, std::complex<double> alpha) {
  const cld a(alpha.real(), alpha.imag());
  const long double w = omega;
  const cld s = std::sin(a * w);
  const long double sw = std::sin(w);
  return static_cast<double>(std::abs(s * s - a * a * sw * sw));
}

CornerResult corner_roots(double omega, Strip strip, double im_max) {
  if (!(omega > 0.0) || omega > kTwoPi * (1.0 + 1e-15)) {
    throw InvalidInput("corner: omega must lie in (0, 2 pi]");
  }
  if (!(strip.lo < strip.hi) || !(im_max > 0.0)) {
    throw InvalidInput("corner: empty search window");
  }
  CornerResult out;
  out.omega = omega;
  out.strip = strip;
  out.im_max = im_max;
  const double c_lo = strip.lo + kEdge;
  const double c_hi = strip.upper_closed ? strip.hi + kEdge : strip.hi - kEdge;
  const auto inside = [&](cd z) {
    return z.real() > c_lo && z.real() < c_hi && std::abs(z.imag()) <= im_max;
  };

  std::vector<cd> found;
  const double re_step = 0.05, im_step = 0.25;
  for (const int s : {1, -1}) {
    for (double re = strip.lo - 0.1; re <= strip.hi + 0.1 + 1e-12; re += re_step) {
      for (double im = -im_max - 1.0; im <= im_max + 1.0 + 1e-12; im += im_step) {
        const auto z = newton(omega, cd(re, im), s);
        if (!z || !inside(*z)) continue;
        const bool seen = std::any_of(found.begin(), found.end(),
                                      [&](cd w) { return std::abs(w - *z) < 1e-8; });
        if (!seen) found.push_back(*z);
      }
    }
  }
  std::sort(found.begin(), found.end(), [](cd a, cd b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });
  for (const cd z : found) {
    CornerRoot r;
    r.omega = omega;
    // Snap conjugate-symmetric noise on real roots.
    r.alpha = std::abs(z.imag()) < 1e-13 ? cd(z.real(), 0.0) : z;
    r.residual = corner_residual(omega, r.alpha);
    r.multiplicity = order(omega, r.alpha, 1) + order(omega, r.alpha, -1);
    if (r.multiplicity == 0) r.multiplicity = 1;
    out.enumerated += r.multiplicity;
    out.roots.push_back(r);
  }
  out.winding = winding(omega, c_lo, c_hi, im_max);
  out.winding_tall = winding(omega, c_lo, c_hi, 2.0 * im_max);
  return out;
}

StripReport verify_strip_free(std::span<const double> omegas) {
  StripReport report;
  for (const double w : omegas) {
    if (!(w > 0.0 && w < kTwoPi)) {
      throw InvalidInput("verify_strip_free: omega must lie in (0, 2 pi)");
    }
    auto r = corner_roots(w, Strip{0.0, 0.5, true});
    if (!r.roots.empty() || r.winding != 0) {
      report.strip_free = false;
      report.violations.push_back("omega = " + std::to_string(w) + ": " +
                                  std::to_string(r.roots.size()) + " roots with Re <= 1/2");
    }
    if (!r.complete()) report.complete = false;
    report.samples.push_back(std::move(r));
  }
  return report;
}

}  // namespace epifilm
