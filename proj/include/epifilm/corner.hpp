#pragma once

#include <complex>
#include <span>
#include <string>
#include <vector>

namespace epifilm {

/// Zeros of f(alpha) = sin^2(alpha omega) - alpha^2 sin^2(omega), the corner
/// exponent equation for an opening angle omega.
struct CornerRoot {
  double omega = 0.0;
  std::complex<double> alpha;
  double residual = 0.0;  // |f(alpha)|
  int multiplicity = 1;
  bool double_root() const { return multiplicity > 1; }
};

/// Search window in Re alpha. The lower end is open; the upper end is open
/// unless upper_closed is set.
struct Strip {
  double lo = 0.0;
  double hi = 1.0;
  bool upper_closed = false;
};

struct CornerResult {
  double omega = 0.0;
  Strip strip;
  double im_max = 10.0;
  std::vector<CornerRoot> roots;
  int enumerated = 0;   // roots counted with multiplicity
  int winding = 0;      // argument-principle count over the window
  int winding_tall = 0; // same over a rectangle twice as tall
  bool complete() const { return enumerated == winding && winding == winding_tall; }
};

std::complex<double> corner_function(double omega, std::complex<double> alpha);
double corner_residual(double omega, std::complex<double> alpha);

/// Roots with Re alpha in the strip and |Im alpha| <= im_max, from grid
/// seeding and Newton on the factors sin(alpha omega) -+ alpha sin(omega).
/// Throws InvalidInput unless omega lies in (0, 2 pi].
CornerResult corner_roots(double omega, Strip strip = {}, double im_max = 10.0);

struct StripReport {
  std::vector<CornerResult> samples;
  bool strip_free = true;
  bool complete = true;
  std::vector<std::string> violations;
};

/// Checks that no root has Re alpha in (0, 1/2] for each omega in (0, 2 pi).
StripReport verify_strip_free(std::span<const double> omegas);

}  // namespace epifilm
