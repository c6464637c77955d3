#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "epifilm/dislocations.hpp"
#include "epifilm/errors.hpp"
#include "support.hpp"

using namespace epifilm;
using doctest::Approx;

namespace {

/// int_0^1 exp(-1/(1-r^2)) r dr by composite Simpson.
double bump_radial_integral() {
  const int n = 20000;
  double s = 0.0;
  for (int i = 1; i < n; ++i) {
    const double r = static_cast<double>(i) / n;
    s += (i % 2 ? 4.0 : 2.0) * std::exp(-1.0 / (1.0 - r * r)) * r;
  }
  return s / (3.0 * n);
}

/// Cell integral of the regularized measure by a tensor trapezoid rule over
/// one period in x and the band around the core in y.
Vec2 cell_integral(const DislocationMeasure& s, double ell, double y_lo, double y_hi, int n) {
  Vec2 acc{0.0, 0.0};
  const double dx = ell / n, dy = (y_hi - y_lo) / n;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= n; ++j) {
      const double w = (j == 0 || j == n) ? 0.5 : 1.0;
      const Vec2 v = regularized_measure(s, ell, {i * dx, y_lo + j * dy});
      acc.x += w * v.x * dx * dy;
      acc.y += w * v.y * dx * dy;
    }
  }
  return acc;
}

}  // namespace

TEST_CASE("mollifier normalization and peak value") {
  const double c = 1.0 / (2.0 * M_PI * bump_radial_integral());
  CHECK(Mollifier::normalization() == Approx(c).epsilon(1e-10));
  const Mollifier rho(0.1);
  CHECK(rho(0.0, 0.0) == Approx(c * std::exp(-1.0) / 0.01).epsilon(1e-10));
  CHECK(rho(0.1, 0.0) == 0.0);
  CHECK(rho(0.08, 0.07) == 0.0);
  CHECK(rho(0.05, 0.02) > 0.0);
}

TEST_CASE("mollifier marginal integrates to one") {
  const Mollifier rho(0.1);
  const int n = 4000;
  double s = 0.0;
  for (int i = 1; i < n; ++i) s += rho.marginal(-0.1 + 0.2 * i / n);
  CHECK(s * 0.2 / n == Approx(1.0).epsilon(1e-10));
  CHECK(rho.column(0.03, -0.2) == 0.0);
  CHECK(rho.column(0.03, 0.2) == Approx(rho.marginal(0.03)).epsilon(1e-12));
  // Symmetric bump: half the column mass lies below the center line.
  CHECK(rho.column(0.03, 0.0) == Approx(0.5 * rho.marginal(0.03)).epsilon(1e-10));
}

TEST_CASE("regularized measure") {
  const BurgersLattice lat = BurgersLattice::unit_axes();
  const DislocationMeasure none(0.1, lat, {});
  CHECK(regularized_measure(none, 1.0, {0.3, 0.4}).x == 0.0);

  const DislocationMeasure one(0.1, lat, {{{0.5, 0.4}, {1, 0}}});
  const Vec2 at = regularized_measure(one, 1.0, {0.5, 0.4});
  CHECK(at.x == Approx(Mollifier(0.1)(0.0, 0.0)));
  CHECK(at.y == 0.0);
  CHECK(regularized_measure(one, 1.0, {0.61, 0.4}).x == 0.0);
  CHECK(regularized_measure(one, 1.0, {0.5, 0.29}).x == 0.0);

  // Periodic images: a core at x = 0.02 is felt at x = 0.97.
  const DislocationMeasure edge(0.1, lat, {{{0.02, 0.4}, {0, 1}}});
  CHECK(regularized_measure(edge, 1.0, {0.97, 0.4}).y > 0.0);
  const Vec2 a = regularized_measure(edge, 1.0, {0.05, 0.45});
  const Vec2 b = regularized_measure(edge, 1.0, {1.05, 0.45});
  CHECK(a.y == Approx(b.y).epsilon(1e-12));
}

TEST_CASE("property: cell integral equals total Burgers vector") {
  testing::Gen gen(21);
  const BurgersLattice lat({{1.0, 0.0}, {0.3, 2.0}});
  for (int trial = 0; trial < 4; ++trial) {
    std::vector<DislocationEntry> entries;
    Vec2 total{0.0, 0.0};
    for (int k = 0; k < 3; ++k) {
      const std::vector<int> m{gen.integer(-2, 2), gen.integer(-2, 2)};
      entries.push_back({{gen.uniform(0.0, 1.0), gen.uniform(0.15, 0.85)}, m});
      const Vec2 b = lat.vector(m);
      total.x += b.x;
      total.y += b.y;
    }
    const DislocationMeasure s(0.1, lat, entries);
    const Vec2 I = cell_integral(s, 1.0, 0.0, 1.0, 400);
    CHECK(I.x == Approx(total.x).epsilon(1e-8).scale(1.0));
    CHECK(I.y == Approx(total.y).epsilon(1e-8).scale(1.0));
  }
}

TEST_CASE("nucleation energy") {
  const BurgersLattice axes = BurgersLattice::unit_axes();
  CHECK(nucleation_energy(DislocationMeasure(0.1, axes, {}), 1.0) == 0.0);
  CHECK(nucleation_energy(DislocationMeasure(0.1, axes, {{{0.5, 0.5}, {1, 0}}}), 1.0) == Approx(1.0));
  const BurgersLattice wide({{1.0, 0.0}, {0.0, 2.0}});
  CHECK(nucleation_energy(DislocationMeasure(0.1, wide, {{{0.5, 0.5}, {2, -3}}}), 1.0) == Approx(14.0));
  CHECK(nucleation_energy(DislocationMeasure(0.1, wide, {{{0.5, 0.5}, {2, -3}}}), 0.5) == Approx(7.0));
  // Superposed entries merge before the norm.
  const DislocationMeasure sup(0.1, axes, {{{0.5, 0.5}, {1, 0}}, {{0.5, 0.5}, {1, 0}}});
  CHECK(nucleation_energy(sup, 1.0) == Approx(2.0));
  CHECK(sup.merged().size() == 1);
}

TEST_CASE("total variation of measures") {
  const BurgersLattice axes = BurgersLattice::unit_axes();
  CHECK(total_variation(DislocationMeasure(0.1, axes, {})) == 0.0);
  CHECK(total_variation(DislocationMeasure(0.1, axes, {{{0.2, 0.5}, {1, 0}}, {{0.7, 0.5}, {0, -2}}})) ==
        Approx(3.0));
  const DislocationMeasure cancel(0.1, axes, {{{0.4, 0.5}, {1, 0}}, {{0.4, 0.5}, {-1, 0}}});
  CHECK(total_variation(cancel) == 0.0);
  CHECK(cancel.merged().empty());
}

TEST_CASE("property: nucleation energy is relabeling, translation invariant and additive") {
  testing::Gen gen(22);
  const BurgersLattice lat({{1.0, 0.0}, {0.5, 1.5}});
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<DislocationEntry> a, b;
    for (int k = 0; k < 3; ++k) {
      a.push_back({{0.1 * k + gen.uniform(0.0, 0.05), gen.uniform(0.2, 0.8)},
                   {gen.integer(-3, 3), gen.integer(-3, 3)}});
      b.push_back({{0.5 + 0.1 * k + gen.uniform(0.0, 0.05), gen.uniform(0.2, 0.8)},
                   {gen.integer(-3, 3), gen.integer(-3, 3)}});
    }
    const DislocationMeasure sa(0.1, lat, a), sb(0.1, lat, b);
    auto all = a;
    all.insert(all.end(), b.begin(), b.end());
    const double c = gen.uniform(0.1, 3.0);
    CHECK(nucleation_energy(DislocationMeasure(0.1, lat, all), c) ==
          Approx(nucleation_energy(sa, c) + nucleation_energy(sb, c)));
    auto reversed = a;
    std::reverse(reversed.begin(), reversed.end());
    CHECK(nucleation_energy(DislocationMeasure(0.1, lat, reversed), c) == Approx(nucleation_energy(sa, c)));
    CHECK(nucleation_energy(sa.shifted(gen.uniform(-1.0, 1.0)), c) == Approx(nucleation_energy(sa, c)));
  }
}

TEST_CASE("lattice validation") {
  CHECK_THROWS_AS(BurgersLattice({{0.0, 0.0}}), InvalidInput);
  CHECK_THROWS_AS(BurgersLattice({{1.0, 0.0}, {2.0, 0.0}}), InvalidInput);
  CHECK_THROWS_AS(BurgersLattice({{1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}}), InvalidInput);
  CHECK_NOTHROW(BurgersLattice({{1.0, 0.0}, {std::sqrt(2.0), 0.0}}));
  const BurgersLattice lat({{1.0, 0.0}, {0.0, 2.0}});
  const std::vector<int> m{2, -3};
  CHECK(lat.norm_sq(m) == Approx(14.0));
  CHECK(lat.vector(m).y == Approx(-6.0));
}

TEST_CASE("admissibility and json") {
  const BurgersLattice axes = BurgersLattice::unit_axes();
  const Profile flat = Profile::flat(1.0, 1.0);
  const DislocationMeasure low(0.1, axes, {{{0.5, 0.05}, {1, 0}}});
  CHECK_THROWS_AS(low.check_admissible(flat), InadmissiblePlacement);
  const DislocationMeasure high(0.1, axes, {{{0.5, 0.95}, {1, 0}}});
  CHECK_FALSE(high.admissible(flat));
  const DislocationMeasure ok(0.1, axes, {{{0.5, 0.5}, {1, -1}}});
  CHECK(ok.admissible(flat));
  const nlohmann::json j = ok;
  CHECK(measure_from_json(nlohmann::json::parse(j.dump())) == ok);
}
