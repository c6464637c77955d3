#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>

#include "epifilm/elasticity.hpp"
#include "epifilm/errors.hpp"
#include "support.hpp"

using namespace epifilm;
using doctest::Approx;

namespace {

const LameTensor kLame{1.0, 1.0};

DislocationMeasure single(double x, double y, std::vector<int> m = {1, 0}) {
  return DislocationMeasure(0.1, BurgersLattice::unit_axes(), {{{x, y}, std::move(m)}});
}

DislocationMeasure none() { return DislocationMeasure(0.1, BurgersLattice::unit_axes(), {}); }

std::shared_ptr<const Discretization> disc(const Profile& p, int refine) {
  return std::make_shared<const Discretization>(p, kLame, MeshOptions{refine, 0.025});
}

}  // namespace

TEST_CASE("energy density values") {
  CHECK(energy_density(Mat2::Zero(), kLame) == 0.0);
  Mat2 flat;
  flat << 1.0, 0.0, 0.0, -1.0 / 3.0;
  CHECK(energy_density(flat, kLame) == Approx(4.0 / 3.0).epsilon(1e-14));
  Mat2 shear;
  shear << 0.0, 0.5, 0.5, 0.0;
  CHECK(energy_density(shear, kLame) == Approx(0.5).epsilon(1e-14));
  CHECK(kLame.flat_energy_density() == Approx(4.0 / 3.0));
  CHECK_THROWS_AS(LameTensor(0.0, 1.0), InvalidInput);
  CHECK_THROWS_AS(LameTensor(1.0, -1.5), InvalidInput);
}

TEST_CASE("property: energy density is a nonnegative quadratic form") {
  testing::Gen gen(31);
  for (int trial = 0; trial < 100; ++trial) {
    const LameTensor C(gen.uniform(0.2, 3.0), gen.uniform(-0.1, 3.0));
    Mat2 E;
    E << gen.uniform(-1, 1), gen.uniform(-1, 1), gen.uniform(-1, 1), gen.uniform(-1, 1);
    const Mat2 S = 0.5 * (E + E.transpose());
    const double t = gen.uniform(-3.0, 3.0);
    CHECK(energy_density(S, C) >= 0.0);
    CHECK(energy_density(t * S, C) == Approx(t * t * energy_density(S, C)).epsilon(1e-12));
    // W(E) = 1/2 C E : E
    CHECK(energy_density(S, C) == Approx(0.5 * (C.stress(S).cwiseProduct(S)).sum()).epsilon(1e-12));
  }
}

TEST_CASE("flat film mismatch field equals the analytic equilibrium") {
  const auto d = disc(Profile::flat(1.0, 1.0, 16), 16);
  const ElasticState st = solve_elastic(d, none(), 1.0);
  const double nu = kLame.lambda / (2.0 * kLame.mu + kLame.lambda);
  double err = 0.0;
  for (std::size_t n = 0; n < st.mesh().node_count(); ++n) {
    const Vec2d p = st.mesh().node_position(static_cast<int>(n));
    const Vec2d u = st.mismatch_displacement(static_cast<int>(n));
    err = std::max({err, std::abs(u.x() - p.x()), std::abs(u.y() + nu * p.y())});
  }
  CHECK(err < 1e-10);
  CHECK(st.energy().total == Approx(4.0 / 3.0).epsilon(1e-10));
  CHECK(st.fields().singular.zero);
  CHECK(st.energy().cross == 0.0);
  CHECK(st.energy().self == 0.0);
}

TEST_CASE("mismatch enters quadratically and fields are reused across e0") {
  const Profile p = Profile::sampled(1.0, 32, [](double x) { return 1.0 + 0.1 * std::cos(2 * M_PI * x); });
  const auto d = disc(p, 16);
  const ElasticState s1 = solve_elastic(d, single(0.4, 0.45), 1.0);
  const ElasticState s3 = s1.with_e0(3.0);
  CHECK(s3.fields_ptr() == s1.fields_ptr());
  const auto a = s1.energy(), b = s3.energy();
  CHECK(b.mismatch == Approx(9.0 * a.mismatch));
  CHECK(b.cross == Approx(3.0 * a.cross));
  CHECK(b.self == Approx(a.self));
  CHECK(b.total == Approx(b.mismatch + b.cross + b.self));
  const ElasticState direct = solve_elastic(d, single(0.4, 0.45), 3.0);
  CHECK(direct.energy().total == Approx(b.total).epsilon(1e-12));
}

TEST_CASE("singular field support and column marginal") {
  const auto d = disc(Profile::flat(1.0, 1.0, 32), 32);
  const auto sigma = single(0.5, 0.4, {1, 0});
  const SingularField K = singular_field(sigma, d->mesh());
  CHECK_FALSE(K.zero);
  const Mollifier rho(0.1);
  const Mesh& m = d->mesh();
  for (std::size_t n = 0; n < m.node_count(); ++n) {
    const Vec2d p = m.node_position(static_cast<int>(n));
    const Vec2d k = K.at_node[n];
    CHECK(k.y() == 0.0);
    double s = p.x() - 0.5;
    s -= std::round(s);
    if (std::abs(s) >= 0.1 || p.y() <= 0.3) {
      CHECK(k.x() == 0.0);
    } else if (p.y() >= 0.5) {
      CHECK(k.x() == Approx(-rho.marginal(s)).epsilon(1e-10));
    }
  }
}

TEST_CASE("no dislocations means no singular field and no corrector") {
  const Profile p = Profile::sampled(1.0, 32, [](double x) { return 1.0 + 0.2 * std::sin(2 * M_PI * x); });
  const auto d = disc(p, 16);
  const SingularField K = singular_field(none(), d->mesh());
  CHECK(K.zero);
  const CorrectorField v = solve_corrector(*d, K);
  CHECK(v.v.norm() == 0.0);
}

TEST_CASE("corrector is linear in sigma") {
  const Profile p = Profile::sampled(1.0, 32, [](double x) { return 1.0 + 0.1 * std::sin(2 * M_PI * x); });
  const auto d = disc(p, 16);
  const auto s1 = single(0.3, 0.5, {1, 1});
  const ElasticState a = solve_elastic(d, s1, 1.0);
  const ElasticState b = solve_elastic(d, s1.scaled(2), 1.0);
  CHECK((b.fields().corrector.v - 2.0 * a.fields().corrector.v).norm() <
        1e-9 * a.fields().corrector.v.norm());
  CHECK(b.energy().self == Approx(4.0 * a.energy().self).epsilon(1e-9));
  CHECK(b.energy().cross == Approx(2.0 * a.energy().cross).epsilon(1e-9));
  CHECK(b.energy().mismatch == Approx(a.energy().mismatch).epsilon(1e-12));
}

TEST_CASE("translating the core by two columns leaves the energy unchanged on a flat film") {
  // Uniform columns 1/64 apart; diagonals repeat every two columns.
  const auto d = disc(Profile::flat(1.0, 1.0, 64), 64);
  const double shift = 2.0 / 64.0;
  const double e1 = solve_elastic(d, single(0.5, 0.45), 1.0).energy().total;
  const double e2 = solve_elastic(d, single(0.5 + shift, 0.45), 1.0).energy().total;
  const double e3 = solve_elastic(d, single(0.5 + 10 * shift, 0.45), 1.0).energy().total;
  CHECK(e2 == Approx(e1).epsilon(1e-9));
  CHECK(e3 == Approx(e1).epsilon(1e-9));
}

TEST_CASE("flat film cross term matches the closed form") {
  const auto d = disc(Profile::flat(1.0, 1.0, 64), 64);
  for (const double y0 : {0.3, 0.6}) {
    const double cross = solve_elastic(d, single(0.5, y0), 1.0).energy().cross;
    const double oracle = -2.0 * (4.0 / 3.0) * 1.0 * (1.0 - y0);
    CHECK(cross == Approx(oracle).epsilon(0.01));
  }
}

TEST_CASE("curl residual decreases under refinement") {
  const Profile p = Profile::flat(1.0, 1.0, 16);
  const auto sigma = single(0.5, 0.5);
  double prev = 1e300;
  for (const int r : {16, 32, 64}) {
    const double res = curl_residual(solve_elastic(disc(p, r), sigma, 1.0));
    CHECK(res < prev);
    prev = res;
  }
  CHECK(curl_residual(solve_elastic(disc(p, 16), none(), 1.0)) == 0.0);
}

TEST_CASE("shape gradient agrees with finite differences") {
  const Profile p = Profile::sampled(1.0, 12, [](double x) { return 1.0 + 0.15 * std::sin(2 * M_PI * x); });
  const auto sigma = single(0.35, 0.4, {1, 0});
  const MeshOptions opt{24, 0.025};
  const ElasticState st = solve_elastic(p, sigma, kLame, 2.0, opt);
  const auto g = st.profile_height_gradient();
  REQUIRE(g.size() == p.nodes().size());
  const double h = 1e-5;
  for (std::size_t i = 0; i < g.size(); i += 3) {
    auto up = p.heights(), dn = p.heights();
    up[i] += h;
    dn[i] -= h;
    const double fp = solve_elastic(p.with_heights(up), sigma, kLame, 2.0, opt).energy().total;
    const double fm = solve_elastic(p.with_heights(dn), sigma, kLame, 2.0, opt).energy().total;
    const double fd = (fp - fm) / (2.0 * h);
    CHECK(g[i] == Approx(fd).epsilon(1e-4).scale(1e-3));
  }
}

TEST_CASE("solver rejects inadmissible cores") {
  const Profile p = Profile::flat(1.0, 1.0, 16);
  CHECK_THROWS_AS(solve_elastic(p, single(0.5, 0.95), kLame, 1.0, MeshOptions{16, 0.025}),
                  InadmissiblePlacement);
}
