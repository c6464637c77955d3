#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "epifilm/errors.hpp"
#include "epifilm/validation.hpp"

using namespace epifilm;
using doctest::Approx;

namespace {

/// Default tiny instance cut down to 3 levels and 3 centers.
TinySpec small_tiny() {
  ModelParams m;
  m.e0 = 4.0;
  TinySpec spec = default_tiny_spec(m);
  spec.levels = {spec.levels[2], spec.levels[5], spec.levels[8]};
  spec.centers = {spec.centers[0], spec.centers[7], spec.centers[12]};
  spec.mesh.refine = 12;
  return spec;
}

}  // namespace

TEST_CASE("make_report applies absolute or relative tolerances") {
  const auto a = make_report("a", 1.001, 1.0, 1e-2, true);
  CHECK(a.pass);
  CHECK(a.abs_error == Approx(1e-3));
  CHECK(a.rel_error == Approx(1e-3));
  CHECK_FALSE(make_report("b", 1.1, 1.0, 1e-2, true).pass);
  CHECK(make_report("c", 1e-12, 0.0, 1e-10, false).pass);
  CHECK_FALSE(make_report("d", 1e-9, 0.0, 1e-10, false).pass);
  CHECK_FALSE(make_report("e", std::numeric_limits<double>::quiet_NaN(), 0.0, 1.0, false).pass);
}

TEST_CASE("flat film oracle passes on a coarse mesh") {
  const ModelParams m;
  const auto reps = flat_film_oracle(m, {16, 64, 0.3, 16});
  REQUIRE(reps.size() == 3);
  for (const auto& r : reps) {
    INFO(r.name);
    CHECK(r.pass);
  }
  CHECK(reps[1].oracle == Approx(4.0 / 3.0));
  CHECK(reps[2].oracle == Approx(-2.0 * 4.0 / 3.0 * 0.7));
}

TEST_CASE("flat film oracle scales with the mismatch and volume") {
  ModelParams m;
  m.e0 = 2.0;
  m.volume = 1.5;
  const auto reps = flat_film_oracle(m, {16, 64, 0.6, 16});
  for (const auto& r : reps) CHECK(r.pass);
  CHECK(reps[1].oracle == Approx(4.0 * 4.0 / 3.0 * 1.5));
  CHECK(reps[2].oracle == Approx(-2.0 * 2.0 * 4.0 / 3.0 * (1.5 - 0.6)));
}

TEST_CASE("finite-difference consistency on a flat film") {
  const ModelParams m;
  const Evaluator eval(m, {}, MeshOptions{32, 0.0});
  const DislocationMeasure one(0.1, BurgersLattice({{1.0, 0.0}}), {{{0.5, 0.5}, {1}}});
  const auto reps = fd_consistency(eval.evaluate(Profile::flat(1.0, 1.0, 32), one), eval, {0.0, true});
  REQUIRE_FALSE(reps.empty());
  for (const auto& r : reps) {
    INFO(r.name << " computed " << r.computed);
    CHECK(r.pass);
  }
}

TEST_CASE("tiny instance layout") {
  ModelParams m;
  m.e0 = 4.0;
  const TinySpec spec = default_tiny_spec(m);
  CHECK(spec.base.nodes().size() == 3);
  CHECK(spec.levels.size() == 11);
  CHECK(spec.levels.front() == Approx(0.9));
  CHECK(spec.levels.back() == Approx(1.1));
  CHECK(spec.centers.size() == 25);
  CHECK(spec.space_size() == 11u * 11u * 11u * 25u);
  TinySpec big = spec;
  big.max_space = 10;
  const Evaluator eval(big.params, {big.penalty, false, {}}, big.mesh);
  CHECK_THROWS_AS(brute_force_minimize(big, eval), InvalidInput);
}

TEST_CASE("brute force matches an independent enumeration") {
  const TinySpec spec = small_tiny();
  const Evaluator eval(spec.params, {spec.penalty, false, {}}, spec.mesh);
  const auto brute = brute_force_minimize(spec, eval);
  double best = std::numeric_limits<double>::infinity();
  std::size_t admissible = 0;
  for (const double a : spec.levels) {
    for (const double b : spec.levels) {
      for (const double c : spec.levels) {
        const std::vector<double> h{a, b, c};
        const Profile p = spec.base.with_heights(h);
        for (const auto& z : spec.centers) {
          const DislocationMeasure s(spec.params.r0, spec.lattice, {{z, spec.coeffs.front()}});
          const auto cfg = eval.try_evaluate(p, s);
          if (!cfg) continue;
          ++admissible;
          best = std::min(best, cfg->energy.total);
        }
      }
    }
  }
  CHECK(brute.evaluated == admissible);
  CHECK(brute.evaluated + brute.skipped == spec.space_size());
  CHECK(brute.best.energy.total == Approx(best).epsilon(1e-14));

  ScheduleParams schedule;
  schedule.lattice = spec.lattice_schedule();
  schedule.max_sweeps = 50;
  schedule.energy_tol = 0.0;
  const DislocationMeasure start(spec.params.r0, spec.lattice, {{spec.centers.back(), spec.coeffs.front()}});
  const auto run = alternate_minimize(eval.evaluate(spec.base, start), eval, schedule);
  CHECK(run.final.energy.total == Approx(best).epsilon(1e-9));
}

TEST_CASE("report serialization") {
  const std::vector<OracleReport> reps{make_report("x", 1.0, 1.0, 1e-3, true)};
  const auto csv = reports_csv(reps);
  CHECK(csv.rfind("name,computed,oracle,abs_error,rel_error,tolerance,relative,pass\n", 0) == 0);
  CHECK(csv.find("x,1,1,0,0,0.001,1,1") != std::string::npos);
  const nlohmann::json j = reps.front();
  CHECK(j["name"] == "x");
  CHECK(j["pass"] == true);
}
