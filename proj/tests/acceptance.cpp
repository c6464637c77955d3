// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "epifilm/config.hpp"
#include "epifilm/corner.hpp"
#include "epifilm/experiment.hpp"
#include "epifilm/optimizer.hpp"
#include "epifilm/validation.hpp"

using namespace epifilm;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = fs::path(EPIFILM_SOURCE_DIR) / "configs";
const fs::path kWork = fs::path(EPIFILM_TEST_WORK_DIR) / "acceptance_out";

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

ExperimentSpec spec_from(const std::string& file, const std::string& mode) {
  return load_spec(ConfigFile::load(kConfigs / file), mode, std::nullopt, kWork / mode);
}

DislocationMeasure edge(double x, double y, int sign = 1) {
  return DislocationMeasure(0.1, BurgersLattice({{1.0, 0.0}}), {{{x, y}, {sign}}});
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Verdict flat_film() {
  const LameTensor C(1.0, 1.0);
  const ElasticState st = solve_elastic(Profile::flat(1.0, 1.0, 64), DislocationMeasure(0.1, BurgersLattice({{1.0, 0.0}}), {}),
                                        C, 1.0, MeshOptions{64, 0.025});
  const double W0 = 2.0 * C.mu * (C.mu + C.lambda) / (2.0 * C.mu + C.lambda);
  const double nu = C.lambda / (2.0 * C.mu + C.lambda);
  double disp = 0.0;
  for (std::size_t n = 0; n < st.mesh().node_count(); ++n) {
    const auto p = st.mesh().node_position(static_cast<int>(n));
    const auto u = st.mismatch_displacement(static_cast<int>(n));
    disp = std::max({disp, std::abs(u.x() - p.x()), std::abs(u.y() + nu * p.y())});
  }
  const double rel = std::abs(st.energy().total - W0) / W0;
  return {rel < 1e-8 && disp < 1e-10, "energy rel err " + fmt("%.2e", rel) + ", u_h err " + fmt("%.2e", disp)};
}

Verdict cross_term() {
  const auto disc = std::make_shared<const Discretization>(Profile::flat(1.0, 1.0, 64), LameTensor(1.0, 1.0),
                                                           MeshOptions{128, 0.025});
  bool pass = true;
  double worst = 0.0;
  for (const double y0 : {0.3, 0.6}) {
    const ElasticState unit = solve_elastic(disc, edge(0.5, y0), 1.0);
    for (const double e0 : {1.0, 4.0}) {
      const double cross = unit.with_e0(e0).energy().cross;
      const double oracle = -2.0 * e0 * (4.0 / 3.0) * 1.0 * (1.0 - y0);
      const double rel = std::abs(cross - oracle) / std::abs(oracle);
      worst = std::max(worst, rel);
      pass = pass && rel < 0.01;
    }
  }
  return {pass, "worst rel err " + fmt("%.2e", worst)};
}

Verdict curl() {
  // Few profile nodes so that the refinement sets the column spacing.
  const Profile p = Profile::flat(1.0, 1.0, 8);
  std::vector<double> res;
  for (const int r : {32, 64, 128}) {
    res.push_back(curl_residual(solve_elastic(p, edge(0.5, 0.5), LameTensor(1.0, 1.0), 1.0, MeshOptions{r, 0.025})));
  }
  const double o1 = std::log2(res[0] / res[1]), o2 = std::log2(res[1] / res[2]);
  const bool pass = res[0] > res[1] && res[1] > res[2] && o1 >= 0.9 && o2 >= 0.9;
  return {pass, "residuals " + fmt("%.3g", res[0]) + " " + fmt("%.3g", res[1]) + " " + fmt("%.3g", res[2]) +
                    ", orders " + fmt("%.2f", o1) + " " + fmt("%.2f", o2)};
}

Verdict sinking() {
  const auto spec = spec_from("sink.cfg", "sink-study");
  const Evaluator eval(spec.params, spec.objective, spec.mesh);
  const auto rows = sink_study(eval.evaluate(spec.profile, spec.sigma), eval, spec.schedule, spec.sink_max_steps);
  bool monotone = true;
  for (std::size_t i = 1; i < rows.size(); ++i) monotone = monotone && rows[i].energy <= rows[i - 1].energy;
  const double y = rows.back().y;
  const double fd = spec.schedule.fd(spec.params.r0);
  const bool pass = monotone && std::abs(y - spec.params.r0) <= fd && rows.front().y == 0.6;
  return {pass, "final y " + fmt("%.6f", y) + " after " + std::to_string(rows.size() - 1) + " steps, trace " +
                    (monotone ? "non-increasing" : "INCREASES")};
}

Verdict orientation() {
  bool pass = true;
  std::string detail;
  for (const double e0 : {4.0, 10.0}) {
    ModelParams m;
    m.e0 = e0;
    m.gamma = 10.0;
    const Evaluator eval(m, {}, MeshOptions{32, 0.0});
    const Profile p = Profile::flat(1.0, 1.0, 64);
    const double neg = eval.evaluate(p, edge(0.5, 0.6, -1)).energy.elastic;
    const double pos = eval.evaluate(p, edge(0.5, 0.6, +1)).energy.elastic;
    pass = pass && pos < neg;
    detail += "e0=" + fmt("%g", e0) + ": " + fmt("%.4f", neg) + " -> " + fmt("%.4f", pos) + "  ";
  }
  return {pass, detail};
}

Verdict nucleation() {
  auto spec = spec_from("nucleate.cfg", "nucleate");
  const Evaluator eval(spec.params, spec.objective, spec.mesh);
  const auto scan = nucleation_threshold_scan(eval, spec.profile, spec.sigma, spec.schedule, spec.scan);
  if (!scan.threshold) return {false, "no nucleation in [0, 10]"};
  const double rel = std::abs(*scan.threshold - scan.estimate) / scan.estimate;
  return {rel <= 0.1 && scan.consistent,
          "threshold " + fmt("%.4f", *scan.threshold) + " vs estimate " + fmt("%.4f", scan.estimate) +
              " (rel " + fmt("%.3f", rel) + "), " + (scan.consistent ? "consistent" : "INCONSISTENT") +
              " across the grid"};
}

Verdict penalization() {
  const auto volume_after = [](double factor) {
    ModelParams m;
    m.Lambda = factor * m.e0 * m.e0 * m.W0();
    const Evaluator eval(m, {PenaltyKind::two_sided, false, std::nullopt}, MeshOptions{16, 0.0});
    ScheduleParams s;
    s.max_sweeps = 200;
    s.energy_tol = 1e-12;
    const auto start = eval.evaluate(Profile::flat(1.0, 0.8, 32), DislocationMeasure(0.1, BurgersLattice({{1.0, 0.0}}), {}));
    return alternate_minimize(start, eval, s).final.energy.volume;
  };
  const double above = volume_after(1.1), below = volume_after(0.5);
  const bool pass = std::abs(above - 1.0) <= 1e-3 && std::abs(below - 1.0) > 1e-3;
  return {pass, "V = " + fmt("%.6f", above) + " at 1.1 e0^2 W0, V = " + fmt("%.6f", below) + " at 0.5 e0^2 W0"};
}

Verdict flattening() {
  const auto spec = spec_from("gamma_sweep.cfg", "gamma-sweep");
  const auto rows = gamma_sweep(spec);
  bool pass = rows.size() == 3 && rows[0].gamma == 1.0 && rows[2].gamma == 100.0;
  std::string detail = "sup distances";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    detail += " " + fmt("%.2e", rows[i].sup_distance);
    if (i > 0) pass = pass && rows[i].sup_distance < rows[i - 1].sup_distance;
  }
  pass = pass && rows.back().sup_distance < 1e-3;
  return {pass, detail};
}

Verdict corners() {
  const auto crack = corner_roots(2.0 * std::numbers::pi);
  bool pass = crack.complete() && crack.roots.size() == 1 && std::abs(crack.roots[0].alpha - 0.5) < 1e-10;
  double worst = crack.roots.empty() ? 0.0 : crack.roots[0].residual;
  double min_re = 1.0;
  for (int k = 11; k <= 19; ++k) {
    const auto r = corner_roots(0.1 * k * std::numbers::pi);
    pass = pass && r.complete();
    for (const auto& z : r.roots) {
      min_re = std::min(min_re, z.alpha.real());
      worst = std::max(worst, z.residual);
      pass = pass && z.alpha.real() > 0.5;
    }
  }
  pass = pass && worst <= 1e-12;
  return {pass, "crack alpha " + fmt("%.12f", crack.roots.empty() ? NAN : crack.roots[0].alpha.real()) +
                    ", min Re over 1.1pi..1.9pi " + fmt("%.6f", min_re) + ", max residual " + fmt("%.1e", worst)};
}

Verdict tiny() {
  ModelParams m;
  m.e0 = 4.0;
  const TinySpec spec = default_tiny_spec(m);
  const Evaluator eval(spec.params, {spec.penalty, false, std::nullopt}, spec.mesh);
  const auto brute = brute_force_minimize(spec, eval);
  ScheduleParams schedule;
  schedule.lattice = spec.lattice_schedule();
  schedule.max_sweeps = 100;
  schedule.energy_tol = 0.0;
  const DislocationMeasure start(spec.params.r0, spec.lattice, {{spec.centers.back(), spec.coeffs.front()}});
  const auto run = alternate_minimize(eval.evaluate(spec.base, start), eval, schedule);
  const double gap = std::abs(run.final.energy.total - brute.best.energy.total);
  return {gap <= 1e-6, "alternation " + fmt("%.10f", run.final.energy.total) + " vs enumeration " +
                           fmt("%.10f", brute.best.energy.total) + " over " + std::to_string(brute.evaluated) +
                           " configurations"};
}

Verdict determinism() {
  std::string traces[2];
  for (int k = 0; k < 2; ++k) {
    auto spec = spec_from("minimize.cfg", "minimize");
    spec.out_dir = kWork / ("minimize_" + std::to_string(k));
    fs::remove_all(spec.out_dir);
    run(spec);
    traces[k] = slurp(spec.out_dir / "trace.csv");
  }
  const bool pass = !traces[0].empty() && traces[0] == traces[1];
  return {pass, std::to_string(traces[0].size()) + " bytes, " + (pass ? "identical" : "DIFFER")};
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;  // 0 when no runtime bound applies
  std::function<Verdict()> check;
};

}  // namespace

int main() {
  fs::create_directories(kWork);
  const std::vector<Criterion> criteria{
      {1, "flat-film exactness", 5.0, flat_film},
      {2, "cross-term identity", 120.0, cross_term},
      {3, "curl residual convergence", 0.0, curl},
      {4, "dislocation sinking", 300.0, sinking},
      {5, "orientation", 0.0, orientation},
      {6, "nucleation threshold", 0.0, nucleation},
      {7, "penalization consistency", 0.0, penalization},
      {8, "flattening for large gamma", 0.0, flattening},
      {9, "corner exponents", 30.0, corners},
      {10, "tiny-instance oracle equivalence", 600.0, tiny},
      {11, "determinism", 0.0, determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_s > 0.0 && secs > c.budget_s) {
      v.pass = false;
      v.detail += " (over the " + fmt("%g", c.budget_s) + " s budget)";
    }
    failed += v.pass ? 0 : 1;
    std::printf("%s %2d %-34s %8.2f s  %s\n", v.pass ? "PASS" : "FAIL", c.id, c.name, secs, v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
