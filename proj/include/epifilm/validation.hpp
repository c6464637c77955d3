#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "epifilm/optimizer.hpp"

namespace epifilm {

struct OracleReport {
  std::string name;
  double computed = 0.0;
  double oracle = 0.0;
  double abs_error = 0.0;
  double rel_error = 0.0;
  double tolerance = 0.0;
  bool relative = true;  // tolerance applies to rel_error
  bool pass = false;
};

OracleReport make_report(std::string name, double computed, double oracle, double tolerance,
                         bool relative);

struct FlatOracleOptions {
  int refine = 64;
  int cross_refine = 128;
  double y0 = 0.3;
  std::size_t nodes = 64;
};

/// Closed-form checks on the flat film h = d / l: nodal u_h against
/// v0 = (x, -lambda y / (2 mu + lambda)), the elastic energy against
/// e0^2 W0 d, and the cross term of a dislocation b = (1, 0) at height y0
/// against -2 e0 W0 (h - y0).
std::vector<OracleReport> flat_film_oracle(const ModelParams& params,
                                           const FlatOracleOptions& options = {});

/// Quantized search space for exhaustive minimization.
struct TinySpec {
  ModelParams params;
  Profile base;  // node abscissae; heights are replaced by levels
  std::vector<double> levels;
  std::vector<Point> centers;
  BurgersLattice lattice;
  std::vector<std::vector<int>> coeffs;  // one fixed Burgers vector per dislocation
  PenaltyKind penalty = PenaltyKind::two_sided;
  MeshOptions mesh{18, 0.0};
  std::size_t max_space = 1000000;

  std::size_t space_size() const;
  LatticeSchedule lattice_schedule() const;
};

/// 3 free nodes at 0, l/3, 2l/3 with 11 levels spanning +-10% of d/l, one
/// dislocation b = (1, 0) on a 5 x 5 admissible center grid.
TinySpec default_tiny_spec(const ModelParams& params);

struct BruteForceResult {
  Configuration best;
  std::size_t evaluated = 0;
  std::size_t skipped = 0;  // inadmissible combinations
};

/// Exhaustive arg-min in lexicographic index order (profile levels, then
/// centers); ties keep the first. Throws InvalidInput when the space exceeds
/// max_space or nothing is admissible.
BruteForceResult brute_force_minimize(const TinySpec& spec, const Evaluator& eval);

struct FdOptions {
  double step = 0.0;  // 0 means min(r0 / 5, period / (16 refine))
  /// Center x lies on a symmetry line of a flat film; the x slope must vanish.
  bool translation_invariant = false;
};

/// Central-difference slopes of the energy in each center coordinate at
/// steps s, s/2, s/4; reports the Richardson ratio and, on request, the
/// vanishing x slope.
std::vector<OracleReport> fd_consistency(const Configuration& cfg, const Evaluator& eval,
                                         const FdOptions& options = {});

struct SuiteOptions {
  int refine = 64;
  bool include_tiny = true;
};

/// Every oracle check, in a fixed order.
std::vector<OracleReport> validation_suite(const ModelParams& params, const SuiteOptions& options);

void to_json(nlohmann::json& j, const OracleReport& r);
std::string reports_csv(const std::vector<OracleReport>& reports);

}  // namespace epifilm
