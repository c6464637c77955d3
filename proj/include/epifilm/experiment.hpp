#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "epifilm/config.hpp"
#include "epifilm/corner.hpp"
#include "epifilm/optimizer.hpp"

namespace epifilm {

struct ScanSettings {
  double e0_min = 0.0;
  double e0_max = 10.0;
  double e0_step = 0.05;
  int bisect = 20;
  /// Insertions per sweep during the scan; one decides acceptance.
  int max_nucleations = 1;
};

struct SweepSettings {
  std::vector<double> gammas{1.0, 10.0, 100.0};
};

struct CornerSettings {
  std::vector<double> omegas;
  Strip strip;
  double im_max = 10.0;
};

struct ExperimentSpec {
  std::string mode;
  ModelParams params;
  Profile profile = Profile::flat(1.0, 1.0, 64);
  DislocationMeasure sigma{0.1, BurgersLattice({{1.0, 0.0}}), {}};
  ScheduleParams schedule;
  Objective objective;
  MeshOptions mesh{64, 0.0};
  std::filesystem::path out_dir = "out";
  ScanSettings scan;
  int sink_max_steps = 500;
  SweepSettings sweep;
  CornerSettings corner;
  bool validate_tiny = true;
  /// Resolved parameters, echoed into the manifest and hashed.
  std::map<std::string, std::string> echo;
};

const std::vector<std::string>& experiment_modes();

/// Builds a spec from parsed config text. Throws ConfigError naming the
/// file, line and key on any problem, including unknown keys.
ExperimentSpec load_spec(const ConfigFile& config, const std::string& mode,
                         std::optional<int> refine, const std::filesystem::path& out_dir);

struct ScanRow {
  double e0 = 0.0;
  bool accepted = false;
  std::size_t dislocations = 0;
  double before = 0.0;
  double after = 0.0;
};

struct ThresholdScan {
  std::vector<ScanRow> rows;
  std::optional<double> threshold;  // refined by bisection
  double estimate = 0.0;            // (E_self + c_o |b|^2) / (2 W0 b1 (hbar - r0))
  double self_energy = 0.0;
  /// No acceptance below the threshold and acceptance at every grid point above.
  bool consistent = false;
};

/// Runs nucleation_sweep from (profile, sigma) at each e0 of the grid.
ThresholdScan nucleation_threshold_scan(const Evaluator& eval, const Profile& profile,
                                        const DislocationMeasure& sigma,
                                        const ScheduleParams& schedule, const ScanSettings& scan);

struct SinkRow {
  int step = 0;
  double x = 0.0;
  double y = 0.0;
  double energy = 0.0;
};

/// Iterates dislocation_step until it stops moving (or max_steps); tracks
/// the first dislocation.
std::vector<SinkRow> sink_study(const Configuration& start, const Evaluator& eval,
                                const ScheduleParams& schedule, int max_steps);

struct SweepRow {
  double gamma = 0.0;
  double sup_distance = 0.0;
  double energy = 0.0;
  bool converged = false;
  std::size_t accepted_steps = 0;
};

std::vector<SweepRow> gamma_sweep(const ExperimentSpec& spec);

struct RunOutcome {
  int status = 0;  // 0 success, 3 validation failure
  std::vector<std::filesystem::path> files;
  std::string message;
};

/// Dispatches on spec.mode and writes all artifacts plus manifest.json.
RunOutcome run(const ExperimentSpec& spec);

std::string trace_csv(const std::vector<TraceRow>& trace);
std::string energy_csv(const EnergyBreakdown& e, const std::string& params_hash);
std::string field_csv(const ElasticState& state);
std::string sha256_hex(const std::string& bytes);

}  // namespace epifilm
