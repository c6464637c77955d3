#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "epifilm/dislocations.hpp"
#include "epifilm/elasticity.hpp"
#include "epifilm/energy.hpp"
#include "epifilm/geometry.hpp"

namespace epifilm {

/// Which functional the optimizer descends.
struct Objective {
  /// none: volume is held fixed by the profile steps.
  PenaltyKind penalty = PenaltyKind::none;
  /// Adds N(sigma).
  bool nucleation = false;
  std::optional<Profile> anchor;
};

/// Admissible triple with its solved field and energy.
struct Configuration {
  Profile profile;
  DislocationMeasure sigma;
  std::shared_ptr<const ElasticState> state;
  EnergyBreakdown energy;
  /// Pseudo-time step carried between profile steps.
  double profile_tau = 0.0;
};

/// Solves and scores configurations; memoizes factorized operators per
/// profile and e0-independent fields per (profile, sigma). Copies made with
/// with_params share the memo. Not safe for concurrent use.
class Evaluator {
 public:
  Evaluator(ModelParams params, Objective objective, MeshOptions mesh,
            std::size_t cache_capacity = 256);

  const ModelParams& params() const { return params_; }
  const Objective& objective() const { return objective_; }
  const MeshOptions& mesh_options() const { return mesh_; }

  Evaluator with_params(ModelParams params) const;
  Evaluator with_objective(Objective objective) const;

  /// Throws InadmissiblePlacement / NumericError / InvalidInput.
  Configuration evaluate(const Profile& p, const DislocationMeasure& sigma) const;
  /// nullopt when the pair is inadmissible or cannot be meshed.
  std::optional<Configuration> try_evaluate(const Profile& p,
                                            const DislocationMeasure& sigma) const;
  EnergyBreakdown score(const Profile& p, const DislocationMeasure& sigma,
                        const ElasticState& state) const;

  std::size_t solves() const;
  std::size_t cache_hits() const;

 private:
  struct Cache;
  ModelParams params_;
  Objective objective_;
  MeshOptions mesh_;
  std::shared_ptr<Cache> cache_;
};

/// Discrete search space used instead of continuous moves (tiny instances).
struct LatticeSchedule {
  std::vector<double> levels;  // admissible node heights
  std::vector<Point> centers;  // admissible dislocation centers
};

struct ScheduleParams {
  double profile_tau = 0.05;               // initial pseudo-time step
  double max_normal_displacement = 0.05;   // per profile step
  double fd_step = 0.0;                    // 0 means r0 / 100
  double shrink = 0.5;
  int line_search_max = 30;
  double dislocation_max_move = 0.05;
  double nucleation_dx = 0.125;
  double nucleation_dy = 0.1;
  int max_nucleations = 20;
  double energy_tol = 1e-9;
  int max_sweeps = 50;
  int profile_steps = 5;
  int dislocation_steps = 5;
  bool move_profile = true;
  bool move_dislocations = true;
  bool nucleate = false;
  std::optional<LatticeSchedule> lattice;

  double fd(double r0) const { return fd_step > 0.0 ? fd_step : r0 / 100.0; }
  void validate(double r0) const;
};

/// Moves every center against the central-difference energy gradient;
/// backtracking guarantees non-increase. A no-op when no decrease is found.
Configuration dislocation_step(const Configuration& cfg, const Evaluator& eval,
                               const ScheduleParams& schedule);

/// Preconditioned descent on node heights along -(gamma kappa + W - Lambda),
/// with core disks as obstacles.
Configuration profile_step(const Configuration& cfg, const Evaluator& eval,
                           const ScheduleParams& schedule);

/// Candidate nucleation sites on a grid over the film.
std::vector<Point> nucleation_sites(const Configuration& cfg, const ScheduleParams& schedule);

/// Greedy best-first insertion of +-b fundamental dislocations.
Configuration nucleation_sweep(const Configuration& cfg, const Evaluator& eval,
                               const ScheduleParams& schedule);

struct TraceRow {
  int sweep = 0;
  std::string kind;
  EnergyBreakdown energy;
  std::size_t dislocations = 0;
};

struct MinimizeResult {
  Configuration final;
  std::vector<TraceRow> trace;
  bool converged = false;
  bool max_sweeps_exceeded = false;
  std::optional<ELResidual> residual;
};

MinimizeResult alternate_minimize(const Configuration& start, const Evaluator& eval,
                                  const ScheduleParams& schedule);

/// Raises node heights so that every core disk of sigma fits under the
/// graph. Returns the indices of raised nodes.
std::vector<std::size_t> clamp_to_cores(std::vector<double>& heights, const Profile& shape,
                                        const DislocationMeasure& sigma);

}  // namespace epifilm
