#pragma once

#include <optional>
#include <vector>

#include "epifilm/dislocations.hpp"
#include "epifilm/elasticity.hpp"
#include "epifilm/geometry.hpp"

namespace epifilm {

struct ModelParams {
  LameTensor lame{1.0, 1.0};
  double gamma = 1.0;
  double e0 = 1.0;
  double r0 = 0.1;
  double period = 1.0;
  double volume = 1.0;
  double c_o = 1.0;
  /// Volume-penalty weight; unset means 1.1 e0^2 W0.
  std::optional<double> Lambda;
  double beta = 0.0;

  double W0() const { return lame.flat_energy_density(); }
  double volume_weight() const { return Lambda.value_or(1.1 * e0 * e0 * W0()); }
  /// Mesh floor for elastic solves.
  double h_min() const { return r0 / 4.0; }
  /// Throws InvalidInput naming the first violated constraint. e0 = 0 is
  /// accepted only as the degenerate limit used by scans and oracles.
  void validate(bool allow_zero_mismatch = false) const;
};

enum class PenaltyKind { none, two_sided, one_sided };

struct EnergyBreakdown {
  double elastic = 0.0;
  double surface = 0.0;
  double cuts = 0.0;
  double nucleation = 0.0;
  double volume_penalty = 0.0;
  double anchoring_penalty = 0.0;
  double total = 0.0;

  ElasticEnergy elastic_parts;
  double volume = 0.0;
  /// Set when the profile has cuts the elastic field was not solved on.
  bool field_assumed = false;

  double penalty() const { return volume_penalty + anchoring_penalty; }
};

/// F = int W(H_sym) + gamma H1(Gamma) + 2 gamma H1(Sigma).
EnergyBreakdown total_energy(const Profile& p, const DislocationMeasure& sigma,
                             const ElasticState& state, const ModelParams& params);

/// F plus Lambda |V - d| (two-sided) or Lambda (d - V) (one-sided; rejects
/// V > d) plus beta int |h - anchor|^2 when an anchor is given.
EnergyBreakdown penalized_energy(const Profile& p, const DislocationMeasure& sigma,
                                 const ElasticState& state, const ModelParams& params,
                                 const Profile* anchor,
                                 PenaltyKind kind = PenaltyKind::two_sided);

/// F + N(sigma).
EnergyBreakdown nucleation_total(const Profile& p, const DislocationMeasure& sigma,
                                 const ElasticState& state, const ModelParams& params);

/// int_0^l |h - g|^2 dx, exact for piecewise-linear continuous profiles.
double anchoring_integral(const Profile& h, const Profile& g);

/// Discrete curvature at each node of a continuous profile:
/// (dL/dh_i) / dx_i with L the polygon length.
std::vector<double> discrete_curvature(const Profile& p);

struct ELResidual {
  std::vector<double> x;
  std::vector<double> residual;  // gamma kappa + W - multiplier
  std::vector<bool> excluded;    // under the projection of a core disk
  double multiplier = 0.0;
  double sup = 0.0;
  double l2 = 0.0;
};

/// gamma kappa + W(H_sym) - Lambda on the graph, with Lambda the arc-length
/// average over nodes outside the projection of the core disks.
ELResidual euler_lagrange_residual(const Profile& p, const ElasticState& state,
                                   const ModelParams& params);

}  // namespace epifilm
