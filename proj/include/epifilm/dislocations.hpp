#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "epifilm/geometry.hpp"

namespace epifilm {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  double norm() const;
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

/// Fundamental Burgers vectors; admissible Burgers vectors are integer
/// combinations stored by their coefficients.
class BurgersLattice {
 public:
  BurgersLattice() = default;
  explicit BurgersLattice(std::vector<Vec2> fundamentals);

  static BurgersLattice unit_axes() { return BurgersLattice({{1.0, 0.0}, {0.0, 1.0}}); }

  std::span<const Vec2> fundamentals() const { return fundamentals_; }
  std::size_t size() const { return fundamentals_.size(); }
  bool empty() const { return fundamentals_.empty(); }

  Vec2 vector(std::span<const int> coeffs) const;
  /// sum_i |m_i| |b_i|^2
  double norm_sq(std::span<const int> coeffs) const;

  friend bool operator==(const BurgersLattice&, const BurgersLattice&) = default;

 private:
  std::vector<Vec2> fundamentals_;
};

struct DislocationEntry {
  Point center;
  std::vector<int> coeffs;

  friend bool operator==(const DislocationEntry&, const DislocationEntry&) = default;
};

/// Periodic dislocation measure sigma = sum_i b_i delta#_{z_i} regularized
/// with core radius r0.
class DislocationMeasure {
 public:
  DislocationMeasure(double r0, BurgersLattice lattice,
                     std::vector<DislocationEntry> entries = {});

  double r0() const { return r0_; }
  const BurgersLattice& lattice() const { return lattice_; }
  std::span<const DislocationEntry> entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  Vec2 burgers(std::size_t i) const;

  /// Entries with coincident centers (within 1e-12) summed; zero entries
  /// dropped; order of first appearance kept.
  DislocationMeasure merged() const;

  DislocationMeasure with_entries(std::vector<DislocationEntry> entries) const;
  DislocationMeasure with_center(std::size_t i, Point c) const;
  DislocationMeasure plus(Point center, std::vector<int> coeffs) const;
  DislocationMeasure scaled(int factor) const;
  DislocationMeasure shifted(double dx) const;

  /// Throws InadmissiblePlacement unless every core disk fits in `p`.
  void check_admissible(const Profile& p) const;
  bool admissible(const Profile& p) const;

  friend bool operator==(const DislocationMeasure&, const DislocationMeasure&) = default;

 private:
  double r0_;
  BurgersLattice lattice_;
  std::vector<DislocationEntry> entries_;
};

/// Standard bump c exp(-1/(1-|z|^2)) on the unit disk, rescaled to radius r0
/// with unit mass.
class Mollifier {
 public:
  explicit Mollifier(double r0);

  double radius() const { return r0_; }
  /// Normalization constant c of the unit-radius bump.
  static double normalization();

  double operator()(double dx, double dy) const;
  /// d/ds of rho_{r0}(s, t).
  double ds(double s, double t) const;
  /// int_{-inf}^{tau} rho_{r0}(s, t) dt.
  double column(double s, double tau) const;
  /// int_{-inf}^{tau} d/ds rho_{r0}(s, t) dt.
  double column_ds(double s, double tau) const;
  /// Full vertical marginal int rho_{r0}(s, t) dt.
  double marginal(double s) const { return column(s, r0_); }

 private:
  double r0_;
};

/// (sigma * rho_{r0})#(z), summing periodic images.
Vec2 regularized_measure(const DislocationMeasure& sigma, double period, Point z);

/// c_o sum_i ||b_i||^2 over merged entries.
double nucleation_energy(const DislocationMeasure& sigma, double c_o);

/// sum_i |b_i| over merged entries.
double total_variation(const DislocationMeasure& sigma);

void to_json(nlohmann::json& j, const DislocationMeasure& s);
DislocationMeasure measure_from_json(const nlohmann::json& j);

}  // namespace epifilm
