#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "epifilm/dislocations.hpp"
#include "epifilm/geometry.hpp"

namespace epifilm {

using Mat2 = Eigen::Matrix2d;
using Vec2d = Eigen::Vector2d;

/// Isotropic plane-strain stiffness; requires mu > 0 and mu + lambda > 0.
struct LameTensor {
  double mu = 1.0;
  double lambda = 1.0;

  LameTensor() = default;
  LameTensor(double mu, double lambda);

  Mat2 stress(const Mat2& strain) const;
  /// Energy density of the flat-film equilibrium v0 = (x, -lambda y/(2mu+lambda)).
  double flat_energy_density() const { return 2.0 * mu * (mu + lambda) / (2.0 * mu + lambda); }
};

/// W(E) = mu |E|^2 + lambda/2 (tr E)^2
double energy_density(const Mat2& strain, const LameTensor& C);

struct MeshOptions {
  int refine = 64;
  double h_min = 0.0;
};

/// Boundary-fitted triangulation of the film over one period: columns at the
/// profile knots plus a uniform grid, rows at y = h(x_c) j / rows, opposite
/// periodic edges identified. Diagonals alternate by column parity so the
/// mesh of a uniform grid is mirror symmetric about every column line.
class Mesh {
 public:
  struct Triangle {
    std::array<int, 3> v;
    std::array<double, 3> shift;  // added to the x coordinate of each vertex
  };

  static Mesh build(const Profile& p, const MeshOptions& options);

  double period() const { return period_; }
  int columns() const { return columns_; }
  int rows() const { return rows_; }
  std::span<const double> column_x() const { return column_x_; }
  std::span<const double> column_height() const { return column_height_; }

  int node(int column, int row) const { return column * (rows_ + 1) + row; }
  int node_column(int n) const { return n / (rows_ + 1); }
  int node_row(int n) const { return n % (rows_ + 1); }
  std::size_t node_count() const { return nodes_.size(); }
  const Vec2d& node_position(int n) const { return nodes_[static_cast<std::size_t>(n)]; }

  std::span<const Triangle> triangles() const { return triangles_; }
  Vec2d vertex(std::size_t t, int k) const;
  double area(std::size_t t) const;
  /// Gradients of the three barycentric basis functions on triangle t.
  std::array<Vec2d, 3> basis_gradients(std::size_t t) const;
  /// Quadrature points of triangle t (interior 3-point rule, weights area/3).
  std::array<Vec2d, 3> quadrature_points(std::size_t t) const;
  static constexpr std::array<std::array<double, 3>, 3> quadrature_barycentric{
      {{2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0},
       {1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0},
       {1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0}}};

  /// Triangles touching the top node of each column.
  std::span<const std::vector<std::size_t>> top_triangles() const { return top_triangles_; }
  /// Column height as a linear combination of profile node heights.
  std::span<const std::vector<std::pair<std::size_t, double>>> column_weights() const {
    return column_weights_;
  }
  double max_edge() const;

 private:
  double period_ = 1.0;
  int columns_ = 0;
  int rows_ = 0;
  std::vector<double> column_x_;
  std::vector<double> column_height_;
  std::vector<Vec2d> nodes_;
  std::vector<Triangle> triangles_;
  std::vector<std::vector<std::size_t>> top_triangles_;
  std::vector<std::vector<std::pair<std::size_t, double>>> column_weights_;
};

/// Mesh plus the factorized Lame operator for one profile. Substrate nodes
/// are clamped; the remaining nodes carry two unknowns each.
class Discretization {
 public:
  Discretization(Profile profile, LameTensor lame, MeshOptions options);

  const Profile& profile() const { return profile_; }
  const LameTensor& lame() const { return lame_; }
  const Mesh& mesh() const { return mesh_; }
  const MeshOptions& options() const { return options_; }
  Eigen::Index unknowns() const { return matrix_.rows(); }

  /// Unknown index for (node, component), or -1 on the substrate.
  Eigen::Index dof(int node, int component) const;
  /// Nodal vector of a solution (zero on the substrate).
  Vec2d nodal(const Eigen::VectorXd& x, int node) const;
  /// Per-triangle gradient of a nodal field described by unknowns x.
  std::vector<Mat2> gradients(const Eigen::VectorXd& x) const;

  const Eigen::SparseMatrix<double>& matrix() const { return matrix_; }
  /// Solves the assembled system; throws NumericError if the relative
  /// residual exceeds 1e-10.
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;

 private:
  Profile profile_;
  LameTensor lame_;
  MeshOptions options_;
  Mesh mesh_;
  Eigen::SparseMatrix<double> matrix_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> factor_;
};

/// u_h = (x, 0) + w with w periodic and zero on the substrate.
struct MismatchField {
  Eigen::VectorXd w;
  std::vector<Mat2> gradient;  // Du_h per triangle
};

/// The explicit curl-carrying field K = [[k1, 0], [k2, 0]] with
/// k_l(x, y) = -sum_i (b_i . e_l) int_0^y rho#(x - x_i, t - y_i) dt.
struct SingularField {
  std::vector<std::array<Vec2d, 3>> at_quadrature;     // (k1, k2)
  std::vector<std::array<Vec2d, 3>> dy_at_quadrature;  // d/dy (k1, k2)
  std::vector<Vec2d> at_node;
  bool zero = true;

  static Mat2 matrix(const Vec2d& k) {
    Mat2 m;
    m << k.x(), 0.0, k.y(), 0.0;
    return m;
  }
};

struct CorrectorField {
  Eigen::VectorXd v;
  std::vector<Mat2> gradient;  // Dv per triangle
};

/// Energies of the decomposition, for unit mismatch e0 = 1.
struct UnitEnergies {
  double mismatch = 0.0;  // int W(E(u_h))
  double cross = 0.0;     // int C E(u_h) : (Dv + K)_sym
  double self = 0.0;      // int W((Dv + K)_sym)
};

struct ElasticEnergy {
  double mismatch = 0.0;
  double cross = 0.0;
  double self = 0.0;
  double total = 0.0;
};

/// Solved fields on one (profile, sigma) pair; immutable.
class ElasticState {
 public:
  struct Fields {
    MismatchField mismatch;
    SingularField singular;
    CorrectorField corrector;
    UnitEnergies unit;
  };

  ElasticState(std::shared_ptr<const Discretization> disc, DislocationMeasure sigma,
               std::shared_ptr<const Fields> fields, double e0);

  const Discretization& discretization() const { return *disc_; }
  std::shared_ptr<const Discretization> discretization_ptr() const { return disc_; }
  const Mesh& mesh() const { return disc_->mesh(); }
  const Profile& profile() const { return disc_->profile(); }
  const DislocationMeasure& dislocations() const { return sigma_; }
  const Fields& fields() const { return *fields_; }
  std::shared_ptr<const Fields> fields_ptr() const { return fields_; }
  double e0() const { return e0_; }

  /// Same fields with a different mismatch strain.
  ElasticState with_e0(double e0) const { return ElasticState(disc_, sigma_, fields_, e0); }

  /// u_h at a node (not multiplied by e0).
  Vec2d mismatch_displacement(int node) const;
  Vec2d corrector_displacement(int node) const;
  /// H = e0 Du_h + Dv + K at quadrature point q of triangle t.
  Mat2 total_strain(std::size_t t, int q) const;
  /// H with K evaluated at mesh node `node` of triangle t.
  Mat2 total_strain_at_node(std::size_t t, int node) const;

  ElasticEnergy energy() const;
  /// Derivative of the total elastic energy with respect to each column
  /// height, moving column nodes proportionally to their row.
  std::vector<double> column_height_gradient() const;
  /// Same derivative with respect to profile node heights.
  std::vector<double> profile_height_gradient() const;

 private:
  std::shared_ptr<const Discretization> disc_;
  DislocationMeasure sigma_;
  std::shared_ptr<const Fields> fields_;
  double e0_;
};

MismatchField solve_mismatch(const Discretization& disc);
SingularField singular_field(const DislocationMeasure& sigma, const Mesh& mesh);
CorrectorField solve_corrector(const Discretization& disc, const SingularField& K);
ElasticState assemble_total(std::shared_ptr<const Discretization> disc,
                            DislocationMeasure sigma, MismatchField mismatch,
                            SingularField K, CorrectorField corrector, double e0);

/// Runs the three solves and the assembly.
ElasticState solve_elastic(std::shared_ptr<const Discretization> disc,
                           const DislocationMeasure& sigma, double e0);
ElasticState solve_elastic(const Profile& p, const DislocationMeasure& sigma,
                           const LameTensor& C, double e0, const MeshOptions& options);

/// L2 norm of curl_h(I_h K) - (sigma * rho)# where I_h is nodal interpolation;
/// gradient parts are curl-free on a conforming mesh.
double curl_residual(const ElasticState& state);

}  // namespace epifilm
