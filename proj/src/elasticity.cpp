#include "epifilm/elasticity.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>

#include "epifilm/errors.hpp"

namespace epifilm {

LameTensor::LameTensor(double mu_, double lambda_) : mu(mu_), lambda(lambda_) {
  if (!(mu > 0.0) || !(mu + lambda > 0.0) || !std::isfinite(lambda)) {
    throw InvalidInput("lame: ellipticity requires mu > 0 and mu + lambda > 0");
  }
}

Mat2 LameTensor::stress(const Mat2& strain) const {
  const Mat2 e = 0.5 * (strain + strain.transpose());
  return 2.0 * mu * e + lambda * e.trace() * Mat2::Identity();
}

double energy_density(const Mat2& strain, const LameTensor& C) {
  const Mat2 e = 0.5 * (strain + strain.transpose());
  const double tr = e.trace();
  return C.mu * e.squaredNorm() + 0.5 * C.lambda * tr * tr;
}

namespace {

double contract(const Mat2& a, const Mat2& b) { return (a.array() * b.array()).sum(); }

Mat2 sym(const Mat2& m) { return 0.5 * (m + m.transpose()); }

double periodic_gap(double a, double b, double period) {
  double d = std::abs(a - b);
  return std::min(d, period - d);
}

}  // namespace

Mesh Mesh::build(const Profile& p, const MeshOptions& options) {
  if (!p.continuous()) {
    throw InvalidInput(
        "mesh: profiles with jumps or cuts are outside the elastic solver's scope");
  }
  if (options.refine < 2) throw InvalidInput("mesh: refinement must be at least 2");
  const double hmin = p.min_height();
  if (!(hmin > 0.0) || hmin < options.h_min) {
    throw NumericError("mesh: profile height " + std::to_string(hmin) +
                       " below the mesh floor " + std::to_string(options.h_min));
  }
  Mesh m;
  m.period_ = p.period();
  const double ell = m.period_;
  const double spacing = ell / options.refine;

  std::vector<double> xs;
  for (const auto& k : p.knots()) xs.push_back(k.x);
  for (int i = 0; i < options.refine; ++i) {
    const double x = spacing * i;
    const bool far = std::all_of(xs.begin(), xs.end(), [&](double e) {
      return periodic_gap(e, x, ell) > 0.3 * spacing;
    });
    if (far) xs.push_back(x);
  }
  std::sort(xs.begin(), xs.end());
  if (xs.size() % 2 == 1) {
    // Even column count keeps the alternating diagonals consistent across
    // the periodic seam.
    std::size_t widest = xs.size() - 1;
    double gap = xs.front() + ell - xs.back();
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
      if (xs[i + 1] - xs[i] > gap) {
        gap = xs[i + 1] - xs[i];
        widest = i;
      }
    }
    double mid = xs[widest] + 0.5 * gap;
    if (mid >= ell) mid -= ell;
    xs.push_back(mid);
    std::sort(xs.begin(), xs.end());
  }
  m.column_x_ = xs;
  m.columns_ = static_cast<int>(xs.size());
  for (double x : xs) m.column_height_.push_back(p(x));
  m.rows_ = std::max(2, static_cast<int>(std::ceil(options.refine * p.max_height() / ell - 1e-9)));

  const int C = m.columns_;
  const int R = m.rows_;
  m.nodes_.resize(static_cast<std::size_t>(C * (R + 1)));
  for (int c = 0; c < C; ++c) {
    for (int j = 0; j <= R; ++j) {
      m.nodes_[static_cast<std::size_t>(m.node(c, j))] =
          Vec2d(xs[static_cast<std::size_t>(c)],
                m.column_height_[static_cast<std::size_t>(c)] * j / R);
    }
  }
  m.top_triangles_.resize(static_cast<std::size_t>(C));
  for (int c = 0; c < C; ++c) {
    const int cn = (c + 1) % C;
    const double s = (c + 1 == C) ? ell : 0.0;
    for (int j = 0; j < R; ++j) {
      const int bl = m.node(c, j), br = m.node(cn, j);
      const int tl = m.node(c, j + 1), tr = m.node(cn, j + 1);
      std::array<Triangle, 2> pair;
      if (c % 2 == 0) {
        pair = {Triangle{{bl, br, tr}, {0.0, s, s}}, Triangle{{bl, tr, tl}, {0.0, s, 0.0}}};
      } else {
        pair = {Triangle{{bl, br, tl}, {0.0, s, 0.0}}, Triangle{{br, tr, tl}, {s, s, 0.0}}};
      }
      for (const auto& t : pair) {
        const std::size_t id = m.triangles_.size();
        m.triangles_.push_back(t);
        if (m.area(id) <= 0.0) throw NumericError("mesh: degenerate triangle");
        if (j + 1 == R) {
          for (int k = 0; k < 3; ++k) {
            if (m.node_row(t.v[static_cast<std::size_t>(k)]) == R) {
              m.top_triangles_[static_cast<std::size_t>(
                                   m.node_column(t.v[static_cast<std::size_t>(k)]))]
                  .push_back(id);
            }
          }
        }
      }
    }
  }

  const auto nodes = p.nodes();
  const std::size_t n = nodes.size();
  m.column_weights_.resize(static_cast<std::size_t>(C));
  for (int c = 0; c < C; ++c) {
    const double x = xs[static_cast<std::size_t>(c)];
    auto it = std::upper_bound(nodes.begin(), nodes.end(), x,
                               [](double v, const ProfileNode& nd) { return v < nd.x; });
    const std::ptrdiff_t k = (it - nodes.begin()) - 1;
    auto& w = m.column_weights_[static_cast<std::size_t>(c)];
    if (k >= 0 && nodes[static_cast<std::size_t>(k)].x == x) {
      w.emplace_back(static_cast<std::size_t>(k), 1.0);
      continue;
    }
    std::size_t i0, i1;
    double x0, x1;
    if (k < 0) {
      i0 = n - 1;
      i1 = 0;
      x0 = nodes[i0].x - ell;
      x1 = nodes[i1].x;
    } else {
      i0 = static_cast<std::size_t>(k);
      i1 = (i0 + 1) % n;
      x0 = nodes[i0].x;
      x1 = (i0 + 1 < n) ? nodes[i1].x : nodes[i1].x + ell;
    }
    const double t = (x - x0) / (x1 - x0);
    if (i0 == i1) {
      w.emplace_back(i0, 1.0);
    } else {
      w.emplace_back(i0, 1.0 - t);
      w.emplace_back(i1, t);
    }
  }
  return m;
}

Vec2d Mesh::vertex(std::size_t t, int k) const {
  const auto& tri = triangles_[t];
  const auto ku = static_cast<std::size_t>(k);
  Vec2d p = nodes_[static_cast<std::size_t>(tri.v[ku])];
  p.x() += tri.shift[ku];
  return p;
}

double Mesh::area(std::size_t t) const {
  const Vec2d a = vertex(t, 0), b = vertex(t, 1), c = vertex(t, 2);
  return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
}

std::array<Vec2d, 3> Mesh::basis_gradients(std::size_t t) const {
  const Vec2d a = vertex(t, 0), b = vertex(t, 1), c = vertex(t, 2);
  const double twice = 2.0 * area(t);
  return {Vec2d(b.y() - c.y(), c.x() - b.x()) / twice,
          Vec2d(c.y() - a.y(), a.x() - c.x()) / twice,
          Vec2d(a.y() - b.y(), b.x() - a.x()) / twice};
}

std::array<Vec2d, 3> Mesh::quadrature_points(std::size_t t) const {
  const Vec2d a = vertex(t, 0), b = vertex(t, 1), c = vertex(t, 2);
  std::array<Vec2d, 3> q;
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& l = quadrature_barycentric[i];
    q[i] = l[0] * a + l[1] * b + l[2] * c;
  }
  return q;
}

double Mesh::max_edge() const {
  double e = 0.0;
  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    for (int k = 0; k < 3; ++k) e = std::max(e, (vertex(t, k) - vertex(t, (k + 1) % 3)).norm());
  }
  return e;
}

namespace {

Eigen::Matrix3d voigt(const LameTensor& C) {
  Eigen::Matrix3d d;
  d << 2.0 * C.mu + C.lambda, C.lambda, 0.0, C.lambda, 2.0 * C.mu + C.lambda, 0.0, 0.0, 0.0,
      C.mu;
  return d;
}

Eigen::Matrix<double, 3, 6> strain_operator(const std::array<Vec2d, 3>& g) {
  Eigen::Matrix<double, 3, 6> B = Eigen::Matrix<double, 3, 6>::Zero();
  for (int a = 0; a < 3; ++a) {
    const auto& ga = g[static_cast<std::size_t>(a)];
    B(0, 2 * a) = ga.x();
    B(1, 2 * a + 1) = ga.y();
    B(2, 2 * a) = ga.y();
    B(2, 2 * a + 1) = ga.x();
  }
  return B;
}

}  // namespace

Discretization::Discretization(Profile profile, LameTensor lame, MeshOptions options)
    : profile_(std::move(profile)),
      lame_(lame),
      options_(options),
      mesh_(Mesh::build(profile_, options_)) {
  const Eigen::Index n =
      static_cast<Eigen::Index>(mesh_.columns()) * mesh_.rows() * 2;
  const Eigen::Matrix3d D = voigt(lame_);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(mesh_.triangles().size() * 36);
  for (std::size_t t = 0; t < mesh_.triangles().size(); ++t) {
    const auto B = strain_operator(mesh_.basis_gradients(t));
    const Eigen::Matrix<double, 6, 6> ke = mesh_.area(t) * B.transpose() * D * B;
    const auto& tri = mesh_.triangles()[t];
    for (int a = 0; a < 6; ++a) {
      const Eigen::Index ra = dof(tri.v[static_cast<std::size_t>(a / 2)], a % 2);
      if (ra < 0) continue;
      for (int b = 0; b < 6; ++b) {
        const Eigen::Index rb = dof(tri.v[static_cast<std::size_t>(b / 2)], b % 2);
        if (rb < 0) continue;
        trip.emplace_back(ra, rb, ke(a, b));
      }
    }
  }
  matrix_.resize(n, n);
  matrix_.setFromTriplets(trip.begin(), trip.end());
  factor_.compute(matrix_);
  if (factor_.info() != Eigen::Success) {
    throw NumericError("elasticity: factorization of the Lame operator failed");
  }
}

Eigen::Index Discretization::dof(int node, int component) const {
  const int j = mesh_.node_row(node);
  if (j == 0) return -1;
  const int c = mesh_.node_column(node);
  return static_cast<Eigen::Index>(c * mesh_.rows() + (j - 1)) * 2 + component;
}

Vec2d Discretization::nodal(const Eigen::VectorXd& x, int node) const {
  const Eigen::Index i = dof(node, 0);
  if (i < 0) return Vec2d::Zero();
  return Vec2d(x[i], x[i + 1]);
}

std::vector<Mat2> Discretization::gradients(const Eigen::VectorXd& x) const {
  std::vector<Mat2> out(mesh_.triangles().size());
  for (std::size_t t = 0; t < out.size(); ++t) {
    const auto g = mesh_.basis_gradients(t);
    Mat2 d = Mat2::Zero();
    for (std::size_t a = 0; a < 3; ++a) {
      d += nodal(x, mesh_.triangles()[t].v[a]) * g[a].transpose();
    }
    out[t] = d;
  }
  return out;
}

Eigen::VectorXd Discretization::solve(const Eigen::VectorXd& rhs) const {
  const double bn = rhs.norm();
  if (bn == 0.0) return Eigen::VectorXd::Zero(rhs.size());
  Eigen::VectorXd x = factor_.solve(rhs);
  const double res = (matrix_ * x - rhs).norm() / bn;
  if (factor_.info() != Eigen::Success || !(res <= 1e-10)) {
    throw NumericError("elasticity: linear solve did not converge (relative residual " +
                       std::to_string(res) + ")");
  }
  return x;
}

MismatchField solve_mismatch(const Discretization& disc) {
  const Mesh& mesh = disc.mesh();
  const Eigen::Vector3d s0 = voigt(disc.lame()) * Eigen::Vector3d(1.0, 0.0, 0.0);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(disc.unknowns());
  for (std::size_t t = 0; t < mesh.triangles().size(); ++t) {
    const auto B = strain_operator(mesh.basis_gradients(t));
    const Eigen::Matrix<double, 6, 1> fe = -mesh.area(t) * B.transpose() * s0;
    const auto& tri = mesh.triangles()[t];
    for (int a = 0; a < 6; ++a) {
      const Eigen::Index r = disc.dof(tri.v[static_cast<std::size_t>(a / 2)], a % 2);
      if (r >= 0) rhs[r] += fe[a];
    }
  }
  MismatchField out;
  out.w = disc.solve(rhs);
  out.gradient = disc.gradients(out.w);
  Mat2 base = Mat2::Zero();
  base(0, 0) = 1.0;
  for (auto& g : out.gradient) g += base;
  return out;
}

SingularField singular_field(const DislocationMeasure& sigma, const Mesh& mesh) {
  const std::size_t nt = mesh.triangles().size();
  SingularField K;
  K.at_quadrature.assign(nt, {Vec2d::Zero(), Vec2d::Zero(), Vec2d::Zero()});
  K.dy_at_quadrature.assign(nt, {Vec2d::Zero(), Vec2d::Zero(), Vec2d::Zero()});
  K.at_node.assign(mesh.node_count(), Vec2d::Zero());
  const double ell = mesh.period();
  const double r0 = sigma.r0();
  const Mollifier rho(r0);
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    const Point z = sigma.entries()[i].center;
    const Vec2 bv = sigma.burgers(i);
    if (bv.x == 0.0 && bv.y == 0.0) continue;
    K.zero = false;
    const Vec2d b(bv.x, bv.y);
    std::unordered_map<double, double> marginal;
    const auto offset = [&](double x) {
      double s = std::fmod(x - z.x, ell);
      if (s > 0.5 * ell) s -= ell;
      if (s <= -0.5 * ell) s += ell;
      return s;
    };
    const auto column = [&](double s, double tau) {
      if (std::abs(s) >= r0) return 0.0;
      if (tau * tau + s * s >= r0 * r0 && tau > 0.0) {
        auto it = marginal.find(s);
        if (it != marginal.end()) return it->second;
        const double m = rho.marginal(s);
        marginal.emplace(s, m);
        return m;
      }
      return rho.column(s, tau);
    };
    for (std::size_t t = 0; t < nt; ++t) {
      const auto q = mesh.quadrature_points(t);
      for (std::size_t k = 0; k < 3; ++k) {
        const double s = offset(q[k].x());
        if (std::abs(s) >= r0) continue;
        const double tau = q[k].y() - z.y;
        K.at_quadrature[t][k] -= b * column(s, tau);
        K.dy_at_quadrature[t][k] -= b * rho(s, tau);
      }
    }
    for (std::size_t n = 0; n < mesh.node_count(); ++n) {
      const Vec2d& p = mesh.node_position(static_cast<int>(n));
      const double s = offset(p.x());
      if (std::abs(s) >= r0) continue;
      K.at_node[n] -= b * column(s, p.y() - z.y);
    }
  }
  return K;
}

CorrectorField solve_corrector(const Discretization& disc, const SingularField& K) {
  const Mesh& mesh = disc.mesh();
  CorrectorField out;
  out.v = Eigen::VectorXd::Zero(disc.unknowns());
  if (!K.zero) {
    const Eigen::Matrix3d D = voigt(disc.lame());
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(disc.unknowns());
    for (std::size_t t = 0; t < mesh.triangles().size(); ++t) {
      const auto B = strain_operator(mesh.basis_gradients(t));
      Eigen::Vector3d eps = Eigen::Vector3d::Zero();
      for (const auto& k : K.at_quadrature[t]) eps += Eigen::Vector3d(k.x(), 0.0, k.y());
      const Eigen::Matrix<double, 6, 1> fe =
          -(mesh.area(t) / 3.0) * B.transpose() * (D * eps);
      const auto& tri = mesh.triangles()[t];
      for (int a = 0; a < 6; ++a) {
        const Eigen::Index r = disc.dof(tri.v[static_cast<std::size_t>(a / 2)], a % 2);
        if (r >= 0) rhs[r] += fe[a];
      }
    }
    out.v = disc.solve(rhs);
  }
  out.gradient = disc.gradients(out.v);
  return out;
}

ElasticState assemble_total(std::shared_ptr<const Discretization> disc,
                            DislocationMeasure sigma, MismatchField mismatch,
                            SingularField K, CorrectorField corrector, double e0) {
  const Mesh& mesh = disc->mesh();
  const LameTensor& C = disc->lame();
  UnitEnergies unit;
  for (std::size_t t = 0; t < mesh.triangles().size(); ++t) {
    const double a = mesh.area(t);
    const Mat2 eu = sym(mismatch.gradient[t]);
    const Mat2 su = C.stress(eu);
    unit.mismatch += a * energy_density(eu, C);
    const Mat2 ev = sym(corrector.gradient[t]);
    for (std::size_t q = 0; q < 3; ++q) {
      const Mat2 s = ev + sym(SingularField::matrix(K.at_quadrature[t][q]));
      unit.cross += a / 3.0 * contract(su, s);
      unit.self += a / 3.0 * energy_density(s, C);
    }
  }
  auto fields = std::make_shared<ElasticState::Fields>(ElasticState::Fields{
      std::move(mismatch), std::move(K), std::move(corrector), unit});
  return ElasticState(std::move(disc), std::move(sigma), std::move(fields), e0);
}

ElasticState solve_elastic(std::shared_ptr<const Discretization> disc,
                           const DislocationMeasure& sigma, double e0) {
  sigma.check_admissible(disc->profile());
  auto u = solve_mismatch(*disc);
  auto K = singular_field(sigma, disc->mesh());
  auto v = solve_corrector(*disc, K);
  return assemble_total(std::move(disc), sigma, std::move(u), std::move(K), std::move(v), e0);
}

ElasticState solve_elastic(const Profile& p, const DislocationMeasure& sigma,
                           const LameTensor& C, double e0, const MeshOptions& options) {
  return solve_elastic(std::make_shared<const Discretization>(p, C, options), sigma, e0);
}

ElasticState::ElasticState(std::shared_ptr<const Discretization> disc,
                           DislocationMeasure sigma, std::shared_ptr<const Fields> fields,
                           double e0)
    : disc_(std::move(disc)), sigma_(std::move(sigma)), fields_(std::move(fields)), e0_(e0) {}

Vec2d ElasticState::mismatch_displacement(int node) const {
  const Vec2d& p = mesh().node_position(node);
  return Vec2d(p.x(), 0.0) + disc_->nodal(fields_->mismatch.w, node);
}

Vec2d ElasticState::corrector_displacement(int node) const {
  return disc_->nodal(fields_->corrector.v, node);
}

Mat2 ElasticState::total_strain(std::size_t t, int q) const {
  return e0_ * fields_->mismatch.gradient[t] + fields_->corrector.gradient[t] +
         SingularField::matrix(fields_->singular.at_quadrature[t][static_cast<std::size_t>(q)]);
}

Mat2 ElasticState::total_strain_at_node(std::size_t t, int node) const {
  return e0_ * fields_->mismatch.gradient[t] + fields_->corrector.gradient[t] +
         SingularField::matrix(fields_->singular.at_node[static_cast<std::size_t>(node)]);
}

ElasticEnergy ElasticState::energy() const {
  const auto& u = fields_->unit;
  ElasticEnergy e;
  e.mismatch = e0_ * e0_ * u.mismatch;
  e.cross = e0_ * u.cross;
  e.self = u.self;
  e.total = e.mismatch + e.cross + e.self;
  return e;
}

std::vector<double> ElasticState::column_height_gradient() const {
  const Mesh& m = mesh();
  const LameTensor& C = disc_->lame();
  const auto& K = fields_->singular;
  std::vector<double> grad(static_cast<std::size_t>(m.columns()), 0.0);
  for (std::size_t t = 0; t < m.triangles().size(); ++t) {
    const auto& tri = m.triangles()[t];
    const double a = m.area(t);
    const auto g = m.basis_gradients(t);
    const Mat2 G = e0_ * fields_->mismatch.gradient[t] + fields_->corrector.gradient[t];
    std::array<Mat2, 3> S;
    std::array<Mat2, 3> stress;
    std::array<double, 3> W;
    for (std::size_t q = 0; q < 3; ++q) {
      S[q] = sym(G + SingularField::matrix(K.at_quadrature[t][q]));
      stress[q] = C.stress(S[q]);
      W[q] = energy_density(S[q], C);
    }
    for (std::size_t a0 = 0; a0 < 3; ++a0) {
      const int col = m.node_column(tri.v[a0]);
      bool seen = false;
      for (std::size_t p = 0; p < a0; ++p) seen = seen || m.node_column(tri.v[p]) == col;
      if (seen) continue;
      std::array<double, 3> theta{};
      Mat2 Dtheta = Mat2::Zero();
      for (std::size_t b = 0; b < 3; ++b) {
        if (m.node_column(tri.v[b]) != col) continue;
        theta[b] = static_cast<double>(m.node_row(tri.v[b])) / m.rows();
        Dtheta.row(1) += theta[b] * g[b].transpose();
      }
      if (theta[0] == 0.0 && theta[1] == 0.0 && theta[2] == 0.0) continue;
      const double div = Dtheta.trace();
      const Mat2 dG = -G * Dtheta;
      double d = 0.0;
      for (std::size_t q = 0; q < 3; ++q) {
        const auto& l = Mesh::quadrature_barycentric[q];
        const double dqy = l[0] * theta[0] + l[1] * theta[1] + l[2] * theta[2];
        const Mat2 dS = sym(dG + SingularField::matrix(K.dy_at_quadrature[t][q]) * dqy);
        d += a / 3.0 * (div * W[q] + contract(stress[q], dS));
      }
      grad[static_cast<std::size_t>(col)] += d;
    }
  }
  return grad;
}

std::vector<double> ElasticState::profile_height_gradient() const {
  const auto col = column_height_gradient();
  std::vector<double> out(profile().nodes().size(), 0.0);
  const auto weights = mesh().column_weights();
  for (std::size_t c = 0; c < col.size(); ++c) {
    for (const auto& [k, w] : weights[c]) out[k] += w * col[c];
  }
  return out;
}

double curl_residual(const ElasticState& state) {
  // Degree-4 six-point rule.
  static constexpr std::array<std::array<double, 4>, 6> rule{{
      {0.816847572980459, 0.091576213509771, 0.091576213509771, 0.109951743655322},
      {0.091576213509771, 0.816847572980459, 0.091576213509771, 0.109951743655322},
      {0.091576213509771, 0.091576213509771, 0.816847572980459, 0.109951743655322},
      {0.108103018168070, 0.445948490915965, 0.445948490915965, 0.223381589678011},
      {0.445948490915965, 0.108103018168070, 0.445948490915965, 0.223381589678011},
      {0.445948490915965, 0.445948490915965, 0.108103018168070, 0.223381589678011},
  }};
  const Mesh& m = state.mesh();
  const auto& K = state.fields().singular;
  const auto& sigma = state.dislocations();
  double sum = 0.0;
  for (std::size_t t = 0; t < m.triangles().size(); ++t) {
    const auto& tri = m.triangles()[t];
    const auto g = m.basis_gradients(t);
    Vec2d curl = Vec2d::Zero();
    for (std::size_t a = 0; a < 3; ++a) {
      curl -= K.at_node[static_cast<std::size_t>(tri.v[a])] * g[a].y();
    }
    const Vec2d p0 = m.vertex(t, 0), p1 = m.vertex(t, 1), p2 = m.vertex(t, 2);
    const double area = m.area(t);
    for (const auto& r : rule) {
      const Vec2d p = r[0] * p0 + r[1] * p1 + r[2] * p2;
      const Vec2 ref = regularized_measure(sigma, m.period(), {p.x(), p.y()});
      sum += r[3] * area * (curl - Vec2d(ref.x, ref.y)).squaredNorm();
    }
  }
  return std::sqrt(sum);
}

}  // namespace epifilm
