#include "epifilm/energy.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "epifilm/errors.hpp"

namespace epifilm {

void ModelParams::validate(bool allow_zero_mismatch) const {
  const auto fail = [](const std::string& what) { throw InvalidInput("model: " + what); };
  if (!(lame.mu > 0.0) || !(lame.mu + lame.lambda > 0.0)) {
    fail("mu > 0 and mu + lambda > 0 required");
  }
  if (!(gamma > 0.0)) fail("gamma must be positive");
  if (!std::isfinite(e0)) fail("e0 must be finite");
  if (e0 == 0.0 && !allow_zero_mismatch) fail("e0 must be nonzero");
  if (!(period > 0.0)) fail("period must be positive");
  if (!(r0 > 0.0) || !(r0 < 0.5 * period)) fail("r0 must lie in (0, period/2)");
  if (!(volume > 0.0)) fail("volume must be positive");
  if (!(c_o > 0.0)) fail("c_o must be positive");
  if (Lambda && !(*Lambda >= 0.0)) fail("Lambda must be nonnegative");
  if (!(beta >= 0.0)) fail("beta must be nonnegative");
}

namespace {

bool same_nodes(const Profile& a, const Profile& b) {
  const auto na = a.nodes();
  const auto nb = b.nodes();
  if (a.period() != b.period() || na.size() != nb.size()) return false;
  for (std::size_t i = 0; i < na.size(); ++i) {
    if (na[i].x != nb[i].x || na[i].height != nb[i].height) return false;
  }
  return true;
}

void finish(EnergyBreakdown& e) {
  e.total = e.elastic + e.surface + e.cuts + e.nucleation + e.volume_penalty +
            e.anchoring_penalty;
}

}  // namespace

EnergyBreakdown total_energy(const Profile& p, const DislocationMeasure& sigma,
                             const ElasticState& state, const ModelParams& params) {
  if (!same_nodes(p, state.profile())) {
    throw InvalidInput("energy: elastic state was solved on a different profile");
  }
  if (!(sigma.merged() == state.dislocations().merged())) {
    throw InvalidInput("energy: elastic state was solved for a different dislocation measure");
  }
  EnergyBreakdown e;
  e.field_assumed = p.jumps().size() != state.profile().jumps().size();
  e.elastic_parts = state.with_e0(params.e0).energy();
  e.elastic = e.elastic_parts.total;
  const auto m = surface_measure(p);
  e.surface = params.gamma * m.graph_length;
  e.cuts = 2.0 * params.gamma * m.cut_length;
  e.volume = volume(p);
  finish(e);
  return e;
}

double anchoring_integral(const Profile& h, const Profile& g) {
  if (!h.continuous() || !g.continuous() || h.period() != g.period()) {
    throw InvalidInput("anchoring: continuous profiles of equal period required");
  }
  const double ell = h.period();
  std::vector<double> xs;
  for (const auto& n : h.nodes()) xs.push_back(n.x);
  for (const auto& n : g.nodes()) xs.push_back(n.x);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  double s = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double x0 = xs[i];
    const double x1 = (i + 1 < xs.size()) ? xs[i + 1] : xs.front() + ell;
    // Right limits at x0 and left limits at x1 agree with the values here.
    const double a = h(x0) - g(x0);
    const double b = h(x1) - g(x1);
    s += (x1 - x0) * (a * a + a * b + b * b) / 3.0;
  }
  return s;
}

EnergyBreakdown penalized_energy(const Profile& p, const DislocationMeasure& sigma,
                                 const ElasticState& state, const ModelParams& params,
                                 const Profile* anchor, PenaltyKind kind) {
  auto e = total_energy(p, sigma, state, params);
  const double lam = params.volume_weight();
  const double d = params.volume;
  switch (kind) {
    case PenaltyKind::none:
      break;
    case PenaltyKind::two_sided:
      e.volume_penalty = lam * std::abs(e.volume - d);
      break;
    case PenaltyKind::one_sided:
      if (e.volume > d * (1.0 + 1e-12)) {
        throw InvalidInput("energy: volume " + std::to_string(e.volume) +
                           " exceeds the target " + std::to_string(d) +
                           " in the one-sided penalty");
      }
      e.volume_penalty = lam * std::max(0.0, d - e.volume);
      break;
  }
  if (anchor != nullptr && params.beta > 0.0) {
    e.anchoring_penalty = params.beta * anchoring_integral(p, *anchor);
  }
  finish(e);
  return e;
}

EnergyBreakdown nucleation_total(const Profile& p, const DislocationMeasure& sigma,
                                 const ElasticState& state, const ModelParams& params) {
  auto e = total_energy(p, sigma, state, params);
  e.nucleation = nucleation_energy(sigma, params.c_o);
  finish(e);
  return e;
}

std::vector<double> discrete_curvature(const Profile& p) {
  if (!p.continuous()) throw InvalidInput("curvature: continuous profile required");
  const auto nodes = p.nodes();
  const std::size_t n = nodes.size();
  const double ell = p.period();
  std::vector<double> kappa(n, 0.0);
  if (n < 2) return kappa;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t im = (i + n - 1) % n;
    const std::size_t ip = (i + 1) % n;
    const double xm = nodes[im].x - (i == 0 ? ell : 0.0);
    const double xp = nodes[ip].x + (i + 1 == n ? ell : 0.0);
    const double dm = nodes[i].height - nodes[im].height;
    const double dp = nodes[ip].height - nodes[i].height;
    const double sm = std::hypot(nodes[i].x - xm, dm);
    const double sp = std::hypot(xp - nodes[i].x, dp);
    kappa[i] = (dm / sm - dp / sp) / (0.5 * (xp - xm));
  }
  return kappa;
}

ELResidual euler_lagrange_residual(const Profile& p, const ElasticState& state,
                                   const ModelParams& params) {
  if (!same_nodes(p, state.profile())) {
    throw InvalidInput("euler_lagrange_residual: state was solved on a different profile");
  }
  const auto kappa = discrete_curvature(p);
  const auto nodes = p.nodes();
  const std::size_t n = nodes.size();
  const double ell = p.period();
  const Mesh& mesh = state.mesh();
  const auto cols = mesh.column_x();
  const auto& C = state.discretization().lame();
  const auto tops = mesh.top_triangles();
  const auto& sigma = state.dislocations();
  const ElasticState st = state.with_e0(params.e0);

  ELResidual out;
  out.x.resize(n);
  out.residual.resize(n);
  out.excluded.assign(n, false);
  std::vector<double> raw(n), arc(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = nodes[i].x;
    out.x[i] = x;
    const auto it = std::find(cols.begin(), cols.end(), x);
    const int c = static_cast<int>(it - cols.begin());
    const int top = mesh.node(c, mesh.rows());
    double W = 0.0;
    for (const auto t : tops[static_cast<std::size_t>(c)]) {
      W += energy_density(st.total_strain_at_node(t, top), C);
    }
    W /= static_cast<double>(tops[static_cast<std::size_t>(c)].size());
    raw[i] = params.gamma * kappa[i] + W;
    for (const auto& e : sigma.entries()) {
      double d = std::fmod(std::abs(x - e.center.x), ell);
      d = std::min(d, ell - d);
      if (d <= sigma.r0()) out.excluded[i] = true;
    }
    const std::size_t im = (i + n - 1) % n;
    const std::size_t ip = (i + 1) % n;
    const double xm = nodes[im].x - (i == 0 ? ell : 0.0);
    const double xp = nodes[ip].x + (i + 1 == n ? ell : 0.0);
    arc[i] = 0.5 * (std::hypot(x - xm, nodes[i].height - nodes[im].height) +
                    std::hypot(xp - x, nodes[ip].height - nodes[i].height));
  }
  double wsum = 0.0, acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (out.excluded[i]) continue;
    wsum += arc[i];
    acc += arc[i] * raw[i];
  }
  out.multiplier = wsum > 0.0 ? acc / wsum : 0.0;
  double l2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out.residual[i] = raw[i] - out.multiplier;
    if (out.excluded[i]) continue;
    out.sup = std::max(out.sup, std::abs(out.residual[i]));
    l2 += arc[i] * out.residual[i] * out.residual[i];
  }
  out.l2 = std::sqrt(l2);
  return out;
}

}  // namespace epifilm
