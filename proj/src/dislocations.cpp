#include "epifilm/dislocations.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "epifilm/errors.hpp"

namespace epifilm {

double Vec2::norm() const { return std::hypot(x, y); }

BurgersLattice::BurgersLattice(std::vector<Vec2> fundamentals)
    : fundamentals_(std::move(fundamentals)) {
  for (const auto& b : fundamentals_) {
    if (!std::isfinite(b.x) || !std::isfinite(b.y)) {
      throw InvalidInput("burgers lattice: non-finite fundamental vector");
    }
    if (b.norm() == 0.0) throw InvalidInput("burgers lattice: zero fundamental vector");
  }
  const std::size_t n = fundamentals_.size();
  if (n < 2 || n > 3) return;
  // Bounded search for a nontrivial integer relation.
  constexpr int bound = 10;
  std::array<int, 3> m{};
  const auto check = [&]() {
    bool nonzero = false;
    double sx = 0.0, sy = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      nonzero = nonzero || m[i] != 0;
      sx += m[i] * fundamentals_[i].x;
      sy += m[i] * fundamentals_[i].y;
      scale += std::abs(m[i]) * fundamentals_[i].norm();
    }
    if (nonzero && std::hypot(sx, sy) <= 1e-12 * scale) {
      throw InvalidInput(
          "burgers lattice: fundamentals are not integer-linearly independent");
    }
  };
  for (m[0] = -bound; m[0] <= bound; ++m[0]) {
    for (m[1] = -bound; m[1] <= bound; ++m[1]) {
      if (n == 2) {
        check();
        continue;
      }
      for (m[2] = -bound; m[2] <= bound; ++m[2]) check();
    }
  }
}

Vec2 BurgersLattice::vector(std::span<const int> coeffs) const {
  if (coeffs.size() != fundamentals_.size()) {
    throw InvalidInput("burgers lattice: coefficient count mismatch");
  }
  Vec2 b;
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    b.x += coeffs[i] * fundamentals_[i].x;
    b.y += coeffs[i] * fundamentals_[i].y;
  }
  return b;
}

double BurgersLattice::norm_sq(std::span<const int> coeffs) const {
  if (coeffs.size() != fundamentals_.size()) {
    throw InvalidInput("burgers lattice: coefficient count mismatch");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    const double n = fundamentals_[i].norm();
    s += std::abs(coeffs[i]) * n * n;
  }
  return s;
}

DislocationMeasure::DislocationMeasure(double r0, BurgersLattice lattice,
                                       std::vector<DislocationEntry> entries)
    : r0_(r0), lattice_(std::move(lattice)), entries_(std::move(entries)) {
  if (!(r0_ > 0.0) || !std::isfinite(r0_)) {
    throw InvalidInput("dislocations: core radius must be positive");
  }
  for (const auto& e : entries_) {
    if (e.coeffs.size() != lattice_.size()) {
      throw InvalidInput("dislocations: entry coefficient count does not match lattice");
    }
    if (!std::isfinite(e.center.x) || !std::isfinite(e.center.y)) {
      throw InvalidInput("dislocations: non-finite center");
    }
  }
}

Vec2 DislocationMeasure::burgers(std::size_t i) const {
  return lattice_.vector(entries_.at(i).coeffs);
}

DislocationMeasure DislocationMeasure::merged() const {
  std::vector<DislocationEntry> out;
  for (const auto& e : entries_) {
    auto it = std::find_if(out.begin(), out.end(), [&](const DislocationEntry& o) {
      return std::abs(o.center.x - e.center.x) <= 1e-12 &&
             std::abs(o.center.y - e.center.y) <= 1e-12;
    });
    if (it == out.end()) {
      out.push_back(e);
    } else {
      for (std::size_t k = 0; k < e.coeffs.size(); ++k) it->coeffs[k] += e.coeffs[k];
    }
  }
  std::erase_if(out, [](const DislocationEntry& e) {
    return std::all_of(e.coeffs.begin(), e.coeffs.end(), [](int m) { return m == 0; });
  });
  return DislocationMeasure(r0_, lattice_, std::move(out));
}

DislocationMeasure DislocationMeasure::with_entries(
    std::vector<DislocationEntry> entries) const {
  return DislocationMeasure(r0_, lattice_, std::move(entries));
}

DislocationMeasure DislocationMeasure::with_center(std::size_t i, Point c) const {
  auto entries = entries_;
  entries.at(i).center = c;
  return with_entries(std::move(entries));
}

DislocationMeasure DislocationMeasure::plus(Point center, std::vector<int> coeffs) const {
  auto entries = entries_;
  entries.push_back({center, std::move(coeffs)});
  return with_entries(std::move(entries));
}

DislocationMeasure DislocationMeasure::scaled(int factor) const {
  auto entries = entries_;
  for (auto& e : entries) {
    for (auto& m : e.coeffs) m *= factor;
  }
  return with_entries(std::move(entries));
}

DislocationMeasure DislocationMeasure::shifted(double dx) const {
  auto entries = entries_;
  for (auto& e : entries) e.center.x += dx;
  return with_entries(std::move(entries));
}

void DislocationMeasure::check_admissible(const Profile& p) const {
  for (const auto& e : entries_) {
    if (!ball_fits(p, e.center, r0_)) {
      throw InadmissiblePlacement("dislocations: core disk at (" +
                                  std::to_string(e.center.x) + ", " +
                                  std::to_string(e.center.y) +
                                  ") does not fit in the film");
    }
  }
}

bool DislocationMeasure::admissible(const Profile& p) const {
  return std::all_of(entries_.begin(), entries_.end(), [&](const DislocationEntry& e) {
    return core_admissible(p, e.center, r0_);
  });
}

namespace {

using boost::math::quadrature::gauss_kronrod;

double bump(double q) {
  // exp(-1/(1-q)) for q = |z|^2 < 1.
  return q < 1.0 ? std::exp(-1.0 / (1.0 - q)) : 0.0;
}

}  // namespace

Mollifier::Mollifier(double r0) : r0_(r0) {
  if (!(r0 > 0.0)) throw InvalidInput("mollifier: radius must be positive");
}

double Mollifier::normalization() {
  static const double c = [] {
    const double radial = gauss_kronrod<double, 31>::integrate(
        [](double r) { return r * bump(r * r); }, 0.0, 1.0, 20, 1e-14);
    return 1.0 / (2.0 * std::numbers::pi * radial);
  }();
  return c;
}

double Mollifier::operator()(double dx, double dy) const {
  const double q = (dx * dx + dy * dy) / (r0_ * r0_);
  if (q >= 1.0) return 0.0;
  return normalization() / (r0_ * r0_) * bump(q);
}

double Mollifier::ds(double s, double t) const {
  const double r2 = r0_ * r0_;
  const double q = (s * s + t * t) / r2;
  if (q >= 1.0) return 0.0;
  const double w = 1.0 - q;
  return -normalization() / r2 * bump(q) * 2.0 * s / (r2 * w * w);
}

double Mollifier::column(double s, double tau) const {
  if (std::abs(s) >= r0_) return 0.0;
  const double a = std::sqrt(r0_ * r0_ - s * s);
  if (tau <= -a) return 0.0;
  const double upper = std::min(tau, a);
  // Integrate in u = t / a so the integrand is resolved uniformly in s.
  const double k = normalization() / (r0_ * r0_) * a;
  const double sr = s * s / (r0_ * r0_);
  const double ar = a * a / (r0_ * r0_);
  const auto f = [&](double u) { return bump(sr + ar * u * u); };
  return k * gauss_kronrod<double, 31>::integrate(f, -1.0, upper / a, 15, 1e-12);
}

double Mollifier::column_ds(double s, double tau) const {
  if (std::abs(s) >= r0_) return 0.0;
  const double a = std::sqrt(r0_ * r0_ - s * s);
  if (tau <= -a) return 0.0;
  const double upper = std::min(tau, a);
  const auto f = [&](double u) { return ds(s, a * u); };
  return a * gauss_kronrod<double, 31>::integrate(f, -1.0, upper / a, 15, 1e-12);
}

Vec2 regularized_measure(const DislocationMeasure& sigma, double period, Point z) {
  const Mollifier rho(sigma.r0());
  Vec2 out;
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    const auto& e = sigma.entries()[i];
    const Vec2 b = sigma.burgers(i);
    const double dy = z.y - e.center.y;
    double dx = std::fmod(z.x - e.center.x, period);
    if (dx < 0.0) dx += period;
    // Images at dx and dx - period cover |dx + k period| < r0 < period / 2.
    for (const double d : {dx, dx - period, dx + period}) {
      const double w = rho(d, dy);
      out.x += b.x * w;
      out.y += b.y * w;
    }
  }
  return out;
}

double nucleation_energy(const DislocationMeasure& sigma, double c_o) {
  const auto m = sigma.merged();
  double n = 0.0;
  for (const auto& e : m.entries()) n += m.lattice().norm_sq(e.coeffs);
  return c_o * n;
}

double total_variation(const DislocationMeasure& sigma) {
  const auto m = sigma.merged();
  double tv = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) tv += m.burgers(i).norm();
  return tv;
}

void to_json(nlohmann::json& j, const DislocationMeasure& s) {
  auto fund = nlohmann::json::array();
  for (const auto& b : s.lattice().fundamentals()) fund.push_back({b.x, b.y});
  auto entries = nlohmann::json::array();
  for (const auto& e : s.entries()) {
    entries.push_back({{"center", {e.center.x, e.center.y}}, {"coeffs", e.coeffs}});
  }
  j = nlohmann::json{{"r0", s.r0()}, {"fundamentals", fund}, {"entries", entries}};
}

DislocationMeasure measure_from_json(const nlohmann::json& j) {
  try {
    std::vector<Vec2> fund;
    for (const auto& b : j.at("fundamentals")) {
      fund.push_back({b.at(0).get<double>(), b.at(1).get<double>()});
    }
    std::vector<DislocationEntry> entries;
    if (j.contains("entries")) {
      for (const auto& e : j.at("entries")) {
        entries.push_back({{e.at("center").at(0).get<double>(),
                            e.at("center").at(1).get<double>()},
                           e.at("coeffs").get<std::vector<int>>()});
      }
    }
    return DislocationMeasure(j.at("r0").get<double>(), BurgersLattice(std::move(fund)),
                              std::move(entries));
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("dislocation JSON: ") + e.what());
  }
}

}  // namespace epifilm
