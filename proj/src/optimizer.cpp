#include "epifilm/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <deque>
#include <limits>
#include <map>
#include <string>

#include <Eigen/Dense>

#include "epifilm/errors.hpp"

namespace epifilm {

namespace {

void put(std::string& key, double v) {
  char buf[sizeof(double)];
  std::memcpy(buf, &v, sizeof(double));
  key.append(buf, sizeof(double));
}

std::string profile_key(const Profile& p, const LameTensor& C, const MeshOptions& mesh) {
  std::string key;
  put(key, p.period());
  put(key, C.mu);
  put(key, C.lambda);
  put(key, static_cast<double>(mesh.refine));
  put(key, mesh.h_min);
  for (const auto& n : p.nodes()) {
    put(key, n.x);
    put(key, n.height);
  }
  key.push_back('|');
  for (const auto& j : p.jumps()) {
    put(key, j.x);
    put(key, j.left);
    put(key, j.right);
    put(key, j.value);
  }
  return key;
}

std::string measure_key(const DislocationMeasure& sigma) {
  const auto m = sigma.merged();
  std::string key;
  put(key, m.r0());
  for (const auto& b : m.lattice().fundamentals()) {
    put(key, b.x);
    put(key, b.y);
  }
  key.push_back('|');
  for (const auto& e : m.entries()) {
    put(key, e.center.x);
    put(key, e.center.y);
    for (const int c : e.coeffs) put(key, static_cast<double>(c));
    key.push_back(';');
  }
  return key;
}

template <class V>
class FifoCache {
 public:
  explicit FifoCache(std::size_t capacity) : capacity_(std::max<std::size_t>(capacity, 1)) {}

  const V* find(const std::string& key) const {
    const auto it = map_.find(key);
    return it == map_.end() ? nullptr : &it->second;
  }

  const V& insert(const std::string& key, V value) {
    while (map_.size() >= capacity_) {
      map_.erase(order_.front());
      order_.pop_front();
    }
    order_.push_back(key);
    return map_.emplace(key, std::move(value)).first->second;
  }

 private:
  std::size_t capacity_;
  std::map<std::string, V> map_;
  std::deque<std::string> order_;
};

double periodic_offset(double a, double b, double period) {
  double d = std::fmod(a - b, period);
  if (d > 0.5 * period) d -= period;
  if (d < -0.5 * period) d += period;
  return d;
}

bool strictly_lower(double candidate, double current) {
  return candidate < current;
}

}  // namespace

struct Evaluator::Cache {
  struct Operator {
    std::shared_ptr<const Discretization> disc;
    MismatchField mismatch;
  };
  explicit Cache(std::size_t capacity)
      : operators(std::max<std::size_t>(4, capacity / 16)), fields(capacity) {}
  FifoCache<std::shared_ptr<const Operator>> operators;
  FifoCache<std::shared_ptr<const ElasticState::Fields>> fields;
  std::size_t solves = 0;
  std::size_t hits = 0;
};

Evaluator::Evaluator(ModelParams params, Objective objective, MeshOptions mesh,
                     std::size_t cache_capacity)
    : params_(std::move(params)),
      objective_(std::move(objective)),
      mesh_(mesh),
      cache_(std::make_shared<Cache>(cache_capacity)) {
  params_.validate(true);
  if (mesh_.h_min <= 0.0) mesh_.h_min = params_.h_min();
}

Evaluator Evaluator::with_params(ModelParams params) const {
  Evaluator out = *this;
  params.validate(true);
  out.params_ = std::move(params);
  return out;
}

Evaluator Evaluator::with_objective(Objective objective) const {
  Evaluator out = *this;
  out.objective_ = std::move(objective);
  return out;
}

std::size_t Evaluator::solves() const { return cache_->solves; }
std::size_t Evaluator::cache_hits() const { return cache_->hits; }

EnergyBreakdown Evaluator::score(const Profile& p, const DislocationMeasure& sigma,
                                 const ElasticState& state) const {
  const Profile* anchor = objective_.anchor ? &*objective_.anchor : nullptr;
  auto e = penalized_energy(p, sigma, state, params_, anchor, objective_.penalty);
  if (objective_.nucleation) {
    e.nucleation = nucleation_energy(sigma, params_.c_o);
    e.total += e.nucleation;
  }
  return e;
}

Configuration Evaluator::evaluate(const Profile& p, const DislocationMeasure& sigma) const {
  if (sigma.r0() != params_.r0) {
    throw InvalidInput("evaluate: dislocation core radius differs from the model r0");
  }
  sigma.check_admissible(p);
  const std::string pk = profile_key(p, params_.lame, mesh_);
  std::shared_ptr<const Cache::Operator> op;
  if (const auto* hit = cache_->operators.find(pk)) {
    op = *hit;
  } else {
    auto disc = std::make_shared<const Discretization>(p, params_.lame, mesh_);
    auto u = solve_mismatch(*disc);
    op = cache_->operators.insert(
        pk, std::make_shared<const Cache::Operator>(Cache::Operator{disc, std::move(u)}));
  }
  const std::string fk = pk + '#' + measure_key(sigma);
  std::shared_ptr<const ElasticState::Fields> fields;
  if (const auto* hit = cache_->fields.find(fk)) {
    fields = *hit;
    ++cache_->hits;
  } else {
    auto K = singular_field(sigma, op->disc->mesh());
    auto v = solve_corrector(*op->disc, K);
    const auto st =
        assemble_total(op->disc, sigma, op->mismatch, std::move(K), std::move(v), params_.e0);
    fields = cache_->fields.insert(fk, st.fields_ptr());
    ++cache_->solves;
  }
  Configuration cfg{p, sigma,
                    std::make_shared<const ElasticState>(op->disc, sigma, fields, params_.e0),
                    {}, 0.0};
  cfg.energy = score(p, sigma, *cfg.state);
  return cfg;
}

std::optional<Configuration> Evaluator::try_evaluate(const Profile& p,
                                                     const DislocationMeasure& sigma) const {
  try {
    return evaluate(p, sigma);
  } catch (const InvalidInput&) {
    return std::nullopt;
  } catch (const NumericError&) {
    return std::nullopt;
  }
}

void ScheduleParams::validate(double r0) const {
  const auto fail = [](const std::string& what) { throw InvalidInput("schedule: " + what); };
  if (!(profile_tau > 0.0)) fail("profile_tau must be positive");
  if (!(max_normal_displacement > 0.0)) fail("max_normal_displacement must be positive");
  if (fd_step < 0.0 || !(fd(r0) < r0 / 10.0 + 1e-15)) fail("fd_step must not exceed r0/10");
  if (!(shrink > 0.0 && shrink < 1.0)) fail("shrink must lie in (0, 1)");
  if (line_search_max < 1) fail("line_search_max must be positive");
  if (!(dislocation_max_move > 0.0)) fail("dislocation_max_move must be positive");
  if (!(nucleation_dx > 0.0) || !(nucleation_dy > 0.0)) fail("nucleation spacing must be positive");
  if (max_nucleations < 0) fail("max_nucleations must be nonnegative");
  if (!(energy_tol >= 0.0)) fail("energy_tol must be nonnegative");
  if (max_sweeps < 1) fail("max_sweeps must be positive");
  if (profile_steps < 0 || dislocation_steps < 0) fail("step counts must be nonnegative");
  if (lattice && lattice->levels.empty()) fail("lattice levels must not be empty");
}

// ---------------------------------------------------------------- dislocations

namespace {

Configuration lattice_dislocation_step(const Configuration& cfg, const Evaluator& eval,
                                       const LatticeSchedule& lattice) {
  Configuration best = cfg;
  for (std::size_t i = 0; i < cfg.sigma.size(); ++i) {
    for (const auto& c : lattice.centers) {
      const auto trial = eval.try_evaluate(best.profile, best.sigma.with_center(i, c));
      if (trial && strictly_lower(trial->energy.total, best.energy.total)) {
        best = *trial;
        best.profile_tau = cfg.profile_tau;
      }
    }
  }
  return best;
}

}  // namespace

Configuration dislocation_step(const Configuration& cfg, const Evaluator& eval,
                               const ScheduleParams& schedule) {
  if (cfg.sigma.empty()) return cfg;
  if (schedule.lattice) return lattice_dislocation_step(cfg, eval, *schedule.lattice);
  const double r0 = cfg.sigma.r0();
  const double h = schedule.fd(r0);
  const double e = cfg.energy.total;
  const auto energy_at = [&](std::size_t i, Point c) -> std::optional<double> {
    const auto trial = eval.try_evaluate(cfg.profile, cfg.sigma.with_center(i, c));
    if (!trial) return std::nullopt;
    return trial->energy.total;
  };
  const std::size_t n = cfg.sigma.size();
  std::vector<Point> dir(n, Point{0.0, 0.0});
  double largest = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Point z = cfg.sigma.entries()[i].center;
    double gx = 0.0;
    const auto ex_p = energy_at(i, {z.x + h, z.y});
    const auto ex_m = energy_at(i, {z.x - h, z.y});
    if (ex_p && ex_m) {
      gx = (*ex_p - *ex_m) / (2.0 * h);
    } else if (ex_p) {
      gx = (*ex_p - e) / h;
    } else if (ex_m) {
      gx = (e - *ex_m) / h;
    }
    double gy = 0.0;
    const auto ey_p = energy_at(i, {z.x, z.y + h});
    const auto ey_m = z.y - h >= r0 ? energy_at(i, {z.x, z.y - h}) : std::nullopt;
    if (ey_p && ey_m) {
      gy = (*ey_p - *ey_m) / (2.0 * h);
    } else if (ey_p) {
      gy = (*ey_p - e) / h;
    } else if (ey_m) {
      gy = (e - *ey_m) / h;
    }
    // Projected gradient: a core resting on the substrate cannot go lower.
    if (z.y <= r0 && gy > 0.0) gy = 0.0;
    dir[i] = {-gx, -gy};
    largest = std::max(largest, std::hypot(gx, gy));
  }
  if (!(largest > 0.0)) return cfg;

  const double ell = cfg.profile.period();
  double t = schedule.dislocation_max_move / largest;
  for (int k = 0; k < schedule.line_search_max; ++k, t *= schedule.shrink) {
    std::vector<DislocationEntry> entries(cfg.sigma.entries().begin(), cfg.sigma.entries().end());
    for (std::size_t i = 0; i < n; ++i) {
      const Point z = entries[i].center;
      Point target{z.x + t * dir[i].x, std::max(r0, z.y + t * dir[i].y)};
      target.x = std::fmod(target.x, ell);
      if (target.x < 0.0) target.x += ell;
      if (!ball_fits(cfg.profile, target, r0)) {
        // Retreat along the segment toward the admissible start.
        double lo = 0.0, hi = 1.0;
        for (int b = 0; b < 30; ++b) {
          const double mid = 0.5 * (lo + hi);
          const Point p{z.x + mid * (target.x - z.x), z.y + mid * (target.y - z.y)};
          (ball_fits(cfg.profile, p, r0) ? lo : hi) = mid;
        }
        target = {z.x + lo * (target.x - z.x), z.y + lo * (target.y - z.y)};
      }
      entries[i].center = target;
    }
    const auto trial = eval.try_evaluate(cfg.profile, cfg.sigma.with_entries(std::move(entries)));
    if (trial && strictly_lower(trial->energy.total, e)) {
      Configuration out = *trial;
      out.profile_tau = cfg.profile_tau;
      return out;
    }
  }
  return cfg;
}

// --------------------------------------------------------------------- profile

std::vector<std::size_t> clamp_to_cores(std::vector<double>& heights, const Profile& shape,
                                        const DislocationMeasure& sigma) {
  const auto nodes = shape.nodes();
  const std::size_t n = nodes.size();
  const double ell = shape.period();
  const double r0 = sigma.r0();
  std::vector<bool> raised(n, false);
  for (const auto& e : sigma.entries()) {
    for (std::size_t i = 0; i < n; ++i) {
      const double dx = periodic_offset(nodes[i].x, e.center.x, ell);
      if (std::abs(dx) >= r0) continue;
      const double floor = e.center.y + std::sqrt(r0 * r0 - dx * dx);
      if (heights[i] < floor) {
        heights[i] = floor;
        raised[i] = true;
      }
    }
  }
  for (int iter = 0; iter < 200; ++iter) {
    const Profile p = shape.with_heights(heights);
    if (sigma.empty() || sigma.admissible(p)) break;
    for (const auto& e : sigma.entries()) {
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = (i + 1) % n;
        const double xa = nodes[i].x;
        const double xb = nodes[j].x + (j == 0 ? ell : 0.0);
        double dist = std::numeric_limits<double>::infinity();
        for (const double s : {-ell, 0.0, ell}) {
          dist = std::min(dist, distance_to_segment({e.center.x + s, e.center.y},
                                                    {xa, heights[i]}, {xb, heights[j]}));
        }
        if (dist < r0) {
          const double lift = (r0 - dist) + 1e-9 * r0;
          heights[i] += lift;
          heights[j] += lift;
          raised[i] = raised[j] = true;
        }
      }
    }
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (raised[i]) out.push_back(i);
  }
  return out;
}

namespace {

struct Polygon {
  std::vector<double> mass;      // dV/dh_i
  std::vector<double> length_g;  // dL/dh_i
  Eigen::MatrixXd length_h;      // d2L/dh_i dh_j
};

Polygon polygon(const Profile& p) {
  const auto nodes = p.nodes();
  const std::size_t n = nodes.size();
  const double ell = p.period();
  Polygon out;
  out.mass.assign(n, 0.0);
  out.length_g.assign(n, 0.0);
  out.length_h = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = (i + 1) % n;
    const double dx = nodes[j].x + (j <= i ? ell : 0.0) - nodes[i].x;
    const double dh = nodes[j].height - nodes[i].height;
    const double s = std::hypot(dx, dh);
    out.mass[i] += 0.5 * dx;
    out.mass[j] += 0.5 * dx;
    out.length_g[i] -= dh / s;
    out.length_g[j] += dh / s;
    const double c = dx * dx / (s * s * s);
    const auto I = static_cast<Eigen::Index>(i);
    const auto J = static_cast<Eigen::Index>(j);
    out.length_h(I, I) += c;
    out.length_h(J, J) += c;
    out.length_h(I, J) -= c;
    out.length_h(J, I) -= c;
  }
  return out;
}

double weighted_volume(std::span<const double> mass, std::span<const double> h) {
  double v = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) v += mass[i] * h[i];
  return v;
}

Configuration lattice_profile_step(const Configuration& cfg, const Evaluator& eval,
                                   const LatticeSchedule& lattice) {
  // Best improvement over every reassignment of one or two node levels;
  // pairs make volume-neutral moves reachable under the penalty.
  Configuration best = cfg;
  const std::size_t n = cfg.profile.nodes().size();
  const auto h0 = cfg.profile.heights();
  const auto consider = [&](std::vector<double> h) {
    if (h == h0) return;
    const auto trial = eval.try_evaluate(cfg.profile.with_heights(h), cfg.sigma);
    if (trial && strictly_lower(trial->energy.total, best.energy.total)) {
      best = *trial;
      best.profile_tau = cfg.profile_tau;
    }
  };
  if (n == 1) {
    for (const double a : lattice.levels) consider({a});
    return best;
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      for (const double a : lattice.levels) {
        for (const double b : lattice.levels) {
          auto h = h0;
          h[i] = a;
          h[j] = b;
          consider(std::move(h));
        }
      }
    }
  }
  return best;
}

}  // namespace

Configuration profile_step(const Configuration& cfg, const Evaluator& eval,
                           const ScheduleParams& schedule) {
  if (!cfg.profile.continuous()) {
    throw InvalidInput("profile_step: continuous profile required");
  }
  if (schedule.lattice) return lattice_profile_step(cfg, eval, *schedule.lattice);
  const ModelParams& params = eval.params();
  const Objective& obj = eval.objective();
  const std::size_t n = cfg.profile.nodes().size();
  const auto poly = polygon(cfg.profile);
  const auto h0 = cfg.profile.heights();
  const double v0 = weighted_volume(poly.mass, h0);
  const bool constrained = obj.penalty == PenaltyKind::none;

  Eigen::VectorXd g(static_cast<Eigen::Index>(n));
  const auto elastic = cfg.state->with_e0(params.e0).profile_height_gradient();
  const double lam = params.volume_weight();
  const double d = params.volume;
  double pen = 0.0;
  if (obj.penalty == PenaltyKind::two_sided) {
    pen = v0 > d ? lam : (v0 < d ? -lam : 0.0);
  } else if (obj.penalty == PenaltyKind::one_sided) {
    pen = v0 < d ? -lam : 0.0;
  }
  for (std::size_t i = 0; i < n; ++i) {
    double gi = params.gamma * poly.length_g[i] + elastic[i] + pen * poly.mass[i];
    if (obj.anchor && params.beta > 0.0) {
      const double x = cfg.profile.nodes()[i].x;
      gi += 2.0 * params.beta * (h0[i] - (*obj.anchor)(x)) * poly.mass[i];
    }
    g(static_cast<Eigen::Index>(i)) = gi;
  }

  double tau = cfg.profile_tau > 0.0 ? cfg.profile_tau : schedule.profile_tau;
  Eigen::MatrixXd A = params.gamma * poly.length_h;
  for (std::size_t i = 0; i < n; ++i) {
    A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) += poly.mass[i] / tau;
  }
  const Eigen::LDLT<Eigen::MatrixXd> solver(A);
  Eigen::VectorXd dir = -solver.solve(g);
  if (constrained) {
    Eigen::VectorXd m(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) m(static_cast<Eigen::Index>(i)) = poly.mass[i];
    const Eigen::VectorXd am = solver.solve(m);
    dir += (m.dot(-dir) / m.dot(am)) * am;
  }
  if (!(g.dot(dir) < 0.0)) return cfg;

  const double biggest = dir.cwiseAbs().maxCoeff();
  const double t_max = std::min(1.0, schedule.max_normal_displacement / biggest);

  const auto trial_at = [&](double t) -> std::optional<Configuration> {
    std::vector<double> h(n);
    for (std::size_t i = 0; i < n; ++i) h[i] = h0[i] + t * dir(static_cast<Eigen::Index>(i));
    auto fixed = clamp_to_cores(h, cfg.profile, cfg.sigma);
    if (constrained) {
      for (int pass = 0; pass < 8; ++pass) {
        const double excess = weighted_volume(poly.mass, h) - v0;
        if (std::abs(excess) <= 1e-13 * v0) break;
        std::vector<bool> is_fixed(n, false);
        for (const auto i : fixed) is_fixed[i] = true;
        double free_mass = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          if (!is_fixed[i]) free_mass += poly.mass[i];
        }
        if (!(free_mass > 0.0)) return std::nullopt;
        for (std::size_t i = 0; i < n; ++i) {
          if (!is_fixed[i]) h[i] -= excess / free_mass;
        }
        const auto more = clamp_to_cores(h, cfg.profile, cfg.sigma);
        fixed.insert(fixed.end(), more.begin(), more.end());
      }
      if (std::abs(weighted_volume(poly.mass, h) - v0) > 1e-10 * v0) return std::nullopt;
    }
    if (*std::min_element(h.begin(), h.end()) < params.h_min()) return std::nullopt;
    return eval.try_evaluate(cfg.profile.with_heights(h), cfg.sigma);
  };

  std::optional<Configuration> accepted;
  double t = t_max;
  int shrinks = 0;
  for (; shrinks < schedule.line_search_max; ++shrinks, t *= schedule.shrink) {
    auto trial = trial_at(t);
    if (trial && strictly_lower(trial->energy.total, cfg.energy.total)) {
      accepted = std::move(trial);
      break;
    }
  }
  // The penalty |V - d| has a kink; the step that lands on V = d is a
  // candidate in its own right.
  if (!constrained && lam > 0.0) {
    const double dv = weighted_volume(poly.mass, std::vector<double>(dir.data(), dir.data() + n));
    if (dv != 0.0) {
      const double t_kink = (d - v0) / dv;
      if (t_kink > 0.0 && t_kink < t_max && (!accepted || t_kink != t)) {
        auto trial = trial_at(t_kink);
        const double best = accepted ? accepted->energy.total : cfg.energy.total;
        if (trial && strictly_lower(trial->energy.total, best)) accepted = std::move(trial);
      }
    }
  }
  if (!accepted) {
    Configuration out = cfg;
    out.profile_tau = std::max(tau * std::pow(schedule.shrink, 4), 1e-8);
    return out;
  }
  accepted->profile_tau =
      shrinks == 0 && t_max == 1.0 ? std::min(tau * 2.0, 1e6)
                                   : std::max(tau * std::pow(schedule.shrink, shrinks), 1e-8);
  return *accepted;
}

// ------------------------------------------------------------------ nucleation

std::vector<Point> nucleation_sites(const Configuration& cfg, const ScheduleParams& schedule) {
  const double ell = cfg.profile.period();
  const double r0 = cfg.sigma.r0();
  const auto columns = std::max<long>(1, std::lround(ell / schedule.nucleation_dx));
  const double top = cfg.profile.max_height();
  std::vector<Point> out;
  for (long j = 0;; ++j) {
    const double y = r0 + static_cast<double>(j) * schedule.nucleation_dy;
    if (y + r0 > top) break;
    for (long k = 0; k < columns; ++k) {
      const Point c{ell * static_cast<double>(k) / static_cast<double>(columns), y};
      if (core_admissible(cfg.profile, c, r0)) out.push_back(c);
    }
  }
  return out;
}

Configuration nucleation_sweep(const Configuration& cfg, const Evaluator& eval,
                               const ScheduleParams& schedule) {
  const auto& lattice = cfg.sigma.lattice();
  if (lattice.empty()) return cfg;
  const double c_o = eval.params().c_o;
  const bool counted = eval.objective().nucleation;
  const auto with_n = [&](const Configuration& c) {
    return counted ? c.energy.total
                   : c.energy.total + nucleation_energy(c.sigma, c_o);
  };
  Configuration current = cfg;
  for (int round = 0; round < schedule.max_nucleations; ++round) {
    const double base = with_n(current);
    std::optional<Configuration> best;
    double best_value = base;
    for (const auto& site : nucleation_sites(current, schedule)) {
      for (std::size_t f = 0; f < lattice.size(); ++f) {
        for (const int sign : {1, -1}) {
          std::vector<int> coeffs(lattice.size(), 0);
          coeffs[f] = sign;
          auto trial = eval.try_evaluate(current.profile, current.sigma.plus(site, coeffs).merged());
          if (!trial) continue;
          const double value = with_n(*trial);
          if (value < best_value - 1e-12 * std::max(1.0, std::abs(base))) {
            best_value = value;
            best = std::move(trial);
          }
        }
      }
    }
    if (!best) break;
    best->profile_tau = current.profile_tau;
    current = std::move(*best);
  }
  return current;
}

// ------------------------------------------------------------------ alternation

MinimizeResult alternate_minimize(const Configuration& start, const Evaluator& eval,
                                  const ScheduleParams& schedule) {
  schedule.validate(eval.params().r0);
  MinimizeResult out{start, {}, false, false, std::nullopt};
  Configuration cur = start;
  if (cur.profile_tau <= 0.0) cur.profile_tau = schedule.profile_tau;
  const auto record = [&](int sweep, const char* kind) {
    out.trace.push_back({sweep, kind, cur.energy, cur.sigma.merged().size()});
  };
  record(0, "init");
  const auto advance = [&](Configuration next, int sweep, const char* kind) {
    if (next.energy.total > cur.energy.total) {
      throw NumericError("alternate_minimize: energy increased during a step");
    }
    const bool moved = next.energy.total < cur.energy.total;
    cur = std::move(next);
    if (moved) record(sweep, kind);
    return moved;
  };
  for (int sweep = 1; sweep <= schedule.max_sweeps; ++sweep) {
    const double before = cur.energy.total;
    if (schedule.move_profile && cur.profile.continuous()) {
      for (int k = 0; k < schedule.profile_steps; ++k) {
        if (!advance(profile_step(cur, eval, schedule), sweep, "profile")) break;
      }
    }
    if (schedule.move_dislocations) {
      for (int k = 0; k < schedule.dislocation_steps; ++k) {
        if (!advance(dislocation_step(cur, eval, schedule), sweep, "dislocation")) break;
      }
    }
    if (schedule.nucleate && !schedule.lattice) {
      advance(nucleation_sweep(cur, eval, schedule), sweep, "nucleation");
    }
    if (before - cur.energy.total <= schedule.energy_tol) {
      out.converged = true;
      break;
    }
    if (sweep == schedule.max_sweeps) out.max_sweeps_exceeded = true;
  }
  if (cur.profile.continuous()) {
    out.residual = euler_lagrange_residual(cur.profile, *cur.state, eval.params());
  }
  out.final = std::move(cur);
  return out;
}

}  // namespace epifilm
