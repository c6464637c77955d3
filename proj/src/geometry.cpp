#include "epifilm/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "epifilm/errors.hpp"

namespace epifilm {

namespace {

double wrap(double x, double period) {
  double r = std::fmod(x, period);
  if (r < 0.0) r += period;
  if (r >= period) r = 0.0;
  return r;
}

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) {
    throw InvalidInput(std::string("profile: non-finite ") + what);
  }
}

}  // namespace

Profile::Profile(double period, std::vector<ProfileNode> nodes,
                 std::vector<Jump> jumps)
    : period_(period), nodes_(std::move(nodes)), jumps_(std::move(jumps)) {
  if (!(period_ > 0.0) || !std::isfinite(period_)) {
    throw InvalidInput("profile: period must be positive");
  }
  if (nodes_.empty() && jumps_.empty()) {
    throw InvalidInput("profile: at least one node or jump is required");
  }
  for (const auto& n : nodes_) {
    require_finite(n.x, "abscissa");
    require_finite(n.height, "height");
    if (n.x < 0.0 || n.x >= period_) {
      throw InvalidInput("profile: node abscissa outside [0, period)");
    }
    if (n.height < 0.0) throw InvalidInput("profile: negative height");
    knots_.push_back({n.x, n.height, n.height, n.height});
  }
  for (const auto& j : jumps_) {
    require_finite(j.x, "abscissa");
    require_finite(j.left, "left limit");
    require_finite(j.right, "right limit");
    require_finite(j.value, "jump value");
    if (j.x < 0.0 || j.x >= period_) {
      throw InvalidInput("profile: jump abscissa outside [0, period)");
    }
    if (j.left < 0.0 || j.right < 0.0 || j.value < 0.0) {
      throw InvalidInput("profile: negative height at jump");
    }
    if (j.value > std::min(j.left, j.right)) {
      throw InvalidInput(
          "profile: jump value exceeds min(left, right); lower "
          "semicontinuity violated");
    }
    knots_.push_back({j.x, j.left, j.right, j.value});
  }
  std::sort(knots_.begin(), knots_.end(),
            [](const Knot& a, const Knot& b) { return a.x < b.x; });
  for (std::size_t k = 1; k < knots_.size(); ++k) {
    if (knots_[k].x == knots_[k - 1].x) {
      throw InvalidInput("profile: duplicate abscissa");
    }
  }
  std::sort(nodes_.begin(), nodes_.end(),
            [](const ProfileNode& a, const ProfileNode& b) { return a.x < b.x; });
  std::sort(jumps_.begin(), jumps_.end(),
            [](const Jump& a, const Jump& b) { return a.x < b.x; });
}

Profile Profile::flat(double period, double height, std::size_t nodes) {
  return sampled(period, nodes, [height](double) { return height; });
}

Profile Profile::sampled(double period, std::size_t nodes,
                         const std::function<double(double)>& f) {
  if (nodes == 0) throw InvalidInput("profile: node count must be positive");
  std::vector<ProfileNode> out(nodes);
  for (std::size_t i = 0; i < nodes; ++i) {
    const double x = period * static_cast<double>(i) / static_cast<double>(nodes);
    out[i] = {x, f(x)};
  }
  return Profile(period, std::move(out));
}

std::ptrdiff_t Profile::locate(double x) const {
  auto it = std::upper_bound(knots_.begin(), knots_.end(), x,
                             [](double v, const Knot& k) { return v < k.x; });
  return static_cast<std::ptrdiff_t>(it - knots_.begin()) - 1;
}

double Profile::interior(std::ptrdiff_t k, double x) const {
  const std::size_t n = knots_.size();
  double x0, h0, x1, h1;
  if (k < 0) {
    x0 = knots_.back().x - period_;
    h0 = knots_.back().right;
    x1 = knots_.front().x;
    h1 = knots_.front().left;
  } else {
    const auto ku = static_cast<std::size_t>(k);
    x0 = knots_[ku].x;
    h0 = knots_[ku].right;
    if (ku + 1 < n) {
      x1 = knots_[ku + 1].x;
      h1 = knots_[ku + 1].left;
    } else {
      x1 = knots_.front().x + period_;
      h1 = knots_.front().left;
    }
  }
  const double t = (x - x0) / (x1 - x0);
  return h0 + t * (h1 - h0);
}

double Profile::operator()(double x) const {
  x = wrap(x, period_);
  const auto k = locate(x);
  if (k >= 0 && knots_[static_cast<std::size_t>(k)].x == x) {
    return knots_[static_cast<std::size_t>(k)].value;
  }
  return interior(k, x);
}

double Profile::left_limit(double x) const {
  x = wrap(x, period_);
  const auto k = locate(x);
  if (k >= 0 && knots_[static_cast<std::size_t>(k)].x == x) {
    return knots_[static_cast<std::size_t>(k)].left;
  }
  return interior(k, x);
}

double Profile::right_limit(double x) const {
  x = wrap(x, period_);
  const auto k = locate(x);
  if (k >= 0 && knots_[static_cast<std::size_t>(k)].x == x) {
    return knots_[static_cast<std::size_t>(k)].right;
  }
  return interior(k, x);
}

double Profile::min_height() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& k : knots_) m = std::min(m, k.value);
  return m;
}

double Profile::max_height() const {
  double m = 0.0;
  for (const auto& k : knots_) m = std::max({m, k.left, k.right});
  return m;
}

std::vector<double> Profile::heights() const {
  std::vector<double> h;
  h.reserve(nodes_.size());
  for (const auto& n : nodes_) h.push_back(n.height);
  return h;
}

Profile Profile::with_heights(std::span<const double> heights) const {
  if (heights.size() != nodes_.size()) {
    throw InvalidInput("profile: height count does not match node count");
  }
  std::vector<ProfileNode> nodes = nodes_;
  for (std::size_t i = 0; i < nodes.size(); ++i) nodes[i].height = heights[i];
  return Profile(period_, std::move(nodes), jumps_);
}

Profile Profile::shifted(double dx) const {
  std::vector<ProfileNode> nodes = nodes_;
  for (auto& n : nodes) n.x = wrap(n.x + dx, period_);
  std::vector<Jump> jumps = jumps_;
  for (auto& j : jumps) j.x = wrap(j.x + dx, period_);
  return Profile(period_, std::move(nodes), std::move(jumps));
}

namespace {

// Calls f(x0, h0, x1, h1) for every linear piece of one period, starting at
// the first knot.
template <typename F>
void for_each_piece(const Profile& p, F&& f) {
  const auto knots = p.knots();
  const std::size_t n = knots.size();
  for (std::size_t k = 0; k < n; ++k) {
    const auto& a = knots[k];
    const auto& b = knots[(k + 1) % n];
    const double x1 = (k + 1 < n) ? b.x : b.x + p.period();
    f(a.x, a.right, x1, b.left);
  }
}

}  // namespace

double Profile::total_variation() const {
  double tv = 0.0;
  for_each_piece(*this, [&](double, double h0, double, double h1) {
    tv += std::abs(h1 - h0);
  });
  for (const auto& k : knots_) {
    tv += std::abs(k.left - k.right) + 2.0 * (std::min(k.left, k.right) - k.value);
  }
  return tv;
}

double volume(const Profile& p) {
  double v = 0.0;
  for_each_piece(p, [&](double x0, double h0, double x1, double h1) {
    v += 0.5 * (h0 + h1) * (x1 - x0);
  });
  return v;
}

SurfaceMeasure surface_measure(const Profile& p) {
  SurfaceMeasure m;
  for_each_piece(p, [&](double x0, double h0, double x1, double h1) {
    m.graph_length += std::hypot(x1 - x0, h1 - h0);
  });
  for (const auto& k : p.knots()) {
    m.graph_length += std::abs(k.left - k.right);
    m.cut_length += std::min(k.left, k.right) - k.value;
  }
  m.relaxed_total = m.graph_length + 2.0 * m.cut_length;
  return m;
}

std::vector<BoundarySegment> boundary_segments(const Profile& p) {
  std::vector<BoundarySegment> segs;
  for_each_piece(p, [&](double x0, double h0, double x1, double h1) {
    segs.push_back({{x0, h0}, {x1, h1}, BoundarySegment::Kind::graph});
  });
  for (const auto& k : p.knots()) {
    if (k.left != k.right) {
      segs.push_back({{k.x, k.left}, {k.x, k.right}, BoundarySegment::Kind::wall});
    }
    const double top = std::min(k.left, k.right);
    if (k.value < top) {
      segs.push_back({{k.x, k.value}, {k.x, top}, BoundarySegment::Kind::cut});
    }
  }
  return segs;
}

double distance_to_segment(Point c, Point a, Point b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = 0.0;
  if (len2 > 0.0) {
    t = std::clamp(((c.x - a.x) * dx + (c.y - a.y) * dy) / len2, 0.0, 1.0);
  }
  return std::hypot(c.x - (a.x + t * dx), c.y - (a.y + t * dy));
}

namespace {

bool disk_clear_of_boundary(const Profile& p, Point center, double r) {
  const double ell = p.period();
  const double tol = 1e-12 * std::max(1.0, r);
  const double base = std::floor(center.x / ell) * ell;
  const int reach = static_cast<int>(std::ceil(r / ell)) + 1;
  const auto segs = boundary_segments(p);
  for (int k = -reach; k <= reach; ++k) {
    const double shift = base + k * ell;
    for (const auto& s : segs) {
      const Point a{s.a.x + shift, s.a.y};
      const Point b{s.b.x + shift, s.b.y};
      if (std::max(a.x, b.x) < center.x - r || std::min(a.x, b.x) > center.x + r) {
        continue;
      }
      if (distance_to_segment(center, a, b) < r - tol) return false;
    }
  }
  return true;
}

}  // namespace

bool core_admissible(const Profile& p, Point center, double r) {
  if (!(r > 0.0)) throw InvalidInput("ball_fits: radius must be positive");
  if (center.y < r - 1e-12 * std::max(1.0, r)) return false;
  const double top = std::max(p.left_limit(center.x), p.right_limit(center.x));
  if (!(center.y < top)) return false;
  return disk_clear_of_boundary(p, center, r);
}

bool ball_fits(const Profile& p, Point center, double r) {
  if (!(r > 0.0)) throw InvalidInput("ball_fits: radius must be positive");
  if (center.y < r - 1e-12 * std::max(1.0, r)) {
    throw InadmissiblePlacement("ball_fits: core disk crosses the substrate (y = " +
                                std::to_string(center.y) + " < r = " +
                                std::to_string(r) + ")");
  }
  return core_admissible(p, center, r);
}

InteriorBallReport interior_ball_diagnostic(const Profile& p, double radius,
                                            std::size_t samples) {
  if (!(radius > 0.0)) {
    throw InvalidInput("interior_ball_diagnostic: radius must be positive");
  }
  struct Sample {
    Point at;
    std::vector<Point> normals;
  };
  const auto segs = boundary_segments(p);
  double total = 0.0;
  for (const auto& s : segs) total += std::hypot(s.b.x - s.a.x, s.b.y - s.a.y);
  const double graph_spacing =
      total / static_cast<double>(std::max<std::size_t>(samples, 1));

  std::vector<Sample> pts;
  const auto knots = p.knots();
  const std::size_t nk = knots.size();
  std::size_t piece = 0;
  std::vector<Point> piece_normals;
  for (const auto& s : segs) {
    const double dx = s.b.x - s.a.x;
    const double dy = s.b.y - s.a.y;
    const double len = std::hypot(dx, dy);
    std::vector<Point> normals;
    double spacing = graph_spacing;
    if (s.kind == BoundarySegment::Kind::graph) {
      normals.push_back({-dy / len, dx / len});
      piece_normals.push_back(normals.front());
      ++piece;
    } else if (s.kind == BoundarySegment::Kind::wall) {
      // Region is on the side of the higher one-sided limit.
      const bool higher_left = s.a.y > s.b.y;
      normals.push_back({higher_left ? 1.0 : -1.0, 0.0});
      spacing = std::min(spacing, radius / 4.0);
    } else {
      normals.push_back({1.0, 0.0});
      normals.push_back({-1.0, 0.0});
      spacing = std::min(spacing, radius / 4.0);
      pts.push_back({s.a, {{0.0, 1.0}}});  // tip of the cut
    }
    if (len <= 0.0) continue;
    const auto pieces = static_cast<std::size_t>(std::ceil(len / spacing));
    for (std::size_t i = 1; i < pieces; ++i) {
      const double t = static_cast<double>(i) / static_cast<double>(pieces);
      pts.push_back({{s.a.x + t * dx, s.a.y + t * dy}, normals});
    }
  }
  // Knot points on the graph: averaged normal of the adjacent pieces.
  for (std::size_t k = 0; k < nk && piece_normals.size() == nk; ++k) {
    const Point& in = piece_normals[(k + nk - 1) % nk];
    const Point& out = piece_normals[k];
    const auto& kn = knots[k];
    if (kn.left == kn.right) {
      Point n{in.x + out.x, in.y + out.y};
      const double len = std::hypot(n.x, n.y);
      pts.push_back({{kn.x, kn.left}, {{n.x / len, n.y / len}}});
    } else {
      pts.push_back({{kn.x, kn.left}, {in}});
      pts.push_back({{kn.x, kn.right}, {out}});
    }
  }

  InteriorBallReport report;
  report.tested = pts.size();
  const double ell = p.period();
  const double lim = radius * (1.0 - 1e-9);
  const int reach = static_cast<int>(std::ceil(2.0 * radius / ell)) + 1;
  for (const auto& s : pts) {
    bool ok = true;
    for (const auto& n : s.normals) {
      const Point c{s.at.x - radius * n.x, s.at.y - radius * n.y};
      for (int k = -reach; k <= reach && ok; ++k) {
        for (const auto& q : pts) {
          const Point qs{q.at.x + k * ell, q.at.y};
          if (std::hypot(qs.x - s.at.x, qs.y - s.at.y) < 1e-12) continue;
          if (std::hypot(qs.x - c.x, qs.y - c.y) < lim) {
            ok = false;
            break;
          }
        }
      }
    }
    if (!ok) report.failures.push_back(s.at);
  }
  return report;
}

void to_json(nlohmann::json& j, const Profile& p) {
  auto nodes = nlohmann::json::array();
  for (const auto& n : p.nodes()) nodes.push_back({n.x, n.height});
  auto jumps = nlohmann::json::array();
  for (const auto& jp : p.jumps()) jumps.push_back({jp.x, jp.left, jp.right, jp.value});
  j = nlohmann::json{{"period", p.period()}, {"nodes", nodes}, {"jumps", jumps}};
}

Profile profile_from_json(const nlohmann::json& j) {
  try {
    std::vector<ProfileNode> nodes;
    for (const auto& n : j.at("nodes")) {
      nodes.push_back({n.at(0).get<double>(), n.at(1).get<double>()});
    }
    std::vector<Jump> jumps;
    if (j.contains("jumps")) {
      for (const auto& jp : j.at("jumps")) {
        jumps.push_back({jp.at(0).get<double>(), jp.at(1).get<double>(),
                         jp.at(2).get<double>(), jp.at(3).get<double>()});
      }
    }
    return Profile(j.at("period").get<double>(), std::move(nodes), std::move(jumps));
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("profile JSON: ") + e.what());
  }
}

}  // namespace epifilm
