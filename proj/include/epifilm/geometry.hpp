#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

namespace epifilm {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

struct ProfileNode {
  double x = 0.0;
  double height = 0.0;
};

/// Discontinuity of the profile at `x`. `value` is the pointwise height and
/// must not exceed either one-sided limit (lower semicontinuity). A record
/// with left == right and value below them is a dip, i.e. a vertical cut.
struct Jump {
  double x = 0.0;
  double left = 0.0;
  double right = 0.0;
  double value = 0.0;
};

/// Periodic, lower semicontinuous film height over [0, period).
///
/// The graph is piecewise linear between consecutive knots, where a knot is
/// either a node (continuous, left == right == value) or a jump record.
/// Values are immutable after construction.
class Profile {
 public:
  struct Knot {
    double x;
    double left;
    double right;
    double value;
  };

  Profile(double period, std::vector<ProfileNode> nodes,
          std::vector<Jump> jumps = {});

  /// Constant height sampled on `nodes` uniform abscissae.
  static Profile flat(double period, double height, std::size_t nodes = 128);
  /// Samples `f` on `nodes` uniform abscissae in [0, period).
  static Profile sampled(double period, std::size_t nodes,
                         const std::function<double(double)>& f);

  double period() const { return period_; }
  std::span<const ProfileNode> nodes() const { return nodes_; }
  std::span<const Jump> jumps() const { return jumps_; }
  std::span<const Knot> knots() const { return knots_; }
  bool continuous() const { return jumps_.empty(); }

  /// Pointwise (lower semicontinuous) value, periodic in x.
  double operator()(double x) const;
  double left_limit(double x) const;
  double right_limit(double x) const;

  double min_height() const;
  double max_height() const;

  std::vector<double> heights() const;
  /// Same abscissae and jumps, new node heights.
  Profile with_heights(std::span<const double> heights) const;
  /// Profile translated by dx (periodically wrapped).
  Profile shifted(double dx) const;
  /// Pointwise total variation of one period.
  double total_variation() const;

 private:
  double period_;
  std::vector<ProfileNode> nodes_;
  std::vector<Jump> jumps_;
  std::vector<Knot> knots_;

  // Index of the last knot with x_k <= x (x already reduced to [0, period)),
  // or -1 when x is before the first knot.
  std::ptrdiff_t locate(double x) const;
  double interior(std::ptrdiff_t k, double x) const;
};

struct SurfaceMeasure {
  double graph_length = 0.0;
  double cut_length = 0.0;
  double relaxed_total = 0.0;
};

double volume(const Profile& p);
SurfaceMeasure surface_measure(const Profile& p);

/// Straight pieces of the boundary of the subgraph over one period:
/// graph segments, jump walls and cuts.
struct BoundarySegment {
  enum class Kind { graph, wall, cut };
  Point a;
  Point b;
  Kind kind;
};
std::vector<BoundarySegment> boundary_segments(const Profile& p);

double distance_to_segment(Point c, Point a, Point b);

/// True iff the open disk of radius r about `center` lies in the periodically
/// extended subgraph. Throws InadmissiblePlacement when center.y < r.
bool ball_fits(const Profile& p, Point center, double r);
/// Same test, but returns false instead of throwing for center.y < r.
bool core_admissible(const Profile& p, Point center, double r);

struct InteriorBallReport {
  std::size_t tested = 0;
  std::vector<Point> failures;
  bool all_pass() const { return failures.empty(); }
};

/// Interior-sphere check along the graph and cuts with radius `radius`.
InteriorBallReport interior_ball_diagnostic(const Profile& p, double radius,
                                            std::size_t samples);

void to_json(nlohmann::json& j, const Profile& p);
Profile profile_from_json(const nlohmann::json& j);

}  // namespace epifilm
