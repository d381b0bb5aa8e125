#pragma once

#include <array>
#include <complex>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "geoforge/error.hpp"

namespace geoforge::geom {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using CVec3 = Eigen::Vector3cd;

struct Tolerances {
  double w = 1e-12;    // relative |w| below which a point is ideal
  double col = 1e-6;   // collinearity, unit-normalized incidence
  double det = 1e-12;  // |det| of a Frobenius-normalized homography
  double den = 1e-12;  // cross-ratio denominators
};

const Tolerances& default_tolerances();

// Fixes the overall sign so the first entry of largest magnitude is positive.
template <typename Derived>
void fix_sign(Eigen::MatrixBase<Derived>& m) {
  Eigen::Index br = 0, bc = 0;
  double mag = -1.0;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double a = std::abs(m(r, c));
      if (a > mag * (1.0 + 1e-12)) {
        mag = a;
        br = r;
        bc = c;
      }
    }
  if (m(br, bc) < 0) m = -m;
}

/// Homogeneous image point. Equality is up to nonzero scale.
class Point2h {
 public:
  Point2h() : h_(0, 0, 1) {}
  explicit Point2h(const Vec3& h);
  Point2h(double x, double y) : h_(x, y, 1.0) {}
  Point2h(double x, double y, double w) : Point2h(Vec3(x, y, w)) {}

  const Vec3& h() const { return h_; }
  bool is_ideal(const Tolerances& tol = default_tolerances()) const;
  /// w = 1 for finite points, unit norm with sign fixed for ideal ones.
  Vec3 normalized(const Tolerances& tol = default_tolerances()) const;
  Vec3 unit() const { return h_.normalized(); }
  /// Inhomogeneous coordinates; throws for ideal points.
  Eigen::Vector2d euclidean() const;

 private:
  Vec3 h_;
};

class Line2h {
 public:
  Line2h() : l_(0, 0, 1) {}
  explicit Line2h(const Vec3& l);
  Line2h(double a, double b, double c) : Line2h(Vec3(a, b, c)) {}

  const Vec3& l() const { return l_; }
  /// Unit norm, sign fixed by the largest-magnitude entry.
  Vec3 canonical() const;
  /// Scaled so (a, b) is a unit normal; incidence then equals signed distance.
  Vec3 distance_form() const;
  double distance(const Point2h& p) const;

 private:
  Vec3 l_;
};

/// Symmetric 3x3 conic stored as its six independent coefficients
/// a x^2 + b xy + c y^2 + d x + e y + f.
class Conic {
 public:
  Conic() = default;
  explicit Conic(const Mat3& c);
  static Conic from_coefficients(const std::array<double, 6>& k);

  Mat3 matrix() const;
  const std::array<double, 6>& coefficients() const { return k_; }
  Conic canonical() const;
  /// p^T C p for unit-normalized p and Frobenius-normalized C.
  double algebraic_residual(const Point2h& p) const;
  /// Pole of the line at infinity; the center for central conics.
  std::optional<Eigen::Vector2d> center() const;
  /// Semi-axis lengths (major, minor) for a real ellipse.
  std::optional<std::pair<double, double>> ellipse_axes() const;

 private:
  std::array<double, 6> k_{0, 0, 0, 0, 0, 0};
};

/// Nonsingular 3x3 plane map, stored in canonical form.
class Homography {
 public:
  Homography() : h_(Mat3::Identity() / std::sqrt(3.0)) {}
  explicit Homography(const Mat3& h, const Tolerances& tol = default_tolerances());
  static Homography identity() { return Homography(); }

  const Mat3& matrix() const { return h_; }
  Homography inverse() const;
  Point2h apply(const Point2h& p) const { return Point2h(h_ * p.h()); }
  Line2h apply_to_line(const Line2h& l) const;
  Homography operator*(const Homography& o) const { return Homography(h_ * o.h_); }

 private:
  Mat3 h_;
};

struct Correspondence {
  Point2h x1;
  Point2h x2;
};

/// Cross ratio cr(a,b;c,d) = ((a-c)(b-d)) / ((a-d)(b-c)) of four collinear
/// points, measured along their common line. Ideal points are allowed.
double cross_ratio(const Point2h& a, const Point2h& b, const Point2h& c,
                   const Point2h& d, const Tolerances& tol = default_tolerances());

Line2h line_through(const Point2h& p, const Point2h& q,
                    const Tolerances& tol = default_tolerances());
Point2h meet(const Line2h& l, const Line2h& m,
             const Tolerances& tol = default_tolerances());

using Segment = std::pair<Point2h, Point2h>;

struct VanishingPointFit {
  Point2h point;
  double residual = 0.0;  // RMS point-line distance in normalized units
};

VanishingPointFit fit_vanishing_point(const std::vector<Segment>& segments);

/// Least-squares line through several points (e.g. three or more
/// vanishing points); residual is the RMS normalized incidence.
std::pair<Line2h, double> fit_line(const std::vector<Point2h>& points);

Line2h vanishing_line(const Point2h& v1, const Point2h& v2);

/// Hartley-normalized DLT; matches map x1 -> x2.
Homography dlt_homography(const std::vector<Correspondence>& matches);

/// Similarity moving the centroid to the origin with RMS distance sqrt(2).
Mat3 hartley_normalization(const std::vector<Eigen::Vector2d>& pts);

struct ConicFit {
  Conic conic;
  double residual = 0.0;  // RMS algebraic residual on the input points
};

ConicFit fit_conic(const std::vector<Point2h>& points);

struct ConicIntersections {
  std::array<CVec3, 4> points;
  /// Indices of the complex-conjugate pair taken as the imaged circular
  /// points, when one exists.
  std::optional<std::pair<int, int>> circular_pair;
};

ConicIntersections conic_intersections(const Conic& c1, const Conic& c2);

/// Homogeneous line through two complex points that are conjugate to
/// each other, returned as a real vector.
Vec3 real_line_through_conjugates(const CVec3& p);

/// Distance between two complex homogeneous points up to scale, in
/// [0, 1]: the norm of the cross product of the unit-normalized vectors.
double projective_distance(const CVec3& a, const CVec3& b);

}  // namespace geoforge::geom
