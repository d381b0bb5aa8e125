#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "geoforge/geom.hpp"
#include "geoforge/image.hpp"

namespace geoforge::rectify {

using geom::Conic;
using geom::Correspondence;
using geom::Homography;
using geom::Line2h;
using geom::Point2h;
using geom::Segment;

/// Locus of the metric parameters (alpha, beta) compatible with one
/// metric constraint on the affine-rectified plane.
struct ConstraintCircle {
  double center_alpha = 0.0;
  double center_beta = 0.0;
  double radius = 0.0;
};

enum class Method { polygon, vanishing_points, circles };
const char* to_string(Method m);

/// Image -> rectified-plane transformation and its factors.
///
/// For the vanishing-point and circle routes the rectifier is
/// affine * projective. For the polygon route it is the inverse of the
/// fitted world-to-image homography, and the factors are its decomposition
/// (equal to the rectifier up to a similarity).
struct RectifyResult {
  Homography projective;
  Homography affine;
  Homography rectifier;
  std::optional<double> scale;
  Method method = Method::polygon;
  double alpha = 0.0;
  double beta = 1.0;
  geom::Vec3 vline{0, 0, 1};
  double residual = 0.0;
  std::vector<std::string> diagnostics;
};

struct KnownLength {
  Segment image_segment;
  double world_length = 0.0;
};

/// Angle through which `first` turns to reach `second`, taken modulo pi and
/// in the sense that carries the image +x axis to the +y axis.
struct KnownAngle {
  Line2h first;
  Line2h second;
  double radians = 0.0;
};

/// Two world angles known to be equal, first_a -> first_b and
/// second_a -> second_b, turning in the same sense.
struct EqualAngles {
  Line2h first_a;
  Line2h first_b;
  Line2h second_a;
  Line2h second_b;
};

/// World length of `first` divided by world length of `second`.
struct LengthRatio {
  Segment first;
  Segment second;
  double ratio = 1.0;
};

using MetricConstraint = std::variant<KnownAngle, EqualAngles, LengthRatio>;

/// Maps `vline` to the line at infinity; last row is proportional to vline.
Homography projective_rectifier(const Line2h& vline);

/// Slope parameter a = -l2/l1 of a line in the affine frame.
double direction_parameter(const Line2h& l);

ConstraintCircle circle_from_known_angle(const Line2h& m, const Line2h& n, double theta);
ConstraintCircle circle_from_equal_angles(double a1, double b1, double a2, double b2);
/// Segments are given in the affine-rectified frame.
ConstraintCircle circle_from_length_ratio(const Segment& i, const Segment& j, double rho);

struct AlphaBeta {
  double alpha = 0.0;
  double beta = 1.0;
  /// Every intersection with beta > 0; more than one means the caller
  /// needs a further constraint to disambiguate.
  std::vector<std::pair<double, double>> candidates;
};

AlphaBeta solve_alpha_beta(const ConstraintCircle& c1, const ConstraintCircle& c2);

Homography affine_rectifier(double alpha, double beta);

/// (alpha, beta) of the affine-frame -> metric map whose linear part is `a`,
/// i.e. the parameters for which affine_rectifier equals `a` up to a
/// similarity.
std::pair<double, double> alpha_beta_of(const Eigen::Matrix2d& a);

/// Matches map world-plane coordinates (x1) to image points (x2).
RectifyResult rectify_polygon(const std::vector<Correspondence>& matches,
                              const std::optional<KnownLength>& known = std::nullopt);

RectifyResult rectify_vanishing_points(const std::vector<Point2h>& vanishing_points,
                                       const std::vector<MetricConstraint>& constraints,
                                       const std::optional<KnownLength>& known = std::nullopt);

RectifyResult rectify_circles(const Conic& e1, const Conic& e2,
                              const std::optional<KnownLength>& known = std::nullopt);

double similarity_scale(const Segment& rectified, double world_length);

double measure_on_plane(const Point2h& p, const Point2h& q, const RectifyResult& rr);

struct Rect {
  int x0 = 0;
  int y0 = 0;
  int width = 0;
  int height = 0;
};

struct WarpedImage {
  ImageRaster image;
  Mask valid;
};

/// Inverse-mapped bilinear warp: output pixel (x, y) of `bounds` samples
/// the source at h^-1 (x, y). Pixels mapping outside the source are zero
/// and marked invalid.
WarpedImage warp_image(const ImageRaster& src, const Homography& h, const Rect& bounds);

/// Similarity-adjusted transform and output rectangle that fit the warped
/// source frame into at most max_dim pixels on its longer side.
std::pair<Homography, Rect> fit_to_box(const Homography& h, int src_width, int src_height,
                                       int max_dim);

}  // namespace geoforge::rectify
