#pragma once

#include <string>
#include <utility>
#include <vector>

#include "geoforge/geom.hpp"

namespace geoforge::camera {

using geom::Correspondence;
using geom::Homography;
using geom::Mat3;
using geom::Point2h;

struct CameraIntrinsics {
  double f = 1.0;
  double skew = 0.0;
  double aspect = 1.0;
  double u0 = 0.0;
  double v0 = 0.0;

  Mat3 K() const;
};

/// B = K^-T K^-1 with the principal point at the origin, scaled so B33 = 1.
struct SymmetricB {
  double b11 = 0.0;
  double b12 = 0.0;
  double b22 = 0.0;
};

/// Rank-2, unit Frobenius norm, sign-fixed.
class FundamentalMatrix {
 public:
  FundamentalMatrix() = default;
  explicit FundamentalMatrix(const Mat3& f);
  const Mat3& matrix() const { return f_; }

 private:
  Mat3 f_ = Mat3::Zero();
};

struct EyeAnnotation {
  std::vector<Point2h> left_limbus;
  std::vector<Point2h> right_limbus;
  /// Distance between the eye centers in limbus radii.
  double interocular_world_ratio = 11.0;
};

struct PrincipalPoint {
  double u0 = 0.0;
  double v0 = 0.0;
  double residual = 0.0;
  /// Set when the plane is close to fronto-parallel and the two
  /// constraints barely depend on the principal point.
  bool weak = false;
};

/// Normalized orthogonality and equal-norm residuals of h's first two
/// columns under K.
std::pair<double, double> orthonormality_residuals(const Homography& h, const Mat3& k);

/// Principal point for known focal length f. Of the (generically two)
/// solutions, the one nearest `near` (usually the image center) is kept.
PrincipalPoint principal_point_from_h(const Homography& h, double f,
                                      const Eigen::Vector2d& near);

/// Estimate for T(d) h minus estimate for h.
Eigen::Vector2d translation_shift_check(const Homography& h, double f, const Eigen::Vector2d& d,
                                        const Eigen::Vector2d& near);

/// Homography from the eye-plane model (unit circles centered at (0,0) and
/// (ratio, 0)) to the image.
Homography eye_plane_homography(const EyeAnnotation& e);

/// Least-squares B from two or more plane homographies, with image
/// coordinates relative to the principal point.
SymmetricB estimate_B(const std::vector<Homography>& hs);

double skew_from_B(const SymmetricB& b, double f);

/// Hartley-normalized 8-point; matches satisfy x2^T F x1 = 0.
FundamentalMatrix estimate_fundamental(const std::vector<Correspondence>& matches);

/// Sum over F of (sigma1 - sigma2) / sigma2 of K^T F K, with K = [f s 0; 0 f 0; 0 0 1].
double skew_cost(double f, double s, const std::vector<FundamentalMatrix>& fs);

struct SkewEstimate {
  double f = 0.0;
  double s = 0.0;
  double cost = 0.0;
  /// True when the cost surface barely rises around the minimum.
  bool flat = false;
  std::vector<std::string> diagnostics;
};

/// Grid over f in [f_min, f_max] (log-spaced) and s in [-s_frac f, s_frac f],
/// then a simplex refinement from the best cell.
SkewEstimate minimize_skew(const std::vector<FundamentalMatrix>& fs, double f_min, double f_max,
                           double s_frac = 0.1);

}  // namespace geoforge::camera
