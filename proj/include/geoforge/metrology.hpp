#pragma once

#include <cstdint>
#include <vector>

#include "geoforge/camera.hpp"
#include "geoforge/geom.hpp"

namespace geoforge::metrology {

using camera::CameraIntrinsics;
using geom::Homography;
using geom::Line2h;
using geom::Mat3;
using geom::Point2h;
using geom::Segment;
using Mat34 = Eigen::Matrix<double, 3, 4>;

class CameraMatrix {
 public:
  CameraMatrix() = default;
  explicit CameraMatrix(const Mat34& p);
  const Mat34& matrix() const { return p_; }
  Eigen::Vector4d center() const;

 private:
  Mat34 p_ = Mat34::Zero();
};

/// omega = (K K^T)^-1, symmetric positive definite, scaled to unit Frobenius norm.
class IAC {
 public:
  IAC() = default;
  explicit IAC(const Mat3& omega);
  const Mat3& omega() const { return w_; }
  /// Upper-triangular K with K(2,2) = 1 and K K^T proportional to omega^-1.
  Mat3 K() const;

 private:
  Mat3 w_ = Mat3::Identity();
};

struct Plane3 {
  Eigen::Vector4d pi = Eigen::Vector4d(0, 0, 1, 0);

  /// Plane scaled so its normal has unit length.
  Eigen::Vector4d normalized() const;
};

inline Plane3 reference_plane() { return Plane3{Eigen::Vector4d(0, 0, 1, 0)}; }

/// Zero skew and a known principal point leave f and the aspect ratio,
/// fixed by the orthogonality and equal-norm constraints on h's columns.
IAC iac_from_plane_homography(const Homography& h, const Eigen::Vector2d& pp,
                              bool zero_skew = true);

/// One equation in f^2 (zero skew, unit aspect, known principal point).
IAC iac_from_orthogonal_vps(const Point2h& vx, const Point2h& vy, const Eigen::Vector2d& pp,
                            bool zero_skew = true, bool unit_aspect = true);

/// P = K [r1 r2 r1 x r2 | t] from a world-plane (z = 0) homography.
CameraMatrix camera_from_homography(const Homography& h, const Mat3& k);

/// Vanishing line of z = 0 and vertical vanishing point read off P.
struct SceneFrame {
  Line2h horizon;
  Point2h v_z;
  double alpha = 0.0;  // set by calibrate_alpha
};

SceneFrame frame_from_camera(const CameraMatrix& p);

/// Horizon from two or more groups of ground-parallel segments and v_z from
/// vertical segments.
SceneFrame frame_from_annotations(const std::vector<Segment>& verticals,
                                     const std::vector<std::vector<Segment>>& ground_groups);

/// Height of (x, x_top) from the reference pair (xr, xr_top) of height z_ref.
double measure_height(const Point2h& x, const Point2h& x_top, const Point2h& xr,
                      const Point2h& xr_top, const Line2h& horizon, const Point2h& v_z,
                      double z_ref);

/// alpha of Eq 50 from a reference pair of known height; stored in the frame.
double calibrate_alpha(SceneFrame& frame, const Point2h& xr, const Point2h& xr_top, double z_ref);

/// Vertical plane through the ground line imaged as l_trace; h maps the
/// ground plane (X, Y, 1) to the image (the inverse of a rectifier).
Plane3 vertical_plane_from_trace(const Line2h& l_trace, const Homography& h);

struct PencilRoot {
  double lambda = 0.0;
  Plane3 plane;
  std::vector<double> candidates;
  bool multiple = false;
};

/// lambda such that the two image lines back-project onto pi1 + lambda pi0
/// as parallel 3D lines.
PencilRoot plane_pencil_lambda(const Line2h& l1, const Line2h& l2, const CameraMatrix& p,
                               const Plane3& pi0, const Plane3& pi1, double lambda_max = 1e3);

Eigen::Vector3d backproject_to_plane(const Point2h& m, const CameraMatrix& p, const Plane3& plane);

double measure_on_plane_3d(const Point2h& m1, const Point2h& m2, const CameraMatrix& p,
                           const Plane3& plane, double scale = 1.0);

/// Everything a height check reads from the annotations.
struct HeightProblem {
  std::vector<Segment> verticals;
  std::vector<std::vector<Segment>> ground_groups;
  Segment reference;  // foot, top
  double reference_height = 1.0;
  std::vector<Segment> targets;
};

std::vector<double> solve_heights(const HeightProblem& p);

struct HeightSpread {
  std::vector<double> sigma;  // per target, robust (MAD-based)
  int samples = 0;
};

/// Re-solves with every annotated point jittered by N(0, sigma_px).
HeightSpread height_jitter(const HeightProblem& p, double sigma_px, int samples,
                           std::uint64_t seed);

}  // namespace geoforge::metrology
