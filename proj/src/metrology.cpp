#include "geoforge/metrology.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "geoforge/error.hpp"

namespace geoforge::metrology {

using geom::Vec3;
using Eigen::Vector4d;

namespace {

Mat3 translate(const Eigen::Vector2d& pp) {
  Mat3 t = Mat3::Identity();
  t(0, 2) = -pp.x();
  t(1, 2) = -pp.y();
  return t;
}

// w = 1 for finite points
Vec3 affine(const Point2h& p, const char* kind, const char* what) {
  if (p.is_ideal()) throw GeoError(kind, what);
  return p.h() / p.h()(2);
}

}  // namespace

CameraMatrix::CameraMatrix(const Mat34& p) : p_(p) {
  if (!p.allFinite()) throw GeoError("InvalidCamera", "camera matrix has non-finite entries");
  const Mat3 m = p.leftCols<3>();
  if (!(std::abs(m.determinant()) > 1e-12 * std::pow(m.norm(), 3)))
    throw GeoError("InvalidCamera", "left 3x3 block of P is singular");
}

Vector4d CameraMatrix::center() const {
  const Mat3 m = p_.leftCols<3>();
  Vector4d c;
  c.head<3>() = -m.inverse() * p_.col(3);
  c(3) = 1.0;
  return c;
}

IAC::IAC(const Mat3& omega) {
  if (!omega.allFinite() || omega.norm() == 0.0)
    throw GeoError("IndefiniteOmega", "omega is zero or non-finite");
  Mat3 w = 0.5 * (omega + omega.transpose());
  w /= w.norm();
  if (w(0, 0) < 0) w = -w;
  const double m1 = w(0, 0);
  const double m2 = w.topLeftCorner<2, 2>().determinant();
  const double m3 = w.determinant();
  if (!(m1 > 0 && m2 > 0 && m3 > 0))
    throw GeoError("IndefiniteOmega", "omega is not positive definite");
  w_ = w;
}

Mat3 IAC::K() const {
  // omega^-1 = K K^T with K upper triangular: Cholesky of the flipped matrix
  Mat3 j = Mat3::Zero();
  j(0, 2) = j(1, 1) = j(2, 0) = 1.0;
  const Mat3 a = j * w_.inverse() * j;
  const Eigen::LLT<Mat3> llt(a);
  if (llt.info() != Eigen::Success) throw GeoError("IndefiniteOmega", "omega^-1 has no Cholesky factor");
  Mat3 k = j * Mat3(llt.matrixL()) * j;
  return k / k(2, 2);
}

Vector4d Plane3::normalized() const {
  const double n = pi.head<3>().norm();
  if (!(n > 0)) throw GeoError("DegeneratePlane", "plane normal is zero");
  return pi / n;
}

IAC iac_from_plane_homography(const Homography& h, const Eigen::Vector2d& pp, bool zero_skew) {
  if (!zero_skew)
    throw GeoError("UnderConstrained", "f, aspect and skew need more than one homography");
  // principal point at the origin, then a scale that keeps the entries O(1)
  Mat3 g = translate(pp) * h.matrix();
  const double sc = std::max(1.0, pp.norm());
  g.topRows<2>() /= sc;
  const Vec3 a = g.col(0), b = g.col(1);
  // omega' = diag(w1, w2, w3) in these coordinates
  Vec3 r1(a(0) * b(0), a(1) * b(1), a(2) * b(2));
  Vec3 r2(a(0) * a(0) - b(0) * b(0), a(1) * a(1) - b(1) * b(1), a(2) * a(2) - b(2) * b(2));
  if (r1.norm() == 0.0 && r2.norm() == 0.0)
    throw GeoError("UnderConstrained", "homography columns carry no constraint");
  if (r1.norm() > 0) r1.normalize();
  if (r2.norm() > 0) r2.normalize();
  Vec3 w = r1.cross(r2);
  if (w.norm() < 1e-10)
    throw GeoError("UnderConstrained", "fronto-parallel view: the two constraints coincide");
  if (w(2) < 0) w = -w;
  if (!(w(0) > 0 && w(1) > 0 && w(2) > 0))
    throw GeoError("IndefiniteOmega", "plane constraints give no positive-definite omega");
  Mat3 s = Mat3::Identity();
  s(0, 0) = s(1, 1) = 1.0 / sc;
  const Mat3 st = s * translate(pp);
  return IAC(st.transpose() * Mat3(w.asDiagonal()) * st);
}

IAC iac_from_orthogonal_vps(const Point2h& vx, const Point2h& vy, const Eigen::Vector2d& pp,
                            bool zero_skew, bool unit_aspect) {
  if (!zero_skew || !unit_aspect)
    throw GeoError("UnderConstrained", "one orthogonal pair fixes only f");
  const Mat3 t = translate(pp);
  const Vec3 a = (t * vx.h()).normalized(), b = (t * vy.h()).normalized();
  if (a.cross(b).norm() < 1e-12) throw GeoError("CoincidentVPs", "vanishing points coincide");
  if (std::abs(a(2) * b(2)) < 1e-14)
    throw GeoError("UnderConstrained", "an ideal vanishing point leaves f free");
  // omega' = diag(1, 1, f^2)
  const double f2 = -(a(0) * b(0) + a(1) * b(1)) / (a(2) * b(2));
  if (!(f2 > 0))
    throw GeoError("NegativeFSquared", "f^2 = " + std::to_string(f2) +
                                           " from the orthogonality of the two vanishing points");
  return IAC(t.transpose() * Vec3(1.0, 1.0, f2).asDiagonal() * t);
}

CameraMatrix camera_from_homography(const Homography& h, const Mat3& k) {
  const Mat3 m = k.inverse() * h.matrix();
  const double s = 0.5 * (m.col(0).norm() + m.col(1).norm());
  Vec3 r1 = m.col(0) / s, r2 = m.col(1) / s, t = m.col(2) / s;
  if (t(2) < 0) {
    // plane in front of the camera
    r1 = -r1;
    r2 = -r2;
    t = -t;
  }
  Mat3 r;
  r << r1, r2, r1.cross(r2);
  if (!(r.determinant() > 1e-12))
    throw GeoError("ReflectionDetected", "h columns are parallel; no rotation fits");
  const Eigen::JacobiSVD<Mat3> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Mat3 rot = svd.matrixU() * svd.matrixV().transpose();
  if (rot.determinant() < 0) throw GeoError("ReflectionDetected", "nearest orthogonal matrix is a reflection");
  Mat34 rt;
  rt << rot, t;
  return CameraMatrix(k * rt);
}

SceneFrame frame_from_camera(const CameraMatrix& p) {
  const Mat34& m = p.matrix();
  SceneFrame f;
  f.horizon = Line2h(Vec3(m.col(0)).cross(Vec3(m.col(1))));
  f.v_z = Point2h(Vec3(m.col(2)));
  return f;
}

SceneFrame frame_from_annotations(const std::vector<Segment>& verticals,
                                  const std::vector<std::vector<Segment>>& ground_groups) {
  if (verticals.size() < 2)
    throw GeoError("UnderConstrained", "vertical vanishing point needs two or more segments");
  if (ground_groups.size() < 2)
    throw GeoError("UnderConstrained", "horizon needs two groups of ground-parallel segments");
  SceneFrame f;
  f.v_z = geom::fit_vanishing_point(verticals).point;
  std::vector<Point2h> vps;
  for (const auto& g : ground_groups) vps.push_back(geom::fit_vanishing_point(g).point);
  f.horizon = vps.size() == 2 ? geom::vanishing_line(vps[0], vps[1]) : geom::fit_line(vps).first;
  return f;
}

namespace {

// alpha Z in the gauge of a unit horizon and a unit v_z
double alpha_z(const Point2h& x, const Point2h& x_top, const Line2h& horizon, const Point2h& v_z) {
  const Vec3 b = affine(x, "BaseOnHorizon", "base point is ideal");
  const Vec3 t = affine(x_top, "DegenerateVertical", "top point is ideal");
  const Vec3 l = horizon.l().normalized();
  const Vec3 v = v_z.unit();
  const double lb = std::abs(l.dot(b));
  if (lb < 1e-12) throw GeoError("BaseOnHorizon", "base point lies on the horizon");
  const double vt = v.cross(t).norm();
  if (vt < 1e-12 * t.norm()) throw GeoError("DegenerateVertical", "top point coincides with v_z");
  return b.cross(t).norm() / (lb * vt);
}

}  // namespace

double measure_height(const Point2h& x, const Point2h& x_top, const Point2h& xr,
                      const Point2h& xr_top, const Line2h& horizon, const Point2h& v_z,
                      double z_ref) {
  if (!(z_ref > 0) || !std::isfinite(z_ref))
    throw GeoError("InvalidReference", "reference height must be positive");
  const double ref = alpha_z(xr, xr_top, horizon, v_z);
  if (!(ref > 0)) throw GeoError("InvalidReference", "reference segment has zero length");
  return z_ref * alpha_z(x, x_top, horizon, v_z) / ref;
}

double calibrate_alpha(SceneFrame& frame, const Point2h& xr, const Point2h& xr_top, double z_ref) {
  if (!(z_ref > 0) || !std::isfinite(z_ref))
    throw GeoError("InvalidReference", "reference height must be positive");
  frame.alpha = alpha_z(xr, xr_top, frame.horizon, frame.v_z) / z_ref;
  return frame.alpha;
}

Plane3 vertical_plane_from_trace(const Line2h& l_trace, const Homography& h) {
  const Vec3 g = h.matrix().transpose() * l_trace.l();
  if (std::hypot(g(0), g(1)) < 1e-12 * g.norm())
    throw GeoError("DegenerateTrace", "trace maps to the ground plane's line at infinity");
  return Plane3{Vector4d(g(0), g(1), 0.0, g(2))};
}

namespace {

// signed sine between the two back-projected directions on plane pi
double parallelism(const Vec3& e1, const Vec3& e2, const Vector4d& pi) {
  const Vec3 n = pi.head<3>();
  const double nn = n.norm();
  if (!(nn > 0)) return std::nan("");
  const Vec3 d1 = e1.cross(n), d2 = e2.cross(n);
  const double den = d1.norm() * d2.norm();
  if (!(den > 1e-14 * nn * nn * e1.norm() * e2.norm())) return std::nan("");
  return d1.cross(d2).dot(n) / (nn * den);
}

}  // namespace

PencilRoot plane_pencil_lambda(const Line2h& l1, const Line2h& l2, const CameraMatrix& p,
                               const Plane3& pi0, const Plane3& pi1, double lambda_max) {
  const Vec3 e1 = (p.matrix().transpose() * l1.l()).head<3>();
  const Vec3 e2 = (p.matrix().transpose() * l2.l()).head<3>();
  auto res = [&](double lam) { return parallelism(e1, e2, pi1.pi + lam * pi0.pi); };

  // sinh spacing: fine near zero, still reaches lambda_max
  const int n = 4001;
  const double umax = std::asinh(lambda_max);
  std::vector<double> lam(n), r(n);
  for (int i = 0; i < n; ++i) {
    lam[i] = std::sinh(-umax + 2.0 * umax * i / (n - 1));
    r[i] = res(lam[i]);
  }
  lam[n / 2] = 0.0;
  r[n / 2] = res(0.0);
  double peak = 0.0;
  for (double x : r)
    if (std::isfinite(x)) peak = std::max(peak, std::abs(x));
  if (peak < 1e-9)
    throw GeoError("DegenerateConfiguration", "the lines are parallel on every plane of the pencil");

  std::vector<double> roots;
  auto add = [&](double x) {
    for (double y : roots)
      if (std::abs(x - y) < 1e-8 * std::max(1.0, std::abs(x))) return;
    roots.push_back(x);
  };
  for (int i = 0; i < n; ++i) {
    if (r[i] == 0.0) add(lam[i]);
    if (i + 1 == n || !std::isfinite(r[i]) || !std::isfinite(r[i + 1])) continue;
    if ((r[i] < 0) == (r[i + 1] < 0) || r[i + 1] == 0.0) continue;
    double a = lam[i], b = lam[i + 1], ra = r[i];
    while (b - a > 1e-10) {
      const double m = 0.5 * (a + b);
      const double rm = res(m);
      if (!std::isfinite(rm)) break;
      if ((rm < 0) == (ra < 0)) {
        a = m;
        ra = rm;
      } else {
        b = m;
      }
    }
    const double x = 0.5 * (a + b);
    // a sign flip through a pole is not a root
    if (std::abs(res(x)) < 1e-6) add(x);
  }
  if (roots.empty())
    throw GeoError("NoRoot", "no plane in the pencil makes the two lines parallel");
  std::sort(roots.begin(), roots.end(),
            [](double x, double y) { return std::abs(x) < std::abs(y); });
  PencilRoot out;
  out.lambda = roots.front();
  out.plane = Plane3{pi1.pi + out.lambda * pi0.pi};
  out.candidates = roots;
  out.multiple = roots.size() > 1;
  return out;
}

Eigen::Vector3d backproject_to_plane(const Point2h& m, const CameraMatrix& p, const Plane3& plane) {
  const Vector4d c = p.center();
  const Vec3 d = p.matrix().leftCols<3>().inverse() * m.h();
  const Vector4d pi = plane.normalized();
  const double pd = pi.head<3>().dot(d);
  if (std::abs(pd) <= 1e-12 * d.norm())
    throw GeoError("RayParallelToPlane", "viewing ray does not meet the plane");
  return c.head<3>() - (pi.dot(c) / pd) * d;
}

double measure_on_plane_3d(const Point2h& m1, const Point2h& m2, const CameraMatrix& p,
                           const Plane3& plane, double scale) {
  return (backproject_to_plane(m1, p, plane) - backproject_to_plane(m2, p, plane)).norm() * scale;
}

std::vector<double> solve_heights(const HeightProblem& p) {
  const SceneFrame f = frame_from_annotations(p.verticals, p.ground_groups);
  std::vector<double> out;
  for (const auto& t : p.targets)
    out.push_back(measure_height(t.first, t.second, p.reference.first, p.reference.second,
                                 f.horizon, f.v_z, p.reference_height));
  return out;
}

HeightSpread height_jitter(const HeightProblem& p, double sigma_px, int samples,
                           std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> noise(0.0, sigma_px);
  auto jit = [&](Point2h& x) {
    if (x.is_ideal()) return;
    const Eigen::Vector2d e = x.euclidean();
    x = Point2h(e.x() + noise(gen), e.y() + noise(gen));
  };
  auto jit_seg = [&](Segment& s) {
    jit(s.first);
    jit(s.second);
  };
  std::vector<std::vector<double>> values(p.targets.size());
  HeightSpread out;
  for (int k = 0; k < samples; ++k) {
    HeightProblem q = p;
    for (auto& s : q.verticals) jit_seg(s);
    for (auto& g : q.ground_groups)
      for (auto& s : g) jit_seg(s);
    jit_seg(q.reference);
    for (auto& s : q.targets) jit_seg(s);
    try {
      const auto z = solve_heights(q);
      for (std::size_t i = 0; i < z.size(); ++i) values[i].push_back(z[i]);
      ++out.samples;
    } catch (const GeoError&) {
      // jitter pushed a point onto the horizon; skip the draw
    }
  }
  for (auto& v : values) {
    if (v.empty()) {
      out.sigma.push_back(std::nan(""));
      continue;
    }
    auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    const double med = *mid;
    for (double& x : v) x = std::abs(x - med);
    std::nth_element(v.begin(), mid, v.end());
    out.sigma.push_back(1.4826 * *mid);
  }
  return out;
}

}  // namespace geoforge::metrology
