#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "geoforge/error.hpp"
#include "geoforge/metrology.hpp"
#include "geoforge/rectify.hpp"
#include "synth.hpp"

using namespace geoforge;
using namespace geoforge::metrology;
using synth::Mat34;
using synth::Vec2;
using synth::Vec3;

namespace {

Point2h pt(const Vec2& v) { return Point2h(v.x(), v.y()); }
Segment seg(const synth::Seg2& s) { return {pt(s.first), pt(s.second)}; }

// ground-plane camera with a random oblique view of the origin. Some roll
// is needed: with the image x axis parallel to the plane, one homography
// cannot separate f from the aspect ratio.
Mat34 oblique_camera(synth::Rng& r, double f, double aspect = 1.0, double roll = 0.0) {
  const Mat3 k = synth::intrinsics(f, 320, 240, 0.0, aspect);
  const double az = r.uniform(-synth::kPi, synth::kPi);
  const Vec3 eye(10 * std::cos(az), 10 * std::sin(az), r.uniform(3, 8));
  const Mat3 rot = synth::rot_z(roll) * synth::look_at(eye, Vec3(r.uniform(-1, 1), r.uniform(-1, 1), 0));
  return synth::camera(k, rot, eye);
}

double rel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const Eigen::MatrixXd an = a / a.norm(), bn = b / b.norm();
  return std::min((an - bn).norm(), (an + bn).norm());
}

HeightProblem problem(const synth::HeightScene& sc) {
  HeightProblem p;
  for (const auto& s : sc.verticals) p.verticals.push_back(seg(s));
  p.verticals.push_back(seg(sc.reference));
  p.verticals.push_back(seg(sc.target));
  for (const auto& g : sc.ground) {
    p.ground_groups.emplace_back();
    for (const auto& s : g) p.ground_groups.back().push_back(seg(s));
  }
  p.reference = seg(sc.reference);
  p.reference_height = sc.z_ref;
  p.targets = {seg(sc.target)};
  return p;
}

void jitter(HeightProblem& p, synth::Rng& r, double sigma) {
  auto j = [&](Point2h& x) {
    const auto e = x.euclidean();
    x = Point2h(e.x() + r.normal(sigma), e.y() + r.normal(sigma));
  };
  auto js = [&](Segment& s) {
    j(s.first);
    j(s.second);
  };
  for (auto& s : p.verticals) js(s);
  for (auto& g : p.ground_groups)
    for (auto& s : g) js(s);
  // reference and target are also verticals: jitter them once, then copy
  js(p.reference);
  js(p.targets[0]);
  p.verticals[p.verticals.size() - 2] = p.reference;
  p.verticals.back() = p.targets[0];
}

}  // namespace

TEST_CASE("IAC from a plane homography recovers f and aspect") {
  synth::Rng r(1);
  for (double aspect : {1.0, 1.1, 0.93}) {
    for (int k = 0; k < 10; ++k) {
      const Mat34 p = oblique_camera(r, 900, aspect, r.uniform(0.2, 0.6));
      const IAC w = iac_from_plane_homography(Homography(synth::ground_homography(p)), {320, 240});
      const Mat3 kk = w.K();
      CHECK(std::abs(kk(0, 0) - 900) < 1e-6);
      CHECK(std::abs(kk(1, 1) / kk(0, 0) - aspect) < 1e-6);
      CHECK(std::abs(kk(0, 1)) < 1e-6);
      CHECK(std::abs(kk(0, 2) - 320) < 1e-6);
      CHECK(std::abs(kk(1, 2) - 240) < 1e-6);
      // factorization round trip
      CHECK(rel(kk * kk.transpose(), w.omega().inverse()) < 1e-9);
    }
  }
}

TEST_CASE("IAC from a plane homography: degenerate and invalid input") {
  const Mat3 k = synth::intrinsics(800, 320, 240);
  Mat3 rt;
  rt << synth::rot_z(0.3).leftCols<2>(), Vec3(0.1, -0.2, 5);
  CHECK_THROWS_WITH(iac_from_plane_homography(Homography(k * rt), {320, 240}),
                    doctest::Contains("UnderConstrained"));
  synth::Rng r(2);
  // zero roll
  CHECK_THROWS_WITH(iac_from_plane_homography(Homography(synth::ground_homography(oblique_camera(r, 800))), {320, 240}),
                    doctest::Contains("UnderConstrained"));
  const Homography h(synth::ground_homography(oblique_camera(r, 800)));
  CHECK_THROWS_WITH(iac_from_plane_homography(h, {320, 240}, false),
                    doctest::Contains("UnderConstrained"));
  // a projective (non-metric) warp of the plane breaks the constraints
  Mat3 bad = synth::ground_homography(oblique_camera(r, 800, 1.0, 0.3));
  Mat3 shear = Mat3::Identity();
  shear(0, 1) = 3.0;
  shear(0, 0) = 0.2;
  bool indefinite = false;
  for (int i = 0; i < 20 && !indefinite; ++i) {
    try {
      iac_from_plane_homography(Homography(bad * shear), {320, 240});
    } catch (const GeoError& e) {
      indefinite = e.kind() == "IndefiniteOmega";
    }
    bad = synth::ground_homography(oblique_camera(r, 800, 1.0, 0.3));
    shear(0, 1) = r.uniform(-5, 5);
    shear(1, 0) = r.uniform(-5, 5);
  }
  CHECK(indefinite);
}

TEST_CASE("IAC from orthogonal vanishing points") {
  synth::Rng r(3);
  for (int k = 0; k < 20; ++k) {
    const double f = r.uniform(500, 1200);
    const Mat34 p = oblique_camera(r, f, 1.0, r.uniform(-0.6, 0.6));
    // images of the x and y directions of the ground plane
    const Point2h vx(Vec3(p.col(0))), vy(Vec3(p.col(1)));
    const IAC w = iac_from_orthogonal_vps(vx, vy, {320, 240});
    CHECK(std::abs(w.K()(0, 0) - f) < 1e-6);
    CHECK(std::abs(vx.unit().dot(w.omega() * vy.unit())) < 1e-12);
    // the plane homography on the same scene gives the same omega
    const IAC wh = iac_from_plane_homography(Homography(synth::ground_homography(p)), {320, 240});
    CHECK(rel(w.omega(), wh.omega()) < 1e-6);
  }
  // both vanishing points on the same side of the principal point
  CHECK_THROWS_WITH(iac_from_orthogonal_vps(Point2h(400, 240), Point2h(500, 250), {320, 240}),
                    doctest::Contains("NegativeFSquared"));
  CHECK_THROWS_WITH(iac_from_orthogonal_vps(Point2h(400, 240), Point2h(800, 480, 2), {320, 240}),
                    doctest::Contains("CoincidentVPs"));
  CHECK_THROWS_WITH(iac_from_orthogonal_vps(Point2h(400, 240), Point2h(0, 500), {320, 240}, true, false),
                    doctest::Contains("UnderConstrained"));
}

TEST_CASE("camera from a plane homography") {
  synth::Rng r(4);
  for (int k = 0; k < 20; ++k) {
    const double f = r.uniform(600, 1000);
    const Mat34 p = oblique_camera(r, f);
    const Mat3 h = synth::ground_homography(p);
    const Mat3 kk = synth::intrinsics(f, 320, 240);
    const CameraMatrix cam = camera_from_homography(Homography(h), kk);
    CHECK(rel(cam.matrix(), p) < 1e-9);
    Mat3 back;
    back << cam.matrix().col(0), cam.matrix().col(1), cam.matrix().col(3);
    CHECK(rel(back, h) < 1e-9);
    const Mat3 rot = kk.inverse() * cam.matrix().leftCols<3>();
    CHECK((rot.transpose() * rot - Mat3::Identity()).norm() < 1e-10);
    CHECK(rot.determinant() > 0);
  }
  // a flipped sign of h still puts the plane in front
  synth::Rng r2(5);
  const Mat34 p = oblique_camera(r2, 700);
  const CameraMatrix cam =
      camera_from_homography(Homography(-synth::ground_homography(p)), synth::intrinsics(700, 320, 240));
  CHECK(rel(cam.matrix(), p) < 1e-9);
  Mat3 flat = Mat3::Identity();
  flat.col(1) = flat.col(0);
  flat(2, 1) = 1e-3;
  CHECK_THROWS(camera_from_homography(Homography(flat), synth::intrinsics(700, 320, 240)));
}

TEST_CASE("height from a reference: exact cases") {
  synth::Rng r(6);
  for (int k = 0; k < 50; ++k) {
    const auto sc = synth::height_scene(r);
    const SceneFrame f = frame_from_camera(CameraMatrix(sc.p));
    const Point2h xr = pt(sc.reference.first), xrt = pt(sc.reference.second);
    const Point2h x = pt(sc.target.first), xt = pt(sc.target.second);
    CHECK(measure_height(xr, xrt, xr, xrt, f.horizon, f.v_z, sc.z_ref) == sc.z_ref);
    const double z = measure_height(x, xt, xr, xrt, f.horizon, f.v_z, sc.z_ref);
    CHECK(std::abs(z - sc.z_target) < 1e-6 * sc.z_target);
    CHECK(measure_height(x, xt, xr, xrt, f.horizon, f.v_z, 2 * sc.z_ref) == doctest::Approx(2 * z).epsilon(1e-14));
    // frame estimated from the annotations instead of P
    const auto zs = solve_heights(problem(sc));
    CHECK(std::abs(zs[0] - sc.z_target) < 1e-6 * sc.z_target);
    for (const auto& v : sc.verticals) {
      const double zv = measure_height(pt(v.first), pt(v.second), xr, xrt, f.horizon, f.v_z, sc.z_ref);
      CHECK(zv > 59.9);
      CHECK(zv < 120.1);
    }
  }
}

TEST_CASE("height restaging of the two-person example") {
  synth::Rng r(7);
  const auto sc = synth::height_scene(r);
  const double z = solve_heights(problem(sc))[0];
  CHECK(std::abs(z - 68.75) < 0.01);
}

TEST_CASE("height with pixel noise") {
  synth::Rng r(8);
  std::vector<double> err;
  for (int k = 0; k < 200; ++k) {
    const auto sc = synth::height_scene(r);
    auto p = problem(sc);
    jitter(p, r, 0.5);
    err.push_back(std::abs(solve_heights(p)[0] - sc.z_target) / sc.z_target);
  }
  std::nth_element(err.begin(), err.begin() + 100, err.end());
  MESSAGE("median relative error " << err[100]);
  CHECK(err[100] < 0.02);
}

TEST_CASE("height errors and alpha") {
  synth::Rng r(9);
  const auto sc = synth::height_scene(r);
  SceneFrame f = frame_from_camera(CameraMatrix(sc.p));
  const Point2h xr = pt(sc.reference.first), xrt = pt(sc.reference.second);
  // a base on the horizon
  const Vec3 l = f.horizon.l();
  const Point2h on(Vec3(l.cross(Vec3(l.y(), -l.x(), 0))));
  CHECK_THROWS_WITH(measure_height(on, xrt, xr, xrt, f.horizon, f.v_z, 64.75),
                    doctest::Contains("BaseOnHorizon"));
  CHECK_THROWS_WITH(measure_height(xr, f.v_z, xr, xrt, f.horizon, f.v_z, 64.75),
                    doctest::Contains("DegenerateVertical"));
  CHECK_THROWS_WITH(measure_height(xr, xrt, xr, xrt, f.horizon, f.v_z, -1.0),
                    doctest::Contains("InvalidReference"));
  const double a = calibrate_alpha(f, xr, xrt, sc.z_ref);
  CHECK(a > 0);
  CHECK(f.alpha == a);
  CHECK_THROWS_WITH(frame_from_annotations({}, {}), doctest::Contains("UnderConstrained"));
}

TEST_CASE("claimed height contradicted beyond the jitter tolerance") {
  synth::Rng r(10);
  int authentic_ok = 0, fake_flagged = 0;
  for (int k = 0; k < 10; ++k) {
    const auto sc = synth::height_scene(r);
    auto p = problem(sc);
    jitter(p, r, 0.5);
    const double z = solve_heights(p)[0];
    const auto spread = height_jitter(p, 0.5, 200, 100 + k);
    REQUIRE(spread.samples > 150);
    const double tol = 3.0 * spread.sigma[0];
    authentic_ok += std::abs(z - sc.z_target) <= tol;
    // the same object claimed as 20% shorter than it measures
    fake_flagged += std::abs(z - 0.8 * sc.z_target) > tol;
  }
  CHECK(authentic_ok >= 9);
  CHECK(fake_flagged == 10);
}

TEST_CASE("vertical plane from a ground trace") {
  synth::Rng r(11);
  for (int k = 0; k < 20; ++k) {
    const Mat34 p = oblique_camera(r, 800);
    const Vec3 a(r.uniform(-2, 2), r.uniform(-2, 2), 0), b(r.uniform(-2, 2), r.uniform(-2, 2), 0);
    const Line2h trace = geom::line_through(pt(synth::project(p, a)), pt(synth::project(p, b)));
    const Plane3 pl = vertical_plane_from_trace(trace, Homography(synth::ground_homography(p)));
    CHECK(pl.pi(2) == 0.0);
    const Eigen::Vector4d n = pl.normalized();
    for (int j = 0; j < 10; ++j) {
      const Vec3 m = a + r.uniform(-3, 3) * (b - a) + Vec3(0, 0, r.uniform(0, 5));
      CHECK(std::abs(n.dot(m.homogeneous())) < 1e-9);
    }
    // trace through the world origin
    const Line2h t0 = geom::line_through(pt(synth::project(p, Vec3::Zero())), pt(synth::project(p, a)));
    CHECK(std::abs(vertical_plane_from_trace(t0, Homography(synth::ground_homography(p))).normalized()(3)) < 1e-12);
  }
  synth::Rng r2(12);
  const Mat34 p = oblique_camera(r2, 800);
  const Mat3 h = synth::ground_homography(p);
  // image of the ground's line at infinity
  const Line2h horizon(Vec3(h.inverse().transpose() * Vec3(0, 0, 1)));
  CHECK_THROWS_WITH(vertical_plane_from_trace(horizon, Homography(h)), doctest::Contains("DegenerateTrace"));
}

TEST_CASE("plane pencil root") {
  synth::Rng r(13);
  for (int k = 0; k < 20; ++k) {
    const Mat34 p = oblique_camera(r, 800);
    const CameraMatrix cam(p);
    const Vec3 a(r.uniform(-1, 1), r.uniform(-1, 1), 0), b(r.uniform(-1, 1), r.uniform(-1, 1), 0);
    const Line2h trace = geom::line_through(pt(synth::project(p, a)), pt(synth::project(p, b)));
    const Plane3 pi1 = vertical_plane_from_trace(trace, Homography(synth::ground_homography(p)));
    const double lam = k == 0 ? 0.0 : r.uniform(-2, 2) * pi1.pi.head<3>().norm();
    const Plane3 pi2{pi1.pi + lam * reference_plane().pi};
    // two parallel lines on pi2, across the trace direction
    const Vec3 n = pi2.pi.head<3>();
    const Vec3 u = (b - a).normalized();
    const Vec3 w = n.cross(u).normalized();
    auto img_line = [&](const Vec3& x0) {
      return geom::line_through(pt(synth::project(p, x0)), pt(synth::project(p, x0 + w)));
    };
    const Line2h l1 = img_line(a), l2 = img_line(a + 0.8 * u);
    const PencilRoot root = plane_pencil_lambda(l1, l2, cam, reference_plane(), pi1);
    const bool found = std::any_of(root.candidates.begin(), root.candidates.end(),
                                   [&](double c) { return std::abs(c - lam) < 1e-6; });
    CHECK(found);
    CHECK(std::abs(root.lambda - lam) < 1e-6);
    // the trace line lies on every member of the pencil
    for (double t : {-1.0, 0.5, 2.0})
      CHECK(std::abs(root.plane.normalized().dot((a + t * (b - a)).homogeneous())) < 1e-9);
  }
  // lines parallel on the ground itself: only lambda -> infinity
  synth::Rng r2(14);
  const Mat34 p = oblique_camera(r2, 800);
  const Vec3 a(0.3, -0.2, 0), b(-0.5, 0.6, 0);
  const Line2h trace = geom::line_through(pt(synth::project(p, a)), pt(synth::project(p, b)));
  const Plane3 pi1 = vertical_plane_from_trace(trace, Homography(synth::ground_homography(p)));
  const Vec3 w = Vec3::UnitZ().cross(b - a);
  auto img_line = [&](const Vec3& x0) {
    return geom::line_through(pt(synth::project(p, x0)), pt(synth::project(p, x0 + w)));
  };
  CHECK_THROWS_WITH(plane_pencil_lambda(img_line(a), img_line(b), CameraMatrix(p), reference_plane(), pi1),
                    doctest::Contains("NoRoot"));
  // lines along the trace are parallel on every plane of the pencil
  auto along = [&](const Vec3& x0) {
    return geom::line_through(pt(synth::project(p, x0)), pt(synth::project(p, x0 + (b - a))));
  };
  CHECK_THROWS_WITH(plane_pencil_lambda(along(a), along(a + Vec3(0, 0, 1)), CameraMatrix(p), reference_plane(), pi1),
                    doctest::Contains("DegenerateConfiguration"));
}

TEST_CASE("back-projection onto a plane") {
  synth::Rng r(15);
  for (int k = 0; k < 20; ++k) {
    const Mat34 p = oblique_camera(r, 800);
    const CameraMatrix cam(p);
    const Vec3 nrm = Vec3(r.uniform(-1, 1), r.uniform(-1, 1), r.uniform(-1, 1)).normalized();
    const Vec3 m0(r.uniform(-1, 1), r.uniform(-1, 1), r.uniform(0, 2));
    const Plane3 pl{Eigen::Vector4d(nrm.x(), nrm.y(), nrm.z(), -nrm.dot(m0))};
    const Vec3 x = backproject_to_plane(pt(synth::project(p, m0)), cam, pl);
    CHECK((x - m0).norm() < 1e-9);
    const Vec3 img = p * x.homogeneous();
    const Vec3 m = synth::project(p, m0).homogeneous();
    CHECK(img.cross(m).norm() / (img.norm() * m.norm()) < 1e-9);
    CHECK(std::abs(pl.normalized().dot(x.homogeneous())) < 1e-9);
    // the point below the camera lands on the ground
    const Vec3 c = cam.center().head<3>();
    const Vec3 below = backproject_to_plane(pt(synth::project(p, Vec3(c.x(), c.y(), 0))), cam, reference_plane());
    CHECK(below.z() == doctest::Approx(0.0).epsilon(1e-12));
    // a plane containing the viewing ray's direction but not the camera
    const Vec3 d = m0 - c;
    const Vec3 n2 = d.cross(Vec3(0.3, 0.1, 1)).normalized();
    const Plane3 par{Eigen::Vector4d(n2.x(), n2.y(), n2.z(), -n2.dot(c) + 1.0)};
    CHECK_THROWS_WITH(backproject_to_plane(pt(synth::project(p, m0)), cam, par),
                      doctest::Contains("RayParallelToPlane"));
  }
}

TEST_CASE("measurements on a wall") {
  synth::Rng r(16);
  for (int k = 0; k < 10; ++k) {
    const Mat34 p = oblique_camera(r, 800);
    const Vec3 a(r.uniform(-1, 1), r.uniform(-1, 1), 0), b(r.uniform(-1, 1), r.uniform(-1, 1), 0);
    const Line2h trace = geom::line_through(pt(synth::project(p, a)), pt(synth::project(p, b)));
    const Plane3 wall = vertical_plane_from_trace(trace, Homography(synth::ground_homography(p)));
    const Vec3 u = (b - a).normalized();
    const double ang = r.uniform(0, synth::kPi);
    const Vec3 m1 = a + Vec3(0, 0, 0.5);
    const Vec3 m2 = m1 + 2.4 * (std::cos(ang) * u + std::sin(ang) * Vec3::UnitZ());
    const Point2h i1 = pt(synth::project(p, m1)), i2 = pt(synth::project(p, m2));
    CHECK(std::abs(measure_on_plane_3d(i1, i2, CameraMatrix(p), wall) - 2.4) < 1e-6);
    CHECK(measure_on_plane_3d(i1, i1, CameraMatrix(p), wall) == 0.0);
    // a similarity applied to the image and to P together
    Mat3 s = 1.7 * synth::rot_z(0.4);
    s(2, 2) = 1.0;
    s(0, 2) = 30;
    s(1, 2) = -12;
    const Point2h j1(Vec3(s * i1.h())), j2(Vec3(s * i2.h()));
    CHECK(std::abs(measure_on_plane_3d(j1, j2, CameraMatrix(s * p), wall) - 2.4) < 1e-6);
  }
}

TEST_CASE("ground lengths agree with rectification") {
  synth::Rng r(17);
  for (int k = 0; k < 10; ++k) {
    const Mat34 p = oblique_camera(r, 800);
    std::vector<geom::Correspondence> m;
    for (const Vec2 w : {Vec2(-1, -1), Vec2(1, -1), Vec2(1, 1), Vec2(-1, 1)})
      m.push_back({pt(w), pt(synth::project(p, Vec3(w.x(), w.y(), 0)))});
    const rectify::KnownLength known{{m[0].x2, m[1].x2}, 2.0};
    const auto rr = rectify::rectify_polygon(m, known);
    const Vec3 a(r.uniform(-1, 1), r.uniform(-1, 1), 0), b(r.uniform(-1, 1), r.uniform(-1, 1), 0);
    const Point2h ia = pt(synth::project(p, a)), ib = pt(synth::project(p, b));
    const double d1 = rectify::measure_on_plane(ia, ib, rr);
    const double d2 = measure_on_plane_3d(ia, ib, CameraMatrix(p), reference_plane());
    CHECK(std::abs(d1 - d2) < 1e-3 * d2);
  }
}
