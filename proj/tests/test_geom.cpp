#include <doctest.h>

#include <cmath>

#include "geoforge/geom.hpp"
#include "synth.hpp"

using namespace geoforge;
using namespace geoforge::geom;

namespace {

Point2h on_x_axis(double t) { return Point2h(t, 0.0); }

Point2h map(const Mat3& h, const Point2h& p) { return Point2h(h * p.h()); }

double rel_frobenius(const Mat3& a, const Mat3& b) {
  Mat3 x = a / a.norm(), y = b / b.norm();
  if ((x - y).norm() > (x + y).norm()) y = -y;
  return (x - y).norm();
}

}  // namespace

TEST_CASE("cross ratio: harmonic set with an ideal point") {
  const double cr = cross_ratio(on_x_axis(0), on_x_axis(2), on_x_axis(1), Point2h(1, 0, 0));
  CHECK(cr == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("cross ratio: 1-D coordinates 0,1,2,3") {
  // ((0-2)(1-3)) / ((0-3)(1-2)) = 4/3
  const double cr = cross_ratio(on_x_axis(0), on_x_axis(1), on_x_axis(2), on_x_axis(3));
  CHECK(cr == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("cross ratio: projective invariance and scale equivalence") {
  synth::Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec3 base(rng.uniform(0, 640), rng.uniform(0, 480), 1);
    const Vec3 dir(std::cos(rng.uniform(0, 6.3)), std::sin(rng.uniform(0, 6.3)), 0);
    std::array<Point2h, 4> p;
    for (int i = 0; i < 4; ++i) p[i] = Point2h(base + (40.0 * i + rng.uniform(0, 30)) * dir);
    const double cr = cross_ratio(p[0], p[1], p[2], p[3]);
    const Mat3 h = synth::random_homography(rng);
    const double crh = cross_ratio(map(h, p[0]), map(h, p[1]), map(h, p[2]), map(h, p[3]));
    CHECK(std::abs(cr - crh) < 1e-9);
    for (double s : {-3.0, 1e-8, 1e8}) {
      const double crs = cross_ratio(Point2h(s * p[0].h()), p[1], Point2h(s * p[2].h()), p[3]);
      CHECK(std::abs(cr - crs) < 1e-9);
    }
  }
}

TEST_CASE("cross ratio: errors") {
  CHECK_THROWS_WITH_AS(cross_ratio(on_x_axis(0), on_x_axis(1), Point2h(2, 1), on_x_axis(3)),
                       doctest::Contains("NotCollinear"), GeoError);
  CHECK_THROWS_WITH_AS(cross_ratio(on_x_axis(0), on_x_axis(1), on_x_axis(1), on_x_axis(3)),
                       doctest::Contains("DegenerateQuadruple"), GeoError);
}

TEST_CASE("line_through and meet") {
  const Vec3 x_axis = line_through(Point2h(0, 0), Point2h(1, 0)).canonical();
  CHECK(x_axis.cross(Vec3(0, -1, 0)).norm() < 1e-15);

  const Line2h l = line_through(Point2h(1, 1), Point2h(2, 2));
  CHECK(std::abs(l.canonical().dot(Vec3(1, 1, 1))) < 1e-12);
  CHECK(std::abs(l.canonical().dot(Vec3(2, 2, 1))) < 1e-12);

  const Vec3 inf = line_through(Point2h(1, 0, 0), Point2h(0, 1, 0)).canonical();
  CHECK((inf - Vec3(0, 0, 1)).norm() < 1e-15);

  CHECK(meet(Line2h(0, 1, 0), Line2h(1, 0, 0)).normalized().isApprox(Vec3(0, 0, 1)));
  const Vec3 ideal = meet(Line2h(1, 0, -1), Line2h(1, 0, -2)).normalized();
  CHECK(ideal.cross(Vec3(0, 1, 0)).norm() < 1e-15);

  CHECK_THROWS_AS(line_through(Point2h(1, 2), Point2h(2, 4, 2)), GeoError);

  synth::Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    const Line2h a(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-500, 500));
    const Line2h b(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-500, 500));
    const Vec3 p = meet(a, b).h().normalized();
    CHECK(std::abs(a.canonical().dot(p)) < 1e-12);
    CHECK(std::abs(b.canonical().dot(p)) < 1e-12);
  }
}

TEST_CASE("incidence duality and scale equivalence") {
  synth::Rng rng(11);
  for (int i = 0; i < 50; ++i) {
    const Point2h p(rng.uniform(0, 640), rng.uniform(0, 480));
    const Point2h q(rng.uniform(0, 640), rng.uniform(0, 480));
    const Point2h r(rng.uniform(0, 640), rng.uniform(0, 480));
    const Vec3 m = meet(line_through(p, q), line_through(p, r)).normalized();
    CHECK((m - p.normalized()).norm() < 1e-9);
    const Vec3 l0 = line_through(p, q).canonical();
    for (double s : {-3.0, 1e-8, 1e8}) {
      CHECK((line_through(Point2h(s * p.h()), q).canonical() - l0).norm() < 1e-12);
    }
  }
}

TEST_CASE("fit_vanishing_point") {
  SUBCASE("two concurrent segments") {
    const auto fit = fit_vanishing_point({{Point2h(0, 0), Point2h(1, 1)}, {Point2h(4, 0), Point2h(3, 1)}});
    CHECK((fit.point.normalized() - Vec3(2, 2, 1)).norm() < 1e-9);
    CHECK(fit.residual < 1e-12);
  }
  SUBCASE("noisy bundle through (100, 50)") {
    synth::Rng rng(5);
    std::vector<Segment> segs;
    for (int i = 0; i < 5; ++i) {
      const double a = 0.3 + 0.5 * i;
      const Eigen::Vector2d d(std::cos(a), std::sin(a));
      const Eigen::Vector2d p = Eigen::Vector2d(100, 50) + 150 * d;
      const Eigen::Vector2d q = Eigen::Vector2d(100, 50) + 450 * d;
      segs.push_back({Point2h(p.x() + rng.normal(0.2), p.y() + rng.normal(0.2)),
                      Point2h(q.x() + rng.normal(0.2), q.y() + rng.normal(0.2))});
    }
    const auto fit = fit_vanishing_point(segs);
    CHECK((fit.point.euclidean() - Eigen::Vector2d(100, 50)).norm() < 1.0);
  }
  SUBCASE("parallel 3-D lines under a known camera") {
    const auto k = synth::intrinsics(800, 320, 240);
    const auto r = synth::look_at({-4, -6, 3}, {0, 0, 0});
    const auto p = synth::camera(k, r, {-4, -6, 3});
    const synth::Vec3 dir(1, 0.3, 0);
    std::vector<Segment> segs;
    for (double y : {-1.0, 0.0, 1.5}) {
      const synth::Vec3 a(0, y, 0);
      const auto ia = synth::project(p, a);
      const auto ib = synth::project(p, a + 2 * dir);
      segs.push_back({Point2h(ia.x(), ia.y()), Point2h(ib.x(), ib.y())});
    }
    const Vec3 truth = k * r * dir;
    const auto fit = fit_vanishing_point(segs);
    CHECK((fit.point.normalized() - truth / truth(2)).norm() < 1e-6);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(fit_vanishing_point({{Point2h(0, 0), Point2h(1, 1)}}), GeoError);
    CHECK_THROWS_WITH(fit_vanishing_point({{Point2h(0, 0), Point2h(1, 1)}, {Point2h(2, 2), Point2h(3, 3)}}),
                      doctest::Contains("DegenerateBundle"));
  }
}

TEST_CASE("vanishing_line of a synthetic ground plane matches the true horizon") {
  const auto k = synth::intrinsics(900, 320, 240);
  const auto r = synth::look_at({-3, -8, 2.5}, {1, 0, 0});
  const auto p = synth::camera(k, r, {-3, -8, 2.5});
  const Vec3 vx = k * r * Vec3(1, 0, 0);
  const Vec3 vy = k * r * Vec3(0, 1, 0);
  const Vec3 truth = synth::ground_homography(p).inverse().transpose() * Vec3(0, 0, 1);
  const Vec3 l = vanishing_line(Point2h(vx), Point2h(vy)).canonical();
  CHECK(l.cross(truth.normalized()).norm() < 1e-9);
}

TEST_CASE("dlt_homography") {
  SUBCASE("identity") {
    std::vector<Correspondence> m;
    for (auto [x, y] : {std::pair{0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}, {0.0, 1.0}})
      m.push_back({Point2h(x, y), Point2h(x, y)});
    CHECK(rel_frobenius(dlt_homography(m).matrix(), Mat3::Identity()) < 1e-12);
  }
  SUBCASE("random H round trip") {
    synth::Rng rng(21);
    for (int trial = 0; trial < 20; ++trial) {
      const Mat3 h = synth::random_homography(rng);
      std::vector<Correspondence> m;
      for (int i = 0; i < 10; ++i) {
        const Eigen::Vector2d x(rng.uniform(0, 640), rng.uniform(0, 480));
        const auto y = synth::apply(h, x);
        m.push_back({Point2h(x.x(), x.y()), Point2h(y.x(), y.y())});
      }
      CHECK(rel_frobenius(dlt_homography(m).matrix(), h) < 1e-9);
    }
  }
  SUBCASE("unit square to quadrilateral") {
    const std::array<Eigen::Vector2d, 4> quad{Eigen::Vector2d(10, 20), {300, 40}, {280, 260}, {30, 210}};
    const std::array<Eigen::Vector2d, 4> sq{Eigen::Vector2d(0, 0), {1, 0}, {1, 1}, {0, 1}};
    std::vector<Correspondence> m;
    for (int i = 0; i < 4; ++i) m.push_back({Point2h(sq[i].x(), sq[i].y()), Point2h(quad[i].x(), quad[i].y())});
    const Homography h = dlt_homography(m);
    for (int i = 0; i < 4; ++i) CHECK((h.apply(m[i].x1).euclidean() - quad[i]).norm() < 1e-10);
  }
  SUBCASE("degenerate and insufficient") {
    std::vector<Correspondence> m{{Point2h(0, 0), Point2h(0, 0)}, {Point2h(1, 0), Point2h(1, 0)},
                                  {Point2h(2, 0), Point2h(2, 0)}};
    CHECK_THROWS_WITH(dlt_homography(m), doctest::Contains("InsufficientMatches"));
    m.push_back({Point2h(3, 0), Point2h(3, 1)});
    CHECK_THROWS_WITH(dlt_homography(m), doctest::Contains("DegenerateConfiguration"));
  }
}

TEST_CASE("Homography canonical form") {
  const Homography a(Mat3::Identity() * -5.0);
  CHECK(a.matrix().norm() == doctest::Approx(1.0));
  CHECK(a.matrix()(0, 0) > 0);
  CHECK_THROWS_WITH(Homography(Mat3::Zero()), doctest::Contains("NonInvertible"));
}

TEST_CASE("fit_conic") {
  SUBCASE("unit circle") {
    std::vector<Point2h> pts;
    for (int i = 0; i < 5; ++i) pts.emplace_back(std::cos(1.2 * i), std::sin(1.2 * i));
    const Mat3 c = fit_conic(pts).conic.matrix();
    CHECK(rel_frobenius(c, Eigen::Vector3d(1, 1, -1).asDiagonal().toDenseMatrix()) < 1e-10);
  }
  SUBCASE("exact ellipse, containment") {
    std::vector<Point2h> pts;
    for (int i = 0; i < 8; ++i) {
      const double t = 0.7 * i;
      const double x = 40 * std::cos(t), y = 15 * std::sin(t);
      pts.emplace_back(300 + 0.8 * x - 0.6 * y, 200 + 0.6 * x + 0.8 * y);
    }
    const auto fit = fit_conic(pts);
    for (const auto& p : pts) CHECK(std::abs(fit.conic.algebraic_residual(p)) < 1e-10);
    CHECK(fit.residual < 1e-10);
  }
  SUBCASE("noisy ellipse center") {
    synth::Rng rng(4);
    std::vector<Point2h> pts;
    for (int i = 0; i < 20; ++i) {
      const double t = 2 * synth::kPi * i / 20;
      pts.emplace_back(200 + 60 * std::cos(t) + rng.normal(0.3), 150 + 35 * std::sin(t) + rng.normal(0.3));
    }
    const auto c = fit_conic(pts).conic.center();
    REQUIRE(c);
    CHECK((*c - Eigen::Vector2d(200, 150)).norm() < 0.5);
  }
  SUBCASE("degenerate inputs") {
    CHECK_THROWS_WITH(fit_conic({Point2h(0, 0), Point2h(1, 0), Point2h(2, 0), Point2h(0, 1)}),
                      doctest::Contains("InsufficientPoints"));
    std::vector<Point2h> two_lines{Point2h(0, 0), Point2h(1, 0), Point2h(2, 0), Point2h(3, 0),
                                   Point2h(0, 1), Point2h(1, 2), Point2h(2, 3)};
    CHECK_THROWS_WITH(fit_conic(two_lines), doctest::Contains("DegenerateConic"));
  }
}

TEST_CASE("conic_intersections") {
  const Mat3 c1 = Eigen::Vector3d(1, 1, -1).asDiagonal();
  SUBCASE("two unit circles: real pair and the circular points") {
    Mat3 c2;
    c2 << 1, 0, -1, 0, 1, 0, -1, 0, 0;  // (x-1)^2 + y^2 = 1
    const auto res = conic_intersections(Conic(c1), Conic(c2));
    int real_hits = 0;
    for (const auto& p : res.points) {
      for (double sgn : {1.0, -1.0}) {
        const CVec3 expect(0.5, sgn * std::sqrt(3.0) / 2, 1.0);
        if (projective_distance(p, expect) < 1e-9) ++real_hits;
      }
    }
    CHECK(real_hits == 2);
    REQUIRE(res.circular_pair);
    const CVec3 pi = res.points[res.circular_pair->first];
    const CVec3 pj = res.points[res.circular_pair->second];
    const CVec3 ci(1.0, std::complex<double>(0, 1), 0.0), cj(1.0, std::complex<double>(0, -1), 0.0);
    CHECK(std::min(projective_distance(pi, ci), projective_distance(pi, cj)) < 1e-9);
    CHECK(std::min(projective_distance(pj, ci), projective_distance(pj, cj)) < 1e-9);
  }
  SUBCASE("concentric circles meet only at I and J") {
    const Mat3 c2 = Eigen::Vector3d(1, 1, -4).asDiagonal();
    const auto res = conic_intersections(Conic(c1), Conic(c2));
    const CVec3 ci(1.0, std::complex<double>(0, 1), 0.0), cj(1.0, std::complex<double>(0, -1), 0.0);
    int near_i = 0, near_j = 0;
    for (const auto& p : res.points) {
      if (projective_distance(p, ci) < 1e-6) ++near_i;
      if (projective_distance(p, cj) < 1e-6) ++near_j;
    }
    CHECK(near_i == 2);
    CHECK(near_j == 2);
  }
  SUBCASE("images of coplanar circles under random H") {
    synth::Rng rng(9);
    for (int trial = 0; trial < 20; ++trial) {
      const Mat3 h = synth::random_homography(rng) *
                     (Mat3() << 60, 0, 200, 0, 60, 150, 0, 0, 1).finished();
      Mat3 w2;  // circle centered (x0, 0), radius r
      const double x0 = rng.uniform(1.5, 3.0), r = rng.uniform(0.4, 1.2);
      w2 << 1, 0, -x0, 0, 1, 0, -x0, 0, x0 * x0 - r * r;
      const Mat3 hinv = h.inverse();
      const Conic e1(hinv.transpose() * c1 * hinv), e2(hinv.transpose() * w2 * hinv);
      const auto res = conic_intersections(e1, e2);
      REQUIRE(res.circular_pair);
      const CVec3 hi = h.cast<std::complex<double>>() * CVec3(1.0, std::complex<double>(0, 1), 0.0);
      const CVec3 a = res.points[res.circular_pair->first];
      const CVec3 b = res.points[res.circular_pair->second];
      CHECK(std::min(projective_distance(a, hi), projective_distance(b, hi)) < 1e-6);
      CHECK(std::min(projective_distance(a, hi.conjugate()), projective_distance(b, hi.conjugate())) < 1e-6);
    }
  }
  SUBCASE("proportional conics") {
    CHECK_THROWS_WITH(conic_intersections(Conic(c1), Conic(Mat3(3 * c1))),
                      doctest::Contains("CoincidentConics"));
  }
}
