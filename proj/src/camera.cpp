#include "geoforge/camera.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "geoforge/rectify.hpp"
#include "optim.hpp"

namespace geoforge::camera {

using geom::Vec3;

namespace {

// Principal point equations (orthogonality, equal norm) in the form
// A |p|^2 + b . p + c = 0, for h already divided by f.
struct Quadric {
  double a;
  Eigen::Vector2d b;
  double c;
  double eval(const Eigen::Vector2d& p) const { return a * p.squaredNorm() + b.dot(p) + c; }
};

std::pair<Quadric, Quadric> pp_constraints(const Mat3& h) {
  const Eigen::Vector2d a1 = h.col(0).head<2>(), a2 = h.col(1).head<2>();
  const double w1 = h(2, 0), w2 = h(2, 1);
  Quadric ortho{w1 * w2, -(w2 * a1 + w1 * a2), a1.dot(a2) + w1 * w2};
  Quadric norm{w1 * w1 - w2 * w2, -2.0 * (w1 * a1 - w2 * a2),
               a1.squaredNorm() - a2.squaredNorm() + (w1 * w1 - w2 * w2)};
  return {ortho, norm};
}

std::vector<Eigen::Vector2d> solve_quadrics(const Quadric& q1, const Quadric& q2) {
  const double scale = std::max({std::abs(q1.a), std::abs(q2.a), q1.b.norm(), q2.b.norm(), 1e-300});
  std::vector<Eigen::Vector2d> roots;
  if (std::abs(q1.a) < 1e-12 * scale && std::abs(q2.a) < 1e-12 * scale) {
    Eigen::Matrix2d m;
    m << q1.b.transpose(), q2.b.transpose();
    if (std::abs(m.determinant()) > 1e-12 * scale * scale)
      roots.push_back(m.inverse() * Eigen::Vector2d(-q1.c, -q2.c));
    return roots;
  }
  const Eigen::Vector2d n = q2.a * q1.b - q1.a * q2.b;
  const double k = q2.a * q1.c - q1.a * q2.c;
  if (n.norm() < 1e-12 * scale * scale) return roots;
  const Quadric& q = std::abs(q1.a) >= std::abs(q2.a) ? q1 : q2;
  const Eigen::Vector2d p0 = -k * n / n.squaredNorm();
  const Eigen::Vector2d d = Eigen::Vector2d(-n(1), n(0)).normalized();
  const double qa = q.a, qb = 2 * q.a * p0.dot(d) + q.b.dot(d), qc = q.eval(p0);
  const double disc = qb * qb - 4 * qa * qc;
  if (disc < 0) {
    roots.push_back(p0 - qb / (2 * qa) * d);
  } else {
    const double sq = std::sqrt(disc);
    const double t1 = (-qb - std::copysign(sq, qb)) / (2 * qa);
    roots.push_back(p0 + t1 * d);
    if (t1 != 0.0) roots.push_back(p0 + qc / (qa * t1) * d);
  }
  return roots;
}

Mat3 k_of(double f, const Eigen::Vector2d& p) {
  return CameraIntrinsics{f, 0.0, 1.0, p(0), p(1)}.K();
}

Mat3 unit(const Mat3& m) {
  return m / m.norm();
}

}  // namespace

Mat3 CameraIntrinsics::K() const {
  Mat3 k;
  k << f, skew, u0, 0, aspect * f, v0, 0, 0, 1;
  return k;
}

FundamentalMatrix::FundamentalMatrix(const Mat3& f) {
  if (!f.allFinite() || f.norm() == 0.0)
    throw GeoError("DegenerateConfiguration", "fundamental matrix is zero or non-finite");
  Eigen::JacobiSVD<Mat3> svd(f, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Vec3 s = svd.singularValues();
  s(2) = 0.0;
  f_ = svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
  f_ /= f_.norm();
  geom::fix_sign(f_);
}

std::pair<double, double> orthonormality_residuals(const Homography& h, const Mat3& k) {
  const Mat3 g = k.inverse() * h.matrix();
  const Vec3 g1 = g.col(0), g2 = g.col(1);
  const double n1 = g1.squaredNorm(), n2 = g2.squaredNorm();
  return {g1.dot(g2) / std::sqrt(n1 * n2), (n1 - n2) / (n1 + n2)};
}

PrincipalPoint principal_point_from_h(const Homography& h, double f, const Eigen::Vector2d& near) {
  if (!(f > 0.0)) throw GeoError("NonPositiveFocal", "focal length must be positive");
  Mat3 scaled = h.matrix();
  scaled.topRows<2>() /= f;
  const auto [q1, q2] = pp_constraints(unit(scaled));

  PrincipalPoint out{near(0), near(1), 0.0, false};
  const auto roots = solve_quadrics(q1, q2);
  Eigen::Vector2d start = near / f;
  if (roots.empty()) {
    out.weak = true;
  } else {
    start = *std::min_element(roots.begin(), roots.end(), [&](const auto& a, const auto& b) {
      return (a - near / f).norm() < (b - near / f).norm();
    });
  }

  const optim::Residuals r = [&](const Eigen::VectorXd& x) {
    const auto [e1, e2] = orthonormality_residuals(h, k_of(f, Eigen::Vector2d(x(0), x(1)) * f));
    return Eigen::Vector2d(e1, e2).eval();
  };
  const auto fit = optim::least_squares(r, 2, Eigen::VectorXd(start));
  Eigen::Vector2d p = start;
  if (r(fit.x).norm() < r(Eigen::VectorXd(start)).norm()) p = fit.x;
  if (!out.weak) {
    out.u0 = p(0) * f;
    out.v0 = p(1) * f;
  }
  out.residual = r(Eigen::VectorXd(p)).norm();

  // Sensitivity of the residuals to the principal point.
  Eigen::Matrix2d jac;
  for (int i = 0; i < 2; ++i) {
    Eigen::VectorXd lo = p, hi = p;
    lo(i) -= 1e-4;
    hi(i) += 1e-4;
    jac.col(i) = (r(hi) - r(lo)) / 2e-4;
  }
  if (Eigen::JacobiSVD<Eigen::Matrix2d>(jac).singularValues()(1) < 1e-6) out.weak = true;
  if (!out.weak && !fit.converged && out.residual > 1e-6)
    throw GeoError("NoConvergence", "principal point refinement did not converge");
  return out;
}

Eigen::Vector2d translation_shift_check(const Homography& h, double f, const Eigen::Vector2d& d,
                                        const Eigen::Vector2d& near) {
  Mat3 t = Mat3::Identity();
  t(0, 2) = d(0);
  t(1, 2) = d(1);
  const auto a = principal_point_from_h(h, f, near);
  const auto b = principal_point_from_h(Homography(t * h.matrix()), f, near + d);
  return {b.u0 - a.u0, b.v0 - a.v0};
}

Homography eye_plane_homography(const EyeAnnotation& e) {
  if (e.left_limbus.size() < 5 || e.right_limbus.size() < 5)
    throw GeoError("EllipseFitFailure", "each limbus needs at least five points");
  if (!(e.interocular_world_ratio > 2.0))
    throw GeoError("EllipseFitFailure", "eye circles overlap for the given interocular ratio");
  geom::Conic fits[2];
  try {
    fits[0] = geom::fit_conic(e.left_limbus).conic;
    fits[1] = geom::fit_conic(e.right_limbus).conic;
  } catch (const GeoError& err) {
    throw GeoError("EllipseFitFailure", err.what());
  }
  for (const auto& c : fits)
    if (!c.ellipse_axes()) throw GeoError("EllipseFitFailure", "limbus points do not fit an ellipse");

  const double rho = e.interocular_world_ratio;
  Mat3 world[2];
  world[0] << 1, 0, 0, 0, 1, 0, 0, 0, -1;
  world[1] << 1, 0, -rho, 0, 1, 0, -rho, 0, rho * rho - 1;

  // Start: metric rectification from the two ellipses, then the similarity
  // that puts the rectified centers at (0,0) and (rho,0).
  Mat3 h0;
  try {
    const auto rr = rectify::rectify_circles(fits[0], fits[1]);
    const Mat3 r = rr.rectifier.matrix();
    const Mat3 rinv = r.inverse();
    Eigen::Vector2d c[2];
    for (int i = 0; i < 2; ++i) {
      const auto ctr = geom::Conic(rinv.transpose() * fits[i].matrix() * rinv).center();
      if (!ctr) throw GeoError("EllipseFitFailure", "rectified limbus has no center");
      c[i] = *ctr;
    }
    const Eigen::Vector2d d = c[1] - c[0];
    const double s = rho / d.norm(), th = -std::atan2(d(1), d(0));
    Mat3 sim;
    sim << s * std::cos(th), -s * std::sin(th), 0, s * std::sin(th), s * std::cos(th), 0, 0, 0, 1;
    const Vec3 t = sim * Vec3(c[0](0), c[0](1), 1);
    sim(0, 2) = -t(0);
    sim(1, 2) = -t(1);
    h0 = (sim * r).inverse();
  } catch (const GeoError&) {
    // Fall back to the ellipse centers.
    const Eigen::Vector2d c0 = *fits[0].center(), c1 = *fits[1].center();
    const Eigen::Vector2d u = (c1 - c0) / rho;
    h0 << u(0), -u(1), c0(0), u(1), u(0), c0(1), 0, 0, 1;
  }
  h0 /= h0.norm();

  Mat3 target[2];
  for (int i = 0; i < 2; ++i) target[i] = unit(fits[i].matrix());
  auto model = [&](const Eigen::VectorXd& x) {
    Mat3 d;
    d << x(0), x(1), x(2), x(3), x(4), x(5), x(6), x(7), 0;
    return (h0 * (Mat3::Identity() + d)).eval();
  };
  const optim::Residuals res = [&](const Eigen::VectorXd& x) {
    const Mat3 hinv = model(x).inverse();
    Eigen::VectorXd out(18);
    for (int i = 0; i < 2; ++i) {
      Mat3 c = unit(hinv.transpose() * world[i] * hinv);
      if ((c.array() * target[i].array()).sum() < 0) c = -c;
      const Mat3 diff = c - target[i];
      out.segment<9>(9 * i) = Eigen::Map<const Eigen::Matrix<double, 9, 1>>(diff.data());
    }
    return out;
  };
  const auto fit = optim::least_squares(res, 18, Eigen::VectorXd::Zero(8));
  const Eigen::VectorXd x = res(fit.x).norm() <= res(Eigen::VectorXd::Zero(8)).norm()
                                ? fit.x
                                : Eigen::VectorXd::Zero(8);
  h0 = model(x);
  h0 /= h0.norm();

  // Polish against the limbus points themselves (Sampson distance to the
  // imaged circles), which weighs the data the way the noise enters it.
  const std::vector<Point2h>* pts[2] = {&e.left_limbus, &e.right_limbus};
  const int count = static_cast<int>(e.left_limbus.size() + e.right_limbus.size());
  const optim::Residuals geo = [&](const Eigen::VectorXd& x) {
    const Mat3 hinv = model(x).inverse();
    Eigen::VectorXd out(count);
    int k = 0;
    for (int i = 0; i < 2; ++i) {
      const Mat3 c = hinv.transpose() * world[i] * hinv;
      for (const auto& p : *pts[i]) {
        const Vec3 q = p.h() / p.h()(2);
        const Vec3 cq = c * q;
        out(k++) = q.dot(cq) / (2.0 * cq.head<2>().norm());
      }
    }
    return out;
  };
  const auto pol = optim::least_squares(geo, count, Eigen::VectorXd::Zero(8));
  if (geo(pol.x).norm() < geo(Eigen::VectorXd::Zero(8)).norm()) return Homography(model(pol.x));
  return Homography(h0);
}

SymmetricB estimate_B(const std::vector<Homography>& hs) {
  if (hs.size() < 2) throw GeoError("InsufficientViews", "need at least two homographies");
  double num = 0.0, den = 0.0;
  for (const auto& h : hs)
    for (int j = 0; j < 2; ++j) {
      num += h.matrix().col(j).head<2>().squaredNorm();
      den += 2.0 * h.matrix()(2, j) * h.matrix()(2, j);
    }
  const double c = den > 0.0 && num > 0.0 ? std::sqrt(num / den) : 1.0;

  auto v = [](const Vec3& a, const Vec3& b) {
    return Eigen::RowVector4d(a(0) * b(0), a(0) * b(1) + a(1) * b(0), a(1) * b(1), a(2) * b(2));
  };
  Eigen::MatrixXd a(2 * hs.size(), 4);
  for (std::size_t i = 0; i < hs.size(); ++i) {
    Mat3 m = hs[i].matrix();
    m.topRows<2>() /= c;
    m /= m.norm();
    const Vec3 h1 = m.col(0), h2 = m.col(1);
    a.row(2 * i) = v(h1, h2);
    a.row(2 * i + 1) = v(h1, h1) - v(h2, h2);
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (sv.size() < 3 || sv(2) <= 1e-10 * sv(0))
    throw GeoError("RankDeficient", "views do not constrain B (degenerate motion)");
  const Eigen::Vector4d b = svd.matrixV().col(3);
  if (std::abs(b(3)) < 1e-12) throw GeoError("RankDeficient", "B33 vanishes; gauge undefined");
  return {b(0) / (c * c * b(3)), b(1) / (c * c * b(3)), b(2) / (c * c * b(3))};
}

double skew_from_B(const SymmetricB& b, double f) {
  if (b.b11 == 0.0) throw GeoError("ZeroB11", "b11 is zero");
  return -f * b.b12 / b.b11;
}

FundamentalMatrix estimate_fundamental(const std::vector<Correspondence>& matches) {
  if (matches.size() < 8)
    throw GeoError("InsufficientMatches", "fundamental matrix needs at least eight matches");
  std::vector<Eigen::Vector2d> p1, p2;
  for (const auto& m : matches) {
    p1.push_back(m.x1.euclidean());
    p2.push_back(m.x2.euclidean());
  }
  const Mat3 t1 = geom::hartley_normalization(p1);
  const Mat3 t2 = geom::hartley_normalization(p2);
  const auto n = static_cast<Eigen::Index>(matches.size());
  Eigen::MatrixXd a(std::max<Eigen::Index>(n, 9), 9);
  a.setZero();
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec3 x = t1 * p1[i].homogeneous();
    const Vec3 y = t2 * p2[i].homogeneous();
    for (int r = 0; r < 3; ++r) a.block<1, 3>(i, 3 * r) = y(r) * x.transpose();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (sv(7) <= 1e-9 * sv(0))
    throw GeoError("DegenerateConfiguration",
                   "matches admit a family of fundamental matrices (planar scene or pure rotation)");
  const Eigen::Matrix<double, 9, 1> f = svd.matrixV().col(8);
  Mat3 fn;
  fn << f(0), f(1), f(2), f(3), f(4), f(5), f(6), f(7), f(8);
  Eigen::JacobiSVD<Mat3> s2(fn, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Vec3 s = s2.singularValues();
  s(2) = 0.0;
  fn = s2.matrixU() * s.asDiagonal() * s2.matrixV().transpose();
  return FundamentalMatrix(t2.transpose() * fn * t1);
}

double skew_cost(double f, double s, const std::vector<FundamentalMatrix>& fs) {
  if (!(f > 0.0)) throw GeoError("NonPositiveFocal", "focal length must be positive");
  Mat3 k;
  k << f, s, 0, 0, f, 0, 0, 0, 1;
  double c = 0.0;
  for (const auto& fm : fs) {
    const Vec3 sv = Eigen::JacobiSVD<Mat3>(k.transpose() * fm.matrix() * k).singularValues();
    if (sv(1) <= 1e-15 * sv(0)) throw GeoError("ZeroSigma", "essential matrix is degenerate");
    c += (sv(0) - sv(1)) / sv(1);
  }
  return c;
}

SkewEstimate minimize_skew(const std::vector<FundamentalMatrix>& fs, double f_min, double f_max,
                           double s_frac) {
  if (fs.empty()) throw GeoError("EmptyRange", "no fundamental matrices");
  if (!(f_min > 0.0 && f_max > f_min && s_frac >= 0.0))
    throw GeoError("EmptyRange", "focal or skew range is empty");
  auto cost = [&](double f, double s) {
    try {
      return skew_cost(f, s, fs);
    } catch (const GeoError&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  constexpr int kF = 50, kS = 41;
  const double lf0 = std::log(f_min), dlf = (std::log(f_max) - lf0) / (kF - 1);
  const double ds = kS > 1 ? 2.0 * s_frac / (kS - 1) : 0.0;
  double best = std::numeric_limits<double>::infinity(), best_lf = lf0, best_r = 0.0;
  for (int i = 0; i < kF; ++i)
    for (int j = 0; j < kS; ++j) {
      const double lf = lf0 + i * dlf, r = -s_frac + j * ds;
      const double c = cost(std::exp(lf), r * std::exp(lf));
      if (c < best) best = c, best_lf = lf, best_r = r;
    }

  // Refine in (log f, s / f).
  const optim::Objective obj = [&](const Eigen::VectorXd& x) {
    return cost(std::exp(x(0)), x(1) * std::exp(x(0)));
  };
  const auto nm = optim::nelder_mead(obj, Eigen::Vector2d(best_lf, best_r),
                                     Eigen::Vector2d(dlf, std::max(ds, 1e-3)), 4000, 1e-12);
  SkewEstimate out;
  if (nm.value < best) {
    out.f = std::exp(nm.x(0));
    out.s = nm.x(1) * out.f;
    out.cost = nm.value;
  } else {
    out.f = std::exp(best_lf);
    out.s = best_r * out.f;
    out.cost = best;
  }

  double rise = std::numeric_limits<double>::infinity();
  for (const auto& [df, dsr] : {std::pair{1.2, 0.0}, {1 / 1.2, 0.0}, {1.0, 0.02}, {1.0, -0.02}})
    rise = std::min(rise, cost(out.f * df, out.s + dsr * out.f) - out.cost);
  out.flat = rise < 1e-3;
  if (fs.size() < 2)
    out.diagnostics.push_back("single fundamental matrix: focal and skew are weakly constrained");
  if (out.flat) out.diagnostics.push_back("cost surface is flat around the minimum");
  return out;
}

}  // namespace geoforge::camera
