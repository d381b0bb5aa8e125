#include "geoforge/geom.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace geoforge::geom {

namespace {

using Complex = std::complex<double>;
using CMat3 = Eigen::Matrix3cd;

Eigen::Matrix3cd cross_matrix(const CVec3& p) {
  Eigen::Matrix3cd m;
  m << 0.0, -p(2), p(1),
       p(2), 0.0, -p(0),
       -p(1), p(0), 0.0;
  return m;
}

CVec3 ccross(const CVec3& a, const CVec3& b) {
  return CVec3(a(1) * b(2) - a(2) * b(1), a(2) * b(0) - a(0) * b(2),
               a(0) * b(1) - a(1) * b(0));
}

// Scales a complex vector so its largest-magnitude component is 1.
CVec3 phase_normalize(const CVec3& p) {
  Eigen::Index k = 0;
  p.cwiseAbs().maxCoeff(&k);
  if (std::abs(p(k)) == 0.0) return p;
  return p / p(k);
}

Mat3 adjugate(const Mat3& m) {
  Mat3 a;
  a.col(0) = m.row(1).transpose().cross(m.row(2).transpose());
  a.col(1) = m.row(2).transpose().cross(m.row(0).transpose());
  a.col(2) = m.row(0).transpose().cross(m.row(1).transpose());
  return a;
}

CMat3 cadjugate(const CMat3& m) {
  CMat3 a;
  a.col(0) = ccross(m.row(1).transpose(), m.row(2).transpose());
  a.col(1) = ccross(m.row(2).transpose(), m.row(0).transpose());
  a.col(2) = ccross(m.row(0).transpose(), m.row(1).transpose());
  return a;
}

// Splits a rank <= 2 symmetric conic into the two (possibly complex) lines
// g, h with D ~ g h^T + h g^T.
std::pair<CVec3, CVec3> split_degenerate(const CMat3& d) {
  const CMat3 b = cadjugate(d);
  Eigen::Index i = 0;
  const double bmax = b.diagonal().cwiseAbs().maxCoeff(&i);
  const double scale = d.cwiseAbs().maxCoeff();
  if (bmax <= 1e-14 * scale * scale) {
    // Double line: D = g g^T.
    Eigen::Index k = 0;
    d.diagonal().cwiseAbs().maxCoeff(&k);
    const CVec3 g = d.col(k) / std::sqrt(d(k, k));
    return {g, g};
  }
  const Complex beta = std::sqrt(-b(i, i));
  const CVec3 p = b.col(i) / beta;
  const CMat3 m = d + cross_matrix(p);
  Eigen::Index r = 0, c = 0;
  m.cwiseAbs().maxCoeff(&r, &c);
  return {m.row(r).transpose(), m.col(c)};
}

// Intersects a complex line with a conic; returns the two points.
std::array<CVec3, 2> intersect_line_conic(const CVec3& l, const CMat3& conic) {
  Eigen::Index k = 0;
  l.cwiseAbs().maxCoeff(&k);
  const int i = (k + 1) % 3;
  const int j = (k + 2) % 3;
  CVec3 ei = CVec3::Zero(), ej = CVec3::Zero();
  ei(i) = 1.0;
  ej(j) = 1.0;
  const CVec3 a = ccross(l, ei);
  const CVec3 b = ccross(l, ej);
  const Complex qa = a.transpose() * conic * a;
  const Complex qb = a.transpose() * conic * b;
  const Complex qc = b.transpose() * conic * b;
  // qa s^2 + 2 qb s t + qc t^2 = 0
  const Complex disc = std::sqrt(qb * qb - qa * qc);
  const Complex q1 = -(qb + disc);
  const Complex q2 = -(qb - disc);
  const Complex q = std::abs(q1) >= std::abs(q2) ? q1 : q2;
  if (std::abs(qa) >= std::abs(qc)) {
    if (std::abs(q) == 0.0) return {b, b};
    // s/t roots: q/qa and qc/q
    return {CVec3(a * (q / qa) + b), CVec3(a * (qc / q) + b)};
  }
  if (std::abs(q) == 0.0) return {a, a};
  // t/s roots: q/qc and qa/q
  return {CVec3(a + b * (q / qc)), CVec3(a + b * (qa / q))};
}

std::vector<double> real_cubic_roots(double c3, double c2, double c1, double c0) {
  std::vector<double> roots;
  const double scale = std::max({std::abs(c3), std::abs(c2), std::abs(c1), std::abs(c0)});
  if (scale == 0.0) return roots;
  c3 /= scale;
  c2 /= scale;
  c1 /= scale;
  c0 /= scale;
  auto eval = [&](double t) { return ((c3 * t + c2) * t + c1) * t + c0; };
  auto deriv = [&](double t) { return (3 * c3 * t + 2 * c2) * t + c1; };
  std::vector<double> raw;
  if (std::abs(c3) > 1e-12) {
    Mat3 comp = Mat3::Zero();
    comp(0, 0) = -c2 / c3;
    comp(0, 1) = -c1 / c3;
    comp(0, 2) = -c0 / c3;
    comp(1, 0) = 1.0;
    comp(2, 1) = 1.0;
    Eigen::EigenSolver<Mat3> es(comp, false);
    for (int i = 0; i < 3; ++i) {
      const Complex z = es.eigenvalues()(i);
      if (std::abs(z.imag()) <= 1e-6 * std::max(1.0, std::abs(z))) raw.push_back(z.real());
    }
  } else if (std::abs(c2) > 1e-12) {
    const double disc = c1 * c1 - 4 * c2 * c0;
    if (disc >= 0) {
      raw.push_back((-c1 + std::sqrt(disc)) / (2 * c2));
      raw.push_back((-c1 - std::sqrt(disc)) / (2 * c2));
    }
  } else if (std::abs(c1) > 1e-12) {
    raw.push_back(-c0 / c1);
  }
  for (double t : raw) {
    for (int it = 0; it < 50; ++it) {
      const double fd = deriv(t);
      if (fd == 0.0) break;
      const double step = eval(t) / fd;
      t -= step;
      if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(t))) break;
    }
    roots.push_back(t);
  }
  return roots;
}

}  // namespace

const Tolerances& default_tolerances() {
  static const Tolerances tol{};
  return tol;
}

// ---------------------------------------------------------------------------
// Point2h / Line2h / Conic / Homography

Point2h::Point2h(const Vec3& h) : h_(h) {
  if (!(h.norm() > 0.0) || !h.allFinite())
    throw GeoError("ZeroVector", "homogeneous point must be a finite nonzero vector");
}

bool Point2h::is_ideal(const Tolerances& tol) const {
  return std::abs(h_(2)) <= tol.w * h_.norm();
}

Vec3 Point2h::normalized(const Tolerances& tol) const {
  if (!is_ideal(tol)) return h_ / h_(2);
  Vec3 u = h_.normalized();
  u(2) = 0.0;
  u.normalize();
  fix_sign(u);
  return u;
}

Eigen::Vector2d Point2h::euclidean() const {
  if (is_ideal()) throw GeoError("IdealPoint", "point at infinity has no Euclidean coordinates");
  return h_.head<2>() / h_(2);
}

Line2h::Line2h(const Vec3& l) : l_(l) {
  if (!(l.norm() > 0.0) || !l.allFinite())
    throw GeoError("ZeroVector", "homogeneous line must be a finite nonzero vector");
}

Vec3 Line2h::canonical() const {
  Vec3 u = l_.normalized();
  fix_sign(u);
  return u;
}

Vec3 Line2h::distance_form() const {
  const double n = l_.head<2>().norm();
  if (n == 0.0) throw GeoError("LineAtInfinity", "the line at infinity has no distance form");
  return l_ / n;
}

double Line2h::distance(const Point2h& p) const {
  return std::abs(distance_form().dot(p.h()) / p.h()(2));
}

Conic::Conic(const Mat3& c) {
  const Mat3 s = 0.5 * (c + c.transpose());
  k_ = {s(0, 0), 2.0 * s(0, 1), s(1, 1), 2.0 * s(0, 2), 2.0 * s(1, 2), s(2, 2)};
}

Conic Conic::from_coefficients(const std::array<double, 6>& k) {
  Conic c;
  c.k_ = k;
  return c;
}

Mat3 Conic::matrix() const {
  Mat3 m;
  m << k_[0], k_[1] / 2, k_[3] / 2,
       k_[1] / 2, k_[2], k_[4] / 2,
       k_[3] / 2, k_[4] / 2, k_[5];
  return m;
}

Conic Conic::canonical() const {
  Mat3 m = matrix();
  m /= m.norm();
  fix_sign(m);
  return Conic(m);
}

double Conic::algebraic_residual(const Point2h& p) const {
  const Mat3 m = matrix();
  const Vec3 u = p.unit();
  return u.dot(m * u) / m.norm();
}

std::optional<Eigen::Vector2d> Conic::center() const {
  const Mat3 m = matrix();
  const Eigen::Matrix2d a = m.topLeftCorner<2, 2>();
  if (std::abs(a.determinant()) <= 1e-14 * a.squaredNorm()) return std::nullopt;
  return Eigen::Vector2d(-a.inverse() * m.topRightCorner<2, 1>());
}

std::optional<std::pair<double, double>> Conic::ellipse_axes() const {
  const auto c = center();
  if (!c) return std::nullopt;
  const Mat3 m = matrix();
  const Eigen::Matrix2d a = m.topLeftCorner<2, 2>();
  const double fc = m(2, 2) + m.topRightCorner<2, 1>().dot(*c);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(a);
  const auto ev = es.eigenvalues();
  if (ev(0) * ev(1) <= 0) return std::nullopt;
  const double s0 = -fc / ev(0), s1 = -fc / ev(1);
  if (s0 <= 0 || s1 <= 0) return std::nullopt;
  const double r0 = std::sqrt(s0), r1 = std::sqrt(s1);
  return std::make_pair(std::max(r0, r1), std::min(r0, r1));
}

Homography::Homography(const Mat3& h, const Tolerances& tol) {
  if (!h.allFinite()) throw GeoError("NonInvertible", "homography has non-finite entries");
  const double n = h.norm();
  if (n == 0.0) throw GeoError("NonInvertible", "zero homography");
  h_ = h / n;
  if (std::abs(h_.determinant()) <= tol.det)
    throw GeoError("NonInvertible", "homography is singular");
  fix_sign(h_);
}

Homography Homography::inverse() const { return Homography(h_.inverse()); }

Line2h Homography::apply_to_line(const Line2h& l) const {
  return Line2h(h_.inverse().transpose() * l.l());
}

// ---------------------------------------------------------------------------
// Incidence

Line2h line_through(const Point2h& p, const Point2h& q, const Tolerances& tol) {
  const Vec3 l = p.unit().cross(q.unit());
  if (l.norm() <= tol.w) throw GeoError("CoincidentPoints", "points coincide up to scale");
  return Line2h(Line2h(l).canonical());
}

Point2h meet(const Line2h& l, const Line2h& m, const Tolerances& tol) {
  const Vec3 p = l.canonical().cross(m.canonical());
  if (p.norm() <= tol.w) throw GeoError("CoincidentLines", "lines coincide up to scale");
  return Point2h(Point2h(p).normalized(tol));
}

Mat3 hartley_normalization(const std::vector<Eigen::Vector2d>& pts) {
  if (pts.empty()) return Mat3::Identity();
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto& p : pts) mean += p;
  mean /= static_cast<double>(pts.size());
  double rms = 0.0;
  for (const auto& p : pts) rms += (p - mean).squaredNorm();
  rms = std::sqrt(rms / static_cast<double>(pts.size()));
  const double s = rms > 0.0 ? std::sqrt(2.0) / rms : 1.0;
  Mat3 t;
  t << s, 0, -s * mean.x(),
       0, s, -s * mean.y(),
       0, 0, 1;
  return t;
}

namespace {

Mat3 normalization_for(const std::vector<Point2h>& pts) {
  std::vector<Eigen::Vector2d> finite;
  for (const auto& p : pts)
    if (!p.is_ideal()) finite.push_back(p.euclidean());
  if (finite.size() < 2) return Mat3::Identity();
  return hartley_normalization(finite);
}

}  // namespace

double cross_ratio(const Point2h& a, const Point2h& b, const Point2h& c,
                   const Point2h& d, const Tolerances& tol) {
  const std::array<Point2h, 4> pts{a, b, c, d};
  const Mat3 t = normalization_for({a, b, c, d});
  Eigen::Matrix<double, 4, 3> m;
  std::array<Vec3, 4> u;
  for (int i = 0; i < 4; ++i) {
    u[i] = (t * pts[i].h()).normalized();
    m.row(i) = u[i].transpose();
  }
  Eigen::JacobiSVD<Eigen::Matrix<double, 4, 3>> svd(m, Eigen::ComputeFullV);
  const Vec3 line = svd.matrixV().col(2);
  for (int i = 0; i < 4; ++i)
    if (std::abs(line.dot(u[i])) > tol.col)
      throw GeoError("NotCollinear", "cross ratio needs four collinear points");
  // det(p, q, o) with o off the line is proportional to the 1-D
  // homogeneous determinant of p and q along the line.
  auto bracket = [&](int i, int j) {
    Mat3 k;
    k << u[i], u[j], line;
    return k.determinant();
  };
  const double ad = bracket(0, 3), bc = bracket(1, 2);
  if (std::abs(ad) < tol.den || std::abs(bc) < tol.den)
    throw GeoError("DegenerateQuadruple", "coincident points make the cross ratio undefined");
  return bracket(0, 2) * bracket(1, 3) / (ad * bc);
}

VanishingPointFit fit_vanishing_point(const std::vector<Segment>& segments) {
  if (segments.size() < 2)
    throw GeoError("InsufficientSegments", "vanishing point needs at least two segments");
  std::vector<Eigen::Vector2d> ends;
  for (const auto& [p, q] : segments) {
    ends.push_back(p.euclidean());
    ends.push_back(q.euclidean());
  }
  const Mat3 t = hartley_normalization(ends);
  Eigen::MatrixXd a(segments.size(), 3);
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const Vec3 p = t * segments[i].first.h() / segments[i].first.h()(2);
    const Vec3 q = t * segments[i].second.h() / segments[i].second.h()(2);
    Vec3 l = p.cross(q);
    const double n = l.head<2>().norm();
    if (n <= 1e-14) throw GeoError("ZeroLengthSegment", "segment has zero length");
    a.row(static_cast<Eigen::Index>(i)) = (l / n).transpose();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (sv(1) <= 1e-10 * sv(0))
    throw GeoError("DegenerateBundle", "all segments lie on one line");
  const Vec3 v = t.inverse() * svd.matrixV().col(2);
  const double resid = sv.size() > 2 ? sv(2) / std::sqrt(static_cast<double>(segments.size())) : 0.0;
  return {Point2h(Point2h(v).normalized()), resid};
}

std::pair<Line2h, double> fit_line(const std::vector<Point2h>& points) {
  if (points.size() < 2) throw GeoError("InsufficientPoints", "a line needs two points");
  if (points.size() == 2) return {line_through(points[0], points[1]), 0.0};
  Eigen::MatrixXd a(points.size(), 3);
  for (std::size_t i = 0; i < points.size(); ++i)
    a.row(static_cast<Eigen::Index>(i)) = points[i].unit().transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (sv(1) <= 1e-12 * sv(0)) throw GeoError("CoincidentPoints", "points coincide");
  return {Line2h(Line2h(svd.matrixV().col(2)).canonical()),
          sv(2) / std::sqrt(static_cast<double>(points.size()))};
}

Line2h vanishing_line(const Point2h& v1, const Point2h& v2) { return line_through(v1, v2); }

// ---------------------------------------------------------------------------
// Estimators

Homography dlt_homography(const std::vector<Correspondence>& matches) {
  if (matches.size() < 4)
    throw GeoError("InsufficientMatches", "homography needs at least four matches");
  std::vector<Eigen::Vector2d> p1, p2;
  for (const auto& m : matches) {
    p1.push_back(m.x1.euclidean());
    p2.push_back(m.x2.euclidean());
  }
  const Mat3 t1 = hartley_normalization(p1);
  const Mat3 t2 = hartley_normalization(p2);
  const auto n = static_cast<Eigen::Index>(matches.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * n, 9);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec3 x = t1 * p1[i].homogeneous();
    const Vec3 y = t2 * p2[i].homogeneous();
    a.block<1, 3>(2 * i, 3) = -y(2) * x.transpose();
    a.block<1, 3>(2 * i, 6) = y(1) * x.transpose();
    a.block<1, 3>(2 * i + 1, 0) = y(2) * x.transpose();
    a.block<1, 3>(2 * i + 1, 6) = -y(0) * x.transpose();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (sv(7) <= 1e-10 * sv(0))
    throw GeoError("DegenerateConfiguration", "matches do not determine a homography");
  const Eigen::Matrix<double, 9, 1> h = svd.matrixV().col(8);
  Mat3 hn;
  hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  return Homography(t2.inverse() * hn * t1);
}

ConicFit fit_conic(const std::vector<Point2h>& points) {
  if (points.size() < 5) throw GeoError("InsufficientPoints", "conic fit needs at least five points");
  std::vector<Eigen::Vector2d> pts;
  for (const auto& p : points) pts.push_back(p.euclidean());
  const Mat3 t = hartley_normalization(pts);
  const auto n = static_cast<Eigen::Index>(pts.size());
  Eigen::MatrixXd a(n, 6);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec3 q = t * pts[i].homogeneous();
    const double x = q.x(), y = q.y();
    a.row(i) << x * x, x * y, y * y, x, y, 1.0;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (sv(4) <= 1e-10 * sv(0))
    throw GeoError("DegenerateConic", "points do not determine a unique conic");
  const Eigen::Matrix<double, 6, 1> k = svd.matrixV().col(5);
  const Conic local = Conic::from_coefficients({k(0), k(1), k(2), k(3), k(4), k(5)});
  Mat3 cl = local.matrix();
  cl /= cl.norm();
  if (std::abs(cl.determinant()) <= 1e-10)
    throw GeoError("DegenerateConic", "points lie on a line pair");
  double rms = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec3 q = t * pts[i].homogeneous();
    const double r = q.dot(cl * q);
    rms += r * r;
  }
  rms = std::sqrt(rms / static_cast<double>(n));
  return {Conic(t.transpose() * cl * t).canonical(), rms};
}

// ---------------------------------------------------------------------------
// Conic pencil intersection

namespace {

Mat3 conditioning_for(const Conic& c1, const Conic& c2) {
  const auto a = c1.center();
  const auto b = c2.center();
  if (!a || !b) return Mat3::Identity();
  const Eigen::Vector2d mid = 0.5 * (*a + *b);
  double k = (*a - *b).norm();
  for (const Conic* c : {&c1, &c2})
    if (auto ax = c->ellipse_axes()) k = std::max(k, ax->first);
  if (!(k > 0.0) || !std::isfinite(k)) k = 1.0;
  Mat3 t;
  t << 1 / k, 0, -mid.x() / k,
       0, 1 / k, -mid.y() / k,
       0, 0, 1;
  return t;
}

bool is_real_point(const CVec3& p) {
  return phase_normalize(p).imag().norm() <= 1e-9;
}

}  // namespace

double projective_distance(const CVec3& a, const CVec3& b) {
  const CVec3 ua = a / a.norm();
  const CVec3 ub = b / b.norm();
  return ccross(ua, ub).norm();
}

Vec3 real_line_through_conjugates(const CVec3& p) {
  const CVec3 u = phase_normalize(p);
  const Vec3 l = u.real().cross(u.imag());
  if (l.norm() == 0.0) throw GeoError("RealPoint", "point has no distinct conjugate");
  return l.normalized();
}

ConicIntersections conic_intersections(const Conic& c1, const Conic& c2) {
  const Mat3 t = conditioning_for(c1, c2);
  const Mat3 tinv = t.inverse();
  Mat3 a = tinv.transpose() * c1.matrix() * tinv;
  Mat3 b = tinv.transpose() * c2.matrix() * tinv;
  a /= a.norm();
  b /= b.norm();
  if ((a - b).norm() < 1e-12 || (a + b).norm() < 1e-12)
    throw GeoError("CoincidentConics", "conics are proportional");
  if (std::abs(a.determinant()) < 1e-14 || std::abs(b.determinant()) < 1e-14)
    throw GeoError("DegenerateConic", "conic intersection needs non-degenerate conics");

  // det(A + tB) = det A + t tr(adj(A) B) + t^2 tr(A adj(B)) + t^3 det B
  const double k0 = a.determinant();
  const double k1 = (adjugate(a) * b).trace();
  const double k2 = (a * adjugate(b)).trace();
  const double k3 = b.determinant();
  const auto roots = real_cubic_roots(k3, k2, k1, k0);
  if (roots.empty()) throw GeoError("NumericalBreakdown", "no degenerate pencil member found");

  const CMat3 ca = a.cast<Complex>();
  const CMat3 cb = b.cast<Complex>();
  double best_score = std::numeric_limits<double>::infinity();
  std::array<CVec3, 4> best{};
  for (double root : roots) {
    const CMat3 d = ca + Complex(root) * cb;
    if (d.cwiseAbs().maxCoeff() == 0.0) continue;
    const auto [g, h] = split_degenerate(d);
    if (g.norm() == 0.0 || h.norm() == 0.0 || !g.allFinite() || !h.allFinite()) continue;
    const auto p1 = intersect_line_conic(g, ca);
    const auto p2 = intersect_line_conic(h, ca);
    const std::array<CVec3, 4> pts{p1[0], p1[1], p2[0], p2[1]};
    double score = 0.0;
    bool ok = true;
    for (const auto& p : pts) {
      if (!p.allFinite() || p.norm() == 0.0) {
        ok = false;
        break;
      }
      const CVec3 u = p / p.norm();
      score = std::max(score, std::abs(Complex(u.transpose() * ca * u)) +
                                  std::abs(Complex(u.transpose() * cb * u)));
    }
    if (ok && score < best_score) {
      best_score = score;
      best = pts;
    }
  }
  if (!std::isfinite(best_score) || best_score > 1e-6)
    throw GeoError("NumericalBreakdown", "degenerate pencil member could not be split");

  ConicIntersections out;
  for (int i = 0; i < 4; ++i) out.points[i] = phase_normalize(tinv.cast<Complex>() * best[i]);

  // Conjugate pairs among non-real intersections.
  std::vector<std::pair<int, int>> pairs;
  std::array<bool, 4> used{};
  for (int i = 0; i < 4; ++i) {
    if (used[i] || is_real_point(out.points[i])) continue;
    int match = -1;
    double md = 1e-6;
    for (int j = 0; j < 4; ++j) {
      if (j == i || used[j]) continue;
      const double dist = projective_distance(out.points[i].conjugate(), out.points[j]);
      if (dist < md) {
        md = dist;
        match = j;
      }
    }
    if (match >= 0) {
      used[i] = used[match] = true;
      pairs.emplace_back(i, match);
    }
  }
  if (pairs.size() == 1) {
    out.circular_pair = pairs.front();
  } else if (pairs.size() == 2) {
    // The imaged line at infinity leaves both conics on the same side; the
    // other conjugate pair spans a line that separates them.
    const auto ca_center = c1.center();
    const auto cb_center = c2.center();
    for (const auto& pr : pairs) {
      if (!ca_center || !cb_center) {
        out.circular_pair = pr;
        break;
      }
      const Vec3 l = real_line_through_conjugates(out.points[pr.first]);
      const double sa = l.dot(ca_center->homogeneous());
      const double sb = l.dot(cb_center->homogeneous());
      if (sa * sb > 0) {
        if (!out.circular_pair) out.circular_pair = pr;
      }
    }
    if (!out.circular_pair) out.circular_pair = pairs.front();
  }
  return out;
}

}  // namespace geoforge::geom
