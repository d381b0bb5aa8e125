#include "geoforge/shadow.hpp"

#include <algorithm>
#include <cmath>

#include "geoforge/error.hpp"

namespace geoforge::shadow {

using geom::Vec3;

namespace {

Mat3 normalizer(std::initializer_list<const Point2h*> pts) {
  std::vector<Eigen::Vector2d> xy;
  for (const auto* p : pts) xy.push_back(p->euclidean());
  return geom::hartley_normalization(xy);
}

Vec3 unit_or_throw(const Vec3& v, const char* what) {
  const double n = v.norm();
  if (!(n > 1e-12)) throw GeoError("DegenerateTriples", what);
  return v / n;
}

}  // namespace

Vertex homology_vertex(const ShadowTriple& a, const ShadowTriple& b) {
  const Mat3 t = normalizer({&a.t, &a.s, &b.t, &b.s});
  const Vec3 ra = unit_or_throw((t * a.t.h()).normalized().cross((t * a.s.h()).normalized()),
                                "top and shadow coincide");
  const Vec3 rb = unit_or_throw((t * b.t.h()).normalized().cross((t * b.s.h()).normalized()),
                                "top and shadow coincide");
  const Vec3 v = unit_or_throw(rb.cross(ra), "the two light rays coincide");
  Vertex out;
  out.point = Point2h(t.inverse() * v);
  out.ideal = std::abs(v(2)) < 1e-10;
  return out;
}

double axis_consistency_residual(const ShadowTriple& a, const ShadowTriple& b) {
  if ((a.f.euclidean() - b.f.euclidean()).norm() < 1e-12)
    throw GeoError("DegenerateTriples", "the two feet coincide");
  return axis_consistency_residual(a, b, geom::line_through(b.f, a.f));
}

double axis_consistency_residual(const ShadowTriple& a, const ShadowTriple& b, const Line2h& axis) {
  const Mat3 t = normalizer({&a.t, &a.f, &a.s, &b.t, &b.f, &b.s});
  auto p = [&](const Point2h& x) { return Vec3((t * x.h()).normalized()); };
  const Vec3 tops = unit_or_throw(p(b.t).cross(p(a.t)), "the two tops coincide");
  const Vec3 shadows = unit_or_throw(p(b.s).cross(p(a.s)), "the two shadows coincide");
  const Vec3 meet = unit_or_throw(tops.cross(shadows), "top line and shadow line coincide");
  const Vec3 l = (t.inverse().transpose() * axis.l()).normalized();
  return std::abs(meet.dot(l));
}

double homology_cross_ratio(const ShadowTriple& tr, const Point2h& vertex, const Line2h& axis) {
  const Point2h i = geom::meet(geom::line_through(vertex, tr.t), axis);
  // cr(v, i; t, s) equals Eq 42's mu; see the ledger for the ordering
  return geom::cross_ratio(vertex, i, tr.t, tr.s);
}

Mat3 homology_matrix(const Point2h& vertex, const Line2h& axis, double mu) {
  const Vec3 v = vertex.h(), l = axis.l();
  const double vl = v.dot(l);
  if (std::abs(vl) <= 1e-12 * v.norm() * l.norm())
    throw GeoError("VertexOnAxis", "homology vertex lies on its axis");
  if (!std::isfinite(mu) || mu == 0.0) throw GeoError("InvalidRatio", "mu must be finite and nonzero");
  return Mat3::Identity() + (mu - 1.0) * v * l.transpose() / vl;
}

Homography build_homology(const Point2h& vertex, const Line2h& axis, double mu) {
  return Homography(homology_matrix(vertex, axis, mu));
}

ShadowReport shadow_composite_check(const std::vector<ShadowTriple>& triples,
                                    const Thresholds& th) {
  const std::size_t n = triples.size();
  if (n < 2) throw GeoError("InsufficientTriples", "shadow check needs at least two triples");
  ShadowReport out;
  std::vector<Eigen::Vector2d> feet;
  for (const auto& tr : triples) feet.push_back(tr.f.euclidean());
  const bool common = n >= 3;
  if (common) {
    // total least squares through the feet
    const Mat3 t = geom::hartley_normalization(feet);
    Eigen::MatrixXd c(static_cast<Eigen::Index>(n), 2);
    for (std::size_t i = 0; i < n; ++i)
      c.row(static_cast<Eigen::Index>(i)) = (t * feet[i].homogeneous()).head<2>().transpose();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(c, Eigen::ComputeThinV);
    const Eigen::Vector2d normal = svd.matrixV().col(1);
    const Vec3 ln(normal.x(), normal.y(), 0.0);  // centroid is the origin after t
    for (std::size_t i = 0; i < n; ++i)
      out.foot_residuals.push_back(std::abs(ln.dot(t * feet[i].homogeneous())));
    out.axis = Line2h(Line2h(t.transpose() * ln).canonical());

    // and the rays t s must be concurrent: same test on the vertex side
    std::vector<Eigen::Vector2d> ends;
    for (const auto& tr : triples) {
      ends.push_back(tr.t.euclidean());
      ends.push_back(tr.s.euclidean());
    }
    const Mat3 tr_n = geom::hartley_normalization(ends);
    Eigen::MatrixXd rays(static_cast<Eigen::Index>(n), 3);
    for (std::size_t i = 0; i < n; ++i) {
      const Vec3 r = unit_or_throw((tr_n * triples[i].t.h()).normalized().cross((tr_n * triples[i].s.h()).normalized()),
                                   "top and shadow coincide");
      rays.row(static_cast<Eigen::Index>(i)) = r.transpose();
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> rsvd(rays, Eigen::ComputeFullV);
    const Vec3 v = rsvd.matrixV().col(2);
    for (std::size_t i = 0; i < n; ++i) out.ray_residuals.push_back(std::abs(rays.row(static_cast<Eigen::Index>(i)).dot(v)));
    out.vertex = Point2h(Vec3(tr_n.inverse() * v));
  } else {
    out.axis = geom::line_through(triples[0].f, triples[1].f);
  }

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto& a = triples[i];
      const auto& b = triples[j];
      PairRow row;
      row.a = i;
      row.b = j;
      row.label_a = a.label;
      row.label_b = b.label;
      const Line2h axis = common ? out.axis : geom::line_through(b.f, a.f);
      const Vertex v = homology_vertex(a, b);
      row.vertex = v.point;
      row.ideal_vertex = v.ideal;
      row.axis_residual = axis_consistency_residual(a, b, axis);
      row.mu_a = homology_cross_ratio(a, v.point, axis);
      row.mu_b = homology_cross_ratio(b, v.point, axis);
      const double den = std::max(std::abs(row.mu_a), std::abs(row.mu_b));
      row.diff_ratio_pct = den > 0 ? 100.0 * std::abs(row.mu_a - row.mu_b) / den : 0.0;
      row.verdict = row.diff_ratio_pct > th.tau_mu_pct || row.axis_residual > th.tau_axis
                        ? Verdict::suspicious
                        : Verdict::consistent;
      out.verdict = worst(out.verdict, row.verdict);
      out.rows.push_back(row);
    }
  }
  for (const auto* res : {&out.foot_residuals, &out.ray_residuals})
    for (double r : *res)
      if (r > th.tau_axis) out.verdict = Verdict::suspicious;
  return out;
}

}  // namespace geoforge::shadow
