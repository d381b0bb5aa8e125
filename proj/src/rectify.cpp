#include "geoforge/rectify.hpp"

#include <algorithm>
#include <cmath>

namespace geoforge::rectify {

using geom::CVec3;
using geom::Mat3;
using geom::Vec3;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Jacobian determinant of x -> h(x) at the finite point p (w = 1); its sign
// tells whether the map keeps the handedness of the image near p.
double local_orientation(const Mat3& h, const Vec3& p) {
  const double w = (h * p)(2);
  return h.determinant() / (w * w * w);
}

Homography rotation(double phi) {
  Mat3 r;
  r << std::cos(phi), -std::sin(phi), 0, std::sin(phi), std::cos(phi), 0, 0, 0, 1;
  return Homography(r);
}

double steepest_ratio(const std::vector<Line2h>& lines, const Mat3& frame) {
  double worst = 1.0;
  for (const auto& l : lines) {
    const Vec3 m = frame.inverse().transpose() * l.l();
    const double n = m.head<2>().norm();
    if (n > 0) worst = std::min(worst, std::abs(m(0)) / n);
  }
  return worst;
}

Eigen::Vector2d frame_point(const Mat3& h, const Point2h& p) {
  return Point2h(h * p.h()).euclidean();
}

void attach_scale(RectifyResult& rr, const std::optional<KnownLength>& known) {
  if (!known) return;
  const Segment s{rr.rectifier.apply(known->image_segment.first),
                  rr.rectifier.apply(known->image_segment.second)};
  rr.scale = similarity_scale(s, known->world_length);
}

}  // namespace

const char* to_string(Method m) {
  switch (m) {
    case Method::polygon: return "polygon";
    case Method::vanishing_points: return "vp";
    case Method::circles: return "circles";
  }
  return "unknown";
}

Homography projective_rectifier(const Line2h& vline) {
  const Vec3 l = vline.l();
  const double n = l.norm();
  Mat3 h = Mat3::Identity();
  if (std::abs(l(2)) >= 1e-8 * n) {
    h.row(2) = (l / l(2)).transpose();
  } else {
    // Vanishing line through the origin: move the line into the last row
    // and keep the two coordinates it does not annihilate.
    Eigen::Index big = std::abs(l(0)) >= std::abs(l(1)) ? 0 : 1;
    const Eigen::Index other = 1 - big;
    h.setZero();
    h(0, other) = 1;
    h(1, 2) = 1;
    h.row(2) = (l / l(big)).transpose();
  }
  return Homography(h);
}

double direction_parameter(const Line2h& l) {
  const Vec3& m = l.l();
  if (std::abs(m(0)) < 1e-8 * m.head<2>().norm() || m.head<2>().norm() == 0.0)
    throw GeoError("VerticalLineDirection", "line direction has no finite slope parameter");
  return -m(1) / m(0);
}

ConstraintCircle circle_from_known_angle(const Line2h& m, const Line2h& n, double theta) {
  const double a = direction_parameter(m);
  const double b = direction_parameter(n);
  const double s = std::sin(theta);
  if (!(theta > 0.0 && theta < kPi) || std::abs(s) < 1e-12)
    throw GeoError("ZeroAngle", "known angle must lie strictly between 0 and pi");
  return {(a + b) / 2.0, (a - b) / 2.0 * std::cos(theta) / s, std::abs((a - b) / (2.0 * s))};
}

ConstraintCircle circle_from_equal_angles(double a1, double b1, double a2, double b2) {
  const double den = a1 - b1 - a2 + b2;
  const double scale = std::max({std::abs(a1), std::abs(b1), std::abs(a2), std::abs(b2), 1.0});
  if (std::abs(den) < 1e-12 * scale)
    throw GeoError("DegenerateDirections", "equal-angle directions give a zero denominator");
  const double c = (a1 * b2 - b1 * a2) / den;
  const double r2 = c * c + ((a2 - b2) * a1 * b1 - (a1 - b1) * a2 * b2) / den;
  if (r2 < -1e-12 * scale * scale)
    throw GeoError("ImaginaryRadius", "equal-angle constraint has no real solution");
  return {c, 0.0, std::sqrt(std::max(r2, 0.0))};
}

ConstraintCircle circle_from_length_ratio(const Segment& i, const Segment& j, double rho) {
  if (!(rho > 0.0)) throw GeoError("NonPositiveRatio", "length ratio must be positive");
  const Eigen::Vector2d di = i.second.euclidean() - i.first.euclidean();
  const Eigen::Vector2d dj = j.second.euclidean() - j.first.euclidean();
  const double cross = dj(0) * di(1) - di(0) * dj(1);
  if (std::abs(cross) <= 1e-12 * di.norm() * dj.norm())
    throw GeoError("ParallelSegments", "length-ratio segments are parallel");
  const double r2 = rho * rho;
  const double den = di(1) * di(1) - r2 * dj(1) * dj(1);
  if (std::abs(den) <= 1e-12 * (di.squaredNorm() + r2 * dj.squaredNorm()))
    throw GeoError("DegenerateDenominator", "length-ratio constraint is degenerate");
  return {(di(0) * di(1) - r2 * dj(0) * dj(1)) / den, 0.0, std::abs(rho * cross / den)};
}

AlphaBeta solve_alpha_beta(const ConstraintCircle& c1, const ConstraintCircle& c2) {
  const Eigen::Vector2d p1(c1.center_alpha, c1.center_beta);
  const Eigen::Vector2d p2(c2.center_alpha, c2.center_beta);
  const double d = (p2 - p1).norm();
  const double scale = std::max({c1.radius, c2.radius, p1.norm(), p2.norm(), 1.0});
  if (d <= 1e-12 * scale) {
    if (std::abs(c1.radius - c2.radius) <= 1e-12 * scale)
      throw GeoError("CoincidentCircles", "constraint circles coincide");
    throw GeoError("NoIntersection", "constraint circles are concentric");
  }
  const double eps = 1e-6 * (c1.radius + c2.radius);
  if (d > c1.radius + c2.radius + eps || d < std::abs(c1.radius - c2.radius) - eps)
    throw GeoError("NoIntersection", "constraint circles do not intersect");
  const Eigen::Vector2d e = (p2 - p1) / d;
  const Eigen::Vector2d perp(-e(1), e(0));
  const double a = (c1.radius * c1.radius - c2.radius * c2.radius + d * d) / (2 * d);
  const double h = std::sqrt(std::max(c1.radius * c1.radius - a * a, 0.0));

  AlphaBeta out;
  for (double sgn : {1.0, -1.0}) {
    const Eigen::Vector2d q = p1 + a * e + sgn * h * perp;
    if (q(1) > 1e-12) out.candidates.emplace_back(q(0), q(1));
    if (h == 0.0) break;
  }
  if (out.candidates.empty())
    throw GeoError("NoIntersection", "constraint circles meet only at beta <= 0");
  auto mild = [](const std::pair<double, double>& c) {
    return c.first * c.first + (c.second - 1.0) * (c.second - 1.0);
  };
  std::sort(out.candidates.begin(), out.candidates.end(),
            [&](const auto& x, const auto& y) { return mild(x) < mild(y); });
  out.alpha = out.candidates.front().first;
  out.beta = out.candidates.front().second;
  return out;
}

Homography affine_rectifier(double alpha, double beta) {
  if (!(beta > 0.0)) throw GeoError("NonPositiveBeta", "beta must be positive");
  Mat3 h;
  h << 1.0 / beta, -alpha / beta, 0, 0, 1, 0, 0, 0, 1;
  return Homography(h);
}

std::pair<double, double> alpha_beta_of(const Eigen::Matrix2d& a) {
  const Eigen::Matrix2d inv = a.inverse();
  Eigen::Matrix2d n = inv * inv.transpose();
  n /= n(1, 1);
  const double alpha = n(0, 1);
  return {alpha, std::sqrt(std::max(n(0, 0) - alpha * alpha, 0.0))};
}

RectifyResult rectify_polygon(const std::vector<Correspondence>& matches,
                              const std::optional<KnownLength>& known) {
  const Homography h = geom::dlt_homography(matches);
  RectifyResult rr;
  rr.method = Method::polygon;
  rr.rectifier = h.inverse();
  rr.vline = (h.matrix().inverse().transpose() * Vec3(0, 0, 1)).normalized();
  rr.projective = projective_rectifier(Line2h(rr.vline));
  const Mat3 m = rr.rectifier.matrix() * rr.projective.inverse().matrix();
  std::tie(rr.alpha, rr.beta) = alpha_beta_of(m.topLeftCorner<2, 2>() / m(2, 2));
  rr.affine = affine_rectifier(rr.alpha, rr.beta);

  double sq = 0.0;
  for (const auto& c : matches)
    sq += (rr.rectifier.apply(c.x2).euclidean() - c.x1.euclidean()).squaredNorm();
  rr.residual = std::sqrt(sq / static_cast<double>(matches.size()));
  attach_scale(rr, known);
  return rr;
}

RectifyResult rectify_vanishing_points(const std::vector<Point2h>& vanishing_points,
                                       const std::vector<MetricConstraint>& constraints,
                                       const std::optional<KnownLength>& known) {
  if (vanishing_points.size() < 2)
    throw GeoError("InsufficientConstraints", "need at least two vanishing points");
  RectifyResult rr;
  rr.method = Method::vanishing_points;
  Line2h vline;
  if (vanishing_points.size() == 2) {
    vline = geom::vanishing_line(vanishing_points[0], vanishing_points[1]);
  } else {
    auto [l, res] = geom::fit_line(vanishing_points);
    vline = l;
    rr.diagnostics.push_back("vanishing line fit residual " + std::to_string(res));
  }
  rr.vline = vline.canonical();
  rr.projective = projective_rectifier(vline);
  const Mat3 hp = rr.projective.matrix();

  std::vector<Line2h> lines;
  for (const auto& c : constraints) {
    if (auto* k = std::get_if<KnownAngle>(&c)) {
      lines.push_back(k->first);
      lines.push_back(k->second);
    } else if (auto* e = std::get_if<EqualAngles>(&c)) {
      lines.insert(lines.end(), {e->first_a, e->first_b, e->second_a, e->second_b});
    }
  }
  // A constraint line parallel to the frame's y axis has no slope
  // parameter; quarter-turn the affine frame when that happens.
  Homography frame;
  if (steepest_ratio(lines, hp) < 1e-8) {
    frame = rotation(kPi / 2);
    double best = steepest_ratio(lines, frame.matrix() * hp);
    for (int k = 1; k < 24 && best < 1e-8; ++k) {
      const Homography r = rotation(k * kPi / 24);
      const double q = steepest_ratio(lines, r.matrix() * hp);
      if (q > best) best = q, frame = r;
    }
    rr.diagnostics.push_back("affine frame rotated to avoid a vertical constraint direction");
  }
  const Mat3 fh = frame.matrix() * hp;
  const Homography to_affine(fh);

  std::vector<ConstraintCircle> circles;
  for (const auto& c : constraints) {
    if (auto* k = std::get_if<KnownAngle>(&c)) {
      const Line2h m = to_affine.apply_to_line(k->first);
      const Line2h n = to_affine.apply_to_line(k->second);
      double theta = k->radians;
      const Point2h x = geom::meet(k->first, k->second);
      if (!x.is_ideal() && local_orientation(fh, x.normalized()) < 0) theta = kPi - theta;
      circles.push_back(circle_from_known_angle(m, n, theta));
    } else if (auto* e = std::get_if<EqualAngles>(&c)) {
      circles.push_back(circle_from_equal_angles(
          direction_parameter(to_affine.apply_to_line(e->first_a)),
          direction_parameter(to_affine.apply_to_line(e->first_b)),
          direction_parameter(to_affine.apply_to_line(e->second_a)),
          direction_parameter(to_affine.apply_to_line(e->second_b))));
    } else {
      const auto& r = std::get<LengthRatio>(c);
      auto move = [&](const Point2h& p) { return Point2h(frame_point(fh, p).homogeneous()); };
      circles.push_back(circle_from_length_ratio({move(r.first.first), move(r.first.second)},
                                                 {move(r.second.first), move(r.second.second)},
                                                 r.ratio));
    }
  }
  if (circles.size() < 2)
    throw GeoError("InsufficientConstraints", "need at least two metric constraints");

  const AlphaBeta ab = solve_alpha_beta(circles[0], circles[1]);
  auto misfit = [&](double a, double b) {
    double sq = 0.0;
    for (const auto& c : circles) {
      const double e = std::hypot(a - c.center_alpha, b - c.center_beta) - c.radius;
      sq += e * e;
    }
    return std::sqrt(sq / static_cast<double>(circles.size()));
  };
  std::pair<double, double> pick{ab.alpha, ab.beta};
  if (circles.size() > 2) {
    for (const auto& cand : ab.candidates)
      if (misfit(cand.first, cand.second) < misfit(pick.first, pick.second)) pick = cand;
  } else if (ab.candidates.size() > 1) {
    rr.diagnostics.push_back("two admissible (alpha, beta) roots; kept the one nearest (0, 1)");
  }
  rr.residual = misfit(pick.first, pick.second);

  // Express the result in the unrotated affine frame.
  const Homography metric = affine_rectifier(pick.first, pick.second) * frame;
  std::tie(rr.alpha, rr.beta) = alpha_beta_of(metric.matrix().topLeftCorner<2, 2>());
  rr.affine = affine_rectifier(rr.alpha, rr.beta);
  rr.rectifier = rr.affine * rr.projective;
  attach_scale(rr, known);
  return rr;
}

RectifyResult rectify_circles(const Conic& e1, const Conic& e2,
                              const std::optional<KnownLength>& known) {
  const auto ix = geom::conic_intersections(e1, e2);
  if (!ix.circular_pair)
    throw GeoError("NoConjugatePair", "conic intersections contain no complex-conjugate pair");
  const CVec3 hi = ix.points[ix.circular_pair->first];

  RectifyResult rr;
  rr.method = Method::circles;
  rr.vline = geom::real_line_through_conjugates(hi);
  rr.projective = projective_rectifier(Line2h(rr.vline));

  const std::complex<double> i(0.0, 1.0);
  auto read = [&](const CVec3& p) {
    CVec3 q = rr.projective.matrix().cast<std::complex<double>>() * p;
    q /= q(1) / i;
    return q;
  };
  CVec3 q = read(hi);
  if (q(0).real() < 0) q = read(hi.conjugate());
  rr.beta = q(0).real();
  rr.alpha = q(0).imag();
  rr.residual = std::abs(q(2)) / q.norm();
  rr.affine = affine_rectifier(rr.alpha, rr.beta);
  rr.rectifier = rr.affine * rr.projective;
  attach_scale(rr, known);
  return rr;
}

double similarity_scale(const Segment& rectified, double world_length) {
  if (!(world_length > 0.0)) throw GeoError("ZeroLength", "world length must be positive");
  const double len = (rectified.second.euclidean() - rectified.first.euclidean()).norm();
  if (!(len > 0.0) || !std::isfinite(len))
    throw GeoError("ZeroLength", "rectified reference segment has no length");
  return world_length / len;
}

double measure_on_plane(const Point2h& p, const Point2h& q, const RectifyResult& rr) {
  if (!rr.scale) throw GeoError("NoScale", "rectification carries no metric scale");
  const auto a = rr.rectifier.apply(p).euclidean();
  const auto b = rr.rectifier.apply(q).euclidean();
  return (a - b).norm() * *rr.scale;
}

WarpedImage warp_image(const ImageRaster& src, const Homography& h, const Rect& bounds) {
  const Mat3 inv = h.inverse().matrix();
  WarpedImage out{ImageRaster(bounds.width, bounds.height, src.channels, src.depth),
                  Mask(bounds.width, bounds.height)};
  const double tol = 1e-6;
  for (int y = 0; y < bounds.height; ++y) {
    for (int x = 0; x < bounds.width; ++x) {
      const Vec3 s = inv * Vec3(x + bounds.x0, y + bounds.y0, 1.0);
      if (std::abs(s(2)) < 1e-300) continue;
      double sx = s(0) / s(2), sy = s(1) / s(2);
      if (!(sx > -tol && sy > -tol && sx < src.width - 1 + tol && sy < src.height - 1 + tol))
        continue;
      sx = std::clamp(sx, 0.0, src.width - 1.0);
      sy = std::clamp(sy, 0.0, src.height - 1.0);
      const int x0 = std::min(static_cast<int>(sx), std::max(src.width - 2, 0));
      const int y0 = std::min(static_cast<int>(sy), std::max(src.height - 2, 0));
      const int x1 = std::min(x0 + 1, src.width - 1);
      const int y1 = std::min(y0 + 1, src.height - 1);
      const double fx = sx - x0, fy = sy - y0;
      for (int c = 0; c < src.channels; ++c) {
        const double top = (1 - fx) * src.at(x0, y0, c) + fx * src.at(x1, y0, c);
        const double bot = (1 - fx) * src.at(x0, y1, c) + fx * src.at(x1, y1, c);
        out.image.at(x, y, c) = static_cast<float>((1 - fy) * top + fy * bot);
      }
      out.valid.set(x, y, true);
    }
  }
  quantize(out.image);
  return out;
}

std::pair<Homography, Rect> fit_to_box(const Homography& h, int src_width, int src_height,
                                       int max_dim) {
  if (src_width <= 0 || src_height <= 0 || max_dim <= 1)
    throw GeoError("InvalidRaster", "empty source frame");
  Eigen::Vector2d lo(1e300, 1e300), hi(-1e300, -1e300);
  double sign = 0.0;
  for (const auto& [x, y] : {std::pair{0.0, 0.0}, {src_width - 1.0, 0.0},
                             {0.0, src_height - 1.0}, {src_width - 1.0, src_height - 1.0}}) {
    const Vec3 q = h.matrix() * Vec3(x, y, 1.0);
    if (sign == 0.0) sign = q(2) > 0 ? 1.0 : -1.0;
    if (q(2) * sign <= 0)
      throw GeoError("InfiniteExtent", "the vanishing line crosses the source frame");
    const Eigen::Vector2d e = q.head<2>() / q(2);
    lo = lo.cwiseMin(e);
    hi = hi.cwiseMax(e);
  }
  const Eigen::Vector2d ext = hi - lo;
  const double s = (max_dim - 1) / std::max(ext.maxCoeff(), 1e-300);
  Mat3 sim;
  sim << s, 0, -s * lo(0), 0, s, -s * lo(1), 0, 0, 1;
  // rounding can push ceil() one past the box
  Rect r{0, 0, std::min(max_dim, static_cast<int>(std::ceil(s * ext(0))) + 1),
         std::min(max_dim, static_cast<int>(std::ceil(s * ext(1))) + 1)};
  return {Homography(sim) * h, r};
}

}  // namespace geoforge::rectify
