#include "geoforge/twoview.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/Geometry>

#include "geoforge/error.hpp"
#include "geoforge/rectify.hpp"
#include "optim.hpp"

namespace geoforge::twoview {

using geom::Mat3;
using geom::Vec3;

namespace {

// One match per bucket per sample; buckets tile the bounding box of the x1 points.
class BucketSampler {
 public:
  BucketSampler(const std::vector<Correspondence>& m, int rows, int cols, std::uint64_t seed)
      : rng_(seed), n_(m.size()) {
    rows = std::max(rows, 1);
    cols = std::max(cols, 1);
    Eigen::Vector2d lo(1e300, 1e300), hi(-1e300, -1e300);
    std::vector<Eigen::Vector2d> p;
    for (const auto& c : m) {
      p.push_back(c.x1.euclidean());
      lo = lo.cwiseMin(p.back());
      hi = hi.cwiseMax(p.back());
    }
    const Eigen::Vector2d span = (hi - lo).cwiseMax(Eigen::Vector2d(1e-9, 1e-9));
    std::vector<std::vector<std::size_t>> grid(static_cast<std::size_t>(rows) * cols);
    for (std::size_t i = 0; i < p.size(); ++i) {
      const int bx = std::min(cols - 1, static_cast<int>((p[i].x() - lo.x()) / span.x() * cols));
      const int by = std::min(rows - 1, static_cast<int>((p[i].y() - lo.y()) / span.y() * rows));
      grid[static_cast<std::size_t>(by) * cols + bx].push_back(i);
    }
    for (auto& b : grid)
      if (!b.empty()) buckets_.push_back(std::move(b));
  }

  std::vector<std::size_t> draw(std::size_t k) {
    std::vector<std::size_t> out;
    if (buckets_.size() >= k) {
      std::vector<std::size_t> ids(buckets_.size());
      std::iota(ids.begin(), ids.end(), 0);
      for (std::size_t j = 0; j < k; ++j) {
        std::uniform_int_distribution<std::size_t> pick(j, ids.size() - 1);
        std::swap(ids[j], ids[pick(rng_)]);
        const auto& b = buckets_[ids[j]];
        std::uniform_int_distribution<std::size_t> member(0, b.size() - 1);
        out.push_back(b[member(rng_)]);
      }
      return out;
    }
    // too few occupied buckets: plain sampling without replacement
    std::vector<std::size_t> ids(n_);
    std::iota(ids.begin(), ids.end(), 0);
    for (std::size_t j = 0; j < k; ++j) {
      std::uniform_int_distribution<std::size_t> pick(j, n_ - 1);
      std::swap(ids[j], ids[pick(rng_)]);
      out.push_back(ids[j]);
    }
    return out;
  }

 private:
  std::mt19937_64 rng_;
  std::size_t n_;
  std::vector<std::vector<std::size_t>> buckets_;
};

int iterations_needed(double inlier_ratio, std::size_t s, double confidence, int cap) {
  const double w = std::pow(inlier_ratio, static_cast<double>(s));
  if (w >= 1.0 - 1e-12) return 1;
  if (w <= 0.0) return cap;
  const double n = std::log(1.0 - confidence) / std::log(1.0 - w);
  return static_cast<int>(std::min<double>(cap, std::ceil(n)));
}

void check_config(const RansacConfig& cfg) {
  if (cfg.max_iters < 1 || !(cfg.inlier_tol > 0) || !(cfg.confidence > 0 && cfg.confidence < 1))
    throw GeoError("InvalidConfig", "RANSAC needs max_iters >= 1, inlier_tol > 0, 0 < confidence < 1");
}

bool consensus_ok(std::size_t inliers, std::size_t n, std::size_t s) {
  const double margin = 0.05;
  return static_cast<double>(inliers) >= s + margin * static_cast<double>(n - s);
}

double transfer_rms(const Correspondence& c, const Mat3& h, const Mat3& hinv) {
  const Vec3 a = h * c.x1.h();
  const Vec3 b = hinv * c.x2.h();
  if (std::abs(a(2)) < 1e-300 || std::abs(b(2)) < 1e-300) return 1e300;
  const double d1 = (a.head<2>() / a(2) - c.x2.euclidean()).squaredNorm();
  const double d2 = (b.head<2>() / b(2) - c.x1.euclidean()).squaredNorm();
  return std::sqrt(0.5 * (d1 + d2));
}

std::vector<std::size_t> h_inliers(const std::vector<Correspondence>& m, const Homography& h,
                                   double tol) {
  const Mat3 hm = h.matrix(), hi = h.inverse().matrix();
  std::vector<std::size_t> in;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (transfer_rms(m[i], hm, hi) <= tol) in.push_back(i);
  return in;
}

std::vector<std::size_t> f_inliers(const std::vector<Correspondence>& m, const Mat3& f,
                                   double tol) {
  std::vector<std::size_t> in;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (sampson_distance(m[i].x1, m[i].x2, f) <= tol) in.push_back(i);
  return in;
}

std::vector<Correspondence> subset(const std::vector<Correspondence>& m,
                                   const std::vector<std::size_t>& ids) {
  std::vector<Correspondence> out;
  out.reserve(ids.size());
  for (auto i : ids) out.push_back(m[i]);
  return out;
}

double signed_sampson(const Vec3& x1, const Vec3& x2, const Mat3& f) {
  const Vec3 a = f * x1, b = f.transpose() * x2;
  const double den = a(0) * a(0) + a(1) * a(1) + b(0) * b(0) + b(1) * b(1);
  if (den <= 0) return 0.0;
  return x2.dot(a) / std::sqrt(den);
}

Mat3 rodrigues(const Vec3& w) {
  const double t = w.norm();
  if (t < 1e-300) return Mat3::Identity();
  return Eigen::AngleAxisd(t, w / t).toRotationMatrix();
}

// Sampson refinement over rank-2 matrices F = U diag(1, s, 0) V^T.
Mat3 refine_fundamental(const std::vector<Correspondence>& m, const Mat3& f0) {
  Eigen::JacobiSVD<Mat3> svd(f0, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u0 = svd.matrixU(), v0 = svd.matrixV();
  const Eigen::Vector3d sv = svd.singularValues();
  if (sv(0) <= 0) return f0;
  std::vector<Vec3> p1, p2;
  for (const auto& c : m) {
    p1.push_back(c.x1.normalized());
    p2.push_back(c.x2.normalized());
  }
  auto build = [&](const Eigen::VectorXd& x) {
    const Mat3 u = u0 * rodrigues(x.segment<3>(0));
    const Mat3 v = v0 * rodrigues(x.segment<3>(3));
    return Mat3(u * Eigen::Vector3d(1.0, x(6), 0.0).asDiagonal() * v.transpose());
  };
  auto residuals = [&](const Eigen::VectorXd& x) {
    const Mat3 f = build(x);
    Eigen::VectorXd r(static_cast<int>(p1.size()));
    for (std::size_t i = 0; i < p1.size(); ++i) r(static_cast<int>(i)) = signed_sampson(p1[i], p2[i], f);
    return r;
  };
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(7);
  x0(6) = sv(1) / sv(0);
  auto cost = [&](const Eigen::VectorXd& x) { return residuals(x).squaredNorm(); };
  const auto fit = optim::least_squares(residuals, static_cast<int>(p1.size()), x0, 100 * 15, 1e-10);
  if (!(cost(fit.x) <= cost(x0))) return f0;
  return build(fit.x);
}

}  // namespace

HomographyFit ransac_homography(const std::vector<Correspondence>& matches,
                                const RansacConfig& cfg) {
  check_config(cfg);
  const std::size_t n = matches.size(), s = 4;
  if (n < s) throw GeoError("InsufficientMatches", "homography needs at least four matches");
  BucketSampler sampler(matches, cfg.bucket_rows, cfg.bucket_cols, cfg.seed);
  std::vector<std::size_t> best;
  int needed = cfg.max_iters, it = 0;
  for (; it < needed && it < cfg.max_iters; ++it) {
    const auto ids = sampler.draw(s);
    std::vector<std::size_t> in;
    try {
      in = h_inliers(matches, geom::dlt_homography(subset(matches, ids)), cfg.inlier_tol);
    } catch (const GeoError&) {
      continue;  // degenerate sample
    }
    if (in.size() > best.size()) {
      best = std::move(in);
      needed = iterations_needed(static_cast<double>(best.size()) / n, s, cfg.confidence,
                                 cfg.max_iters);
    }
  }
  if (best.size() < s || !consensus_ok(best.size(), n, s))
    throw GeoError("NoConsensus", "no homography is supported by enough matches");
  HomographyFit out;
  out.iterations = it;
  out.h = geom::dlt_homography(subset(matches, best));
  for (int k = 0; k < 5; ++k) {
    auto in = h_inliers(matches, out.h, cfg.inlier_tol);
    if (in == best || in.size() < s) break;
    best = std::move(in);
    out.h = geom::dlt_homography(subset(matches, best));
  }
  out.inliers = best;
  return out;
}

FundamentalFit ransac_fundamental(const std::vector<Correspondence>& matches,
                                  const RansacConfig& cfg) {
  check_config(cfg);
  const std::size_t n = matches.size(), s = 8;
  if (n < s) throw GeoError("InsufficientMatches", "fundamental matrix needs at least eight matches");
  BucketSampler sampler(matches, cfg.bucket_rows, cfg.bucket_cols, cfg.seed);
  std::vector<std::size_t> best;
  int needed = cfg.max_iters, it = 0;
  for (; it < needed && it < cfg.max_iters; ++it) {
    const auto ids = sampler.draw(s);
    FundamentalMatrix f;
    try {
      f = camera::estimate_fundamental(subset(matches, ids));
    } catch (const GeoError&) {
      continue;
    }
    auto in = f_inliers(matches, f.matrix(), cfg.inlier_tol);
    if (in.size() > best.size()) {
      best = std::move(in);
      needed = iterations_needed(static_cast<double>(best.size()) / n, s, cfg.confidence,
                                 cfg.max_iters);
    }
  }
  if (best.size() < s || !consensus_ok(best.size(), n, s))
    throw GeoError("NoConsensus", "no fundamental matrix is supported by enough matches");
  FundamentalFit out;
  out.iterations = it;
  Mat3 f = camera::estimate_fundamental(subset(matches, best)).matrix();
  f = refine_fundamental(subset(matches, best), f);
  out.f = FundamentalMatrix(f);
  auto in = f_inliers(matches, out.f.matrix(), cfg.inlier_tol);
  out.inliers = in.size() >= s ? in : best;
  return out;
}

DifferenceMap difference_map(const ImageRaster& i1, const ImageRaster& i2, const Homography& h,
                             int window) {
  if (i1.empty() || i2.empty() || i1.width != i2.width || i1.height != i2.height)
    throw GeoError("SizeMismatch", "image pair must be non-empty and of equal size");
  if (window < 1) throw GeoError("InvalidConfig", "window half-size must be >= 1");
  const int w = i2.width, ht = i2.height;
  const auto warped = rectify::warp_image(i1, h, rectify::Rect{0, 0, w, ht});
  const ImageRaster a = to_gray(warped.image), b = to_gray(i2);

  // integral images of centered values to limit cancellation
  const std::size_t stride = static_cast<std::size_t>(w) + 1;
  std::vector<double> sa(stride * (ht + 1)), sb(sa.size()), saa(sa.size()), sbb(sa.size()),
      sab(sa.size()), bad(sa.size());
  for (int y = 0; y < ht; ++y) {
    for (int x = 0; x < w; ++x) {
      const bool ok = warped.valid.at(x, y);
      const double va = ok ? a.at(x, y) - 0.5 : 0.0, vb = b.at(x, y) - 0.5;
      const std::size_t i = (y + 1) * stride + x + 1;
      const std::size_t up = y * stride + x + 1, left = (y + 1) * stride + x, diag = y * stride + x;
      auto acc = [&](std::vector<double>& s, double v) { s[i] = v + s[up] + s[left] - s[diag]; };
      acc(sa, va);
      acc(sb, vb);
      acc(saa, va * va);
      acc(sbb, vb * vb);
      acc(sab, va * vb);
      acc(bad, ok ? 0.0 : 1.0);
    }
  }

  DifferenceMap out;
  out.width = w;
  out.height = ht;
  out.d.assign(static_cast<std::size_t>(w) * ht, 0.0);
  out.valid = Mask(w, ht);
  const double n = (2.0 * window + 1) * (2.0 * window + 1);
  const double var_eps = 1e-9 * n;
  for (int y = window; y < ht - window; ++y) {
    for (int x = window; x < w - window; ++x) {
      const std::size_t x0 = x - window, x1 = x + window + 1, y0 = y - window, y1 = y + window + 1;
      auto box = [&](const std::vector<double>& s) {
        return s[y1 * stride + x1] - s[y0 * stride + x1] - s[y1 * stride + x0] + s[y0 * stride + x0];
      };
      if (box(bad) > 0.5) continue;
      const double ma = box(sa), mb = box(sb);
      const double va = box(saa) - ma * ma / n, vb = box(sbb) - mb * mb / n;
      const double cov = box(sab) - ma * mb / n;
      double d = 0.0;
      if (va > var_eps && vb > var_eps) d = 1.0 - std::clamp(cov / std::sqrt(va * vb), -1.0, 1.0);
      out.d[static_cast<std::size_t>(y) * w + x] = d;
      out.valid.set(x, y, true);
    }
  }
  return out;
}

std::vector<Component> label_components(Mask& mask, std::size_t min_area) {
  const int w = mask.width, h = mask.height;
  std::vector<std::uint8_t> seen(mask.bits.size(), 0);
  std::vector<Component> out;
  std::vector<std::size_t> stack, members;
  for (std::size_t start = 0; start < mask.bits.size(); ++start) {
    if (!mask.bits[start] || seen[start]) continue;
    Component c;
    c.min_x = c.max_x = static_cast<int>(start % w);
    c.min_y = c.max_y = static_cast<int>(start / w);
    members.clear();
    stack.assign(1, start);
    seen[start] = 1;
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      members.push_back(i);
      const int x = static_cast<int>(i % w), y = static_cast<int>(i / w);
      c.min_x = std::min(c.min_x, x);
      c.max_x = std::max(c.max_x, x);
      c.min_y = std::min(c.min_y, y);
      c.max_y = std::max(c.max_y, y);
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = x + dx, ny = y + dy;
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          const std::size_t j = static_cast<std::size_t>(ny) * w + nx;
          if (mask.bits[j] && !seen[j]) {
            seen[j] = 1;
            stack.push_back(j);
          }
        }
      }
    }
    c.area = members.size();
    if (c.area < min_area) {
      for (auto i : members) mask.bits[i] = 0;
    } else {
      out.push_back(c);
    }
  }
  return out;
}

FakeRegionMask fake_mask_from_difference(const DifferenceMap& d, double c, double d_floor,
                                         std::size_t min_area) {
  FakeRegionMask out;
  out.mask = Mask(d.width, d.height);
  if (c < 0.3 || c > 0.6)
    out.warnings.push_back("c outside the recommended range [0.3, 0.6]");
  double dmax = -1.0;
  for (std::size_t i = 0; i < d.d.size(); ++i)
    if (d.valid.bits[i]) dmax = std::max(dmax, d.d[i]);
  if (dmax < 0) throw GeoError("EmptyValidRegion", "difference map has no valid pixels");
  out.threshold = dmax - c;
  if (dmax < d_floor) return out;
  for (std::size_t i = 0; i < d.d.size(); ++i)
    if (d.valid.bits[i] && d.d[i] > out.threshold) out.mask.bits[i] = 1;
  out.components = label_components(out.mask, min_area);
  return out;
}

double epipolar_distance(const Point2h& x1, const Point2h& x2, const FundamentalMatrix& f) {
  const Vec3 l = f.matrix() * x1.unit();
  const double nn = std::hypot(l(0), l(1));
  if (nn < 1e-12) throw GeoError("DegenerateEpipolarLine", "x1 lies at the epipole");
  const Vec3 p = x2.normalized();
  return std::abs(p.dot(l)) / nn;
}

double sampson_distance(const Point2h& x1, const Point2h& x2, const Mat3& f) {
  return std::abs(signed_sampson(x1.normalized(), x2.normalized(), f));
}

FakeCandidates fake_candidates(const std::vector<Correspondence>& matches,
                               const FundamentalMatrix& f, double t, double dilation_radius,
                               int width, int height, std::size_t min_area) {
  if (!(t > 0)) throw GeoError("InvalidConfig", "distance threshold must be positive");
  FakeCandidates out;
  out.mask.mask = Mask(width, height);
  out.mask.threshold = t;
  const double r = std::max(dilation_radius, 0.0);
  for (std::size_t i = 0; i < matches.size(); ++i) {
    if (epipolar_distance(matches[i].x1, matches[i].x2, f) <= t) continue;
    out.psi.push_back(i);
    const Eigen::Vector2d p = matches[i].x2.euclidean();
    const int xa = std::max(0, static_cast<int>(std::floor(p.x() - r)));
    const int xb = std::min(width - 1, static_cast<int>(std::ceil(p.x() + r)));
    const int ya = std::max(0, static_cast<int>(std::floor(p.y() - r)));
    const int yb = std::min(height - 1, static_cast<int>(std::ceil(p.y() + r)));
    for (int y = ya; y <= yb; ++y)
      for (int x = xa; x <= xb; ++x)
        if ((x - p.x()) * (x - p.x()) + (y - p.y()) * (y - p.y()) <= r * r)
          out.mask.mask.set(x, y, true);
  }
  out.mask.components = label_components(out.mask.mask, min_area);
  return out;
}

HDetection detect_with_homography(const ImageRaster& i1, const ImageRaster& i2,
                                  const std::vector<Correspondence>& matches,
                                  const TwoViewConfig& cfg) {
  HDetection out;
  out.fit = ransac_homography(matches, cfg.ransac);
  out.diff = difference_map(i1, i2, out.fit.h, cfg.window);
  out.mask = fake_mask_from_difference(out.diff, cfg.c, cfg.d_floor, cfg.min_area);
  return out;
}

FDetection detect_with_fundamental(const std::vector<Correspondence>& matches, int width,
                                   int height, const TwoViewConfig& cfg) {
  FDetection out;
  out.fit = ransac_fundamental(matches, cfg.ransac);
  out.candidates = fake_candidates(matches, out.fit.f, cfg.t, cfg.dilation_radius, width, height,
                                   cfg.min_area);
  return out;
}

}  // namespace geoforge::twoview
