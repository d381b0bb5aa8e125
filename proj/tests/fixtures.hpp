#pragma once

// Annotation sets built from the synthetic scenes, one family per check.
// Every builder round-trips through the JSON loader so the result is
// something a user could have written.

#include <string>
#include <vector>

#include "geoforge/annotations.hpp"
#include "scenes.hpp"
#include "synth.hpp"

namespace fixtures {

using geoforge::io::AnnotationSet;
using synth::Mat3;
using synth::Mat34;
using synth::Rng;
using synth::Vec2;
using synth::Vec3;

struct Builder {
  AnnotationSet a;
  int n = 0;

  Builder(int w, int h) {
    a.image.width = w;
    a.image.height = h;
  }
  std::string pt(const Vec2& p) {
    const std::string id = "p" + std::to_string(++n);
    a.points[id] = {p.x(), p.y(), std::nullopt, ""};
    return id;
  }
  std::string world(const Vec2& p, double wx, double wy, const std::string& plane = "") {
    const std::string id = pt(p);
    a.points[id].world = std::make_pair(wx, wy);
    a.points[id].plane = plane;
    return id;
  }
  std::string seg(const Vec2& p, const Vec2& q, const std::string& id) {
    a.segments[id] = {pt(p), pt(q), "", std::nullopt, ""};
    return id;
  }
  AnnotationSet done() const { return geoforge::io::load_annotations(geoforge::io::save_annotations(a)); }
};

inline Mat34 view(const Mat3& k, const Vec3& eye, const Vec3& target, double roll = 0.0) {
  return synth::camera(k, synth::rot_z(roll) * synth::look_at(eye, target), eye);
}

// A 4 x 3 rectangle on the ground with two circles inside, seen obliquely.
struct PlaneScene {
  Mat34 p;
  Vec2 img(double x, double y) const { return synth::project(p, Vec3(x, y, 0)); }
};

inline PlaneScene plane_scene() {
  const Mat3 k = synth::intrinsics(800, 320, 240);
  return {view(k, Vec3(-1.5, -6.5, 5.5), Vec3(2, 1.5, 0), 0.3)};
}

// Known lengths on two rectangle sides; `bad_length` misstates the second.
inline AnnotationSet polygon_annot(double bad_length = 3.0) {
  const PlaneScene s = plane_scene();
  Builder b(640, 480);
  for (auto [x, y] : {std::pair{0.0, 0.0}, {4.0, 0.0}, {4.0, 3.0}, {0.0, 3.0}}) b.world(s.img(x, y), x, y, "ground");
  b.seg(s.img(0, 0), s.img(4, 0), "bottom");
  b.a.segments["bottom"].length = 4.0;
  b.a.segments["bottom"].units = "m";
  b.seg(s.img(0, 0), s.img(0, 3), "left");
  b.a.segments["left"].length = bad_length;
  b.a.segments["left"].units = "m";
  b.seg(s.img(1, 1), s.img(3, 2), "diag");
  b.a.angles.push_back({"bottom", "left", 90.0});
  return b.done();
}

inline AnnotationSet vp_annot() {
  const PlaneScene s = plane_scene();
  Builder b(640, 480);
  b.seg(s.img(0, 0), s.img(4, 0), "x0");
  b.seg(s.img(0, 3), s.img(4, 3), "x1");
  b.seg(s.img(0, 1.5), s.img(4, 1.5), "x2");
  b.seg(s.img(0, 0), s.img(0, 3), "y0");
  b.seg(s.img(4, 0), s.img(4, 3), "y1");
  b.seg(s.img(1, 1), s.img(3, 2), "diag");
  b.a.segments["x0"].length = 4.0;
  b.a.segments["x0"].units = "m";
  b.a.segments["y0"].length = 3.0;
  b.a.segments["y0"].units = "m";
  b.a.parallel_groups["gx"] = {{"x0", "x1", "x2"}, ""};
  b.a.parallel_groups["gy"] = {{"y0", "y1"}, ""};
  b.a.angles.push_back({"x0", "y0", 90.0});
  b.a.length_ratios.push_back({"x0", "y0", 4.0 / 3.0});
  return b.done();
}

inline AnnotationSet circles_annot() {
  const PlaneScene s = plane_scene();
  Builder b(640, 480);
  const std::pair<Vec2, double> circles[2] = {{Vec2(1.1, 1.0), 0.8}, {Vec2(2.9, 2.0), 0.7}};
  for (int c = 0; c < 2; ++c) {
    geoforge::io::Ellipse e;
    for (int i = 0; i < 8; ++i) {
      const double t = 2 * synth::kPi * i / 8;
      const Vec2 w = circles[c].first + circles[c].second * Vec2(std::cos(t), std::sin(t));
      e.points.push_back(b.pt(s.img(w.x(), w.y())));
    }
    b.a.ellipses["c" + std::to_string(c + 1)] = e;
  }
  b.seg(s.img(0, 0), s.img(4, 0), "bottom");
  b.a.segments["bottom"].length = 4.0;
  b.a.segments["bottom"].units = "m";
  b.seg(s.img(0, 0), s.img(0, 3), "left");
  b.a.segments["left"].length = 3.0;
  b.a.segments["left"].units = "m";
  return b.done();
}

// Two faces seen by one camera (f = 800, 640 x 480). `shift` moves the
// second face's image, as a pasted-in person would be.
inline AnnotationSet eyes_annot(const Vec2& shift = Vec2::Zero()) {
  const double rho = 11.0;
  const Mat3 k = synth::intrinsics(800, 320, 240);
  Builder b(640, 480);
  b.a.image.focal_px = 800;
  auto face = [&](const std::string& id, const Vec3& eye, const Vec3& target, const Vec2& off) {
    const Mat3 h = synth::ground_homography(synth::camera(k, synth::look_at(eye, target, Vec3(0, -1, 0)), eye));
    geoforge::io::EyePair e;
    e.id = id;
    for (int i = 0; i < 12; ++i) {
      const double t = 2 * synth::kPi * i / 12;
      e.left.push_back(b.pt(synth::apply(h, Vec2(std::cos(t), std::sin(t))) + off));
      e.right.push_back(b.pt(synth::apply(h, Vec2(rho + std::cos(t), std::sin(t))) + off));
    }
    e.interocular_ratio = rho;
    b.a.eyes.push_back(e);
  };
  face("P1", Vec3(rho / 2 + 20, 6, -38), Vec3(rho / 2 + 6, 3, 0), Vec2::Zero());
  face("P2", Vec3(rho / 2 - 18, -4, -42), Vec3(rho / 2 - 6, -3, 0), shift);
  return b.done();
}

// Ground and a wall seen by one camera; `skew` enters K.
inline AnnotationSet skew_planar_annot(double skew = 0.0) {
  const Mat3 k = synth::intrinsics(800, 320, 240, skew);
  const Mat34 p = view(k, Vec3(-3, -7, 4), Vec3(1.5, 2, 1), 0.2);
  Builder b(640, 480);
  for (double x : {0.0, 1.5, 3.0})
    for (double y : {0.0, 1.0, 1.8}) b.world(synth::project(p, Vec3(x, y, 0)), x, y, "ground");
  for (double x : {0.0, 1.5, 3.0})
    for (double z : {0.3, 1.2, 2.0}) b.world(synth::project(p, Vec3(x, 2.5, z)), x, z, "wall");
  b.a.image.focal_px = 800;
  return b.done();
}

// Three image pairs from one camera; `skew` enters K.
inline AnnotationSet fmatrix_annot(double skew = 0.0, std::uint64_t seed = 5) {
  const Mat3 k = synth::intrinsics(700, 320, 240, skew);
  Rng r(seed);
  Builder b(640, 480);
  for (int set = 0; set < 3; ++set) {
    const Mat3 rot = synth::rot_x(r.uniform(-0.15, 0.15)) * synth::rot_y(r.uniform(-0.25, 0.25)) *
                     synth::rot_z(r.uniform(-0.15, 0.15));
    const Vec3 t(r.uniform(-1, 1), r.uniform(-0.5, 0.5), r.uniform(-0.3, 0.3));
    Mat34 p1, p2;
    p1 << k, Vec3::Zero();
    p2 << k * rot, k * t;
    int got = 0;
    while (got < 24) {
      const Vec3 x(r.uniform(-2, 2), r.uniform(-1.5, 1.5), r.uniform(5, 10));
      const Vec2 u = synth::project(p1, x), v = synth::project(p2, x);
      auto in = [](const Vec2& q) { return q.x() >= 0 && q.y() >= 0 && q.x() <= 640 && q.y() <= 480; };
      if (!in(u) || !in(v)) continue;
      b.a.correspondences.push_back({u.x(), u.y(), v.x(), v.y(), "pair" + std::to_string(set + 1)});
      ++got;
    }
  }
  return b.done();
}

inline AnnotationSet matches_annot(const std::vector<geoforge::geom::Correspondence>& m, int w, int h) {
  Builder b(w, h);
  for (const auto& c : m) {
    const auto a = c.x1.euclidean(), z = c.x2.euclidean();
    b.a.correspondences.push_back({a.x(), a.y(), z.x(), z.y(), ""});
  }
  return b.done();
}

// Sticks under one point light; `stretch` pushes the last shadow that many
// pixels further along its light ray.
inline AnnotationSet shadow_annot(std::uint64_t seed, int objects = 3, double stretch = 0.0) {
  Rng r(seed);
  const synth::ShadowScene sc = synth::shadow_scene(r, objects);
  Builder b(640, 480);
  for (int i = 0; i < objects; ++i) {
    const Vec2 s = i == objects - 1 ? Vec2(sc.s[i] + stretch * (sc.s[i] - sc.t[i]).normalized()) : sc.s[i];
    b.a.shadow_triples.push_back({b.pt(sc.t[i]), b.pt(sc.f[i]), b.pt(s), "R" + std::to_string(i + 1)});
  }
  return b.done();
}

inline AnnotationSet height_annot(std::uint64_t seed, std::optional<double> claimed = 68.75) {
  Rng r(seed);
  const synth::HeightScene sc = synth::height_scene(r);
  Builder b(640, 480);
  geoforge::io::ParallelGroup v{{}, "vertical"};
  for (std::size_t i = 0; i < sc.verticals.size(); ++i)
    v.segments.push_back(b.seg(sc.verticals[i].first, sc.verticals[i].second, "v" + std::to_string(i + 1)));
  b.a.parallel_groups["poles"] = v;
  for (std::size_t g = 0; g < sc.ground.size(); ++g) {
    geoforge::io::ParallelGroup pg{{}, "ground"};
    for (std::size_t i = 0; i < sc.ground[g].size(); ++i)
      pg.segments.push_back(b.seg(sc.ground[g][i].first, sc.ground[g][i].second,
                                  "g" + std::to_string(g + 1) + "_" + std::to_string(i + 1)));
    b.a.parallel_groups["ground" + std::to_string(g + 1)] = pg;
  }
  geoforge::io::ReferenceHeight ref;
  ref.foot = b.pt(sc.reference.first);
  ref.top = b.pt(sc.reference.second);
  ref.value = sc.z_ref;
  ref.units = "in";
  ref.targets.push_back({"T1", b.pt(sc.target.first), b.pt(sc.target.second), claimed});
  b.a.reference_height = ref;
  return b.done();
}

// Ground rectangle with world coordinates and a wall standing on y = 4;
// a 2 m vertical mark on the wall.
inline AnnotationSet plane_annot(std::optional<double> claimed = 2.0, bool with_focal = true) {
  const Mat3 k = synth::intrinsics(800, 320, 240);
  const Mat34 p = view(k, Vec3(-2, -6, 3.5), Vec3(3, 3, 1), 0.25);
  auto img = [&](double x, double y, double z) { return synth::project(p, Vec3(x, y, z)); };
  Builder b(640, 480);
  if (with_focal) b.a.image.focal_px = 800;
  for (auto [x, y] : {std::pair{0.0, 0.0}, {6.0, 0.0}, {6.0, 3.0}, {0.0, 3.0}}) b.world(img(x, y, 0), x, y, "ground");
  b.seg(img(1, 4, 0), img(5, 4, 0), "trace");
  geoforge::io::TraceLine tl;
  tl.segment = "trace";
  tl.units = "m";
  tl.measure.push_back({b.pt(img(2, 4, 0.5)), b.pt(img(2, 4, 2.5)), claimed});
  tl.measure.push_back({b.pt(img(3, 4, 1.0)), b.pt(img(4.5, 4, 1.0)), std::nullopt});
  b.a.trace_lines.push_back(tl);
  return b.done();
}

}  // namespace fixtures
