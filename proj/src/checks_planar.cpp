#include <algorithm>
#include <cmath>
#include <numbers>

#include "check_util.hpp"
#include "geoforge/metrology.hpp"
#include "geoforge/rectify.hpp"

namespace geoforge::io::detail {

namespace {

using geom::Line2h;
using geom::Point2h;
using geom::Segment;

Line2h line_of(const Segment& s) { return geom::line_through(s.first, s.second); }

constexpr double kDeg = std::numbers::pi / 180.0;

// undirected angle between two lines, folded into [0, 90] degrees
double fold(double deg) {
  double d = std::fmod(std::abs(deg), 180.0);
  return std::min(d, 180.0 - d);
}

double line_angle_deg(const Line2h& l, const Line2h& m) {
  const double a = std::atan2(l.l().y(), l.l().x()), b = std::atan2(m.l().y(), m.l().x());
  return fold((b - a) / kDeg);
}

const std::vector<geom::Correspondence>& largest_plane(
    const std::map<std::string, std::vector<geom::Correspondence>>& planes, const std::string& want) {
  static const std::vector<geom::Correspondence> none;
  if (!want.empty()) {
    auto it = planes.find(want);
    return it == planes.end() ? none : it->second;
  }
  const std::vector<geom::Correspondence>* best = &none;
  for (const auto& [name, m] : planes)
    if (m.size() > best->size()) best = &m;
  return *best;
}

std::string group_of(const AnnotationSet& a, const std::string& seg) {
  for (const auto& [gid, g] : a.parallel_groups)
    if (std::find(g.segments.begin(), g.segments.end(), seg) != g.segments.end()) return gid;
  return "";
}

}  // namespace

void check_rectify(Ctx& c) {
  const AnnotationSet& a = c.a;
  const std::string method = c.params["method"];
  const double rel_tol = c.cfg.rectify.rel_tol;

  std::vector<std::string> known_ids;
  for (const auto& [id, s] : a.segments)
    if (s.length) known_ids.push_back(id);
  std::optional<rectify::KnownLength> known;
  std::string units;
  if (!known_ids.empty()) {
    const AnnotSegment& s = a.segments.at(known_ids[0]);
    known = rectify::KnownLength{a.segment(known_ids[0]), *s.length};
    units = s.units;
  }

  rectify::RectifyResult rr;
  std::map<std::string, Point2h> vps;
  if (method == "polygon") {
    const auto planes = world_planes(a);
    const std::string want = c.params["plane"];
    const auto& m = largest_plane(planes, want);
    require({{m.size() >= 4, "points with world coordinates (4 on one plane)"}});
    rr = rectify::rectify_polygon(m, known);
    if (!rr.scale) {
      // world coordinates already fix the scale
      rr.scale = 1.0;
      units = "world";
    }
  } else if (method == "vp") {
    for (const auto& [gid, g] : a.parallel_groups)
      if (g.role != "vertical") vps[gid] = geom::fit_vanishing_point(group_segments(a, g)).point;
    std::vector<rectify::MetricConstraint> cons;
    for (const auto& k : a.angles)
      cons.push_back(rectify::KnownAngle{line_of(a.segment(k.first)), line_of(a.segment(k.second)), k.degrees * kDeg});
    for (const auto& e : a.equal_angle_pairs)
      cons.push_back(rectify::EqualAngles{line_of(a.segment(e.first_a)), line_of(a.segment(e.first_b)),
                                          line_of(a.segment(e.second_a)), line_of(a.segment(e.second_b))});
    for (const auto& r : a.length_ratios)
      cons.push_back(rectify::LengthRatio{a.segment(r.first), a.segment(r.second), r.ratio});
    require({{vps.size() >= 2, "parallel_groups (2 on the plane)"},
             {cons.size() >= 2, "metric constraints (2 of angles, equal_angle_pairs, length_ratios)"}});
    std::vector<Point2h> pts;
    for (const auto& [gid, v] : vps) {
      pts.push_back(v);
      c.overlay(overlay_point("vp:" + gid, v));
    }
    rr = rectify::rectify_vanishing_points(pts, cons, known);
    // a right angle between two groups pins the focal length
    for (const auto& k : a.angles) {
      if (std::abs(k.degrees - 90.0) > 1e-9) continue;
      const std::string g1 = group_of(a, k.first), g2 = group_of(a, k.second);
      if (g1.empty() || g2.empty() || g1 == g2 || !vps.count(g1) || !vps.count(g2)) continue;
      try {
        const auto w = metrology::iac_from_orthogonal_vps(vps.at(g1), vps.at(g2), image_center(c));
        c.row({"focal", {{"f", w.K()(0, 0), "px"}}, std::nullopt, {g1 + " _|_ " + g2}});
      } catch (const GeoError& e) {
        c.diag(std::string("focal from orthogonal vanishing points: ") + e.what());
      }
      break;
    }
  } else {
    require({{a.ellipses.size() >= 2, "ellipses (2)"}});
    std::vector<geom::Conic> cs;
    for (const auto& [eid, e] : a.ellipses) {
      if (cs.size() == 2) break;
      std::vector<Point2h> pts;
      for (const auto& p : e.points) pts.push_back(a.point(p));
      cs.push_back(geom::fit_conic(pts).conic);
      c.overlay(overlay_conic("ellipse:" + eid, cs.back()));
    }
    rr = rectify::rectify_circles(cs[0], cs[1], known);
  }

  for (const auto& d : rr.diagnostics) c.diag(d);
  if (std::any_of(rr.diagnostics.begin(), rr.diagnostics.end(),
                  [](const std::string& d) { return d.find("two admissible") != std::string::npos; }))
    c.verdict(Verdict::inconclusive);
  c.overlay(overlay_line("vanishing-line", Line2h(rr.vline)));
  c.row({"fit", {{"residual", rr.residual, "dimensionless"}, {"alpha", rr.alpha, "dimensionless"},
                 {"beta", rr.beta, "dimensionless"}},
         std::nullopt, {rectify::to_string(rr.method)}});

  // lengths: absolute with a scale, else relative to the longest segment
  double longest = 0.0;
  std::map<std::string, double> raw;
  for (const auto& [id, s] : a.segments) {
    const Segment seg = a.segment(id);
    const auto p = rr.rectifier.apply(seg.first).euclidean(), q = rr.rectifier.apply(seg.second).euclidean();
    raw[id] = (p - q).norm();
    longest = std::max(longest, raw[id]);
  }
  for (const auto& [id, s] : a.segments) {
    const Segment seg = a.segment(id);
    Row r{id, {}, std::nullopt, {}};
    if (rr.scale) {
      const double len = rectify::measure_on_plane(seg.first, seg.second, rr);
      r.values.push_back({"length", len, units});
      if (s.length && id == known_ids[0]) {
        r.labels.push_back("reference");
      } else if (s.length) {
        const double err = std::abs(len - *s.length) / *s.length;
        r.values.push_back({"known", *s.length, s.units});
        r.values.push_back({"rel_error", 100.0 * err, "%"});
        r.verdict = err > rel_tol ? Verdict::suspicious : Verdict::consistent;
        c.verdict(*r.verdict);
      }
    } else {
      r.values.push_back({"relative_length", longest > 0 ? raw[id] / longest : 0.0, "dimensionless"});
    }
    c.row(r);
    c.overlay(overlay_segment("segment:" + id, seg.first, seg.second));
  }
  for (std::size_t i = 0; i < a.angles.size(); ++i) {
    const auto& k = a.angles[i];
    const Line2h l1 = rr.rectifier.apply_to_line(line_of(a.segment(k.first)));
    const Line2h l2 = rr.rectifier.apply_to_line(line_of(a.segment(k.second)));
    const double got = line_angle_deg(l1, l2), want = fold(k.degrees);
    const Verdict v = std::abs(got - want) > c.cfg.rectify.angle_tol_deg ? Verdict::suspicious : Verdict::consistent;
    c.row({"angle:" + k.first + "/" + k.second, {{"angle", got, "deg"}, {"stated", want, "deg"}}, v, {}});
    c.verdict(v);
  }
  c.threshold("rel_tol", 100.0 * rel_tol, "%");
  c.threshold("angle_tol", c.cfg.rectify.angle_tol_deg, "deg");

  if (c.params["preview"].get<bool>()) {
    if (!c.images.first) missing({"image"});
    try {
      const auto [h, box] = rectify::fit_to_box(rr.rectifier, c.images.first->width, c.images.first->height,
                                                c.cfg.rectify.preview_max_dim);
      c.out.preview = rectify::warp_image(*c.images.first, h, box).image;
    } catch (const GeoError& e) {
      c.diag(std::string("no preview: ") + e.what());
    }
  }
}

void check_height(Ctx& c) {
  const AnnotationSet& a = c.a;
  metrology::HeightProblem hp;
  for (const auto& [gid, g] : a.parallel_groups) {
    if (g.role == "vertical") {
      for (const auto& s : group_segments(a, g)) hp.verticals.push_back(s);
    } else if (g.role == "ground") {
      hp.ground_groups.push_back(group_segments(a, g));
    }
  }
  require({{a.reference_height.has_value(), "reference_height"},
           {a.reference_height && !a.reference_height->targets.empty(), "reference_height.targets"},
           {hp.verticals.size() >= 2, "parallel_groups with role vertical (2 segments)"},
           {hp.ground_groups.size() >= 2, "parallel_groups with role ground (2 groups)"}});
  const ReferenceHeight& ref = *a.reference_height;
  hp.reference = {a.point(ref.foot), a.point(ref.top)};
  hp.reference_height = ref.value;
  for (const auto& t : ref.targets) hp.targets.push_back({a.point(t.foot), a.point(t.top)});

  const auto heights = metrology::solve_heights(hp);
  const auto spread = metrology::height_jitter(hp, c.cfg.height.sigma_px, c.cfg.height.samples, c.cfg.seed);
  if (spread.samples < c.cfg.height.samples)
    c.diag(std::to_string(c.cfg.height.samples - spread.samples) + " jitter draws were degenerate and skipped");
  const double k = c.cfg.height.k_sigma;
  for (std::size_t i = 0; i < heights.size(); ++i) {
    const HeightTarget& t = ref.targets[i];
    const double sig = spread.sigma[i];
    Row r{t.id, {{"height", heights[i], ref.units}, {"sigma", sig, ref.units}}, std::nullopt, {}};
    if (t.claimed) {
      r.values.push_back({"claimed", *t.claimed, ref.units});
      if (!(sig > 0.0) || !std::isfinite(sig)) {
        r.verdict = Verdict::inconclusive;
        r.labels.push_back("no noise estimate");
      } else {
        const double z = std::abs(heights[i] - *t.claimed) / sig;
        r.values.push_back({"deviation", z, "sigma"});
        r.verdict = z > k ? Verdict::suspicious : Verdict::consistent;
      }
      c.verdict(*r.verdict);
    }
    c.row(r);
    c.overlay(overlay_segment("target:" + t.id, hp.targets[i].first, hp.targets[i].second));
    c.overlay(overlay_label("label:" + t.id, hp.targets[i].second, t.id));
  }
  c.overlay(overlay_segment("reference", hp.reference.first, hp.reference.second));
  const auto frame = metrology::frame_from_annotations(hp.verticals, hp.ground_groups);
  c.overlay(overlay_line("horizon", frame.horizon));
  c.overlay(overlay_point("v_z", frame.v_z));
  c.threshold("k_sigma", k, "dimensionless");
  c.threshold("sigma_px", c.cfg.height.sigma_px, "px");
}

void check_plane_measure(Ctx& c) {
  const AnnotationSet& a = c.a;
  const auto planes = world_planes(a);
  const auto& m = largest_plane(planes, planes.count("ground") ? "ground" : "");
  require({{m.size() >= 4, "points with world coordinates (4 on the ground plane)"},
           {!a.trace_lines.empty(), "trace_lines"}});
  const geom::Homography h = geom::dlt_homography(m);
  const Eigen::Vector2d pp = image_center(c);
  geom::Mat3 k;
  if (const auto f = focal(c.cfg.plane.focal_px, a)) {
    k << *f, 0, pp.x(), 0, *f, pp.y(), 0, 0, 1;
  } else {
    k = metrology::iac_from_plane_homography(h, pp).K();
    c.diag("intrinsics from the ground homography (zero skew, principal point at the center)");
  }
  c.row({"camera", {{"f", k(0, 0), "px"}, {"aspect", k(1, 1) / k(0, 0), "dimensionless"}}, std::nullopt, {}});
  const metrology::CameraMatrix p = metrology::camera_from_homography(h, k);
  const double tol = c.cfg.plane.rel_tol;

  for (std::size_t i = 0; i < a.trace_lines.size(); ++i) {
    const TraceLine& tl = a.trace_lines[i];
    const std::string tag = "trace" + std::to_string(i + 1);
    const Line2h trace = line_of(a.segment(tl.segment));
    c.overlay(overlay_line(tag, trace));
    metrology::Plane3 plane = metrology::vertical_plane_from_trace(trace, h);
    if (tl.parallel.size() == 2) {
      const auto root = metrology::plane_pencil_lambda(line_of(a.segment(tl.parallel[0])),
                                                       line_of(a.segment(tl.parallel[1])), p,
                                                       metrology::reference_plane(), plane);
      plane = root.plane;
      Row r{tag, {{"lambda", root.lambda, "dimensionless"}}, std::nullopt, {}};
      if (root.multiple) {
        r.verdict = Verdict::inconclusive;
        r.labels.push_back("several pencil roots; kept the smallest |lambda|");
        c.verdict(Verdict::inconclusive);
      }
      c.row(r);
    }
    for (const auto& pm : tl.measure) {
      const Point2h m1 = a.point(pm.a), m2 = a.point(pm.b);
      const double len = metrology::measure_on_plane_3d(m1, m2, p, plane);
      Row r{tag + ":" + pm.a + "-" + pm.b, {{"length", len, tl.units}}, std::nullopt, {}};
      if (pm.claimed) {
        const double err = std::abs(len - *pm.claimed) / *pm.claimed;
        r.values.push_back({"claimed", *pm.claimed, tl.units});
        r.values.push_back({"rel_error", 100.0 * err, "%"});
        r.verdict = err > tol ? Verdict::suspicious : Verdict::consistent;
        c.verdict(*r.verdict);
      }
      c.row(r);
      c.overlay(overlay_segment("measure:" + r.entity, m1, m2));
    }
  }
  c.threshold("rel_tol", 100.0 * tol, "%");
}

}  // namespace geoforge::io::detail
