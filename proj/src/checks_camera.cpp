#include <cmath>
#include <cstdio>

#include "check_util.hpp"
#include "geoforge/camera.hpp"
#include "geoforge/shadow.hpp"
#include "geoforge/twoview.hpp"

namespace geoforge::io::detail {

namespace {

using geom::Point2h;

std::string num(const char* name, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s=%.4f", name, v);
  return buf;
}

std::vector<Point2h> points_of(const AnnotationSet& a, const std::vector<std::string>& ids) {
  std::vector<Point2h> p;
  for (const auto& id : ids) p.push_back(a.point(id));
  return p;
}

std::vector<geom::Correspondence> all_matches(const AnnotationSet& a) {
  std::vector<geom::Correspondence> m;
  for (const auto& c : a.correspondences) m.push_back({Point2h(c.x1, c.y1), Point2h(c.x2, c.y2)});
  return m;
}

void component_rows(Ctx& c, const twoview::FakeRegionMask& fm) {
  for (std::size_t i = 0; i < fm.components.size(); ++i) {
    const auto& k = fm.components[i];
    c.row({"region" + std::to_string(i + 1),
           {{"area", static_cast<double>(k.area), "px^2"},
            {"min_x", static_cast<double>(k.min_x), "px"},
            {"min_y", static_cast<double>(k.min_y), "px"},
            {"max_x", static_cast<double>(k.max_x), "px"},
            {"max_y", static_cast<double>(k.max_y), "px"}},
           Verdict::suspicious,
           {}});
  }
  for (const auto& w : fm.warnings) c.diag(w);
  c.verdict(fm.components.empty() ? Verdict::consistent : Verdict::suspicious);
  c.out.mask = fm.mask;
  c.overlay(overlay_mask("fake-mask", fm.mask));
}

}  // namespace

void check_principal_point(Ctx& c) {
  const AnnotationSet& a = c.a;
  const auto f = focal(c.cfg.principal_point.focal_px, a);
  require({{!a.eyes.empty(), "eyes"}, {f.has_value(), "image.focal_px"}});
  const Eigen::Vector2d ctr = image_center(c);
  const double tau = c.cfg.principal_point.tau_frac * image_diagonal(c);
  std::vector<Eigen::Vector2d> pps;
  std::vector<bool> weak;
  for (const auto& e : a.eyes) {
    camera::EyeAnnotation ea{points_of(a, e.left), points_of(a, e.right), e.interocular_ratio.value_or(11.0)};
    const auto h = camera::eye_plane_homography(ea);
    const auto pp = camera::principal_point_from_h(h, *f, ctr);
    const Eigen::Vector2d at(pp.u0, pp.v0);
    pps.push_back(at);
    weak.push_back(pp.weak);
    Row r{e.id,
          {{"u0", pp.u0, "px"}, {"v0", pp.v0, "px"}, {"offset", (at - ctr).norm(), "px"},
           {"residual", pp.residual, "dimensionless"}},
          std::nullopt,
          {}};
    if (pp.weak) {
      r.verdict = Verdict::inconclusive;
      r.labels.push_back("nearly fronto-parallel");
      c.verdict(Verdict::inconclusive);
    }
    c.row(r);
    c.overlay(overlay_point("pp:" + e.id, Point2h(pp.u0, pp.v0)));
    c.overlay(overlay_label("label:" + e.id, Point2h(pp.u0, pp.v0), e.id));
    c.overlay(overlay_conic("limbus:" + e.id + ":left", geom::fit_conic(ea.left_limbus).conic));
    c.overlay(overlay_conic("limbus:" + e.id + ":right", geom::fit_conic(ea.right_limbus).conic));
  }
  // weak estimates are noise; they take no part in the comparisons
  if (pps.size() == 1 && !weak[0]) {
    // one person: compare against the image center
    const double d = (pps[0] - ctr).norm();
    const Verdict v = d > tau ? Verdict::suspicious : Verdict::consistent;
    c.row({"center", {{"distance", d, "px"}}, v, {a.eyes[0].id + " vs image center"}});
    c.verdict(v);
  }
  for (std::size_t i = 0; i < pps.size(); ++i)
    for (std::size_t j = i + 1; j < pps.size(); ++j) {
      if (weak[i] || weak[j]) continue;
      const double d = (pps[i] - pps[j]).norm();
      const Verdict v = d > tau ? Verdict::suspicious : Verdict::consistent;
      c.row({a.eyes[i].id + "/" + a.eyes[j].id, {{"distance", d, "px"}}, v, {}});
      c.verdict(v);
    }
  c.overlay(overlay_point("image-center", Point2h(ctr.x(), ctr.y())));
  c.threshold("tau", tau, "px");
  c.threshold("focal", *f, "px");
}

void check_skew(Ctx& c) {
  const AnnotationSet& a = c.a;
  const Eigen::Vector2d ctr = image_center(c);
  const geom::Mat3 t = centering(ctr);
  const double tau = c.cfg.skew.tau;
  if (c.params["mode"] == "planar") {
    std::vector<geom::Homography> hs;
    std::vector<std::string> names;
    for (const auto& [name, m] : world_planes(a))
      if (m.size() >= 4) {
        hs.emplace_back(t * geom::dlt_homography(m).matrix());
        names.push_back(name.empty() ? "(default)" : name);
      }
    const auto f = focal(c.cfg.skew.focal_px, a);
    require({{hs.size() >= 2, "points with world coordinates (4 on each of 2 planes)"},
             {f.has_value(), "image.focal_px"}});
    const auto b = camera::estimate_B(hs);
    const double s = camera::skew_from_B(b, *f);
    const double ratio = std::abs(s) / *f;
    const Verdict v = ratio > tau ? Verdict::suspicious : Verdict::consistent;
    c.row({"camera", {{"skew", s, "px"}, {"skew_ratio", ratio, "dimensionless"}, {"f", *f, "px"}}, v, names});
    c.verdict(v);
  } else {
    std::map<std::string, std::vector<geom::Correspondence>> sets;
    for (const auto& m : a.correspondences)
      sets[m.set].push_back({Point2h(m.x1 - ctr.x(), m.y1 - ctr.y()), Point2h(m.x2 - ctr.x(), m.y2 - ctr.y())});
    std::vector<camera::FundamentalMatrix> fs;
    for (const auto& [name, m] : sets)
      if (m.size() >= 8) fs.push_back(camera::estimate_fundamental(m));
    require({{!fs.empty(), "correspondences (8 in a set)"}});
    const double w = std::max(a.image.width, a.image.height);
    const auto est = camera::minimize_skew(fs, c.cfg.skew.f_min_frac * w, c.cfg.skew.f_max_frac * w, c.cfg.skew.s_frac);
    for (const auto& d : est.diagnostics) c.diag(d);
    const double ratio = std::abs(est.s) / est.f;
    Row r{"camera",
          {{"f", est.f, "px"}, {"skew", est.s, "px"}, {"skew_ratio", ratio, "dimensionless"},
           {"cost", est.cost, "dimensionless"}},
          ratio > tau ? Verdict::suspicious : Verdict::consistent,
          {std::to_string(fs.size()) + " fundamental matrices"}};
    if (est.flat && r.verdict == Verdict::consistent) {
      r.verdict = Verdict::inconclusive;
      r.labels.push_back("flat cost surface");
    }
    c.row(r);
    c.verdict(*r.verdict);
    c.threshold("f_min", c.cfg.skew.f_min_frac * w, "px");
    c.threshold("f_max", c.cfg.skew.f_max_frac * w, "px");
  }
  c.threshold("tau", tau, "dimensionless");
}

void check_twoview(Ctx& c) {
  const AnnotationSet& a = c.a;
  const auto matches = all_matches(a);
  twoview::TwoViewConfig cfg = c.cfg.twoview;
  cfg.ransac.seed = c.cfg.seed;
  if (c.params["mode"] == "h") {
    require({{c.images.first != nullptr, "image"}, {c.images.second != nullptr, "image2"},
             {matches.size() >= 4, "correspondences (4)"}});
    const auto det = twoview::detect_with_homography(*c.images.first, *c.images.second, matches, cfg);
    c.row({"fit",
           {{"inliers", static_cast<double>(det.fit.inliers.size()), "count"},
            {"matches", static_cast<double>(matches.size()), "count"},
            {"threshold", det.mask.threshold, "dimensionless"}},
           std::nullopt,
           {"homography"}});
    component_rows(c, det.mask);
    c.threshold("c", cfg.c, "dimensionless");
  } else {
    require({{matches.size() >= 8, "correspondences (8)"}});
    const int w = c.images.second ? c.images.second->width : a.image.width;
    const int h = c.images.second ? c.images.second->height : a.image.height;
    const auto det = twoview::detect_with_fundamental(matches, w, h, cfg);
    const geom::Mat3& fm = det.fit.f.matrix();
    c.row({"fit",
           {{"inliers", static_cast<double>(det.fit.inliers.size()), "count"},
            {"matches", static_cast<double>(matches.size()), "count"}},
           std::nullopt,
           {"fundamental"}});
    for (std::size_t i : det.candidates.psi) {
      const double d = twoview::epipolar_distance(matches[i].x1, matches[i].x2, det.fit.f);
      c.row({"match" + std::to_string(i), {{"epipolar_distance", d, "px"}}, Verdict::suspicious, {}});
      c.overlay(overlay_line("epipolar:match" + std::to_string(i), geom::Line2h(fm * matches[i].x1.h())));
    }
    component_rows(c, det.candidates.mask);
    if (!c.params["probe"].is_null()) {
      const Point2h x(c.params["probe"][0].get<double>(), c.params["probe"][1].get<double>());
      c.overlay(overlay_line("epipolar:probe", geom::Line2h(fm * x.h())));
    }
    c.threshold("t", cfg.t, "px");
  }
  c.threshold("inlier_tol", cfg.ransac.inlier_tol, "px");
}

void check_shadow(Ctx& c) {
  const AnnotationSet& a = c.a;
  require({{a.shadow_triples.size() >= 2, "shadow_triples (2)"}});
  std::vector<shadow::ShadowTriple> ts;
  for (const auto& t : a.shadow_triples) ts.push_back({a.point(t.top), a.point(t.foot), a.point(t.shadow), t.label});
  const auto rep = shadow::shadow_composite_check(ts, {c.cfg.shadow.tau_mu_pct, c.cfg.shadow.tau_axis});
  for (const auto& r : rep.rows) {
    const std::string pair = r.label_a + "/" + r.label_b;
    Row row{pair,
            {{"mu_a", r.mu_a, "dimensionless"}, {"mu_b", r.mu_b, "dimensionless"},
             {"diff_ratio", r.diff_ratio_pct, "%"}, {"axis_residual", r.axis_residual, "dimensionless"}},
            r.verdict,
            {}};
    if (r.ideal_vertex) row.labels.push_back("light rays parallel");
    c.row(row);
    c.overlay(overlay_point("vertex:" + pair, r.vertex));
    c.overlay(overlay_label("mu:" + pair + ":" + r.label_a, ts[r.a].t, num("mu", r.mu_a)));
    c.overlay(overlay_label("mu:" + pair + ":" + r.label_b, ts[r.b].t, num("mu", r.mu_b)));
  }
  for (std::size_t i = 0; i < rep.foot_residuals.size(); ++i)
    c.row({"foot:" + ts[i].label, {{"axis_distance", rep.foot_residuals[i], "dimensionless"}}, std::nullopt, {}});
  for (std::size_t i = 0; i < rep.ray_residuals.size(); ++i)
    c.row({"ray:" + ts[i].label, {{"vertex_distance", rep.ray_residuals[i], "dimensionless"}}, std::nullopt, {}});
  for (const auto& t : ts) {
    c.overlay(overlay_segment("ray:" + t.label, t.t, t.s));
    c.overlay(overlay_segment("object:" + t.label, t.f, t.t));
  }
  c.overlay(overlay_line("axis", rep.axis));
  c.verdict(rep.verdict);
  c.threshold("tau_mu", c.cfg.shadow.tau_mu_pct, "%");
  c.threshold("tau_axis", c.cfg.shadow.tau_axis, "dimensionless");
}

}  // namespace geoforge::io::detail
