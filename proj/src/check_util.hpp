#pragma once

#include <map>
#include <string>
#include <vector>

#include "geoforge/checks.hpp"
#include "geoforge/error.hpp"

namespace geoforge::io::detail {

struct Ctx {
  const AnnotationSet& a;
  const Images& images;
  const Config& cfg;
  const json& params;
  CheckResult& out;

  Entry& entry() { return out.entry; }
  void row(Row r) { out.entry.rows.push_back(std::move(r)); }
  void threshold(const std::string& name, double v, const std::string& unit) {
    out.entry.thresholds.push_back({name, v, unit});
  }
  void diag(const std::string& s) { out.entry.diagnostics.push_back(s); }
  void overlay(json o) { out.overlays.push_back(std::move(o)); }
  void verdict(Verdict v) { out.entry.verdict = worst(out.entry.verdict, v); }
};

[[noreturn]] inline void missing(const std::vector<std::string>& needs) {
  std::string s;
  for (const auto& n : needs) s += (s.empty() ? "" : ", ") + n;
  throw GeoError("MissingAnnotations", s);
}

inline void require(const std::vector<std::pair<bool, std::string>>& needs) {
  std::vector<std::string> lacking;
  for (const auto& [ok, what] : needs)
    if (!ok) lacking.push_back(what);
  if (!lacking.empty()) missing(lacking);
}

/// Image center and diagonal from the annotated frame size.
Eigen::Vector2d image_center(const Ctx& c);
double image_diagonal(const Ctx& c);

/// Focal length from a config override, else the annotation's image entry.
std::optional<double> focal(const std::optional<double>& from_config, const AnnotationSet& a);

/// World-point correspondences (world -> image) grouped by plane name.
std::map<std::string, std::vector<geom::Correspondence>> world_planes(const AnnotationSet& a);

std::vector<geom::Segment> group_segments(const AnnotationSet& a, const ParallelGroup& g);

/// Translation taking the image center to the origin.
geom::Mat3 centering(const Eigen::Vector2d& c);

void check_rectify(Ctx& c);
void check_principal_point(Ctx& c);
void check_skew(Ctx& c);
void check_twoview(Ctx& c);
void check_shadow(Ctx& c);
void check_height(Ctx& c);
void check_plane_measure(Ctx& c);

}  // namespace geoforge::io::detail
