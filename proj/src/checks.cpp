#include "geoforge/checks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>

#include "check_util.hpp"

namespace geoforge::io {

namespace {

struct CheckDef {
  std::string name;
  json defaults;
  std::map<std::string, std::vector<std::string>> choices;
  void (*run)(detail::Ctx&);
};

const std::vector<CheckDef>& table() {
  static const std::vector<CheckDef> t = {
      {"rectify",
       {{"method", "polygon"}, {"preview", false}, {"plane", ""}},
       {{"method", {"polygon", "vp", "circles"}}},
       detail::check_rectify},
      {"principal-point", json::object(), {}, detail::check_principal_point},
      {"skew", {{"mode", "planar"}}, {{"mode", {"planar", "fmatrix"}}}, detail::check_skew},
      {"twoview", {{"mode", "h"}, {"probe", nullptr}}, {{"mode", {"h", "f"}}}, detail::check_twoview},
      {"shadow", json::object(), {}, detail::check_shadow},
      {"height", json::object(), {}, detail::check_height},
      {"plane-measure", json::object(), {}, detail::check_plane_measure},
  };
  return t;
}

const CheckDef& find(const std::string& name) {
  for (const auto& d : table())
    if (d.name == name) return d;
  throw GeoError("UnknownCheck", "no check named '" + name + "'");
}

bool same_kind(const json& a, const json& b) {
  if (a.is_number() && b.is_number()) return true;
  return a.type() == b.type();
}

void probe_ok(const json& v) {
  if (v.is_null()) return;
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    throw GeoError("InvalidParams", "/probe: expected [x, y]");
}

// 8-bit quantized samples, so the digest does not depend on float layout
std::string raster_bytes(const ImageRaster* img) {
  if (!img) return "-";
  std::string s = std::to_string(img->width) + "x" + std::to_string(img->height) + "x" +
                  std::to_string(img->channels) + ":";
  s.reserve(s.size() + img->samples.size());
  for (float v : img->samples)
    s.push_back(static_cast<char>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f)));
  return s;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

const std::vector<std::string>& check_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& d : table()) n.push_back(d.name);
    return n;
  }();
  return names;
}

json check_params(const std::string& name, const json& given) {
  const CheckDef& d = find(name);
  json p = d.defaults;
  if (given.is_null()) return p;
  if (!given.is_object()) throw GeoError("InvalidParams", "parameters must be an object");
  for (const auto& [k, v] : given.items()) {
    if (!p.contains(k)) throw GeoError("InvalidParams", "/" + k + ": unknown parameter for " + name);
    if (k == "probe") {
      probe_ok(v);
    } else if (!same_kind(p[k], v)) {
      throw GeoError("InvalidParams", "/" + k + ": wrong type");
    }
    p[k] = v;
  }
  for (const auto& [k, allowed] : d.choices)
    if (std::find(allowed.begin(), allowed.end(), p[k].get<std::string>()) == allowed.end())
      throw GeoError("InvalidParams", "/" + k + ": unknown value '" + p[k].get<std::string>() + "'");
  return p;
}

CheckResult run_check(const std::string& name, const json& params, const AnnotationSet& annot,
                      const Images& images, const Config& config) {
  const CheckDef& d = find(name);
  const json p = check_params(name, params);
  CheckResult out;
  out.entry.check = name;
  out.entry.params = p;
  out.entry.inputs_digest = digest(save_annotations(annot) + "\n" + name + "\n" + p.dump() + "\n" +
                                   raster_bytes(images.first) + "\n" + raster_bytes(images.second));
  detail::Ctx ctx{annot, images, config, p, out};
  d.run(ctx);
  return out;
}

std::string entry_text(const Entry& e) {
  std::vector<std::vector<std::string>> cells;
  cells.push_back({"entity"});
  std::vector<std::string> heads;
  for (const auto& r : e.rows)
    for (const auto& v : r.values) {
      const std::string h = v.name + (v.unit == "dimensionless" ? "" : " [" + v.unit + "]");
      if (std::find(heads.begin(), heads.end(), h) == heads.end()) heads.push_back(h);
    }
  for (const auto& h : heads) cells[0].push_back(h);
  cells[0].push_back("verdict");
  for (const auto& r : e.rows) {
    std::vector<std::string> line(heads.size() + 2);
    line[0] = r.entity;
    for (const auto& v : r.values) {
      const std::string h = v.name + (v.unit == "dimensionless" ? "" : " [" + v.unit + "]");
      line[1 + static_cast<std::size_t>(std::find(heads.begin(), heads.end(), h) - heads.begin())] = fmt(v.value);
    }
    line.back() = r.verdict ? to_string(*r.verdict) : "";
    for (const auto& l : r.labels) line.back() += (line.back().empty() ? "" : " ") + l;
    cells.push_back(line);
  }
  std::vector<std::size_t> width(cells[0].size(), 0);
  for (const auto& l : cells)
    for (std::size_t i = 0; i < l.size(); ++i) width[i] = std::max(width[i], l[i].size());
  std::string s = e.check + ": " + to_string(e.verdict) + "\n";
  for (const auto& l : cells) {
    std::string line;
    for (std::size_t i = 0; i < l.size(); ++i) {
      line += l[i];
      if (i + 1 < l.size()) line += std::string(width[i] - l[i].size() + 2, ' ');
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    s += "  " + line + "\n";
  }
  for (const auto& dg : e.diagnostics) s += "  note: " + dg + "\n";
  return s;
}

namespace detail {

Eigen::Vector2d image_center(const Ctx& c) {
  return {c.a.image.width / 2.0, c.a.image.height / 2.0};
}

double image_diagonal(const Ctx& c) { return std::hypot(c.a.image.width, c.a.image.height); }

std::optional<double> focal(const std::optional<double>& from_config, const AnnotationSet& a) {
  return from_config ? from_config : a.image.focal_px;
}

std::map<std::string, std::vector<geom::Correspondence>> world_planes(const AnnotationSet& a) {
  std::map<std::string, std::vector<geom::Correspondence>> out;
  for (const auto& [id, p] : a.points)
    if (p.world) out[p.plane].push_back({geom::Point2h(p.world->first, p.world->second), geom::Point2h(p.x, p.y)});
  return out;
}

std::vector<geom::Segment> group_segments(const AnnotationSet& a, const ParallelGroup& g) {
  std::vector<geom::Segment> s;
  for (const auto& id : g.segments) s.push_back(a.segment(id));
  return s;
}

geom::Mat3 centering(const Eigen::Vector2d& c) {
  geom::Mat3 t = geom::Mat3::Identity();
  t(0, 2) = -c.x();
  t(1, 2) = -c.y();
  return t;
}

}  // namespace detail

}  // namespace geoforge::io
