#include "geoforge/report.hpp"

#include <cmath>
#include <cstdio>

#include "geoforge/error.hpp"

namespace geoforge::io {

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

// user keys must exist in the defaults with a compatible type
void overlay_checked(json& base, const json& user, const std::string& where) {
  if (!user.is_object()) throw GeoError("ConfigError", where + ": expected an object");
  for (const auto& [k, v] : user.items()) {
    const std::string w = where + "/" + k;
    if (!base.contains(k)) throw GeoError("ConfigError", w + ": unknown key");
    json& b = base[k];
    if (b.is_object()) {
      overlay_checked(b, v, w);
    } else if (b.is_null() || b.is_number_float()) {
      if (!v.is_number() && !(b.is_null() && v.is_null()))
        throw GeoError("ConfigError", w + ": expected a number");
      b = v.is_null() ? json(nullptr) : json(v.get<double>());
    } else if (b.is_number_integer() || b.is_number_unsigned()) {
      if (!v.is_number_integer() || v.get<long long>() < 0)
        throw GeoError("ConfigError", w + ": expected a non-negative integer");
      b = v;
    } else {
      throw GeoError("ConfigError", w + ": not configurable");
    }
  }
}

std::optional<double> get_opt(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

json value_json(const Value& v) { return {{"name", v.name}, {"value", v.value}, {"unit", v.unit}}; }

}  // namespace

json config_json(const Config& c) {
  const auto& r = c.twoview.ransac;
  return {
      {"seed", c.seed},
      {"rectify", {{"preview_max_dim", c.rectify.preview_max_dim}, {"rel_tol", c.rectify.rel_tol}, {"angle_tol_deg", c.rectify.angle_tol_deg}}},
      {"principal_point", {{"tau_frac", c.principal_point.tau_frac}, {"focal_px", opt(c.principal_point.focal_px)}}},
      {"skew",
       {{"tau", c.skew.tau},
        {"focal_px", opt(c.skew.focal_px)},
        {"f_min_frac", c.skew.f_min_frac},
        {"f_max_frac", c.skew.f_max_frac},
        {"s_frac", c.skew.s_frac}}},
      {"twoview",
       {{"window", c.twoview.window},
        {"c", c.twoview.c},
        {"d_floor", c.twoview.d_floor},
        {"t", c.twoview.t},
        {"dilation_radius", c.twoview.dilation_radius},
        {"min_area", c.twoview.min_area},
        {"ransac",
         {{"max_iters", r.max_iters},
          {"inlier_tol", r.inlier_tol},
          {"bucket_rows", r.bucket_rows},
          {"bucket_cols", r.bucket_cols},
          {"confidence", r.confidence}}}}},
      {"shadow", {{"tau_mu_pct", c.shadow.tau_mu_pct}, {"tau_axis", c.shadow.tau_axis}}},
      {"height", {{"sigma_px", c.height.sigma_px}, {"samples", c.height.samples}, {"k_sigma", c.height.k_sigma}}},
      {"plane", {{"rel_tol", c.plane.rel_tol}, {"focal_px", opt(c.plane.focal_px)}}},
  };
}

Config load_config(const std::string& text) {
  json user;
  try {
    user = json::parse(text);
  } catch (const json::parse_error& e) {
    throw GeoError("ParseError", "config at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  json j = config_json(Config{});
  overlay_checked(j, user, "");
  Config c;
  c.seed = j["seed"].get<std::uint64_t>();
  c.rectify.preview_max_dim = j["rectify"]["preview_max_dim"].get<int>();
  c.rectify.rel_tol = j["rectify"]["rel_tol"].get<double>();
  c.rectify.angle_tol_deg = j["rectify"]["angle_tol_deg"].get<double>();
  c.principal_point.tau_frac = j["principal_point"]["tau_frac"].get<double>();
  c.principal_point.focal_px = get_opt(j["principal_point"]["focal_px"]);
  c.skew.tau = j["skew"]["tau"].get<double>();
  c.skew.focal_px = get_opt(j["skew"]["focal_px"]);
  c.skew.f_min_frac = j["skew"]["f_min_frac"].get<double>();
  c.skew.f_max_frac = j["skew"]["f_max_frac"].get<double>();
  c.skew.s_frac = j["skew"]["s_frac"].get<double>();
  const json& t = j["twoview"];
  c.twoview.window = t["window"].get<int>();
  c.twoview.c = t["c"].get<double>();
  c.twoview.d_floor = t["d_floor"].get<double>();
  c.twoview.t = t["t"].get<double>();
  c.twoview.dilation_radius = t["dilation_radius"].get<double>();
  c.twoview.min_area = t["min_area"].get<std::size_t>();
  c.twoview.ransac.max_iters = t["ransac"]["max_iters"].get<int>();
  c.twoview.ransac.inlier_tol = t["ransac"]["inlier_tol"].get<double>();
  c.twoview.ransac.bucket_rows = t["ransac"]["bucket_rows"].get<int>();
  c.twoview.ransac.bucket_cols = t["ransac"]["bucket_cols"].get<int>();
  c.twoview.ransac.confidence = t["ransac"]["confidence"].get<double>();
  c.shadow.tau_mu_pct = j["shadow"]["tau_mu_pct"].get<double>();
  c.shadow.tau_axis = j["shadow"]["tau_axis"].get<double>();
  c.height.sigma_px = j["height"]["sigma_px"].get<double>();
  c.height.samples = j["height"]["samples"].get<int>();
  c.height.k_sigma = j["height"]["k_sigma"].get<double>();
  c.plane.rel_tol = j["plane"]["rel_tol"].get<double>();
  c.plane.focal_px = get_opt(j["plane"]["focal_px"]);
  return c;
}

json entry_json(const Entry& e) {
  json rows = json::array();
  for (const auto& r : e.rows) {
    json vals = json::array();
    for (const auto& v : r.values) vals.push_back(value_json(v));
    json row = {{"entity", r.entity}, {"values", vals}};
    if (r.verdict) row["verdict"] = to_string(*r.verdict);
    if (!r.labels.empty()) row["labels"] = r.labels;
    rows.push_back(row);
  }
  json th = json::array();
  for (const auto& v : e.thresholds) th.push_back(value_json(v));
  json out = {{"check", e.check},
              {"params", e.params},
              {"inputs_digest", e.inputs_digest},
              {"rows", rows},
              {"thresholds", th},
              {"verdict", to_string(e.verdict)},
              {"diagnostics", e.diagnostics}};
  if (e.revision) out["revision"] = *e.revision;
  return out;
}

Verdict Report::verdict() const {
  Verdict v = Verdict::consistent;
  for (const auto& e : entries) v = worst(v, e.verdict);
  return v;
}

json Report::to_json() const {
  json es = json::array();
  for (const auto& e : entries) es.push_back(entry_json(e));
  return {{"schema", kReportSchema},
          {"tool", {{"name", "geoforge"}, {"version", kToolVersion}}},
          {"config", config_json(config)},
          {"entries", es},
          {"verdict", to_string(verdict())}};
}

std::string Report::dump() const { return to_json().dump(2) + "\n"; }

int exit_code(Verdict v) {
  switch (v) {
    case Verdict::consistent: return 0;
    case Verdict::suspicious: return 2;
    case Verdict::inconclusive: return 3;
  }
  return 1;
}

std::string digest(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json overlay_point(const std::string& id, const geom::Point2h& p) {
  json o = {{"type", "point"}, {"id", id}};
  if (p.is_ideal()) {
    const geom::Vec3 u = p.unit();
    o["ideal"] = true;
    o["h"] = {u.x(), u.y(), u.z()};
  } else {
    const auto e = p.euclidean();
    o["at"] = {e.x(), e.y()};
  }
  return o;
}

json overlay_segment(const std::string& id, const geom::Point2h& a, const geom::Point2h& b) {
  const auto ea = a.euclidean(), eb = b.euclidean();
  return {{"type", "segment"}, {"id", id}, {"a", {ea.x(), ea.y()}}, {"b", {eb.x(), eb.y()}}};
}

json overlay_line(const std::string& id, const geom::Line2h& l) {
  const geom::Vec3 u = l.canonical();
  return {{"type", "line"}, {"id", id}, {"l", {u.x(), u.y(), u.z()}}};
}

json overlay_conic(const std::string& id, const geom::Conic& c) {
  const auto& k = c.canonical().coefficients();
  return {{"type", "conic"}, {"id", id}, {"k", std::vector<double>(k.begin(), k.end())}};
}

json overlay_mask(const std::string& id, const Mask& m) {
  return {{"type", "mask"}, {"id", id}, {"width", m.width}, {"height", m.height}, {"rows", rle_rows(m)}};
}

json overlay_label(const std::string& id, const geom::Point2h& at, const std::string& text) {
  json o = overlay_point(id, at);
  o["type"] = "label";
  o["text"] = text;
  return o;
}

json rle_rows(const Mask& m) {
  json rows = json::array();
  for (int y = 0; y < m.height; ++y) {
    json runs = json::array();
    int x = 0;
    while (x < m.width) {
      if (!m.at(x, y)) {
        ++x;
        continue;
      }
      const int s = x;
      while (x < m.width && m.at(x, y)) ++x;
      runs.push_back(s);
      runs.push_back(x - s);
    }
    rows.push_back(runs);
  }
  return rows;
}

Mask rle_decode(int width, int height, const json& rows) {
  if (!rows.is_array() || static_cast<int>(rows.size()) != height)
    throw GeoError("SchemaError", "mask needs one run list per row");
  Mask m(width, height);
  for (int y = 0; y < height; ++y) {
    const json& r = rows[static_cast<std::size_t>(y)];
    if (!r.is_array() || r.size() % 2) throw GeoError("SchemaError", "runs come in (start, length) pairs");
    for (std::size_t i = 0; i < r.size(); i += 2) {
      const int s = r[i].get<int>(), n = r[i + 1].get<int>();
      if (s < 0 || n < 0 || s + n > width) throw GeoError("SchemaError", "run outside the row");
      for (int x = s; x < s + n; ++x) m.set(x, y, true);
    }
  }
  return m;
}

}  // namespace geoforge::io
