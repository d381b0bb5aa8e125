#include "geoforge/annotations.hpp"

#include <json.hpp>

#include <cmath>
#include <set>

#include "geoforge/error.hpp"

namespace geoforge::io {

using nlohmann::json;

namespace {

std::string esc(const std::string& key) {
  // JSON pointer escaping
  std::string out;
  for (char c : key) {
    if (c == '~')
      out += "~0";
    else if (c == '/')
      out += "~1";
    else
      out += c;
  }
  return out;
}

[[noreturn]] void schema(const std::string& where, const std::string& what) {
  throw GeoError("SchemaError", (where.empty() ? "/" : where) + ": " + what);
}

const std::set<std::string> kTop = {"schema",        "image",           "points",
                                    "segments",      "parallel_groups", "angles",
                                    "equal_angle_pairs", "length_ratios", "ellipses",
                                    "correspondences", "shadow_triples", "reference_height",
                                    "trace_lines",   "eyes"};

void only(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) schema(where, "expected an object");
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (const char* a : keys) ok = ok || k == a;
    if (!ok) schema(where + "/" + esc(k), "unknown key");
  }
}

const json& need(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) schema(where + "/" + key, "missing");
  return j.at(key);
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) schema(where, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) schema(where, "not finite");
  return v;
}

std::string str(const json& j, const std::string& where) {
  if (!j.is_string()) schema(where, "expected a string");
  return j.get<std::string>();
}

std::string opt_str(const json& j, const char* key, const std::string& where) {
  return j.contains(key) ? str(j.at(key), where + "/" + key) : std::string();
}

std::optional<double> opt_num(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) return std::nullopt;
  return number(j.at(key), where + "/" + key);
}

std::pair<double, double> xy(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2) schema(where, "expected [x, y]");
  return {number(j[0], where + "/0"), number(j[1], where + "/1")};
}

std::vector<std::string> ids(const json& j, const std::string& where) {
  if (!j.is_array()) schema(where, "expected an array of ids");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(str(j[i], where + "/" + std::to_string(i)));
  return out;
}

const json& array(const json& j, const std::string& where) {
  if (!j.is_array()) schema(where, "expected an array");
  return j;
}

const json& object(const json& j, const std::string& where) {
  if (!j.is_object()) schema(where, "expected an object");
  return j;
}

struct Checker {
  const AnnotationSet& a;

  void point(const std::string& id, const std::string& where) const {
    if (!a.points.count(id))
      throw GeoError("ReferenceError", where + ": unknown point '" + id + "'");
  }
  void segment(const std::string& id, const std::string& where) const {
    if (!a.segments.count(id))
      throw GeoError("ReferenceError", where + ": unknown segment '" + id + "'");
  }
  void in_bounds(double x, double y, const std::string& where) const {
    const double m = kBoundsMargin;
    if (x < -m || y < -m || x > a.image.width + m || y > a.image.height + m)
      throw GeoError("SchemaError", where + ": (" + std::to_string(x) + ", " + std::to_string(y) +
                                        ") lies outside the image");
  }
  void units(const std::string& u, const std::string& where) const {
    if (u.empty()) schema(where + "/units", "units are required with a metric value");
  }
};

void validate(const AnnotationSet& a) {
  const Checker c{a};
  for (const auto& [id, p] : a.points) c.in_bounds(p.x, p.y, "/points/" + esc(id));
  for (const auto& [id, s] : a.segments) {
    const std::string w = "/segments/" + esc(id);
    c.point(s.a, w + "/a");
    c.point(s.b, w + "/b");
    if (s.a == s.b) schema(w, "segment endpoints coincide");
    if (s.length) {
      if (!(*s.length > 0)) schema(w + "/length", "must be positive");
      c.units(s.units, w);
    }
  }
  for (const auto& [id, g] : a.parallel_groups) {
    const std::string w = "/parallel_groups/" + esc(id);
    if (g.segments.size() < 2) schema(w + "/segments", "a parallel group needs two or more segments");
    for (std::size_t i = 0; i < g.segments.size(); ++i)
      c.segment(g.segments[i], w + "/segments/" + std::to_string(i));
    if (!g.role.empty() && g.role != "vertical" && g.role != "ground")
      schema(w + "/role", "expected \"vertical\" or \"ground\"");
  }
  for (std::size_t i = 0; i < a.angles.size(); ++i) {
    const std::string w = "/angles/" + std::to_string(i);
    c.segment(a.angles[i].first, w + "/first");
    c.segment(a.angles[i].second, w + "/second");
  }
  for (std::size_t i = 0; i < a.equal_angle_pairs.size(); ++i) {
    const std::string w = "/equal_angle_pairs/" + std::to_string(i);
    const auto& e = a.equal_angle_pairs[i];
    c.segment(e.first_a, w + "/first/0");
    c.segment(e.first_b, w + "/first/1");
    c.segment(e.second_a, w + "/second/0");
    c.segment(e.second_b, w + "/second/1");
  }
  for (std::size_t i = 0; i < a.length_ratios.size(); ++i) {
    const std::string w = "/length_ratios/" + std::to_string(i);
    c.segment(a.length_ratios[i].first, w + "/first");
    c.segment(a.length_ratios[i].second, w + "/second");
    if (!(a.length_ratios[i].ratio > 0)) schema(w + "/ratio", "must be positive");
  }
  for (const auto& [id, e] : a.ellipses) {
    const std::string w = "/ellipses/" + esc(id) + "/points";
    if (e.points.size() < 5) schema(w, "an ellipse needs five or more points");
    for (std::size_t i = 0; i < e.points.size(); ++i) c.point(e.points[i], w + "/" + std::to_string(i));
  }
  for (std::size_t i = 0; i < a.correspondences.size(); ++i) {
    const std::string w = "/correspondences/" + std::to_string(i);
    c.in_bounds(a.correspondences[i].x1, a.correspondences[i].y1, w + "/x1");
    c.in_bounds(a.correspondences[i].x2, a.correspondences[i].y2, w + "/x2");
  }
  for (std::size_t i = 0; i < a.shadow_triples.size(); ++i) {
    const std::string w = "/shadow_triples/" + std::to_string(i);
    c.point(a.shadow_triples[i].top, w + "/top");
    c.point(a.shadow_triples[i].foot, w + "/foot");
    c.point(a.shadow_triples[i].shadow, w + "/shadow");
  }
  if (a.reference_height) {
    const auto& r = *a.reference_height;
    const std::string w = "/reference_height";
    c.point(r.foot, w + "/foot");
    c.point(r.top, w + "/top");
    if (!(r.value > 0)) schema(w + "/value", "must be positive");
    c.units(r.units, w);
    for (std::size_t i = 0; i < r.targets.size(); ++i) {
      const std::string t = w + "/targets/" + std::to_string(i);
      c.point(r.targets[i].foot, t + "/foot");
      c.point(r.targets[i].top, t + "/top");
    }
  }
  for (std::size_t i = 0; i < a.trace_lines.size(); ++i) {
    const std::string w = "/trace_lines/" + std::to_string(i);
    const auto& t = a.trace_lines[i];
    c.segment(t.segment, w + "/segment");
    if (!t.parallel.empty() && t.parallel.size() != 2)
      schema(w + "/parallel", "expected two segment ids");
    for (std::size_t k = 0; k < t.parallel.size(); ++k)
      c.segment(t.parallel[k], w + "/parallel/" + std::to_string(k));
    for (std::size_t k = 0; k < t.measure.size(); ++k) {
      c.point(t.measure[k].a, w + "/measure/" + std::to_string(k) + "/a");
      c.point(t.measure[k].b, w + "/measure/" + std::to_string(k) + "/b");
    }
    if (!t.measure.empty()) c.units(t.units, w);
  }
  for (std::size_t i = 0; i < a.eyes.size(); ++i) {
    const std::string w = "/eyes/" + std::to_string(i);
    for (const auto* side : {&a.eyes[i].left, &a.eyes[i].right}) {
      const std::string s = w + (side == &a.eyes[i].left ? "/left" : "/right");
      if (side->size() < 5) schema(s, "a limbus needs five or more points");
      for (std::size_t k = 0; k < side->size(); ++k) c.point((*side)[k], s + "/" + std::to_string(k));
    }
  }
}

}  // namespace

geom::Point2h AnnotationSet::point(const std::string& id) const {
  const auto it = points.find(id);
  if (it == points.end()) throw GeoError("ReferenceError", "unknown point '" + id + "'");
  return geom::Point2h(it->second.x, it->second.y);
}

geom::Segment AnnotationSet::segment(const std::string& id) const {
  const auto it = segments.find(id);
  if (it == segments.end()) throw GeoError("ReferenceError", "unknown segment '" + id + "'");
  return {point(it->second.a), point(it->second.b)};
}

AnnotationSet load_annotations(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw GeoError("ParseError", "at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  if (!j.is_object()) schema("", "expected an object");
  for (const auto& [k, v] : j.items())
    if (!kTop.count(k)) schema("/" + esc(k), "unknown key");
  if (str(need(j, "schema", ""), "/schema") != kAnnotSchema)
    schema("/schema", std::string("expected \"") + kAnnotSchema + "\"");

  AnnotationSet a;
  {
    const json& im = need(j, "image", "");
    only(im, "/image", {"path", "path2", "width", "height", "focal_px"});
    a.image.path = opt_str(im, "path", "/image");
    a.image.path2 = opt_str(im, "path2", "/image");
    const json& w = need(im, "width", "/image");
    const json& h = need(im, "height", "/image");
    if (!w.is_number_integer() || w.get<long long>() <= 0) schema("/image/width", "expected a positive integer");
    if (!h.is_number_integer() || h.get<long long>() <= 0) schema("/image/height", "expected a positive integer");
    a.image.width = w.get<int>();
    a.image.height = h.get<int>();
    a.image.focal_px = opt_num(im, "focal_px", "/image");
  }
  if (j.contains("points")) {
    for (const auto& [id, v] : object(j["points"], "/points").items()) {
      const std::string w = "/points/" + esc(id);
      AnnotPoint p;
      if (v.is_array()) {
        std::tie(p.x, p.y) = xy(v, w);
      } else {
        only(v, w, {"at", "world", "plane"});
        std::tie(p.x, p.y) = xy(need(v, "at", w), w + "/at");
        if (v.contains("world")) p.world = xy(v["world"], w + "/world");
        p.plane = opt_str(v, "plane", w);
      }
      a.points[id] = p;
    }
  }
  if (j.contains("segments")) {
    for (const auto& [id, v] : object(j["segments"], "/segments").items()) {
      const std::string w = "/segments/" + esc(id);
      only(v, w, {"a", "b", "label", "length", "units"});
      AnnotSegment s;
      s.a = str(need(v, "a", w), w + "/a");
      s.b = str(need(v, "b", w), w + "/b");
      s.label = opt_str(v, "label", w);
      s.length = opt_num(v, "length", w);
      s.units = opt_str(v, "units", w);
      a.segments[id] = s;
    }
  }
  if (j.contains("parallel_groups")) {
    for (const auto& [id, v] : object(j["parallel_groups"], "/parallel_groups").items()) {
      const std::string w = "/parallel_groups/" + esc(id);
      only(v, w, {"segments", "role"});
      a.parallel_groups[id] = {ids(need(v, "segments", w), w + "/segments"), opt_str(v, "role", w)};
    }
  }
  if (j.contains("angles")) {
    const json& arr = array(j["angles"], "/angles");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string w = "/angles/" + std::to_string(i);
      only(arr[i], w, {"first", "second", "degrees"});
      a.angles.push_back({str(need(arr[i], "first", w), w + "/first"),
                          str(need(arr[i], "second", w), w + "/second"),
                          number(need(arr[i], "degrees", w), w + "/degrees")});
    }
  }
  if (j.contains("equal_angle_pairs")) {
    const json& arr = array(j["equal_angle_pairs"], "/equal_angle_pairs");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string w = "/equal_angle_pairs/" + std::to_string(i);
      only(arr[i], w, {"first", "second"});
      const auto f = ids(need(arr[i], "first", w), w + "/first");
      const auto s = ids(need(arr[i], "second", w), w + "/second");
      if (f.size() != 2) schema(w + "/first", "expected two segment ids");
      if (s.size() != 2) schema(w + "/second", "expected two segment ids");
      a.equal_angle_pairs.push_back({f[0], f[1], s[0], s[1]});
    }
  }
  if (j.contains("length_ratios")) {
    const json& arr = array(j["length_ratios"], "/length_ratios");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string w = "/length_ratios/" + std::to_string(i);
      only(arr[i], w, {"first", "second", "ratio"});
      a.length_ratios.push_back({str(need(arr[i], "first", w), w + "/first"),
                                 str(need(arr[i], "second", w), w + "/second"),
                                 number(need(arr[i], "ratio", w), w + "/ratio")});
    }
  }
  if (j.contains("ellipses")) {
    for (const auto& [id, v] : object(j["ellipses"], "/ellipses").items()) {
      const std::string w = "/ellipses/" + esc(id);
      only(v, w, {"points"});
      a.ellipses[id] = {ids(need(v, "points", w), w + "/points")};
    }
  }
  if (j.contains("correspondences")) {
    const json& arr = array(j["correspondences"], "/correspondences");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string w = "/correspondences/" + std::to_string(i);
      only(arr[i], w, {"x1", "x2", "set"});
      Match m;
      std::tie(m.x1, m.y1) = xy(need(arr[i], "x1", w), w + "/x1");
      std::tie(m.x2, m.y2) = xy(need(arr[i], "x2", w), w + "/x2");
      m.set = opt_str(arr[i], "set", w);
      a.correspondences.push_back(m);
    }
  }
  if (j.contains("shadow_triples")) {
    const json& arr = array(j["shadow_triples"], "/shadow_triples");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string w = "/shadow_triples/" + std::to_string(i);
      only(arr[i], w, {"top", "foot", "shadow", "label"});
      ShadowTripleRef t;
      t.top = str(need(arr[i], "top", w), w + "/top");
      t.foot = str(need(arr[i], "foot", w), w + "/foot");
      t.shadow = str(need(arr[i], "shadow", w), w + "/shadow");
      t.label = arr[i].contains("label") ? str(arr[i]["label"], w + "/label") : "R" + std::to_string(i + 1);
      a.shadow_triples.push_back(t);
    }
  }
  if (j.contains("reference_height")) {
    const std::string w = "/reference_height";
    const json& v = j["reference_height"];
    only(v, w, {"foot", "top", "value", "units", "targets"});
    ReferenceHeight r;
    r.foot = str(need(v, "foot", w), w + "/foot");
    r.top = str(need(v, "top", w), w + "/top");
    r.value = number(need(v, "value", w), w + "/value");
    r.units = opt_str(v, "units", w);
    if (v.contains("targets")) {
      const json& arr = array(v["targets"], w + "/targets");
      for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string t = w + "/targets/" + std::to_string(i);
        only(arr[i], t, {"id", "foot", "top", "claimed"});
        HeightTarget h;
        h.id = arr[i].contains("id") ? str(arr[i]["id"], t + "/id") : "T" + std::to_string(i + 1);
        h.foot = str(need(arr[i], "foot", t), t + "/foot");
        h.top = str(need(arr[i], "top", t), t + "/top");
        h.claimed = opt_num(arr[i], "claimed", t);
        r.targets.push_back(h);
      }
    }
    a.reference_height = r;
  }
  if (j.contains("trace_lines")) {
    const json& arr = array(j["trace_lines"], "/trace_lines");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string w = "/trace_lines/" + std::to_string(i);
      only(arr[i], w, {"segment", "parallel", "measure", "units"});
      TraceLine t;
      t.segment = str(need(arr[i], "segment", w), w + "/segment");
      if (arr[i].contains("parallel")) t.parallel = ids(arr[i]["parallel"], w + "/parallel");
      t.units = opt_str(arr[i], "units", w);
      if (arr[i].contains("measure")) {
        const json& ms = array(arr[i]["measure"], w + "/measure");
        for (std::size_t k = 0; k < ms.size(); ++k) {
          const std::string m = w + "/measure/" + std::to_string(k);
          only(ms[k], m, {"a", "b", "claimed"});
          t.measure.push_back({str(need(ms[k], "a", m), m + "/a"), str(need(ms[k], "b", m), m + "/b"),
                               opt_num(ms[k], "claimed", m)});
        }
      }
      a.trace_lines.push_back(t);
    }
  }
  if (j.contains("eyes")) {
    const json& arr = array(j["eyes"], "/eyes");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string w = "/eyes/" + std::to_string(i);
      only(arr[i], w, {"id", "left", "right", "interocular_ratio"});
      EyePair e;
      e.id = arr[i].contains("id") ? str(arr[i]["id"], w + "/id") : "P" + std::to_string(i + 1);
      e.left = ids(need(arr[i], "left", w), w + "/left");
      e.right = ids(need(arr[i], "right", w), w + "/right");
      e.interocular_ratio = opt_num(arr[i], "interocular_ratio", w);
      a.eyes.push_back(e);
    }
  }
  validate(a);
  return a;
}

std::string save_annotations(const AnnotationSet& a) {
  json j;
  j["schema"] = kAnnotSchema;
  json im = {{"width", a.image.width}, {"height", a.image.height}};
  if (!a.image.path.empty()) im["path"] = a.image.path;
  if (!a.image.path2.empty()) im["path2"] = a.image.path2;
  if (a.image.focal_px) im["focal_px"] = *a.image.focal_px;
  j["image"] = im;
  auto opt = [](json& o, const char* k, const std::string& v) {
    if (!v.empty()) o[k] = v;
  };
  if (!a.points.empty()) {
    json& ps = j["points"] = json::object();
    for (const auto& [id, p] : a.points) {
      if (!p.world && p.plane.empty()) {
        ps[id] = {p.x, p.y};
        continue;
      }
      json o = {{"at", {p.x, p.y}}};
      if (p.world) o["world"] = {p.world->first, p.world->second};
      opt(o, "plane", p.plane);
      ps[id] = o;
    }
  }
  if (!a.segments.empty()) {
    json& ss = j["segments"] = json::object();
    for (const auto& [id, s] : a.segments) {
      json o = {{"a", s.a}, {"b", s.b}};
      opt(o, "label", s.label);
      if (s.length) o["length"] = *s.length;
      opt(o, "units", s.units);
      ss[id] = o;
    }
  }
  if (!a.parallel_groups.empty()) {
    json& gs = j["parallel_groups"] = json::object();
    for (const auto& [id, g] : a.parallel_groups) {
      json o = {{"segments", g.segments}};
      opt(o, "role", g.role);
      gs[id] = o;
    }
  }
  for (const auto& x : a.angles)
    j["angles"].push_back({{"first", x.first}, {"second", x.second}, {"degrees", x.degrees}});
  for (const auto& x : a.equal_angle_pairs)
    j["equal_angle_pairs"].push_back(
        {{"first", {x.first_a, x.first_b}}, {"second", {x.second_a, x.second_b}}});
  for (const auto& x : a.length_ratios)
    j["length_ratios"].push_back({{"first", x.first}, {"second", x.second}, {"ratio", x.ratio}});
  for (const auto& [id, e] : a.ellipses) j["ellipses"][id] = {{"points", e.points}};
  for (const auto& m : a.correspondences) {
    json o = {{"x1", {m.x1, m.y1}}, {"x2", {m.x2, m.y2}}};
    opt(o, "set", m.set);
    j["correspondences"].push_back(o);
  }
  for (const auto& t : a.shadow_triples)
    j["shadow_triples"].push_back({{"top", t.top}, {"foot", t.foot}, {"shadow", t.shadow}, {"label", t.label}});
  if (a.reference_height) {
    const auto& r = *a.reference_height;
    json o = {{"foot", r.foot}, {"top", r.top}, {"value", r.value}, {"units", r.units}};
    for (const auto& t : r.targets) {
      json x = {{"id", t.id}, {"foot", t.foot}, {"top", t.top}};
      if (t.claimed) x["claimed"] = *t.claimed;
      o["targets"].push_back(x);
    }
    j["reference_height"] = o;
  }
  for (const auto& t : a.trace_lines) {
    json o = {{"segment", t.segment}};
    if (!t.parallel.empty()) o["parallel"] = t.parallel;
    for (const auto& m : t.measure) {
      json x = {{"a", m.a}, {"b", m.b}};
      if (m.claimed) x["claimed"] = *m.claimed;
      o["measure"].push_back(x);
    }
    opt(o, "units", t.units);
    j["trace_lines"].push_back(o);
  }
  for (const auto& e : a.eyes) {
    json o = {{"id", e.id}, {"left", e.left}, {"right", e.right}};
    if (e.interocular_ratio) o["interocular_ratio"] = *e.interocular_ratio;
    j["eyes"].push_back(o);
  }
  return j.dump(2) + "\n";
}

}  // namespace geoforge::io
