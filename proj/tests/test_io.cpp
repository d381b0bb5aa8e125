#include <doctest.h>

#include <functional>
#include <string>

#include "geoforge/annotations.hpp"
#include "geoforge/error.hpp"
#include "geoforge/image_io.hpp"
#include "geoforge/report.hpp"

using namespace geoforge;
using namespace geoforge::io;

namespace {

Bytes bytes(const std::string& s) { return Bytes(s.begin(), s.end()); }

ImageRaster pattern(int w, int h, int c) {
  ImageRaster img(w, h, c, SampleDepth::u8);
  for (std::size_t i = 0; i < img.samples.size(); ++i) img.samples[i] = static_cast<float>((i * 37 + 11) % 256) / 255.0f;
  return img;
}

std::string kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const GeoError& e) {
    return e.kind() + " | " + e.what();
  }
  return "";
}

const char* kMinimal = R"({
  "schema": "geoforge-annot/1",
  "image": {"width": 640, "height": 480},
  "points": {"a": [10, 20], "b": [100, 20], "c": [100, 200], "d": [10.5, 200.25]}
})";

}  // namespace

TEST_CASE("PGM with known bytes") {
  std::string s = "P5\n# comment\n2 2\n255\n";
  s += std::string{'\x00', '\x40', '\x80', '\xff'};
  const ImageRaster img = load_image(bytes(s));
  REQUIRE(img.width == 2);
  REQUIRE(img.height == 2);
  CHECK(img.channels == 1);
  CHECK(img.depth == SampleDepth::u8);
  CHECK(img.at(0, 0) == 0.0f);
  CHECK(img.at(1, 0) == 64 / 255.0f);
  CHECK(img.at(0, 1) == 128 / 255.0f);
  CHECK(img.at(1, 1) == 1.0f);
  CHECK(save_image(img, ImageFormat::pgm) == bytes("P5\n2 2\n255\n" + std::string{'\x00', '\x40', '\x80', '\xff'}));
}

TEST_CASE("image round trips") {
  for (int c : {1, 3}) {
    const ImageRaster img = pattern(37, 23, c);
    const ImageRaster a = load_image(save_image(img, ImageFormat::png));
    CHECK(a.channels == c);
    CHECK(a.samples == img.samples);
    const ImageRaster b = load_image(save_image(a, ImageFormat::png));
    CHECK(b.samples == a.samples);
    const ImageRaster p = load_image(save_image(img, c == 1 ? ImageFormat::pgm : ImageFormat::ppm));
    CHECK(p.samples == img.samples);
  }
  CHECK(kind_of([] { save_image(pattern(2, 2, 3), ImageFormat::pgm); }).rfind("UnsupportedFormat", 0) == 0);
}

TEST_CASE("corrupt and unsupported images") {
  const Bytes png = save_image(pattern(40, 30, 3), ImageFormat::png);
  const Bytes cut(png.begin(), png.begin() + static_cast<std::ptrdiff_t>(png.size() / 2));
  CHECK(kind_of([&] { load_image(cut); }).rfind("CorruptData", 0) == 0);
  std::string pgm = "P5\n4 4\n255\n" + std::string(10, 'x');
  CHECK(kind_of([&] { load_image(bytes(pgm)); }).rfind("CorruptData", 0) == 0);
  CHECK(kind_of([&] { load_image(bytes("P5\n2 2\n65535\n12345678")); }).rfind("UnsupportedFormat", 0) == 0);
  CHECK(kind_of([&] { load_image(bytes("GIF89a......")); }).rfind("UnsupportedFormat", 0) == 0);
  CHECK(kind_of([&] { load_image(bytes("P")); }).rfind("CorruptData", 0) == 0);
}

TEST_CASE("f32 rasters quantize on save") {
  ImageRaster img(3, 1, 1);
  img.samples = {0.1f, 0.5f, 2.0f};
  const ImageRaster back = load_image(save_image(img));
  CHECK(back.samples[0] == 26 / 255.0f);
  CHECK(back.samples[1] == 128 / 255.0f);
  CHECK(back.samples[2] == 1.0f);
}

TEST_CASE("minimal annotation file") {
  const AnnotationSet a = load_annotations(kMinimal);
  CHECK(a.points.size() == 4);
  CHECK(a.image.width == 640);
  CHECK(a.point("d").euclidean().y() == 200.25);
}

TEST_CASE("annotation errors carry their location") {
  CHECK(kind_of([] { load_annotations("{\"schema\": "); }).rfind("ParseError", 0) == 0);
  const std::string dangling = R"({"schema": "geoforge-annot/1", "image": {"width": 10, "height": 10},
    "points": {"a": [1, 1], "b": [2, 2]},
    "segments": {"s1": {"a": "a", "b": "zz"}}})";
  const std::string e = kind_of([&] { load_annotations(dangling); });
  CHECK(e.rfind("ReferenceError", 0) == 0);
  CHECK(e.find("/segments/s1/b") != std::string::npos);
  CHECK(e.find("zz") != std::string::npos);
  const std::string oob = R"({"schema": "geoforge-annot/1", "image": {"width": 10, "height": 10},
    "points": {"a": [1, 11]}})";
  CHECK(kind_of([&] { load_annotations(oob); }).find("/points/a") != std::string::npos);
  const std::string unknown = R"({"schema": "geoforge-annot/1", "image": {"width": 10, "height": 10},
    "pionts": {}})";
  const std::string u = kind_of([&] { load_annotations(unknown); });
  CHECK(u.rfind("SchemaError", 0) == 0);
  CHECK(u.find("/pionts") != std::string::npos);
  const std::string no_units = R"({"schema": "geoforge-annot/1", "image": {"width": 10, "height": 10},
    "points": {"a": [1, 1], "b": [2, 2]},
    "reference_height": {"foot": "a", "top": "b", "value": 3}})";
  CHECK(kind_of([&] { load_annotations(no_units); }).find("/reference_height/units") != std::string::npos);
  const std::string bad_schema = R"({"schema": "geoforge-annot/2", "image": {"width": 10, "height": 10}})";
  CHECK(kind_of([&] { load_annotations(bad_schema); }).find("/schema") != std::string::npos);
  const std::string short_ellipse = R"({"schema": "geoforge-annot/1", "image": {"width": 10, "height": 10},
    "points": {"a": [1, 1]}, "ellipses": {"e": {"points": ["a", "a", "a"]}}})";
  CHECK(kind_of([&] { load_annotations(short_ellipse); }).find("/ellipses/e/points") != std::string::npos);
  // pointer escaping in ids
  const std::string slash = R"({"schema": "geoforge-annot/1", "image": {"width": 10, "height": 10},
    "points": {"a/b": [1, 100]}})";
  CHECK(kind_of([&] { load_annotations(slash); }).find("/points/a~1b") != std::string::npos);
}

TEST_CASE("annotation round trip") {
  const std::string full = R"({
    "schema": "geoforge-annot/1",
    "image": {"path": "x.png", "path2": "y.png", "width": 640, "height": 480, "focal_px": 800},
    "points": {"a": [10, 20], "b": {"at": [100, 20], "world": [1, 0], "plane": "floor"},
               "c": [100, 200], "d": [10, 200], "e": [50, 50], "f": [60, 60]},
    "segments": {"s1": {"a": "a", "b": "b", "length": 2.5, "units": "m"}, "s2": {"a": "c", "b": "d", "label": "x"},
                 "s3": {"a": "a", "b": "d"}, "s4": {"a": "b", "b": "c"}},
    "parallel_groups": {"g1": {"segments": ["s1", "s2"], "role": "ground"}, "g2": {"segments": ["s3", "s4"]}},
    "angles": [{"first": "s1", "second": "s3", "degrees": 90}],
    "equal_angle_pairs": [{"first": ["s1", "s3"], "second": ["s2", "s4"]}],
    "length_ratios": [{"first": "s1", "second": "s3", "ratio": 0.5}],
    "ellipses": {"e1": {"points": ["a", "b", "c", "d", "e"]}},
    "correspondences": [{"x1": [1, 2], "x2": [3, 4]}, {"x1": [5, 6], "x2": [7, 8], "set": "p2"}],
    "shadow_triples": [{"top": "a", "foot": "b", "shadow": "c"}],
    "reference_height": {"foot": "a", "top": "b", "value": 64.75, "units": "in",
                         "targets": [{"foot": "c", "top": "d", "claimed": 70}]},
    "trace_lines": [{"segment": "s1", "parallel": ["s2", "s3"], "measure": [{"a": "e", "b": "f"}], "units": "m"}],
    "eyes": [{"left": ["a", "b", "c", "d", "e"], "right": ["a", "b", "c", "d", "f"], "interocular_ratio": 10.5}]
  })";
  const AnnotationSet a = load_annotations(full);
  CHECK(a.shadow_triples[0].label == "R1");
  CHECK(a.reference_height->targets[0].id == "T1");
  const std::string saved = save_annotations(a);
  const AnnotationSet b = load_annotations(saved);
  CHECK(a == b);
  CHECK(save_annotations(b) == saved);
}

TEST_CASE("config overrides and errors") {
  const Config d = load_config("{}");
  CHECK(d.twoview.c == 0.45);
  CHECK(d.shadow.tau_mu_pct == 5.0);
  const Config c = load_config(R"({"seed": 9, "twoview": {"c": 0.5, "ransac": {"max_iters": 100}}, "skew": {"focal_px": 700}})");
  CHECK(c.seed == 9);
  CHECK(c.twoview.c == 0.5);
  CHECK(c.twoview.ransac.max_iters == 100);
  CHECK(*c.skew.focal_px == 700.0);
  CHECK(config_json(c) == config_json(load_config(config_json(c).dump())));
  CHECK(kind_of([] { load_config(R"({"twoview": {"cc": 1}})"); }).find("/twoview/cc") != std::string::npos);
  CHECK(kind_of([] { load_config(R"({"seed": "x"})"); }).rfind("ConfigError", 0) == 0);
}

TEST_CASE("mask run-length rows") {
  Mask m(7, 3);
  for (int x : {0, 1, 4, 6}) m.set(x, 1, true);
  m.set(6, 2, true);
  const json rows = rle_rows(m);
  CHECK(rows.dump() == "[[],[0,2,4,1,6,1],[6,1]]");
  CHECK(rle_decode(7, 3, rows).bits == m.bits);
}

TEST_CASE("report shape and exit codes") {
  Report r;
  Entry e;
  e.check = "shadow";
  e.rows.push_back({"R1/R2", {{"diff_ratio", 0.8794, "%"}}, Verdict::consistent, {}});
  r.entries.push_back(e);
  CHECK(r.verdict() == Verdict::consistent);
  const json j = r.to_json();
  CHECK(j["schema"] == "geoforge-report/1");
  CHECK(j["entries"][0]["rows"][0]["values"][0]["unit"] == "%");
  CHECK(r.dump() == r.dump());
  e.verdict = Verdict::inconclusive;
  r.entries.push_back(e);
  CHECK(exit_code(r.verdict()) == 3);
  e.verdict = Verdict::suspicious;
  r.entries.push_back(e);
  CHECK(exit_code(r.verdict()) == 2);
  CHECK(digest("") == "cbf29ce484222325");
  CHECK(digest("a") == "af63dc4c8601ec8c");
}
