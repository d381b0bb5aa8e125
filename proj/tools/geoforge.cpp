// Batch front end: one check per invocation, report JSON out, verdict as exit status.
#include "geoforge/checks.hpp"
#include "geoforge/error.hpp"
#include "geoforge/image_io.hpp"
#include "geoforge/service.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

using namespace geoforge;
using namespace geoforge::io;

namespace {

struct Common {
  std::string annot, image, image2, config, out_report, out_mask, out_image;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--annot", c.annot, "annotation file (geoforge-annot/1)")->required()->check(CLI::ExistingFile);
  sub->add_option("--image", c.image, "image (PNG/PGM/PPM)")->check(CLI::ExistingFile);
  sub->add_option("--image2", c.image2, "second image for two-view checks")->check(CLI::ExistingFile);
  sub->add_option("--config", c.config, "config JSON")->check(CLI::ExistingFile);
  sub->add_option("--seed", c.seed, "RNG seed (overrides config)");
  sub->add_option("--out-report", c.out_report, "write the report here instead of stdout");
  sub->add_option("--out-mask", c.out_mask, "fake-region mask PNG");
  sub->add_option("--out-image", c.out_image, "rectified preview");
}

std::string text_of(const std::string& path) {
  const Bytes b = read_file(path);
  return std::string(b.begin(), b.end());
}

int run(const std::string& name, json params, const Common& c) {
  Config cfg = c.config.empty() ? Config{} : load_config(text_of(c.config));
  if (c.seed) cfg.seed = *c.seed;
  const AnnotationSet annot = load_annotations(text_of(c.annot));
  std::optional<ImageRaster> i1, i2;
  if (!c.image.empty()) i1 = load_image_file(c.image);
  if (!c.image2.empty()) i2 = load_image_file(c.image2);
  if (!c.out_image.empty()) {
    if (name != "rectify") throw GeoError("InvalidParams", "--out-image only applies to rectify");
    params["preview"] = true;
  }

  const CheckResult r = run_check(name, check_params(name, params), annot,
                                  {i1 ? &*i1 : nullptr, i2 ? &*i2 : nullptr}, cfg);
  Report rep;
  rep.config = cfg;
  rep.entries.push_back(r.entry);
  const std::string text = rep.dump();

  if (!c.out_mask.empty()) {
    if (!r.mask) throw GeoError("InvalidParams", "--out-mask: " + name + " produced no mask");
    write_file(c.out_mask, save_mask(*r.mask));
  }
  if (!c.out_image.empty()) save_image_file(c.out_image, *r.preview);
  if (c.out_report.empty()) {
    std::cout << text;
  } else {
    write_file(c.out_report, Bytes(text.begin(), text.end()));
    std::cout << entry_text(r.entry);
  }
  return exit_code(rep.verdict());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"geoforge: projective-geometry consistency checks for images"};
  app.require_subcommand(1);

  Common c;
  std::string method = "polygon", plane, skew_mode = "planar", tv_mode = "h";
  std::vector<double> probe;

  auto* rectify = app.add_subcommand("rectify", "metric rectification and length/angle checks");
  rectify->add_option("--method", method)->check(CLI::IsMember({"polygon", "vp", "circles"}));
  rectify->add_option("--plane", plane, "world plane for --method polygon");
  auto* pp = app.add_subcommand("principal-point", "principal point from eye annotations");
  auto* skew = app.add_subcommand("skew", "non-zero skew from plane homographies or F");
  skew->add_option("--mode", skew_mode)->check(CLI::IsMember({"planar", "fmatrix"}));
  auto* tv = app.add_subcommand("twoview", "composite detection across two views");
  tv->add_option("--mode", tv_mode)->check(CLI::IsMember({"h", "f"}));
  tv->add_option("--probe", probe, "x y in the first image; reports its epipolar line")->expected(2);
  auto* shadow = app.add_subcommand("shadow", "shadow/light consistency via planar homology");
  auto* height = app.add_subcommand("height", "heights against a reference");
  auto* plane_m = app.add_subcommand("plane-measure", "lengths on vertical planes");
  for (auto* s : {rectify, pp, skew, tv, shadow, height, plane_m}) add_common(s, c);

  std::string host = "127.0.0.1", workdir;
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "HTTP JSON service for the workbench");
  serve->add_option("--port", port)->check(CLI::Range(0, 65535));
  serve->add_option("--host", host, "bind address; loopback unless you mean otherwise");
  serve->add_option("--workdir", workdir, "keep uploaded images here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*serve) {
      service::ServiceCore core(workdir);
      std::cerr << "listening on http://" << host << ":" << port << "\n";
      service::serve(core, host, port);
      return 0;
    }
    if (*rectify) return run("rectify", {{"method", method}, {"plane", plane}}, c);
    if (*pp) return run("principal-point", json::object(), c);
    if (*skew) return run("skew", {{"mode", skew_mode}}, c);
    if (*tv) {
      json p = {{"mode", tv_mode}};
      if (!probe.empty()) p["probe"] = probe;
      return run("twoview", p, c);
    }
    if (*shadow) return run("shadow", json::object(), c);
    if (*height) return run("height", json::object(), c);
    return run("plane-measure", json::object(), c);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
