#include "geoforge/service.hpp"

#include <cstdio>
#include <filesystem>

#include "geoforge/error.hpp"

namespace geoforge::service {

namespace {

struct Layer {
  std::string check;
  long long revision = 0;
  json items = json::array();
};

// One report entry and overlay layer per check variant.
std::string variant_key(const std::string& name, const json& params) {
  for (const char* k : {"method", "mode"})
    if (params.contains(k)) return name + ":" + params[k].get<std::string>();
  return name;
}

const char* extension(const io::Bytes& b) {
  if (b.size() >= 2 && b[0] == 'P') return b[1] == '5' ? "pgm" : "ppm";
  return "png";
}

}  // namespace

struct ServiceCore::Session {
  std::string id;
  mutable std::mutex mu;
  long long revision = 0;
  io::Config config;
  std::optional<io::AnnotationSet> annot;
  std::shared_ptr<const ImageRaster> image[2];
  std::vector<std::string> order;  // variant keys in first-run order
  std::map<std::string, io::Entry> entries;
  std::map<std::string, Layer> layers;
  std::map<std::string, Mask> masks;
  std::optional<ImageRaster> preview;

  void check_expected(std::optional<long long> expected) const {
    if (expected && *expected != revision)
      throw GeoError("StaleRevision", "session is at revision " + std::to_string(revision) + ", not " +
                                          std::to_string(*expected));
  }
  io::AnnotationSet current_annotations() const {
    if (annot) return *annot;
    // nothing annotated yet: an empty set over the uploaded frame
    io::AnnotationSet a;
    if (image[0]) {
      a.image.width = image[0]->width;
      a.image.height = image[0]->height;
    }
    return a;
  }
};

ServiceCore::ServiceCore(std::string workdir) : workdir_(std::move(workdir)), rng_(std::random_device{}()) {}

ServiceCore::~ServiceCore() = default;

std::shared_ptr<ServiceCore::Session> ServiceCore::find(const std::string& id) const {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw GeoError("UnknownSession", "no session '" + id + "'");
  return it->second;
}

std::string ServiceCore::create_session(const json& options) {
  auto s = std::make_shared<Session>();
  if (!options.is_null()) {
    if (!options.is_object()) throw GeoError("InvalidParams", "session options must be an object");
    for (const auto& [k, v] : options.items())
      if (k != "config" && k != "seed") throw GeoError("InvalidParams", "/" + k + ": unknown session option");
    if (options.contains("config")) s->config = io::load_config(options["config"].dump());
    if (options.contains("seed")) {
      const json& seed = options["seed"];
      if (!seed.is_number_integer() || seed.get<long long>() < 0)
        throw GeoError("InvalidParams", "/seed: expected a non-negative integer");
      s->config.seed = options["seed"].get<std::uint64_t>();
    }
  }
  std::lock_guard lock(mu_);
  char buf[24];
  do {
    std::snprintf(buf, sizeof buf, "s%016llx", static_cast<unsigned long long>(rng_()));
  } while (sessions_.count(buf));
  s->id = buf;
  sessions_[s->id] = s;
  return s->id;
}

long long ServiceCore::revision(const std::string& id) const {
  auto s = find(id);
  std::lock_guard lock(s->mu);
  return s->revision;
}

long long ServiceCore::put_image(const std::string& id, const io::Bytes& bytes, int slot,
                                 std::optional<long long> expected) {
  if (slot != 1 && slot != 2) throw GeoError("InvalidParams", "image slot must be 1 or 2");
  auto s = find(id);
  auto img = std::make_shared<const ImageRaster>(io::load_image(bytes));
  if (!workdir_.empty()) {
    const auto dir = std::filesystem::path(workdir_) / id;
    std::filesystem::create_directories(dir);
    const std::string name = io::digest(std::string(bytes.begin(), bytes.end())) + "." + extension(bytes);
    io::write_file((dir / name).string(), bytes);
  }
  std::lock_guard lock(s->mu);
  s->check_expected(expected);
  s->image[slot - 1] = std::move(img);
  return ++s->revision;
}

long long ServiceCore::put_annotations(const std::string& id, const std::string& body,
                                       std::optional<long long> expected) {
  auto s = find(id);
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::parse_error& e) {
    throw GeoError("ParseError", "at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  std::lock_guard lock(s->mu);
  s->check_expected(expected);
  io::AnnotationSet next;
  if (doc.is_object() && doc.contains("schema")) {
    next = io::load_annotations(body);
  } else {
    json base = s->annot ? json::parse(io::save_annotations(*s->annot))
                         : json{{"schema", io::kAnnotSchema},
                                {"image", {{"width", s->image[0] ? s->image[0]->width : 0},
                                           {"height", s->image[0] ? s->image[0]->height : 0}}}};
    base.merge_patch(doc);
    next = io::load_annotations(base.dump());
  }
  s->annot = std::move(next);
  return ++s->revision;
}

Executed ServiceCore::execute_check(const std::string& id, const std::string& name, const json& params,
                                    std::optional<long long> expected) {
  auto s = find(id);
  const json p = io::check_params(name, params);
  io::AnnotationSet annot;
  std::shared_ptr<const ImageRaster> i1, i2;
  io::Config cfg;
  long long rev = 0;
  {
    std::lock_guard lock(s->mu);
    s->check_expected(expected);
    annot = s->current_annotations();
    i1 = s->image[0];
    i2 = s->image[1];
    cfg = s->config;
    rev = s->revision;
  }
  // runs unlocked against the snapshot
  io::CheckResult r = io::run_check(name, p, annot, {i1.get(), i2.get()}, cfg);
  r.entry.revision = rev;

  std::lock_guard lock(s->mu);
  if (s->revision != rev)
    throw GeoError("StaleRevision", "session changed from revision " + std::to_string(rev) + " to " +
                                        std::to_string(s->revision) + " while " + name + " ran");
  const std::string key = variant_key(name, p);
  if (!s->entries.count(key)) s->order.push_back(key);
  s->entries[key] = r.entry;
  if (r.preview) {
    s->preview = std::move(r.preview);
    r.overlays.push_back({{"type", "image"},
                          {"id", "rectified-preview"},
                          {"href", "/sessions/" + id + "/preview.png"},
                          {"width", s->preview->width},
                          {"height", s->preview->height}});
  }
  if (r.mask) s->masks[key] = *r.mask;
  s->layers[key] = Layer{name, rev, r.overlays};
  return {r.entry, r.overlays};
}

json ServiceCore::overlays(const std::string& id) const {
  auto s = find(id);
  std::lock_guard lock(s->mu);
  json layers = json::array();
  for (const auto& key : s->order) {
    const Layer& l = s->layers.at(key);
    layers.push_back({{"key", key},
                      {"check", l.check},
                      {"revision", l.revision},
                      {"current", l.revision == s->revision},
                      {"items", l.items}});
  }
  return {{"schema", io::kOverlaySchema}, {"session", id}, {"revision", s->revision}, {"layers", layers}};
}

io::Report ServiceCore::report(const std::string& id) const {
  auto s = find(id);
  std::lock_guard lock(s->mu);
  io::Report r;
  r.config = s->config;
  for (const auto& key : s->order) r.entries.push_back(s->entries.at(key));
  return r;
}

std::string ServiceCore::export_annotations(const std::string& id) const {
  auto s = find(id);
  std::lock_guard lock(s->mu);
  return io::save_annotations(s->current_annotations());
}

io::Bytes ServiceCore::preview_png(const std::string& id) const {
  auto s = find(id);
  std::lock_guard lock(s->mu);
  if (!s->preview) throw GeoError("NotFound", "no rectified preview yet");
  return io::save_image(*s->preview, io::ImageFormat::png);
}

io::Bytes ServiceCore::mask_png(const std::string& id, const std::string& check) const {
  auto s = find(id);
  std::lock_guard lock(s->mu);
  auto it = s->masks.find(check);
  if (it == s->masks.end()) throw GeoError("NotFound", "no mask for '" + check + "'");
  return io::save_mask(it->second);
}

int http_status(const std::string& kind) {
  if (kind == "UnknownSession" || kind == "UnknownCheck" || kind == "NotFound") return 404;
  if (kind == "StaleRevision") return 409;
  if (kind == "ParseError" || kind == "SchemaError" || kind == "ReferenceError" || kind == "ConfigError" ||
      kind == "InvalidParams" || kind == "UnsupportedFormat" || kind == "CorruptData")
    return 400;
  return 422;
}

}  // namespace geoforge::service
