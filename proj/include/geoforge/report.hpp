#pragma once

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "geoforge/geom.hpp"
#include "geoforge/image.hpp"
#include "geoforge/twoview.hpp"
#include "geoforge/verdict.hpp"

namespace geoforge::io {

using nlohmann::json;

inline constexpr const char* kReportSchema = "geoforge-report/1";
inline constexpr const char* kOverlaySchema = "geoforge-overlay/1";
inline constexpr const char* kToolVersion = "0.1.0";

/// Every threshold and tunable a check reads. Defaults are the module
/// defaults; a config file overrides any subset.
struct Config {
  std::uint64_t seed = 0;
  struct {
    int preview_max_dim = 1024;
    double rel_tol = 0.01;  // disagreement between known lengths
    double angle_tol_deg = 1.0;
  } rectify;
  struct {
    double tau_frac = 0.10;  // of the image diagonal
    std::optional<double> focal_px;
  } principal_point;
  struct {
    double tau = 0.01;  // |s| / f
    std::optional<double> focal_px;
    double f_min_frac = 0.2, f_max_frac = 20.0, s_frac = 0.1;
  } skew;
  twoview::TwoViewConfig twoview;
  struct {
    double tau_mu_pct = 5.0;
    double tau_axis = 1e-2;
  } shadow;
  struct {
    double sigma_px = 0.5;
    int samples = 200;
    double k_sigma = 3.0;
  } height;
  struct {
    double rel_tol = 0.05;
    std::optional<double> focal_px;
  } plane;
};

/// Unknown keys and wrong types raise ConfigError.
Config load_config(const std::string& text);
json config_json(const Config& c);

struct Value {
  std::string name;
  double value = 0.0;
  std::string unit;  // or "dimensionless"
};

struct Row {
  std::string entity;
  std::vector<Value> values;
  std::optional<Verdict> verdict;
  std::vector<std::string> labels;  // free-form text cells
};

struct Entry {
  std::string check;
  json params = json::object();
  std::string inputs_digest;
  std::optional<long long> revision;
  std::vector<Row> rows;
  std::vector<Value> thresholds;
  Verdict verdict = Verdict::consistent;
  std::vector<std::string> diagnostics;
};

json entry_json(const Entry& e);

struct Report {
  Config config;
  std::vector<Entry> entries;

  Verdict verdict() const;
  json to_json() const;
  /// Deterministic text: sorted keys, two-space indent, trailing newline.
  std::string dump() const;
};

/// 0 consistent, 2 suspicious, 3 inconclusive.
int exit_code(Verdict v);

/// FNV-1a 64, lower-case hex.
std::string digest(const std::string& data);

// overlay primitives ("geoforge-overlay/1")
json overlay_point(const std::string& id, const geom::Point2h& p);
json overlay_segment(const std::string& id, const geom::Point2h& a, const geom::Point2h& b);
json overlay_line(const std::string& id, const geom::Line2h& l);
json overlay_conic(const std::string& id, const geom::Conic& c);
json overlay_mask(const std::string& id, const Mask& m);
json overlay_label(const std::string& id, const geom::Point2h& at, const std::string& text);

/// Per row, flat [start, length, start, length, ...] runs of set pixels.
json rle_rows(const Mask& m);
Mask rle_decode(int width, int height, const json& rows);

}  // namespace geoforge::io
