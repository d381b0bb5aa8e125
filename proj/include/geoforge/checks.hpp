#pragma once

#include <optional>
#include <string>
#include <vector>

#include "geoforge/annotations.hpp"
#include "geoforge/image.hpp"
#include "geoforge/report.hpp"

namespace geoforge::io {

/// Borrowed rasters; either may be absent.
struct Images {
  const ImageRaster* first = nullptr;
  const ImageRaster* second = nullptr;
};

struct CheckResult {
  Entry entry;
  json overlays = json::array();  // geoforge-overlay/1 items
  std::optional<Mask> mask;
  std::optional<ImageRaster> preview;  // rectified view when asked for
};

/// Every check name run_check accepts, in dispatch order.
const std::vector<std::string>& check_names();

/// Parameters with defaults filled in; unknown keys raise InvalidParams.
json check_params(const std::string& name, const json& given);

/// Runs one check. Missing primitives raise MissingAnnotations naming each
/// of them; module errors propagate with their own kinds.
CheckResult run_check(const std::string& name, const json& params, const AnnotationSet& annot,
                      const Images& images, const Config& config);

/// Aligned plain-text table of an entry's rows.
std::string entry_text(const Entry& e);

}  // namespace geoforge::io
