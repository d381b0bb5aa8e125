#pragma once

#include <stdexcept>
#include <string>

namespace geoforge {

// Every failure raised by the library carries a stable kind name
// (e.g. "NotCollinear", "NoIntersection") that reports and the HTTP
// service serialize verbatim.
class GeoError : public std::runtime_error {
 public:
  GeoError(std::string kind, const std::string& message)
      : std::runtime_error(kind + ": " + message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

}  // namespace geoforge
