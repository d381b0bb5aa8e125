#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "geoforge/annotations.hpp"
#include "geoforge/checks.hpp"
#include "geoforge/image.hpp"
#include "geoforge/image_io.hpp"
#include "geoforge/report.hpp"

namespace httplib {
class Server;
}

namespace geoforge::service {

using io::json;

struct Executed {
  io::Entry entry;
  json overlays;  // geoforge-overlay/1 items
};

/// Session state and check execution, independent of the transport.
///
/// Every mutation bumps the session's revision. A caller that passes the
/// revision it last saw gets StaleRevision if the session moved on; a
/// check whose snapshot is overtaken while it runs fails the same way.
class ServiceCore {
 public:
  /// Uploaded images are written to workdir/<session>/<digest>.<ext> when
  /// workdir is non-empty.
  explicit ServiceCore(std::string workdir = "");
  ~ServiceCore();

  std::string create_session(const json& options = json::object());
  long long revision(const std::string& id) const;
  /// slot 1 or 2
  long long put_image(const std::string& id, const io::Bytes& bytes, int slot,
                      std::optional<long long> expected = std::nullopt);
  /// A body carrying "schema" replaces the set; anything else is applied
  /// as a JSON merge patch to the current document.
  long long put_annotations(const std::string& id, const std::string& body,
                            std::optional<long long> expected = std::nullopt);
  Executed execute_check(const std::string& id, const std::string& name, const json& params,
                         std::optional<long long> expected = std::nullopt);
  json overlays(const std::string& id) const;
  io::Report report(const std::string& id) const;
  std::string export_annotations(const std::string& id) const;
  /// PNG bytes of the latest rectified preview.
  io::Bytes preview_png(const std::string& id) const;
  io::Bytes mask_png(const std::string& id, const std::string& check) const;

 private:
  struct Session;
  std::shared_ptr<Session> find(const std::string& id) const;

  std::string workdir_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::mt19937_64 rng_;
};

/// HTTP status for an error kind.
int http_status(const std::string& kind);

/// Registers the JSON endpoints on `server`.
void mount(httplib::Server& server, ServiceCore& core);

/// Blocks serving on host:port.
void serve(ServiceCore& core, const std::string& host, int port);

}  // namespace geoforge::service
