// Eigen first: httplib drags in <resolv.h>, whose _res macro breaks Eigen
#include "geoforge/error.hpp"
#include "geoforge/service.hpp"

#include <httplib.h>

#include <functional>

namespace geoforge::service {

namespace {

using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

void send_json(httplib::Response& res, const json& j, int status = 200) {
  res.status = status;
  res.set_content(j.dump(2) + "\n", "application/json");
}

void send_error(httplib::Response& res, const std::string& kind, const std::string& message, int status) {
  send_json(res, {{"error", kind}, {"message", message}}, status);
}

// GeoErrors keep their kind; anything else is a server fault
Handler guarded(Handler h) {
  return [h](const httplib::Request& req, httplib::Response& res) {
    try {
      h(req, res);
    } catch (const GeoError& e) {
      send_error(res, e.kind(), e.what(), http_status(e.kind()));
    } catch (const std::exception& e) {
      send_error(res, "InternalError", e.what(), 500);
    }
  };
}

std::optional<long long> expected_revision(const httplib::Request& req) {
  std::string v;
  if (req.has_param("revision")) {
    v = req.get_param_value("revision");
  } else if (req.has_header("If-Match")) {
    v = req.get_header_value("If-Match");
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"') v = v.substr(1, v.size() - 2);
  } else {
    return std::nullopt;
  }
  try {
    std::size_t used = 0;
    const long long r = std::stoll(v, &used);
    if (used == v.size()) return r;
  } catch (const std::exception&) {
  }
  throw GeoError("InvalidParams", "revision must be an integer, got '" + v + "'");
}

json body_json(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::parse_error& e) {
    throw GeoError("ParseError", "at byte " + std::to_string(e.byte) + ": " + e.what());
  }
}

}  // namespace

void mount(httplib::Server& svr, ServiceCore& core) {
  svr.Get("/healthz", guarded([](const httplib::Request&, httplib::Response& res) {
            send_json(res, {{"status", "ok"}, {"tool", "geoforge"}, {"version", io::kToolVersion}});
          }));

  svr.Post("/sessions", guarded([&core](const httplib::Request& req, httplib::Response& res) {
             const std::string id = core.create_session(body_json(req));
             send_json(res, {{"id", id}, {"revision", core.revision(id)}}, 201);
           }));

  svr.Post(R"(/sessions/([^/]+)/image)", guarded([&core](const httplib::Request& req, httplib::Response& res) {
             int slot = 1;
             if (req.has_param("slot")) {
               const std::string v = req.get_param_value("slot");
               if (v != "1" && v != "2") throw GeoError("InvalidParams", "slot must be 1 or 2");
               slot = v == "2" ? 2 : 1;
             }
             const io::Bytes bytes(req.body.begin(), req.body.end());
             const long long rev = core.put_image(req.matches[1], bytes, slot, expected_revision(req));
             send_json(res, {{"revision", rev}, {"slot", slot}, {"digest", io::digest(req.body)}});
           }));

  svr.Put(R"(/sessions/([^/]+)/annotations)", guarded([&core](const httplib::Request& req, httplib::Response& res) {
            send_json(res, {{"revision", core.put_annotations(req.matches[1], req.body, expected_revision(req))}});
          }));

  svr.Get(R"(/sessions/([^/]+)/annotations)", guarded([&core](const httplib::Request& req, httplib::Response& res) {
            res.set_content(core.export_annotations(req.matches[1]), "application/json");
          }));

  svr.Post(R"(/sessions/([^/]+)/checks/([^/]+))",
           guarded([&core](const httplib::Request& req, httplib::Response& res) {
             const json body = body_json(req);
             if (!body.is_object()) throw GeoError("InvalidParams", "body must be an object");
             for (const auto& [k, v] : body.items())
               if (k != "params" && k != "revision") throw GeoError("InvalidParams", "/" + k + ": unknown key");
             std::optional<long long> expected = expected_revision(req);
             if (body.contains("revision")) {
               if (!body["revision"].is_number_integer()) throw GeoError("InvalidParams", "/revision: expected an integer");
               expected = body["revision"].get<long long>();
             }
             const Executed ex = core.execute_check(req.matches[1], req.matches[2],
                                                    body.value("params", json::object()), expected);
             send_json(res, {{"entry", io::entry_json(ex.entry)},
                             {"overlays", {{"schema", io::kOverlaySchema}, {"items", ex.overlays}}}});
           }));

  svr.Get(R"(/sessions/([^/]+)/overlays)", guarded([&core](const httplib::Request& req, httplib::Response& res) {
            send_json(res, core.overlays(req.matches[1]));
          }));

  svr.Get(R"(/sessions/([^/]+)/report)", guarded([&core](const httplib::Request& req, httplib::Response& res) {
            res.set_content(core.report(req.matches[1]).dump(), "application/json");
          }));

  svr.Get(R"(/sessions/([^/]+)/preview\.png)", guarded([&core](const httplib::Request& req, httplib::Response& res) {
            const io::Bytes b = core.preview_png(req.matches[1]);
            res.set_content(std::string(b.begin(), b.end()), "image/png");
          }));

  svr.Get(R"(/sessions/([^/]+)/masks/([^/]+)\.png)",
          guarded([&core](const httplib::Request& req, httplib::Response& res) {
            const io::Bytes b = core.mask_png(req.matches[1], req.matches[2]);
            res.set_content(std::string(b.begin(), b.end()), "image/png");
          }));
}

void serve(ServiceCore& core, const std::string& host, int port) {
  httplib::Server svr;
  mount(svr, core);
  if (!svr.listen(host, port)) throw GeoError("IoError", "cannot listen on " + host + ":" + std::to_string(port));
}

}  // namespace geoforge::service
