#pragma once

#include <chrono>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace edusim {

struct HttpResponse {
  int status = 0;
  std::string body;
};

// Minimal JSON-over-HTTP transport. Implementations throw TransportError
// when no response is received at all.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse post_json(const std::string& path, const nlohmann::json& body) = 0;
};

struct HttpEndpoint {
  std::string base_url;  // scheme://host[:port]
  std::vector<std::pair<std::string, std::string>> headers;
  std::chrono::milliseconds connect_timeout{5000};
  std::chrono::milliseconds read_timeout{120000};
};

std::shared_ptr<HttpTransport> make_http_transport(HttpEndpoint endpoint);

}  // namespace edusim
