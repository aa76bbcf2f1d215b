#include <httplib.h>

#include "edusim/http.hpp"

#include "edusim/error.hpp"

namespace edusim {

namespace {

class HttplibTransport final : public HttpTransport {
 public:
  explicit HttplibTransport(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {}

  HttpResponse post_json(const std::string& path, const nlohmann::json& body) override {
    httplib::Client client(endpoint_.base_url);
    client.set_connection_timeout(endpoint_.connect_timeout);
    client.set_read_timeout(endpoint_.read_timeout);
    httplib::Headers headers;
    for (const auto& [k, v] : endpoint_.headers) headers.emplace(k, v);
    auto res = client.Post(path, headers, body.dump(), "application/json");
    if (!res) {
      throw TransportError("POST " + endpoint_.base_url + path +
                           " failed: " + httplib::to_string(res.error()));
    }
    return HttpResponse{res->status, res->body};
  }

 private:
  HttpEndpoint endpoint_;
};

}  // namespace

std::shared_ptr<HttpTransport> make_http_transport(HttpEndpoint endpoint) {
  if (endpoint.base_url.empty()) throw ValidationError("HTTP endpoint URL is empty");
  return std::make_shared<HttplibTransport>(std::move(endpoint));
}

}  // namespace edusim
