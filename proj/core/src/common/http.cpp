#include "trialmatch/common/http.h"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "trialmatch/common/error.h"

namespace trialmatch::http {

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // /path?query
};

SplitUrl split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw InvalidArgument("URL without scheme: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

httplib::Headers to_httplib(const Headers& headers) {
  httplib::Headers out;
  for (const auto& [k, v] : headers) out.emplace(k, v);
  return out;
}

class HttplibTransport final : public Transport {
 public:
  explicit HttplibTransport(std::chrono::milliseconds timeout) : timeout_(timeout) {}

  Response get(const std::string& url, const Headers& headers) override {
    auto parts = split_url(url);
    auto client = make_client(parts.origin);
    auto res = client.Get(parts.path, to_httplib(headers));
    return unwrap(res, url);
  }

  Response post(const std::string& url, const std::string& body, const std::string& content_type,
                const Headers& headers) override {
    auto parts = split_url(url);
    auto client = make_client(parts.origin);
    auto res = client.Post(parts.path, to_httplib(headers), body, content_type);
    return unwrap(res, url);
  }

 private:
  httplib::Client make_client(const std::string& origin) const {
    httplib::Client client(origin);
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_).count();
    client.set_connection_timeout(secs > 0 ? secs : 1, 0);
    client.set_read_timeout(secs > 0 ? secs : 1, 0);
    client.set_follow_location(true);
    return client;
  }

  static Response unwrap(const httplib::Result& res, const std::string& url) {
    if (!res) {
      throw TransportError("request to " + url + " failed: " + httplib::to_string(res.error()));
    }
    return Response{res->status, res->body};
  }

  std::chrono::milliseconds timeout_;
};

}  // namespace

std::unique_ptr<Transport> make_transport(std::chrono::milliseconds timeout) {
  return std::make_unique<HttplibTransport>(timeout);
}

std::string url_encode(const std::string& value) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : value) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(kHex[c >> 4]);
      out.push_back(kHex[c & 0xf]);
    }
  }
  return out;
}

}  // namespace trialmatch::http
