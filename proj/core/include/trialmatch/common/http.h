#pragma once

#include <chrono>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace trialmatch::http {

using Headers = std::vector<std::pair<std::string, std::string>>;

struct Response {
  int status = 0;
  std::string body;
};

// Minimal blocking HTTP client surface. Implementations throw TransportError
// when no response was received at all; HTTP error statuses are returned.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual Response get(const std::string& url, const Headers& headers) = 0;
  virtual Response post(const std::string& url, const std::string& body,
                        const std::string& content_type, const Headers& headers) = 0;
};

// cpp-httplib backed transport; handles http:// and https:// URLs.
std::unique_ptr<Transport> make_transport(std::chrono::milliseconds timeout = std::chrono::seconds(60));

// "%xx" escaping for query-string values.
std::string url_encode(const std::string& value);

}  // namespace trialmatch::http
