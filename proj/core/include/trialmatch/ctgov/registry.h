#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trialmatch/common/http.h"
#include "trialmatch/datamodel/types.h"

namespace trialmatch::ctgov {

inline constexpr int kMaxPageSize = 1000;

enum class StatusFilter { kRecruitingOnly, kAny };

struct RegistryQuery {
  std::string condition;
  std::optional<Date> as_of;  // drop studies starting after this date
  StatusFilter status_filter = StatusFilter::kRecruitingOnly;
  int page_size = 100;
};

struct ClientConfig {
  std::string base_url = "https://clinicaltrials.gov";
  std::optional<std::filesystem::path> cache_dir;
  double rate_limit = 2.0;  // requests per second; <= 0 disables
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{500};
};

// Token bucket holding at most max(1, rate) tokens, refilled continuously.
class TokenBucket {
 public:
  explicit TokenBucket(double rate_per_second);
  void acquire();

 private:
  double rate_;
  double capacity_;
  double tokens_;
  std::chrono::steady_clock::time_point last_;
  std::mutex mu_;
};

// Registry API v2 client. Shareable across threads: the bucket serializes
// egress and cache files are written temp-then-rename.
class RegistryClient {
 public:
  RegistryClient(ClientConfig config, std::shared_ptr<http::Transport> transport);

  // GET {base}/api/v2/studies/{nct_id}. Served from cache when present.
  // Throws InvalidArgument (malformed id), NotFound (HTTP 404), or
  // TransportError after the last attempt.
  TrialRecord fetch_trial(const std::string& nct_id);

  // GET {base}/api/v2/studies?query.cond=...&filter.overallStatus=...&
  // pageSize=...&pageToken=..., following nextPageToken. Ids in registry
  // order with repeats removed.
  std::vector<std::string> list_open_trials(const RegistryQuery& query);

  std::size_t network_requests() const { return requests_.load(); }

 private:
  http::Response get_with_retry(const std::string& url);

  ClientConfig config_;
  std::shared_ptr<http::Transport> transport_;
  TokenBucket bucket_;
  std::atomic<std::size_t> requests_{0};
};

// TrialRecord from one v2 study JSON object. Open date: start date, else
// first-posted date. Close date: absent while the overall status is
// RECRUITING, NOT_YET_RECRUITING or ENROLLING_BY_INVITATION; otherwise the
// completion date, else the primary completion date. "YYYY-MM" and "YYYY"
// dates resolve to the first day.
TrialRecord parse_study(const std::string& payload);

// Registry partial date to a calendar date.
Date parse_registry_date(std::string_view s);

// Uniform sample of n ids without replacement (partial Fisher-Yates over
// the given order), returned sorted. Throws InvalidArgument when n > size.
std::vector<std::string> sample_trials(std::span<const std::string> ids, std::size_t n, std::uint64_t seed);

}  // namespace trialmatch::ctgov
