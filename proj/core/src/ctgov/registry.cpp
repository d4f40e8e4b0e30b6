#include "trialmatch/ctgov/registry.h"

#include <algorithm>
#include <ctime>
#include <json.hpp>
#include <set>
#include <thread>

#include "trialmatch/common/error.h"
#include "trialmatch/common/log.h"
#include "trialmatch/common/rng.h"
#include "trialmatch/common/text.h"
#include "trialmatch/datamodel/corpus.h"

namespace trialmatch::ctgov {

namespace {

using nlohmann::json;

const json* path(const json& j, std::initializer_list<const char*> keys) {
  const json* cur = &j;
  for (const char* k : keys) {
    if (!cur->is_object() || !cur->contains(k)) return nullptr;
    cur = &(*cur)[k];
  }
  return cur;
}

std::optional<Date> date_at(const json& status, const char* field) {
  const json* d = path(status, {field, "date"});
  if (!d || !d->is_string()) return std::nullopt;
  return parse_registry_date(d->get<std::string>());
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

TokenBucket::TokenBucket(double rate_per_second)
    : rate_(rate_per_second),
      capacity_(std::max(1.0, rate_per_second)),
      tokens_(capacity_),
      last_(std::chrono::steady_clock::now()) {}

void TokenBucket::acquire() {
  if (rate_ <= 0.0) return;
  std::unique_lock lock(mu_);
  for (;;) {
    const auto now = std::chrono::steady_clock::now();
    tokens_ = std::min(capacity_, tokens_ + std::chrono::duration<double>(now - last_).count() * rate_);
    last_ = now;
    if (tokens_ >= 1.0) {
      tokens_ -= 1.0;
      return;
    }
    // Holding the lock while sleeping keeps callers in arrival order.
    std::this_thread::sleep_for(std::chrono::duration<double>((1.0 - tokens_) / rate_));
  }
}

Date parse_registry_date(std::string_view s) {
  const auto t = text::trim(s);
  if (t.size() == 10) return Date::parse_iso(t);
  if (t.size() == 7) return Date::parse_iso(std::string(t) + "-01");
  if (t.size() == 4) return Date::parse_iso(std::string(t) + "-01-01");
  throw ParseError("unrecognized registry date: " + std::string(t));
}

TrialRecord parse_study(const std::string& payload) {
  const auto j = json::parse(payload, nullptr, false);
  if (j.is_discarded()) throw ParseError("registry payload is not JSON");
  const json* id = path(j, {"protocolSection", "identificationModule", "nctId"});
  if (!id || !id->is_string()) throw ParseError("registry payload lacks nctId");
  TrialRecord r;
  r.nct_id = id->get<std::string>();
  if (const json* title = path(j, {"protocolSection", "identificationModule", "briefTitle"}); title && title->is_string()) {
    r.title = title->get<std::string>();
  }
  if (const json* el = path(j, {"protocolSection", "eligibilityModule", "eligibilityCriteria"}); el && el->is_string()) {
    r.eligibility_text = text::canonicalize_newlines(el->get<std::string>());
  }
  const json* status = path(j, {"protocolSection", "statusModule"});
  if (!status) throw ParseError("registry payload for " + r.nct_id + " lacks statusModule");
  auto open = date_at(*status, "startDateStruct");
  if (!open) open = date_at(*status, "studyFirstPostDateStruct");
  if (!open) throw ParseError("registry payload for " + r.nct_id + " has no start or first-posted date");
  r.open_date = *open;
  const std::string overall = status->value("overallStatus", "");
  const bool still_open =
      overall == "RECRUITING" || overall == "NOT_YET_RECRUITING" || overall == "ENROLLING_BY_INVITATION";
  if (!still_open) {
    auto close = date_at(*status, "completionDateStruct");
    if (!close) close = date_at(*status, "primaryCompletionDateStruct");
    if (close && *close < r.open_date) {
      log().warn("registry: {} closes before it opens; treating close date as unknown", r.nct_id);
      close.reset();
    }
    r.close_date = close;
  }
  return r;
}

RegistryClient::RegistryClient(ClientConfig config, std::shared_ptr<http::Transport> transport)
    : config_(std::move(config)), transport_(std::move(transport)), bucket_(config_.rate_limit) {
  if (config_.max_attempts < 1) throw InvalidArgument("registry client: max_attempts must be at least 1");
}

http::Response RegistryClient::get_with_retry(const std::string& url) {
  auto backoff = config_.initial_backoff;
  std::string last_error;
  for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
    bucket_.acquire();
    ++requests_;
    try {
      auto res = transport_->get(url, {{"Accept", "application/json"}});
      if (res.status == 200 || res.status == 404 || (res.status >= 400 && res.status < 500 && res.status != 429)) {
        return res;
      }
      last_error = "HTTP " + std::to_string(res.status);
    } catch (const TransportError& e) {
      last_error = e.what();
    }
    if (attempt < config_.max_attempts) {
      log().info("registry: attempt {} for {} failed ({}); retrying", attempt, url, last_error);
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
  throw TransportError("registry request failed after " + std::to_string(config_.max_attempts) +
                       " attempts: " + url + ": " + last_error);
}

TrialRecord RegistryClient::fetch_trial(const std::string& nct_id) {
  if (!is_valid_nct_id(nct_id)) throw InvalidArgument("malformed NCT id: " + nct_id);
  std::optional<std::filesystem::path> cache_file;
  if (config_.cache_dir) {
    cache_file = *config_.cache_dir / (nct_id + ".v2.json");
    if (std::filesystem::exists(*cache_file)) {
      const auto entry = json::parse(read_file(*cache_file), nullptr, false);
      if (entry.is_discarded() || !entry.contains("payload")) {
        throw ParseError("corrupt registry cache entry " + cache_file->string());
      }
      return parse_study(entry["payload"].get<std::string>());
    }
  }
  const auto res = get_with_retry(config_.base_url + "/api/v2/studies/" + nct_id);
  if (res.status == 404) throw NotFound("registry has no study " + nct_id);
  if (res.status != 200) throw TransportError("registry returned HTTP " + std::to_string(res.status) + " for " + nct_id);
  auto record = parse_study(res.body);
  if (cache_file) {
    std::filesystem::create_directories(*config_.cache_dir);
    const json entry = {{"nct_id", nct_id}, {"endpoint", "v2"}, {"retrieved_at", utc_now()}, {"payload", res.body}};
    write_file_atomic(*cache_file, entry.dump() + "\n");
  }
  return record;
}

std::vector<std::string> RegistryClient::list_open_trials(const RegistryQuery& query) {
  if (text::trim(query.condition).empty()) throw InvalidArgument("list_open_trials: empty condition");
  if (query.page_size < 1 || query.page_size > kMaxPageSize) {
    throw InvalidArgument("list_open_trials: page_size must be in [1, " + std::to_string(kMaxPageSize) + "]");
  }
  std::vector<std::string> ids;
  std::set<std::string> seen;
  std::optional<std::string> token;
  for (;;) {
    std::string url = config_.base_url + "/api/v2/studies?query.cond=" + http::url_encode(query.condition) +
                      "&pageSize=" + std::to_string(query.page_size);
    if (query.status_filter == StatusFilter::kRecruitingOnly) url += "&filter.overallStatus=RECRUITING";
    if (token) url += "&pageToken=" + http::url_encode(*token);
    const auto res = get_with_retry(url);
    if (res.status != 200) throw TransportError("registry search returned HTTP " + std::to_string(res.status));
    const auto page = json::parse(res.body, nullptr, false);
    if (page.is_discarded() || !page.contains("studies")) throw ParseError("registry search page is not a study list");
    for (const auto& study : page["studies"]) {
      const json* id = path(study, {"protocolSection", "identificationModule", "nctId"});
      if (!id || !id->is_string()) continue;
      if (query.as_of) {
        if (const json* st = path(study, {"protocolSection", "statusModule"})) {
          if (auto start = date_at(*st, "startDateStruct"); start && *start > *query.as_of) continue;
        }
      }
      auto s = id->get<std::string>();
      if (seen.insert(s).second) ids.push_back(std::move(s));
    }
    if (!page.contains("nextPageToken") || !page["nextPageToken"].is_string()) break;
    token = page["nextPageToken"].get<std::string>();
  }
  return ids;
}

std::vector<std::string> sample_trials(std::span<const std::string> ids, std::size_t n, std::uint64_t seed) {
  if (n > ids.size()) {
    throw InvalidArgument("sample_trials: n = " + std::to_string(n) + " exceeds " + std::to_string(ids.size()) + " ids");
  }
  std::vector<std::string> pool(ids.begin(), ids.end());
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) std::swap(pool[i], pool[i + rng.uniform_index(pool.size() - i)]);
  pool.resize(n);
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace trialmatch::ctgov
