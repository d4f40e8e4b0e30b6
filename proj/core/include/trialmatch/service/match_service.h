#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "trialmatch/cascade/matcher.h"
#include "trialmatch/service/config.h"

namespace trialmatch::service {

// HTTP-shaped result: status code plus JSON body.
struct Reply {
  int status = 200;
  std::string body;
};

struct PatientQuery {
  std::optional<std::string> summary_text;
  std::optional<std::string> patient_id;   // latest stored summary of the patient
  std::optional<std::string> summary_ref;  // SummaryRef::key() of a stored summary
  std::optional<std::size_t> k;
  std::optional<double> threshold;
  std::optional<Date> as_of;
  bool show_filtered = false;
  bool temporal = true;
  bool use_checker = true;
};

struct SpaceQuery {
  std::optional<std::string> space_text;
  std::optional<std::string> space_id;
  std::optional<std::string> nct_id;  // window source for space_text
  std::optional<Date> open_date;      // explicit window for space_text
  std::optional<Date> close_date;
  std::optional<std::size_t> k;
  std::optional<double> threshold;
  std::optional<std::set<Split>> splits;
  bool show_filtered = false;
  bool temporal = true;
  bool use_checker = true;
};

// Request bodies; throw InvalidArgument unless exactly one query source
// is given, ParseError on malformed JSON or field types.
PatientQuery parse_patient_query(const std::string& json_body);
SpaceQuery parse_space_query(const std::string& json_body);

struct MatchResult {
  std::string query_ref;
  std::size_t k = 0;
  double threshold = 0.0;
  std::optional<Date> as_of;
  std::vector<cascade::MatchCandidate> candidates;  // all k, rank order
};

// Matching over an atomically replaceable (corpus, index) snapshot. Queries
// hold the snapshot they started on, so a reload never disturbs them.
class MatchService {
 public:
  MatchService(ServiceConfig config, Providers providers);

  // Loads corpus_dir, then index_path when it exists or an index built from
  // the corpus, and swaps both in.
  void reload();
  void install(std::shared_ptr<const Corpus> corpus, std::shared_ptr<const index::VectorIndex> index);
  bool loaded() const;

  // Throw ConflictError when no snapshot is loaded, NotFound for an unknown
  // stored id, InvalidArgument for bad parameters.
  MatchResult run_patient(const PatientQuery& query) const;
  MatchResult run_space(const SpaceQuery& query) const;

  // JSON bodies shared by the HTTP endpoints and the CLI's json output.
  std::string patient_json(const PatientQuery& query) const;
  std::string space_json(const SpaceQuery& query) const;

  // Endpoint handlers; exceptions become status codes (400 bad request,
  // 404 unknown id, 409 no index, 502 provider failure).
  Reply handle_match_patient(const std::string& body) const;
  Reply handle_match_space(const std::string& body) const;
  Reply handle_trial(const std::string& nct_id) const;
  Reply handle_space(const std::string& space_id) const;
  Reply handle_health() const;
  Reply handle_reload();

  // True when auth is off, or the header is "Bearer <token>" and the token
  // equals the value of the configured environment variable.
  bool authorized(const std::string& authorization_header) const;

  const ServiceConfig& config() const { return config_; }
  const Providers& providers() const { return providers_; }
  std::shared_ptr<const cascade::Matcher> matcher() const;

 private:
  struct Snapshot {
    std::shared_ptr<const Corpus> corpus;
    std::shared_ptr<const cascade::Matcher> matcher;
  };
  std::shared_ptr<const Snapshot> snapshot() const;
  std::shared_ptr<const Snapshot> require_snapshot() const;
  cascade::MatchOptions options(std::optional<std::size_t> k, std::size_t default_k,
                                std::optional<double> threshold, bool temporal, bool use_checker) const;

  ServiceConfig config_;
  Providers providers_;
  std::shared_ptr<embedding::VectorCache> cache_;
  mutable std::mutex mu_;
  std::shared_ptr<const Snapshot> snapshot_;
  std::mutex reload_mu_;
};

// Status code for an exception escaping a handler.
int status_for(const std::exception& e);

}  // namespace trialmatch::service
