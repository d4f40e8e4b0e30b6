#include "trialmatch/datamodel/corpus.h"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "internal/json_codec.h"
#include "trialmatch/common/error.h"

namespace trialmatch {

namespace fs = std::filesystem;

namespace {

template <typename T, typename Decode, typename Key>
std::vector<T> read_collection(const fs::path& file, LoadOptions options, Decode decode, Key key,
                               std::string_view kind) {
  std::vector<T> out;
  if (!fs::exists(file)) return out;
  std::set<decltype(key(std::declval<const T&>()))> seen;
  codec::for_each_jsonl(read_file(file), [&](const codec::json& j, std::size_t line) {
    T record = decode(j, options.strict);
    if (!seen.insert(key(record)).second) {
      throw ConflictError(file.string() + " line " + std::to_string(line) + ": duplicate " +
                          std::string(kind) + " primary key");
    }
    out.push_back(std::move(record));
  });
  return out;
}

auto document_key(const ClinicalDocument& d) {
  return std::make_tuple(d.patient_id, d.date, d.doc_type, d.text);
}
auto summary_key(const PatientSummary& s) { return s.ref(); }
auto trial_key(const TrialRecord& t) { return t.nct_id; }
auto space_key(const TrialSpace& s) { return s.space_id; }
auto enrollment_key(const Enrollment& e) {
  return std::make_tuple(e.patient_id, e.nct_id, e.enroll_date);
}
auto label_key(const PairLabel& l) {
  return std::make_tuple(l.summary_ref, l.space_id, l.provenance);
}

}  // namespace

bool Corpus::empty() const {
  return documents.empty() && summaries.empty() && trials.empty() && spaces.empty() &&
         enrollments.empty() && labels.empty();
}

std::string read_file(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw NotFound("cannot open " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const fs::path& file, const std::string& contents) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  fs::path tmp = file;
  static std::atomic<std::uint64_t> counter{0};
  tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter++);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << contents;
    if (!out) throw Error("write failed for " + tmp.string());
  }
  fs::rename(tmp, file);
}

std::vector<ClinicalDocument> read_documents(const fs::path& file, LoadOptions options) {
  return read_collection<ClinicalDocument>(file, options, codec::decode_document, document_key,
                                           "document");
}
std::vector<PatientSummary> read_summaries(const fs::path& file, LoadOptions options) {
  return read_collection<PatientSummary>(file, options, codec::decode_summary, summary_key,
                                         "summary");
}
std::vector<TrialRecord> read_trials(const fs::path& file, LoadOptions options) {
  return read_collection<TrialRecord>(file, options, codec::decode_trial, trial_key, "trial");
}
std::vector<TrialSpace> read_spaces(const fs::path& file, LoadOptions options) {
  return read_collection<TrialSpace>(file, options, codec::decode_space, space_key, "space");
}
std::vector<Enrollment> read_enrollments(const fs::path& file, LoadOptions options) {
  return read_collection<Enrollment>(file, options, codec::decode_enrollment, enrollment_key, "enrollment");
}

void write_documents(const std::vector<ClinicalDocument>& documents, const fs::path& file) {
  write_file_atomic(file, codec::to_jsonl(documents));
}
void write_summaries(const std::vector<PatientSummary>& summaries, const fs::path& file) {
  write_file_atomic(file, codec::to_jsonl(summaries));
}
void write_trials(const std::vector<TrialRecord>& trials, const fs::path& file) {
  write_file_atomic(file, codec::to_jsonl(trials));
}
void write_spaces(const std::vector<TrialSpace>& spaces, const fs::path& file) {
  write_file_atomic(file, codec::to_jsonl(spaces));
}
void write_labels(const std::vector<PairLabel>& labels, const fs::path& file) {
  write_file_atomic(file, codec::to_jsonl(labels));
}

Corpus load_corpus(const fs::path& dir, LoadOptions options) {
  if (!fs::is_directory(dir)) throw NotFound("corpus directory not found: " + dir.string());
  Corpus c;
  c.documents = read_documents(dir / kDocumentsFile, options);
  c.summaries = read_summaries(dir / kSummariesFile, options);
  c.trials = read_trials(dir / kTrialsFile, options);
  c.spaces = read_spaces(dir / kSpacesFile, options);
  c.enrollments = read_enrollments(dir / kEnrollmentsFile, options);
  c.labels = read_collection<PairLabel>(dir / kLabelsFile, options, codec::decode_label,
                                        label_key, "label");
  return c;
}

void canonicalize(Corpus& c) {
  // Documents of one patient on one day keep their input order.
  std::stable_sort(c.documents.begin(), c.documents.end(), [](const auto& a, const auto& b) {
    return std::tie(a.patient_id, a.date) < std::tie(b.patient_id, b.date);
  });
  std::stable_sort(c.summaries.begin(), c.summaries.end(),
                   [](const auto& a, const auto& b) { return a.ref() < b.ref(); });
  std::stable_sort(c.trials.begin(), c.trials.end(),
                   [](const auto& a, const auto& b) { return a.nct_id < b.nct_id; });
  std::stable_sort(c.spaces.begin(), c.spaces.end(), [](const auto& a, const auto& b) {
    return std::tie(a.nct_id, a.ordinal) < std::tie(b.nct_id, b.ordinal);
  });
  std::stable_sort(c.enrollments.begin(), c.enrollments.end(), [](const auto& a, const auto& b) {
    return std::tie(a.patient_id, a.enroll_date, a.nct_id) <
           std::tie(b.patient_id, b.enroll_date, b.nct_id);
  });
  std::stable_sort(c.labels.begin(), c.labels.end(), [](const auto& a, const auto& b) {
    return std::tie(a.summary_ref, a.space_id, a.provenance) <
           std::tie(b.summary_ref, b.space_id, b.provenance);
  });
}

void save_corpus(const Corpus& corpus, const fs::path& dir) {
  Corpus c = corpus;
  canonicalize(c);
  fs::create_directories(dir);
  write_file_atomic(dir / kDocumentsFile, codec::to_jsonl(c.documents));
  write_file_atomic(dir / kSummariesFile, codec::to_jsonl(c.summaries));
  write_file_atomic(dir / kTrialsFile, codec::to_jsonl(c.trials));
  write_file_atomic(dir / kSpacesFile, codec::to_jsonl(c.spaces));
  write_file_atomic(dir / kEnrollmentsFile, codec::to_jsonl(c.enrollments));
  write_file_atomic(dir / kLabelsFile, codec::to_jsonl(c.labels));
}

std::vector<std::string> validate_corpus(const Corpus& c) {
  std::vector<std::string> issues;
  std::set<std::string> patients;
  for (const auto& d : c.documents) patients.insert(d.patient_id);
  for (const auto& s : c.summaries) patients.insert(s.patient_id);
  std::map<std::string, const TrialRecord*> trials;
  for (const auto& t : c.trials) trials.emplace(t.nct_id, &t);
  std::set<std::string> space_ids;
  for (const auto& s : c.spaces) {
    space_ids.insert(s.space_id);
    if (!trials.count(s.nct_id)) issues.push_back("space " + s.space_id + " references unknown trial");
  }
  std::set<SummaryRef> summary_refs;
  for (const auto& s : c.summaries) summary_refs.insert(s.ref());
  for (const auto& e : c.enrollments) {
    if (!patients.count(e.patient_id)) {
      issues.push_back("enrollment references unknown patient " + e.patient_id);
    }
    if (!trials.count(e.nct_id)) issues.push_back("enrollment references unknown trial " + e.nct_id);
  }
  for (const auto& l : c.labels) {
    if (!space_ids.count(l.space_id)) issues.push_back("label references unknown space " + l.space_id);
    if (!summary_refs.count(l.summary_ref)) {
      issues.push_back("label references unknown summary " + l.summary_ref.key());
    }
  }
  return issues;
}

}  // namespace trialmatch
