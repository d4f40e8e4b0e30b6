#pragma once

// JSON encoding of datamodel records. Internal to the core library; the
// public headers stay free of the JSON dependency.

#include <json.hpp>

#include <functional>
#include <string>
#include <vector>

#include "trialmatch/datamodel/types.h"

namespace trialmatch::codec {

using nlohmann::json;

json encode(const ClinicalDocument& r);
json encode(const PatientSummary& r);
json encode(const TrialRecord& r);
json encode(const TrialSpace& r);
json encode(const Enrollment& r);
json encode(const PairLabel& r);
json encode(const SummaryRef& r);

// Decoders throw ParseError; `strict` rejects unknown members, otherwise they
// are moved into the record's `extra` map.
ClinicalDocument decode_document(const json& j, bool strict);
PatientSummary decode_summary(const json& j, bool strict);
TrialRecord decode_trial(const json& j, bool strict);
TrialSpace decode_space(const json& j, bool strict);
Enrollment decode_enrollment(const json& j, bool strict);
PairLabel decode_label(const json& j, bool strict);
SummaryRef decode_summary_ref(const json& j);

// Parses one JSON object per non-blank line, calling `fn(object, line_no)`.
void for_each_jsonl(const std::string& contents,
                    const std::function<void(const json&, std::size_t)>& fn);

template <typename T>
std::string to_jsonl(const std::vector<T>& records) {
  std::string out;
  for (const auto& r : records) {
    out += encode(r).dump();
    out.push_back('\n');
  }
  return out;
}

}  // namespace trialmatch::codec
