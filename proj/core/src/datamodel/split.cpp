#include "trialmatch/datamodel/split.h"

#include "trialmatch/common/error.h"
#include "trialmatch/common/hash.h"

namespace trialmatch {

std::uint64_t split_bucket(std::string_view patient_id) {
  if (patient_id.empty()) throw InvalidArgument("assign_split: empty patient_id");
  return fnv1a64(patient_id) % 100;
}

Split assign_split(std::string_view patient_id) {
  const auto bucket = split_bucket(patient_id);
  if (bucket < 80) return Split::kTrain;
  if (bucket < 90) return Split::kValidation;
  return Split::kTest;
}

}  // namespace trialmatch
