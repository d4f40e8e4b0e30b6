#pragma once

#include <cstdint>
#include <string_view>

#include "trialmatch/datamodel/types.h"

namespace trialmatch {

// Patient-level split. bucket = fnv1a64(patient_id) % 100;
// 0-79 train, 80-89 validation, 90-99 test. Pure function of the id, so a
// patient present in several datasets always lands in the same split.
Split assign_split(std::string_view patient_id);

std::uint64_t split_bucket(std::string_view patient_id);

}  // namespace trialmatch
