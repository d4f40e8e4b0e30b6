#pragma once

#include <string_view>
#include <vector>

namespace trialmatch::llm::resources {

struct Resource {
  std::string_view name;  // file stem, e.g. "space_extraction.system"
  std::string_view bytes;
};

const std::vector<Resource>& all();

}  // namespace trialmatch::llm::resources
