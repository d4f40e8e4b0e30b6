#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "trialmatch/common/date.h"
#include "trialmatch/datamodel/types.h"

namespace trialmatch::index {

enum class Side { kPatient, kSpace };

std::string_view to_string(Side s);

struct ItemMeta {
  std::optional<Date> anchor_date;  // patient side
  std::optional<Split> split;       // patient side
  std::optional<std::string> nct_id;  // space side
  std::optional<Date> open_date;      // space side
  std::optional<Date> close_date;     // space side, absent = still open

  bool operator==(const ItemMeta&) const = default;
};

struct IndexedItem {
  std::string item_id;  // SummaryRef::key() or space_id
  Side side = Side::kPatient;
  std::vector<float> vector;
  ItemMeta meta;

  bool operator==(const IndexedItem&) const = default;
};

struct Window {
  Date open;
  std::optional<Date> close;
};

// Predicates combine by conjunction; an unset field does not filter.
struct QueryFilter {
  std::optional<Date> temporal_as_of;               // spaces open on this date
  std::optional<Window> anchor_within;              // patients anchored inside this window
  std::optional<std::set<Split>> split_in;          // patients in these splits
  std::optional<std::set<std::string>> nct_exclude; // spaces not from these trials
};

struct Hit {
  std::string item_id;
  double score = 0.0;

  bool operator==(const Hit&) const = default;
};

// Inclusive on both ends; an absent close means open-ended.
bool window_contains(const Window& w, Date d);

// open_date <= as_of and (close absent or as_of <= close). Throws
// ContractViolation for an item without an open date.
bool temporal_pass(const IndexedItem& item, Date as_of);

bool passes(const IndexedItem& item, const QueryFilter& filter);

// Exact cosine index over both sides. Vectors live in one contiguous
// row-major matrix per side. Immutable once shared; see IndexSnapshot.
class VectorIndex {
 public:
  explicit VectorIndex(std::size_t dimension);

  // Throws ConflictError for a duplicate id on the same side,
  // InvalidArgument for a wrong dimension or missing side metadata.
  void add(IndexedItem item);
  static VectorIndex build(std::size_t dimension, std::vector<IndexedItem> items);

  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return size(Side::kPatient) + size(Side::kSpace); }
  std::size_t size(Side side) const;

  // Descending score, ties by ascending item_id; at most k eligible items.
  // Throws InvalidArgument for k == 0 or a dimension mismatch.
  std::vector<Hit> top_k(std::span<const float> query, Side side, std::size_t k,
                         const QueryFilter& filter = {}) const;

  std::optional<IndexedItem> get(Side side, const std::string& item_id) const;
  std::vector<std::string> ids(Side side) const;  // insertion order

  // Layout in FORMATS.md ("TMIX").
  void save(const std::filesystem::path& path) const;
  static VectorIndex load(const std::filesystem::path& path);

 private:
  struct SideStore {
    std::vector<IndexedItem> items;  // vector member left empty
    std::vector<float> matrix;
    std::map<std::string, std::size_t> by_id;
  };
  const SideStore& store(Side s) const { return s == Side::kPatient ? patients_ : spaces_; }
  SideStore& store(Side s) { return s == Side::kPatient ? patients_ : spaces_; }

  std::size_t dimension_;
  SideStore patients_;
  SideStore spaces_;
};

// Holder of the current immutable index. Readers take a shared_ptr and keep
// using it while a writer swaps in a replacement.
class IndexSnapshot {
 public:
  std::shared_ptr<const VectorIndex> current() const;
  void swap(std::shared_ptr<const VectorIndex> next);

 private:
  mutable std::mutex mu_;
  std::shared_ptr<const VectorIndex> current_;
};

}  // namespace trialmatch::index
