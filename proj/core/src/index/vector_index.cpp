#include "trialmatch/index/vector_index.h"

#include <algorithm>
#include <sstream>

#include "internal/binio.h"
#include "trialmatch/common/error.h"
#include "trialmatch/datamodel/corpus.h"
#include "trialmatch/embedding/embedding.h"

namespace trialmatch::index {

namespace {

constexpr char kMagic[5] = "TMIX";
constexpr std::uint8_t kVersion = 1;

enum MetaBits : std::uint8_t {
  kHasAnchor = 1,
  kHasSplit = 2,
  kHasNct = 4,
  kHasOpen = 8,
  kHasClose = 16,
};

std::uint8_t split_code(Split s) { return static_cast<std::uint8_t>(s); }

}  // namespace

std::string_view to_string(Side s) { return s == Side::kPatient ? "patient" : "space"; }

bool window_contains(const Window& w, Date d) { return w.open <= d && (!w.close || d <= *w.close); }

bool temporal_pass(const IndexedItem& item, Date as_of) {
  if (!item.meta.open_date) throw ContractViolation("temporal_pass: item " + item.item_id + " has no open window");
  return window_contains({*item.meta.open_date, item.meta.close_date}, as_of);
}

bool passes(const IndexedItem& item, const QueryFilter& f) {
  if (item.side == Side::kSpace) {
    if (f.temporal_as_of && !temporal_pass(item, *f.temporal_as_of)) return false;
    if (f.nct_exclude && item.meta.nct_id && f.nct_exclude->count(*item.meta.nct_id)) return false;
  } else {
    if (f.anchor_within) {
      if (!item.meta.anchor_date) throw ContractViolation("patient item " + item.item_id + " has no anchor date");
      if (!window_contains(*f.anchor_within, *item.meta.anchor_date)) return false;
    }
    if (f.split_in) {
      if (!item.meta.split) throw ContractViolation("patient item " + item.item_id + " has no split");
      if (!f.split_in->count(*item.meta.split)) return false;
    }
  }
  return true;
}

VectorIndex::VectorIndex(std::size_t dimension) : dimension_(dimension) {
  if (dimension == 0) throw InvalidArgument("index dimension must be positive");
}

void VectorIndex::add(IndexedItem item) {
  if (item.vector.size() != dimension_) {
    throw InvalidArgument("index add: " + item.item_id + " has dimension " + std::to_string(item.vector.size()) +
                          ", index has " + std::to_string(dimension_));
  }
  if (item.item_id.empty()) throw InvalidArgument("index add: empty item id");
  if (item.side == Side::kPatient && (!item.meta.anchor_date || !item.meta.split)) {
    throw InvalidArgument("index add: patient item " + item.item_id + " needs anchor_date and split");
  }
  if (item.side == Side::kSpace && (!item.meta.nct_id || !item.meta.open_date)) {
    throw InvalidArgument("index add: space item " + item.item_id + " needs nct_id and open_date");
  }
  auto& s = store(item.side);
  if (s.by_id.count(item.item_id)) {
    throw ConflictError("index add: duplicate " + std::string(to_string(item.side)) + " id " + item.item_id);
  }
  s.by_id.emplace(item.item_id, s.items.size());
  s.matrix.insert(s.matrix.end(), item.vector.begin(), item.vector.end());
  item.vector.clear();
  item.vector.shrink_to_fit();
  s.items.push_back(std::move(item));
}

VectorIndex VectorIndex::build(std::size_t dimension, std::vector<IndexedItem> items) {
  VectorIndex idx(dimension);
  for (auto& it : items) idx.add(std::move(it));
  return idx;
}

std::size_t VectorIndex::size(Side side) const { return store(side).items.size(); }

std::vector<Hit> VectorIndex::top_k(std::span<const float> query, Side side, std::size_t k,
                                    const QueryFilter& filter) const {
  if (k == 0) throw InvalidArgument("top_k: k must be at least 1");
  if (query.size() != dimension_) {
    throw InvalidArgument("top_k: query dimension " + std::to_string(query.size()) + ", index has " +
                          std::to_string(dimension_));
  }
  const auto& s = store(side);
  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(s.items.size());
  for (std::size_t i = 0; i < s.items.size(); ++i) {
    if (!passes(s.items[i], filter)) continue;
    const std::span<const float> row(s.matrix.data() + i * dimension_, dimension_);
    scored.emplace_back(embedding::cosine(query, row), i);
  }
  auto better = [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return s.items[a.second].item_id < s.items[b.second].item_id;
  };
  const std::size_t n = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n), scored.end(), better);
  std::vector<Hit> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back({s.items[scored[i].second].item_id, scored[i].first});
  return out;
}

std::optional<IndexedItem> VectorIndex::get(Side side, const std::string& item_id) const {
  const auto& s = store(side);
  auto it = s.by_id.find(item_id);
  if (it == s.by_id.end()) return std::nullopt;
  IndexedItem item = s.items[it->second];
  const auto* row = s.matrix.data() + it->second * dimension_;
  item.vector.assign(row, row + dimension_);
  return item;
}

std::vector<std::string> VectorIndex::ids(Side side) const {
  std::vector<std::string> out;
  for (const auto& it : store(side).items) out.push_back(it.item_id);
  return out;
}

void VectorIndex::save(const std::filesystem::path& path) const {
  std::ostringstream out;
  out.write(kMagic, 4);
  binio::put_le<std::uint8_t>(out, kVersion);
  binio::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(dimension_));
  binio::put_le<std::uint64_t>(out, patients_.items.size());
  binio::put_le<std::uint64_t>(out, spaces_.items.size());
  for (const auto* s : {&patients_, &spaces_}) {
    for (std::size_t i = 0; i < s->items.size(); ++i) {
      const auto& it = s->items[i];
      const auto& m = it.meta;
      binio::put_string(out, it.item_id);
      std::uint8_t bits = 0;
      if (m.anchor_date) bits |= kHasAnchor;
      if (m.split) bits |= kHasSplit;
      if (m.nct_id) bits |= kHasNct;
      if (m.open_date) bits |= kHasOpen;
      if (m.close_date) bits |= kHasClose;
      binio::put_le<std::uint8_t>(out, bits);
      if (m.anchor_date) binio::put_le<std::int64_t>(out, m.anchor_date->days());
      if (m.split) binio::put_le<std::uint8_t>(out, split_code(*m.split));
      if (m.nct_id) binio::put_string(out, *m.nct_id);
      if (m.open_date) binio::put_le<std::int64_t>(out, m.open_date->days());
      if (m.close_date) binio::put_le<std::int64_t>(out, m.close_date->days());
      for (std::size_t d = 0; d < dimension_; ++d) binio::put_f32(out, s->matrix[i * dimension_ + d]);
    }
  }
  write_file_atomic(path, out.str());
}

VectorIndex VectorIndex::load(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  binio::expect_magic(in, kMagic);
  if (binio::get_le<std::uint8_t>(in) != kVersion) throw ParseError("unsupported index version");
  const auto dim = binio::get_le<std::uint32_t>(in);
  const auto n_patient = binio::get_le<std::uint64_t>(in);
  const auto n_space = binio::get_le<std::uint64_t>(in);
  VectorIndex idx(dim);
  for (std::uint64_t r = 0; r < n_patient + n_space; ++r) {
    IndexedItem it;
    it.side = r < n_patient ? Side::kPatient : Side::kSpace;
    it.item_id = binio::get_string(in);
    const auto bits = binio::get_le<std::uint8_t>(in);
    if (bits & kHasAnchor) it.meta.anchor_date = Date::from_days(binio::get_le<std::int64_t>(in));
    if (bits & kHasSplit) {
      const auto code = binio::get_le<std::uint8_t>(in);
      if (code > 2) throw ParseError("bad split code in index file");
      it.meta.split = static_cast<Split>(code);
    }
    if (bits & kHasNct) it.meta.nct_id = binio::get_string(in);
    if (bits & kHasOpen) it.meta.open_date = Date::from_days(binio::get_le<std::int64_t>(in));
    if (bits & kHasClose) it.meta.close_date = Date::from_days(binio::get_le<std::int64_t>(in));
    it.vector.resize(dim);
    for (auto& f : it.vector) f = binio::get_f32(in);
    idx.add(std::move(it));
  }
  return idx;
}

std::shared_ptr<const VectorIndex> IndexSnapshot::current() const {
  std::lock_guard lock(mu_);
  return current_;
}

void IndexSnapshot::swap(std::shared_ptr<const VectorIndex> next) {
  std::lock_guard lock(mu_);
  current_ = std::move(next);
}

}  // namespace trialmatch::index
