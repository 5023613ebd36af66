#include "triplh/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <string_view>
#include <unordered_map>

#include "triplh/error.hpp"

namespace triplh {

namespace {

std::vector<std::string_view> split_fields(std::string_view line, std::string_view sep) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + sep.size();
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::optional<std::int64_t> parse_int(std::string_view s) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

std::optional<double> parse_real(std::string_view s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

// Parses one record from already-split fields; returns an error message or
// an empty string.
std::string parse_record(const std::vector<std::string_view>& raw_fields, bool rating_optional,
                         RawInteraction& out) {
  if (raw_fields.size() != 4) {
    return "expected 4 fields, found " + std::to_string(raw_fields.size());
  }
  const std::string_view user = trim(raw_fields[0]);
  const std::string_view item = trim(raw_fields[1]);
  const std::string_view rating = trim(raw_fields[2]);
  const std::string_view ts = trim(raw_fields[3]);
  if (user.empty() || item.empty()) return "empty user or item field";
  std::optional<double> r;
  if (!rating.empty() || !rating_optional) {
    r = parse_real(rating);
    if (!r) return "bad rating '" + std::string(rating) + "'";
  }
  const auto t = parse_int(ts);
  if (!t) return "bad timestamp '" + std::string(ts) + "'";
  if (*t < 0) return "negative timestamp";
  out = RawInteraction{std::string(user), std::string(item), r, *t};
  return {};
}

template <class LineParser>
std::vector<RawInteraction> load_lines(const std::string& path, LineParser&& parse_line) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::vector<RawInteraction> out;
  std::string line;
  std::size_t line_no = 0;
  std::size_t malformed = 0;
  std::string first_error;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    RawInteraction rec;
    const auto status = parse_line(std::string_view(line), line_no, rec);
    if (status.has_value()) {
      if (!status->empty()) {
        ++malformed;
        if (first_error.empty()) {
          first_error = path + ":" + std::to_string(line_no) + ": " + *status;
        }
      }
      continue;  // empty status = skipped header
    }
    out.push_back(std::move(rec));
  }
  if (in.bad()) throw DataError("error reading '" + path + "'");
  if (malformed > 0) {
    throw DataError(first_error + " (" + std::to_string(malformed) + " malformed line" +
                    (malformed == 1 ? "" : "s") + " in total)");
  }
  return out;
}

}  // namespace

std::vector<RawInteraction> load_movielens(const std::string& path) {
  return load_lines(path, [](std::string_view line, std::size_t,
                             RawInteraction& rec) -> std::optional<std::string> {
    auto err = parse_record(split_fields(line, "::"), false, rec);
    if (err.empty()) return std::nullopt;
    return err;
  });
}

std::vector<RawInteraction> load_amazon_csv(const std::string& path) {
  bool first = true;
  return load_lines(path, [&first](std::string_view line, std::size_t,
                                   RawInteraction& rec) -> std::optional<std::string> {
    const auto fields = split_fields(line, ",");
    const bool is_first = first;
    first = false;
    if (is_first && fields.size() == 4 && !parse_int(trim(fields[3]))) {
      return std::string{};  // header
    }
    auto err = parse_record(fields, true, rec);
    if (err.empty()) return std::nullopt;
    return err;
  });
}

InteractionDataset::InteractionDataset(std::size_t n_users, std::size_t n_items,
                                       std::vector<Interaction> interactions,
                                       std::vector<std::string> user_tokens,
                                       std::vector<std::string> item_tokens)
    : n_users_(n_users),
      n_items_(n_items),
      interactions_(std::move(interactions)),
      user_tokens_(std::move(user_tokens)),
      item_tokens_(std::move(item_tokens)) {
  if (n_users_ == 0 || n_items_ == 0) throw DataError("dataset must have users and items");
  if (n_users_ > UINT32_MAX || n_items_ > UINT32_MAX) throw DataError("dataset too large");
  if (user_tokens_.size() != n_users_ || item_tokens_.size() != n_items_) {
    throw DataError("id map sizes do not match user/item counts");
  }
  auto check_unique = [](std::vector<std::string> tokens, const char* what) {
    std::ranges::sort(tokens);
    if (std::ranges::adjacent_find(tokens) != tokens.end()) {
      throw DataError(std::string("duplicate ") + what + " token in id map");
    }
  };
  check_unique(user_tokens_, "user");
  check_unique(item_tokens_, "item");

  user_offsets_.assign(n_users_ + 1, 0);
  for (std::size_t k = 0; k < interactions_.size(); ++k) {
    const Interaction& it = interactions_[k];
    if (it.user >= n_users_ || it.item >= n_items_) {
      throw DataError("interaction " + std::to_string(k) + " has an out-of-range index");
    }
    if (k > 0) {
      const Interaction& prev = interactions_[k - 1];
      if (it.user < prev.user || (it.user == prev.user && it.timestamp < prev.timestamp)) {
        throw DataError("interactions are not grouped by user in time order");
      }
    }
    ++user_offsets_[it.user + 1];
  }
  std::partial_sum(user_offsets_.begin(), user_offsets_.end(), user_offsets_.begin());

  popularity_.assign(n_items_, 0);
  test_item_.assign(n_users_, -1);
  validation_item_.assign(n_users_, -1);
  train_offsets_.assign(n_users_ + 1, 0);
  all_offsets_.assign(n_users_ + 1, 0);
  for (std::size_t u = 0; u < n_users_; ++u) {
    const std::size_t begin = user_offsets_[u];
    const std::size_t end = user_offsets_[u + 1];
    const std::size_t count = end - begin;
    if (count == 0) throw DataError("user " + std::to_string(u) + " has no interactions");
    for (std::size_t k = begin; k < end; ++k) {
      Split expected = Split::Train;
      if (count >= 3 && k == end - 1) expected = Split::Test;
      if (count >= 3 && k == end - 2) expected = Split::Validation;
      if (interactions_[k].split != expected) {
        throw DataError("user " + std::to_string(u) + " violates the leave-last-out layout");
      }
      if (expected == Split::Train) {
        train_indices_.push_back(k);
        train_items_.push_back(interactions_[k].item);
        ++popularity_[interactions_[k].item];
      }
      all_items_.push_back(interactions_[k].item);
    }
    if (count >= 3) {
      test_item_[u] = interactions_[end - 1].item;
      validation_item_[u] = interactions_[end - 2].item;
    }
    auto sort_tail = [](std::vector<std::uint32_t>& items, std::size_t from) {
      std::sort(items.begin() + static_cast<std::ptrdiff_t>(from), items.end());
      items.erase(std::unique(items.begin() + static_cast<std::ptrdiff_t>(from), items.end()),
                  items.end());
    };
    sort_tail(train_items_, train_offsets_[u]);
    sort_tail(all_items_, all_offsets_[u]);
    if (all_items_.size() - all_offsets_[u] != count) {
      throw DataError("user " + std::to_string(u) + " has a repeated item");
    }
    train_offsets_[u + 1] = train_items_.size();
    all_offsets_[u + 1] = all_items_.size();
  }
}

std::span<const Interaction> InteractionDataset::user_interactions(std::size_t user) const {
  return std::span(interactions_).subspan(user_offsets_[user],
                                          user_offsets_[user + 1] - user_offsets_[user]);
}

std::span<const std::uint32_t> InteractionDataset::train_items(std::size_t user) const {
  return std::span(train_items_).subspan(train_offsets_[user],
                                         train_offsets_[user + 1] - train_offsets_[user]);
}

bool InteractionDataset::is_train_item(std::size_t user, std::uint32_t item) const {
  return std::ranges::binary_search(train_items(user), item);
}

std::span<const std::uint32_t> InteractionDataset::all_items(std::size_t user) const {
  return std::span(all_items_).subspan(all_offsets_[user],
                                       all_offsets_[user + 1] - all_offsets_[user]);
}

std::optional<std::uint32_t> InteractionDataset::test_item(std::size_t user) const {
  if (test_item_[user] < 0) return std::nullopt;
  return static_cast<std::uint32_t>(test_item_[user]);
}

std::optional<std::uint32_t> InteractionDataset::validation_item(std::size_t user) const {
  if (validation_item_[user] < 0) return std::nullopt;
  return static_cast<std::uint32_t>(validation_item_[user]);
}

DatasetStats InteractionDataset::stats() const {
  DatasetStats s;
  s.n_users = n_users_;
  s.n_items = n_items_;
  s.n_actions = interactions_.size();
  for (const Interaction& it : interactions_) {
    switch (it.split) {
      case Split::Train: ++s.n_train; break;
      case Split::Validation: ++s.n_validation; break;
      case Split::Test: ++s.n_test; break;
    }
  }
  s.avg_length = static_cast<double>(s.n_actions) / static_cast<double>(n_users_);
  s.avg_train_length = static_cast<double>(s.n_train) / static_cast<double>(n_users_);
  return s;
}

bool InteractionDataset::operator==(const InteractionDataset& other) const {
  return n_users_ == other.n_users_ && n_items_ == other.n_items_ &&
         interactions_ == other.interactions_ && user_tokens_ == other.user_tokens_ &&
         item_tokens_ == other.item_tokens_;
}

InteractionDataset build_dataset(std::span<const RawInteraction> raw,
                                 std::optional<double> min_rating, BuildReport* report) {
  if (raw.empty()) throw DataError("build_dataset: no input interactions");
  BuildReport rep;
  rep.input_records = raw.size();

  std::unordered_map<std::string, std::uint32_t> user_ids, item_ids;
  std::vector<std::string> user_tokens, item_tokens;
  std::unordered_map<std::string, bool> seen_users;

  struct Event {
    std::uint32_t item;
    std::int64_t timestamp;
    std::size_t order;
  };
  std::vector<std::vector<Event>> per_user;

  for (std::size_t k = 0; k < raw.size(); ++k) {
    const RawInteraction& r = raw[k];
    if (r.timestamp < 0) throw DataError("negative timestamp in record " + std::to_string(k));
    seen_users.emplace(r.user_token, true);
    if (min_rating && (!r.rating || *r.rating < *min_rating)) {
      ++rep.filtered_by_rating;
      continue;
    }
    auto [uit, new_user] = user_ids.emplace(r.user_token, static_cast<std::uint32_t>(user_tokens.size()));
    if (new_user) {
      user_tokens.push_back(r.user_token);
      per_user.emplace_back();
    }
    auto [iit, new_item] = item_ids.emplace(r.item_token, static_cast<std::uint32_t>(item_tokens.size()));
    if (new_item) item_tokens.push_back(r.item_token);
    per_user[uit->second].push_back({iit->second, r.timestamp, k});
  }
  rep.dropped_users = seen_users.size() - user_tokens.size();
  if (user_tokens.empty()) throw DataError("build_dataset: every record was filtered out");

  std::vector<Interaction> interactions;
  interactions.reserve(raw.size());
  std::unordered_map<std::uint32_t, std::size_t> first_seen;
  for (std::uint32_t u = 0; u < per_user.size(); ++u) {
    std::vector<Event>& events = per_user[u];
    // Keep the earliest occurrence of each item (file order breaks ties).
    std::ranges::sort(events, [](const Event& a, const Event& b) {
      return a.timestamp != b.timestamp ? a.timestamp < b.timestamp : a.order < b.order;
    });
    first_seen.clear();
    std::vector<Event> kept;
    kept.reserve(events.size());
    for (const Event& e : events) {
      if (first_seen.emplace(e.item, kept.size()).second) {
        kept.push_back(e);
      } else {
        ++rep.duplicates_removed;
      }
    }
    const std::size_t count = kept.size();
    for (std::size_t k = 0; k < count; ++k) {
      Split s = Split::Train;
      if (count >= 3 && k == count - 1) s = Split::Test;
      if (count >= 3 && k == count - 2) s = Split::Validation;
      interactions.push_back({u, kept[k].item, kept[k].timestamp, s});
    }
  }
  if (report != nullptr) *report = rep;
  const std::size_t n_users = user_tokens.size();
  const std::size_t n_items = item_tokens.size();
  return InteractionDataset(n_users, n_items, std::move(interactions), std::move(user_tokens),
                            std::move(item_tokens));
}

}  // namespace triplh
