// Stance- and entity-annotated tweet corpora.
//
// On disk a corpus is UTF-8 JSON Lines, one tweet per line:
//
//   {"id": "t1", "target": "Target-1", "stance": "favor", "text": "...",
//    "entities": [{"start_token": 0, "end_token": 1, "type": "ORG",
//                  "bare_form": "Fenerbahçe"}]}
//
// `entities` is optional. A line without `text` but with `tweet_id` and
// `entities` is an annotation-only record that attaches entities to a tweet
// defined elsewhere in the file, which lets an answer key be appended to an
// unannotated corpus. Token indices refer to textnorm::tokenize.
#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "stanceforge/error.hpp"
#include "stanceforge/textnorm.hpp"

namespace stanceforge {

enum class StanceLabel { Favor, Against };
enum class EntityType { Person, Location, Organization };

inline constexpr std::array<StanceLabel, 2> kStanceLabels = {StanceLabel::Favor,
                                                             StanceLabel::Against};
inline constexpr std::array<EntityType, 3> kEntityTypes = {
    EntityType::Person, EntityType::Location, EntityType::Organization};

inline std::string_view to_string(StanceLabel s) {
  return s == StanceLabel::Favor ? "favor" : "against";
}

inline std::string_view display_name(StanceLabel s) {
  return s == StanceLabel::Favor ? "Favor" : "Against";
}

inline std::optional<StanceLabel> parse_stance(std::string_view s) {
  if (s == "favor") return StanceLabel::Favor;
  if (s == "against") return StanceLabel::Against;
  return std::nullopt;
}

inline std::string_view to_string(EntityType t) {
  switch (t) {
    case EntityType::Person: return "PER";
    case EntityType::Location: return "LOC";
    case EntityType::Organization: return "ORG";
  }
  return "?";
}

inline std::string_view display_name(EntityType t) {
  switch (t) {
    case EntityType::Person: return "Person";
    case EntityType::Location: return "Location";
    case EntityType::Organization: return "Organization";
  }
  return "?";
}

inline std::optional<EntityType> parse_entity_type(std::string_view s) {
  if (s == "PER") return EntityType::Person;
  if (s == "LOC") return EntityType::Location;
  if (s == "ORG") return EntityType::Organization;
  return std::nullopt;
}

inline std::size_t index_of(EntityType t) { return static_cast<std::size_t>(t); }

struct Tweet {
  std::string id;
  std::string target;
  StanceLabel stance = StanceLabel::Favor;
  std::string text;

  bool operator==(const Tweet&) const = default;
};

struct EntityAnnotation {
  std::string tweet_id;
  std::size_t start_token = 0;
  std::size_t end_token = 0;  // exclusive
  EntityType etype = EntityType::Organization;
  std::string bare_form;

  bool operator==(const EntityAnnotation&) const = default;
};

/// Immutable validated corpus. Annotations are kept grouped by tweet (in
/// tweet order) and sorted by start token within a tweet.
class Corpus {
 public:
  Corpus() = default;

  /// Validates every invariant; throws Error on the first violation.
  /// `annotation_lines` optionally carries the source line of each
  /// annotation for error messages.
  static Corpus build(std::vector<Tweet> tweets, std::vector<EntityAnnotation> annotations,
                      std::span<const std::size_t> annotation_lines = {},
                      std::span<const std::size_t> tweet_lines = {}) {
    Corpus c;
    c.tweets_ = std::move(tweets);
    for (std::size_t i = 0; i < c.tweets_.size(); ++i) {
      const Tweet& t = c.tweets_[i];
      const std::size_t line = i < tweet_lines.size() ? tweet_lines[i] : 0;
      if (t.id.empty() || t.target.empty() || t.text.empty())
        throw Error(ErrorKind::Malformed, "tweet with empty id, target or text", line);
      if (!c.index_.emplace(t.id, i).second)
        throw Error(ErrorKind::DuplicateId, "duplicate tweet id '" + t.id + "'", line);
    }

    std::vector<std::size_t> order(annotations.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    const auto line_of = [&](std::size_t i) {
      return i < annotation_lines.size() ? annotation_lines[i] : std::size_t{0};
    };

    std::vector<std::size_t> owner(annotations.size());
    std::vector<std::size_t> token_counts(c.tweets_.size(), SIZE_MAX);
    for (std::size_t i = 0; i < annotations.size(); ++i) {
      const EntityAnnotation& a = annotations[i];
      auto it = c.index_.find(a.tweet_id);
      if (it == c.index_.end())
        throw Error(ErrorKind::DanglingAnnotation,
                    "annotation references unknown tweet '" + a.tweet_id + "'", line_of(i));
      owner[i] = it->second;
      if (a.bare_form.empty())
        throw Error(ErrorKind::Malformed, "annotation with empty bare_form", line_of(i));
      std::size_t& n = token_counts[owner[i]];
      if (n == SIZE_MAX) n = textnorm::tokenize(c.tweets_[owner[i]].text).size();
      if (!(a.start_token < a.end_token && a.end_token <= n))
        throw Error(ErrorKind::OutOfRangeSpan,
                    "span [" + std::to_string(a.start_token) + "," + std::to_string(a.end_token) +
                        ") invalid for tweet '" + a.tweet_id + "' with " + std::to_string(n) +
                        " tokens",
                    line_of(i));
    }

    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
      if (owner[x] != owner[y]) return owner[x] < owner[y];
      return annotations[x].start_token < annotations[y].start_token;
    });
    for (std::size_t k = 1; k < order.size(); ++k) {
      const std::size_t prev = order[k - 1], cur = order[k];
      if (owner[prev] == owner[cur] &&
          annotations[cur].start_token < annotations[prev].end_token)
        throw Error(ErrorKind::OverlappingSpans,
                    "overlapping annotations in tweet '" + annotations[cur].tweet_id + "'",
                    line_of(cur));
    }

    c.annotations_.reserve(annotations.size());
    c.ranges_.assign(c.tweets_.size(), {0, 0});
    for (std::size_t k = 0; k < order.size(); ++k) {
      const std::size_t t = owner[order[k]];
      if (c.ranges_[t].second == 0) c.ranges_[t].first = k;
      c.ranges_[t].second = k + 1;
      c.annotations_.push_back(std::move(annotations[order[k]]));
    }
    return c;
  }

  const std::vector<Tweet>& tweets() const { return tweets_; }
  const std::vector<EntityAnnotation>& annotations() const { return annotations_; }
  std::size_t size() const { return tweets_.size(); }
  bool empty() const { return tweets_.empty(); }

  const Tweet* find(std::string_view id) const {
    auto p = position(id);
    return p ? &tweets_[*p] : nullptr;
  }

  std::optional<std::size_t> position(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  /// Gold annotations of the tweet at position `tweet_index`.
  std::span<const EntityAnnotation> annotations_for(std::size_t tweet_index) const {
    if (ranges_.empty()) return {};
    const auto [b, e] = ranges_[tweet_index];
    return std::span<const EntityAnnotation>(annotations_).subspan(b, e - b);
  }

  /// Distinct targets in order of first appearance.
  std::vector<std::string> targets() const {
    std::vector<std::string> out;
    for (const Tweet& t : tweets_)
      if (std::find(out.begin(), out.end(), t.target) == out.end()) out.push_back(t.target);
    return out;
  }

  bool operator==(const Corpus& o) const {
    return tweets_ == o.tweets_ && annotations_ == o.annotations_;
  }

 private:
  std::vector<Tweet> tweets_;
  std::vector<EntityAnnotation> annotations_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::pair<std::size_t, std::size_t>> ranges_;
};

namespace detail {

inline const nlohmann::json& require(const nlohmann::json& obj, const char* key,
                                     std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end())
    throw Error(ErrorKind::Malformed, std::string("missing field '") + key + "'", line);
  return *it;
}

inline std::string require_string(const nlohmann::json& obj, const char* key, std::size_t line) {
  const auto& v = require(obj, key, line);
  if (!v.is_string())
    throw Error(ErrorKind::Malformed, std::string("field '") + key + "' must be a string", line);
  return v.get<std::string>();
}

inline std::size_t require_index(const nlohmann::json& obj, const char* key, std::size_t line) {
  const auto& v = require(obj, key, line);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
    throw Error(ErrorKind::Malformed,
                std::string("field '") + key + "' must be a non-negative integer", line);
  return v.get<std::size_t>();
}

inline void parse_entities(const nlohmann::json& arr, const std::string& tweet_id,
                           std::size_t line, std::vector<EntityAnnotation>& out,
                           std::vector<std::size_t>& lines) {
  if (!arr.is_array()) throw Error(ErrorKind::Malformed, "'entities' must be an array", line);
  for (const auto& e : arr) {
    if (!e.is_object()) throw Error(ErrorKind::Malformed, "entity must be an object", line);
    EntityAnnotation a;
    a.tweet_id = tweet_id;
    a.start_token = require_index(e, "start_token", line);
    a.end_token = require_index(e, "end_token", line);
    const std::string type = require_string(e, "type", line);
    auto et = parse_entity_type(type);
    if (!et) throw Error(ErrorKind::Malformed, "unknown entity type '" + type + "'", line);
    a.etype = *et;
    a.bare_form = require_string(e, "bare_form", line);
    out.push_back(std::move(a));
    lines.push_back(line);
  }
}

}  // namespace detail

/// Parses a JSON Lines corpus. All-or-nothing: throws Error on the first
/// problem, with the 1-based line number when one applies.
inline Corpus read_corpus(std::istream& in) {
  std::vector<Tweet> tweets;
  std::vector<std::size_t> tweet_lines;
  std::vector<EntityAnnotation> annotations;
  std::vector<std::size_t> annotation_lines;
  std::unordered_map<std::string, std::size_t> seen;

  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (raw.find_first_not_of(" \t") == std::string::npos) continue;

    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::Malformed, std::string("invalid JSON: ") + e.what(), line);
    }
    if (!obj.is_object()) throw Error(ErrorKind::Malformed, "expected a JSON object", line);

    if (!obj.contains("text") && obj.contains("tweet_id")) {
      const std::string id = detail::require_string(obj, "tweet_id", line);
      detail::parse_entities(detail::require(obj, "entities", line), id, line, annotations,
                             annotation_lines);
      continue;
    }

    Tweet t;
    t.id = detail::require_string(obj, "id", line);
    t.target = detail::require_string(obj, "target", line);
    const std::string stance = detail::require_string(obj, "stance", line);
    auto label = parse_stance(stance);
    if (!label)
      throw Error(ErrorKind::Malformed,
                  "unknown stance '" + stance + "' (expected \"favor\" or \"against\")", line);
    t.stance = *label;
    t.text = detail::require_string(obj, "text", line);
    if (t.id.empty() || t.target.empty() || t.text.empty())
      throw Error(ErrorKind::Malformed, "id, target and text must be non-empty", line);
    if (!seen.emplace(t.id, line).second)
      throw Error(ErrorKind::DuplicateId, "duplicate tweet id '" + t.id + "'", line);
    if (auto it = obj.find("entities"); it != obj.end())
      detail::parse_entities(*it, t.id, line, annotations, annotation_lines);
    tweets.push_back(std::move(t));
    tweet_lines.push_back(line);
  }
  return Corpus::build(std::move(tweets), std::move(annotations), annotation_lines,
                       tweet_lines);
}

inline Corpus load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open corpus file '" + path + "'");
  return read_corpus(in);
}

/// One tweet per line with its annotations inline, keys in schema order.
inline void write_corpus(const Corpus& c, std::ostream& out) {
  for (std::size_t i = 0; i < c.size(); ++i) {
    const Tweet& t = c.tweets()[i];
    nlohmann::ordered_json obj;
    obj["id"] = t.id;
    obj["target"] = t.target;
    obj["stance"] = std::string(to_string(t.stance));
    obj["text"] = t.text;
    auto anns = c.annotations_for(i);
    if (!anns.empty()) {
      auto arr = nlohmann::ordered_json::array();
      for (const EntityAnnotation& a : anns) {
        nlohmann::ordered_json e;
        e["start_token"] = a.start_token;
        e["end_token"] = a.end_token;
        e["type"] = std::string(to_string(a.etype));
        e["bare_form"] = a.bare_form;
        arr.push_back(std::move(e));
      }
      obj["entities"] = std::move(arr);
    }
    out << obj.dump() << '\n';
  }
}

inline void save_corpus(const Corpus& c, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write corpus file '" + path + "'");
  write_corpus(c, out);
}

struct StatsCell {
  std::size_t tweets = 0;
  std::array<std::size_t, 3> entities{};  // indexed by EntityType

  std::size_t total() const { return entities[0] + entities[1] + entities[2]; }
  StatsCell& operator+=(const StatsCell& o) {
    tweets += o.tweets;
    for (std::size_t k = 0; k < entities.size(); ++k) entities[k] += o.entities[k];
    return *this;
  }
  bool operator==(const StatsCell&) const = default;
};

struct StatsRow {
  std::string target;
  StanceLabel stance = StanceLabel::Favor;
  StatsCell cell;
};

struct StatsTable {
  std::vector<StatsRow> rows;  // targets sorted, Favor before Against
  StatsCell total;
};

/// Tweet and entity counts per (target, stance) cell.
inline StatsTable corpus_stats(const Corpus& c) {
  std::map<std::pair<std::string, StanceLabel>, StatsCell> cells;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const Tweet& t = c.tweets()[i];
    for (StanceLabel s : kStanceLabels) cells.try_emplace({t.target, s});
    StatsCell& cell = cells[{t.target, t.stance}];
    ++cell.tweets;
    for (const EntityAnnotation& a : c.annotations_for(i)) ++cell.entities[index_of(a.etype)];
  }
  StatsTable table;
  for (auto& [key, cell] : cells) {
    table.rows.push_back({key.first, key.second, cell});
    table.total += cell;
  }
  return table;
}

inline Corpus filter_by_target(const Corpus& c, std::string_view target) {
  std::vector<Tweet> tweets;
  std::vector<EntityAnnotation> annotations;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c.tweets()[i].target != target) continue;
    tweets.push_back(c.tweets()[i]);
    for (const EntityAnnotation& a : c.annotations_for(i)) annotations.push_back(a);
  }
  return Corpus::build(std::move(tweets), std::move(annotations));
}

}  // namespace stanceforge
