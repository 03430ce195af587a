// Rule-based named entity recognition over tokenized tweets.
//
// A gazetteer of typed surface forms is compiled into an index keyed on the
// canon-folded token sequence, so lowercase and diacritics-free spellings in
// tweets hit the same entry as the properly written form. Extraction is a
// greedy left-to-right longest match; the last token of a candidate span may
// carry inflectional suffixes, which are stripped to recover the bare form.
#pragma once

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <istream>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "stanceforge/corpus.hpp"
#include "stanceforge/error.hpp"
#include "stanceforge/textnorm.hpp"
#include "stanceforge/utf8.hpp"

namespace stanceforge::ner {

// ---------------------------------------------------------------------------
// Suffix stripping

struct StripResult {
  std::string bare;
  bool stripped = false;

  bool operator==(const StripResult&) const = default;
};

inline const std::vector<std::string>& default_suffixes() {
  static const std::vector<std::string> kSuffixes = {
      "nin", "nın", "nun", "nün", "in",  "ın",  "un",  "ün",  "de", "da",
      "te",  "ta",  "den", "dan", "ten", "tan", "e",   "a",   "i",  "ı",
      "u",   "ü",   "ler", "lar", "li",  "lı",  "lu",  "lü",  "ye", "ya"};
  return kSuffixes;
}

/// Removes Turkish inflectional suffixes from a token.
///
/// An apostrophe takes precedence: everything from the first apostrophe on
/// is dropped. Otherwise the longest configured suffix is removed repeatedly
/// while the remaining stem keeps at least `min_stem` code points. Suffixes
/// are compared in the canon key space, so casing and diacritics on the token
/// do not matter; the returned stem keeps the token's original spelling.
class SuffixStripper {
 public:
  static constexpr std::size_t kDefaultMinStem = 3;

  SuffixStripper() : SuffixStripper(default_suffixes()) {}

  explicit SuffixStripper(std::span<const std::string> suffixes,
                          std::size_t min_stem = kDefaultMinStem)
      : min_stem_(min_stem) {
    for (const std::string& s : suffixes) {
      std::u32string key = textnorm::canon(utf8::decode(s));
      if (key.empty()) continue;
      if (std::find(suffixes_.begin(), suffixes_.end(), key) == suffixes_.end())
        suffixes_.push_back(std::move(key));
    }
    std::stable_sort(suffixes_.begin(), suffixes_.end(),
                     [](const auto& a, const auto& b) { return a.size() > b.size(); });
  }

  /// Successive stems of `token`: the token itself first, then one entry per
  /// stripping step.
  std::vector<std::string> stems(std::string_view token) const {
    std::vector<std::string> out{std::string(token)};
    const std::u32string cps = utf8::decode(token);
    for (std::size_t i = 1; i < cps.size(); ++i) {
      if (textnorm::is_apostrophe(cps[i])) {
        out.push_back(utf8::encode(std::u32string_view(cps).substr(0, i)));
        return out;
      }
    }
    const std::u32string key = textnorm::canon(cps);
    std::size_t len = cps.size();
    for (;;) {
      const std::u32string_view stem(key.data(), len);
      bool removed = false;
      for (const std::u32string& s : suffixes_) {
        if (s.size() + min_stem_ > len) continue;
        if (stem.substr(len - s.size()) == s) {
          len -= s.size();
          removed = true;
          break;
        }
      }
      if (!removed) break;
      out.push_back(utf8::encode(std::u32string_view(cps).substr(0, len)));
    }
    return out;
  }

  StripResult strip(std::string_view token) const {
    auto chain = stems(token);
    return {chain.back(), chain.size() > 1};
  }

  std::span<const std::u32string> suffixes() const { return suffixes_; }

 private:
  std::vector<std::u32string> suffixes_;  // canon keys, longest first
  std::size_t min_stem_;
};

inline StripResult strip_suffix(std::string_view token, const SuffixStripper& stripper) {
  return stripper.strip(token);
}

inline StripResult strip_suffix(std::string_view token) {
  static const SuffixStripper kDefault;
  return kDefault.strip(token);
}

/// One suffix per line; blank lines and `#` comments ignored.
inline SuffixStripper read_suffixes(std::istream& in) {
  std::vector<std::string> suffixes;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto b = line.find_first_not_of(" \t");
    if (b == std::string::npos || line[b] == '#') continue;
    const auto e = line.find_last_not_of(" \t");
    suffixes.push_back(line.substr(b, e - b + 1));
  }
  return SuffixStripper(suffixes);
}

inline SuffixStripper load_suffixes(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open suffix file '" + path + "'");
  return read_suffixes(in);
}

// ---------------------------------------------------------------------------
// Gazetteer

struct GazetteerEntry {
  std::vector<std::string> surface_tokens;
  EntityType etype = EntityType::Organization;
};

struct CompiledEntry {
  EntityType etype = EntityType::Organization;
  std::string bare_form;  // surface of the first entry that produced the key
};

class Gazetteer {
 public:
  /// Adds one entry. Re-adding a key with the same type is a no-op; a key
  /// that is already bound to a different type is a ConflictingEntry error.
  void add(EntityType etype, std::string_view surface, std::size_t line = 0) {
    auto tokens = textnorm::tokenize(surface);
    if (tokens.empty()) throw Error(ErrorKind::Malformed, "empty surface form", line);
    GazetteerEntry entry{{}, etype};
    std::string key;
    for (const auto& t : tokens) {
      if (!key.empty()) key.push_back(' ');
      key += textnorm::canon(t.surface);
      entry.surface_tokens.push_back(t.surface);
    }
    std::string bare;
    for (const auto& s : entry.surface_tokens) bare += (bare.empty() ? "" : " ") + s;

    auto [it, inserted] = index_.try_emplace(key, CompiledEntry{etype, bare});
    if (!inserted) {
      if (it->second.etype != etype)
        throw Error(ErrorKind::ConflictingEntry,
                    "'" + std::string(surface) + "' folds to key '" + key + "' already bound to " +
                        std::string(to_string(it->second.etype)),
                    line);
      return;
    }
    max_tokens_ = std::max(max_tokens_, entry.surface_tokens.size());
    entries_.push_back(std::move(entry));
  }

  const CompiledEntry* lookup(const std::string& key) const {
    auto it = index_.find(key);
    return it == index_.end() ? nullptr : &it->second;
  }

  std::span<const GazetteerEntry> entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t max_tokens() const { return max_tokens_; }

 private:
  std::vector<GazetteerEntry> entries_;
  std::unordered_map<std::string, CompiledEntry> index_;
  std::size_t max_tokens_ = 0;
};

/// `TYPE<TAB>surface form` per line, TYPE in {PER, LOC, ORG}; blank lines and
/// `#` comments are skipped.
inline Gazetteer read_gazetteer(std::istream& in) {
  Gazetteer gaz;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw Error(ErrorKind::Malformed, "expected TYPE<TAB>surface", lineno);
    auto etype = parse_entity_type(std::string_view(line).substr(0, tab));
    if (!etype)
      throw Error(ErrorKind::Malformed, "unknown entity type '" + line.substr(0, tab) + "'",
                  lineno);
    gaz.add(*etype, std::string_view(line).substr(tab + 1), lineno);
  }
  return gaz;
}

inline Gazetteer load_gazetteer(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open gazetteer file '" + path + "'");
  return read_gazetteer(in);
}

inline void write_gazetteer(const Gazetteer& gaz, std::ostream& out) {
  for (const GazetteerEntry& e : gaz.entries()) {
    out << to_string(e.etype) << '\t';
    for (std::size_t i = 0; i < e.surface_tokens.size(); ++i)
      out << (i ? " " : "") << e.surface_tokens[i];
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Extraction

struct EntityMention {
  std::string tweet_id;
  std::size_t start_token = 0;
  std::size_t end_token = 0;  // exclusive
  EntityType etype = EntityType::Organization;
  std::string bare_form;

  bool operator==(const EntityMention&) const = default;
};

inline EntityMention to_mention(const EntityAnnotation& a) {
  return {a.tweet_id, a.start_token, a.end_token, a.etype, a.bare_form};
}

inline std::vector<EntityMention> extract(std::string_view tweet_id,
                                          std::span<const textnorm::Token> tokens,
                                          const Gazetteer& gaz,
                                          const SuffixStripper& stripper) {
  std::vector<EntityMention> out;
  if (gaz.empty() || tokens.empty()) return out;

  std::vector<std::string> keys;
  keys.reserve(tokens.size());
  for (const auto& t : tokens) keys.push_back(textnorm::canon(t.surface));

  std::size_t i = 0;
  while (i < tokens.size()) {
    const std::size_t longest = std::min(gaz.max_tokens(), tokens.size() - i);
    bool matched = false;
    for (std::size_t len = longest; len >= 1 && !matched; --len) {
      std::string prefix;
      for (std::size_t k = i; k + 1 < i + len; ++k) prefix += keys[k] + ' ';
      for (const std::string& stem : stripper.stems(tokens[i + len - 1].surface)) {
        const CompiledEntry* hit = gaz.lookup(prefix + textnorm::canon(stem));
        if (!hit) continue;
        std::string bare;
        for (std::size_t k = i; k + 1 < i + len; ++k) bare += tokens[k].surface + ' ';
        bare += stem;
        out.push_back({std::string(tweet_id), i, i + len, hit->etype, std::move(bare)});
        i += len;
        matched = true;
        break;
      }
    }
    if (!matched) ++i;
  }
  return out;
}

inline std::vector<EntityMention> extract(const Tweet& tweet, const Gazetteer& gaz,
                                          const SuffixStripper& stripper) {
  const auto tokens = textnorm::tokenize(tweet.text);
  return extract(tweet.id, tokens, gaz, stripper);
}

inline std::vector<EntityMention> extract(const Tweet& tweet, const Gazetteer& gaz) {
  static const SuffixStripper kDefault;
  return extract(tweet, gaz, kDefault);
}

/// Runs extraction over every tweet, concatenated in corpus order.
inline std::vector<EntityMention> extract_corpus(const Corpus& corpus, const Gazetteer& gaz,
                                                 const SuffixStripper& stripper) {
  std::vector<EntityMention> out;
  for (const Tweet& t : corpus.tweets()) {
    auto m = extract(t, gaz, stripper);
    out.insert(out.end(), std::make_move_iterator(m.begin()), std::make_move_iterator(m.end()));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Exact-match scoring

/// Harmonic mean of two percentages; 0 when both are 0.
inline double f_measure(double p, double r) { return p + r > 0 ? 2 * p * r / (p + r) : 0.0; }

struct NerScore {
  std::size_t true_positives = 0;
  std::size_t system_count = 0;
  std::size_t gold_count = 0;
  double precision = 0;
  double recall = 0;
  double f_measure = 0;

  static NerScore from_counts(std::size_t tp, std::size_t system, std::size_t gold) {
    NerScore s{tp, system, gold};
    s.precision = system ? 100.0 * static_cast<double>(tp) / static_cast<double>(system) : 0.0;
    s.recall = gold ? 100.0 * static_cast<double>(tp) / static_cast<double>(gold) : 0.0;
    s.f_measure = ner::f_measure(s.precision, s.recall);
    return s;
  }
};

namespace detail {
using MatchKey = std::tuple<std::string, std::size_t, std::size_t, EntityType>;
}

/// Counts a system mention as correct only when a not yet consumed gold
/// annotation has the same tweet, the same token span and the same type.
inline NerScore score(std::span<const EntityMention> system,
                      std::span<const EntityAnnotation> gold) {
  std::map<detail::MatchKey, std::size_t> pending;
  for (const auto& g : gold) ++pending[{g.tweet_id, g.start_token, g.end_token, g.etype}];
  std::size_t tp = 0;
  for (const auto& m : system) {
    auto it = pending.find({m.tweet_id, m.start_token, m.end_token, m.etype});
    if (it != pending.end() && it->second > 0) {
      --it->second;
      ++tp;
    }
  }
  return NerScore::from_counts(tp, system.size(), gold.size());
}

struct SliceScore {
  std::string target;
  StanceLabel stance = StanceLabel::Favor;
  NerScore score;
};

struct NerReport {
  NerScore overall;
  std::vector<SliceScore> slices;  // targets sorted, Favor before Against
};

/// Scores `system` against the corpus answer key, overall and per
/// (target, stance) cell. Mentions of tweets outside the corpus are ignored.
inline NerReport score_corpus(const Corpus& corpus, std::span<const EntityMention> system) {
  std::map<std::pair<std::string, StanceLabel>,
           std::pair<std::vector<EntityMention>, std::vector<EntityAnnotation>>>
      cells;
  for (const Tweet& t : corpus.tweets())
    for (StanceLabel s : kStanceLabels) cells.try_emplace({t.target, s});
  std::vector<EntityMention> in_corpus;
  for (const auto& m : system) {
    const Tweet* t = corpus.find(m.tweet_id);
    if (!t) continue;
    cells[{t->target, t->stance}].first.push_back(m);
    in_corpus.push_back(m);
  }
  for (const auto& a : corpus.annotations()) {
    const Tweet* t = corpus.find(a.tweet_id);
    cells[{t->target, t->stance}].second.push_back(a);
  }
  NerReport report;
  report.overall = score(in_corpus, corpus.annotations());
  for (const auto& [key, lists] : cells)
    report.slices.push_back({key.first, key.second, score(lists.first, lists.second)});
  return report;
}

}  // namespace stanceforge::ner
