// Sparse binary feature vectors for stance classification.
//
// Keys are namespaced strings:
//   U=<canon token>            unigram (Word, Hashtag and Mention tokens)
//   B=<canon t1>_<canon t2>    bigram over the same token sequence
//   H=1                        the tweet has at least one hashtag
//   NE=<canon bare form>       one per entity mention, spaces joined by '_'
#pragma once

#include <algorithm>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <optional>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "stanceforge/corpus.hpp"
#include "stanceforge/error.hpp"
#include "stanceforge/ner.hpp"
#include "stanceforge/textnorm.hpp"

namespace stanceforge::features {

enum class EntitySource { None, SystemNer, GoldAnnotations };

struct FeatureConfig {
  bool use_unigrams = true;
  bool use_bigrams = false;
  bool use_hashtag_presence = false;
  EntitySource entity_source = EntitySource::None;

  bool valid() const {
    return use_unigrams || use_bigrams || use_hashtag_presence ||
           entity_source != EntitySource::None;
  }

  /// Canonical name, e.g. "unigram+hashtag+ne-gold".
  std::string name() const {
    std::string out;
    const auto add = [&](std::string_view part) {
      if (!out.empty()) out.push_back('+');
      out += part;
    };
    if (use_unigrams) add("unigram");
    if (use_bigrams) add("bigram");
    if (use_hashtag_presence) add("hashtag");
    if (entity_source == EntitySource::SystemNer) add("ne-system");
    if (entity_source == EntitySource::GoldAnnotations) add("ne-gold");
    return out;
  }

  bool operator==(const FeatureConfig&) const = default;
};

/// Parses a '+' or ',' separated family list such as "unigram,ne-gold".
inline FeatureConfig parse_feature_config(std::string_view spec) {
  FeatureConfig cfg{false, false, false, EntitySource::None};
  std::size_t pos = 0;
  while (pos <= spec.size()) {
    std::size_t end = spec.find_first_of(",+", pos);
    if (end == std::string_view::npos) end = spec.size();
    const std::string_view part = spec.substr(pos, end - pos);
    if (part == "unigram") cfg.use_unigrams = true;
    else if (part == "bigram") cfg.use_bigrams = true;
    else if (part == "hashtag") cfg.use_hashtag_presence = true;
    else if (part == "ne-system" || part == "ne-gold") {
      const auto src = part == "ne-gold" ? EntitySource::GoldAnnotations : EntitySource::SystemNer;
      if (cfg.entity_source != EntitySource::None && cfg.entity_source != src)
        throw Error(ErrorKind::InvalidArgument, "ne-system and ne-gold are mutually exclusive");
      cfg.entity_source = src;
    } else {
      throw Error(ErrorKind::InvalidArgument, "unknown feature family '" + std::string(part) + "'");
    }
    pos = end + 1;
  }
  if (!cfg.valid()) throw Error(ErrorKind::InvalidArgument, "no feature family enabled");
  return cfg;
}

/// Distinct feature keys of one tweet, in order of first generation.
inline std::vector<std::string> feature_keys(const Tweet& tweet,
                                             std::span<const ner::EntityMention> mentions,
                                             const FeatureConfig& cfg) {
  std::vector<std::string> keys;
  std::unordered_set<std::string> seen;
  const auto emit = [&](std::string key) {
    if (seen.insert(key).second) keys.push_back(std::move(key));
  };

  const auto tokens = textnorm::tokenize(tweet.text);
  std::vector<std::string> terms;
  bool has_hashtag = false;
  for (const auto& t : tokens) {
    using textnorm::TokenKind;
    if (t.kind == TokenKind::Hashtag) has_hashtag = true;
    if (t.kind == TokenKind::Word || t.kind == TokenKind::Hashtag || t.kind == TokenKind::Mention)
      terms.push_back(textnorm::canon(t.surface));
  }

  if (cfg.use_unigrams)
    for (const auto& t : terms) emit("U=" + t);
  if (cfg.use_bigrams)
    for (std::size_t i = 0; i + 1 < terms.size(); ++i) emit("B=" + terms[i] + "_" + terms[i + 1]);
  if (cfg.use_hashtag_presence && has_hashtag) emit("H=1");
  if (cfg.entity_source != EntitySource::None) {
    for (const auto& m : mentions) {
      std::string bare = textnorm::canon(m.bare_form);
      std::replace(bare.begin(), bare.end(), ' ', '_');
      emit("NE=" + bare);
    }
  }
  return keys;
}

/// Maps feature keys to dense column indices in order of first insertion.
class Vocabulary {
 public:
  /// Index of `key`, inserting it when the vocabulary is still open.
  std::uint32_t add(const std::string& key) {
    if (frozen_) throw Error(ErrorKind::InvalidArgument, "vocabulary is frozen");
    auto [it, inserted] = index_.try_emplace(key, static_cast<std::uint32_t>(keys_.size()));
    if (inserted) keys_.push_back(key);
    return it->second;
  }

  std::optional<std::uint32_t> find(const std::string& key) const {
    auto it = index_.find(key);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }
  std::size_t size() const { return keys_.size(); }
  const std::string& key(std::uint32_t index) const { return keys_.at(index); }

 private:
  std::unordered_map<std::string, std::uint32_t> index_;
  std::vector<std::string> keys_;
  bool frozen_ = false;
};

/// Sparse feature vector. `values` empty means every listed index has
/// value 1, which is what the feature extractor always produces; the SVM
/// also accepts real values for testing against dense problems.
struct FeatureVector {
  std::vector<std::uint32_t> indices;  // strictly increasing
  std::vector<double> values;          // empty, or parallel to indices
  int label = +1;                      // +1 Favor, -1 Against
  std::size_t dimension = 0;

  double value(std::size_t k) const { return values.empty() ? 1.0 : values[k]; }
  bool operator==(const FeatureVector&) const = default;
};

inline int label_of(StanceLabel s) { return s == StanceLabel::Favor ? +1 : -1; }
inline StanceLabel stance_of(int label) {
  return label > 0 ? StanceLabel::Favor : StanceLabel::Against;
}

/// A tweet together with the entity mentions that feed its NE features.
struct Example {
  const Tweet* tweet = nullptr;
  std::span<const ner::EntityMention> mentions;
};

/// Union of the training keys in first-occurrence order, frozen on return.
inline Vocabulary build_vocabulary(std::span<const Example> training, const FeatureConfig& cfg) {
  Vocabulary vocab;
  for (const Example& ex : training)
    for (const auto& key : feature_keys(*ex.tweet, ex.mentions, cfg)) vocab.add(key);
  vocab.freeze();
  return vocab;
}

/// Keys absent from the vocabulary are dropped.
inline FeatureVector vectorize(const Tweet& tweet, std::span<const ner::EntityMention> mentions,
                               const FeatureConfig& cfg, const Vocabulary& vocab) {
  if (!vocab.frozen()) throw Error(ErrorKind::InvalidArgument, "vocabulary must be frozen");
  FeatureVector v;
  v.label = label_of(tweet.stance);
  v.dimension = vocab.size();
  for (const auto& key : feature_keys(tweet, mentions, cfg))
    if (auto idx = vocab.find(key)) v.indices.push_back(*idx);
  std::sort(v.indices.begin(), v.indices.end());
  return v;
}

/// Debug format: `+1 0 4 7` (label then indices), one vector per line.
inline void write_sparse(std::span<const FeatureVector> vectors, std::ostream& out) {
  for (const auto& v : vectors) {
    out << (v.label > 0 ? "+1" : "-1");
    for (std::size_t k = 0; k < v.indices.size(); ++k) {
      out << ' ' << v.indices[k];
      if (!v.values.empty()) out << ':' << v.values[k];
    }
    out << '\n';
  }
}

}  // namespace stanceforge::features
