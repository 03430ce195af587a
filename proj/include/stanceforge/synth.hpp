// Synthetic stance corpora with gold entity annotations and a matching
// gazetteer.
//
// Two targets, each a sports club that every tweet mentions. Two modes:
//   Lexicon  stance words come from disjoint Favor and Against lexicons, so
//            unigrams separate the classes.
//   Entity   every tweet names one person; the stance is the parity of the
//            person's first and last name indices. Each first and each last
//            name occurs equally often in both classes, so no single token
//            carries the label, while the full name does.
// Shared noise words, an optional city, hashtags and a trailing "!" are drawn
// independently of the stance in both modes.
#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "stanceforge/corpus.hpp"
#include "stanceforge/error.hpp"
#include "stanceforge/ner.hpp"
#include "stanceforge/random.hpp"
#include "stanceforge/textnorm.hpp"

namespace stanceforge::synth {

enum class Mode { Lexicon, Entity };

inline std::string_view to_string(Mode m) { return m == Mode::Lexicon ? "lexicon" : "entity"; }

struct SynthConfig {
  Mode mode = Mode::Lexicon;
  std::uint64_t seed = 1;
  // Tweets per cell: Target-1 Favor, Target-1 Against, Target-2 Favor, Target-2 Against.
  std::array<std::size_t, 4> sizes{40, 40, 40, 40};
  double inflected_fraction = 0.3;   // mentions whose last token carries a suffix
  double lowercase_fraction = 0.2;   // mentions written in lowercase
  double stripped_fraction = 0.2;    // mentions written without Turkish diacritics
  double hashtag_fraction = 0.3;     // tweets with a hashtag
  double city_fraction = 0.3;        // tweets naming a city
  double person_fraction = 0.5;      // lexicon mode: tweets naming a person

  void validate() const {
    for (double f : {inflected_fraction, lowercase_fraction, stripped_fraction, hashtag_fraction,
                     city_fraction, person_fraction})
      if (!(f >= 0 && f <= 1))
        throw Error(ErrorKind::InvalidArgument, "fractions must lie in [0, 1]");
  }
};

struct SynthCorpus {
  Corpus corpus;
  ner::Gazetteer gazetteer;
  StatsTable declared;  // counted while generating, independently of corpus_stats
};

namespace detail {

inline const std::array<const char*, 2> kTargets = {"Target-1", "Target-2"};
inline const std::array<const char*, 2> kClubs = {"Galatasaray", "Fenerbahçe"};
inline const std::array<const char*, 5> kCities = {"İstanbul", "Ankara", "İzmir", "Trabzon",
                                                   "Eskişehir"};
// Each target draws its persons from its own 4x4 block of names.
inline const std::array<const char*, 8> kFirstNames = {"Ahmet", "Mehmet", "Mustafa", "Emre",
                                                       "Burak", "Selçuk", "Volkan", "Arda"};
inline const std::array<const char*, 8> kLastNames = {"Yılmaz", "Kaya",   "Demir", "Şahin",
                                                      "Çelik",  "Öztürk", "Güler", "Arslan"};
inline constexpr std::size_t kGrid = 4;
inline const std::array<const char*, 16> kNoise = {
    "bugün", "maç",   "saha",  "oyun",   "takım",  "sezon", "hakem", "gol",
    "akşam", "lig",   "puan",  "kadro",  "hoca",   "forma", "tribün", "deplasman"};
inline const std::array<const char*, 8> kFavorWords = {"harika", "muhteşem", "şampiyon", "gurur",
                                                       "efsane", "sevgi",    "destek",   "zafer"};
inline const std::array<const char*, 8> kAgainstWords = {"rezalet", "berbat", "utanç", "kötü",
                                                         "felaket", "skandal", "istifa", "yazık"};
inline const std::array<const char*, 4> kHashtags = {"#mac", "#futbol", "#derbi", "#superlig"};
inline const std::array<const char*, 8> kSuffixes = {"'nin", "'ın",  "'a",  "'e",
                                                     "'da",  "'den", "'yı", "'yla"};

template <std::size_t N>
const char* pick(std::mt19937_64& rng, const std::array<const char*, N>& xs) {
  return xs[uniform_index(rng, N)];
}

inline bool chance(std::mt19937_64& rng, double p) { return uniform_unit(rng) < p; }

// A run of whitespace-separated tokens; `etype` set when it is an entity.
struct Slot {
  std::vector<std::string> tokens;
  std::optional<EntityType> etype;
  std::string bare;
};

struct Builder {
  const SynthConfig& cfg;
  std::mt19937_64& rng;

  Slot entity(EntityType etype, std::string surface) {
    if (chance(rng, cfg.lowercase_fraction)) surface = textnorm::fold_case(surface);
    if (chance(rng, cfg.stripped_fraction)) surface = textnorm::fold_diacritics(surface);
    Slot s;
    s.etype = etype;
    s.bare = surface;
    std::size_t start = 0;
    for (std::size_t sp; (sp = surface.find(' ', start)) != std::string::npos; start = sp + 1)
      s.tokens.push_back(surface.substr(start, sp - start));
    s.tokens.push_back(surface.substr(start));
    if (chance(rng, cfg.inflected_fraction)) s.tokens.back() += pick(rng, kSuffixes);
    return s;
  }

  static Slot word(std::string w) { return Slot{{std::move(w)}, std::nullopt, {}}; }
};

}  // namespace detail

/// Generates a corpus, its gold annotations and a gazetteer listing every
/// entity the generator can emit.
inline SynthCorpus generate(const SynthConfig& cfg) {
  using namespace detail;
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  Builder b{cfg, rng};

  SynthCorpus out;
  for (const char* club : kClubs) out.gazetteer.add(EntityType::Organization, club);
  for (const char* city : kCities) out.gazetteer.add(EntityType::Location, city);
  for (std::size_t target = 0; target < kTargets.size(); ++target)
    for (std::size_t i = 0; i < kGrid; ++i)
      for (std::size_t j = 0; j < kGrid; ++j)
        out.gazetteer.add(EntityType::Person, std::string(kFirstNames[target * kGrid + i]) + " " +
                                                  kLastNames[target * kGrid + j]);

  std::map<std::pair<std::string, StanceLabel>, StatsCell> declared;
  std::vector<Tweet> tweets;
  std::vector<EntityAnnotation> annotations;
  for (std::size_t cell = 0; cell < 4; ++cell) {
    const std::size_t target = cell / 2;
    const StanceLabel stance = cell % 2 ? StanceLabel::Against : StanceLabel::Favor;
    for (StanceLabel s : kStanceLabels) declared.try_emplace({kTargets[target], s});
    StatsCell& counts = declared[{kTargets[target], stance}];

    for (std::size_t n = 0; n < cfg.sizes[cell]; ++n) {
      std::vector<Slot> slots;
      slots.push_back(b.entity(EntityType::Organization, kClubs[target]));
      const std::size_t noise = 1 + uniform_index(rng, 3);
      for (std::size_t k = 0; k < noise; ++k) slots.push_back(Builder::word(pick(rng, kNoise)));

      const auto person = [&](std::size_t i, std::size_t j) {
        return std::string(kFirstNames[target * kGrid + i]) + " " +
               kLastNames[target * kGrid + j];
      };
      if (cfg.mode == Mode::Lexicon) {
        const auto& lexicon = stance == StanceLabel::Favor ? kFavorWords : kAgainstWords;
        for (int k = 0; k < 2; ++k) slots.push_back(Builder::word(pick(rng, lexicon)));
        if (chance(rng, cfg.person_fraction))
          slots.push_back(b.entity(EntityType::Person, person(uniform_index(rng, kGrid),
                                                              uniform_index(rng, kGrid))));
      } else {
        // Favor iff (i + j) is even: pick i freely, then j of the right parity.
        const std::size_t i = uniform_index(rng, kGrid);
        const std::size_t parity = (i + (stance == StanceLabel::Favor ? 0 : 1)) % 2;
        const std::size_t j = 2 * uniform_index(rng, kGrid / 2) + parity;
        slots.push_back(b.entity(EntityType::Person, person(i, j)));
      }
      if (chance(rng, cfg.city_fraction))
        slots.push_back(b.entity(EntityType::Location, pick(rng, kCities)));
      if (chance(rng, cfg.hashtag_fraction)) slots.push_back(Builder::word(pick(rng, kHashtags)));
      shuffle(slots.begin(), slots.end(), rng);
      if (chance(rng, 0.3)) slots.push_back(Builder::word("!"));

      Tweet t;
      t.id = "syn-" + std::to_string(tweets.size() + 1);
      t.target = kTargets[target];
      t.stance = stance;
      std::size_t pos = 0;
      for (const Slot& s : slots) {
        for (const auto& tok : s.tokens) t.text += (t.text.empty() ? "" : " ") + tok;
        if (s.etype) {
          annotations.push_back({t.id, pos, pos + s.tokens.size(), *s.etype, s.bare});
          ++counts.entities[index_of(*s.etype)];
        }
        pos += s.tokens.size();
      }
      ++counts.tweets;
      tweets.push_back(std::move(t));
    }
  }
  for (auto& [key, cell] : declared) {
    out.declared.rows.push_back({key.first, key.second, cell});
    out.declared.total += cell;
  }
  out.corpus = Corpus::build(std::move(tweets), std::move(annotations));
  return out;
}

/// Copy of `gaz` keeping each entry of type `etype` with probability `keep`;
/// entries of other types are kept.
inline ner::Gazetteer deplete(const ner::Gazetteer& gaz, EntityType etype, double keep,
                              std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ner::Gazetteer out;
  for (const auto& e : gaz.entries()) {
    if (e.etype == etype && !(uniform_unit(rng) < keep)) continue;
    std::string surface;
    for (const auto& t : e.surface_tokens) surface += (surface.empty() ? "" : " ") + t;
    out.add(e.etype, surface);
  }
  return out;
}

}  // namespace stanceforge::synth
