// Stratified k-fold cross-validation of the stance classifier.
#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <iomanip>
#include <ostream>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "stanceforge/corpus.hpp"
#include "stanceforge/error.hpp"
#include "stanceforge/features.hpp"
#include "stanceforge/ner.hpp"
#include "stanceforge/numeric.hpp"
#include "stanceforge/random.hpp"
#include "stanceforge/svm.hpp"

namespace stanceforge::eval {

using features::FeatureConfig;

struct FoldPlan {
  std::size_t k = 10;
  std::vector<std::size_t> assignments;  // fold of each tweet, in corpus order
  std::uint64_t seed = 1;

  std::size_t fold_of(std::size_t tweet_index) const { return assignments.at(tweet_index); }
  bool operator==(const FoldPlan&) const = default;
};

/// Shuffles each class separately and deals it round-robin over the folds.
/// The second class starts where the first one stopped, so fold sizes also
/// differ by at most one overall. Classes are taken in order of first
/// appearance, which keeps the plan unchanged when the labels are swapped.
inline FoldPlan make_folds(const Corpus& c, std::size_t k = 10, std::uint64_t seed = 1) {
  if (k < 2) throw Error(ErrorKind::InvalidArgument, "cross-validation needs at least 2 folds");
  std::vector<StanceLabel> order;
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const StanceLabel s = c.tweets()[i].stance;
    auto it = std::find(order.begin(), order.end(), s);
    if (it == order.end()) {
      order.push_back(s);
      groups.emplace_back();
      it = order.end() - 1;
    }
    groups[static_cast<std::size_t>(it - order.begin())].push_back(i);
  }
  for (StanceLabel s : kStanceLabels) {
    auto it = std::find(order.begin(), order.end(), s);
    const std::size_t n = it == order.end() ? 0 : groups[static_cast<std::size_t>(it - order.begin())].size();
    if (n < k)
      throw Error(ErrorKind::InvalidArgument, "class '" + std::string(to_string(s)) + "' has " +
                                                  std::to_string(n) + " tweets, fewer than " +
                                                  std::to_string(k) + " folds");
  }

  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.assignments.assign(c.size(), 0);
  std::mt19937_64 rng(seed);
  std::size_t offset = 0;
  for (auto& group : groups) {
    shuffle(group.begin(), group.end(), rng);
    for (std::size_t j = 0; j < group.size(); ++j) plan.assignments[group[j]] = (offset + j) % k;
    offset = (offset + group.size()) % k;
  }
  return plan;
}

/// Pooled counts indexed [gold][predicted], Favor = 0.
struct Confusion {
  std::size_t counts[2][2] = {{0, 0}, {0, 0}};

  void add(StanceLabel gold, StanceLabel predicted) {
    ++counts[gold == StanceLabel::Favor ? 0 : 1][predicted == StanceLabel::Favor ? 0 : 1];
  }
  std::size_t total() const { return counts[0][0] + counts[0][1] + counts[1][0] + counts[1][1]; }
  Confusion& operator+=(const Confusion& o) {
    for (int g = 0; g < 2; ++g)
      for (int p = 0; p < 2; ++p) counts[g][p] += o.counts[g][p];
    return *this;
  }
  bool operator==(const Confusion& o) const {
    return std::equal(&counts[0][0], &counts[0][0] + 4, &o.counts[0][0]);
  }
};

struct ScoreRow {
  double precision = 0;  // percent
  double recall = 0;
  double f = 0;
  bool operator==(const ScoreRow&) const = default;
};

struct ClassScores {
  ScoreRow favor, against, average;

  const ScoreRow& row(StanceLabel s) const { return s == StanceLabel::Favor ? favor : against; }
  bool operator==(const ClassScores&) const = default;
};

inline ScoreRow class_row(const Confusion& m, int cls) {
  const int other = 1 - cls;
  const double tp = static_cast<double>(m.counts[cls][cls]);
  const double fp = static_cast<double>(m.counts[other][cls]);
  const double fn = static_cast<double>(m.counts[cls][other]);
  ScoreRow r;
  r.precision = tp + fp > 0 ? 100.0 * tp / (tp + fp) : 0.0;
  r.recall = tp + fn > 0 ? 100.0 * tp / (tp + fn) : 0.0;
  r.f = ner::f_measure(r.precision, r.recall);
  return r;
}

/// Plain mean of two unrounded class rows.
inline ScoreRow average_row(const ScoreRow& a, const ScoreRow& b) {
  return {(a.precision + b.precision) / 2, (a.recall + b.recall) / 2, (a.f + b.f) / 2};
}

inline ClassScores scores_from(const Confusion& m) {
  ClassScores s;
  s.favor = class_row(m, 0);
  s.against = class_row(m, 1);
  s.average = average_row(s.favor, s.against);
  return s;
}

struct FoldSummary {
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  std::size_t vocabulary_size = 0;
  std::size_t support_vectors = 0;
  std::size_t full_passes = 0;
  Confusion confusion;
};

struct CvResult {
  ClassScores scores;
  Confusion confusion;
  std::vector<FoldSummary> folds;
};

struct CvOptions {
  const ner::Gazetteer* gazetteer = nullptr;       // required for SystemNer
  const ner::SuffixStripper* stripper = nullptr;   // default suffixes when null
  unsigned threads = 0;                            // 0: hardware concurrency
};

namespace detail {

// Entity mentions per tweet, in corpus order.
inline std::vector<std::vector<ner::EntityMention>> mentions_for(const Corpus& c,
                                                                 const FeatureConfig& cfg,
                                                                 const CvOptions& opt) {
  std::vector<std::vector<ner::EntityMention>> out(c.size());
  if (cfg.entity_source == features::EntitySource::SystemNer) {
    if (!opt.gazetteer)
      throw Error(ErrorKind::InvalidArgument, "ne-system features need a gazetteer");
    static const ner::SuffixStripper kDefault;
    const auto& stripper = opt.stripper ? *opt.stripper : kDefault;
    for (std::size_t i = 0; i < c.size(); ++i)
      out[i] = ner::extract(c.tweets()[i], *opt.gazetteer, stripper);
  } else if (cfg.entity_source == features::EntitySource::GoldAnnotations) {
    if (c.annotations().empty())
      throw Error(ErrorKind::InvalidArgument, "ne-gold features need an annotated corpus");
    for (std::size_t i = 0; i < c.size(); ++i)
      for (const auto& a : c.annotations_for(i)) out[i].push_back(ner::to_mention(a));
  }
  return out;
}

inline FoldSummary run_fold(const Corpus& c, const FeatureConfig& cfg,
                            const svm::SvmParams& params, const FoldPlan& plan,
                            const std::vector<std::vector<ner::EntityMention>>& mentions,
                            std::size_t fold) {
  std::vector<features::Example> train;
  for (std::size_t i = 0; i < c.size(); ++i)
    if (plan.fold_of(i) != fold) train.push_back({&c.tweets()[i], mentions[i]});
  const auto vocab = features::build_vocabulary(train, cfg);

  std::vector<features::FeatureVector> vectors;
  vectors.reserve(train.size());
  for (const auto& ex : train)
    vectors.push_back(features::vectorize(*ex.tweet, ex.mentions, cfg, vocab));
  const auto model = svm::train(vectors, params);
  if (!model.converged)
    throw Error(ErrorKind::NotConverged,
                "SVM did not converge within " + std::to_string(params.max_passes) + " passes");

  FoldSummary s;
  s.train_size = train.size();
  s.vocabulary_size = vocab.size();
  s.support_vectors = model.support_count;
  s.full_passes = model.full_passes;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (plan.fold_of(i) != fold) continue;
    const Tweet& t = c.tweets()[i];
    s.confusion.add(t.stance, svm::predict(model, features::vectorize(t, mentions[i], cfg, vocab)));
    ++s.test_size;
  }
  return s;
}

}  // namespace detail

/// Trains one model per fold on the other k-1 folds and pools the held-out
/// predictions. Errors from a fold are rethrown with the fold number.
inline CvResult cross_validate(const Corpus& c, const FeatureConfig& cfg,
                               const svm::SvmParams& params, const FoldPlan& plan,
                               const CvOptions& opt = {}) {
  if (!cfg.valid()) throw Error(ErrorKind::InvalidArgument, "no feature family enabled");
  if (plan.assignments.size() != c.size())
    throw Error(ErrorKind::InvalidArgument, "fold plan does not match the corpus");
  params.validate();
  const auto mentions = detail::mentions_for(c, cfg, opt);

  std::vector<FoldSummary> folds(plan.k);
  std::vector<std::exception_ptr> failures(plan.k);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t f; (f = next++) < plan.k;) {
      try {
        folds[f] = detail::run_fold(c, cfg, params, plan, mentions, f);
      } catch (...) {
        failures[f] = std::current_exception();
      }
    }
  };
  unsigned threads = opt.threads ? opt.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, plan.k));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (std::size_t f = 0; f < plan.k; ++f) {
    if (!failures[f]) continue;
    try {
      std::rethrow_exception(failures[f]);
    } catch (const Error& e) {
      throw Error(e.kind(), "fold " + std::to_string(f + 1) + ": " + e.what());
    }
  }

  CvResult r;
  for (const auto& f : folds) r.confusion += f.confusion;
  r.scores = scores_from(r.confusion);
  r.folds = std::move(folds);
  return r;
}

struct ComparisonRow {
  FeatureConfig config;
  CvResult result;
};

struct ComparisonTable {
  std::string target;  // empty when the whole corpus was used
  std::size_t tweets = 0;
  std::size_t folds = 0;
  std::vector<ComparisonRow> rows;
};

/// Cross-validates every configuration under the same fold plan.
inline ComparisonTable compare_configs(const Corpus& c, std::span<const FeatureConfig> configs,
                                       const svm::SvmParams& params, const FoldPlan& plan,
                                       const CvOptions& opt = {}, std::string target = {}) {
  if (configs.empty()) throw Error(ErrorKind::InvalidArgument, "no feature configuration given");
  ComparisonTable table{std::move(target), c.size(), plan.k, {}};
  for (const auto& cfg : configs) table.rows.push_back({cfg, cross_validate(c, cfg, params, plan, opt)});
  return table;
}

// ---------------------------------------------------------------------------
// Reports

inline void render_table(const ComparisonTable& t, std::ostream& out) {
  std::size_t width = 6;
  for (const auto& row : t.rows) width = std::max(width, row.config.name().size());
  out << "Target: " << (t.target.empty() ? "(all)" : t.target) << "  tweets: " << t.tweets
      << "  folds: " << t.folds << '\n';
  out << std::left << std::setw(static_cast<int>(width)) << "config"
      << "  class    " << std::right << std::setw(7) << "P (%)" << std::setw(7) << "R (%)"
      << std::setw(7) << "F (%)" << '\n';
  for (const auto& row : t.rows) {
    const auto& s = row.result.scores;
    const std::pair<const char*, const ScoreRow*> lines[] = {
        {"Favor", &s.favor}, {"Against", &s.against}, {"Average", &s.average}};
    bool first = true;
    for (const auto& [name, r] : lines) {
      out << std::left << std::setw(static_cast<int>(width)) << (first ? row.config.name() : "")
          << "  " << std::setw(9) << name << std::right << std::setw(7)
          << format_fixed(r->precision, 1) << std::setw(7) << format_fixed(r->recall, 1)
          << std::setw(7) << format_fixed(r->f, 1) << '\n';
      first = false;
    }
  }
}

inline void write_csv_header(std::ostream& out) { out << "config,target,class,precision,recall,f\n"; }

/// Values are percentages with two decimals, rounded half up.
inline void write_csv(const ComparisonTable& t, std::ostream& out) {
  for (const auto& row : t.rows) {
    const auto& s = row.result.scores;
    const std::pair<const char*, const ScoreRow*> lines[] = {
        {"favor", &s.favor}, {"against", &s.against}, {"average", &s.average}};
    for (const auto& [name, r] : lines)
      out << row.config.name() << ',' << t.target << ',' << name << ','
          << format_fixed(r->precision, 2) << ',' << format_fixed(r->recall, 2) << ','
          << format_fixed(r->f, 2) << '\n';
  }
}

}  // namespace stanceforge::eval
