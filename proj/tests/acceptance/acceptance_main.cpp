// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits nonzero if any criterion fails.
//
// Criterion 10 needs the original annotated data set. Point
// STANCEFORGE_PAPER_CORPUS (and STANCEFORGE_PAPER_GAZETTEER for the system NER
// configurations) at it to run the reproduction; otherwise only the table
// layout is checked against the published counts.
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include "commands.hpp"
#include "stanceforge/synth.hpp"
#include "support/ner_oracle.hpp"
#include "support/qp_oracle.hpp"
#include "support/svm_data.hpp"
#include "support/temp_dir.hpp"

using namespace stanceforge;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int decimals = 2) { return format_fixed(v, decimals); }

int run_cli(std::vector<std::string> args, std::string* out = nullptr) {
  args.insert(args.begin(), "stance-forge");
  std::ostringstream o, e;
  const int code = cli::run(args, o, e);
  if (out) *out = o.str();
  if (code != 0) std::cerr << e.str();
  return code;
}

// 1. SMO against an independent dual QP solver.
Outcome smo_vs_oracle() {
  std::mt19937_64 rng(20240601);
  constexpr int kDatasets = 60;
  double worst_rel = 0;
  int mismatches = 0, failures = 0;
  for (int trial = 0; trial < kDatasets; ++trial) {
    auto p = testsupport::random_problem(rng, 8, 3);
    svm::SvmParams params;
    params.c = p.c;
    const auto m = svm::train(p.vectors, params);
    if (!m.converged) ++failures;
    const auto ref = testsupport::DualQpOracle(p.x, p.y, p.c).solve();
    const double dual = svm::dual_objective(p.vectors, m.alphas);
    worst_rel = std::max(worst_rel, std::fabs(dual - ref.dual) / std::max(1.0, std::fabs(ref.dual)));
    svm::SvmModel oracle;
    oracle.weights.assign(ref.w.data(), ref.w.data() + ref.w.size());
    oracle.bias = ref.b;
    for (const auto& x : p.vectors) mismatches += svm::predict(m, x) != svm::predict(oracle, x);
  }
  std::ostringstream d;
  d << kDatasets << " datasets, worst relative dual error " << worst_rel << ", "
    << mismatches << " prediction mismatches";
  return {failures == 0 && worst_rel <= 1e-6 && mismatches == 0, d.str()};
}

// 2. KKT certificate and duality gap.
Outcome kkt_certificate() {
  std::mt19937_64 rng(4242);
  int bad = 0;
  double worst_gap = 0;
  for (int run = 0; run < 100; ++run) {
    auto p = testsupport::random_problem(rng, 30, 5);
    svm::SvmParams params;
    params.c = p.c;
    params.seed = static_cast<std::uint64_t>(run);
    const auto m = svm::train(p.vectors, params);
    const auto r = svm::verify_kkt(m, p.vectors, params.c, 1e-3);
    const double bound = 1e-3 * (1 + std::fabs(r.dual));
    worst_gap = std::max(worst_gap, r.duality_gap / bound);
    bad += !(m.converged && r.ok && r.duality_gap <= bound);
  }
  return {bad == 0, "100 runs, " + std::to_string(bad) + " failing, worst gap/bound " +
                        fmt(worst_gap, 4)};
}

// 3. F column of the published NER table from its P and R columns.
Outcome ner_f_fidelity() {
  struct Row {
    double p, r, f;
  };
  const Row rows[] = {{73.79, 64.41, 68.78}, {77.14, 36.61, 49.66},
                      {78.80, 51.97, 62.63}, {71.01, 40.38, 51.49}};
  double worst = 0;
  for (const auto& row : rows) worst = std::max(worst, std::fabs(ner::f_measure(row.p, row.r) - row.f));
  return {worst <= 0.01, "worst deviation " + fmt(worst, 4)};
}

// 4. Published average rows from their per-class rows.
Outcome average_fidelity() {
  struct Block {
    eval::ScoreRow favor, against, average;
  };
  const Block blocks[] = {
      {{75.2, 92.0, 82.8}, {89.7, 69.7, 78.5}, {82.5, 80.9, 80.6}},
      {{75.0, 90.9, 82.2}, {88.4, 69.7, 78.0}, {81.7, 80.3, 80.1}},
      {{68.5, 83.4, 75.3}, {78.8, 61.7, 69.2}, {73.7, 72.6, 72.2}},
      {{70.0, 85.1, 76.8}, {81.0, 63.4, 71.2}, {75.5, 74.3, 74.0}},
      {{75.1, 89.7, 81.8}, {87.2, 70.3, 77.8}, {81.2, 80.0, 79.8}},
      {{75.6, 90.3, 82.3}, {87.9, 70.9, 78.5}, {81.8, 80.6, 80.4}},
      {{72.2, 87.4, 79.1}, {84.1, 66.3, 74.1}, {78.1, 76.9, 76.6}},
      {{71.8, 84.6, 77.7}, {81.3, 66.9, 73.4}, {76.5, 75.7, 75.5}},
      {{74.9, 92.0, 82.6}, {89.6, 69.1, 78.1}, {82.3, 80.6, 80.3}},
      {{76.3, 92.0, 83.4}, {89.9, 71.4, 79.6}, {83.1, 81.7, 81.5}},
      {{74.4, 91.4, 82.1}, {88.9, 68.6, 77.4}, {81.7, 80.0, 79.7}},
      {{74.3, 90.9, 81.7}, {88.2, 68.6, 77.2}, {81.3, 79.7, 79.5}},
  };
  double worst = 0;
  for (const auto& b : blocks) {
    const auto avg = eval::average_row(b.favor, b.against);
    worst = std::max({worst, std::fabs(avg.precision - b.average.precision),
                      std::fabs(avg.recall - b.average.recall), std::fabs(avg.f - b.average.f)});
  }
  return {worst <= 0.1 + 1e-9, "12 average rows, worst deviation " + fmt(worst, 3)};
}

synth::SynthConfig random_config(std::mt19937_64& rng, std::size_t max_cell) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  synth::SynthConfig cfg;
  cfg.seed = rng();
  cfg.mode = rng() % 2 ? synth::Mode::Entity : synth::Mode::Lexicon;
  for (auto& s : cfg.sizes) s = 1 + rng() % max_cell;
  cfg.inflected_fraction = unit(rng);
  cfg.lowercase_fraction = unit(rng);
  cfg.stripped_fraction = unit(rng);
  return cfg;
}

// 5. Exact-match scorer against a brute-force tuple matcher.
Outcome scoring_oracle() {
  std::mt19937_64 rng(515);
  int disagreements = 0;
  std::size_t partial = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto s = synth::generate(random_config(rng, 6));
    // A depleted gazetteer yields misses and, through shorter names and bare
    // surnames, partial spans.
    ner::Gazetteer gaz = synth::deplete(s.gazetteer, EntityType::Person, 0.5, rng());
    gaz = synth::deplete(gaz, EntityType::Location, 0.7, rng());
    gaz.add(EntityType::Person, synth::detail::kFirstNames[rng() % 8]);
    const auto system = ner::extract_corpus(s.corpus, gaz, ner::SuffixStripper{});
    const auto& gold = s.corpus.annotations();
    const auto fast = ner::score(system, gold);
    const auto slow = testsupport::brute_force_score(system, gold);
    disagreements += fast.true_positives != slow.true_positives ||
                     fast.precision != slow.precision || fast.recall != slow.recall ||
                     fast.f_measure != slow.f_measure;
    for (const auto& m : system)
      for (const auto& g : gold)
        if (m.tweet_id == g.tweet_id && m.start_token < g.end_token &&
            g.start_token < m.end_token &&
            (m.start_token != g.start_token || m.end_token != g.end_token))
          ++partial;
  }
  for (int trial = 0; trial < 100; ++trial) {
    auto [system, gold] = testsupport::random_scoring_case(rng);
    const auto fast = ner::score(system, gold);
    const auto slow = testsupport::brute_force_score(system, gold);
    disagreements += fast.true_positives != slow.true_positives ||
                     fast.f_measure != slow.f_measure;
  }
  return {disagreements == 0 && partial > 0,
          "200 cases, " + std::to_string(disagreements) + " disagreements, " +
              std::to_string(partial) + " partial overlaps scored"};
}

// 6. Extraction invariant under uppercasing and diacritic removal.
Outcome case_diacritics() {
  std::mt19937_64 rng(606);
  std::size_t deviations = 0, tweets = 0, mentions = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const auto s = synth::generate(random_config(rng, 20));
    for (const Tweet& t : s.corpus.tweets()) {
      const auto base = ner::extract(t, s.gazetteer);
      mentions += base.size();
      ++tweets;
      for (auto variant : {textnorm::to_upper(t.text), textnorm::fold_diacritics(t.text),
                           textnorm::to_upper(textnorm::fold_diacritics(t.text))}) {
        Tweet v = t;
        v.text = std::move(variant);
        const auto other = ner::extract(v, s.gazetteer);
        bool same = other.size() == base.size();
        for (std::size_t i = 0; same && i < base.size(); ++i)
          same = other[i].start_token == base[i].start_token &&
                 other[i].end_token == base[i].end_token && other[i].etype == base[i].etype;
        deviations += !same;
      }
    }
  }
  return {deviations == 0 && mentions > 0,
          std::to_string(tweets) + " tweets, " + std::to_string(mentions) + " mentions, " +
              std::to_string(deviations) + " deviations"};
}

std::map<std::pair<std::string, std::string>, std::vector<std::string>> read_scores(
    const std::string& path) {
  std::map<std::pair<std::string, std::string>, std::vector<std::string>> out;
  std::istringstream in(cli::read_file(path));
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
    if (f.size() == 6) out[{f[0] + "/" + f[1], f[2]}] = {f[3], f[4], f[5]};
  }
  return out;
}

// 7. Separable corpus through the command line.
Outcome separable_pipeline() {
  testsupport::TempDir dir;
  if (run_cli({"gen", "--out", dir / "gen", "--mode", "lexicon"}) != 0) return {false, "gen failed"};
  const auto start = std::chrono::steady_clock::now();
  if (run_cli({"stance", "--corpus", dir / "gen/corpus.jsonl", "--features", "unigram", "--out",
               dir / "run"}) != 0)
    return {false, "stance failed"};
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const auto scores = read_scores(dir / "run/scores.csv");
  std::size_t cells = 0, perfect = 0;
  for (const auto& [key, values] : scores)
    for (const auto& v : values) {
      ++cells;
      perfect += v == "100.00";
    }
  return {cells == 18 && perfect == cells && secs < 5.0,
          std::to_string(perfect) + "/" + std::to_string(cells) + " cells at 100.00 in " +
              fmt(secs, 2) + " s"};
}

// 8. Named-entity features on a corpus only entities separate.
Outcome entity_benefit() {
  synth::SynthConfig cfg;
  cfg.mode = synth::Mode::Entity;
  cfg.seed = 8;
  const auto s = synth::generate(cfg);
  const auto depleted = synth::deplete(s.gazetteer, EntityType::Person, 0.5, 88);
  const features::FeatureConfig configs[] = {
      {true, false, false, features::EntitySource::None},
      {true, false, false, features::EntitySource::GoldAnnotations},
      {true, false, false, features::EntitySource::SystemNer}};
  eval::CvOptions opt;
  opt.gazetteer = &depleted;
  bool pass = true;
  std::ostringstream d;
  for (const auto& target : s.corpus.targets()) {
    const Corpus part = filter_by_target(s.corpus, target);
    const auto table =
        eval::compare_configs(part, configs, svm::SvmParams{}, eval::make_folds(part), opt, target);
    const double uni = table.rows[0].result.scores.average.f;
    const double gold = table.rows[1].result.scores.average.f;
    const double sys = table.rows[2].result.scores.average.f;
    pass = pass && gold - uni >= 20 && gold >= sys;
    d << (d.tellp() > 0 ? "; " : "") << target << " unigram " << fmt(uni, 1) << " gold " << fmt(gold, 1) << " system "
      << fmt(sys, 1);
  }
  return {pass, d.str()};
}

// 9. Every command rerun from its manifest.
Outcome determinism() {
  testsupport::TempDir dir;
  const std::string corpus = dir / "gen/corpus.jsonl", gaz = dir / "gen/gazetteer.tsv";
  const std::vector<std::vector<std::string>> commands = {
      {"gen", "--out", dir / "gen", "--mode", "entity", "--seed", "9"},
      {"stats", "--corpus", corpus, "--out", dir / "stats"},
      {"ner-eval", "--corpus", corpus, "--gazetteer", gaz, "--out", dir / "ner"},
      {"stance", "--corpus", corpus, "--gazetteer", gaz, "--paper-suite", "--seed", "3", "--out",
       dir / "stance"}};
  for (const auto& c : commands)
    if (run_cli(c) != 0) return {false, c[0] + " failed"};
  std::size_t files = 0, differing = 0;
  for (const char* name : {"gen", "stats", "ner", "stance"}) {
    const std::string original = dir / name, again = dir / (std::string(name) + "-again");
    if (run_cli({"rerun", "--manifest", original + "/manifest.json", "--out", again}) != 0)
      return {false, std::string("rerun of ") + name + " failed"};
    for (const auto& entry : std::filesystem::directory_iterator(original)) {
      const auto file = entry.path().filename().string();
      ++files;
      differing += cli::read_file(original + "/" + file) != cli::read_file(again + "/" + file);
    }
  }
  return {differing == 0, std::to_string(files) + " files compared, " +
                              std::to_string(differing) + " differ"};
}

// Corpus with the published per-cell counts: entities are single tokens
// spread round-robin over the tweets of their cell.
Corpus published_count_corpus() {
  struct Cell {
    const char* target;
    StanceLabel stance;
    std::size_t person, location, organization;
  };
  const Cell cells[] = {{"Target-1", StanceLabel::Favor, 12, 17, 207},
                        {"Target-1", StanceLabel::Against, 70, 4, 221},
                        {"Target-2", StanceLabel::Favor, 8, 24, 247},
                        {"Target-2", StanceLabel::Against, 69, 18, 277}};
  std::vector<Tweet> tweets;
  std::vector<EntityAnnotation> anns;
  for (const auto& cell : cells) {
    std::vector<std::vector<EntityType>> per_tweet(175);
    std::size_t next = 0;
    for (auto [etype, n] : {std::pair{EntityType::Person, cell.person},
                            std::pair{EntityType::Location, cell.location},
                            std::pair{EntityType::Organization, cell.organization}})
      for (std::size_t k = 0; k < n; ++k) per_tweet[next++ % 175].push_back(etype);
    for (const auto& types : per_tweet) {
      Tweet t{"p" + std::to_string(tweets.size()), cell.target, cell.stance, "tweet"};
      for (std::size_t k = 0; k < types.size(); ++k) {
        t.text += " name" + std::to_string(k);
        anns.push_back({t.id, k + 1, k + 2, types[k], "name" + std::to_string(k)});
      }
      tweets.push_back(std::move(t));
    }
  }
  return Corpus::build(std::move(tweets), std::move(anns));
}

std::vector<std::string> words(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

bool stats_match_published(const StatsTable& table, std::string* rendered) {
  std::ostringstream out;
  cli::render_stats(table, out);
  *rendered = out.str();
  const std::vector<std::vector<std::string>> expected = {
      {"Target-1", "Favor", "175", "12", "17", "207", "236"},
      {"Against", "175", "70", "4", "221", "295"},
      {"Target-2", "Favor", "175", "8", "24", "247", "279"},
      {"Against", "175", "69", "18", "277", "364"},
      {"TOTAL", "700", "159", "63", "952", "1,174"}};
  std::istringstream in(*rendered);
  std::string line;
  std::getline(in, line);
  for (const auto& row : expected) {
    if (!std::getline(in, line) || words(line) != row) return false;
  }
  return !std::getline(in, line);
}

// 10. Reproduction on the original data set, when supplied.
Outcome conditional_reproduction() {
  std::string rendered;
  const char* corpus_path = std::getenv("STANCEFORGE_PAPER_CORPUS");
  if (!corpus_path) {
    const bool layout = stats_match_published(corpus_stats(published_count_corpus()), &rendered);
    return {layout,
            "data set not supplied (set STANCEFORGE_PAPER_CORPUS); statistics layout reproduces "
            "700 / 159 / 63 / 952 / 1,174 from a corpus with the published cell counts"};
  }
  const Corpus corpus = load_corpus(corpus_path);
  const bool stats = stats_match_published(corpus_stats(corpus), &rendered);
  std::ostringstream d;
  d << "statistics " << (stats ? "match" : "differ") << "; ";
  const char* gaz_path = std::getenv("STANCEFORGE_PAPER_GAZETTEER");
  std::optional<ner::Gazetteer> gaz;
  if (gaz_path) gaz = ner::load_gazetteer(gaz_path);
  eval::CvOptions opt;
  opt.gazetteer = gaz ? &*gaz : nullptr;
  double worst = 0;
  std::size_t compared = 0;
  for (const auto& target : corpus.targets()) {
    const Corpus part = filter_by_target(corpus, target);
    std::vector<features::FeatureConfig> configs;
    for (const auto& cfg : cli::paper_suite())
      if (gaz || cfg.entity_source != features::EntitySource::SystemNer) configs.push_back(cfg);
    const auto table = eval::compare_configs(part, configs, svm::SvmParams{},
                                             eval::make_folds(part), opt, target);
    for (const auto& row : table.rows)
      if (auto pub = cli::published_average_f(target, row.config.name())) {
        worst = std::max(worst, std::fabs(row.result.scores.average.f - *pub));
        ++compared;
      }
  }
  d << compared << " average F values compared, worst deviation " << fmt(worst, 1);
  if (!gaz) d << " (system NER configurations skipped: no gazetteer)";
  return {stats && compared > 0 && worst <= 3.0, d.str()};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"SMO matches dual QP oracle", smo_vs_oracle},
      {"KKT certificate and duality gap", kkt_certificate},
      {"F-measure reproduces published NER table", ner_f_fidelity},
      {"average rows reproduce published stance tables", average_fidelity},
      {"exact-match scorer agrees with brute force", scoring_oracle},
      {"extraction invariant under case and diacritics", case_diacritics},
      {"separable corpus scores 100 end to end", separable_pipeline},
      {"named-entity features help on entity corpus", entity_benefit},
      {"manifest reruns are byte-identical", determinism},
      {"conditional reproduction on original data", conditional_reproduction},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << (i + 1) << ". " << criteria[i].first
              << " (" << fmt(secs, 2) << " s): " << o.detail << std::endl;
  }
  return failed ? 1 : 0;
}
