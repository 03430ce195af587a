#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "commands.hpp"
#include "support/temp_dir.hpp"

using namespace stanceforge;
using testsupport::TempDir;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "stance-forge");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::string& path) { return cli::read_file(path); }

void spit(const std::string& path, const std::string& text) { cli::write_file(path, text); }

// Average F per (config, target) from a scores.csv file.
std::map<std::pair<std::string, std::string>, double> average_f(const std::string& csv) {
  std::map<std::pair<std::string, std::string>, double> out;
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
    if (f.size() == 6 && f[2] == "average") out[{f[0], f[1]}] = std::stod(f[5]);
  }
  return out;
}

}  // namespace

TEST(Gen, WritesCorpusGazetteerAndDeclaredCounts) {
  TempDir dir;
  auto r = run({"gen", "--out", dir.path().string(), "--seed", "4"});
  ASSERT_EQ(r.code, 0) << r.err;
  const Corpus c = load_corpus(dir / "corpus.jsonl");
  EXPECT_EQ(c.size(), 160u);
  synth::SynthConfig cfg;
  cfg.seed = 4;
  const auto expected = synth::generate(cfg);
  const auto stats = corpus_stats(c);
  EXPECT_EQ(stats.total, expected.declared.total);
  EXPECT_EQ(ner::load_gazetteer(dir / "gazetteer.tsv").size(), expected.gazetteer.size());

  auto s = run({"stats", "--corpus", dir / "corpus.jsonl"});
  ASSERT_EQ(s.code, 0);
  // The stats table printed by gen (declared counts) matches the one
  // recomputed from the written corpus.
  const auto table = [](const std::string& text) { return text.substr(text.find("Target ")); };
  EXPECT_EQ(table(s.out), table(r.out));
}

TEST(Gen, SameSeedSameBytes) {
  TempDir a, b;
  ASSERT_EQ(run({"gen", "--out", a.path().string(), "--seed", "9", "--mode", "entity"}).code, 0);
  ASSERT_EQ(run({"gen", "--out", b.path().string(), "--seed", "9", "--mode", "entity"}).code, 0);
  for (const char* f : {"corpus.jsonl", "gazetteer.tsv", "report.txt", "manifest.json"})
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
}

TEST(Gen, UsageErrors) {
  TempDir dir;
  EXPECT_EQ(run({"gen", "--out", dir.path().string(), "--mode", "fancy"}).code, 2);
  EXPECT_EQ(run({"gen", "--out", dir.path().string(), "--inflected", "2"}).code, 2);
  EXPECT_EQ(run({"gen", "--out", dir.path().string(), "--sizes", "1,2,3"}).code, 2);
  EXPECT_EQ(run({"gen"}).code, 2);
}

TEST(NerEval, UninflectedCorpusScoresPerfectly) {
  TempDir dir;
  ASSERT_EQ(run({"gen", "--out", dir.path().string(), "--inflected", "0"}).code, 0);
  auto r = run({"ner-eval", "--corpus", dir / "corpus.jsonl", "--gazetteer", dir / "gazetteer.tsv",
                "--out", dir / "ner"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream csv(slurp(dir / "ner/ner.csv"));
  std::string line;
  std::getline(csv, line);
  int rows = 0;
  while (std::getline(csv, line)) {
    EXPECT_NE(line.find(",100.00,100.00,100.00"), std::string::npos) << line;
    ++rows;
  }
  EXPECT_EQ(rows, 5);
}

TEST(NerEval, EmptyGazetteerAndEmptyAnswerKey) {
  TempDir dir;
  ASSERT_EQ(run({"gen", "--out", dir.path().string()}).code, 0);
  spit(dir / "empty.tsv", "# nothing\n");
  auto r = run({"ner-eval", "--corpus", dir / "corpus.jsonl", "--gazetteer", dir / "empty.tsv"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("Overall                0.00    0.00    0.00"), std::string::npos) << r.out;

  spit(dir / "bare.jsonl", R"({"id":"a","target":"T","stance":"favor","text":"x"})" "\n");
  EXPECT_EQ(run({"ner-eval", "--corpus", dir / "bare.jsonl", "--gazetteer", dir / "empty.tsv"}).code,
            1);
  EXPECT_EQ(run({"ner-eval", "--corpus", dir / "corpus.jsonl"}).code, 2);
}

TEST(Stats, EmptyCorpusAndErrors) {
  TempDir dir;
  spit(dir / "empty.jsonl", "");
  auto r = run({"stats", "--corpus", dir / "empty.jsonl"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("TOTAL                     0       0         0             0       0"),
            std::string::npos)
      << r.out;
  spit(dir / "bad.jsonl", "{oops\n");
  auto bad = run({"stats", "--corpus", dir / "bad.jsonl"});
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.err.find("line 1"), std::string::npos);
  EXPECT_EQ(run({"stats", "--corpus", dir / "missing.jsonl"}).code, 1);
  EXPECT_EQ(run({"stats", "--corpus", dir / "empty.jsonl", "--target", "nope"}).code, 1);
}

TEST(Stance, EntityFeaturesRankAboveUnigrams) {
  TempDir dir;
  ASSERT_EQ(run({"gen", "--out", dir.path().string(), "--mode", "entity", "--seed", "2"}).code, 0);
  auto r = run({"stance", "--corpus", dir / "corpus.jsonl", "--features", "unigram", "--features",
                "unigram,ne-gold", "--out", dir / "run"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto f = average_f(slurp(dir / "run/scores.csv"));
  for (const char* target : {"Target-1", "Target-2"})
    EXPECT_GT((f.at({"unigram+ne-gold", target})), (f.at({"unigram", target}))) << target;
  EXPECT_NE(r.out.find("seed: 1  folds: 10  C: 1"), std::string::npos);
  EXPECT_NE(r.out.find("configs: unigram unigram+ne-gold"), std::string::npos);
}

TEST(Stance, SameSeedSameCsv) {
  TempDir dir;
  ASSERT_EQ(run({"gen", "--out", dir.path().string(), "--mode", "entity"}).code, 0);
  const std::vector<std::string> base = {"stance", "--corpus", dir / "corpus.jsonl", "--features",
                                         "unigram,hashtag", "--seed", "7", "--out"};
  auto a = base, b = base;
  a.push_back(dir / "a");
  b.push_back(dir / "b");
  b.insert(b.end(), {"--threads", "1"});
  ASSERT_EQ(run(a).code, 0);
  ASSERT_EQ(run(b).code, 0);
  EXPECT_EQ(slurp(dir / "a/scores.csv"), slurp(dir / "b/scores.csv"));
  EXPECT_EQ(slurp(dir / "a/report.txt"), slurp(dir / "b/report.txt"));
}

TEST(Stance, UsageAndDataErrors) {
  TempDir dir;
  ASSERT_EQ(run({"gen", "--out", dir.path().string(), "--size", "5"}).code, 0);
  const std::string corpus = dir / "corpus.jsonl";
  EXPECT_EQ(run({"stance", "--corpus", corpus, "--features", "unigram,ne-system"}).code, 2);
  EXPECT_EQ(run({"stance", "--corpus", corpus, "--paper-suite"}).code, 2);
  EXPECT_EQ(run({"stance", "--corpus", corpus}).code, 2);
  EXPECT_EQ(run({"stance", "--corpus", corpus, "--features", "trigram"}).code, 2);
  EXPECT_EQ(run({"stance", "--corpus", corpus, "--features", "unigram", "--folds", "1"}).code, 2);
  EXPECT_EQ(run({"stance", "--corpus", corpus, "--features", "unigram", "--c", "0"}).code, 2);
  EXPECT_EQ(run({"stance", "--corpus", corpus, "--features", "unigram", "--seed", "x"}).code, 2);
  // Five tweets per class cannot fill ten folds.
  EXPECT_EQ(run({"stance", "--corpus", corpus, "--features", "unigram"}).code, 1);
  EXPECT_EQ(run({"stance", "--corpus", corpus, "--features", "unigram", "--folds", "5"}).code, 0);
}

TEST(Stance, SuiteShowsPublishedValues) {
  TempDir dir;
  ASSERT_EQ(run({"gen", "--out", dir.path().string(), "--mode", "entity"}).code, 0);
  auto r = run({"stance", "--corpus", dir / "corpus.jsonl", "--paper-suite", "--gazetteer",
                dir / "gazetteer.tsv", "--target", "Target-2"});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const auto& cfg : cli::paper_suite())
    EXPECT_NE(r.out.find("\n" + cfg.name() + " "), std::string::npos) << cfg.name();
  EXPECT_NE(r.out.find("published"), std::string::npos);
  EXPECT_NE(r.out.find("79.7"), std::string::npos);
  EXPECT_EQ(r.out.find("Target: Target-1"), std::string::npos);
}

TEST(Rerun, ReproducesEveryCommandByteForByte) {
  TempDir dir;
  ASSERT_EQ(run({"gen", "--out", dir / "gen", "--mode", "entity", "--seed", "5", "--sizes",
                 "20,20,30,30", "--lowercase", "0.5"})
                .code,
            0);
  const std::string corpus = dir / "gen/corpus.jsonl", gaz = dir / "gen/gazetteer.tsv";
  ASSERT_EQ(run({"stats", "--corpus", corpus, "--out", dir / "stats"}).code, 0);
  ASSERT_EQ(run({"ner-eval", "--corpus", corpus, "--gazetteer", gaz, "--out", dir / "ner"}).code, 0);
  ASSERT_EQ(run({"stance", "--corpus", corpus, "--gazetteer", gaz, "--features", "unigram",
                 "--features", "unigram+ne-system", "--seed", "3", "--c", "0.5", "--folds", "5",
                 "--out", dir / "stance"})
                .code,
            0);
  for (const char* name : {"gen", "stats", "ner", "stance"}) {
    const std::string original = dir / name;
    const std::string again = dir / (std::string(name) + "-again");
    auto r = run({"rerun", "--manifest", original + "/manifest.json", "--out", again});
    ASSERT_EQ(r.code, 0) << name << ": " << r.err;
    for (const auto& entry : std::filesystem::directory_iterator(original)) {
      const auto file = entry.path().filename().string();
      EXPECT_EQ(slurp(original + "/" + file), slurp(again + "/" + file)) << name << "/" << file;
    }
  }
  EXPECT_EQ(run({"rerun", "--manifest", dir / "none.json"}).code, 1);
  spit(dir / "junk.json", "{");
  EXPECT_EQ(run({"rerun", "--manifest", dir / "junk.json"}).code, 1);
}

TEST(Run, HelpAndUnknownCommands) {
  EXPECT_EQ(run({"--help"}).code, 0);
  EXPECT_EQ(run({"--version"}).out, std::string(STANCEFORGE_VERSION) + "\n");
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({"stats", "--corpus", "x", "--bogus"}).code, 2);
}
