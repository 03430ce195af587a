// The stance-forge command line. Kept in a header so the tests can drive
// every command in-process.
#pragma once

#if __has_include(<CLI/CLI.hpp>)
#include <CLI/CLI.hpp>
#else
#include <CLI11.hpp>
#endif

#include <array>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stanceforge/corpus.hpp"
#include "stanceforge/error.hpp"
#include "stanceforge/eval.hpp"
#include "stanceforge/features.hpp"
#include "stanceforge/ner.hpp"
#include "stanceforge/numeric.hpp"
#include "stanceforge/svm.hpp"
#include "stanceforge/synth.hpp"

#ifndef STANCEFORGE_VERSION
#define STANCEFORGE_VERSION "0.0.0"
#endif

namespace stanceforge::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitData = 1;
inline constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Average F of the six published configurations, for side-by-side display.
struct PublishedRow {
  const char* target;
  const char* config;
  double average_f;
};

inline constexpr PublishedRow kPublished[] = {
    {"Target-1", "unigram", 80.6},
    {"Target-1", "unigram+hashtag", 80.1},
    {"Target-1", "unigram+ne-system", 79.8},
    {"Target-1", "unigram+hashtag+ne-system", 80.4},
    {"Target-1", "unigram+ne-gold", 80.3},
    {"Target-1", "unigram+hashtag+ne-gold", 81.5},
    {"Target-2", "unigram", 72.2},
    {"Target-2", "unigram+hashtag", 74.0},
    {"Target-2", "unigram+ne-system", 76.6},
    {"Target-2", "unigram+hashtag+ne-system", 75.5},
    {"Target-2", "unigram+ne-gold", 79.7},
    {"Target-2", "unigram+hashtag+ne-gold", 79.5},
};

inline std::optional<double> published_average_f(std::string_view target, std::string_view config) {
  for (const auto& row : kPublished)
    if (row.target == target && row.config == config) return row.average_f;
  return std::nullopt;
}

inline std::vector<features::FeatureConfig> paper_suite() {
  std::vector<features::FeatureConfig> out;
  for (auto source : {features::EntitySource::None, features::EntitySource::SystemNer,
                      features::EntitySource::GoldAnnotations})
    for (bool hashtag : {false, true}) out.push_back({true, false, hashtag, source});
  return out;
}

// ---------------------------------------------------------------------------
// Renderers

inline void render_stats(const StatsTable& t, std::ostream& out) {
  const auto line = [&](std::string_view target, std::string_view stance, const StatsCell& c) {
    out << std::left << std::setw(10) << target << std::setw(9) << stance << std::right
        << std::setw(8) << format_count(c.tweets) << std::setw(8)
        << format_count(c.entities[index_of(EntityType::Person)]) << std::setw(10)
        << format_count(c.entities[index_of(EntityType::Location)]) << std::setw(14)
        << format_count(c.entities[index_of(EntityType::Organization)]) << std::setw(8)
        << format_count(c.total()) << '\n';
  };
  out << std::left << std::setw(10) << "Target" << std::setw(9) << "Stance" << std::right
      << std::setw(8) << "Tweets" << std::setw(8) << "Person" << std::setw(10) << "Location"
      << std::setw(14) << "Organization" << std::setw(8) << "Total" << '\n';
  std::string previous;
  for (const auto& row : t.rows) {
    line(row.target == previous ? "" : row.target, display_name(row.stance), row.cell);
    previous = row.target;
  }
  line("TOTAL", "", t.total);
}

inline void render_ner(const ner::NerReport& r, std::ostream& out) {
  const auto line = [&](std::string_view target, std::string_view stance, const ner::NerScore& s) {
    out << std::left << std::setw(10) << target << std::setw(9) << stance << std::right
        << std::setw(8) << format_fixed(s.precision, 2) << std::setw(8)
        << format_fixed(s.recall, 2) << std::setw(8) << format_fixed(s.f_measure, 2) << '\n';
  };
  out << std::left << std::setw(10) << "Target" << std::setw(9) << "Stance" << std::right
      << std::setw(8) << "P (%)" << std::setw(8) << "R (%)" << std::setw(8) << "F (%)" << '\n';
  std::string previous;
  for (const auto& s : r.slices) {
    line(s.target == previous ? "" : s.target, display_name(s.stance), s.score);
    previous = s.target;
  }
  line("Overall", "", r.overall);
}

inline void write_ner_csv(const ner::NerReport& r, std::ostream& out) {
  out << "target,stance,system,gold,correct,precision,recall,f\n";
  const auto line = [&](std::string_view target, std::string_view stance, const ner::NerScore& s) {
    out << target << ',' << stance << ',' << s.system_count << ',' << s.gold_count << ','
        << s.true_positives << ',' << format_fixed(s.precision, 2) << ','
        << format_fixed(s.recall, 2) << ',' << format_fixed(s.f_measure, 2) << '\n';
  };
  for (const auto& s : r.slices) line(s.target, to_string(s.stance), s.score);
  line("all", "all", r.overall);
}

inline void render_published(const eval::ComparisonTable& t, std::ostream& out) {
  out << "Average F against published values (reference only)\n";
  out << std::left << std::setw(28) << "config" << std::right << std::setw(10) << "measured"
      << std::setw(11) << "published" << std::setw(8) << "diff" << '\n';
  for (const auto& row : t.rows) {
    const std::string name = row.config.name();
    const double measured = round_half_up(row.result.scores.average.f, 1);
    out << std::left << std::setw(28) << name << std::right << std::setw(10)
        << format_fixed(measured, 1);
    if (auto ref = published_average_f(t.target, name)) {
      const double diff = measured - *ref;
      out << std::setw(11) << format_fixed(*ref, 1) << std::setw(8)
          << ((diff >= 0 ? "+" : "-") + format_fixed(std::fabs(diff), 1));
    } else {
      out << std::setw(11) << "-" << std::setw(8) << "-";
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Plumbing

inline std::string absolute_path(const std::string& p) {
  return fs::absolute(fs::path(p)).lexically_normal().string();
}

inline void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw Error(ErrorKind::Io, "write failed for '" + path.string() + "'");
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

/// Writes `files` (name, content) and a manifest into `dir`, creating it.
inline void emit(const std::string& dir, json manifest,
                 const std::vector<std::pair<std::string, std::string>>& files) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create output directory '" + dir + "'");
  json outputs = json::array();
  for (const auto& [name, content] : files) {
    write_file(fs::path(dir) / name, content);
    outputs.push_back(name);
  }
  manifest["outputs"] = outputs;
  write_file(fs::path(dir) / "manifest.json", manifest.dump(2) + "\n");
}

inline json manifest_base(std::string_view command) {
  json m;
  m["tool"] = "stance-forge";
  m["version"] = STANCEFORGE_VERSION;
  m["command"] = command;
  return m;
}

inline json path_or_null(const std::string& p) { return p.empty() ? json() : json(absolute_path(p)); }

inline Corpus load_target(const std::string& path, const std::string& target) {
  Corpus c = load_corpus(path);
  if (target.empty()) return c;
  Corpus part = filter_by_target(c, target);
  if (part.empty()) throw Error(ErrorKind::InvalidArgument, "no tweets for target '" + target + "'");
  return part;
}

inline std::string header_line(std::string_view command) {
  return std::string("stance-forge ") + STANCEFORGE_VERSION + " " + std::string(command) + "\n";
}

// ---------------------------------------------------------------------------
// Commands

struct Options {
  std::string corpus, gazetteer, suffixes, target, out, manifest, mode = "lexicon", sizes;
  std::vector<std::string> features;
  std::uint64_t seed = 1;
  double c = 1.0;
  std::size_t folds = 10;
  unsigned threads = 0;
  bool paper_suite = false;
  std::size_t size = 40;
  double inflected = 0.3, lowercase = 0.2, stripped = 0.2, hashtags = 0.3;
};

inline int cmd_stats(const Options& o, std::ostream& out) {
  const Corpus c = load_target(o.corpus, o.target);
  std::ostringstream report;
  report << header_line("stats");
  if (!o.target.empty()) report << "target: " << o.target << '\n';
  render_stats(corpus_stats(c), report);
  out << report.str();
  if (!o.out.empty()) {
    json m = manifest_base("stats");
    m["corpus"] = absolute_path(o.corpus);
    m["target"] = o.target.empty() ? json() : json(o.target);
    emit(o.out, m, {{"report.txt", report.str()}});
  }
  return kExitOk;
}

inline int cmd_ner_eval(const Options& o, std::ostream& out) {
  const Corpus c = load_target(o.corpus, o.target);
  if (c.annotations().empty())
    throw Error(ErrorKind::InvalidArgument, "the corpus has no gold entity annotations");
  const ner::Gazetteer gaz = ner::load_gazetteer(o.gazetteer);
  const ner::SuffixStripper stripper =
      o.suffixes.empty() ? ner::SuffixStripper{} : ner::load_suffixes(o.suffixes);
  const auto system = ner::extract_corpus(c, gaz, stripper);
  const auto report_data = ner::score_corpus(c, system);

  std::ostringstream report, csv;
  report << header_line("ner-eval");
  report << "gazetteer entries: " << gaz.size() << "  suffixes: "
         << (o.suffixes.empty() ? std::string("default") : std::to_string(stripper.suffixes().size()))
         << '\n';
  if (!o.target.empty()) report << "target: " << o.target << '\n';
  render_ner(report_data, report);
  write_ner_csv(report_data, csv);
  out << report.str();
  if (!o.out.empty()) {
    json m = manifest_base("ner-eval");
    m["corpus"] = absolute_path(o.corpus);
    m["gazetteer"] = absolute_path(o.gazetteer);
    m["suffixes"] = path_or_null(o.suffixes);
    m["target"] = o.target.empty() ? json() : json(o.target);
    emit(o.out, m, {{"report.txt", report.str()}, {"ner.csv", csv.str()}});
  }
  return kExitOk;
}

inline int cmd_stance(const Options& o, std::ostream& out) {
  std::vector<features::FeatureConfig> configs;
  if (o.paper_suite) configs = paper_suite();
  for (const auto& spec : o.features) {
    try {
      configs.push_back(features::parse_feature_config(spec));
    } catch (const Error& e) {
      throw UsageError(std::string("--features: ") + e.what());
    }
  }
  if (configs.empty()) throw UsageError("give at least one --features list or --paper-suite");
  for (const auto& cfg : configs)
    if (cfg.entity_source == features::EntitySource::SystemNer && o.gazetteer.empty())
      throw UsageError("'" + cfg.name() + "' needs --gazetteer");
  if (!(o.c > 0)) throw UsageError("--c must be positive");
  if (o.folds < 2) throw UsageError("--folds must be at least 2");

  const Corpus corpus = load_target(o.corpus, o.target);
  std::optional<ner::Gazetteer> gaz;
  if (!o.gazetteer.empty()) gaz = ner::load_gazetteer(o.gazetteer);
  std::optional<ner::SuffixStripper> stripper;
  if (!o.suffixes.empty()) stripper = ner::load_suffixes(o.suffixes);

  svm::SvmParams params;
  params.c = o.c;
  params.seed = o.seed;
  eval::CvOptions cv{gaz ? &*gaz : nullptr, stripper ? &*stripper : nullptr, o.threads};

  std::vector<std::string> targets = o.target.empty() ? corpus.targets() : std::vector{o.target};
  std::sort(targets.begin(), targets.end());

  std::ostringstream report, csv;
  report << header_line("stance");
  report << "seed: " << o.seed << "  folds: " << o.folds << "  C: " << svm::format_double(params.c)
         << "  tolerance: " << svm::format_double(params.tolerance)
         << "  max passes: " << params.max_passes << '\n';
  report << "configs:";
  for (const auto& cfg : configs) report << ' ' << cfg.name();
  report << '\n';
  eval::write_csv_header(csv);
  for (const auto& target : targets) {
    const Corpus part = o.target.empty() ? filter_by_target(corpus, target) : corpus;
    const auto plan = eval::make_folds(part, o.folds, o.seed);
    const auto table = eval::compare_configs(part, configs, params, plan, cv, target);
    report << '\n';
    eval::render_table(table, report);
    if (o.paper_suite) {
      report << '\n';
      render_published(table, report);
    }
    eval::write_csv(table, csv);
  }
  out << report.str();
  if (!o.out.empty()) {
    json m = manifest_base("stance");
    m["corpus"] = absolute_path(o.corpus);
    m["gazetteer"] = path_or_null(o.gazetteer);
    m["suffixes"] = path_or_null(o.suffixes);
    m["target"] = o.target.empty() ? json() : json(o.target);
    m["seed"] = o.seed;
    m["folds"] = o.folds;
    m["c"] = o.c;
    m["paper_suite"] = o.paper_suite;
    m["features"] = o.features;
    json svm_params;
    svm_params["tolerance"] = params.tolerance;
    svm_params["eps"] = params.eps;
    svm_params["max_passes"] = params.max_passes;
    svm_params["gap_tolerance"] = params.gap_tolerance;
    m["svm"] = svm_params;
    json names = json::array();
    for (const auto& cfg : configs) names.push_back(cfg.name());
    m["configs"] = names;
    emit(o.out, m, {{"report.txt", report.str()}, {"scores.csv", csv.str()}});
  }
  return kExitOk;
}

inline std::array<std::size_t, 4> parse_sizes(const Options& o) {
  std::array<std::size_t, 4> sizes;
  sizes.fill(o.size);
  if (o.sizes.empty()) return sizes;
  std::stringstream in(o.sizes);
  std::string part;
  std::size_t k = 0;
  while (std::getline(in, part, ',')) {
    std::size_t v = 0;
    auto res = std::from_chars(part.data(), part.data() + part.size(), v);
    if (k == 4 || res.ec != std::errc() || res.ptr != part.data() + part.size())
      throw UsageError("--sizes expects four comma-separated counts");
    sizes[k++] = v;
  }
  if (k != 4) throw UsageError("--sizes expects four comma-separated counts");
  return sizes;
}

inline int cmd_gen(const Options& o, std::ostream& out) {
  synth::SynthConfig cfg;
  if (o.mode == "lexicon") cfg.mode = synth::Mode::Lexicon;
  else if (o.mode == "entity") cfg.mode = synth::Mode::Entity;
  else throw UsageError("--mode must be 'lexicon' or 'entity'");
  cfg.seed = o.seed;
  cfg.sizes = parse_sizes(o);
  cfg.inflected_fraction = o.inflected;
  cfg.lowercase_fraction = o.lowercase;
  cfg.stripped_fraction = o.stripped;
  cfg.hashtag_fraction = o.hashtags;
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  const auto s = synth::generate(cfg);

  std::ostringstream corpus, gazetteer, report;
  write_corpus(s.corpus, corpus);
  ner::write_gazetteer(s.gazetteer, gazetteer);
  report << header_line("gen");
  report << "mode: " << synth::to_string(cfg.mode) << "  seed: " << cfg.seed << "  sizes: "
         << cfg.sizes[0] << ',' << cfg.sizes[1] << ',' << cfg.sizes[2] << ',' << cfg.sizes[3]
         << '\n';
  report << "inflected: " << cfg.inflected_fraction << "  lowercase: " << cfg.lowercase_fraction
         << "  stripped: " << cfg.stripped_fraction << "  hashtags: " << cfg.hashtag_fraction
         << '\n';
  render_stats(s.declared, report);
  out << report.str();

  json m = manifest_base("gen");
  m["mode"] = synth::to_string(cfg.mode);
  m["seed"] = cfg.seed;
  m["sizes"] = cfg.sizes;
  m["inflected"] = cfg.inflected_fraction;
  m["lowercase"] = cfg.lowercase_fraction;
  m["stripped"] = cfg.stripped_fraction;
  m["hashtags"] = cfg.hashtag_fraction;
  emit(o.out, m,
       {{"corpus.jsonl", corpus.str()}, {"gazetteer.tsv", gazetteer.str()},
        {"report.txt", report.str()}});
  return kExitOk;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Rebuilds the command line recorded in a manifest and runs it again,
/// writing into `out_dir` (the manifest's directory when empty).
inline int cmd_rerun(const Options& o, std::ostream& out, std::ostream& err) {
  json m;
  try {
    m = json::parse(read_file(o.manifest));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Malformed, "manifest '" + o.manifest + "': " + e.what());
  }
  const auto str = [&](const char* key) -> std::string {
    return m.contains(key) && m[key].is_string() ? m[key].get<std::string>() : std::string();
  };
  const std::string command = str("command");
  std::vector<std::string> args = {"stance-forge", command};
  const auto add = [&](const char* flag, const std::string& value) {
    if (!value.empty()) {
      args.push_back(flag);
      args.push_back(value);
    }
  };
  const auto number = [&](const char* key) {
    std::ostringstream s;
    if (m.contains(key) && m[key].is_number_float()) s << svm::format_double(m[key].get<double>());
    else if (m.contains(key)) s << m[key].dump();
    return s.str();
  };
  add("--corpus", str("corpus"));
  add("--gazetteer", str("gazetteer"));
  add("--suffixes", str("suffixes"));
  add("--target", str("target"));
  if (command == "stance") {
    add("--seed", number("seed"));
    add("--folds", number("folds"));
    add("--c", number("c"));
    if (m.value("paper_suite", false)) args.push_back("--paper-suite");
    for (const auto& f : m.value("features", std::vector<std::string>{})) add("--features", f);
  } else if (command == "gen") {
    add("--seed", number("seed"));
    add("--mode", str("mode"));
    std::string sizes;
    for (const auto& v : m.value("sizes", std::vector<std::size_t>{}))
      sizes += (sizes.empty() ? "" : ",") + std::to_string(v);
    add("--sizes", sizes);
    add("--inflected", number("inflected"));
    add("--lowercase", number("lowercase"));
    add("--stripped", number("stripped"));
    add("--hashtags", number("hashtags"));
  } else if (command != "stats" && command != "ner-eval") {
    throw Error(ErrorKind::Malformed, "manifest names no known command");
  }
  const std::string dir =
      o.out.empty() ? fs::absolute(fs::path(o.manifest)).parent_path().string() : o.out;
  add("--out", dir);
  return run(args, out, err);
}

// ---------------------------------------------------------------------------
// Entry point

/// Exit codes: 0 success, 1 data error, 2 usage error.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stance detection experiments with named-entity features", "stance-forge"};
  app.set_version_flag("--version", STANCEFORGE_VERSION);
  app.require_subcommand(1, 1);
  Options o;

  const auto corpus_opt = [&](CLI::App* cmd, bool required) {
    auto* opt = cmd->add_option("--corpus", o.corpus, "Corpus in JSON Lines");
    if (required) opt->required();
    cmd->add_option("--target", o.target, "Restrict to one target");
  };

  auto* stats = app.add_subcommand("stats", "Tweet and entity counts per target and stance");
  corpus_opt(stats, true);
  stats->add_option("--out", o.out, "Directory for the report and manifest");

  auto* ner_eval = app.add_subcommand("ner-eval", "Exact-match evaluation of gazetteer NER");
  corpus_opt(ner_eval, true);
  ner_eval->add_option("--gazetteer", o.gazetteer, "TYPE<TAB>surface lexicon")->required();
  ner_eval->add_option("--suffixes", o.suffixes, "Suffix list, one per line");
  ner_eval->add_option("--out", o.out, "Directory for the report and manifest");

  auto* stance = app.add_subcommand("stance", "Cross-validated stance classification");
  corpus_opt(stance, true);
  stance->add_option("--features", o.features, "Feature families, e.g. unigram,ne-gold (repeatable)")
      ->expected(1)
      ->take_all();
  stance->add_flag("--paper-suite", o.paper_suite, "Run the six published configurations");
  stance->add_option("--gazetteer", o.gazetteer, "Gazetteer for ne-system features");
  stance->add_option("--suffixes", o.suffixes, "Suffix list, one per line");
  stance->add_option("--seed", o.seed, "Fold and solver seed");
  stance->add_option("--c", o.c, "SVM box constraint");
  stance->add_option("--folds", o.folds, "Number of cross-validation folds");
  stance->add_option("--threads", o.threads, "Worker threads (0: all cores)");
  stance->add_option("--out", o.out, "Directory for report, CSV and manifest");

  auto* gen = app.add_subcommand("gen", "Generate a synthetic corpus and gazetteer");
  gen->add_option("--out", o.out, "Output directory")->required();
  gen->add_option("--seed", o.seed, "Generator seed");
  gen->add_option("--mode", o.mode, "lexicon or entity");
  gen->add_option("--size", o.size, "Tweets per target and stance");
  gen->add_option("--sizes", o.sizes, "Four counts: T1 favor, T1 against, T2 favor, T2 against");
  gen->add_option("--inflected", o.inflected, "Fraction of inflected entity mentions");
  gen->add_option("--lowercase", o.lowercase, "Fraction of lowercased entity mentions");
  gen->add_option("--stripped", o.stripped, "Fraction of mentions without diacritics");
  gen->add_option("--hashtags", o.hashtags, "Fraction of tweets with a hashtag");

  auto* rerun = app.add_subcommand("rerun", "Repeat a run recorded in a manifest");
  rerun->add_option("--manifest", o.manifest, "manifest.json of an earlier run")->required();
  rerun->add_option("--out", o.out, "Output directory (default: the manifest's)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << STANCEFORGE_VERSION << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\nRun with --help for usage.\n";
    return kExitUsage;
  }

  try {
    if (stats->parsed()) return cmd_stats(o, out);
    if (ner_eval->parsed()) return cmd_ner_eval(o, out);
    if (stance->parsed()) return cmd_stance(o, out);
    if (gen->parsed()) return cmd_gen(o, out);
    if (rerun->parsed()) return cmd_rerun(o, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace stanceforge::cli
