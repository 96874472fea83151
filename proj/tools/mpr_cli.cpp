#include <openssl/evp.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "mpr/common.hpp"
#include "mpr/data_model.hpp"
#include "mpr/encoder.hpp"
#include "mpr/eval.hpp"
#include "mpr/index.hpp"
#include "mpr/lexical.hpp"
#include "mpr/synth.hpp"
#include "mpr/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr const char* kToolVersion = "0.1.0";

enum Exit { kOk = 0, kInputError = 2, kInsufficientData = 3, kBadFlags = 4 };

/// Invalid flag combination detected by the CLI itself.
struct FlagError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return hex.str();
}

class Manifest {
 public:
  Manifest(std::string command, std::uint64_t seed) {
    doc_["tool"] = "mpr";
    doc_["version"] = kToolVersion;
    doc_["command"] = std::move(command);
    doc_["seed"] = seed;
    doc_["config"] = ordered_json::object();
    doc_["inputs"] = ordered_json::array();
    doc_["outputs"] = ordered_json::array();
  }

  ordered_json& config() { return doc_["config"]; }

  void input(const fs::path& p) {
    doc_["inputs"].push_back({{"path", p.string()}, {"sha256", sha256_file(p)}});
  }
  void output(const fs::path& p) {
    doc_["outputs"].push_back({{"path", p.string()}, {"sha256", sha256_file(p)}});
  }

  void write(const fs::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << doc_.dump(2) << '\n';
  }

 private:
  ordered_json doc_;
};

fs::path sidecar(const fs::path& artifact, const std::string& suffix) {
  return fs::path(artifact.string() + suffix);
}

std::string format_accuracy(double pct) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", pct);
  return buf;
}

// Training flags shared by train and ablate.
struct TrainFlags {
  mpr::TrainConfig cfg;
  std::string loss = "bce";
  std::size_t warmup = 0;

  void attach(CLI::App* app, bool with_max_positives) {
    app->add_option("--batch-size", cfg.batch_size, "Questions per batch")->capture_default_str();
    if (with_max_positives) {
      app->add_option("--max-positives", cfg.max_positives, "Positives per question (m)")
          ->capture_default_str();
    }
    app->add_option("--loss", loss, "bce or nll")->capture_default_str();
    app->add_option("--epochs", cfg.epochs)->capture_default_str();
    app->add_option("--lr", cfg.lr, "Peak learning rate")->capture_default_str();
    app->add_option("--warmup", warmup, "Warmup steps (default 10% of all steps)");
    app->add_option("--dropout", cfg.dropout_rate)->capture_default_str();
    app->add_option("--seed", cfg.seed)->capture_default_str();
    app->add_option("--vocab", cfg.vocab, "Hash buckets")->capture_default_str();
    app->add_option("--embed-dim", cfg.embed_dim)->capture_default_str();
    app->add_option("--out-dim", cfg.out_dim)->capture_default_str();
  }

  mpr::TrainConfig resolve(CLI::App* app) {
    try {
      cfg.loss = mpr::parse_loss_kind(loss);
    } catch (const mpr::ConfigError& e) {
      throw FlagError(e.what());
    }
    if (app->count("--warmup")) cfg.warmup_steps = warmup;
    return cfg;
  }

  static void describe(ordered_json& j, const mpr::TrainConfig& c) {
    j["batch_size"] = c.batch_size;
    j["max_positives"] = c.max_positives;
    j["loss"] = std::string(mpr::to_string(c.loss));
    j["epochs"] = c.epochs;
    j["lr"] = c.lr;
    if (c.warmup_steps) {
      j["warmup_steps"] = *c.warmup_steps;
    } else {
      j["warmup_steps"] = nullptr;
    }
    j["dropout"] = c.dropout_rate;
    j["vocab"] = c.vocab;
    j["embed_dim"] = c.embed_dim;
    j["out_dim"] = c.out_dim;
  }
};

std::vector<mpr::QuestionRecord> load_questions(const fs::path& path, const std::string& format) {
  mpr::DatasetFormat fmt;
  try {
    fmt = mpr::parse_dataset_format(format);
  } catch (const mpr::ConfigError& e) {
    throw FlagError(e.what());
  }
  return mpr::ingest_dataset(path, fmt);
}

// Concatenation of several datasets, in argument order.
std::vector<mpr::QuestionRecord> load_all(const std::vector<std::string>& paths,
                                          const std::string& format) {
  std::vector<mpr::QuestionRecord> all;
  for (const auto& p : paths) {
    auto part = load_questions(p, format);
    all.insert(all.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  return all;
}

std::vector<mpr::Passage> load_corpus(const fs::path& path) {
  auto corpus = mpr::read_corpus(path);
  if (corpus.empty()) throw mpr::ParseError("corpus " + path.string() + " has no passages");
  return corpus;
}

// ---- stats ----------------------------------------------------------------

struct StatsArgs {
  std::vector<std::string> datasets;
  std::string format = "jsonl";
};

int run_stats(const StatsArgs& a) {
  std::cout << "dataset\tp1\tp2\tp3\ttotal\tdelta\n";
  for (const auto& path : a.datasets) {
    const auto records = load_questions(path, a.format);
    if (records.empty()) throw mpr::ParseError("dataset " + path + " is empty");
    const mpr::DatasetStats s = mpr::compute_stats(records);
    std::cout << fs::path(path).stem().string() << '\t' << s.p1 << '\t' << s.p2 << '\t' << s.p3 << '\t'
              << s.total << '\t'
              << (s.delta_defined ? "δ=" + format_accuracy(100.0 * s.delta) + "%" : "undefined")
              << '\n';
  }
  return kOk;
}

// ---- train ----------------------------------------------------------------

struct TrainArgs {
  std::vector<std::string> datasets;
  std::string format = "jsonl";
  std::string out;
  std::string log;
  TrainFlags flags;
};

int run_train(TrainArgs& a, CLI::App* app) {
  const mpr::TrainConfig cfg = a.flags.resolve(app);
  try {
    cfg.validate();
  } catch (const mpr::ConfigError& e) {
    throw FlagError(e.what());
  }
  const auto records = load_all(a.datasets, a.format);
  const mpr::TrainResult result = mpr::train(records, cfg);

  const fs::path out(a.out);
  mpr::save_checkpoint(out, result.params);
  const fs::path log_path = a.log.empty() ? sidecar(out, ".log.jsonl") : fs::path(a.log);
  {
    std::ofstream log(log_path, std::ios::binary);
    if (!log) throw std::runtime_error("cannot write " + log_path.string());
    for (const auto& e : result.log) {
      ordered_json j;
      j["epoch"] = e.epoch;
      j["mean_loss"] = e.mean_loss;
      j["lr_last"] = e.lr_last;
      j["wall_ms"] = e.wall_ms;
      log << j.dump() << '\n';
    }
  }
  for (const auto& e : result.log) {
    std::cerr << "epoch " << e.epoch << " loss " << e.mean_loss << '\n';
  }

  Manifest m("train", cfg.seed);
  TrainFlags::describe(m.config(), cfg);
  m.config()["format"] = a.format;
  for (const auto& d : a.datasets) m.input(d);
  m.output(out);
  m.write(sidecar(out, ".manifest.json"));
  return kOk;
}

// ---- encode ---------------------------------------------------------------

struct EncodeArgs {
  std::string checkpoint;
  std::string corpus;
  std::string out;
  std::size_t shard_size = 1024;
};

int run_encode(const EncodeArgs& a) {
  if (a.shard_size == 0) throw FlagError("--shard-size must be >= 1");
  const auto params = mpr::load_checkpoint(a.checkpoint);
  const auto corpus = load_corpus(a.corpus);
  const auto index = mpr::encode_corpus(params, corpus, a.shard_size);
  mpr::save_index(a.out, index);

  Manifest m("encode", params.seed);
  m.config()["shard_size"] = a.shard_size;
  m.input(a.checkpoint);
  m.input(a.corpus);
  m.output(a.out);
  m.write(sidecar(a.out, ".manifest.json"));
  return kOk;
}

// ---- bm25-index -----------------------------------------------------------

struct LexArgs {
  std::string corpus;
  std::string out;
  double k1 = 0.9;
  double b = 0.4;
};

int run_bm25_index(const LexArgs& a) {
  const auto corpus = load_corpus(a.corpus);
  const auto lex = mpr::build_lexical_index(corpus, a.k1, a.b);
  mpr::save_lexical_index(a.out, lex);

  Manifest m("bm25-index", 0);
  m.config()["k1"] = a.k1;
  m.config()["b"] = a.b;
  m.input(a.corpus);
  m.output(a.out);
  m.write(sidecar(a.out, ".manifest.json"));
  return kOk;
}

// ---- retrieve -------------------------------------------------------------

struct RetrieveArgs {
  std::string dataset;
  std::string format = "jsonl";
  std::string retriever = "dense";
  std::string checkpoint;
  std::string index;
  std::string lexical;
  std::string corpus;
  std::vector<std::size_t> ks{20, 100};
  double lambda = mpr::kDefaultHybridLambda;
  std::string out;
};

int run_retrieve(const RetrieveArgs& a) {
  const bool dense = a.retriever == "dense" || a.retriever == "hybrid";
  const bool sparse = a.retriever == "bm25" || a.retriever == "hybrid";
  if (!dense && !sparse) throw FlagError("--retriever must be dense, bm25 or hybrid");
  if (dense && (a.checkpoint.empty() || a.index.empty())) {
    throw FlagError("--retriever " + a.retriever + " needs --checkpoint and --index");
  }
  if (sparse && a.lexical.empty() == a.corpus.empty()) {
    throw FlagError("--retriever " + a.retriever + " needs exactly one of --lexical-index or --corpus");
  }
  if (a.ks.empty()) throw FlagError("--k needs at least one value");
  for (std::size_t k : a.ks) {
    if (k == 0) throw FlagError("--k values must be >= 1");
  }
  if (a.lambda < 0.0) throw FlagError("--lambda must be >= 0");
  const std::size_t depth = *std::max_element(a.ks.begin(), a.ks.end());

  const auto questions = load_questions(a.dataset, a.format);
  mpr::EncoderParams params;
  mpr::DenseIndex index;
  mpr::LexicalIndex lex;
  if (dense) {
    params = mpr::load_checkpoint(a.checkpoint);
    index = mpr::load_index(a.index);
    if (index.dim() != params.out_dim) {
      throw mpr::FormatError("index dimension " + std::to_string(index.dim()) +
                             " does not match checkpoint output dimension " +
                             std::to_string(params.out_dim));
    }
  }
  if (sparse) {
    lex = a.lexical.empty() ? mpr::build_lexical_index(load_corpus(a.corpus))
                            : mpr::load_lexical_index(a.lexical);
  }

  std::vector<mpr::SearchResult> results(questions.size());
  mpr::parallel_for(questions.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto& q = questions[i].question;
      if (a.retriever == "dense") {
        results[i] = mpr::search_top_k(index, mpr::encode_question(params, q), depth);
      } else if (a.retriever == "bm25") {
        results[i] = mpr::bm25_top_k(lex, q, depth);
      } else {
        results[i] = mpr::hybrid_top_k(lex, index, params, q, depth, a.lambda);
      }
    }
  });

  std::ofstream out(a.out, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + a.out);
  for (std::size_t i = 0; i < questions.size(); ++i) {
    ordered_json j;
    j["question_id"] = questions[i].id;
    j["ks"] = a.ks;
    ordered_json ranked = ordered_json::array();
    for (const auto& r : results[i].ranked) ranked.push_back({{"id", r.id}, {"score", r.score}});
    j["ranked"] = std::move(ranked);
    out << j.dump() << '\n';
  }
  out.close();

  Manifest m("retrieve", 0);
  m.config()["retriever"] = a.retriever;
  m.config()["ks"] = a.ks;
  m.config()["lambda"] = a.lambda;
  m.config()["format"] = a.format;
  m.input(a.dataset);
  for (const auto* p : {&a.checkpoint, &a.index, &a.lexical, &a.corpus}) {
    if (!p->empty()) m.input(*p);
  }
  m.output(a.out);
  m.write(sidecar(a.out, ".manifest.json"));
  return kOk;
}

// ---- eval -----------------------------------------------------------------

struct EvalArgs {
  std::string dataset;
  std::string format = "jsonl";
  std::string corpus;
  std::string results;
  std::vector<std::size_t> ks;
  bool match_title = false;
  std::string out;
  std::string ranks;
};

int run_eval(const EvalArgs& a) {
  const auto questions = load_questions(a.dataset, a.format);
  if (questions.empty()) throw mpr::ParseError("dataset " + a.dataset + " is empty");
  const mpr::Corpus corpus(load_corpus(a.corpus));

  std::ifstream in(a.results, std::ios::binary);
  if (!in) throw mpr::ParseError("cannot open results file " + a.results);
  std::vector<mpr::SearchResult> results;
  std::vector<std::size_t> ks = a.ks;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const std::size_t i = results.size();
      if (i >= questions.size() || j.at("question_id").get<std::uint64_t>() != questions[i].id) {
        throw mpr::ParseError("results line " + std::to_string(lineno) +
                                  " does not match the dataset's question order",
                              lineno);
      }
      mpr::SearchResult r;
      for (const auto& e : j.at("ranked")) {
        r.ranked.push_back({e.at("id").get<std::uint64_t>(), e.at("score").get<double>()});
      }
      results.push_back(std::move(r));
      if (a.ks.empty() && j.contains("ks")) ks = j.at("ks").get<std::vector<std::size_t>>();
    } catch (const nlohmann::json::exception& e) {
      throw mpr::ParseError(a.results + ":" + std::to_string(lineno) + ": " + e.what(), lineno);
    }
  }
  if (results.size() != questions.size()) {
    throw mpr::ParseError("results file has " + std::to_string(results.size()) + " entries for " +
                          std::to_string(questions.size()) + " questions");
  }
  if (ks.empty()) ks.assign(mpr::kDefaultKs.begin(), mpr::kDefaultKs.end());
  for (std::size_t k : ks) {
    if (k == 0) throw FlagError("--k values must be >= 1");
  }

  const auto report = mpr::evaluate_results(questions, corpus, results, ks, a.match_title);
  for (const auto& [k, acc] : report.accuracy) {
    std::cout << "top-" << k << '\t' << format_accuracy(acc) << '\n';
  }

  if (!a.out.empty()) {
    ordered_json j;
    j["questions"] = questions.size();
    j["match_title"] = a.match_title;
    ordered_json acc = ordered_json::object();
    for (const auto& [k, v] : report.accuracy) acc[std::to_string(k)] = v;
    j["accuracy"] = std::move(acc);
    std::ofstream out(a.out, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + a.out);
    out << j.dump(2) << '\n';
  }
  if (!a.ranks.empty()) {
    std::ofstream out(a.ranks, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + a.ranks);
    out << "question_id\tfirst_hit_rank\n";
    for (const auto& h : report.hits) {
      out << h.question_id << '\t';
      if (h.first_hit_rank) {
        out << *h.first_hit_rank;
      } else {
        out << '-';
      }
      out << '\n';
    }
  }
  return kOk;
}

// ---- ablate ---------------------------------------------------------------

struct AblateArgs {
  std::vector<std::string> datasets;
  std::string eval_dataset;
  std::string format = "jsonl";
  std::string corpus;
  std::vector<std::size_t> m_values{1, 2, 3};
  std::string out;
  TrainFlags flags;
};

int run_ablate(AblateArgs& a, CLI::App* app) {
  mpr::TrainConfig cfg = a.flags.resolve(app);
  if (a.m_values.empty()) throw FlagError("--m needs at least one value");
  for (std::size_t m : a.m_values) {
    mpr::TrainConfig c = cfg;
    c.max_positives = m;
    try {
      c.validate();
    } catch (const mpr::ConfigError& e) {
      throw FlagError(e.what());
    }
  }
  const auto train_q = load_all(a.datasets, a.format);
  const auto eval_q = a.eval_dataset.empty() ? train_q : load_questions(a.eval_dataset, a.format);
  const mpr::Corpus corpus(load_corpus(a.corpus));
  const auto rows = mpr::ablation(train_q, eval_q, corpus, a.m_values, cfg);

  std::ostringstream table;
  table << "m\ttop-20\ttop-100\n";
  for (const auto& r : rows) {
    table << r.max_positives << '\t' << format_accuracy(r.top20) << '\t' << format_accuracy(r.top100)
          << '\n';
  }
  std::cout << table.str();
  if (!a.out.empty()) {
    std::ofstream out(a.out, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + a.out);
    out << table.str();
    out.close();
    Manifest m("ablate", cfg.seed);
    TrainFlags::describe(m.config(), cfg);
    m.config()["m"] = a.m_values;
    for (const auto& d : a.datasets) m.input(d);
    if (!a.eval_dataset.empty()) m.input(a.eval_dataset);
    m.input(a.corpus);
    m.output(a.out);
    m.write(sidecar(a.out, ".manifest.json"));
  }
  return kOk;
}

// ---- gen-synth ------------------------------------------------------------

struct SynthArgs {
  mpr::SynthConfig cfg;
  std::string out_dir;
};

int run_gen_synth(const SynthArgs& a) {
  mpr::SynthBenchmark bench;
  try {
    bench = mpr::generate_synthetic(a.cfg);
  } catch (const std::invalid_argument& e) {
    throw FlagError(e.what());
  }
  const fs::path dir(a.out_dir);
  mpr::write_synthetic(dir, bench);

  Manifest m("gen-synth", a.cfg.seed);
  auto& c = m.config();
  c["passages"] = a.cfg.passages;
  c["questions"] = a.cfg.questions;
  c["test_questions"] = a.cfg.test_questions;
  c["golds_per_topic"] = a.cfg.golds_per_topic;
  c["buckets"] = a.cfg.buckets;
  for (const char* name : {"corpus.tsv", "train.jsonl", "test.jsonl"}) m.output(dir / name);
  m.write(dir / "manifest.json");
  std::cerr << "wrote " << bench.corpus.size() << " passages, " << bench.train.size() << " train and "
            << bench.test.size() << " test questions to " << dir.string() << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-positive dense passage retrieval"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  StatsArgs stats;
  auto* c_stats = app.add_subcommand("stats", "Positive-count statistics per dataset");
  c_stats->add_option("datasets", stats.datasets, "Dataset files")->required()->check(CLI::ExistingFile);
  c_stats->add_option("--format", stats.format, "jsonl or dpr-json")->capture_default_str();

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "Train both encoder towers");
  c_train->add_option("datasets", tr.datasets, "Training datasets (concatenated)")->required();
  c_train->add_option("--format", tr.format)->capture_default_str();
  c_train->add_option("--out", tr.out, "Checkpoint path")->required();
  c_train->add_option("--log", tr.log, "Training log (default <out>.log.jsonl)");
  tr.flags.attach(c_train, true);

  EncodeArgs enc;
  auto* c_encode = app.add_subcommand("encode", "Encode a corpus into a dense index");
  c_encode->add_option("--checkpoint", enc.checkpoint)->required();
  c_encode->add_option("--corpus", enc.corpus)->required();
  c_encode->add_option("--out", enc.out)->required();
  c_encode->add_option("--shard-size", enc.shard_size)->capture_default_str();

  LexArgs lx;
  auto* c_lex = app.add_subcommand("bm25-index", "Build a BM25 inverted index");
  c_lex->add_option("--corpus", lx.corpus)->required();
  c_lex->add_option("--out", lx.out)->required();
  c_lex->add_option("--k1", lx.k1)->capture_default_str();
  c_lex->add_option("--b", lx.b)->capture_default_str();

  RetrieveArgs ret;
  auto* c_ret = app.add_subcommand("retrieve", "Retrieve passages for every question");
  c_ret->add_option("dataset", ret.dataset)->required();
  c_ret->add_option("--format", ret.format)->capture_default_str();
  c_ret->add_option("--retriever", ret.retriever, "dense, bm25 or hybrid")->capture_default_str();
  c_ret->add_option("--checkpoint", ret.checkpoint);
  c_ret->add_option("--index", ret.index, "Dense index");
  c_ret->add_option("--lexical-index", ret.lexical, "BM25 index");
  c_ret->add_option("--corpus", ret.corpus, "Build the BM25 index from this corpus");
  c_ret->add_option("--k", ret.ks, "Cutoffs, comma separated")->delimiter(',')->capture_default_str();
  c_ret->add_option("--lambda", ret.lambda, "Hybrid BM25 weight")->capture_default_str();
  c_ret->add_option("--out", ret.out, "Results (JSON lines)")->required();

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "Top-k retrieval accuracy");
  c_eval->add_option("dataset", ev.dataset)->required();
  c_eval->add_option("--format", ev.format)->capture_default_str();
  c_eval->add_option("--corpus", ev.corpus)->required();
  c_eval->add_option("--results", ev.results)->required();
  c_eval->add_option("--k", ev.ks, "Cutoffs (default: those recorded by retrieve)")->delimiter(',');
  c_eval->add_flag("--match-title", ev.match_title, "Also match answers in titles");
  c_eval->add_option("--out", ev.out, "JSON report");
  c_eval->add_option("--ranks", ev.ranks, "Per-question first-hit ranks (TSV)");

  AblateArgs ab;
  auto* c_ab = app.add_subcommand("ablate", "Train and evaluate one model per max-positives value");
  c_ab->add_option("datasets", ab.datasets, "Training datasets (concatenated)")->required();
  c_ab->add_option("--eval-dataset", ab.eval_dataset, "Evaluation dataset (default: training set)");
  c_ab->add_option("--format", ab.format)->capture_default_str();
  c_ab->add_option("--corpus", ab.corpus)->required();
  c_ab->add_option("--m", ab.m_values, "Max-positives values")->delimiter(',')->capture_default_str();
  c_ab->add_option("--out", ab.out, "Table (TSV)");
  ab.flags.attach(c_ab, false);

  SynthArgs sy;
  auto* c_syn = app.add_subcommand("gen-synth", "Write a synthetic retrieval benchmark");
  c_syn->add_option("--out-dir", sy.out_dir)->required();
  c_syn->add_option("--seed", sy.cfg.seed)->capture_default_str();
  c_syn->add_option("--passages", sy.cfg.passages)->capture_default_str();
  c_syn->add_option("--questions", sy.cfg.questions)->capture_default_str();
  c_syn->add_option("--test-questions", sy.cfg.test_questions)->capture_default_str();
  c_syn->add_option("--golds-per-topic", sy.cfg.golds_per_topic)->capture_default_str();
  c_syn->add_option("--buckets", sy.cfg.buckets)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kBadFlags;
  }

  try {
    if (*c_stats) return run_stats(stats);
    if (*c_train) return run_train(tr, c_train);
    if (*c_encode) return run_encode(enc);
    if (*c_lex) return run_bm25_index(lx);
    if (*c_ret) return run_retrieve(ret);
    if (*c_eval) return run_eval(ev);
    if (*c_ab) return run_ablate(ab, c_ab);
    if (*c_syn) return run_gen_synth(sy);
  } catch (const FlagError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBadFlags;
  } catch (const mpr::InsufficientDataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInsufficientData;
  } catch (const mpr::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBadFlags;
  } catch (const mpr::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const mpr::FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  }
  return kOk;
}
