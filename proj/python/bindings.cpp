#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "mpr/data_model.hpp"
#include "mpr/encoder.hpp"
#include "mpr/eval.hpp"
#include "mpr/index.hpp"
#include "mpr/lexical.hpp"
#include "mpr/synth.hpp"
#include "mpr/trainer.hpp"

namespace py = pybind11;
using namespace mpr;

namespace {

py::list ranked(const SearchResult& r) {
  py::list out;
  for (const auto& h : r.ranked) out.append(py::make_tuple(h.id, h.score));
  return out;
}

DatasetFormat format_of(const std::string& tag) { return parse_dataset_format(tag); }

}  // namespace

PYBIND11_MODULE(_mpr, m) {
  m.doc() = "Multi-positive dense passage retrieval";

  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);

  py::class_<Passage>(m, "Passage")
      .def(py::init<>())
      .def(py::init([](std::uint64_t id, std::string title, std::string body) {
             return Passage{id, std::move(title), std::move(body)};
           }),
           py::arg("id"), py::arg("title"), py::arg("body"))
      .def_readwrite("id", &Passage::id)
      .def_readwrite("title", &Passage::title)
      .def_readwrite("body", &Passage::body)
      .def("__eq__", [](const Passage& a, const Passage& b) { return a == b; })
      .def("__repr__", [](const Passage& p) { return "<Passage " + std::to_string(p.id) + ">"; });

  py::class_<QuestionRecord>(m, "QuestionRecord")
      .def_readonly("id", &QuestionRecord::id)
      .def_readonly("question", &QuestionRecord::question)
      .def_readonly("positives", &QuestionRecord::positives)
      .def_readonly("hard_negatives", &QuestionRecord::hard_negatives)
      .def_property_readonly("answers", [](const QuestionRecord& r) {
        std::vector<std::string> out;
        for (const auto& a : r.answers) out.push_back(a.pattern());
        return out;
      });

  py::class_<DatasetStats>(m, "DatasetStats")
      .def_readonly("p1", &DatasetStats::p1)
      .def_readonly("p2", &DatasetStats::p2)
      .def_readonly("p3", &DatasetStats::p3)
      .def_readonly("total", &DatasetStats::total)
      .def_readonly("delta", &DatasetStats::delta)
      .def_readonly("delta_defined", &DatasetStats::delta_defined);

  m.def("ingest_dataset",
        [](const std::filesystem::path& path, const std::string& format) {
          return ingest_dataset(path, format_of(format));
        },
        py::arg("path"), py::arg("format") = "jsonl");
  m.def("parse_dataset",
        [](const std::string& text, const std::string& format) {
          return parse_dataset(text, format_of(format));
        },
        py::arg("text"), py::arg("format") = "jsonl");
  m.def("compute_stats",
        [](const std::vector<QuestionRecord>& records, std::size_t m) { return compute_stats(records, m); },
        py::arg("records"), py::arg("max_positives") = 3);
  m.def("read_corpus", &read_corpus, py::arg("path"));
  m.def("chunk_documents",
        [](const std::vector<std::pair<std::string, std::string>>& docs, std::size_t words,
           std::uint64_t first_id) {
          std::vector<Document> d;
          for (const auto& [title, body] : docs) d.push_back({title, body});
          return chunk_documents(d, words, first_id);
        },
        py::arg("docs"), py::arg("words_per_passage") = 100, py::arg("first_id") = 0);
  m.def("tokenize", &tokenize, py::arg("text"), py::arg("buckets"));

  py::class_<EncoderParams>(m, "EncoderParams")
      .def_readonly("seed", &EncoderParams::seed)
      .def_readonly("vocab", &EncoderParams::vocab)
      .def_readonly("embed_dim", &EncoderParams::embed_dim)
      .def_readonly("out_dim", &EncoderParams::out_dim)
      .def("parameter_count", &EncoderParams::parameter_count)
      .def("__eq__", [](const EncoderParams& a, const EncoderParams& b) { return a == b; });
  m.def("init_params", &init_params, py::arg("seed"), py::arg("vocab"), py::arg("embed_dim"),
        py::arg("out_dim"));
  m.def("save_checkpoint", &save_checkpoint, py::arg("path"), py::arg("params"));
  m.def("load_checkpoint", &load_checkpoint, py::arg("path"));
  m.def("encode_question", &encode_question, py::arg("params"), py::arg("question"));

  m.def("nll_loss",
        [](const std::vector<double>& sims, std::size_t pos) {
          auto r = nll_loss(sims, pos);
          return py::make_tuple(r.loss, r.grad);
        },
        py::arg("sims"), py::arg("positive_index"));
  m.def("bce_loss",
        [](const std::vector<double>& sims, const std::vector<bool>& mask) {
          std::vector<std::uint8_t> m8(mask.begin(), mask.end());
          auto r = bce_loss(sims, m8);
          return py::make_tuple(r.loss, r.grad);
        },
        py::arg("sims"), py::arg("mask"));
  m.def("lr_schedule", &lr_schedule, py::arg("step"), py::arg("total_steps"),
        py::arg("warmup_steps"), py::arg("lr_max"));

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("max_positives", &TrainConfig::max_positives)
      .def_property(
          "loss", [](const TrainConfig& c) { return std::string(to_string(c.loss)); },
          [](TrainConfig& c, const std::string& tag) { c.loss = parse_loss_kind(tag); })
      .def_readwrite("epochs", &TrainConfig::epochs)
      .def_readwrite("lr", &TrainConfig::lr)
      .def_readwrite("warmup_steps", &TrainConfig::warmup_steps)
      .def_readwrite("dropout_rate", &TrainConfig::dropout_rate)
      .def_readwrite("seed", &TrainConfig::seed)
      .def_readwrite("vocab", &TrainConfig::vocab)
      .def_readwrite("embed_dim", &TrainConfig::embed_dim)
      .def_readwrite("out_dim", &TrainConfig::out_dim)
      .def("validate", &TrainConfig::validate);

  m.def("train",
        [](const std::vector<QuestionRecord>& records, const TrainConfig& config) {
          TrainResult r;
          {
            py::gil_scoped_release release;
            r = train(records, config);
          }
          py::list log;
          for (const auto& e : r.log) {
            py::dict d;
            d["epoch"] = e.epoch;
            d["mean_loss"] = e.mean_loss;
            d["lr_last"] = e.lr_last;
            d["wall_ms"] = e.wall_ms;
            log.append(d);
          }
          return py::make_tuple(r.params, log);
        },
        py::arg("records"), py::arg("config"));

  py::class_<DenseIndex>(m, "DenseIndex")
      .def_property_readonly("dim", &DenseIndex::dim)
      .def_property_readonly("ids", &DenseIndex::ids)
      .def("__len__", &DenseIndex::size)
      .def("__eq__", [](const DenseIndex& a, const DenseIndex& b) { return a == b; });
  m.def("encode_corpus",
        [](const EncoderParams& params, const std::vector<Passage>& passages, std::size_t shard) {
          py::gil_scoped_release release;
          return encode_corpus(params, passages, shard);
        },
        py::arg("params"), py::arg("passages"), py::arg("shard_size") = 1024);
  m.def("search_top_k",
        [](const DenseIndex& index, const std::vector<double>& q, std::size_t k) {
          return ranked(search_top_k(index, q, k));
        },
        py::arg("index"), py::arg("query"), py::arg("k"));
  m.def("save_index", &save_index, py::arg("path"), py::arg("index"));
  m.def("load_index", &load_index, py::arg("path"));

  py::class_<LexicalIndex>(m, "LexicalIndex")
      .def_readonly("k1", &LexicalIndex::k1)
      .def_readonly("b", &LexicalIndex::b)
      .def_readonly("avg_len", &LexicalIndex::avg_len)
      .def("__len__", &LexicalIndex::size)
      .def("df", &LexicalIndex::df)
      .def("__eq__", [](const LexicalIndex& a, const LexicalIndex& b) { return a == b; });
  m.def("build_lexical_index",
        [](const std::vector<Passage>& passages, double k1, double b) {
          return build_lexical_index(passages, k1, b);
        },
        py::arg("passages"), py::arg("k1") = 0.9,
        py::arg("b") = 0.4);
  m.def("bm25_top_k",
        [](const LexicalIndex& lex, const std::string& q, std::size_t k) {
          return ranked(bm25_top_k(lex, q, k));
        },
        py::arg("index"), py::arg("query"), py::arg("k"));
  m.def("hybrid_top_k",
        [](const LexicalIndex& lex, const DenseIndex& dense, const EncoderParams& params,
           const std::string& q, std::size_t k, double lambda) {
          return ranked(hybrid_top_k(lex, dense, params, q, k, lambda));
        },
        py::arg("lexical"), py::arg("dense"), py::arg("params"), py::arg("query"), py::arg("k"),
        py::arg("lam") = kDefaultHybridLambda);
  m.def("save_lexical_index", &save_lexical_index, py::arg("path"), py::arg("index"));
  m.def("load_lexical_index", &load_lexical_index, py::arg("path"));

  m.def("evaluate_dense",
        [](const std::vector<QuestionRecord>& questions, const std::vector<Passage>& passages,
           const EncoderParams& params, const DenseIndex& index, const std::vector<std::size_t>& ks,
           bool match_title) {
          py::gil_scoped_release release;
          const Corpus corpus(passages);
          const std::size_t depth = *std::max_element(ks.begin(), ks.end());
          return evaluate(questions, corpus, dense_retriever(params, index, depth), ks, match_title)
              .accuracy;
        },
        py::arg("questions"), py::arg("corpus"), py::arg("params"), py::arg("index"),
        py::arg("ks") = std::vector<std::size_t>{20, 100}, py::arg("match_title") = false);
  m.def("ablation",
        [](const std::vector<QuestionRecord>& questions, const std::vector<Passage>& passages,
           const std::vector<std::size_t>& m_values, const TrainConfig& config) {
          std::vector<AblationRow> rows;
          {
            py::gil_scoped_release release;
            rows = ablation(questions, Corpus(passages), m_values, config);
          }
          py::list out;
          for (const auto& r : rows) out.append(py::make_tuple(r.max_positives, r.top20, r.top100));
          return out;
        },
        py::arg("questions"), py::arg("corpus"), py::arg("m_values") = std::vector<std::size_t>{1, 2, 3},
        py::arg("config"));

  py::class_<SynthConfig>(m, "SynthConfig")
      .def(py::init<>())
      .def_readwrite("seed", &SynthConfig::seed)
      .def_readwrite("passages", &SynthConfig::passages)
      .def_readwrite("questions", &SynthConfig::questions)
      .def_readwrite("test_questions", &SynthConfig::test_questions)
      .def_readwrite("golds_per_topic", &SynthConfig::golds_per_topic)
      .def_readwrite("concepts", &SynthConfig::concepts)
      .def_readwrite("filler_words", &SynthConfig::filler_words)
      .def_readwrite("buckets", &SynthConfig::buckets);
  py::class_<SynthBenchmark>(m, "SynthBenchmark")
      .def_readonly("corpus", &SynthBenchmark::corpus)
      .def_readonly("train", &SynthBenchmark::train)
      .def_readonly("test", &SynthBenchmark::test);
  m.def("generate_synthetic", &generate_synthetic, py::arg("config"));
  m.def("write_synthetic", &write_synthetic, py::arg("dir"), py::arg("bench"));
}
