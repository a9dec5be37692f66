#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>

#include "tokengraft/tokengraft.hpp"

namespace py = pybind11;
namespace tg = tokengraft;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

tg::EmbeddingMatrix to_matrix(const FloatArray& a, tg::MatrixRole role) {
  if (a.ndim() != 2) throw tg::InputError("embedding array must be 2-dimensional");
  const auto rows = static_cast<std::size_t>(a.shape(0));
  const auto dim = static_cast<std::size_t>(a.shape(1));
  std::vector<float> data(a.data(), a.data() + rows * dim);
  return tg::EmbeddingMatrix(rows, dim, std::move(data), role);
}

FloatArray to_array(const tg::EmbeddingMatrix& m) {
  FloatArray out({static_cast<py::ssize_t>(m.rows()), static_cast<py::ssize_t>(m.dim())});
  if (!m.data().empty()) std::memcpy(out.mutable_data(), m.data().data(), m.data().size() * 4);
  return out;
}

py::bytes decode_token_bytes(const tg::BpeTokenizer& t, tg::TokenId id) {
  return py::bytes(t.decode_token(id));
}

}  // namespace

PYBIND11_MODULE(_tokengraft, m) {
  m.doc() = "Tokenizer transplantation and supertokenizer toolkit";

  // Translators run newest-first, so subclasses are registered after the base.
  auto error = py::register_exception<tg::Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<tg::ConfigError>(m, "ConfigError", error.ptr());
  py::register_exception<tg::FormatError>(m, "FormatError", error.ptr());
  py::register_exception<tg::InputError>(m, "InputError", error.ptr());

  py::class_<tg::BpeTokenizer>(m, "Tokenizer")
      .def_static("load", &tg::BpeTokenizer::load, py::arg("path"))
      .def_static("from_json", &tg::BpeTokenizer::from_json, py::arg("text"))
      .def("to_json", &tg::BpeTokenizer::to_json)
      .def("save", &tg::BpeTokenizer::save, py::arg("path"))
      .def("encode", &tg::BpeTokenizer::encode, py::arg("text"),
           py::call_guard<py::gil_scoped_release>())
      .def(
          "decode",
          [](const tg::BpeTokenizer& t, const std::vector<tg::TokenId>& ids) {
            return py::bytes(t.decode(ids)).attr("decode")("utf-8", "replace");
          },
          py::arg("ids"))
      .def("decode_bytes",
           [](const tg::BpeTokenizer& t, const std::vector<tg::TokenId>& ids) {
             return py::bytes(t.decode(ids));
           })
      .def("decode_token", &decode_token_bytes, py::arg("id"))
      .def("token_to_id",
           [](const tg::BpeTokenizer& t, const std::string& s) { return t.vocab().find(s); })
      .def("id_to_token", [](const tg::BpeTokenizer& t, tg::TokenId id) { return t.vocab().token(id); })
      .def_property_readonly("vocab", [](const tg::BpeTokenizer& t) { return t.vocab().entries(); })
      .def_property_readonly("merges",
                             [](const tg::BpeTokenizer& t) {
                               std::vector<std::pair<std::string, std::string>> out;
                               for (const auto& r : t.merges()) out.emplace_back(r.left, r.right);
                               return out;
                             })
      .def_property_readonly("specials",
                             [](const tg::BpeTokenizer& t) {
                               return std::vector<std::string>(t.vocab().specials().begin(),
                                                               t.vocab().specials().end());
                             })
      .def("__len__", &tg::BpeTokenizer::size);

  m.def(
      "train_bpe",
      [](const std::vector<std::string>& corpus, std::size_t vocab_size,
         const std::vector<std::string>& specials) {
        py::gil_scoped_release release;
        return tg::train_bpe(corpus, vocab_size, specials);
      },
      py::arg("corpus"), py::arg("vocab_size"), py::arg("specials") = std::vector<std::string>{});

  m.def(
      "train_supertokenizer",
      [](const std::vector<std::string>& corpus, std::size_t vocab_size,
         const std::string& chunk_dist, const std::string& separator, std::uint64_t seed,
         const std::vector<std::string>& specials, const std::string& chunk_unit) {
        tg::SupertokenConfig cfg;
        cfg.dist = tg::ChunkLengthDistribution::parse(chunk_dist);
        cfg.separator = separator;
        cfg.vocab_size = vocab_size;
        cfg.seed = seed;
        cfg.specials = specials;
        if (chunk_unit == "chars") cfg.unit = tg::ChunkUnit::kChars;
        else if (chunk_unit != "words") throw tg::ConfigError("chunk_unit must be words or chars");
        py::gil_scoped_release release;
        return tg::train_supertokenizer(corpus, cfg);
      },
      py::arg("corpus"), py::arg("vocab_size"), py::arg("chunk_dist") = "1:0.4,2:0.3,3:0.2,4:0.1",
      py::arg("separator") = tg::kDefaultSeparator, py::arg("seed") = 0,
      py::arg("specials") = std::vector<std::string>{}, py::arg("chunk_unit") = "words");

  py::class_<tg::AuxEmbeddingStore>(m, "AuxStore")
      .def(py::init<std::uint32_t>(), py::arg("dim"))
      .def_static("load", &tg::AuxEmbeddingStore::load, py::arg("path"))
      .def("save", &tg::AuxEmbeddingStore::save, py::arg("path"))
      .def(
          "insert",
          [](tg::AuxEmbeddingStore& s, std::string key, const FloatArray& v) {
            if (v.ndim() != 1) throw tg::InputError("vector must be 1-dimensional");
            return s.insert(std::move(key), std::span<const float>(v.data(), v.shape(0)));
          },
          py::arg("key"), py::arg("vector"))
      .def("embed",
           [](const tg::AuxEmbeddingStore& s, const std::string& text) -> std::optional<FloatArray> {
             auto v = s.embed(text);
             if (!v) return std::nullopt;
             FloatArray out(static_cast<py::ssize_t>(v->size()));
             std::memcpy(out.mutable_data(), v->data(), v->size() * 4);
             return out;
           })
      .def("keys", &tg::AuxEmbeddingStore::keys)
      .def_property_readonly("dim", &tg::AuxEmbeddingStore::dim)
      .def_property_readonly("duplicate_count", &tg::AuxEmbeddingStore::duplicate_count)
      .def("__len__", &tg::AuxEmbeddingStore::size);

  m.def("pseudo_store", &tg::make_pseudo_store, py::arg("tokenizer"), py::arg("dim"),
        "Non-semantic hash-derived store covering a tokenizer (fixtures only).");

  m.def(
      "read_tensors",
      [](const std::filesystem::path& path) {
        py::dict out;
        for (const auto& [name, mat] : tg::read_tensors(path)) out[py::str(name)] = to_array(mat);
        return out;
      },
      py::arg("path"));

  m.def(
      "write_tensors",
      [](const std::filesystem::path& path, const std::map<std::string, FloatArray>& tensors) {
        tg::TensorMap map;
        for (const auto& [name, arr] : tensors) map.emplace(name, to_matrix(arr, tg::MatrixRole::kInput));
        tg::write_tensors(map, path);
      },
      py::arg("path"), py::arg("tensors"));

  m.def(
      "transplant",
      [](const tg::BpeTokenizer& old_tok, const tg::BpeTokenizer& new_tok, const FloatArray& input,
         std::optional<FloatArray> output, const tg::AuxEmbeddingStore* store,
         const std::string& method, double w_glob, double temperature, std::uint32_t k,
         std::optional<double> threshold, std::uint64_t seed, const std::string& length_unit,
         const std::map<std::string, std::string>& map_special) {
        tg::ModelEmbeddings model{to_matrix(input, tg::MatrixRole::kInput), std::nullopt};
        if (output) model.output = to_matrix(*output, tg::MatrixRole::kOutput);
        tg::TransplantOptions opts;
        opts.method = tg::parse_init_method(method);
        opts.heuristic.global_weight = w_glob;
        opts.heuristic.temperature = temperature;
        opts.heuristic.k_neighbors = k;
        opts.heuristic.similarity_threshold = threshold;
        opts.heuristic.seed = seed;
        if (length_unit == "bytes") opts.heuristic.length_unit = tg::LengthUnit::kBytes;
        else if (length_unit != "codepoints") throw tg::ConfigError("length_unit must be codepoints or bytes");
        opts.explicit_map = map_special;
        tg::TransplantResult res = [&] {
          py::gil_scoped_release release;
          return tg::transplant(model, old_tok, new_tok, store, opts);
        }();
        py::object out_arr = py::none();
        if (res.model.output) out_arr = to_array(*res.model.output);
        auto report = py::module_::import("json").attr("loads")(res.report.to_json(new_tok));
        return py::make_tuple(to_array(res.model.input), out_arr, report);
      },
      py::arg("old_tokenizer"), py::arg("new_tokenizer"), py::arg("input"),
      py::arg("output") = py::none(), py::arg("store") = nullptr, py::arg("method") = "tokenadapt",
      py::arg("w_glob") = 0.3, py::arg("temperature") = 0.6, py::arg("k") = 10,
      py::arg("threshold") = py::none(), py::arg("seed") = 0, py::arg("length_unit") = "codepoints",
      py::arg("map_special") = std::map<std::string, std::string>{},
      "Returns (input, output_or_None, report_dict).");

  m.def(
      "eval_compression",
      [](const tg::BpeTokenizer& tok, const std::vector<std::string>& corpus) {
        tg::CompressionStats s;
        {
          py::gil_scoped_release release;
          s = tg::eval_compression(tok, corpus);
        }
        py::dict d;
        d["corpus_bytes"] = s.corpus_bytes;
        d["total_tokens"] = s.total_tokens;
        d["bytes_per_token"] = s.bytes_per_token;
        d["unique_token_types_used"] = s.unique_token_types_used;
        return d;
      },
      py::arg("tokenizer"), py::arg("corpus"));

  m.def(
      "word_count_histogram",
      [](const tg::BpeTokenizer& tok, const std::vector<std::string>& corpus, bool occurrences) {
        py::gil_scoped_release release;
        return tg::word_count_histogram(tok, corpus, occurrences);
      },
      py::arg("tokenizer"), py::arg("corpus"), py::arg("occurrences") = false);

  m.def("count_words", &tg::count_words, py::arg("text"));
  m.attr("DEFAULT_SEPARATOR") = tg::kDefaultSeparator;
}
