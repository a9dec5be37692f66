#include "cli.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "tokengraft/tokengraft.hpp"
#include "tokengraft/unicode.hpp"

#ifndef TOKENGRAFT_VERSION
#define TOKENGRAFT_VERSION "0.0.0"
#endif

namespace tokengraft::cli {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

std::string file_sha256(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                              &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw InvariantError("SHA-256 initialisation failed");
  }
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xF];
  }
  return out;
}

std::string parse_codepoint_hex(std::string_view text) {
  if (text.starts_with("U+") || text.starts_with("u+") || text.starts_with("0x") ||
      text.starts_with("0X")) {
    text.remove_prefix(2);
  }
  if (text.empty() || text.size() > 6) {
    throw ConfigError("separator must be a hex codepoint such as E000");
  }
  char32_t cp = 0;
  for (char c : text) {
    int v;
    if (c >= '0' && c <= '9') v = c - '0';
    else if (c >= 'a' && c <= 'f') v = c - 'a' + 10;
    else if (c >= 'A' && c <= 'F') v = c - 'A' + 10;
    else throw ConfigError("separator '" + std::string(text) + "' is not hexadecimal");
    cp = cp * 16 + static_cast<char32_t>(v);
  }
  if (cp == 0 || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
    throw ConfigError("separator codepoint is not a Unicode scalar value");
  }
  return unicode::to_utf8(cp);
}

namespace {

// Accumulates the run manifest: resolved settings plus digests of every
// input and output file. No timestamps or thread counts, so identical runs
// produce identical manifests.
class Manifest {
 public:
  explicit Manifest(std::string subcommand) {
    json_["schema"] = "tokengraft.manifest/1";
    json_["tool_version"] = TOKENGRAFT_VERSION;
    json_["subcommand"] = std::move(subcommand);
    json_["config"] = ordered_json::object();
    json_["inputs"] = ordered_json::array();
    json_["outputs"] = ordered_json::array();
  }

  template <typename T>
  void set(const std::string& key, T&& value) {
    json_["config"][key] = std::forward<T>(value);
  }
  void seed(std::uint64_t s) { json_["seed"] = s; }
  void input(const std::string& role, const fs::path& p) { add("inputs", role, p); }
  void output(const std::string& role, const fs::path& p) { add("outputs", role, p); }

  void write(const fs::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write manifest " + path.string());
    out << json_.dump(2, ' ', false, ordered_json::error_handler_t::replace) << '\n';
  }

 private:
  void add(const char* list, const std::string& role, const fs::path& p) {
    json_[list].push_back({{"role", role}, {"path", p.string()}, {"sha256", file_sha256(p)}});
  }

  ordered_json json_;
};

fs::path manifest_path(const std::string& flag, const fs::path& primary) {
  if (!flag.empty()) return flag;
  return fs::path(primary.string() + ".manifest.json");
}

struct TrainOptions {
  std::string corpus;
  std::string format = "lines";
  std::size_t vocab_size = 0;
  std::vector<std::string> specials;
  std::string out;
  std::uint64_t seed = 0;
  std::string manifest;
  // supertokenizer only
  std::string chunk_dist = "1:0.4,2:0.3,3:0.2,4:0.1";
  std::string separator = "E000";
  std::string chunk_unit = "words";
};

void add_train_flags(CLI::App* cmd, TrainOptions& o) {
  cmd->add_option("--corpus", o.corpus, "Training corpus")->required();
  cmd->add_option("--format", o.format, "Corpus format: lines|jsonl")
      ->check(CLI::IsMember({"lines", "jsonl"}))
      ->capture_default_str();
  cmd->add_option("--vocab-size", o.vocab_size, "Target vocabulary size")->required();
  cmd->add_option("--special", o.specials, "Special token (repeatable)");
  cmd->add_option("--out", o.out, "Output tokenizer JSON")->required();
  cmd->add_option("--seed", o.seed, "Random seed")->capture_default_str();
  cmd->add_option("--manifest", o.manifest, "Manifest path (default <out>.manifest.json)");
}

int cmd_train_bpe(const TrainOptions& o) {
  const auto docs = read_corpus(o.corpus, parse_corpus_format(o.format));
  const auto tok = train_bpe(docs, o.vocab_size, o.specials);
  tok.save(o.out);

  Manifest m("train-bpe");
  m.set("format", o.format);
  m.set("vocab_size", o.vocab_size);
  m.set("specials", o.specials);
  m.seed(o.seed);
  m.input("corpus", o.corpus);
  m.output("tokenizer", o.out);
  m.write(manifest_path(o.manifest, o.out));
  std::cerr << "trained " << tok.size() << " tokens (" << tok.merges().size() << " merges) -> "
            << o.out << '\n';
  return kOk;
}

int cmd_train_supertokenizer(const TrainOptions& o) {
  const auto docs = read_corpus(o.corpus, parse_corpus_format(o.format));
  SupertokenConfig cfg;
  cfg.dist = ChunkLengthDistribution::parse(o.chunk_dist);
  cfg.separator = parse_codepoint_hex(o.separator);
  cfg.vocab_size = o.vocab_size;
  cfg.specials = o.specials;
  cfg.seed = o.seed;
  cfg.unit = o.chunk_unit == "chars" ? ChunkUnit::kChars : ChunkUnit::kWords;
  const auto tok = train_supertokenizer(docs, cfg);
  tok.save(o.out);

  Manifest m("train-supertokenizer");
  m.set("format", o.format);
  m.set("vocab_size", o.vocab_size);
  m.set("specials", o.specials);
  m.set("chunk_dist", cfg.dist.to_string());
  m.set("separator", o.separator);
  m.set("chunk_unit", o.chunk_unit);
  m.seed(o.seed);
  m.input("corpus", o.corpus);
  m.output("tokenizer", o.out);
  m.write(manifest_path(o.manifest, o.out));
  std::cerr << "trained supertokenizer with " << tok.size() << " tokens -> " << o.out << '\n';
  return kOk;
}

struct TransplantFlags {
  std::string old_tokenizer;
  std::string new_tokenizer;
  std::string embeddings;
  bool untied = false;
  std::string aux;
  std::string method = "tokenadapt";
  double w_glob = 0.3;
  double temperature = 0.6;
  std::uint32_t k = 10;
  std::optional<double> threshold;
  std::uint64_t seed = 0;
  std::string out;
  std::string report;
  std::string manifest;
  std::vector<std::string> map_special;
  std::string length_unit = "codepoints";
};

std::pair<std::string, std::string> split_assignment(const std::string& s, const char* flag) {
  const auto eq = s.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == s.size()) {
    throw ConfigError(std::string(flag) + " expects name=value, got '" + s + "'");
  }
  return {s.substr(0, eq), s.substr(eq + 1)};
}

int cmd_transplant(const TransplantFlags& f) {
  TransplantOptions opts;
  opts.method = parse_init_method(f.method);
  opts.heuristic.temperature = f.temperature;
  opts.heuristic.k_neighbors = f.k;
  opts.heuristic.global_weight = f.w_glob;
  opts.heuristic.similarity_threshold = f.threshold;
  opts.heuristic.seed = f.seed;
  opts.heuristic.length_unit =
      f.length_unit == "bytes" ? LengthUnit::kBytes : LengthUnit::kCodepoints;
  opts.heuristic.validate();
  for (const auto& m : f.map_special) opts.explicit_map.insert(split_assignment(m, "--map-special"));

  const auto old_tok = BpeTokenizer::load(f.old_tokenizer);
  const auto new_tok = BpeTokenizer::load(f.new_tokenizer);
  auto model = model_from_tensors(read_tensors(f.embeddings));
  if (f.untied && !model.output) {
    throw FormatError(f.embeddings + " has no '" + std::string(kOutputTensorName) +
                      "' tensor but --untied was given");
  }
  if (!f.untied && model.output) {
    std::cerr << "warning: ignoring '" << kOutputTensorName << "' (tied model; pass --untied)\n";
    model.output.reset();
  }
  std::optional<AuxEmbeddingStore> store;
  if (!f.aux.empty()) {
    store = AuxEmbeddingStore::load(f.aux);
    if (store->duplicate_count()) {
      std::cerr << "warning: " << store->duplicate_count()
                << " duplicate auxiliary keys (last occurrence kept)\n";
    }
  }

  const auto result = transplant(model, old_tok, new_tok, store ? &*store : nullptr, opts);
  write_tensors(tensors_from_model(result.model), f.out);
  const fs::path report_path =
      f.report.empty() ? fs::path(f.out).parent_path() / "report.json" : fs::path(f.report);
  {
    std::ofstream r(report_path, std::ios::binary | std::ios::trunc);
    if (!r) throw FormatError("cannot write report " + report_path.string());
    r << result.report.to_json(new_tok);
  }

  Manifest m("transplant");
  m.set("method", f.method);
  m.set("untied", f.untied);
  m.set("w_glob", f.w_glob);
  m.set("temperature", f.temperature);
  m.set("k", f.k);
  m.set("threshold", f.threshold ? ordered_json(*f.threshold) : ordered_json(nullptr));
  m.set("length_unit", f.length_unit);
  m.set("map_special", f.map_special);
  m.seed(f.seed);
  m.input("old_tokenizer", f.old_tokenizer);
  m.input("new_tokenizer", f.new_tokenizer);
  m.input("embeddings", f.embeddings);
  if (!f.aux.empty()) m.input("aux", f.aux);
  m.output("tensors", f.out);
  m.output("report", report_path);
  m.write(manifest_path(f.manifest, f.out));

  const auto& c = result.report.counts;
  std::cerr << "transplanted " << c.total() << " tokens: shared=" << c.shared
            << " mapped=" << c.mapped << " hybrid=" << c.hybrid << " local_only=" << c.local_only
            << " global_only=" << c.global_only << " random_fallback=" << c.random_fallback
            << " retok=" << c.retok << " mean=" << c.mean << " random=" << c.random << '\n';
  return kOk;
}

struct EvalFlags {
  std::vector<std::string> tokenizers;
  std::vector<std::string> corpora;
  std::string format = "lines";
  std::string csv;
  bool histogram = false;
  bool occurrences = false;
  std::string manifest;
};

int cmd_eval_compression(const EvalFlags& f) {
  const auto format = parse_corpus_format(f.format);
  std::vector<std::pair<std::string, std::string>> tok_specs;
  for (const auto& t : f.tokenizers) {
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      tok_specs.emplace_back(fs::path(t).stem().string(), t);
    } else {
      tok_specs.push_back(split_assignment(t, "--tokenizer"));
    }
  }
  std::vector<BpeTokenizer> toks;
  toks.reserve(tok_specs.size());
  for (const auto& [name, path] : tok_specs) toks.push_back(BpeTokenizer::load(path));
  std::vector<NamedTokenizer> named;
  for (std::size_t i = 0; i < toks.size(); ++i) named.push_back({tok_specs[i].first, &toks[i]});

  std::vector<NamedCorpus> corpora;
  std::vector<std::pair<std::string, std::string>> corpus_specs;
  for (const auto& c : f.corpora) {
    auto [name, path] = split_assignment(c, "--corpus");
    corpora.push_back({name, read_corpus(path, format)});
    if (corpora.back().documents.empty()) throw InputError("corpus '" + name + "' is empty");
    corpus_specs.emplace_back(name, path);
  }

  const auto cells = compare_tokenizers(named, corpora);
  std::cout << format_comparison_table(cells);
  if (f.histogram) {
    for (const auto& t : named) {
      for (const auto& c : corpora) {
        std::cout << "\nword-count histogram: " << t.name << " on " << c.name
                  << (f.occurrences ? " (occurrences)" : " (unique types)") << '\n';
        for (const auto& [words, n] : word_count_histogram(*t.tokenizer, c.documents, f.occurrences)) {
          std::cout << "  " << words << " words: " << n << '\n';
        }
      }
    }
  }
  if (!f.csv.empty()) {
    std::ofstream out(f.csv, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write " + f.csv);
    out << format_comparison_csv(cells);
  }

  Manifest m("eval-compression");
  m.set("format", f.format);
  m.set("histogram", f.histogram);
  m.set("histogram_occurrences", f.occurrences);
  for (const auto& [name, path] : tok_specs) m.input("tokenizer:" + name, path);
  for (const auto& [name, path] : corpus_specs) m.input("corpus:" + name, path);
  if (!f.csv.empty()) m.output("csv", f.csv);
  m.write(f.manifest.empty() ? (f.csv.empty() ? fs::path("eval-compression.manifest.json")
                                              : manifest_path("", f.csv))
                             : fs::path(f.manifest));
  return kOk;
}

struct FixtureFlags {
  std::string tokenizer;
  std::uint32_t dim = 16;
  std::uint64_t seed = 0;
  bool untied = false;
  std::string out;
};

// Non-semantic pseudo-embedding store for every token of a tokenizer.
int cmd_make_pseudo_aux(const FixtureFlags& f) {
  const auto tok = BpeTokenizer::load(f.tokenizer);
  make_pseudo_store(tok, f.dim).save(f.out);
  Manifest m("make-pseudo-aux");
  m.set("dim", f.dim);
  m.input("tokenizer", f.tokenizer);
  m.output("aux", f.out);
  m.write(manifest_path("", f.out));
  std::cerr << "wrote pseudo auxiliary store (test fixture, not semantic) -> " << f.out << '\n';
  return kOk;
}

// Gaussian embeddings sized to a tokenizer, standing in for a base model.
int cmd_make_random_embeddings(const FixtureFlags& f) {
  const auto tok = BpeTokenizer::load(f.tokenizer);
  if (f.dim == 0) throw ConfigError("--dim must be positive");
  std::mt19937_64 rng(f.seed);
  std::normal_distribution<float> normal(0.0f, 0.02f);
  ModelEmbeddings model{EmbeddingMatrix(tok.size(), f.dim, MatrixRole::kInput), std::nullopt};
  for (auto& v : model.input.data()) v = normal(rng);
  if (f.untied) {
    model.output = EmbeddingMatrix(tok.size(), f.dim, MatrixRole::kOutput);
    for (auto& v : model.output->data()) v = normal(rng);
  }
  write_tensors(tensors_from_model(model), f.out);
  Manifest m("make-random-embeddings");
  m.set("dim", f.dim);
  m.set("untied", f.untied);
  m.seed(f.seed);
  m.input("tokenizer", f.tokenizer);
  m.output("tensors", f.out);
  m.write(manifest_path("", f.out));
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"tokengraft: tokenizer transplantation and supertokenizer toolkit"};
  app.set_version_flag("--version", TOKENGRAFT_VERSION);
  app.require_subcommand(1);

  TrainOptions train;
  auto* train_cmd = app.add_subcommand("train-bpe", "Train a byte-level BPE tokenizer");
  add_train_flags(train_cmd, train);

  TrainOptions super;
  auto* super_cmd =
      app.add_subcommand("train-supertokenizer", "Train a BPE tokenizer with multi-word tokens");
  add_train_flags(super_cmd, super);
  super_cmd->add_option("--chunk-dist", super.chunk_dist, "Chunk length distribution len:p,...")
      ->capture_default_str();
  super_cmd->add_option("--separator", super.separator, "Chunk separator codepoint (hex)")
      ->capture_default_str();
  super_cmd->add_option("--chunk-unit", super.chunk_unit, "words|chars")
      ->check(CLI::IsMember({"words", "chars"}))
      ->capture_default_str();

  TransplantFlags tp;
  auto* tp_cmd = app.add_subcommand("transplant", "Initialize embeddings for a new tokenizer");
  tp_cmd->add_option("--old-tokenizer", tp.old_tokenizer)->required();
  tp_cmd->add_option("--new-tokenizer", tp.new_tokenizer)->required();
  tp_cmd->add_option("--embeddings", tp.embeddings, "Tensor file with embed.input[/output]")
      ->required();
  tp_cmd->add_flag("--untied", tp.untied, "Also synthesize embed.output");
  tp_cmd->add_option("--aux", tp.aux, "AUXV1 auxiliary embedding store");
  tp_cmd->add_option("--method", tp.method)
      ->check(CLI::IsMember({"tokenadapt", "local-only", "retok", "mean", "random"}))
      ->capture_default_str();
  tp_cmd->add_option("--w-glob", tp.w_glob)->capture_default_str();
  tp_cmd->add_option("--temperature", tp.temperature)->capture_default_str();
  tp_cmd->add_option("--k", tp.k)->capture_default_str();
  tp_cmd->add_option("--threshold", tp.threshold, "Minimum neighbor similarity");
  tp_cmd->add_option("--seed", tp.seed)->capture_default_str();
  tp_cmd->add_option("--out", tp.out, "Output tensor file")->required();
  tp_cmd->add_option("--report", tp.report, "Report path (default report.json beside --out)");
  tp_cmd->add_option("--manifest", tp.manifest);
  tp_cmd->add_option("--map-special", tp.map_special, "new=old explicit row copy (repeatable)")
      ->take_all();
  tp_cmd->add_option("--length-unit", tp.length_unit)
      ->check(CLI::IsMember({"codepoints", "bytes"}))
      ->capture_default_str();

  EvalFlags ev;
  auto* ev_cmd = app.add_subcommand("eval-compression", "Compare tokenizer compression");
  ev_cmd->add_option("--tokenizer", ev.tokenizers, "[name=]path (repeatable)")->required()->take_all();
  ev_cmd->add_option("--corpus", ev.corpora, "name=path (repeatable)")->required()->take_all();
  ev_cmd->add_option("--format", ev.format)
      ->check(CLI::IsMember({"lines", "jsonl"}))
      ->capture_default_str();
  ev_cmd->add_option("--csv", ev.csv, "Write CSV here");
  ev_cmd->add_flag("--histogram", ev.histogram, "Print word-count histograms");
  ev_cmd->add_flag("--histogram-occurrences", ev.occurrences, "Weight histograms by occurrence");
  ev_cmd->add_option("--manifest", ev.manifest);

  FixtureFlags aux_fx;
  auto* aux_cmd = app.add_subcommand(
      "make-pseudo-aux", "Write a non-semantic pseudo-embedding AUXV1 store (fixtures only)");
  aux_cmd->add_option("--tokenizer", aux_fx.tokenizer)->required();
  aux_cmd->add_option("--dim", aux_fx.dim)->capture_default_str();
  aux_cmd->add_option("--out", aux_fx.out)->required();

  FixtureFlags emb_fx;
  auto* emb_cmd = app.add_subcommand(
      "make-random-embeddings", "Write Gaussian embeddings sized to a tokenizer (fixtures only)");
  emb_cmd->add_option("--tokenizer", emb_fx.tokenizer)->required();
  emb_cmd->add_option("--dim", emb_fx.dim)->capture_default_str();
  emb_cmd->add_option("--seed", emb_fx.seed)->capture_default_str();
  emb_cmd->add_flag("--untied", emb_fx.untied);
  emb_cmd->add_option("--out", emb_fx.out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*train_cmd) return cmd_train_bpe(train);
    if (*super_cmd) return cmd_train_supertokenizer(super);
    if (*tp_cmd) return cmd_transplant(tp);
    if (*ev_cmd) return cmd_eval_compression(ev);
    if (*aux_cmd) return cmd_make_pseudo_aux(aux_fx);
    if (*emb_cmd) return cmd_make_random_embeddings(emb_fx);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputFormat;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputFormat;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternal;
  }
  return kUsage;
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("tokengraft");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace tokengraft::cli
