#include "tokengraft/transplant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "tokengraft/error.hpp"
#include "tokengraft/parallel.hpp"
#include "tokengraft/unicode.hpp"

namespace tokengraft {

std::vector<double> softmax(std::span<const double> x, double temperature) {
  std::vector<double> out(x.size());
  if (x.empty()) return out;
  double max_z = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = x[i] / temperature;
    max_z = std::max(max_z, out[i]);
  }
  double sum = 0.0;
  for (auto& v : out) {
    v = std::exp(v - max_z);
    sum += v;
  }
  for (auto& v : out) v /= sum;
  return out;
}

namespace {

double text_length(std::string_view s, LengthUnit unit) {
  return static_cast<double>(unit == LengthUnit::kBytes ? s.size()
                                                        : unicode::codepoint_count(s));
}

}  // namespace

std::optional<WeightedRows> local_weights(std::string_view text, const BpeTokenizer& old_tok,
                                          const AuxEmbeddingStore& store,
                                          const HeuristicConfig& cfg) {
  const auto target = store.embed(text);
  if (!target) return std::nullopt;

  WeightedRows rows;
  std::vector<double> similarity;
  std::vector<double> length_ratio;
  const double denom = std::max(1.0, text_length(text, cfg.length_unit));
  std::vector<float> pseudo;
  for (TokenId id : old_tok.encode(text)) {
    const auto& piece = old_tok.decode_token(id);
    std::span<const float> piece_vec;
    if (auto v = store.embed(piece)) {
      piece_vec = *v;
    } else if (cfg.pseudo_subtoken_fallback) {
      pseudo = pseudo_embedding(piece, store.dim());
      piece_vec = pseudo;
    } else {
      continue;
    }
    rows.ids.push_back(id);
    similarity.push_back(dot(*target, piece_vec));
    length_ratio.push_back(text_length(piece, cfg.length_unit) / denom);
  }
  if (rows.ids.empty()) return std::nullopt;

  const auto semantic = softmax(similarity);
  std::vector<double> combined(semantic.size());
  for (std::size_t j = 0; j < combined.size(); ++j) {
    combined[j] = (semantic[j] + length_ratio[j]) / 2.0;
  }
  rows.weights = softmax(combined, cfg.temperature);
  return rows;
}

std::optional<WeightedRows> global_weights(std::string_view text, const KnnIndex& index,
                                           const AuxEmbeddingStore& store,
                                           const HeuristicConfig& cfg) {
  const auto target = store.embed(text);
  if (!target) return std::nullopt;
  WeightedRows rows;
  std::vector<double> similarity;
  for (const auto& n : index.query(*target, cfg.k_neighbors)) {
    if (cfg.similarity_threshold && n.similarity < *cfg.similarity_threshold) continue;
    rows.ids.push_back(n.id);
    similarity.push_back(n.similarity);
  }
  if (rows.ids.empty()) return std::nullopt;
  rows.weights = softmax(similarity, cfg.temperature);
  return rows;
}

std::vector<double> synthesize(const WeightedRows& rows, const EmbeddingMatrix& matrix) {
  std::vector<double> out(matrix.dim(), 0.0);
  for (std::size_t j = 0; j < rows.ids.size(); ++j) {
    const auto row = matrix.row(rows.ids[j]);
    const double w = rows.weights[j];
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += w * static_cast<double>(row[c]);
  }
  return out;
}

std::optional<Estimate> local_estimate(std::string_view text, const BpeTokenizer& old_tok,
                                       const EmbeddingMatrix& e_old,
                                       const AuxEmbeddingStore& store,
                                       const HeuristicConfig& cfg) {
  auto rows = local_weights(text, old_tok, store, cfg);
  if (!rows) return std::nullopt;
  auto vec = synthesize(*rows, e_old);
  return Estimate{std::move(vec), std::move(*rows)};
}

std::optional<Estimate> global_estimate(std::string_view text, const KnnIndex& index,
                                        const EmbeddingMatrix& e_old,
                                        const AuxEmbeddingStore& store,
                                        const HeuristicConfig& cfg) {
  auto rows = global_weights(text, index, store, cfg);
  if (!rows) return std::nullopt;
  auto vec = synthesize(*rows, e_old);
  return Estimate{std::move(vec), std::move(*rows)};
}

ColumnStats column_stats(const EmbeddingMatrix& m) {
  ColumnStats s{std::vector<double>(m.dim(), 0.0), std::vector<double>(m.dim(), 0.0)};
  if (m.rows() == 0) return s;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    for (std::size_t c = 0; c < m.dim(); ++c) s.mean[c] += row[c];
  }
  for (auto& v : s.mean) v /= static_cast<double>(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    for (std::size_t c = 0; c < m.dim(); ++c) {
      const double d = row[c] - s.mean[c];
      s.stddev[c] += d * d;
    }
  }
  for (auto& v : s.stddev) v = std::sqrt(v / static_cast<double>(m.rows()));
  return s;
}

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::kShared: return "shared";
    case Provenance::kMapped: return "mapped";
    case Provenance::kHybrid: return "hybrid";
    case Provenance::kLocalOnly: return "local_only";
    case Provenance::kGlobalOnly: return "global_only";
    case Provenance::kRandomFallback: return "random_fallback";
    case Provenance::kReTok: return "retok";
    case Provenance::kMean: return "mean";
    case Provenance::kRandom: return "random";
  }
  return "unknown";
}

HybridResult hybrid_combine(const std::optional<std::vector<double>>& local,
                            const std::optional<std::vector<double>>& global,
                            double global_weight, const ColumnStats& fallback,
                            std::mt19937_64& rng) {
  if (local && global) {
    if (local->size() != global->size()) {
      throw InvariantError("local and global estimates differ in dimension");
    }
    if (global_weight == 0.0) return {*local, Provenance::kHybrid};
    if (global_weight == 1.0) return {*global, Provenance::kHybrid};
    std::vector<double> out(local->size());
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = (1.0 - global_weight) * (*local)[i] + global_weight * (*global)[i];
    }
    return {std::move(out), Provenance::kHybrid};
  }
  if (local) return {*local, Provenance::kLocalOnly};
  if (global) return {*global, Provenance::kGlobalOnly};
  return {random_init(fallback, rng), Provenance::kRandomFallback};
}

std::optional<std::vector<double>> retok_init(std::string_view text,
                                              const BpeTokenizer& old_tok,
                                              const EmbeddingMatrix& e_old) {
  const auto ids = old_tok.encode(text);
  if (ids.empty()) return std::nullopt;
  WeightedRows rows{ids, std::vector<double>(ids.size(), 1.0 / static_cast<double>(ids.size()))};
  return synthesize(rows, e_old);
}

std::vector<double> mean_init(const EmbeddingMatrix& e_old) {
  return column_stats(e_old).mean;
}

std::vector<double> random_init(const ColumnStats& stats, std::mt19937_64& rng) {
  std::vector<double> out(stats.mean.size());
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t c = 0; c < out.size(); ++c) {
    out[c] = stats.mean[c] + stats.stddev[c] * normal(rng);
  }
  return out;
}

std::vector<double> random_init(const EmbeddingMatrix& e_old, std::mt19937_64& rng) {
  return random_init(column_stats(e_old), rng);
}

std::mt19937_64 token_rng(std::uint64_t seed, TokenId id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(id), 0x746b6e67u};
  return std::mt19937_64(seq);
}

std::string_view to_string(InitMethod m) {
  switch (m) {
    case InitMethod::kTokenAdapt: return "tokenadapt";
    case InitMethod::kLocalOnly: return "local-only";
    case InitMethod::kReTok: return "retok";
    case InitMethod::kMean: return "mean";
    case InitMethod::kRandom: return "random";
  }
  return "unknown";
}

InitMethod parse_init_method(std::string_view name) {
  for (auto m : {InitMethod::kTokenAdapt, InitMethod::kLocalOnly, InitMethod::kReTok,
                 InitMethod::kMean, InitMethod::kRandom}) {
    if (to_string(m) == name) return m;
  }
  throw ConfigError("unknown initialization method '" + std::string(name) + "'");
}

void ProvenanceCounts::add(Provenance p) {
  switch (p) {
    case Provenance::kShared: ++shared; break;
    case Provenance::kMapped: ++mapped; break;
    case Provenance::kHybrid: ++hybrid; break;
    case Provenance::kLocalOnly: ++local_only; break;
    case Provenance::kGlobalOnly: ++global_only; break;
    case Provenance::kRandomFallback: ++random_fallback; break;
    case Provenance::kReTok: ++retok; break;
    case Provenance::kMean: ++mean; break;
    case Provenance::kRandom: ++random; break;
  }
}

std::size_t ProvenanceCounts::total() const {
  return shared + mapped + hybrid + local_only + global_only + random_fallback + retok + mean +
         random;
}

std::string TransplantReport::to_json(const BpeTokenizer& new_tok) const {
  nlohmann::ordered_json j;
  j["version"] = 1;
  j["method"] = to_string(method);
  j["config"] = {{"temperature", config.temperature},
                 {"k", config.k_neighbors},
                 {"global_weight", config.global_weight},
                 {"threshold", config.similarity_threshold
                                   ? nlohmann::ordered_json(*config.similarity_threshold)
                                   : nlohmann::ordered_json(nullptr)},
                 {"seed", config.seed},
                 {"length_unit",
                  config.length_unit == LengthUnit::kBytes ? "bytes" : "codepoints"}};
  j["tied"] = tied;
  j["counts"] = {{"shared", counts.shared},
                 {"mapped", counts.mapped},
                 {"hybrid", counts.hybrid},
                 {"local_only", counts.local_only},
                 {"global_only", counts.global_only},
                 {"random_fallback", counts.random_fallback},
                 {"retok", counts.retok},
                 {"mean", counts.mean},
                 {"random", counts.random},
                 {"total", counts.total()}};
  j["index"] = {{"covered", index_covered}, {"missing", index_missing}};
  auto& list = j["tokens"] = nlohmann::ordered_json::array();
  for (const auto& t : tokens) {
    list.push_back({{"id", t.id},
                    {"token", new_tok.vocab().token(t.id)},
                    {"provenance", to_string(t.provenance)},
                    {"local_parts", t.local_parts},
                    {"neighbors", t.neighbors}});
  }
  return j.dump(1, ' ', false, nlohmann::ordered_json::error_handler_t::replace) + "\n";
}

namespace {

void write_row(EmbeddingMatrix& m, TokenId id, const std::vector<double>& v) {
  auto row = m.row(id);
  for (std::size_t c = 0; c < row.size(); ++c) row[c] = static_cast<float>(v[c]);
}

void copy_row(const EmbeddingMatrix& from, TokenId from_id, EmbeddingMatrix& to, TokenId to_id) {
  const auto src = from.row(from_id);
  std::copy(src.begin(), src.end(), to.row(to_id).begin());
}

}  // namespace

TransplantResult transplant(const ModelEmbeddings& model, const BpeTokenizer& old_tok,
                            const BpeTokenizer& new_tok, const AuxEmbeddingStore* store,
                            const TransplantOptions& options) {
  const auto& cfg = options.heuristic;
  cfg.validate();
  model.validate();
  if (model.input.rows() != old_tok.size()) {
    throw InputError("input embedding has " + std::to_string(model.input.rows()) +
                     " rows but the old tokenizer has " + std::to_string(old_tok.size()) +
                     " tokens");
  }
  if (model.input.dim() == 0) throw InputError("embedding dimension is zero");
  if (!model.input.all_finite() || (model.output && !model.output->all_finite())) {
    throw InputError("embedding matrix contains non-finite values");
  }

  const std::size_t dim = model.input.dim();
  const std::size_t n_new = new_tok.size();
  TransplantResult result{
      ModelEmbeddings{EmbeddingMatrix(n_new, dim, MatrixRole::kInput), std::nullopt}, {}};
  if (model.output) result.model.output = EmbeddingMatrix(n_new, dim, MatrixRole::kOutput);
  auto& report = result.report;
  report.method = options.method;
  report.config = cfg;
  report.tied = model.tied();
  report.tokens.resize(n_new);

  // Phase 1: shared and explicitly mapped tokens.
  std::vector<TokenId> unique;
  for (TokenId id = 0; id < n_new; ++id) {
    const auto& tok = new_tok.vocab().token(id);
    auto& rec = report.tokens[id];
    rec.id = id;
    std::optional<TokenId> source;
    if (auto m = options.explicit_map.find(tok); m != options.explicit_map.end()) {
      source = old_tok.vocab().find(m->second);
      if (!source) {
        throw ConfigError("explicit mapping target '" + m->second +
                          "' is not in the old vocabulary");
      }
      rec.provenance = Provenance::kMapped;
    } else if ((source = old_tok.vocab().find(tok))) {
      rec.provenance = Provenance::kShared;
    }
    if (!source) {
      unique.push_back(id);
      continue;
    }
    copy_row(model.input, *source, result.model.input, id);
    if (model.output) copy_row(*model.output, *source, *result.model.output, id);
  }

  // Phase 2: unique tokens.
  const bool heuristic = options.method == InitMethod::kTokenAdapt ||
                         options.method == InitMethod::kLocalOnly;
  std::optional<KnnIndex> index;
  if (heuristic && !unique.empty()) {
    if (!store) throw InputError("an auxiliary embedding store is required for unique tokens");
    IndexReport index_report;
    index = KnnIndex::build(*store, old_tok, &index_report);
    report.index_covered = index_report.covered;
    report.index_missing = index_report.missing.size();
  }

  struct Target {
    const EmbeddingMatrix* old;
    EmbeddingMatrix* out;
    ColumnStats stats;
  };
  std::vector<Target> targets{{&model.input, &result.model.input, column_stats(model.input)}};
  if (model.output) {
    targets.push_back({&*model.output, &*result.model.output, column_stats(*model.output)});
  }

  parallel_for(
      unique.size(),
      [&](std::size_t u) {
        const TokenId id = unique[u];
        const auto& text = new_tok.decode_token(id);
        auto& rec = report.tokens[id];

        std::optional<WeightedRows> local;
        std::optional<WeightedRows> global;
        if (heuristic) {
          local = local_weights(text, old_tok, *store, cfg);
          if (options.method == InitMethod::kTokenAdapt || !local) {
            global = global_weights(text, *index, *store, cfg);
          }
          rec.local_parts = local ? static_cast<std::uint32_t>(local->ids.size()) : 0;
          rec.neighbors = global ? static_cast<std::uint32_t>(global->ids.size()) : 0;
        }

        for (std::size_t t = 0; t < targets.size(); ++t) {
          auto& target = targets[t];
          // Each matrix restarts the token's stream so a tied model and its
          // untied duplicate draw identical fallback vectors.
          auto rng = token_rng(cfg.seed, id);
          std::vector<double> vec;
          Provenance how = Provenance::kRandom;
          switch (options.method) {
            case InitMethod::kTokenAdapt:
            case InitMethod::kLocalOnly: {
              std::optional<std::vector<double>> l;
              std::optional<std::vector<double>> g;
              if (local) l = synthesize(*local, *target.old);
              if (global) g = synthesize(*global, *target.old);
              if (options.method == InitMethod::kLocalOnly) {
                // Reference path: global is only consulted when local fails.
                if (l) {
                  vec = std::move(*l);
                  how = Provenance::kLocalOnly;
                } else {
                  auto r = hybrid_combine(std::nullopt, g, 0.0, target.stats, rng);
                  vec = std::move(r.vector);
                  how = r.provenance;
                }
              } else {
                auto r = hybrid_combine(l, g, cfg.global_weight, target.stats, rng);
                vec = std::move(r.vector);
                how = r.provenance;
              }
              break;
            }
            case InitMethod::kReTok:
              if (auto v = retok_init(text, old_tok, *target.old)) {
                vec = std::move(*v);
                how = Provenance::kReTok;
              } else {
                vec = random_init(target.stats, rng);
                how = Provenance::kRandomFallback;
              }
              break;
            case InitMethod::kMean:
              vec = target.stats.mean;
              how = Provenance::kMean;
              break;
            case InitMethod::kRandom:
              vec = random_init(target.stats, rng);
              how = Provenance::kRandom;
              break;
          }
          write_row(*target.out, id, vec);
          if (t == 0) rec.provenance = how;
        }
      },
      options.threads);

  for (const auto& rec : report.tokens) report.counts.add(rec.provenance);
  if (report.counts.total() != n_new) {
    throw InvariantError("transplant report counts do not cover the new vocabulary");
  }
  if (!result.model.input.all_finite() ||
      (result.model.output && !result.model.output->all_finite())) {
    throw InvariantError("transplant produced non-finite embeddings");
  }
  return result;
}

}  // namespace tokengraft
