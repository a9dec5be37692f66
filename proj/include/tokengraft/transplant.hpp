#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tokengraft/aux_embed.hpp"
#include "tokengraft/bpe.hpp"
#include "tokengraft/config.hpp"
#include "tokengraft/embedding.hpp"

namespace tokengraft {

// softmax(x / temperature), computed stably.
std::vector<double> softmax(std::span<const double> x, double temperature = 1.0);

// Old-vocabulary rows and the convex weights used to average them.
struct WeightedRows {
  std::vector<TokenId> ids;
  std::vector<double> weights;
};

struct Estimate {
  std::vector<double> vector;
  WeightedRows rows;
};

// Compositional weights for `text` (the new token's decoded string).
//
// `text` is re-tokenized with the old tokenizer. Each sub-token j gets a
// semantic similarity a_j = <aux(text), aux(s_j)> and a length ratio
// l_j = len(s_j) / max(1, len(text)). The weights are
//     softmax(((softmax(a) + l) / 2) / temperature).
// Sub-tokens whose decoded text has no auxiliary vector are dropped. Returns
// nullopt if `text` itself has no auxiliary vector or nothing is left.
std::optional<WeightedRows> local_weights(std::string_view text, const BpeTokenizer& old_tok,
                                          const AuxEmbeddingStore& store,
                                          const HeuristicConfig& cfg);

// Neighborhood weights: the k nearest old tokens in the auxiliary space,
// optionally filtered by the similarity threshold, weighted by
// softmax(similarity / temperature). nullopt if `text` has no auxiliary
// vector or no neighbor survives.
std::optional<WeightedRows> global_weights(std::string_view text, const KnnIndex& index,
                                           const AuxEmbeddingStore& store,
                                           const HeuristicConfig& cfg);

// sum_j weights[j] * matrix[ids[j]], accumulated in double.
std::vector<double> synthesize(const WeightedRows& rows, const EmbeddingMatrix& matrix);

std::optional<Estimate> local_estimate(std::string_view text, const BpeTokenizer& old_tok,
                                       const EmbeddingMatrix& e_old,
                                       const AuxEmbeddingStore& store,
                                       const HeuristicConfig& cfg);

std::optional<Estimate> global_estimate(std::string_view text, const KnnIndex& index,
                                        const EmbeddingMatrix& e_old,
                                        const AuxEmbeddingStore& store,
                                        const HeuristicConfig& cfg);

// Per-column moments of a matrix, used for the random fallback.
struct ColumnStats {
  std::vector<double> mean;
  std::vector<double> stddev;
};
ColumnStats column_stats(const EmbeddingMatrix& m);

enum class Provenance {
  kShared,
  kMapped,
  kHybrid,
  kLocalOnly,
  kGlobalOnly,
  kRandomFallback,
  kReTok,
  kMean,
  kRandom,
};
std::string_view to_string(Provenance p);

struct HybridResult {
  std::vector<double> vector;
  Provenance provenance;
};

// (1 - w) * local + w * global when both exist; whichever exists otherwise;
// a random draw from `fallback` when neither does.
HybridResult hybrid_combine(const std::optional<std::vector<double>>& local,
                            const std::optional<std::vector<double>>& global,
                            double global_weight, const ColumnStats& fallback,
                            std::mt19937_64& rng);

// Unweighted mean of the old sub-token rows (ReTok). nullopt if `text`
// encodes to nothing.
std::optional<std::vector<double>> retok_init(std::string_view text,
                                              const BpeTokenizer& old_tok,
                                              const EmbeddingMatrix& e_old);

std::vector<double> mean_init(const EmbeddingMatrix& e_old);

// i.i.d. Gaussian per column with the column's mean and standard deviation.
std::vector<double> random_init(const ColumnStats& stats, std::mt19937_64& rng);
std::vector<double> random_init(const EmbeddingMatrix& e_old, std::mt19937_64& rng);

// Generator for one new token; a pure function of (seed, token id).
std::mt19937_64 token_rng(std::uint64_t seed, TokenId id);

enum class InitMethod { kTokenAdapt, kLocalOnly, kReTok, kMean, kRandom };
std::string_view to_string(InitMethod m);
// Throws ConfigError for unknown names.
InitMethod parse_init_method(std::string_view name);

struct TransplantOptions {
  InitMethod method = InitMethod::kTokenAdapt;
  HeuristicConfig heuristic;
  // New-token string -> old-token string whose rows are copied verbatim.
  std::map<std::string, std::string> explicit_map;
  // 0: TOKENGRAFT_THREADS / hardware concurrency. Never changes outputs.
  std::size_t threads = 0;
};

struct ProvenanceCounts {
  std::size_t shared = 0;
  std::size_t mapped = 0;
  std::size_t hybrid = 0;
  std::size_t local_only = 0;
  std::size_t global_only = 0;
  std::size_t random_fallback = 0;
  std::size_t retok = 0;
  std::size_t mean = 0;
  std::size_t random = 0;

  void add(Provenance p);
  std::size_t total() const;
  std::size_t unique() const { return total() - shared - mapped; }
};

struct TokenRecord {
  TokenId id = 0;
  Provenance provenance = Provenance::kShared;
  std::uint32_t local_parts = 0;
  std::uint32_t neighbors = 0;
};

struct TransplantReport {
  InitMethod method = InitMethod::kTokenAdapt;
  HeuristicConfig config;
  bool tied = true;
  ProvenanceCounts counts;
  std::vector<TokenRecord> tokens;  // indexed by new token id
  std::size_t index_covered = 0;
  std::size_t index_missing = 0;

  std::string to_json(const BpeTokenizer& new_tok) const;
};

struct TransplantResult {
  ModelEmbeddings model;
  TransplantReport report;
};

// Builds embeddings for `new_tok` from a model trained with `old_tok`:
// shared tokens are copied bit-exactly, unique tokens are synthesized per
// `options.method`. Untied models get both matrices synthesized with the same
// weights. `store` is required for the TokenAdapt methods whenever a unique
// token exists.
TransplantResult transplant(const ModelEmbeddings& model, const BpeTokenizer& old_tok,
                            const BpeTokenizer& new_tok, const AuxEmbeddingStore* store,
                            const TransplantOptions& options);

}  // namespace tokengraft
