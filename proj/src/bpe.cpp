#include "tokengraft/bpe.hpp"

#include <algorithm>
#include <map>
#include <queue>
#include <set>
#include <unordered_set>

#include "json_util.hpp"
#include "tokengraft/error.hpp"
#include "tokengraft/unicode.hpp"

namespace tokengraft {

namespace byte_level {

namespace {

struct Tables {
  std::array<char32_t, 256> forward{};
  std::unordered_map<char32_t, unsigned char> inverse;

  Tables() {
    auto printable = [](int b) {
      return (b >= '!' && b <= '~') || (b >= 0xA1 && b <= 0xAC) ||
             (b >= 0xAE && b <= 0xFF);
    };
    char32_t next = 256;
    for (int b = 0; b < 256; ++b) {
      forward[b] = printable(b) ? static_cast<char32_t>(b) : next++;
      inverse.emplace(forward[b], static_cast<unsigned char>(b));
    }
  }
};

const Tables& tables() {
  static const Tables t;
  return t;
}

}  // namespace

const std::array<char32_t, 256>& byte_to_codepoint() { return tables().forward; }

std::string encode_bytes(std::string_view raw) {
  const auto& fwd = tables().forward;
  std::string out;
  out.reserve(raw.size() * 2);
  for (char c : raw) unicode::append_utf8(out, fwd[static_cast<unsigned char>(c)]);
  return out;
}

std::optional<std::string> decode_bytes(std::string_view mapped) {
  const auto& inv = tables().inverse;
  std::string out;
  out.reserve(mapped.size());
  for (std::size_t pos = 0; pos < mapped.size();) {
    const auto d = unicode::next_codepoint(mapped, pos);
    if (!d.valid) return std::nullopt;
    auto it = inv.find(d.value);
    if (it == inv.end()) return std::nullopt;
    out.push_back(static_cast<char>(it->second));
    pos += d.length;
  }
  return out;
}

}  // namespace byte_level

std::vector<std::string_view> split_whitespace_words(std::string_view text) {
  std::vector<std::string_view> pieces;
  std::size_t start = 0;
  std::size_t pos = 0;
  bool seen_word = false;
  while (pos < text.size()) {
    const auto d = unicode::next_codepoint(text, pos);
    const bool ws = unicode::is_whitespace(d.value);
    if (ws && seen_word) {
      pieces.push_back(text.substr(start, pos - start));
      start = pos;
      seen_word = false;
    } else if (!ws) {
      seen_word = true;
    }
    pos += d.length;
  }
  if (start < text.size()) pieces.push_back(text.substr(start));
  return pieces;
}

PreTokenizer PreTokenizer::separator(std::string separator) {
  if (separator.empty()) throw ConfigError("separator must be non-empty");
  PreTokenizer p;
  p.kind_ = Kind::kSeparator;
  p.separator_ = std::move(separator);
  return p;
}

std::vector<std::string_view> PreTokenizer::split(std::string_view text) const {
  if (kind_ == Kind::kWhitespace) return split_whitespace_words(text);
  std::vector<std::string_view> pieces;
  std::size_t start = 0;
  while (true) {
    const auto hit = text.find(separator_, start);
    const auto end = hit == std::string_view::npos ? text.size() : hit;
    if (end > start) pieces.push_back(text.substr(start, end - start));
    if (hit == std::string_view::npos) break;
    start = hit + separator_.size();
  }
  return pieces;
}

namespace {

std::uint64_t pair_key(TokenId left, TokenId right) {
  return (static_cast<std::uint64_t>(left) << 32) | right;
}

// Calls on_text(segment) for special-free spans and on_special(special) for
// each special occurrence. `specials` must be sorted longest first.
template <typename OnText, typename OnSpecial>
void split_specials(std::string_view text, const std::vector<std::string>& specials,
                    OnText&& on_text, OnSpecial&& on_special) {
  if (specials.empty()) {
    if (!text.empty()) on_text(text);
    return;
  }
  std::size_t start = 0;
  for (std::size_t pos = 0; pos < text.size();) {
    const std::string* hit = nullptr;
    for (const auto& s : specials) {
      if (text.compare(pos, s.size(), s) == 0) {
        hit = &s;
        break;
      }
    }
    if (!hit) {
      ++pos;
      continue;
    }
    if (pos > start) on_text(text.substr(start, pos - start));
    on_special(*hit);
    pos += hit->size();
    start = pos;
  }
  if (start < text.size()) on_text(text.substr(start));
}

std::vector<std::string> sort_longest_first(std::vector<std::string> specials) {
  std::sort(specials.begin(), specials.end(), [](const auto& a, const auto& b) {
    return a.size() != b.size() ? a.size() > b.size() : a < b;
  });
  return specials;
}

}  // namespace

BpeTokenizer::BpeTokenizer(Vocabulary vocab, const std::vector<MergePair>& merges,
                           PreTokenizer pre_tokenizer)
    : vocab_(std::move(vocab)), pre_tokenizer_(std::move(pre_tokenizer)) {
  token_bytes_.reserve(vocab_.size());
  for (TokenId id = 0; id < vocab_.size(); ++id) {
    const auto& tok = vocab_.token(id);
    if (vocab_.is_special(id)) {
      token_bytes_.push_back(tok);
      continue;
    }
    auto raw = byte_level::decode_bytes(tok);
    if (!raw) {
      throw FormatError("token " + std::to_string(id) + " ('" + tok +
                        "') uses characters outside the byte-level alphabet");
    }
    if (raw->empty()) throw FormatError("token " + std::to_string(id) + " is empty");
    if (raw->size() == 1) byte_ids_[static_cast<unsigned char>((*raw)[0])] = id;
    token_bytes_.push_back(std::move(*raw));
  }

  merges_.reserve(merges.size());
  merge_index_.reserve(merges.size());
  for (std::size_t rank = 0; rank < merges.size(); ++rank) {
    const auto& [left, right] = merges[rank];
    const auto l = vocab_.find(left);
    const auto r = vocab_.find(right);
    const auto m = vocab_.find(left + right);
    const auto where = "merge " + std::to_string(rank) + " ('" + left + "', '" + right + "')";
    if (!l || !r) throw FormatError(where + " references a token missing from the vocabulary");
    if (!m) throw FormatError(where + ": concatenation is not a vocabulary entry");
    if (vocab_.is_special(*l) || vocab_.is_special(*r) || vocab_.is_special(*m)) {
      throw FormatError(where + " involves a special token");
    }
    // First occurrence wins; later duplicates of the same pair are dead rules.
    merge_index_.try_emplace(pair_key(*l, *r),
                             MergeTarget{static_cast<std::uint32_t>(rank), *m});
    merges_.push_back({left, right, static_cast<std::uint32_t>(rank)});
  }

  specials_by_length_ = sort_longest_first(
      std::vector<std::string>(vocab_.specials().begin(), vocab_.specials().end()));
}

BpeTokenizer BpeTokenizer::from_merges(const std::vector<std::string>& specials,
                                       const std::vector<MergePair>& merges,
                                       PreTokenizer pre_tokenizer) {
  Vocabulary vocab;
  for (const auto& s : specials) vocab.push_back(s);
  for (int b = 0; b < 256; ++b) {
    vocab.push_back(byte_level::encode_bytes(std::string(1, static_cast<char>(b))));
  }
  for (const auto& [l, r] : merges) {
    if (!vocab.contains(l + r)) vocab.push_back(l + r);
  }
  Vocabulary with_specials(vocab.entries(),
                           std::set<std::string>(specials.begin(), specials.end()));
  return BpeTokenizer(std::move(with_specials), merges, std::move(pre_tokenizer));
}

bool BpeTokenizer::byte_complete() const noexcept {
  return std::all_of(byte_ids_.begin(), byte_ids_.end(),
                     [](const auto& id) { return id.has_value(); });
}

std::optional<BpeTokenizer::MergeTarget> BpeTokenizer::lookup_merge(TokenId left,
                                                                    TokenId right) const {
  auto it = merge_index_.find(pair_key(left, right));
  if (it == merge_index_.end()) return std::nullopt;
  return it->second;
}

void BpeTokenizer::encode_piece(std::string_view piece, std::vector<TokenId>& out) const {
  struct Symbol {
    TokenId id;
    int prev;
    int next;
    bool alive;
  };
  std::vector<Symbol> syms;
  syms.reserve(piece.size());
  for (char c : piece) {
    // Bytes without a vocabulary entry are dropped (only possible for
    // hand-built partial alphabets).
    if (const auto id = byte_ids_[static_cast<unsigned char>(c)]) {
      const int idx = static_cast<int>(syms.size());
      syms.push_back({*id, idx - 1, idx + 1, true});
    }
  }
  if (syms.empty()) return;
  syms.back().next = -1;

  struct Candidate {
    std::uint32_t rank;
    int pos;
    TokenId left;
    TokenId right;
    TokenId merged;
    bool operator>(const Candidate& o) const {
      return rank != o.rank ? rank > o.rank : pos > o.pos;
    }
  };
  std::priority_queue<Candidate, std::vector<Candidate>, std::greater<>> queue;
  auto push = [&](int pos) {
    if (pos < 0) return;
    const int nxt = syms[pos].next;
    if (nxt < 0) return;
    if (auto m = lookup_merge(syms[pos].id, syms[nxt].id)) {
      queue.push({m->rank, pos, syms[pos].id, syms[nxt].id, m->merged});
    }
  };
  for (int i = 0; i + 1 < static_cast<int>(syms.size()); ++i) push(i);

  while (!queue.empty()) {
    const Candidate c = queue.top();
    queue.pop();
    Symbol& left = syms[c.pos];
    if (!left.alive || left.id != c.left || left.next < 0) continue;
    Symbol& right = syms[left.next];
    if (right.id != c.right) continue;
    left.id = c.merged;
    right.alive = false;
    left.next = right.next;
    if (right.next >= 0) syms[right.next].prev = c.pos;
    push(left.prev);
    push(c.pos);
  }
  for (int i = 0; i >= 0; i = syms[i].next) out.push_back(syms[i].id);
}

std::vector<TokenId> BpeTokenizer::encode(std::string_view text) const {
  std::vector<TokenId> ids;
  ids.reserve(text.size() / 2 + 1);
  split_specials(
      text, specials_by_length_,
      [&](std::string_view segment) {
        for (auto piece : pre_tokenizer_.split(segment)) encode_piece(piece, ids);
      },
      [&](const std::string& special) { ids.push_back(*vocab_.find(special)); });
  return ids;
}

const std::string& BpeTokenizer::decode_token(TokenId id) const {
  if (id >= token_bytes_.size()) {
    throw FormatError("cannot decode token id " + std::to_string(id) +
                      ": vocabulary has " + std::to_string(token_bytes_.size()) +
                      " entries");
  }
  return token_bytes_[id];
}

std::string BpeTokenizer::decode(std::span<const TokenId> ids) const {
  std::string out;
  for (TokenId id : ids) out += decode_token(id);
  return out;
}

std::string BpeTokenizer::to_json() const {
  nlohmann::json j;
  j["version"] = 1;
  j["byte_level"] = true;
  j["specials"] = nlohmann::json::array();
  // Specials in id order, not set order.
  for (TokenId id = 0; id < vocab_.size(); ++id) {
    if (vocab_.is_special(id)) j["specials"].push_back(vocab_.token(id));
  }
  nlohmann::json vocab = nlohmann::json::object();
  for (TokenId id = 0; id < vocab_.size(); ++id) vocab[vocab_.token(id)] = id;
  j["vocab"] = std::move(vocab);
  nlohmann::json merges = nlohmann::json::array();
  for (const auto& m : merges_) merges.push_back({m.left, m.right});
  j["merges"] = std::move(merges);
  if (pre_tokenizer_.kind() == PreTokenizer::Kind::kWhitespace) {
    j["pre_tokenizer"] = {{"type", "whitespace"}};
  } else {
    j["pre_tokenizer"] = {{"type", "split"},
                          {"separator", pre_tokenizer_.separator_string()}};
  }
  return j.dump(1) + "\n";
}

BpeTokenizer BpeTokenizer::from_json(std::string_view text) {
  const auto j = detail::parse_json(text, "tokenizer");
  try {
    if (!j.is_object()) throw FormatError("tokenizer: top level must be an object");
    if (j.at("version").get<int>() != 1) {
      throw FormatError("tokenizer: unsupported version " + j.at("version").dump());
    }
    if (!j.at("byte_level").get<bool>()) {
      throw FormatError("tokenizer: only byte_level tokenizers are supported");
    }
    const auto& vocab_json = j.at("vocab");
    if (!vocab_json.is_object()) throw FormatError("tokenizer: 'vocab' must be an object");
    std::vector<std::string> entries(vocab_json.size());
    std::vector<bool> seen(vocab_json.size(), false);
    for (const auto& [tok, id_json] : vocab_json.items()) {
      const auto id = id_json.get<std::int64_t>();
      if (id < 0 || static_cast<std::size_t>(id) >= entries.size() || seen[id]) {
        throw FormatError("tokenizer: ids must be contiguous 0..N-1; bad id " +
                          std::to_string(id) + " for '" + tok + "'");
      }
      seen[id] = true;
      entries[id] = tok;
    }
    std::set<std::string> specials;
    for (const auto& s : j.value("specials", nlohmann::json::array())) {
      specials.insert(s.get<std::string>());
    }
    std::vector<MergePair> merges;
    for (const auto& m : j.at("merges")) {
      if (!m.is_array() || m.size() != 2) {
        throw FormatError("tokenizer: each merge must be a two-element array, got " + m.dump());
      }
      merges.emplace_back(m[0].get<std::string>(), m[1].get<std::string>());
    }
    PreTokenizer pre = PreTokenizer::whitespace();
    if (j.contains("pre_tokenizer")) {
      const auto& p = j.at("pre_tokenizer");
      const auto type = p.at("type").get<std::string>();
      if (type == "split") {
        pre = PreTokenizer::separator(p.at("separator").get<std::string>());
      } else if (type != "whitespace") {
        throw FormatError("tokenizer: unknown pre_tokenizer type '" + type + "'");
      }
    }
    return BpeTokenizer(Vocabulary(std::move(entries), std::move(specials)), merges,
                        std::move(pre));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("tokenizer: ") + e.what());
  }
}

void BpeTokenizer::save(const std::filesystem::path& path) const {
  detail::write_file(path, to_json());
}

BpeTokenizer BpeTokenizer::load(const std::filesystem::path& path) {
  try {
    return from_json(detail::read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Training

namespace {

class PairTrainer {
 public:
  PairTrainer(std::vector<std::string>& strings) : strings_(strings), queue_(Less{&strings}) {}

  void add_word(std::vector<TokenId> symbols, std::int64_t freq) {
    const auto w = static_cast<std::uint32_t>(words_.size());
    for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
      const auto key = pair_key(symbols[i], symbols[i + 1]);
      counts_[key] += freq;
      where_[key].push_back(w);
    }
    words_.push_back({std::move(symbols), freq});
  }

  void build_queue() {
    for (const auto& [key, count] : counts_) queue_.insert({count, key});
  }

  bool empty() const { return queue_.empty(); }

  std::pair<TokenId, TokenId> best() const {
    const auto key = queue_.begin()->key;
    return {static_cast<TokenId>(key >> 32), static_cast<TokenId>(key & 0xFFFFFFFFu)};
  }

  void apply(TokenId left, TokenId right, TokenId merged) {
    const auto key = pair_key(left, right);
    auto affected = std::move(where_[key]);
    where_.erase(key);
    std::sort(affected.begin(), affected.end());
    affected.erase(std::unique(affected.begin(), affected.end()), affected.end());

    std::unordered_map<std::uint64_t, std::int64_t> delta;
    for (auto w : affected) {
      auto& word = words_[w];
      auto& s = word.symbols;
      bool hit = false;
      for (std::size_t i = 0; i + 1 < s.size(); ++i) {
        if (s[i] == left && s[i + 1] == right) {
          hit = true;
          break;
        }
      }
      if (!hit) continue;
      for (std::size_t i = 0; i + 1 < s.size(); ++i) delta[pair_key(s[i], s[i + 1])] -= word.freq;
      std::vector<TokenId> merged_syms;
      merged_syms.reserve(s.size());
      for (std::size_t i = 0; i < s.size();) {
        if (i + 1 < s.size() && s[i] == left && s[i + 1] == right) {
          merged_syms.push_back(merged);
          i += 2;
        } else {
          merged_syms.push_back(s[i++]);
        }
      }
      s = std::move(merged_syms);
      for (std::size_t i = 0; i + 1 < s.size(); ++i) {
        const auto k = pair_key(s[i], s[i + 1]);
        delta[k] += word.freq;
        where_[k].push_back(w);
      }
    }
    for (const auto& [k, d] : delta) {
      if (d == 0) continue;
      auto it = counts_.find(k);
      const std::int64_t old = it == counts_.end() ? 0 : it->second;
      if (old > 0) queue_.erase({old, k});
      const std::int64_t now = old + d;
      if (now < 0) throw InvariantError("negative pair count during BPE training");
      if (now > 0) {
        counts_[k] = now;
        queue_.insert({now, k});
      } else if (it != counts_.end()) {
        counts_.erase(it);
      }
    }
  }

 private:
  struct Word {
    std::vector<TokenId> symbols;
    std::int64_t freq;
  };
  struct Entry {
    std::int64_t count;
    std::uint64_t key;
  };
  struct Less {
    const std::vector<std::string>* strings;
    bool operator()(const Entry& a, const Entry& b) const {
      if (a.count != b.count) return a.count > b.count;
      const auto& s = *strings;
      const int c = s[a.key >> 32].compare(s[b.key >> 32]);
      if (c != 0) return c < 0;
      return s[a.key & 0xFFFFFFFFu] < s[b.key & 0xFFFFFFFFu];
    }
  };

  std::vector<std::string>& strings_;
  std::vector<Word> words_;
  std::unordered_map<std::uint64_t, std::int64_t> counts_;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> where_;
  std::set<Entry, Less> queue_;
};

}  // namespace

BpeTokenizer train_bpe(std::span<const std::string> corpus, std::size_t vocab_size,
                       const std::vector<std::string>& specials,
                       PreTokenizer pre_tokenizer) {
  const std::set<std::string> special_set(specials.begin(), specials.end());
  if (special_set.size() != specials.size()) throw ConfigError("duplicate special tokens");
  if (vocab_size < 256 + specials.size()) {
    throw ConfigError("vocab size " + std::to_string(vocab_size) +
                      " is below the byte alphabet plus specials (" +
                      std::to_string(256 + specials.size()) + ")");
  }

  std::vector<std::string> strings(specials.begin(), specials.end());
  const auto byte_base = static_cast<TokenId>(strings.size());
  for (int b = 0; b < 256; ++b) {
    strings.push_back(byte_level::encode_bytes(std::string(1, static_cast<char>(b))));
  }
  std::unordered_map<std::string, TokenId, StringHash, std::equal_to<>> index;
  for (TokenId i = 0; i < strings.size(); ++i) index.emplace(strings[i], i);

  const auto sorted_specials = sort_longest_first(specials);
  std::map<std::string_view, std::int64_t> piece_counts;
  bool any_text = false;
  for (const auto& doc : corpus) {
    if (doc.empty()) continue;
    any_text = true;
    split_specials(
        doc, sorted_specials,
        [&](std::string_view segment) {
          for (auto piece : pre_tokenizer.split(segment)) ++piece_counts[piece];
        },
        [](const std::string&) {});
  }
  if (!any_text) throw InputError("training corpus contains no non-empty text");

  PairTrainer trainer(strings);
  for (const auto& [piece, count] : piece_counts) {
    std::vector<TokenId> syms;
    syms.reserve(piece.size());
    for (char c : piece) syms.push_back(byte_base + static_cast<unsigned char>(c));
    trainer.add_word(std::move(syms), count);
  }
  trainer.build_queue();

  std::vector<BpeTokenizer::MergePair> merges;
  while (strings.size() < vocab_size && !trainer.empty()) {
    const auto [left, right] = trainer.best();
    std::string merged = strings[left] + strings[right];
    TokenId merged_id;
    if (auto it = index.find(merged); it != index.end()) {
      merged_id = it->second;
    } else {
      merged_id = static_cast<TokenId>(strings.size());
      index.emplace(merged, merged_id);
      strings.push_back(merged);
    }
    merges.emplace_back(strings[left], strings[right]);
    trainer.apply(left, right, merged_id);
  }

  return BpeTokenizer(Vocabulary(std::move(strings), special_set), merges,
                      std::move(pre_tokenizer));
}

}  // namespace tokengraft
