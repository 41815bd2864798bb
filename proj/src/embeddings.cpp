#include "openslot/embeddings.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace openslot {

std::string Lowercase(std::string text) {
  for (char& c : text) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return text;
}

std::vector<std::string> SplitWhitespace(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string token;
  while (in >> token) out.push_back(token);
  return out;
}

std::string SpanValue(const Utterance& utterance, const SlotSpan& span) {
  std::string value;
  for (std::size_t i = span.start; i < span.end; ++i) {
    if (i > span.start) value += ' ';
    value += Lowercase(utterance.tokens.at(i));
  }
  return value;
}

Vocabulary::Vocabulary()
    : Vocabulary(std::vector<std::string>{std::string(kPadToken),
                                          std::string(kUnkToken)}) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens)
    : tokens_(std::move(tokens)) {
  if (tokens_.size() < 2 || tokens_[kPad] != kPadToken ||
      tokens_[kUnk] != kUnkToken) {
    throw Error("vocabulary must start with the reserved pad/unk tokens");
  }
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], i).second) {
      throw Error("duplicate vocabulary token '" + tokens_[i] + "'");
    }
  }
}

bool Vocabulary::Contains(std::string_view token) const {
  return index_.count(std::string(token)) != 0;
}

std::size_t Vocabulary::Index(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

std::vector<std::size_t> Vocabulary::Indices(
    std::span<const std::string> tokens) const {
  std::vector<std::size_t> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(Index(t));
  return out;
}

Vocabulary BuildVocabulary(std::span<const Utterance> corpus,
                           std::span<const SlotSchema> descriptions) {
  if (corpus.empty()) throw Error("cannot build a vocabulary from an empty corpus");
  std::set<std::string> seen;
  for (const auto& u : corpus) seen.insert(u.tokens.begin(), u.tokens.end());
  for (const auto& s : descriptions) {
    seen.insert(s.description.begin(), s.description.end());
  }
  seen.erase(std::string(Vocabulary::kPadToken));
  seen.erase(std::string(Vocabulary::kUnkToken));
  std::vector<std::string> tokens{std::string(Vocabulary::kPadToken),
                                  std::string(Vocabulary::kUnkToken)};
  tokens.insert(tokens.end(), seen.begin(), seen.end());
  return Vocabulary(std::move(tokens));
}

namespace {

Array RandomArray(Shape shape, Rng& rng) {
  Array a(std::move(shape));
  for (double& v : a.data()) {
    v = rng.Uniform(-kEmbeddingInitRange, kEmbeddingInitRange);
  }
  return a;
}

}  // namespace

EmbeddingTables RandomTables(const Vocabulary& vocab, std::size_t dim, Rng& rng) {
  EmbeddingTables tables;
  tables.word = RandomArray({vocab.size(), dim}, rng);
  tables.tag = RandomArray({kNumTags, dim}, rng);
  return tables;
}

EmbeddingTables LoadPretrained(const std::string& path, const Vocabulary& vocab,
                               std::size_t dim, Rng& rng) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open embeddings file '" + path + "'");

  // Random rows first so every row draws the same numbers regardless of
  // which tokens the file covers.
  EmbeddingTables tables = RandomTables(vocab, dim, rng);

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::vector<std::string> fields = SplitWhitespace(line);
    if (fields.empty()) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    if (fields.size() != dim + 1) {
      throw Error(where + ": expected a token and " + std::to_string(dim) +
                  " values, got " + std::to_string(fields.size() - 1) +
                  " values");
    }
    std::vector<double> row(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      const std::string& f = fields[i + 1];
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), row[i]);
      if (ec != std::errc() || ptr != f.data() + f.size() ||
          !std::isfinite(row[i])) {
        throw Error(where + ": cannot parse value '" + f + "'");
      }
    }
    const std::string token = fields[0];
    if (!vocab.Contains(token) || token == Vocabulary::kUnkToken ||
        token == Vocabulary::kPadToken) {
      continue;
    }
    std::copy(row.begin(), row.end(),
              tables.word.data().begin() + vocab.Index(token) * dim);
  }
  return tables;
}

void InstallTables(ParamStore& params, EmbeddingTables tables,
                   bool freeze_words) {
  params.Add(kWordTableParam, std::move(tables.word), !freeze_words);
  params.Add(kTagTableParam, std::move(tables.tag));
}

Var EmbedTokens(Graph& graph, const ParamStore& params,
                std::span<const std::size_t> token_ids) {
  if (token_ids.empty()) throw Error("cannot embed an empty token list");
  return Rows(graph.Param(params, kWordTableParam),
              std::vector<std::size_t>(token_ids.begin(), token_ids.end()));
}

Var EmbedTag(Graph& graph, const ParamStore& params, IobTag tag) {
  return Rows(graph.Param(params, kTagTableParam),
              {static_cast<std::size_t>(tag)});
}

}  // namespace openslot
