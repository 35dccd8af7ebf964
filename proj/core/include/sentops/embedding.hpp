#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "sentops/corpus.hpp"
#include "sentops/pattern.hpp"

namespace sentops {

/// Sentence vectors keyed by sentence id. Every row has length dim() and
/// only finite values; insert() enforces both.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix(std::size_t dim, std::string provider_tag);

  void insert(SentenceId id, std::vector<double> vector);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return rows_.size(); }
  const std::string& provider_tag() const noexcept { return provider_tag_; }

  bool contains(SentenceId id) const { return rows_.contains(id); }
  std::span<const double> row(SentenceId id) const;
  const std::map<SentenceId, std::vector<double>>& rows() const noexcept { return rows_; }

 private:
  std::size_t dim_;
  std::string provider_tag_;
  std::map<SentenceId, std::vector<double>> rows_;
};

/// Reads {"id": <int>, "vector": [...]} JSON Lines. Blank lines are ignored.
/// Throws FormatError naming the line for a dimension mismatch, a non-finite
/// value, a duplicate id or a malformed record, and for an empty file.
EmbeddingMatrix load_sentence_vectors(const std::filesystem::path& path);

void write_sentence_vectors(std::ostream& out, const EmbeddingMatrix& matrix);

enum class OovPolicy { kZeroVector, kHashedRandom };

class TokenVectorTable {
 public:
  TokenVectorTable(std::size_t dim, OovPolicy policy) : dim_(dim), policy_(policy) {}

  void insert(std::string token, std::vector<double> vector);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return vectors_.size(); }
  OovPolicy oov_policy() const noexcept { return policy_; }
  bool contains(const std::string& token) const { return vectors_.contains(token); }

  /// Vector for `token`; out-of-vocabulary tokens follow the OOV policy.
  /// hashed_random draws standard normal components from a generator seeded
  /// by the FNV-1a hash of the token bytes.
  std::vector<double> lookup(const std::string& token) const;

 private:
  std::size_t dim_;
  OovPolicy policy_;
  std::unordered_map<std::string, std::vector<double>> vectors_;
};

/// Word-vector text layout: "token v1 ... vd" per line. A leading
/// "<count> <dim>" header line is recognised and skipped.
TokenVectorTable load_token_vectors(const std::filesystem::path& path, OovPolicy policy = OovPolicy::kZeroVector);

/// Arithmetic mean of the token vectors. OOV tokens under the zero policy
/// still count in the denominator.
std::vector<double> average_tokens(std::span<const std::string> sentence, const TokenVectorTable& table);

struct PlantedConfig {
  std::size_t dim = 64;
  double offset_scale = 1.0;
  double noise_scale = 0.1;
  std::uint64_t seed = 0;
  /// Optional per-group noise scale, indexed like the groups; overrides
  /// noise_scale where present.
  std::vector<double> group_noise_scale;
};

/// Planted-structure embeddings. For every member pair:
///   premise    = base + noise1
///   hypothesis = base + offset[group] + noise2
/// base has standard normal components, offset[group] is a random direction
/// of norm offset_scale, and each noise vector has i.i.d. normal components
/// with standard deviation noise_scale / sqrt(dim) (expected norm about
/// noise_scale). Offsets come from stream (seed, group index) and pair
/// vectors from stream (seed, pair id), so the output is bit-reproducible.
/// Base and offset components lie on a 2^-30 grid, which makes
/// premise - hypothesis exactly -offset[group] when the noise is zero.
EmbeddingMatrix synthesize_planted(std::span<const PatternGroup> groups, const PlantedConfig& config);

}  // namespace sentops
