#include "sentops/embedding.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "sentops/error.hpp"
#include "sentops/random.hpp"

namespace sentops {

namespace {

using nlohmann::json;

bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

std::vector<double> normal_vector(Rng& rng, std::size_t dim, double stddev) {
  std::vector<double> v(dim);
  for (auto& x : v) x = rng.normal() * stddev;
  return v;
}

// Base and offset components are snapped to multiples of 2^-30 so that
// base + offset and its difference with base are exact in double precision.
double snap(double x) { return std::ldexp(std::nearbyint(std::ldexp(x, 30)), -30); }

constexpr std::uint64_t kOffsetStream = 0x6f66667365740000ULL;

}  // namespace

EmbeddingMatrix::EmbeddingMatrix(std::size_t dim, std::string provider_tag)
    : dim_(dim), provider_tag_(std::move(provider_tag)) {
  if (dim_ == 0) throw ContractError("embedding dimension must be positive");
}

void EmbeddingMatrix::insert(SentenceId id, std::vector<double> vector) {
  if (vector.size() != dim_) {
    throw FormatError("sentence " + std::to_string(id) + " has dimension " + std::to_string(vector.size()) +
                      ", expected " + std::to_string(dim_));
  }
  if (!all_finite(vector)) throw FormatError("sentence " + std::to_string(id) + " has a non-finite value");
  if (!rows_.emplace(id, std::move(vector)).second) {
    throw FormatError("duplicate sentence id " + std::to_string(id));
  }
}

std::span<const double> EmbeddingMatrix::row(SentenceId id) const {
  const auto it = rows_.find(id);
  if (it == rows_.end()) throw ContractError("no embedding for sentence " + std::to_string(id));
  return it->second;
}

EmbeddingMatrix load_sentence_vectors(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open sentence-vector file " + path.string());
  std::optional<EmbeddingMatrix> matrix;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto where = path.string() + " line " + std::to_string(line_no) + ": ";
    std::vector<double> vec;
    SentenceId id = 0;
    try {
      const auto doc = json::parse(line);
      id = doc.at("id").get<SentenceId>();
      for (const auto& v : doc.at("vector")) {
        if (!v.is_number()) throw FormatError("vector entries must be numbers");
        vec.push_back(v.get<double>());
      }
    } catch (const json::exception& e) {
      throw FormatError(where + e.what());
    } catch (const FormatError& e) {
      throw FormatError(where + e.what());
    }
    if (vec.empty()) throw FormatError(where + "empty vector");
    if (!all_finite(vec)) throw FormatError(where + "non-finite value");
    if (!matrix) matrix.emplace(vec.size(), path.filename().string());
    try {
      matrix->insert(id, std::move(vec));
    } catch (const FormatError& e) {
      throw FormatError(where + e.what());
    }
  }
  if (!matrix) throw FormatError(path.string() + ": no records");
  return std::move(*matrix);
}

void write_sentence_vectors(std::ostream& out, const EmbeddingMatrix& matrix) {
  for (const auto& [id, vec] : matrix.rows()) out << json{{"id", id}, {"vector", vec}}.dump() << '\n';
}

void TokenVectorTable::insert(std::string token, std::vector<double> vector) {
  if (vector.size() != dim_) throw FormatError("token vector for \"" + token + "\" has the wrong dimension");
  if (!all_finite(vector)) throw FormatError("token vector for \"" + token + "\" has a non-finite value");
  vectors_.insert_or_assign(std::move(token), std::move(vector));
}

std::vector<double> TokenVectorTable::lookup(const std::string& token) const {
  if (const auto it = vectors_.find(token); it != vectors_.end()) return it->second;
  if (policy_ == OovPolicy::kZeroVector) return std::vector<double>(dim_, 0.0);
  Rng rng(fnv1a(token));
  return normal_vector(rng, dim_, 1.0);
}

TokenVectorTable load_token_vectors(const std::filesystem::path& path, OovPolicy policy) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open token-vector file " + path.string());
  std::optional<TokenVectorTable> table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string token;
    if (!(fields >> token)) continue;
    std::vector<double> vec;
    std::string field;
    while (fields >> field) {
      try {
        std::size_t used = 0;
        vec.push_back(std::stod(field, &used));
        if (used != field.size()) throw std::invalid_argument(field);
      } catch (const std::exception&) {
        throw FormatError(path.string() + " line " + std::to_string(line_no) + ": bad number \"" + field + "\"");
      }
    }
    if (line_no == 1 && vec.size() == 1 && token.find_first_not_of("0123456789") == std::string::npos) {
      continue;  // "<count> <dim>" header
    }
    if (vec.empty()) throw FormatError(path.string() + " line " + std::to_string(line_no) + ": token without vector");
    if (!table) table.emplace(vec.size(), policy);
    try {
      table->insert(std::move(token), std::move(vec));
    } catch (const FormatError& e) {
      throw FormatError(path.string() + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!table) throw FormatError(path.string() + ": no records");
  return std::move(*table);
}

std::vector<double> average_tokens(std::span<const std::string> sentence, const TokenVectorTable& table) {
  if (sentence.empty()) throw ContractError("average_tokens: empty sentence");
  std::vector<double> sum(table.dim(), 0.0);
  for (const auto& tok : sentence) {
    const auto v = table.lookup(tok);
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += v[i];
  }
  for (auto& x : sum) x /= static_cast<double>(sentence.size());
  return sum;
}

EmbeddingMatrix synthesize_planted(std::span<const PatternGroup> groups, const PlantedConfig& config) {
  if (config.dim < 2) throw ContractError("synthesize_planted: dim must be at least 2");
  if (!(config.offset_scale > 0.0)) throw ContractError("synthesize_planted: offset_scale must be positive");
  if (!(config.noise_scale >= 0.0)) throw ContractError("synthesize_planted: noise_scale must be non-negative");
  if (!config.group_noise_scale.empty() && config.group_noise_scale.size() != groups.size()) {
    throw ContractError("synthesize_planted: group_noise_scale must have one entry per group");
  }

  EmbeddingMatrix out(config.dim, "planted");
  const double inv_sqrt_dim = 1.0 / std::sqrt(static_cast<double>(config.dim));
  for (std::size_t g = 0; g < groups.size(); ++g) {
    Rng offset_rng(derive_seed(config.seed, kOffsetStream + g));
    std::vector<double> offset;
    double norm = 0.0;
    while (norm == 0.0) {
      offset = normal_vector(offset_rng, config.dim, 1.0);
      for (double x : offset) norm += x * x;
      norm = std::sqrt(norm);
    }
    for (auto& x : offset) x = snap(x * config.offset_scale / norm);

    const double noise = config.group_noise_scale.empty() ? config.noise_scale : config.group_noise_scale[g];
    for (PairId pair : groups[g].members) {
      Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(pair)));
      auto base = normal_vector(rng, config.dim, 1.0);
      for (auto& x : base) x = snap(x);
      std::vector<double> premise(config.dim);
      std::vector<double> hypothesis(config.dim);
      for (std::size_t i = 0; i < config.dim; ++i) premise[i] = base[i] + rng.normal() * noise * inv_sqrt_dim;
      for (std::size_t i = 0; i < config.dim; ++i) {
        hypothesis[i] = base[i] + offset[i] + rng.normal() * noise * inv_sqrt_dim;
      }
      out.insert(premise_sentence_id(pair), std::move(premise));
      out.insert(hypothesis_sentence_id(pair), std::move(hypothesis));
    }
  }
  return out;
}

}  // namespace sentops
