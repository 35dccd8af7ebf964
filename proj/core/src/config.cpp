#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "sentops/error.hpp"
#include "sentops/pipeline.hpp"
#include "sentops/random.hpp"

namespace sentops {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    auto item = trim(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (!item.empty()) out.push_back(std::move(item));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  throw UsageError("invalid value \"" + std::string(value) + "\" for " + std::string(key));
}

std::size_t to_size(std::string_view key, std::string_view v) {
  std::size_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v);
  return out;
}

std::uint64_t to_u64(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v);
  return out;
}

double to_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v);
  return out;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, v);
}

OperationKind to_operation(std::string_view key, std::string_view v) {
  const auto kind = parse_operation(v);
  if (!kind) bad_value(key, v);
  return *kind;
}

std::string fmt(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

std::string fmt(bool b) { return b ? "true" : "false"; }

struct Accessor {
  std::function<void(PipelineConfig&, std::string_view)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

const std::vector<std::pair<std::string, Accessor>>& accessors() {
  using C = PipelineConfig;
  static const std::vector<std::pair<std::string, Accessor>> table = {
      {"corpus",
       {[](C& c, std::string_view v) {
          c.corpus.clear();
          for (auto& p : split_list(v)) c.corpus.emplace_back(p);
        },
        [](const C& c) {
          std::string s;
          for (const auto& p : c.corpus) s += (s.empty() ? "" : ",") + p.string();
          return s;
        }}},
      {"corpus_format",
       {[](C& c, std::string_view v) {
          if (v != "auto" && v != "jsonl" && v != "tsv") bad_value("corpus_format", v);
          c.corpus_format = v;
        },
        [](const C& c) { return c.corpus_format; }}},
      {"min_support",
       {[](C& c, std::string_view v) { c.min_support = to_size("min_support", v); },
        [](const C& c) { return std::to_string(c.min_support); }}},
      {"drop_identity",
       {[](C& c, std::string_view v) { c.drop_identity = to_bool("drop_identity", v); },
        [](const C& c) { return fmt(c.drop_identity); }}},
      {"operations",
       {[](C& c, std::string_view v) {
          c.operations.clear();
          for (auto& item : split_list(v)) {
            const auto kind = to_operation("operations", item);
            if (std::find(c.operations.begin(), c.operations.end(), kind) == c.operations.end()) c.operations.push_back(kind);
          }
          if (c.operations.empty()) bad_value("operations", v);
        },
        [](const C& c) {
          std::string s;
          for (auto k : c.operations) s += (s.empty() ? "" : ",") + std::string(operation_name(k));
          return s;
        }}},
      {"normalize",
       {[](C& c, std::string_view v) { c.normalize = to_bool("normalize", v); },
        [](const C& c) { return fmt(c.normalize); }}},
      {"embedding",
       {[](C& c, std::string_view v) {
          if (v != "planted" && v != "vectors" && v != "average") bad_value("embedding", v);
          c.embedding = v;
        },
        [](const C& c) { return c.embedding; }}},
      {"embedding_path",
       {[](C& c, std::string_view v) { c.embedding_path = std::string(v); },
        [](const C& c) { return c.embedding_path.string(); }}},
      {"oov",
       {[](C& c, std::string_view v) {
          if (v == "zero") c.oov = OovPolicy::kZeroVector;
          else if (v == "hashed") c.oov = OovPolicy::kHashedRandom;
          else bad_value("oov", v);
        },
        [](const C& c) { return std::string(c.oov == OovPolicy::kZeroVector ? "zero" : "hashed"); }}},
      {"planted_dim",
       {[](C& c, std::string_view v) { c.planted.dim = to_size("planted_dim", v); },
        [](const C& c) { return std::to_string(c.planted.dim); }}},
      {"planted_offset",
       {[](C& c, std::string_view v) { c.planted.offset_scale = to_double("planted_offset", v); },
        [](const C& c) { return fmt(c.planted.offset_scale); }}},
      {"planted_noise",
       {[](C& c, std::string_view v) { c.planted.noise_scale = to_double("planted_noise", v); },
        [](const C& c) { return fmt(c.planted.noise_scale); }}},
      {"planted_seed",
       {[](C& c, std::string_view v) { c.planted.seed = to_u64("planted_seed", v); },
        [](const C& c) { return std::to_string(c.planted.seed); }}},
      {"kmeans_restarts",
       {[](C& c, std::string_view v) { c.kmeans_restarts = to_size("kmeans_restarts", v); },
        [](const C& c) { return std::to_string(c.kmeans_restarts); }}},
      {"kmeans_max_iter",
       {[](C& c, std::string_view v) { c.kmeans_max_iter = to_size("kmeans_max_iter", v); },
        [](const C& c) { return std::to_string(c.kmeans_max_iter); }}},
      {"kmeans_tol",
       {[](C& c, std::string_view v) { c.kmeans_tol = to_double("kmeans_tol", v); },
        [](const C& c) { return fmt(c.kmeans_tol); }}},
      {"seed",
       {[](C& c, std::string_view v) { c.seed = to_u64("seed", v); },
        [](const C& c) { return std::to_string(c.seed); }}},
      {"threads",
       {[](C& c, std::string_view v) {
          c.threads = to_size("threads", v);
          c.tsne.threads = c.threads;
        },
        [](const C& c) { return std::to_string(c.threads); }}},
      {"ami_normalizer",
       {[](C& c, std::string_view v) {
          if (v == "arithmetic") c.ami_normalizer = AmiNormalizer::kArithmetic;
          else if (v == "max") c.ami_normalizer = AmiNormalizer::kMax;
          else bad_value("ami_normalizer", v);
        },
        [](const C& c) { return std::string(c.ami_normalizer == AmiNormalizer::kMax ? "max" : "arithmetic"); }}},
      {"noisy_top_n",
       {[](C& c, std::string_view v) { c.noisy_top_n = to_size("noisy_top_n", v); },
        [](const C& c) { return std::to_string(c.noisy_top_n); }}},
      {"inertia_k",
       {[](C& c, std::string_view v) { c.inertia_k = to_size("inertia_k", v); },
        [](const C& c) { return std::to_string(c.inertia_k); }}},
      {"analysis_operation",
       {[](C& c, std::string_view v) { c.analysis_operation = to_operation("analysis_operation", v); },
        [](const C& c) { return std::string(operation_name(c.analysis_operation)); }}},
      {"k_min",
       {[](C& c, std::string_view v) { c.k_min = to_size("k_min", v); },
        [](const C& c) { return std::to_string(c.k_min); }}},
      {"k_max",
       {[](C& c, std::string_view v) { c.k_max = to_size("k_max", v); },
        [](const C& c) { return std::to_string(c.k_max); }}},
      {"tsne_perplexity",
       {[](C& c, std::string_view v) { c.tsne.perplexity = to_double("tsne_perplexity", v); },
        [](const C& c) { return fmt(c.tsne.perplexity); }}},
      {"tsne_iterations",
       {[](C& c, std::string_view v) { c.tsne.iterations = to_size("tsne_iterations", v); },
        [](const C& c) { return std::to_string(c.tsne.iterations); }}},
      {"tsne_learning_rate",
       {[](C& c, std::string_view v) { c.tsne.learning_rate = to_double("tsne_learning_rate", v); },
        [](const C& c) { return fmt(c.tsne.learning_rate); }}},
      {"tsne_exaggeration",
       {[](C& c, std::string_view v) { c.tsne.early_exaggeration = to_double("tsne_exaggeration", v); },
        [](const C& c) { return fmt(c.tsne.early_exaggeration); }}},
      {"tsne_exaggeration_iterations",
       {[](C& c, std::string_view v) {
          c.tsne.exaggeration_iterations = to_size("tsne_exaggeration_iterations", v);
          c.tsne.momentum_switch = c.tsne.exaggeration_iterations;
        },
        [](const C& c) { return std::to_string(c.tsne.exaggeration_iterations); }}},
      {"tsne_seed",
       {[](C& c, std::string_view v) { c.tsne.seed = to_u64("tsne_seed", v); },
        [](const C& c) { return std::to_string(c.tsne.seed); }}},
      {"tsne_pca",
       {[](C& c, std::string_view v) { c.tsne.pca_components = to_size("tsne_pca", v); },
        [](const C& c) { return std::to_string(c.tsne.pca_components); }}},
      {"write_svg",
       {[](C& c, std::string_view v) { c.write_svg = to_bool("write_svg", v); },
        [](const C& c) { return fmt(c.write_svg); }}},
      {"output_dir",
       {[](C& c, std::string_view v) { c.output_dir = std::string(v); },
        [](const C& c) { return c.output_dir.string(); }}},
  };
  return table;
}

const Accessor& accessor(std::string_view key) {
  for (const auto& [name, acc] : accessors()) {
    if (name == key) return acc;
  }
  throw UsageError("unknown configuration key \"" + std::string(key) + "\"");
}

std::string hash_of(std::initializer_list<std::string> parts) {
  std::uint64_t h = fnv1a("");
  for (const auto& p : parts) {
    h = fnv1a(p, h);
    h = fnv1a("\n", h);
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string kv(const PipelineConfig& c, std::string_view key) {
  return std::string(key) + "=" + get_config_value(c, key);
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, acc] : accessors()) k.push_back(name);
    return k;
  }();
  return keys;
}

void set_config_value(PipelineConfig& config, std::string_view key, std::string_view value) {
  accessor(key).set(config, trim(value));
}

std::string get_config_value(const PipelineConfig& config, std::string_view key) {
  return accessor(key).get(config);
}

PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig config) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  const auto base_dir = path.parent_path();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError(path.string() + " line " + std::to_string(line_no) + ": expected key = value");
    }
    const auto key = trim(std::string_view(line).substr(0, eq));
    auto value = trim(std::string_view(line).substr(eq + 1));
    try {
      if (key == "corpus") {
        std::string resolved;
        for (const auto& p : split_list(value)) {
          std::filesystem::path fp(p);
          if (fp.is_relative()) fp = base_dir / fp;
          resolved += (resolved.empty() ? "" : ",") + fp.lexically_normal().string();
        }
        value = resolved;
      } else if ((key == "embedding_path" || key == "output_dir") && !value.empty() &&
                 std::filesystem::path(value).is_relative()) {
        value = (base_dir / value).lexically_normal().string();
      }
      set_config_value(config, key, value);
    } catch (const UsageError& e) {
      throw UsageError(path.string() + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return config;
}

void validate_config(const PipelineConfig& c) {
  for (const auto& p : c.corpus) {
    if (!std::filesystem::exists(p)) throw UsageError("corpus file does not exist: " + p.string());
  }
  if ((c.embedding == "vectors" || c.embedding == "average") && !std::filesystem::exists(c.embedding_path)) {
    throw UsageError("embedding_path does not exist: " + c.embedding_path.string());
  }
  if (c.min_support < 1) throw UsageError("min_support must be at least 1");
  if (c.kmeans_restarts < 1) throw UsageError("kmeans_restarts must be at least 1");
  if (c.kmeans_max_iter < 1) throw UsageError("kmeans_max_iter must be at least 1");
  if (c.k_min < 2 || c.k_min > c.k_max) throw UsageError("need 2 <= k_min <= k_max");
  if (c.planted.dim < 2) throw UsageError("planted_dim must be at least 2");
  if (!(c.planted.offset_scale > 0.0) || !(c.planted.noise_scale >= 0.0)) {
    throw UsageError("planted_offset must be positive and planted_noise non-negative");
  }
}

std::string render_config(const PipelineConfig& config) {
  std::string out;
  for (const auto& key : config_keys()) out += key + " = " + get_config_value(config, key) + "\n";
  return out;
}

std::string extract_hash(const PipelineConfig& c) {
  return hash_of({"extract", kv(c, "corpus"), kv(c, "corpus_format"), kv(c, "min_support"), kv(c, "drop_identity")});
}

std::string embed_hash(const PipelineConfig& c) {
  if (c.embedding == "planted") {
    return hash_of({"embed", extract_hash(c), kv(c, "embedding"), kv(c, "planted_dim"), kv(c, "planted_offset"),
                    kv(c, "planted_noise"), kv(c, "planted_seed")});
  }
  return hash_of({"embed", extract_hash(c), kv(c, "embedding"), kv(c, "embedding_path"), kv(c, "oov")});
}

std::string operations_hash(const PipelineConfig& c, OperationKind kind) {
  return hash_of({"operations", embed_hash(c), std::string(operation_name(kind)), kv(c, "normalize")});
}

std::string clustering_hash(const PipelineConfig& c, OperationKind kind) {
  return hash_of({"cluster", operations_hash(c, kind), kv(c, "kmeans_restarts"), kv(c, "kmeans_max_iter"),
                  kv(c, "kmeans_tol"), kv(c, "seed")});
}

std::string analysis_hash(const PipelineConfig& c) {
  return hash_of({"analysis", clustering_hash(c, c.analysis_operation), kv(c, "noisy_top_n"), kv(c, "inertia_k"),
                  kv(c, "k_min"), kv(c, "k_max"), kv(c, "tsne_perplexity"), kv(c, "tsne_iterations"),
                  kv(c, "tsne_learning_rate"), kv(c, "tsne_exaggeration"), kv(c, "tsne_exaggeration_iterations"),
                  kv(c, "tsne_seed"), kv(c, "tsne_pca")});
}

}  // namespace sentops
