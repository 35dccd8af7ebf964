#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "sentops/cluster.hpp"
#include "sentops/corpus.hpp"
#include "sentops/embedding.hpp"
#include "sentops/metrics.hpp"
#include "sentops/operations.hpp"
#include "sentops/pattern.hpp"
#include "sentops/tsne.hpp"

namespace sentops {

/// Every tunable of the study. Loaded from a flat "key = value" file and
/// overridden from the command line; see config_keys() for the full list.
struct PipelineConfig {
  std::vector<std::filesystem::path> corpus;
  std::string corpus_format = "auto";  // auto | jsonl | tsv
  std::size_t min_support = 20;
  bool drop_identity = true;

  std::vector<OperationKind> operations{kAllOperations[0], kAllOperations[1], kAllOperations[2], kAllOperations[3]};
  bool normalize = false;

  std::string embedding = "planted";  // planted | vectors | average
  std::filesystem::path embedding_path;
  OovPolicy oov = OovPolicy::kZeroVector;
  PlantedConfig planted;

  std::size_t kmeans_restarts = 100;
  std::size_t kmeans_max_iter = 300;
  double kmeans_tol = 1e-6;
  std::uint64_t seed = 0;
  std::size_t threads = 0;

  AmiNormalizer ami_normalizer = AmiNormalizer::kArithmetic;

  std::size_t noisy_top_n = 7;
  /// k of the clustering behind the weighted pattern inertia; 0 means the
  /// number of patterns.
  std::size_t inertia_k = 0;
  OperationKind analysis_operation = OperationKind::kSubtract;
  std::size_t k_min = 2;
  std::size_t k_max = 30;
  TsneConfig tsne;
  bool write_svg = true;

  std::filesystem::path output_dir = "sentops-out";
};

/// Recognised keys, in manifest order.
const std::vector<std::string>& config_keys();

/// Sets one key from its textual value. Throws UsageError for unknown keys
/// or unparsable values.
void set_config_value(PipelineConfig& config, std::string_view key, std::string_view value);

/// Textual value of a key, in the same syntax set_config_value accepts.
std::string get_config_value(const PipelineConfig& config, std::string_view key);

/// Parses "key = value" lines; '#' starts a comment. Relative paths inside
/// the file resolve against the file's directory.
PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base = {});

/// Checks that referenced inputs exist and parameters are in range.
void validate_config(const PipelineConfig& config);

/// "key = value" lines for every key.
std::string render_config(const PipelineConfig& config);

/// Hashes identifying the configuration slice each artifact depends on.
std::string extract_hash(const PipelineConfig& config);
std::string embed_hash(const PipelineConfig& config);
std::string operations_hash(const PipelineConfig& config, OperationKind kind);
std::string clustering_hash(const PipelineConfig& config, OperationKind kind);
std::string analysis_hash(const PipelineConfig& config);

/// Artifact file names inside the output directory.
namespace artifacts {
inline constexpr std::string_view kPairs = "pairs.jsonl";
inline constexpr std::string_view kPatternReport = "patterns.csv";
inline constexpr std::string_view kGroups = "groups.jsonl";
inline constexpr std::string_view kSentences = "sentences.tsv";
inline constexpr std::string_view kExtractSummary = "extract_summary.json";
inline constexpr std::string_view kEmbeddings = "embeddings.jsonl";
inline constexpr std::string_view kEmbeddingsMeta = "embeddings.meta.json";
inline constexpr std::string_view kMetricsCsv = "metrics.csv";
inline constexpr std::string_view kMetricsJson = "metrics.json";
inline constexpr std::string_view kInertia = "pattern_inertia.csv";
inline constexpr std::string_view kSelectK = "select_k.csv";
inline constexpr std::string_view kComposition = "clusters.txt";
std::string operations_file(OperationKind kind);
std::string clustering_file(OperationKind kind);
}  // namespace artifacts

struct ExtractSummary {
  std::size_t raw_records = 0;
  std::size_t skipped_records = 0;
  std::size_t rejected_pairs = 0;
  std::size_t duplicates = 0;
  std::size_t unique_pairs = 0;
  std::size_t groups_total = 0;
  std::size_t groups_kept = 0;            // (pattern, label) groups
  std::size_t distinct_patterns_kept = 0; // patterns regardless of label
  std::size_t pairs_kept = 0;
};

struct MetricRow {
  std::string subset;  // "all" or "filtered"
  OperationKind kind = OperationKind::kSubtract;
  std::size_t points = 0;
  std::size_t patterns = 0;
  std::size_t guarded_components = 0;
  double ari = 0.0;
  double homogeneity = 0.0;
  double completeness = 0.0;
  double v_measure = 0.0;
  double ami = 0.0;
};

struct EvaluateResult {
  std::vector<MetricRow> rows;
  std::vector<int> removed_patterns;
};

struct AnalyzeResult {
  std::vector<PatternInertia> inertia;
  std::vector<int> removed_patterns;
  KSelectionReport selection;
  std::size_t chosen_k = 0;
  Clustering clustering;
  std::string composition;
};

/// Progress and warnings go to `log`; artifacts go to config.output_dir.
ExtractSummary cmd_extract(const PipelineConfig& config, std::ostream& log);
void cmd_embed(const PipelineConfig& config, std::ostream& log);
void cmd_build_ops(const PipelineConfig& config, std::ostream& log);
void cmd_cluster(const PipelineConfig& config, std::ostream& log);
EvaluateResult cmd_evaluate(const PipelineConfig& config, std::ostream& log);
KSelectionReport cmd_select_k(const PipelineConfig& config, std::ostream& log);
void cmd_project(const PipelineConfig& config, std::ostream& log);
AnalyzeResult cmd_analyze(const PipelineConfig& config, std::ostream& log);
void cmd_pipeline(const PipelineConfig& config, std::ostream& log);

/// One line per (pattern, cluster) in the form "two X → X (52/56)", grouped
/// under "Cluster <n> (<size> pairs)" headings.
std::string composition_report(std::span<const PatternGroup> groups, std::span<const int> pattern_ids,
                               std::span<const int> assignment, std::size_t k);

/// Writes "run_manifest_<command>.txt": a timestamp line followed by every
/// configuration value.
void write_run_manifest(const PipelineConfig& config, std::string_view command);

}  // namespace sentops
