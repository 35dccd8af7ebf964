#include "sentops/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "sentops/error.hpp"
#include "sentops/metrics.hpp"

namespace sentops {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

fs::path out_path(const PipelineConfig& c, std::string_view name) { return c.output_dir / std::string(name); }

std::ofstream open_out(const fs::path& path) {
  fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const fs::path& path, std::string_view produced_by) {
  if (!fs::exists(path)) {
    throw ArtifactError(path.string() + " not found; run \"" + std::string(produced_by) + "\" first");
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  return in;
}

void require_hash(const fs::path& path, const std::string& found, const std::string& expected) {
  if (found != expected) {
    throw ArtifactError(path.string() + " was produced with config hash " + found + ", current config expects " +
                        expected + "; re-run the producing stage");
  }
}

std::string fixed(double x, int digits = 6) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << x;
  return s.str();
}

std::vector<PatternGroup> load_groups(const PipelineConfig& c) {
  const auto path = out_path(c, artifacts::kGroups);
  auto in = open_in(path, "extract");
  auto manifest = read_group_manifest(in);
  require_hash(path, manifest.config_hash, extract_hash(c));
  return std::move(manifest.groups);
}

std::map<PairId, SentencePair> load_pairs(const PipelineConfig& c) {
  const auto path = out_path(c, artifacts::kPairs);
  auto in = open_in(path, "extract");
  std::map<PairId, SentencePair> pairs;
  std::string line;
  bool header = false;
  std::size_t line_no = 0;
  try {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const auto doc = json::parse(line);
      if (!header) {
        if (doc.value("artifact", "") != "pairs") throw FormatError("not a pairs file");
        require_hash(path, doc.at("config_hash").get<std::string>(), extract_hash(c));
        header = true;
        continue;
      }
      SentencePair p;
      p.id = doc.at("id").get<PairId>();
      p.label = parse_label(doc.at("label").get<std::string>()).value_or(Label::kEntailment);
      p.source = doc.at("source").get<std::string>();
      p.premise = doc.at("premise").get<Tokens>();
      p.hypothesis = doc.at("hypothesis").get<Tokens>();
      pairs.emplace(p.id, std::move(p));
    }
  } catch (const json::exception& e) {
    throw FormatError(path.string() + " line " + std::to_string(line_no) + ": " + e.what());
  }
  return pairs;
}

struct StageEmbeddings {
  EmbeddingMatrix matrix;
  std::string provider;
};

StageEmbeddings load_embeddings(const PipelineConfig& c) {
  const auto meta_path = out_path(c, artifacts::kEmbeddingsMeta);
  auto meta_in = open_in(meta_path, "embed");
  json meta;
  try {
    meta = json::parse(meta_in);
  } catch (const json::exception& e) {
    throw FormatError(meta_path.string() + ": " + e.what());
  }
  require_hash(meta_path, meta.value("config_hash", ""), embed_hash(c));
  return {load_sentence_vectors(out_path(c, artifacts::kEmbeddings)), meta.value("provider", "")};
}

OperationSpace load_ops(const PipelineConfig& c, OperationKind kind) {
  const auto path = out_path(c, artifacts::operations_file(kind));
  open_in(path, "build-ops");
  auto loaded = read_operation_space(path);
  require_hash(path, loaded.config_hash, operations_hash(c, kind));
  return std::move(loaded.space);
}

KMeansOptions kmeans_options(const PipelineConfig& c, std::size_t k) {
  KMeansOptions o;
  o.k = k;
  o.restarts = c.kmeans_restarts;
  o.max_iter = c.kmeans_max_iter;
  o.tol = c.kmeans_tol;
  o.seed = c.seed;
  o.threads = c.threads;
  return o;
}

std::size_t distinct_labels(std::span<const int> labels) {
  return std::set<int>(labels.begin(), labels.end()).size();
}

// k-Means with k = number of patterns, reduced to the number of distinct
// points when the space is degenerate.
Clustering cluster_patterns(const PipelineConfig& c, const Matrix& points, std::span<const int> pattern_ids,
                            std::ostream& log, std::string_view what) {
  std::size_t k = distinct_labels(pattern_ids);
  const std::size_t distinct = count_distinct_rows(points);
  if (distinct < k) {
    log << "warning: " << what << " has only " << distinct << " distinct points for " << k
        << " patterns; clustering with k = " << distinct << "\n";
    k = distinct;
  }
  if (k == 0) throw ContractError(std::string(what) + ": nothing to cluster");
  return kmeans(points, kmeans_options(c, k));
}

Clustering load_or_cluster(const PipelineConfig& c, const OperationSpace& space, std::ostream& log) {
  const auto path = out_path(c, artifacts::clustering_file(space.kind));
  const auto expected = clustering_hash(c, space.kind);
  if (fs::exists(path)) {
    std::ifstream in(path, std::ios::binary);
    auto loaded = read_clustering(in);
    if (loaded.config_hash == expected && loaded.clustering.assignment.size() == space.points.size()) {
      return std::move(loaded.clustering);
    }
  }
  auto clustering = cluster_patterns(c, space.to_matrix(), space.pattern_labels(), log, operation_name(space.kind));
  auto out = open_out(path);
  write_clustering(out, clustering, expected);
  return clustering;
}

// Weighted pattern inertia from the k = patterns clustering, or from a
// dedicated clustering when inertia_k is set.
std::vector<PatternInertia> rank_patterns(const PipelineConfig& c, const OperationSpace& space,
                                          const Clustering& full) {
  const auto matrix = space.to_matrix();
  const auto labels = space.pattern_labels();
  if (c.inertia_k == 0) return pattern_inertia(matrix, labels, full);
  return pattern_inertia(matrix, labels, kmeans(matrix, kmeans_options(c, c.inertia_k)));
}

struct Subset {
  Matrix points;
  std::vector<int> pattern_ids;
  std::vector<PairId> pair_ids;
};

Subset without_patterns(const OperationSpace& space, const std::set<int>& removed) {
  Subset s;
  for (const auto& p : space.points) {
    if (removed.contains(p.pattern_id)) continue;
    s.points.append_row(p.vector);
    s.pattern_ids.push_back(p.pattern_id);
    s.pair_ids.push_back(p.pair_id);
  }
  return s;
}

MetricRow score(const PipelineConfig& c, std::string subset, OperationKind kind, std::span<const int> truth,
                const Clustering& clustering, std::size_t guarded) {
  MetricRow row;
  row.subset = std::move(subset);
  row.kind = kind;
  row.points = truth.size();
  row.patterns = distinct_labels(truth);
  row.guarded_components = guarded;
  const auto s = external_scores(truth, clustering.assignment, c.ami_normalizer);
  row.ari = s.ari;
  row.homogeneity = s.homogeneity;
  row.completeness = s.completeness;
  row.v_measure = s.v_measure;
  row.ami = s.ami;
  return row;
}

void write_inertia_csv(std::ostream& out, std::span<const PatternInertia> ranking, std::span<const PatternGroup> groups) {
  out << "rank,pattern_id,label,pattern,size,weighted_inertia\n";
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    const auto& r = ranking[i];
    const auto& g = groups[static_cast<std::size_t>(r.pattern_id)];
    std::string pattern = render_pattern(g.pattern);
    std::string quoted = "\"";
    for (char ch : pattern) {
      if (ch == '"') quoted += '"';
      quoted += ch;
    }
    quoted += '"';
    out << i + 1 << ',' << r.pattern_id << ',' << label_name(g.label) << ',' << quoted << ',' << r.size << ','
        << std::setprecision(17) << r.value << '\n';
  }
}

std::vector<int> noisy_patterns(const PipelineConfig& c, std::span<const PatternInertia> ranking,
                                std::size_t group_count) {
  if (c.noisy_top_n == 0) return {};
  if (c.noisy_top_n >= group_count) {
    throw UsageError("noisy_top_n = " + std::to_string(c.noisy_top_n) + " must be smaller than the " +
                     std::to_string(group_count) + " patterns");
  }
  std::vector<int> removed;
  for (std::size_t i = 0; i < c.noisy_top_n; ++i) removed.push_back(ranking[i].pattern_id);
  return removed;
}

void write_select_k(const PipelineConfig& c, const KSelectionReport& report) {
  auto out = open_out(out_path(c, artifacts::kSelectK));
  out << "k,inertia,davies_bouldin,silhouette\n" << std::setprecision(17);
  for (const auto& r : report.rows) out << r.k << ',' << r.inertia << ',' << r.davies_bouldin << ',' << r.silhouette << '\n';
  auto js = open_out(out_path(c, "select_k.json"));
  js << json{{"config_hash", analysis_hash(c)},
             {"k_min", c.k_min},
             {"k_max", c.k_max},
             {"best_k_davies_bouldin", report.best_k_davies_bouldin},
             {"best_k_silhouette", report.best_k_silhouette},
             {"agree", report.criteria_agree()}}
            .dump(2)
     << '\n';
}

KSelectionReport run_select_k(const PipelineConfig& c, const Matrix& points, std::ostream& log) {
  std::size_t k_max = c.k_max;
  const std::size_t limit = std::min(count_distinct_rows(points), points.rows() - 1);
  if (k_max > limit) {
    log << "warning: k_max lowered from " << k_max << " to " << limit << " (distinct points)\n";
    k_max = limit;
  }
  if (k_max < c.k_min) throw ContractError("select_k: too few distinct points for k_min = " + std::to_string(c.k_min));
  auto report = select_k(points, c.k_min, k_max, kmeans_options(c, c.k_min));
  log << "select-k: Davies-Bouldin recommends k = " << report.best_k_davies_bouldin << ", silhouette recommends k = "
      << report.best_k_silhouette << (report.criteria_agree() ? " (agree)" : " (disagree)") << "\n";
  return report;
}

void write_projection(const PipelineConfig& c, const std::string& stem, const TsneConfig& used,
                      const Projection2D& proj, std::span<const int> pattern_ids, std::span<const int> clusters, std::span<const PairId> pairs,
                      const std::string& title) {
  {
    auto out = open_out(out_path(c, stem + ".tsv"));
    write_projection_tsv(out, proj.coords, pattern_ids, clusters, pairs);
  }
  {
    auto out = open_out(out_path(c, stem + ".meta.json"));
    out << json{{"config_hash", analysis_hash(c)},
                {"perplexity", used.perplexity},
                {"configured_perplexity", c.tsne.perplexity},
                {"iterations", used.iterations},
                {"learning_rate", used.learning_rate},
                {"early_exaggeration", used.early_exaggeration},
                {"exaggeration_iterations", used.exaggeration_iterations},
                {"seed", used.seed},
                {"standardized", false},
                {"pca_components", used.pca_components},
                {"monotone_kl", used.monotone_kl},
                {"final_kl", proj.kl_history.back()},
                {"rejected_steps", proj.rejected_steps}}
               .dump(2)
        << '\n';
  }
  if (c.write_svg) {
    auto by_pattern = open_out(out_path(c, stem + "_patterns.svg"));
    write_scatter_svg(by_pattern, proj.coords, pattern_ids, title + " (colour = pattern)");
    auto by_cluster = open_out(out_path(c, stem + "_clusters.svg"));
    write_scatter_svg(by_cluster, proj.coords, clusters, title + " (colour = cluster)");
  }
}

TsneConfig tsne_for(const PipelineConfig& c, std::size_t n, std::ostream& log) {
  TsneConfig t = c.tsne;
  t.threads = c.threads;
  const double cap = static_cast<double>(n) / 3.0 - 1e-9;
  if (t.perplexity >= cap) {
    t.perplexity = std::max(1.0 + 1e-6, std::floor(cap * 0.99 * 1e6) / 1e6);
    log << "warning: perplexity lowered to " << t.perplexity << " for " << n << " points\n";
  }
  return t;
}

}  // namespace

namespace artifacts {
std::string operations_file(OperationKind kind) { return "ops_" + std::string(operation_name(kind)) + ".jsonl"; }
std::string clustering_file(OperationKind kind) { return "clustering_" + std::string(operation_name(kind)) + ".json"; }
}  // namespace artifacts

void write_run_manifest(const PipelineConfig& config, std::string_view command) {
  auto out = open_out(out_path(config, "run_manifest_" + std::string(command) + ".txt"));
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  out << "# generated " << std::put_time(&utc, "%Y-%m-%dT%H:%M:%SZ") << '\n';
  out << "command = " << command << '\n';
  out << "extract_hash = " << extract_hash(config) << '\n';
  out << "embed_hash = " << embed_hash(config) << '\n';
  out << "analysis_hash = " << analysis_hash(config) << '\n';
  out << render_config(config);
}

ExtractSummary cmd_extract(const PipelineConfig& c, std::ostream& log) {
  if (c.corpus.empty()) throw UsageError("no corpus files configured (key \"corpus\")");
  ExtractSummary summary;
  std::vector<SentencePair> pairs;
  PairId next_id = 0;
  for (const auto& path : c.corpus) {
    const CorpusFormat format = c.corpus_format == "jsonl"  ? CorpusFormat::kJsonLines
                                : c.corpus_format == "tsv" ? CorpusFormat::kTabSeparated
                                                           : format_for_path(path);
    CorpusReader reader(path, format);
    std::size_t records = 0;
    while (auto raw = reader.next()) {
      ++records;
      try {
        pairs.push_back(normalize(*raw, next_id++, path.filename().string()));
      } catch (const FormatError& e) {
        ++summary.rejected_pairs;
        log << "warning: " << path.string() << ": " << e.what() << "\n";
      }
    }
    summary.raw_records += records;
    summary.skipped_records += reader.skipped();
    log << path.string() << ": " << records << " records, " << reader.skipped() << " skipped\n";
    for (std::size_t i = 0; i < reader.skip_log().size() && i < 5; ++i) {
      const auto& s = reader.skip_log()[i];
      log << "  skipped line " << s.line << ": " << s.reason << "\n";
    }
  }
  auto dedup = deduplicate(std::move(pairs));
  summary.duplicates = dedup.duplicates;
  summary.unique_pairs = dedup.pairs.size();

  auto groups = group_patterns(dedup.pairs);
  summary.groups_total = groups.size();
  {
    auto out = open_out(out_path(c, artifacts::kPatternReport));
    write_pattern_report(out, groups);
  }
  auto kept = filter_groups(std::move(groups), c.min_support, c.drop_identity);
  summary.groups_kept = kept.size();
  std::set<std::pair<Tokens, Tokens>> distinct;
  std::set<PairId> members;
  for (const auto& g : kept) {
    distinct.emplace(g.pattern.premise_template, g.pattern.hypothesis_template);
    members.insert(g.members.begin(), g.members.end());
    summary.pairs_kept += g.members.size();
  }
  summary.distinct_patterns_kept = distinct.size();
  if (kept.empty()) log << "warning: no pattern group reaches min_support = " << c.min_support << "\n";

  const auto hash = extract_hash(c);
  {
    auto out = open_out(out_path(c, artifacts::kGroups));
    write_group_manifest(out, kept, hash);
  }
  {
    auto out = open_out(out_path(c, artifacts::kPairs));
    out << json{{"artifact", "pairs"}, {"config_hash", hash}, {"pairs", dedup.pairs.size()}}.dump() << '\n';
    for (const auto& p : dedup.pairs) {
      out << json{{"id", p.id}, {"label", label_name(p.label)}, {"source", p.source}, {"premise", p.premise},
                  {"hypothesis", p.hypothesis}}
                 .dump()
          << '\n';
    }
  }
  {
    auto out = open_out(out_path(c, artifacts::kSentences));
    out << "sentence_id\tpair_id\tside\ttext\n";
    for (const auto& p : dedup.pairs) {
      if (!members.contains(p.id)) continue;
      out << premise_sentence_id(p.id) << '\t' << p.id << "\tpremise\t" << join_tokens(p.premise) << '\n';
      out << hypothesis_sentence_id(p.id) << '\t' << p.id << "\thypothesis\t" << join_tokens(p.hypothesis) << '\n';
    }
  }
  {
    auto out = open_out(out_path(c, artifacts::kExtractSummary));
    out << json{{"config_hash", hash},
                {"raw_records", summary.raw_records},
                {"skipped_records", summary.skipped_records},
                {"rejected_pairs", summary.rejected_pairs},
                {"duplicates", summary.duplicates},
                {"unique_pairs", summary.unique_pairs},
                {"groups_total", summary.groups_total},
                {"groups_kept", summary.groups_kept},
                {"distinct_patterns_kept", summary.distinct_patterns_kept},
                {"pairs_kept", summary.pairs_kept}}
               .dump(2)
        << '\n';
  }
  log << "extract: " << summary.unique_pairs << " unique pairs (" << summary.duplicates << " duplicates), "
      << summary.groups_kept << " groups / " << summary.distinct_patterns_kept << " distinct patterns kept covering "
      << summary.pairs_kept << " pairs\n";
  return summary;
}

void cmd_embed(const PipelineConfig& c, std::ostream& log) {
  const auto groups = load_groups(c);
  std::optional<EmbeddingMatrix> out_matrix;
  if (c.embedding == "planted") {
    out_matrix = synthesize_planted(groups, c.planted);
  } else if (c.embedding == "vectors") {
    const auto all = load_sentence_vectors(c.embedding_path);
    EmbeddingMatrix subset(all.dim(), all.provider_tag());
    std::vector<SentenceId> missing;
    for (const auto& g : groups) {
      for (PairId pair : g.members) {
        for (SentenceId sid : {premise_sentence_id(pair), hypothesis_sentence_id(pair)}) {
          if (!all.contains(sid)) {
            missing.push_back(sid);
            continue;
          }
          const auto row = all.row(sid);
          subset.insert(sid, std::vector<double>(row.begin(), row.end()));
        }
      }
    }
    if (!missing.empty()) {
      std::sort(missing.begin(), missing.end());
      std::string list;
      for (std::size_t i = 0; i < missing.size() && i < 20; ++i) list += (i ? ", " : "") + std::to_string(missing[i]);
      throw FormatError(c.embedding_path.string() + " lacks " + std::to_string(missing.size()) +
                        " sentence id(s) listed in sentences.tsv: " + list);
    }
    out_matrix = std::move(subset);
  } else {
    const auto table = load_token_vectors(c.embedding_path, c.oov);
    const auto pairs = load_pairs(c);
    EmbeddingMatrix avg(table.dim(), "average:" + c.embedding_path.filename().string());
    for (const auto& g : groups) {
      for (PairId pair : g.members) {
        const auto it = pairs.find(pair);
        if (it == pairs.end()) throw ArtifactError("pair " + std::to_string(pair) + " missing from pairs.jsonl");
        avg.insert(premise_sentence_id(pair), average_tokens(it->second.premise, table));
        avg.insert(hypothesis_sentence_id(pair), average_tokens(it->second.hypothesis, table));
      }
    }
    out_matrix = std::move(avg);
  }
  {
    auto out = open_out(out_path(c, artifacts::kEmbeddings));
    write_sentence_vectors(out, *out_matrix);
  }
  auto meta = open_out(out_path(c, artifacts::kEmbeddingsMeta));
  meta << json{{"config_hash", embed_hash(c)},
               {"provider", out_matrix->provider_tag()},
               {"dim", out_matrix->dim()},
               {"rows", out_matrix->size()}}
              .dump(2)
       << '\n';
  log << "embed: " << out_matrix->size() << " sentence vectors of dimension " << out_matrix->dim() << " from "
      << out_matrix->provider_tag() << "\n";
}

void cmd_build_ops(const PipelineConfig& c, std::ostream& log) {
  const auto groups = load_groups(c);
  const auto embeddings = load_embeddings(c).matrix;
  for (OperationKind kind : c.operations) {
    const auto space = build_operation_space(groups, embeddings, kind, c.normalize);
    auto out = open_out(out_path(c, artifacts::operations_file(kind)));
    write_operation_space(out, space, operations_hash(c, kind));
    log << "build-ops: " << operation_name(kind) << ": " << space.points.size() << " points";
    if (kind == OperationKind::kDivide) log << ", " << space.guarded_components << " guarded components";
    log << "\n";
  }
}

void cmd_cluster(const PipelineConfig& c, std::ostream& log) {
  for (OperationKind kind : c.operations) {
    const auto space = load_ops(c, kind);
    const auto matrix = space.to_matrix();
    const auto labels = space.pattern_labels();
    const auto clustering = cluster_patterns(c, matrix, labels, log, operation_name(kind));
    {
      auto out = open_out(out_path(c, artifacts::clustering_file(kind)));
      write_clustering(out, clustering, clustering_hash(c, kind));
    }
    log << "cluster: " << operation_name(kind) << ": k = " << clustering.k << ", inertia = " << clustering.total_inertia
        << "\n";
  }
}

EvaluateResult cmd_evaluate(const PipelineConfig& c, std::ostream& log) {
  const auto groups = load_groups(c);
  const auto stage = load_embeddings(c);
  const auto& embeddings = stage.matrix;
  EvaluateResult result;

  std::map<OperationKind, OperationSpace> spaces;
  std::map<OperationKind, Clustering> full;
  std::vector<OperationKind> kinds = c.operations;
  for (OperationKind kind : kinds) {
    auto space = build_operation_space(groups, embeddings, kind, c.normalize);
    {
      auto out = open_out(out_path(c, artifacts::operations_file(kind)));
      write_operation_space(out, space, operations_hash(c, kind));
    }
    auto clustering = cluster_patterns(c, space.to_matrix(), space.pattern_labels(), log, operation_name(kind));
    {
      auto out = open_out(out_path(c, artifacts::clustering_file(kind)));
      write_clustering(out, clustering, clustering_hash(c, kind));
    }
    const auto truth = space.pattern_labels();
    if (truth.size() >= 2) result.rows.push_back(score(c, "all", kind, truth, clustering, space.guarded_components));
    spaces.emplace(kind, std::move(space));
    full.emplace(kind, std::move(clustering));
  }

  if (c.noisy_top_n > 0 && groups.size() > c.noisy_top_n) {
    if (!spaces.contains(c.analysis_operation)) {
      auto space = build_operation_space(groups, embeddings, c.analysis_operation, c.normalize);
      full.emplace(c.analysis_operation, load_or_cluster(c, space, log));
      spaces.emplace(c.analysis_operation, std::move(space));
    }
    const auto& ref = spaces.at(c.analysis_operation);
    const auto ranking = rank_patterns(c, ref, full.at(c.analysis_operation));
    result.removed_patterns = noisy_patterns(c, ranking, groups.size());
    const std::set<int> removed(result.removed_patterns.begin(), result.removed_patterns.end());
    for (OperationKind kind : kinds) {
      const auto subset = without_patterns(spaces.at(kind), removed);
      if (subset.pattern_ids.size() < 2) continue;
      const auto clustering = cluster_patterns(c, subset.points, subset.pattern_ids, log, operation_name(kind));
      result.rows.push_back(score(c, "filtered", kind, subset.pattern_ids, clustering, spaces.at(kind).guarded_components));
    }
  }

  // Table layout: one line per (embedding, subset), metric x operation columns.
  const auto best_for = [&](const std::string& subset, double MetricRow::*field) {
    const MetricRow* best = nullptr;
    for (const auto& r : result.rows) {
      if (r.subset == subset && (!best || r.*field > best->*field)) best = &r;
    }
    return best ? std::string(operation_name(best->kind)) : std::string();
  };
  {
    auto out = open_out(out_path(c, artifacts::kMetricsCsv));
    out << "embedding,subset,dim,points,patterns";
    for (const char* metric : {"ari", "v_measure", "ami"}) {
      for (OperationKind kind : kinds) out << ',' << metric << '_' << operation_name(kind);
    }
    out << ",best_ari,best_v_measure,best_ami\n";
    for (const std::string subset : {"all", "filtered"}) {
      std::map<OperationKind, const MetricRow*> by_kind;
      for (const auto& r : result.rows) {
        if (r.subset == subset) by_kind[r.kind] = &r;
      }
      if (by_kind.empty()) continue;
      const auto& any = *by_kind.begin()->second;
      out << stage.provider << ',' << subset << ',' << embeddings.dim() << ',' << any.points << ','
          << any.patterns;
      for (double MetricRow::*field : {&MetricRow::ari, &MetricRow::v_measure, &MetricRow::ami}) {
        for (OperationKind kind : kinds) {
          out << ',';
          if (by_kind.contains(kind)) out << fixed(by_kind[kind]->*field);
        }
      }
      out << ',' << best_for(subset, &MetricRow::ari) << ',' << best_for(subset, &MetricRow::v_measure) << ','
          << best_for(subset, &MetricRow::ami) << '\n';
    }
  }
  {
    json rows = json::array();
    for (const auto& r : result.rows) {
      rows.push_back({{"subset", r.subset},
                      {"operation", operation_name(r.kind)},
                      {"points", r.points},
                      {"patterns", r.patterns},
                      {"guarded_components", r.guarded_components},
                      {"ari", r.ari},
                      {"homogeneity", r.homogeneity},
                      {"completeness", r.completeness},
                      {"v_measure", r.v_measure},
                      {"ami", r.ami}});
    }
    json best;
    for (const std::string subset : {"all", "filtered"}) {
      const auto ari = best_for(subset, &MetricRow::ari);
      if (ari.empty()) continue;
      best[subset] = {{"ari", ari}, {"v_measure", best_for(subset, &MetricRow::v_measure)},
                      {"ami", best_for(subset, &MetricRow::ami)}};
    }
    auto out = open_out(out_path(c, artifacts::kMetricsJson));
    out << json{{"config_hash", embed_hash(c)},
                {"embedding", stage.provider},
                {"dim", embeddings.dim()},
                {"ami_normalizer", get_config_value(c, "ami_normalizer")},
                {"kmeans_restarts", c.kmeans_restarts},
                {"removed_patterns", result.removed_patterns},
                {"rows", rows},
                {"best", best}}
               .dump(2)
        << '\n';
  }
  for (const auto& r : result.rows) {
    log << "evaluate: " << r.subset << ' ' << operation_name(r.kind) << ": ARI " << fixed(r.ari, 4) << "  V "
        << fixed(r.v_measure, 4) << "  AMI " << fixed(r.ami, 4) << "\n";
  }
  return result;
}

KSelectionReport cmd_select_k(const PipelineConfig& c, std::ostream& log) {
  const auto groups = load_groups(c);
  const auto space = load_ops(c, c.analysis_operation);
  const auto clustering = load_or_cluster(c, space, log);
  const auto ranking = rank_patterns(c, space, clustering);
  const auto removed = noisy_patterns(c, ranking, groups.size());
  const auto subset = without_patterns(space, std::set<int>(removed.begin(), removed.end()));
  auto report = run_select_k(c, subset.points, log);
  write_select_k(c, report);
  return report;
}

void cmd_project(const PipelineConfig& c, std::ostream& log) {
  const auto space = load_ops(c, c.analysis_operation);
  const auto clustering = load_or_cluster(c, space, log);
  const auto matrix = space.to_matrix();
  const auto tc = tsne_for(c, matrix.rows(), log);
  const auto proj = tsne(matrix, tc);
  std::vector<PairId> pairs;
  for (const auto& p : space.points) pairs.push_back(p.pair_id);
  write_projection(c, "projection_" + std::string(operation_name(space.kind)), tc, proj, space.pattern_labels(),
                   clustering.assignment, pairs, "t-SNE of " + std::string(operation_name(space.kind)) + " points");
  log << "project: " << matrix.rows() << " points, final KL " << proj.kl_history.back() << "\n";
}

AnalyzeResult cmd_analyze(const PipelineConfig& c, std::ostream& log) {
  const auto groups = load_groups(c);
  const auto space = load_ops(c, c.analysis_operation);
  const auto clustering = load_or_cluster(c, space, log);
  AnalyzeResult result;
  result.inertia = rank_patterns(c, space, clustering);
  {
    auto out = open_out(out_path(c, artifacts::kInertia));
    write_inertia_csv(out, result.inertia, groups);
  }
  result.removed_patterns = noisy_patterns(c, result.inertia, groups.size());
  const std::set<int> removed(result.removed_patterns.begin(), result.removed_patterns.end());
  const auto subset = without_patterns(space, removed);

  result.selection = run_select_k(c, subset.points, log);
  write_select_k(c, result.selection);
  result.chosen_k = result.selection.best_k_silhouette;
  result.clustering = kmeans(subset.points, kmeans_options(c, result.chosen_k));

  std::ostringstream header;
  header << "# operation: " << operation_name(c.analysis_operation) << "\n";
  if (removed.empty()) {
    header << "# noisy_top_n = 0: all " << groups.size() << " patterns analysed\n";
  } else {
    header << "# removed " << removed.size() << " highest-inertia patterns:\n";
    for (int id : result.removed_patterns) header << "#   " << render_pattern(groups[static_cast<std::size_t>(id)].pattern) << "\n";
  }
  header << "# k = " << result.chosen_k << " (Davies-Bouldin: " << result.selection.best_k_davies_bouldin
         << ", silhouette: " << result.selection.best_k_silhouette << ")\n";
  result.composition = header.str() + composition_report(groups, subset.pattern_ids, result.clustering.assignment,
                                                         result.chosen_k);
  {
    auto out = open_out(out_path(c, artifacts::kComposition));
    out << result.composition;
  }

  const auto tc = tsne_for(c, subset.points.rows(), log);
  const auto proj = tsne(subset.points, tc);
  write_projection(c, "analysis_projection", tc, proj, subset.pattern_ids, result.clustering.assignment, subset.pair_ids,
                   "t-SNE after noisy-pattern removal, k = " + std::to_string(result.chosen_k));
  log << "analyze: removed " << removed.size() << " patterns, clustered " << subset.points.rows() << " points into "
      << result.chosen_k << " clusters\n";
  return result;
}

void cmd_pipeline(const PipelineConfig& c, std::ostream& log) {
  cmd_extract(c, log);
  cmd_embed(c, log);
  cmd_evaluate(c, log);
  cmd_project(c, log);
  cmd_analyze(c, log);
}

std::string composition_report(std::span<const PatternGroup> groups, std::span<const int> pattern_ids,
                               std::span<const int> assignment, std::size_t k) {
  if (pattern_ids.size() != assignment.size()) throw ContractError("composition_report: length mismatch");
  std::map<int, std::size_t> totals;
  std::vector<std::map<int, std::size_t>> per_cluster(k);
  for (std::size_t i = 0; i < pattern_ids.size(); ++i) {
    ++totals[pattern_ids[i]];
    const auto cl = static_cast<std::size_t>(assignment[i]);
    if (cl >= k) throw ContractError("composition_report: cluster id out of range");
    ++per_cluster[cl][pattern_ids[i]];
  }
  std::map<std::string, std::set<Label>> labels_by_text;
  for (const auto& g : groups) labels_by_text[render_pattern(g.pattern)].insert(g.label);

  std::ostringstream out;
  for (std::size_t cl = 0; cl < k; ++cl) {
    std::vector<std::pair<int, std::size_t>> rows(per_cluster[cl].begin(), per_cluster[cl].end());
    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    std::size_t size = 0;
    for (const auto& r : rows) size += r.second;
    out << "Cluster " << cl + 1 << " (" << size << " pairs)\n";
    for (const auto& [pid, count] : rows) {
      const auto& g = groups[static_cast<std::size_t>(pid)];
      const auto text = render_pattern(g.pattern);
      out << "  " << text;
      if (labels_by_text[text].size() > 1) out << " [" << label_name(g.label) << "]";
      out << " (" << count << "/" << totals[pid] << ")\n";
    }
  }
  return out.str();
}

}  // namespace sentops
