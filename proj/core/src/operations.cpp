#include "sentops/operations.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>

#include <json.hpp>

#include "sentops/error.hpp"

namespace sentops {

using nlohmann::json;

std::string_view operation_name(OperationKind kind) noexcept {
  switch (kind) {
    case OperationKind::kSubtract: return "subtract";
    case OperationKind::kAdd: return "add";
    case OperationKind::kMultiply: return "multiply";
    case OperationKind::kDivide: return "divide";
  }
  return "unknown";
}

std::optional<OperationKind> parse_operation(std::string_view text) noexcept {
  if (text == "subtract" || text == "-") return OperationKind::kSubtract;
  if (text == "add" || text == "+") return OperationKind::kAdd;
  if (text == "multiply" || text == "*") return OperationKind::kMultiply;
  if (text == "divide" || text == "/") return OperationKind::kDivide;
  return std::nullopt;
}

std::vector<double> apply_operation(OperationKind kind, std::span<const double> premise,
                                    std::span<const double> hypothesis, std::size_t* guarded) {
  if (premise.size() != hypothesis.size()) {
    throw ContractError("apply_operation: vector lengths differ (" + std::to_string(premise.size()) + " vs " +
                        std::to_string(hypothesis.size()) + ")");
  }
  std::vector<double> out(premise.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double p = premise[i];
    const double h = hypothesis[i];
    switch (kind) {
      case OperationKind::kSubtract: out[i] = p - h; break;
      case OperationKind::kAdd: out[i] = p + h; break;
      case OperationKind::kMultiply: out[i] = p * h; break;
      case OperationKind::kDivide:
        if (std::abs(h) < kDivideGuard) {
          out[i] = 0.0;
          if (guarded) ++*guarded;
        } else {
          out[i] = p / h;
        }
        break;
    }
    if (!std::isfinite(out[i])) {
      // Finite inputs can still overflow, e.g. 1e300 * 1e300.
      throw ContractError("apply_operation: non-finite result in component " + std::to_string(i));
    }
  }
  return out;
}

Matrix OperationSpace::to_matrix() const {
  Matrix m(points.size(), dim);
  for (std::size_t i = 0; i < points.size(); ++i) std::copy(points[i].vector.begin(), points[i].vector.end(), m.row(i).begin());
  return m;
}

std::vector<int> OperationSpace::pattern_labels() const {
  std::vector<int> labels;
  labels.reserve(points.size());
  for (const auto& p : points) labels.push_back(p.pattern_id);
  return labels;
}

OperationSpace build_operation_space(std::span<const PatternGroup> groups, const EmbeddingMatrix& embeddings,
                                     OperationKind kind, bool normalize) {
  OperationSpace space;
  space.kind = kind;
  space.dim = embeddings.dim();
  space.num_patterns = groups.size();
  space.normalized = normalize;

  std::vector<PairId> missing;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (PairId pair : groups[g].members) {
      const auto p = premise_sentence_id(pair);
      const auto h = hypothesis_sentence_id(pair);
      if (!embeddings.contains(p) || !embeddings.contains(h)) {
        missing.push_back(pair);
        continue;
      }
      auto vec = apply_operation(kind, embeddings.row(p), embeddings.row(h), &space.guarded_components);
      if (normalize) {
        double norm = 0.0;
        for (double x : vec) norm += x * x;
        norm = std::sqrt(norm);
        if (norm > 0.0) {
          for (auto& x : vec) x /= norm;
        }
      }
      space.points.push_back({pair, static_cast<int>(g), std::move(vec)});
    }
  }
  if (!missing.empty()) {
    std::sort(missing.begin(), missing.end());
    std::string list;
    for (std::size_t i = 0; i < missing.size() && i < 50; ++i) list += (i ? ", " : "") + std::to_string(missing[i]);
    if (missing.size() > 50) list += ", ...";
    throw ContractError("missing sentence embeddings for " + std::to_string(missing.size()) + " pair(s): " + list);
  }
  std::stable_sort(space.points.begin(), space.points.end(),
                   [](const OperationPoint& a, const OperationPoint& b) { return a.pair_id < b.pair_id; });
  return space;
}

void write_operation_space(std::ostream& out, const OperationSpace& space, std::string_view config_hash) {
  out << json{{"artifact", "operation_space"},
              {"config_hash", config_hash},
              {"kind", operation_name(space.kind)},
              {"dim", space.dim},
              {"num_patterns", space.num_patterns},
              {"points", space.points.size()},
              {"guarded_components", space.guarded_components},
              {"normalized", space.normalized}}
             .dump()
      << '\n';
  for (const auto& p : space.points) {
    out << json{{"pair_id", p.pair_id}, {"pattern_id", p.pattern_id}, {"vector", p.vector}}.dump() << '\n';
  }
}

LoadedOperationSpace read_operation_space(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open operation-space file " + path.string());
  LoadedOperationSpace loaded;
  auto& space = loaded.space;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  try {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const auto doc = json::parse(line);
      if (!have_header) {
        if (doc.value("artifact", "") != "operation_space") throw FormatError("not an operation-space file");
        loaded.config_hash = doc.at("config_hash").get<std::string>();
        const auto kind = parse_operation(doc.at("kind").get<std::string>());
        if (!kind) throw FormatError("unknown operation kind");
        space.kind = *kind;
        space.dim = doc.at("dim").get<std::size_t>();
        space.num_patterns = doc.at("num_patterns").get<std::size_t>();
        space.guarded_components = doc.at("guarded_components").get<std::size_t>();
        space.normalized = doc.at("normalized").get<bool>();
        have_header = true;
        continue;
      }
      OperationPoint p{doc.at("pair_id").get<PairId>(), doc.at("pattern_id").get<int>(),
                       doc.at("vector").get<std::vector<double>>()};
      if (p.vector.size() != space.dim) throw FormatError("vector has the wrong dimension");
      space.points.push_back(std::move(p));
    }
  } catch (const json::exception& e) {
    throw FormatError(path.string() + " line " + std::to_string(line_no) + ": " + e.what());
  } catch (const FormatError& e) {
    throw FormatError(path.string() + " line " + std::to_string(line_no) + ": " + e.what());
  }
  if (!have_header) throw FormatError(path.string() + ": empty operation-space file");
  return loaded;
}

}  // namespace sentops
