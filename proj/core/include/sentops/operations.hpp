#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sentops/corpus.hpp"
#include "sentops/embedding.hpp"
#include "sentops/matrix.hpp"
#include "sentops/pattern.hpp"

namespace sentops {

enum class OperationKind { kSubtract, kAdd, kMultiply, kDivide };

inline constexpr OperationKind kAllOperations[] = {OperationKind::kSubtract, OperationKind::kAdd,
                                                   OperationKind::kMultiply, OperationKind::kDivide};

std::string_view operation_name(OperationKind kind) noexcept;

/// Accepts the names "subtract", "add", "multiply", "divide" and the symbols
/// "-", "+", "*", "/".
std::optional<OperationKind> parse_operation(std::string_view text) noexcept;

/// Denominators with magnitude below this produce a zero component.
inline constexpr double kDivideGuard = 1e-8;

/// Elementwise combination of (premise, hypothesis), in that order.
/// `guarded`, when given, is incremented once per zero-guarded component.
std::vector<double> apply_operation(OperationKind kind, std::span<const double> premise,
                                    std::span<const double> hypothesis, std::size_t* guarded = nullptr);

struct OperationPoint {
  PairId pair_id = 0;
  int pattern_id = 0;
  std::vector<double> vector;
};

struct OperationSpace {
  OperationKind kind = OperationKind::kSubtract;
  std::size_t dim = 0;
  std::size_t num_patterns = 0;
  std::size_t guarded_components = 0;
  bool normalized = false;
  std::vector<OperationPoint> points;  // ascending pair_id

  Matrix to_matrix() const;
  std::vector<int> pattern_labels() const;
};

/// One point per member pair; pattern_id is the group's position in
/// `groups`. Throws ContractError listing every pair whose sentence vectors
/// are missing. With `normalize` each point is scaled to unit length (zero
/// vectors stay zero).
OperationSpace build_operation_space(std::span<const PatternGroup> groups, const EmbeddingMatrix& embeddings,
                                     OperationKind kind, bool normalize = false);

/// JSON Lines: header {"artifact":"operation_space", kind, dim, ...} then
/// {"pair_id", "pattern_id", "vector"} per point.
void write_operation_space(std::ostream& out, const OperationSpace& space, std::string_view config_hash);

struct LoadedOperationSpace {
  std::string config_hash;
  OperationSpace space;
};

LoadedOperationSpace read_operation_space(const std::filesystem::path& path);

}  // namespace sentops
