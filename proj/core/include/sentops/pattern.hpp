#pragma once

#include <compare>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sentops/corpus.hpp"

namespace sentops {

/// Reserved variable tokens. Corpus tokens are lowercased, so the rendered
/// forms "X" and "Y" can never be corpus tokens either.
inline constexpr std::string_view kVariableX = "⟨X⟩";
inline constexpr std::string_view kVariableY = "⟨Y⟩";

bool is_variable(std::string_view token) noexcept;

/// A two-sided edit template over vocabulary tokens and up to two variables.
struct Pattern {
  Tokens premise_template;
  Tokens hypothesis_template;
  int num_variables = 0;

  /// The "X -> X" pattern of a pair whose two sentences are identical.
  bool is_identity() const noexcept;

  auto operator<=>(const Pattern&) const = default;
};

/// Space-joined template with variables rendered as X and Y.
std::string render_template(std::span<const std::string> tmpl);

/// Inverse of render_template.
Tokens parse_template(std::string_view rendered);

/// "premise -> hypothesis" with a unicode arrow.
std::string render_pattern(const Pattern& pattern);

/// Throws FormatError when the variable invariants do not hold.
void validate_pattern(const Pattern& pattern);

struct CommonRun {
  std::size_t start_a = 0;
  std::size_t start_b = 0;
  std::size_t length = 0;

  bool operator==(const CommonRun&) const = default;
};

/// Longest contiguous token run occurring in both sequences that contains no
/// forbidden token. Ties go to the smallest start in `a`, then in `b`.
std::optional<CommonRun> longest_common_substring(std::span<const std::string> a,
                                                  std::span<const std::string> b,
                                                  std::span<const std::string> forbidden = {});

/// The token runs that the variables stand for in one concrete pair.
struct PatternBindings {
  Tokens x;
  Tokens y;
};

struct Extraction {
  Pattern pattern;
  PatternBindings bindings;
};

/// Replaces the longest common run with X, then the longest remaining run
/// that avoids X with Y, and finally renames the variables so that X comes
/// first in the premise.
Extraction extract_with_bindings(std::span<const std::string> premise, std::span<const std::string> hypothesis);

Pattern extract_pattern(const SentencePair& pair);

/// Substitutes the bindings back into both templates.
std::pair<Tokens, Tokens> instantiate(const Pattern& pattern, const PatternBindings& bindings);

struct PatternGroup {
  Pattern pattern;
  Label label = Label::kEntailment;
  std::vector<PairId> members;
};

/// One group per distinct (pattern, label). Output is ordered by label, then
/// by descending member count, then by template text; members ascend by id.
std::vector<PatternGroup> group_patterns(std::span<const SentencePair> pairs);

/// Drops groups below `min_support` members and, optionally, the identity
/// pattern. Relative order is preserved.
std::vector<PatternGroup> filter_groups(std::vector<PatternGroup> groups, std::size_t min_support = 20,
                                        bool drop_identity = true);

/// CSV with header label,premise_template,hypothesis_template,count.
void write_pattern_report(std::ostream& out, std::span<const PatternGroup> groups);

/// JSON Lines: one header object carrying the config hash, then one object
/// per group with its pattern_id (= position), templates, count and members.
void write_group_manifest(std::ostream& out, std::span<const PatternGroup> groups, std::string_view config_hash);

struct GroupManifest {
  std::string config_hash;
  std::vector<PatternGroup> groups;
};

GroupManifest read_group_manifest(std::istream& in);

}  // namespace sentops
