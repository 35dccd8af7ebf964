#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sentops {

enum class Label { kEntailment, kContradiction, kNeutral };

inline constexpr Label kAllLabels[] = {Label::kEntailment, Label::kContradiction, Label::kNeutral};

std::string_view label_name(Label label) noexcept;

/// Accepts exactly "entailment", "contradiction" or "neutral".
std::optional<Label> parse_label(std::string_view text) noexcept;

using Tokens = std::vector<std::string>;
using PairId = std::int64_t;
using SentenceId = std::int64_t;

/// Every pair owns two sentence ids: 2*id for the premise and 2*id+1 for the
/// hypothesis. Sentence-vector files are keyed by these ids.
constexpr SentenceId premise_sentence_id(PairId pair) noexcept { return 2 * pair; }
constexpr SentenceId hypothesis_sentence_id(PairId pair) noexcept { return 2 * pair + 1; }

struct RawPair {
  std::string premise_text;
  std::string hypothesis_text;
  Label label = Label::kEntailment;
};

struct SentencePair {
  PairId id = 0;
  Tokens premise;
  Tokens hypothesis;
  Label label = Label::kEntailment;
  std::string source;
};

enum class CorpusFormat { kJsonLines, kTabSeparated };

/// ".jsonl"/".json" map to JSON Lines, everything else to tab-separated.
CorpusFormat format_for_path(const std::filesystem::path& path) noexcept;

struct SkippedRecord {
  std::size_t line = 0;
  std::string reason;
};

/// Streams RawPair records out of an NLI corpus file in file order.
///
/// JSON Lines records carry string fields sentence1, sentence2 and
/// gold_label. Tab-separated records have exactly three columns: premise,
/// hypothesis, label. Blank lines are ignored. Records with a missing field,
/// an empty sentence or a gold label other than the three relations
/// (including the "-" disagreement marker) are skipped and logged.
class CorpusReader {
 public:
  CorpusReader(const std::filesystem::path& path, CorpusFormat format);

  std::optional<RawPair> next();

  std::size_t skipped() const noexcept { return skips_.size(); }
  const std::vector<SkippedRecord>& skip_log() const noexcept { return skips_; }
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::optional<RawPair> parse_line(const std::string& line);

  std::filesystem::path path_;
  CorpusFormat format_;
  std::ifstream in_;
  std::size_t line_no_ = 0;
  std::vector<SkippedRecord> skips_;
};

struct ParsedCorpus {
  std::vector<RawPair> pairs;
  std::vector<SkippedRecord> skips;
};

ParsedCorpus parse_corpus(const std::filesystem::path& path, CorpusFormat format);

/// Lowercases and tokenizes with a fixed rule tokenizer:
///   1. lowercase (ASCII and the Latin-1 supplement block of UTF-8);
///   2. split on whitespace and control characters;
///   3. peel the punctuation characters . , ! ? ; : " ' ` ( ) [ ] off both
///      ends of each chunk, one token per character;
///   4. split the clitics 's 'll 're 've 'd 'm n't off word endings.
/// Clitic tokens are left intact, so tokenize(join(tokenize(s))) equals
/// tokenize(s).
Tokens tokenize(std::string_view text);

/// Builds a SentencePair with the given id. Throws FormatError when either
/// side tokenizes to nothing.
SentencePair normalize(const RawPair& raw, PairId id, std::string source = {});

struct DedupResult {
  std::vector<SentencePair> pairs;
  std::size_t duplicates = 0;
};

/// Keeps the first occurrence of every (premise, hypothesis, label) triple.
DedupResult deduplicate(std::vector<SentencePair> pairs);

std::string join_tokens(std::span<const std::string> tokens);

}  // namespace sentops
