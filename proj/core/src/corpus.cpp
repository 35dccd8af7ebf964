#include "sentops/corpus.hpp"

#include <algorithm>
#include <array>
#include <set>
#include <tuple>

#include <json.hpp>

#include "sentops/error.hpp"

namespace sentops {

namespace {

constexpr std::string_view kPunctuation = ".,!?;:\"'`()[]";
constexpr std::array<std::string_view, 7> kClitics = {"n't", "'s", "'ll", "'re", "'ve", "'d", "'m"};

bool is_punct(char c) { return kPunctuation.find(c) != std::string_view::npos; }

bool is_clitic(std::string_view s) {
  return std::find(kClitics.begin(), kClitics.end(), s) != kClitics.end();
}

bool is_separator(unsigned char c) {
  return c <= 0x20 || c == 0x7f;
}

std::string lowercase(std::string_view text) {
  std::string out(text);
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto c = static_cast<unsigned char>(out[i]);
    if (c >= 'A' && c <= 'Z') {
      out[i] = static_cast<char>(c + ('a' - 'A'));
    } else if (c == 0xc3 && i + 1 < out.size()) {
      // U+00C0..U+00DE except U+00D7 (multiplication sign).
      auto next = static_cast<unsigned char>(out[i + 1]);
      if (next >= 0x80 && next <= 0x9e && next != 0x97) out[i + 1] = static_cast<char>(next + 0x20);
      ++i;
    }
  }
  return out;
}

void split_chunk(std::string_view chunk, Tokens& out) {
  if (chunk.empty()) return;
  if (is_clitic(chunk)) {
    out.emplace_back(chunk);
    return;
  }
  if (is_punct(chunk.front())) {
    out.emplace_back(1, chunk.front());
    split_chunk(chunk.substr(1), out);
    return;
  }
  if (is_punct(chunk.back())) {
    split_chunk(chunk.substr(0, chunk.size() - 1), out);
    out.emplace_back(1, chunk.back());
    return;
  }
  for (std::string_view clitic : kClitics) {
    if (chunk.size() > clitic.size() && chunk.ends_with(clitic)) {
      split_chunk(chunk.substr(0, chunk.size() - clitic.size()), out);
      out.emplace_back(clitic);
      return;
    }
  }
  out.emplace_back(chunk);
}

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return is_separator(static_cast<unsigned char>(c)); });
}

}  // namespace

std::string_view label_name(Label label) noexcept {
  switch (label) {
    case Label::kEntailment: return "entailment";
    case Label::kContradiction: return "contradiction";
    case Label::kNeutral: return "neutral";
  }
  return "unknown";
}

std::optional<Label> parse_label(std::string_view text) noexcept {
  for (Label l : kAllLabels) {
    if (label_name(l) == text) return l;
  }
  return std::nullopt;
}

CorpusFormat format_for_path(const std::filesystem::path& path) noexcept {
  const auto ext = path.extension().string();
  return (ext == ".jsonl" || ext == ".json") ? CorpusFormat::kJsonLines : CorpusFormat::kTabSeparated;
}

CorpusReader::CorpusReader(const std::filesystem::path& path, CorpusFormat format)
    : path_(path), format_(format), in_(path) {
  if (!in_) throw IoError("cannot open corpus file " + path.string());
}

std::optional<RawPair> CorpusReader::next() {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_no_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (blank(line)) continue;
    if (auto pair = parse_line(line)) return pair;
  }
  if (in_.bad()) throw IoError("read error in " + path_.string() + " after line " + std::to_string(line_no_));
  return std::nullopt;
}

std::optional<RawPair> CorpusReader::parse_line(const std::string& line) {
  std::string premise;
  std::string hypothesis;
  std::string label_text;
  auto skip = [&](std::string reason) -> std::optional<RawPair> {
    skips_.push_back({line_no_, std::move(reason)});
    return std::nullopt;
  };

  if (format_ == CorpusFormat::kJsonLines) {
    const auto doc = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (doc.is_discarded() || !doc.is_object()) return skip("not a JSON object");
    for (const char* field : {"sentence1", "sentence2", "gold_label"}) {
      if (!doc.contains(field) || !doc[field].is_string()) return skip(std::string("missing string field ") + field);
    }
    premise = doc["sentence1"].get<std::string>();
    hypothesis = doc["sentence2"].get<std::string>();
    label_text = doc["gold_label"].get<std::string>();
  } else {
    std::vector<std::string> cols;
    std::size_t start = 0;
    for (;;) {
      const auto tab = line.find('\t', start);
      cols.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (cols.size() != 3) return skip("expected 3 tab-separated columns, got " + std::to_string(cols.size()));
    premise = std::move(cols[0]);
    hypothesis = std::move(cols[1]);
    label_text = std::move(cols[2]);
  }

  const auto label = parse_label(label_text);
  if (!label) return skip("unusable gold label \"" + label_text + "\"");
  if (blank(premise) || blank(hypothesis)) return skip("empty sentence");
  return RawPair{std::move(premise), std::move(hypothesis), *label};
}

ParsedCorpus parse_corpus(const std::filesystem::path& path, CorpusFormat format) {
  CorpusReader reader(path, format);
  ParsedCorpus out;
  while (auto pair = reader.next()) out.pairs.push_back(std::move(*pair));
  out.skips = reader.skip_log();
  return out;
}

Tokens tokenize(std::string_view text) {
  const std::string lower = lowercase(text);
  Tokens out;
  std::size_t i = 0;
  while (i < lower.size()) {
    while (i < lower.size() && is_separator(static_cast<unsigned char>(lower[i]))) ++i;
    std::size_t j = i;
    while (j < lower.size() && !is_separator(static_cast<unsigned char>(lower[j]))) ++j;
    split_chunk(std::string_view(lower).substr(i, j - i), out);
    i = j;
  }
  return out;
}

SentencePair normalize(const RawPair& raw, PairId id, std::string source) {
  SentencePair pair{id, tokenize(raw.premise_text), tokenize(raw.hypothesis_text), raw.label, std::move(source)};
  if (pair.premise.empty() || pair.hypothesis.empty()) {
    throw FormatError("pair " + std::to_string(id) + " tokenizes to an empty sentence");
  }
  return pair;
}

DedupResult deduplicate(std::vector<SentencePair> pairs) {
  DedupResult out;
  std::set<std::tuple<Tokens, Tokens, Label>> seen;
  for (auto& pair : pairs) {
    if (seen.emplace(pair.premise, pair.hypothesis, pair.label).second) {
      out.pairs.push_back(std::move(pair));
    } else {
      ++out.duplicates;
    }
  }
  return out;
}

std::string join_tokens(std::span<const std::string> tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

}  // namespace sentops
