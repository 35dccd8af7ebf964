#include "sentops/pattern.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>

#include <json.hpp>

#include "sentops/error.hpp"

namespace sentops {

namespace {

using nlohmann::json;

std::string_view rendered_variable(std::string_view token) {
  if (token == kVariableX) return "X";
  if (token == kVariableY) return "Y";
  return token;
}

void replace_run(Tokens& seq, std::size_t start, std::size_t length, std::string_view variable) {
  seq.erase(seq.begin() + static_cast<std::ptrdiff_t>(start),
            seq.begin() + static_cast<std::ptrdiff_t>(start + length));
  seq.insert(seq.begin() + static_cast<std::ptrdiff_t>(start), std::string(variable));
}

std::ptrdiff_t index_of(const Tokens& seq, std::string_view token) {
  const auto it = std::find(seq.begin(), seq.end(), token);
  return it == seq.end() ? -1 : it - seq.begin();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

bool is_variable(std::string_view token) noexcept { return token == kVariableX || token == kVariableY; }

bool Pattern::is_identity() const noexcept {
  return num_variables == 1 && premise_template.size() == 1 && premise_template == hypothesis_template &&
         premise_template.front() == kVariableX;
}

std::string render_template(std::span<const std::string> tmpl) {
  std::string out;
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    if (i) out += ' ';
    out += rendered_variable(tmpl[i]);
  }
  return out;
}

Tokens parse_template(std::string_view rendered) {
  Tokens out;
  std::size_t i = 0;
  while (i < rendered.size()) {
    while (i < rendered.size() && rendered[i] == ' ') ++i;
    std::size_t j = i;
    while (j < rendered.size() && rendered[j] != ' ') ++j;
    if (j > i) {
      const auto tok = rendered.substr(i, j - i);
      if (tok == "X") out.emplace_back(kVariableX);
      else if (tok == "Y") out.emplace_back(kVariableY);
      else out.emplace_back(tok);
    }
    i = j;
  }
  return out;
}

std::string render_pattern(const Pattern& pattern) {
  return render_template(pattern.premise_template) + " → " + render_template(pattern.hypothesis_template);
}

void validate_pattern(const Pattern& p) {
  int seen = 0;
  for (std::string_view var : {kVariableX, kVariableY}) {
    const auto in_premise = std::count(p.premise_template.begin(), p.premise_template.end(), var);
    const auto in_hypothesis = std::count(p.hypothesis_template.begin(), p.hypothesis_template.end(), var);
    if (in_premise > 1 || in_hypothesis > 1 || in_premise != in_hypothesis) {
      throw FormatError("variable " + std::string(rendered_variable(var)) + " must occur once in both templates or in neither: " +
                        render_pattern(p));
    }
    seen += static_cast<int>(in_premise);
  }
  if (seen != p.num_variables) throw FormatError("variable count mismatch in " + render_pattern(p));
  if (seen == 1 && index_of(p.premise_template, kVariableX) < 0) {
    throw FormatError("single-variable pattern must use X: " + render_pattern(p));
  }
  if (seen == 2 && index_of(p.premise_template, kVariableX) > index_of(p.premise_template, kVariableY)) {
    throw FormatError("X must precede Y in the premise template: " + render_pattern(p));
  }
}

std::optional<CommonRun> longest_common_substring(std::span<const std::string> a, std::span<const std::string> b,
                                                  std::span<const std::string> forbidden) {
  const auto allowed = [&](const std::string& tok) {
    return std::find(forbidden.begin(), forbidden.end(), tok) == forbidden.end();
  };
  // run[j + 1] holds the length of the common run ending at a[i], b[j].
  std::vector<std::size_t> prev(b.size() + 1, 0);
  std::vector<std::size_t> cur(b.size() + 1, 0);
  CommonRun best;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool ok = allowed(a[i]);
    for (std::size_t j = 0; j < b.size(); ++j) {
      cur[j + 1] = (ok && a[i] == b[j]) ? prev[j] + 1 : 0;
      const std::size_t len = cur[j + 1];
      if (len == 0) continue;
      const CommonRun cand{i + 1 - len, j + 1 - len, len};
      if (cand.length > best.length ||
          (cand.length == best.length &&
           (cand.start_a < best.start_a || (cand.start_a == best.start_a && cand.start_b < best.start_b)))) {
        best = cand;
      }
    }
    std::swap(prev, cur);
  }
  if (best.length == 0) return std::nullopt;
  return best;
}

Extraction extract_with_bindings(std::span<const std::string> premise, std::span<const std::string> hypothesis) {
  Extraction ex;
  Pattern& p = ex.pattern;
  p.premise_template.assign(premise.begin(), premise.end());
  p.hypothesis_template.assign(hypothesis.begin(), hypothesis.end());

  const auto first = longest_common_substring(p.premise_template, p.hypothesis_template);
  if (!first) return ex;
  ex.bindings.x.assign(premise.begin() + static_cast<std::ptrdiff_t>(first->start_a),
                       premise.begin() + static_cast<std::ptrdiff_t>(first->start_a + first->length));
  replace_run(p.premise_template, first->start_a, first->length, kVariableX);
  replace_run(p.hypothesis_template, first->start_b, first->length, kVariableX);
  p.num_variables = 1;

  const std::string forbidden[] = {std::string(kVariableX)};
  const auto second = longest_common_substring(p.premise_template, p.hypothesis_template, forbidden);
  if (!second) return ex;
  ex.bindings.y.assign(p.premise_template.begin() + static_cast<std::ptrdiff_t>(second->start_a),
                       p.premise_template.begin() + static_cast<std::ptrdiff_t>(second->start_a + second->length));
  replace_run(p.premise_template, second->start_a, second->length, kVariableY);
  replace_run(p.hypothesis_template, second->start_b, second->length, kVariableY);
  p.num_variables = 2;

  if (index_of(p.premise_template, kVariableY) < index_of(p.premise_template, kVariableX)) {
    for (Tokens* tmpl : {&p.premise_template, &p.hypothesis_template}) {
      for (auto& tok : *tmpl) {
        if (tok == kVariableX) tok = kVariableY;
        else if (tok == kVariableY) tok = kVariableX;
      }
    }
    std::swap(ex.bindings.x, ex.bindings.y);
  }
  return ex;
}

Pattern extract_pattern(const SentencePair& pair) {
  return extract_with_bindings(pair.premise, pair.hypothesis).pattern;
}

std::pair<Tokens, Tokens> instantiate(const Pattern& pattern, const PatternBindings& bindings) {
  const auto fill = [&](const Tokens& tmpl) {
    Tokens out;
    for (const auto& tok : tmpl) {
      if (tok == kVariableX) out.insert(out.end(), bindings.x.begin(), bindings.x.end());
      else if (tok == kVariableY) out.insert(out.end(), bindings.y.begin(), bindings.y.end());
      else out.push_back(tok);
    }
    return out;
  };
  return {fill(pattern.premise_template), fill(pattern.hypothesis_template)};
}

std::vector<PatternGroup> group_patterns(std::span<const SentencePair> pairs) {
  std::map<std::pair<Label, Pattern>, std::vector<PairId>> buckets;
  for (const auto& pair : pairs) buckets[{pair.label, extract_pattern(pair)}].push_back(pair.id);

  std::vector<PatternGroup> groups;
  groups.reserve(buckets.size());
  for (auto& [key, members] : buckets) {
    std::sort(members.begin(), members.end());
    groups.push_back({key.second, key.first, std::move(members)});
  }
  // Buckets iterate in (label, pattern) order; a stable sort on count keeps
  // the pattern order among ties.
  std::stable_sort(groups.begin(), groups.end(), [](const PatternGroup& x, const PatternGroup& y) {
    if (x.label != y.label) return x.label < y.label;
    return x.members.size() > y.members.size();
  });
  return groups;
}

std::vector<PatternGroup> filter_groups(std::vector<PatternGroup> groups, std::size_t min_support,
                                        bool drop_identity) {
  if (min_support < 1) throw ContractError("filter_groups: min_support must be at least 1");
  std::erase_if(groups, [&](const PatternGroup& g) {
    return g.members.size() < min_support || (drop_identity && g.pattern.is_identity());
  });
  return groups;
}

void write_pattern_report(std::ostream& out, std::span<const PatternGroup> groups) {
  out << "label,premise_template,hypothesis_template,count\n";
  for (const auto& g : groups) {
    out << label_name(g.label) << ',' << csv_field(render_template(g.pattern.premise_template)) << ','
        << csv_field(render_template(g.pattern.hypothesis_template)) << ',' << g.members.size() << '\n';
  }
}

void write_group_manifest(std::ostream& out, std::span<const PatternGroup> groups, std::string_view config_hash) {
  out << json{{"artifact", "groups"}, {"config_hash", config_hash}, {"groups", groups.size()}}.dump() << '\n';
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const auto& g = groups[i];
    out << json{{"pattern_id", i},
                {"label", label_name(g.label)},
                {"premise_template", render_template(g.pattern.premise_template)},
                {"hypothesis_template", render_template(g.pattern.hypothesis_template)},
                {"num_variables", g.pattern.num_variables},
                {"count", g.members.size()},
                {"members", g.members}}
               .dump()
        << '\n';
  }
}

GroupManifest read_group_manifest(std::istream& in) {
  GroupManifest manifest;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  try {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const auto doc = json::parse(line);
      if (!have_header) {
        if (doc.value("artifact", "") != "groups") throw FormatError("not a group manifest");
        manifest.config_hash = doc.at("config_hash").get<std::string>();
        have_header = true;
        continue;
      }
      PatternGroup g;
      const auto label = parse_label(doc.at("label").get<std::string>());
      if (!label) throw FormatError("unknown label");
      g.label = *label;
      g.pattern.premise_template = parse_template(doc.at("premise_template").get<std::string>());
      g.pattern.hypothesis_template = parse_template(doc.at("hypothesis_template").get<std::string>());
      g.pattern.num_variables = doc.at("num_variables").get<int>();
      g.members = doc.at("members").get<std::vector<PairId>>();
      validate_pattern(g.pattern);
      if (g.members.empty()) throw FormatError("group without members");
      if (doc.at("pattern_id").get<std::size_t>() != manifest.groups.size()) throw FormatError("pattern ids out of order");
      manifest.groups.push_back(std::move(g));
    }
  } catch (const json::exception& e) {
    throw FormatError("group manifest line " + std::to_string(line_no) + ": " + e.what());
  } catch (const FormatError& e) {
    throw FormatError("group manifest line " + std::to_string(line_no) + ": " + e.what());
  }
  if (!have_header) throw FormatError("group manifest is empty");
  return manifest;
}

}  // namespace sentops
