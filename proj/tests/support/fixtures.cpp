#include "fixtures.hpp"

#include <fstream>
#include <stdexcept>

#include "sentops/corpus.hpp"
#include "sentops/random.hpp"

namespace fixtures {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("sentops-test-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<sentops::SentencePair> synthetic_pairs(std::size_t groups, std::size_t per_group, std::uint64_t seed) {
  constexpr std::size_t kVocabulary = 48;
  sentops::Rng rng(seed);
  std::vector<sentops::SentencePair> pairs;
  const sentops::Label labels[] = {sentops::Label::kContradiction, sentops::Label::kEntailment,
                                   sentops::Label::kNeutral};
  for (std::size_t g = 0; g < groups; ++g) {
    for (std::size_t m = 0; m < per_group; ++m) {
      std::vector<std::string> pool;
      for (std::size_t w = 0; w < kVocabulary; ++w) pool.push_back("w" + std::to_string(w));
      const auto draw = [&](std::size_t count) {
        sentops::Tokens out;
        for (std::size_t i = 0; i < count; ++i) {
          const auto at = rng.below(pool.size());
          out.push_back(pool[at]);
          pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(at));
        }
        return out;
      };
      const auto x = draw(1 + rng.below(3));
      const auto y = draw(1 + rng.below(3));
      sentops::SentencePair p;
      p.id = static_cast<sentops::PairId>(pairs.size());
      p.label = labels[g % 3];
      p.premise = x;
      p.premise.push_back("p" + std::to_string(g));
      p.premise.insert(p.premise.end(), y.begin(), y.end());
      p.premise.push_back(".");
      p.hypothesis = x;
      p.hypothesis.push_back("h" + std::to_string(g));
      p.hypothesis.insert(p.hypothesis.end(), y.begin(), y.end());
      p.hypothesis.push_back(".");
      pairs.push_back(std::move(p));
    }
  }
  return pairs;
}

void write_synthetic_corpus(const fs::path& path, std::size_t groups, std::size_t per_group, std::uint64_t seed) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& p : synthetic_pairs(groups, per_group, seed)) {
    out << sentops::join_tokens(p.premise) << '\t' << sentops::join_tokens(p.hypothesis) << '\t'
        << sentops::label_name(p.label) << '\n';
  }
}

std::vector<sentops::PatternGroup> planted_groups(const std::vector<std::size_t>& sizes) {
  std::vector<sentops::PatternGroup> groups;
  sentops::PairId next = 0;
  for (std::size_t g = 0; g < sizes.size(); ++g) {
    sentops::PatternGroup group;
    group.pattern.premise_template = {std::string(sentops::kVariableX), "p" + std::to_string(g)};
    group.pattern.hypothesis_template = {std::string(sentops::kVariableX), "h" + std::to_string(g)};
    group.pattern.num_variables = 1;
    group.label = sentops::Label::kContradiction;
    for (std::size_t m = 0; m < sizes[g]; ++m) group.members.push_back(next++);
    groups.push_back(std::move(group));
  }
  return groups;
}

sentops::Matrix blobs(std::size_t k, std::size_t per, std::size_t dim, double centre_scale, double noise,
                      std::uint64_t seed, std::vector<int>* labels) {
  sentops::Rng rng(seed);
  sentops::Matrix centres(k, dim);
  for (double& v : centres.data()) v = centre_scale * rng.normal();
  sentops::Matrix points(k * per, dim);
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t i = 0; i < per; ++i) {
      for (std::size_t d = 0; d < dim; ++d) points(c * per + i, d) = centres(c, d) + noise * rng.normal();
      if (labels) labels->push_back(static_cast<int>(c));
    }
  }
  return points;
}

sentops::Matrix random_points(std::size_t n, std::size_t dim, std::uint64_t seed) {
  sentops::Rng rng(seed);
  sentops::Matrix points(n, dim);
  for (double& v : points.data()) v = rng.normal();
  return points;
}

}  // namespace fixtures
