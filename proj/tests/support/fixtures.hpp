#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sentops/matrix.hpp"
#include "sentops/pattern.hpp"

namespace fixtures {

// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& name);

// `groups` patterns "X p<g> Y . -> X h<g> Y ." with `per_group` pairs each,
// fillers drawn without replacement from a separate vocabulary.
std::vector<sentops::SentencePair> synthetic_pairs(std::size_t groups, std::size_t per_group, std::uint64_t seed);

// Same pairs as a tab-separated corpus file.
void write_synthetic_corpus(const std::filesystem::path& path, std::size_t groups, std::size_t per_group,
                            std::uint64_t seed);

// PatternGroups with the given member counts and consecutive pair ids; the
// patterns are distinct single-word substitutions.
std::vector<sentops::PatternGroup> planted_groups(const std::vector<std::size_t>& sizes);

// Gaussian blobs: `k` centres at distance `spread` scale, `per` points each.
sentops::Matrix blobs(std::size_t k, std::size_t per, std::size_t dim, double centre_scale, double noise,
                      std::uint64_t seed, std::vector<int>* labels = nullptr);

sentops::Matrix random_points(std::size_t n, std::size_t dim, std::uint64_t seed);

}  // namespace fixtures
