#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>

namespace subgoal {

using Rng = std::mt19937_64;

// Mixes a base seed with a list of tags into an independent stream seed.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags);

// Uniform double in [0, 1) built from the top 53 bits; identical on every platform.
double uniform01(Rng& rng);

// Uniform index in [0, n). n must be positive.
std::size_t uniform_index(std::size_t n, Rng& rng);

double log_sum_exp(std::span<const double> log_weights);

// Samples an index with probability proportional to exp(log_weights[i]).
// Entries equal to -inf are never drawn. Throws if every entry is -inf.
std::size_t sample_log_weights(std::span<const double> log_weights, Rng& rng);

}  // namespace subgoal
