#include "subgoal/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "subgoal/errors.hpp"

namespace subgoal {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags) {
  std::uint64_t h = splitmix64(base);
  for (std::uint64_t tag : tags) h = splitmix64(h ^ splitmix64(tag + 0x632be59bd9b4e019ULL));
  return h;
}

double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::size_t uniform_index(std::size_t n, Rng& rng) {
  auto i = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
  return std::min(i, n - 1);
}

double log_sum_exp(std::span<const double> log_weights) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double w : log_weights) hi = std::max(hi, w);
  if (!std::isfinite(hi)) return hi;
  double sum = 0.0;
  for (double w : log_weights) sum += std::exp(w - hi);
  return hi + std::log(sum);
}

std::size_t sample_log_weights(std::span<const double> log_weights, Rng& rng) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double w : log_weights) hi = std::max(hi, w);
  if (!std::isfinite(hi)) throw Error("cannot sample from all-zero weights");
  double total = 0.0;
  for (double w : log_weights) total += std::exp(w - hi);
  double u = uniform01(rng) * total;
  std::size_t last = 0;
  for (std::size_t i = 0; i < log_weights.size(); ++i) {
    double p = std::exp(log_weights[i] - hi);
    if (p <= 0.0) continue;
    last = i;
    if (u < p) return i;
    u -= p;
  }
  return last;
}

}  // namespace subgoal
