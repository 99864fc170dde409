#include "envmarket/rng.hpp"

#include <cmath>

#include "envmarket/numerics.hpp"

namespace envmarket {

namespace {
std::uint64_t splitmix(std::uint64_t& s) {
  std::uint64_t z = (s += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}
}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream) {
  // Decorrelate the stream index from the seed before chaining.
  std::uint64_t s = seed;
  std::uint64_t a = splitmix(s);
  s = stream ^ 0xD1B54A32D192ED03ULL;
  std::uint64_t b = splitmix(s);
  state_ = a ^ (b + 0x9E3779B97F4A7C15ULL);
}

std::uint64_t Rng::next_u64() { return splitmix(state_); }

double Rng::next_uniform() {
  double u = double(next_u64() >> 11) * 0x1.0p-53;
  if (u <= 0.0) u = 0x1.0p-53;
  return u;
}

double Rng::next_normal() { return num::norm_ppf(next_uniform()); }

double Rng::next_inverse_gaussian(double mean, double shape) {
  double v = next_normal();
  double y = v * v;
  double x = mean + mean * mean * y / (2.0 * shape) -
             mean / (2.0 * shape) *
                 std::sqrt(4.0 * mean * shape * y + mean * mean * y * y);
  if (x <= 0.0) x = 1e-300;
  double u = next_uniform();
  if (u <= mean / (mean + x)) return x;
  return mean * mean / x;
}

}  // namespace envmarket
