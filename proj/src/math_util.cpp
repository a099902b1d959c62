#include "lscrit/math_util.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace lscrit {

double log_sum_exp(std::span<const double> values) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : values) {
    if (v > m) m = v;
  }
  if (!std::isfinite(m)) return m;  // all -inf (or empty)
  double acc = 0.0;
  for (double v : values) {
    if (std::isfinite(v)) acc += std::exp(v - m);
  }
  return m + std::log(acc);
}

double log_normal_pdf(double x, double mean, double var) {
  const double d = x - mean;
  return -0.5 * (kLogTwoPi + std::log(var)) - 0.5 * d * d / var;
}

std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t key) {
  return mix64(mix64(mix64(master) ^ stream) ^ key);
}

std::uint64_t double_key(double value) {
  std::uint64_t bits;
  static_assert(sizeof(bits) == sizeof(value));
  std::memcpy(&bits, &value, sizeof(bits));
  return bits;
}

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

double Rng::uniform() {
  return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  // u1 in (0, 1] so log is finite.
  const double u1 = (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  cached_ = r * std::sin(a);
  has_cached_ = true;
  return r * std::cos(a);
}

int Rng::categorical(const Eigen::VectorXd& weights) {
  const double u = uniform();
  double acc = 0.0;
  for (int h = 0; h < weights.size(); ++h) {
    acc += weights[h];
    if (u < acc) return h;
  }
  return static_cast<int>(weights.size()) - 1;
}

Eigen::VectorXd Rng::simplex(int k) {
  if (k < 1) throw std::invalid_argument("simplex: k must be >= 1");
  Eigen::VectorXd w(k);
  if (k == 1) {
    w[0] = 1.0;
    return w;
  }
  // Exponential spacings normalize to a uniform simplex draw.
  double total = 0.0;
  for (int i = 0; i < k; ++i) {
    w[i] = -std::log(1.0 - uniform());
    total += w[i];
  }
  w /= total;
  return w;
}

}  // namespace lscrit
