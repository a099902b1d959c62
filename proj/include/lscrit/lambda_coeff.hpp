#pragma once

#include <cstdint>
#include <string>

namespace lscrit {

/// Exact rational with positive, gcd-reduced denominator. Table lookups stay
/// equality tests instead of tolerance tests.
struct Rational {
  long long num = 0;
  long long den = 1;

  Rational() = default;
  Rational(long long n) : num(n) {}  // NOLINT: implicit by design
  Rational(long long n, long long d);

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  std::string str() const;

  friend Rational operator+(const Rational& a, const Rational& b);
  friend Rational operator-(const Rational& a, const Rational& b);
  friend Rational operator*(const Rational& a, const Rational& b);
  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num == b.num && a.den == b.den;
  }
  friend bool operator<(const Rational& a, const Rational& b) {
    return a.num * b.den < b.num * a.den;
  }
};

enum class CoefficientCase { c1a, c1b, c2, c3, c4, regular, gmm_bound };
std::string case_label(CoefficientCase c);

struct LearningCoefficient {
  Rational lambda;
  int multiplicity = 1;
  CoefficientCase case_id = CoefficientCase::regular;
  bool is_upper_bound = false;
  std::string warning;  // nonempty if the strict-inequality cases overlapped
};

/// Reduced-rank regression learning coefficient for input dim M, output dim N,
/// hidden units H, true rank r (requires r <= min(H, M, N)). Dispatch order:
/// M+r > N+H, then N+r > M+H, then H+r > M+N, then the even/odd parity case.
LearningCoefficient aoyagi_lambda(int M, int N, int H, int r);

/// d/2 for a regular d-dimensional model with positive prior.
LearningCoefficient regular_lambda(int d);

/// Gaussian-mixture upper bound (N*H_star + H - 1)/2; requires H >= H_star >= 1.
LearningCoefficient gmm_lambda_bound(int N, int H_star, int H);

}  // namespace lscrit
