#include "lscrit/lambda_coeff.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace lscrit {

Rational::Rational(long long n, long long d) : num(n), den(d) {
  if (den == 0) throw std::invalid_argument("Rational: zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const long long g = std::gcd(num < 0 ? -num : num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
}

std::string Rational::str() const {
  if (den == 1) return std::to_string(num);
  return std::to_string(num) + "/" + std::to_string(den);
}

Rational operator+(const Rational& a, const Rational& b) {
  return Rational(a.num * b.den + b.num * a.den, a.den * b.den);
}

Rational operator-(const Rational& a, const Rational& b) {
  return Rational(a.num * b.den - b.num * a.den, a.den * b.den);
}

Rational operator*(const Rational& a, const Rational& b) {
  return Rational(a.num * b.num, a.den * b.den);
}

std::string case_label(CoefficientCase c) {
  switch (c) {
    case CoefficientCase::c1a: return "1a";
    case CoefficientCase::c1b: return "1b";
    case CoefficientCase::c2: return "2";
    case CoefficientCase::c3: return "3";
    case CoefficientCase::c4: return "4";
    case CoefficientCase::regular: return "regular";
    case CoefficientCase::gmm_bound: return "gmm_bound";
  }
  return "?";
}

LearningCoefficient aoyagi_lambda(int M, int N, int H, int r) {
  if (M < 1 || N < 1 || H < 1) throw std::invalid_argument("aoyagi_lambda: M, N, H must be >= 1");
  if (r < 0) throw std::invalid_argument("aoyagi_lambda: r must be >= 0");
  if (r > std::min({H, M, N}))
    throw std::invalid_argument("aoyagi_lambda: requires r <= min(H, M, N)");

  const bool case2 = M + r > N + H;
  const bool case3 = N + r > M + H;
  const bool case4 = H + r > M + N;
  LearningCoefficient lc;
  if (static_cast<int>(case2) + case3 + case4 > 1)
    lc.warning = "overlapping strict-inequality cases; first in dispatch order used";

  if (case2) {
    lc.case_id = CoefficientCase::c2;
    lc.lambda = Rational(static_cast<long long>(H) * N - static_cast<long long>(H) * r +
                             static_cast<long long>(M) * r,
                         2);
    lc.multiplicity = 1;
  } else if (case3) {
    lc.case_id = CoefficientCase::c3;
    lc.lambda = Rational(static_cast<long long>(H) * M - static_cast<long long>(H) * r +
                             static_cast<long long>(N) * r,
                         2);
    lc.multiplicity = 1;
  } else if (case4) {
    lc.case_id = CoefficientCase::c4;
    lc.lambda = Rational(static_cast<long long>(M) * N, 2);
    lc.multiplicity = 1;
  } else {
    const long long s = static_cast<long long>(H) + r - M - N;
    const Rational base = Rational(-s * s, 8) + Rational(static_cast<long long>(M) * N, 2);
    if ((M + H + N + r) % 2 == 0) {
      lc.case_id = CoefficientCase::c1a;
      lc.lambda = base;
      lc.multiplicity = 1;
    } else {
      lc.case_id = CoefficientCase::c1b;
      lc.lambda = base + Rational(1, 8);
      lc.multiplicity = 2;
    }
  }
  return lc;
}

LearningCoefficient regular_lambda(int d) {
  if (d < 1) throw std::invalid_argument("regular_lambda: d must be >= 1");
  LearningCoefficient lc;
  lc.case_id = CoefficientCase::regular;
  lc.lambda = Rational(d, 2);
  lc.multiplicity = 1;
  return lc;
}

LearningCoefficient gmm_lambda_bound(int N, int H_star, int H) {
  if (N < 1 || H_star < 1) throw std::invalid_argument("gmm_lambda_bound: N, H_star must be >= 1");
  if (H < H_star)
    throw std::invalid_argument("gmm_lambda_bound: requires H >= H_star (realizability)");
  LearningCoefficient lc;
  lc.case_id = CoefficientCase::gmm_bound;
  lc.lambda = Rational(static_cast<long long>(N) * H_star + H - 1, 2);
  lc.multiplicity = 1;
  lc.is_upper_bound = true;
  return lc;
}

}  // namespace lscrit
