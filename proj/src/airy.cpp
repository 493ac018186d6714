#include "mpedge/airy.hpp"

#include <cmath>

namespace mpedge {

namespace {

constexpr long double kAi0 = 0.355028053887817239260063186004183176L;   // Ai(0)
constexpr long double kAip0 = 0.258819403792806798405183560189203963L;  // -Ai'(0)
constexpr double kSeriesLimit = 6.0;

AiryPair series(double xd) {
  const long double x = xd;
  const long double x3 = x * x * x;
  long double f = 1.0L, t = 1.0L;      // f(x) = Σ 3^k (1/3)_k x^{3k} / (3k)!
  long double g = x, u = x;            // g(x) = Σ 3^k (2/3)_k x^{3k+1} / (3k+1)!
  long double fp = 0.0L, a = x * x / 2.0L;
  long double gp = 1.0L, b = 1.0L;
  fp = a;
  for (int k = 0; k < 200; ++k) {
    const long double kk = 3.0L * k;
    t *= x3 / ((kk + 2.0L) * (kk + 3.0L));
    u *= x3 / ((kk + 3.0L) * (kk + 4.0L));
    b *= x3 / ((kk + 1.0L) * (kk + 3.0L));
    if (k > 0) a *= x3 / (kk * (kk + 2.0L));
    f += t;
    g += u;
    gp += b;
    if (k > 0) fp += a;
    const long double scale = std::fabs(f) + std::fabs(g) + std::fabs(fp) + std::fabs(gp);
    if (std::fabs(t) + std::fabs(u) + std::fabs(a) + std::fabs(b) < 1e-22L * scale && k > 2) break;
  }
  return {static_cast<double>(kAi0 * f - kAip0 * g), static_cast<double>(kAi0 * fp - kAip0 * gp)};
}

// u_k of the Airy asymptotic expansion; v_k = -(6k+1)/(6k-1) u_k.
struct Coefficients {
  double u[64];
  double v[64];
  Coefficients() {
    u[0] = 1.0;
    v[0] = 1.0;
    for (int k = 1; k < 64; ++k) {
      u[k] = u[k - 1] * (6.0 * k - 5.0) * (6.0 * k - 3.0) * (6.0 * k - 1.0) /
             ((2.0 * k - 1.0) * 216.0 * k);
      v[k] = -(6.0 * k + 1.0) / (6.0 * k - 1.0) * u[k];
    }
  }
};

const Coefficients& coefficients() {
  static const Coefficients c;
  return c;
}

// Sums Σ (-1)^k c[k] / ζ^k, stopping at the smallest term.
double alternating_sum(const double* c, double zeta, int stride, int offset) {
  double sum = 0.0, prev = INFINITY, zpow = std::pow(zeta, -offset);
  const double zs = std::pow(zeta, -stride);
  for (int j = 0; offset + stride * j < 64; ++j) {
    const double term = c[offset + stride * j] * zpow * ((j % 2) ? -1.0 : 1.0);
    if (std::abs(term) > prev) break;
    sum += term;
    prev = std::abs(term);
    if (prev < 1e-17 * std::abs(sum)) break;
    zpow *= zs;
  }
  return sum;
}

AiryPair asymptotic_positive(double x) {
  const auto& c = coefficients();
  const double zeta = 2.0 / 3.0 * x * std::sqrt(x);
  const double e = std::exp(-zeta) / (2.0 * std::sqrt(M_PI));
  const double q = std::sqrt(std::sqrt(x));
  return {e / q * alternating_sum(c.u, zeta, 1, 0), -e * q * alternating_sum(c.v, zeta, 1, 0)};
}

AiryPair asymptotic_negative(double x) {
  const auto& c = coefficients();
  const double y = -x;
  const double zeta = 2.0 / 3.0 * y * std::sqrt(y);
  const double q = std::sqrt(std::sqrt(y));
  const double ph = zeta - M_PI / 4.0;
  const double cs = std::cos(ph), sn = std::sin(ph);
  const double ue = alternating_sum(c.u, zeta, 2, 0), uo = alternating_sum(c.u, zeta, 2, 1);
  const double ve = alternating_sum(c.v, zeta, 2, 0), vo = alternating_sum(c.v, zeta, 2, 1);
  const double rp = 1.0 / std::sqrt(M_PI);
  return {rp / q * (cs * ue + sn * uo), rp * q * (sn * ve - cs * vo)};
}

}  // namespace

AiryPair airy(double x) {
  if (std::abs(x) <= kSeriesLimit) return series(x);
  return x > 0.0 ? asymptotic_positive(x) : asymptotic_negative(x);
}

double airy_ai(double x) { return airy(x).ai; }
double airy_ai_prime(double x) { return airy(x).aip; }

}  // namespace mpedge
