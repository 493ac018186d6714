#include "mpedge/distributions.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>

#include "mpedge/errors.hpp"

namespace mpedge {

namespace {

constexpr double kE = std::numbers::e;
const double kE4 = std::exp(4.0);

double parse_real(std::string_view text, std::string_view what) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end || !std::isfinite(v))
    throw ValidationError("bad number for " + std::string(what) + ": '" + std::string(text) + "'");
  return v;
}

double abs_less(double a, double b) { return std::abs(a) < std::abs(b); }

// Pareto(a), x_m = 1: P(Y ≥ y) and E[Y 1(Y ≥ y)].
double pareto_upper(double a, double y) { return y <= 1.0 ? 1.0 : std::pow(y, -a); }
double pareto_upper_mean(double a, double y) {
  const double mean = a / (a - 1.0);
  return y <= 1.0 ? mean : mean * std::pow(y, 1.0 - a);
}

}  // namespace

double heavy_tail_survival_raw(double y) {
  if (y <= kE) return 1.0;
  const double y2 = y * y;
  return kE4 / (y2 * y2 * std::log(y));
}

double heavy_tail_draw_raw(CounterRng& rng) {
  // Solve S(y) = u in t = ln y:  4t + ln t = 4 + ln(1/u),  t ≥ 1.
  const double c = 4.0 - std::log(rng.uniform_open());
  double t = std::max(1.0, c / 4.0);
  for (int it = 0; it < 60; ++it) {
    const double step = (4.0 * t + std::log(t) - c) / (4.0 + 1.0 / t);
    t -= step;
    if (t < 1.0) t = 1.0;
    if (std::abs(step) <= 1e-15 * t) break;
  }
  return std::exp(t);
}

EntryDistribution EntryDistribution::gaussian() { return {DistKind::Gaussian, 0.0, 1.0}; }
EntryDistribution EntryDistribution::rademacher() { return {DistKind::Rademacher, 0.0, 1.0}; }
EntryDistribution EntryDistribution::heavy_tail() { return {DistKind::HeavyTail, 0.0, kHeavyTailScale}; }

EntryDistribution EntryDistribution::pareto(double a) {
  if (!(a > 2.0) || !std::isfinite(a))
    throw ValidationError("pareto shape must exceed 2 (variance is infinite otherwise)");
  const double mean = a / (a - 1.0);
  const double var = a / ((a - 1.0) * (a - 1.0) * (a - 2.0));
  EntryDistribution out{DistKind::Pareto, mean, std::sqrt(var)};
  out.a_ = a;
  return out;
}

EntryDistribution EntryDistribution::tabulated(std::vector<double> samples) {
  if (samples.size() < 2) throw Unsupported("tabulated distribution needs at least two samples");
  double mean = 0.0;
  for (double x : samples) {
    if (!std::isfinite(x)) throw ValidationError("tabulated sample is not finite");
    mean += x;
  }
  mean /= static_cast<double>(samples.size());
  double var = 0.0;
  for (double x : samples) var += (x - mean) * (x - mean);
  var /= static_cast<double>(samples.size());
  if (!(var > 0.0)) throw ValidationError("tabulated samples have zero variance");
  const double sd = std::sqrt(var);
  for (double& x : samples) x = (x - mean) / sd;
  std::sort(samples.begin(), samples.end(), abs_less);
  EntryDistribution out{DistKind::Tabulated, mean, sd};
  out.table_ = std::make_shared<const std::vector<double>>(std::move(samples));
  return out;
}

EntryDistribution EntryDistribution::parse(std::string_view text) {
  if (text == "gaussian") return gaussian();
  if (text == "rademacher") return rademacher();
  if (text == "heavy") return heavy_tail();
  if (text.starts_with("pareto:")) return pareto(parse_real(text.substr(7), "pareto shape"));
  if (text.starts_with("tabulated:")) {
    const std::string path(text.substr(10));
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open sample file " + path);
    std::vector<double> xs;
    for (double x; in >> x;) xs.push_back(x);
    if (!in.eof()) throw ValidationError("malformed sample file " + path);
    return tabulated(std::move(xs));
  }
  throw ValidationError("unknown distribution '" + std::string(text) +
                        "' (expected gaussian | rademacher | heavy | pareto:a | tabulated:file)");
}

std::string EntryDistribution::name() const {
  switch (kind_) {
    case DistKind::Gaussian: return "gaussian";
    case DistKind::Rademacher: return "rademacher";
    case DistKind::HeavyTail: return "heavy";
    case DistKind::Pareto: {
      char buf[64];
      auto [p, ec] = std::to_chars(buf, buf + sizeof buf, a_);
      (void)ec;
      return "pareto:" + std::string(buf, p);
    }
    case DistKind::Tabulated: return "tabulated";
  }
  return "unknown";
}

TailClass EntryDistribution::tail_class() const noexcept {
  switch (kind_) {
    case DistKind::Pareto: return a_ > 4.0 ? TailClass::ConditionHolds : TailClass::ConditionFails;
    case DistKind::Tabulated: return TailClass::ConditionHolds;  // finite support
    default: return TailClass::ConditionHolds;
  }
}

double EntryDistribution::sample(CounterRng& rng) const {
  switch (kind_) {
    case DistKind::Gaussian: return rng.normal();
    case DistKind::Rademacher: return (rng() >> 63) ? 1.0 : -1.0;
    case DistKind::HeavyTail: {
      const bool neg = rng() >> 63;
      const double y = heavy_tail_draw_raw(rng) / scale_;
      return neg ? -y : y;
    }
    case DistKind::Pareto: return (std::pow(rng.uniform_open(), -1.0 / a_) - shift_) / scale_;
    case DistKind::Tabulated: {
      const auto& t = *table_;
      return t[static_cast<std::size_t>(rng.uniform() * static_cast<double>(t.size()))];
    }
  }
  return 0.0;
}

double EntryDistribution::survival(double s) const {
  if (!(s >= 0.0)) throw ValidationError("survival needs s >= 0");
  switch (kind_) {
    case DistKind::Gaussian: return std::erfc(s / std::numbers::sqrt2);
    case DistKind::Rademacher: return s <= 1.0 ? 1.0 : 0.0;
    case DistKind::HeavyTail: return heavy_tail_survival_raw(s * scale_);
    case DistKind::Pareto: {
      if (s == 0.0) return 1.0;
      const double lower = shift_ - s * scale_;
      const double p_low = lower > 1.0 ? 1.0 - std::pow(lower, -a_) : 0.0;
      return pareto_upper(a_, shift_ + s * scale_) + p_low;
    }
    case DistKind::Tabulated: break;
  }
  throw Unsupported("tabulated distribution has no closed-form survival; use survival_estimate");
}

SurvivalEstimate EntryDistribution::survival_estimate(double s) const {
  if (kind_ != DistKind::Tabulated) return {survival(s), 0.0};
  if (!(s >= 0.0)) throw ValidationError("survival needs s >= 0");
  const auto& t = *table_;
  const auto it = std::lower_bound(t.begin(), t.end(), s, abs_less);
  const double n = static_cast<double>(t.size());
  const double p = static_cast<double>(t.end() - it) / n;
  return {p, std::sqrt(p * (1.0 - p) / n)};
}

std::vector<std::pair<double, double>> EntryDistribution::tail_condition_estimate(
    const std::vector<double>& s_grid) const {
  std::vector<std::pair<double, double>> out;
  out.reserve(s_grid.size());
  for (std::size_t i = 0; i < s_grid.size(); ++i) {
    const double s = s_grid[i];
    if (!(s > 0.0) || (i > 0 && !(s > s_grid[i - 1])))
      throw ValidationError("tail grid must be positive and increasing");
    const double s2 = s * s;
    out.emplace_back(s, s2 * s2 * survival_estimate(s).value);
  }
  return out;
}

TailMoments EntryDistribution::tail_moments(double T) const {
  if (!(T >= 0.0)) throw ValidationError("cutoff threshold must be >= 0");
  switch (kind_) {
    case DistKind::Gaussian: return {std::erfc(T / std::numbers::sqrt2), 0.0};
    case DistKind::Rademacher: return {T < 1.0 ? 1.0 : 0.0, 0.0};
    case DistKind::HeavyTail: return {heavy_tail_survival_raw(T * scale_), 0.0};
    case DistKind::Pareto: {
      const double mu = shift_, sd = scale_;
      const double hi = mu + T * sd;
      double alpha = pareto_upper(a_, hi);
      double beta = (pareto_upper_mean(a_, hi) - mu * pareto_upper(a_, hi)) / sd;
      const double lo = mu - T * sd;
      if (lo > 1.0) {
        const double p = 1.0 - std::pow(lo, -a_);
        const double m = mu - pareto_upper_mean(a_, lo);
        alpha += p;
        beta += (m - mu * p) / sd;
      }
      return {alpha, beta};
    }
    case DistKind::Tabulated: break;
  }
  throw QuadratureFailure("cutoff moments are not available for a tabulated distribution");
}

}  // namespace mpedge
