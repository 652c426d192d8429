#include "smbne/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace smbne {

namespace {

// Regularized lower incomplete gamma P(a, x), series expansion (x < a + 1).
double gamma_p_series(double a, double x) {
  double sum = 1.0 / a;
  double term = sum;
  for (int n = 1; n < 500; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * 1e-15) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Regularized upper incomplete gamma Q(a, x), continued fraction (x >= a + 1).
double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 500; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-15) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for the regularized incomplete beta function.
double beta_cf(double a, double b, double x) {
  const double tiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m < 500; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-15) break;
  }
  return h;
}

double reg_incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double front = std::exp(std::lgamma(a + b) - std::lgamma(a) -
                                std::lgamma(b) + a * std::log(x) +
                                b * std::log(1.0 - x));
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

// Midranks over the pooled sample; also returns the tie correction sum
// sum(t^3 - t) over tie groups.
std::vector<double> midranks(const std::vector<double>& pooled, double* tie_sum) {
  const std::size_t n = pooled.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return pooled[a] < pooled[b]; });
  std::vector<double> ranks(n);
  *tie_sum = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && pooled[order[j + 1]] == pooled[order[i]]) ++j;
    const double mid = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mid;
    const double t = static_cast<double>(j - i + 1);
    *tie_sum += t * t * t - t;
    i = j + 1;
  }
  return ranks;
}

struct RankedGroups {
  std::vector<std::vector<double>> ranks;  // per group
  double n_total = 0.0;
  double tie_sum = 0.0;
};

RankedGroups rank_groups(const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2) throw std::invalid_argument("need at least 2 groups");
  std::vector<double> pooled;
  for (const auto& g : groups) {
    if (g.empty()) throw std::invalid_argument("empty group");
    pooled.insert(pooled.end(), g.begin(), g.end());
  }
  RankedGroups out;
  out.n_total = static_cast<double>(pooled.size());
  std::vector<double> ranks = midranks(pooled, &out.tie_sum);
  std::size_t offset = 0;
  for (const auto& g : groups) {
    out.ranks.emplace_back(ranks.begin() + offset, ranks.begin() + offset + g.size());
    offset += g.size();
  }
  return out;
}

double h_statistic(const RankedGroups& rg) {
  const double n = rg.n_total;
  double sum = 0.0;
  for (const auto& r : rg.ranks) {
    const double rs = std::accumulate(r.begin(), r.end(), 0.0);
    sum += rs * rs / static_cast<double>(r.size());
  }
  double h = 12.0 / (n * (n + 1.0)) * sum - 3.0 * (n + 1.0);
  const double correction = 1.0 - rg.tie_sum / (n * n * n - n);
  if (correction <= 0.0) return 0.0;  // all values identical
  return h / correction;
}

}  // namespace

double chi_squared_sf(double x, double df) {
  if (x <= 0.0) return 1.0;
  const double a = df / 2.0, h = x / 2.0;
  if (h < a + 1.0) return 1.0 - gamma_p_series(a, h);
  return gamma_q_cf(a, h);
}

double student_t_two_sided_p(double t, double df) {
  if (!std::isfinite(t)) return 0.0;
  return reg_incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
}

KruskalResult kruskal_wallis(const std::vector<std::vector<double>>& groups) {
  const RankedGroups rg = rank_groups(groups);
  KruskalResult res;
  res.h = h_statistic(rg);
  res.p = chi_squared_sf(res.h, static_cast<double>(groups.size()) - 1.0);
  return res;
}

std::vector<std::vector<double>> conover_posthoc(
    const std::vector<std::vector<double>>& groups) {
  const RankedGroups rg = rank_groups(groups);
  const double n = rg.n_total;
  const double k = static_cast<double>(groups.size());
  const double h = h_statistic(rg);

  double sum_sq = 0.0;
  std::vector<double> mean_rank(groups.size());
  std::vector<double> sizes(groups.size());
  for (std::size_t i = 0; i < rg.ranks.size(); ++i) {
    for (double r : rg.ranks[i]) sum_sq += r * r;
    sizes[i] = static_cast<double>(rg.ranks[i].size());
    mean_rank[i] =
        std::accumulate(rg.ranks[i].begin(), rg.ranks[i].end(), 0.0) / sizes[i];
  }
  const double s2 = (sum_sq - n * (n + 1.0) * (n + 1.0) / 4.0) / (n - 1.0);
  const double df = n - k;
  const double variance_factor = s2 * (n - 1.0 - h) / df;

  std::vector<std::vector<double>> p(groups.size(),
                                     std::vector<double>(groups.size(), 1.0));
  for (std::size_t i = 0; i < groups.size(); ++i) {
    for (std::size_t j = i + 1; j < groups.size(); ++j) {
      const double diff = mean_rank[i] - mean_rank[j];
      double pij;
      if (variance_factor <= 0.0 || s2 <= 0.0) {
        pij = diff == 0.0 ? 1.0 : 0.0;  // degenerate: perfectly ranked data
      } else {
        const double se =
            std::sqrt(variance_factor * (1.0 / sizes[i] + 1.0 / sizes[j]));
        pij = student_t_two_sided_p(diff / se, df);
      }
      p[i][j] = p[j][i] = pij;
    }
  }
  return p;
}

}  // namespace smbne
