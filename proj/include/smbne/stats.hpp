#pragma once

#include <vector>

namespace smbne {

struct KruskalResult {
  double h = 0.0;
  double p = 1.0;
};

// Rank-based H with midrank tie correction; p from the chi-square
// distribution with (groups - 1) degrees of freedom.
KruskalResult kruskal_wallis(const std::vector<std::vector<double>>& groups);

// Conover-Iman pairwise two-sided p-values on rank sums with pooled
// tie-corrected variance; t distribution with N - k degrees of freedom.
// Symmetric matrix with unit diagonal.
std::vector<std::vector<double>> conover_posthoc(
    const std::vector<std::vector<double>>& groups);

// Survival functions used above, exposed for verification.
double chi_squared_sf(double x, double df);
double student_t_two_sided_p(double t, double df);

}  // namespace smbne
