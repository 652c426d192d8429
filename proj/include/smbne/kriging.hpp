#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

namespace smbne {

struct KrigingFitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Ordinary Kriging over phenotypes with the isotropic Manhattan kernel
// exp(-theta * sum |x_i - x_i'|). A fitted model is immutable and safe for
// concurrent prediction.
class KrigingModel {
 public:
  double theta() const { return theta_; }
  double mu_hat() const { return mu_; }
  double sigma2_hat() const { return sigma2_; }
  double nugget() const { return nugget_; }
  int training_size() const { return static_cast<int>(phenos_.size()); }
  double best_training_fitness() const { return y_.minCoeff(); }

  // (mean, variance); variance clamped at >= 0.
  std::pair<double, double> predict(std::span<const double> pheno) const;

  // Minimization-sense expected improvement below y_best.
  double expected_improvement(std::span<const double> pheno, double y_best) const;

  std::string diagnostics_json() const;

  friend KrigingModel fit_kriging(std::vector<std::vector<double>> phenos,
                                  std::span<const double> fitnesses,
                                  double log10_theta_min, double log10_theta_max);

 private:
  double theta_ = 1.0;
  double mu_ = 0.0;
  double sigma2_ = 0.0;
  double nugget_ = 0.0;
  std::vector<std::vector<double>> phenos_;
  Eigen::VectorXd y_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd alpha_;  // R^{-1} (y - mu 1)
};

// MLE of theta over the concentrated log-likelihood, searched on the log10
// scale (grid then golden-section refinement). The nugget starts at 1e-8 and
// is escalated by factors of 10 up to 1e-2; beyond that a KrigingFitError is
// thrown. Requires >= 2 training points of equal phenotype length.
KrigingModel fit_kriging(std::vector<std::vector<double>> phenos,
                         std::span<const double> fitnesses,
                         double log10_theta_min = -6.0,
                         double log10_theta_max = 3.0);

// Concentrated log-likelihood for a given pairwise Manhattan distance matrix;
// exposed so tests can cross-check against a brute-force implementation.
double concentrated_log_likelihood(const Eigen::MatrixXd& distances,
                                   const Eigen::VectorXd& y, double theta,
                                   double nugget);

double normal_pdf(double z);
double normal_cdf(double z);

}  // namespace smbne
