#include "smbne/kriging.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "json.hpp"
#include "smbne/phd.hpp"

namespace smbne {

double normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

namespace {

struct LikelihoodEval {
  double mu = 0.0;
  double sigma2 = 0.0;
  double log_likelihood = -std::numeric_limits<double>::infinity();
  Eigen::LLT<Eigen::MatrixXd> llt;
};

Eigen::MatrixXd correlation_matrix(const Eigen::MatrixXd& distances, double theta,
                                   double nugget) {
  Eigen::MatrixXd r = (-theta * distances.array()).exp();
  r.diagonal().array() += nugget;
  return r;
}

std::optional<LikelihoodEval> evaluate_theta(const Eigen::MatrixXd& distances,
                                             const Eigen::VectorXd& y, double theta,
                                             double nugget) {
  const Eigen::Index n = y.size();
  LikelihoodEval ev;
  ev.llt.compute(correlation_matrix(distances, theta, nugget));
  if (ev.llt.info() != Eigen::Success) return std::nullopt;
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  const Eigen::VectorXd ri_ones = ev.llt.solve(ones);
  const double denom = ones.dot(ri_ones);
  if (!(denom > 0.0) || !std::isfinite(denom)) return std::nullopt;
  ev.mu = y.dot(ri_ones) / denom;  // GLS mean
  const Eigen::VectorXd resid = y - ev.mu * ones;
  ev.sigma2 = resid.dot(ev.llt.solve(resid)) / static_cast<double>(n);
  if (ev.sigma2 < 0.0) ev.sigma2 = 0.0;
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    log_det += 2.0 * std::log(ev.llt.matrixLLT()(i, i));
  ev.log_likelihood = -0.5 * static_cast<double>(n) *
                          std::log(std::max(ev.sigma2, 1e-300)) -
                      0.5 * log_det;
  if (!std::isfinite(ev.log_likelihood)) return std::nullopt;
  return ev;
}

}  // namespace

double concentrated_log_likelihood(const Eigen::MatrixXd& distances,
                                   const Eigen::VectorXd& y, double theta,
                                   double nugget) {
  auto ev = evaluate_theta(distances, y, theta, nugget);
  if (!ev) return -std::numeric_limits<double>::infinity();
  return ev->log_likelihood;
}

KrigingModel fit_kriging(std::vector<std::vector<double>> phenos,
                         std::span<const double> fitnesses,
                         double log10_theta_min, double log10_theta_max) {
  const std::size_t n = phenos.size();
  if (n < 2) throw KrigingFitError("need at least 2 training points");
  if (fitnesses.size() != n)
    throw KrigingFitError("phenotype/fitness count mismatch");
  for (const auto& p : phenos)
    if (p.size() != phenos[0].size())
      throw KrigingFitError("phenotype length mismatch");
  for (double y : fitnesses)
    if (!std::isfinite(y)) throw KrigingFitError("non-finite training fitness");

  Eigen::MatrixXd distances(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    distances(i, i) = 0.0;
    for (std::size_t j = i + 1; j < n; ++j)
      distances(i, j) = distances(j, i) = manhattan(phenos[i], phenos[j]);
  }
  Eigen::VectorXd y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = fitnesses[i];

  constexpr int kGridPoints = 40;
  constexpr int kRefineSteps = 30;
  const double golden = (std::sqrt(5.0) - 1.0) / 2.0;

  for (double nugget = 1e-8; nugget <= 1e-2 * (1.0 + 1e-12); nugget *= 10.0) {
    double best_log_theta = 0.0;
    double best_ll = -std::numeric_limits<double>::infinity();
    int best_idx = -1;
    for (int i = 0; i < kGridPoints; ++i) {
      const double lt = log10_theta_min + (log10_theta_max - log10_theta_min) *
                                              i / (kGridPoints - 1.0);
      const double ll =
          concentrated_log_likelihood(distances, y, std::pow(10.0, lt), nugget);
      if (ll > best_ll) {
        best_ll = ll;
        best_log_theta = lt;
        best_idx = i;
      }
    }
    if (best_idx < 0 || !std::isfinite(best_ll)) continue;  // escalate nugget

    // golden-section refinement in the bracket around the best grid point
    const double grid_step =
        (log10_theta_max - log10_theta_min) / (kGridPoints - 1.0);
    double a = std::max(log10_theta_min, best_log_theta - grid_step);
    double b = std::min(log10_theta_max, best_log_theta + grid_step);
    auto ll_at = [&](double lt) {
      return concentrated_log_likelihood(distances, y, std::pow(10.0, lt), nugget);
    };
    double x1 = b - golden * (b - a), x2 = a + golden * (b - a);
    double f1 = ll_at(x1), f2 = ll_at(x2);
    for (int it = 0; it < kRefineSteps; ++it) {
      if (f1 < f2) {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + golden * (b - a);
        f2 = ll_at(x2);
      } else {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - golden * (b - a);
        f1 = ll_at(x1);
      }
    }
    const double refined = f1 > f2 ? x1 : x2;
    if (std::max(f1, f2) > best_ll) best_log_theta = refined;

    const double theta = std::pow(10.0, best_log_theta);
    auto ev = evaluate_theta(distances, y, theta, nugget);
    if (!ev) continue;

    KrigingModel m;
    m.theta_ = theta;
    m.mu_ = ev->mu;
    m.sigma2_ = ev->sigma2;
    m.nugget_ = nugget;
    m.phenos_ = std::move(phenos);
    m.y_ = y;
    m.llt_ = std::move(ev->llt);
    m.alpha_ = m.llt_.solve(y - m.mu_ * Eigen::VectorXd::Ones(n));
    return m;
  }
  throw KrigingFitError(
      "correlation matrix not positive definite up to maximum nugget");
}

std::pair<double, double> KrigingModel::predict(std::span<const double> pheno) const {
  if (phenos_.empty()) throw std::logic_error("unfitted model");
  const Eigen::Index n = y_.size();
  Eigen::VectorXd r(n);
  for (Eigen::Index i = 0; i < n; ++i)
    r[i] = std::exp(-theta_ * manhattan(pheno, phenos_[i]));
  const double mean = mu_ + r.dot(alpha_);
  const double variance =
      std::max(0.0, sigma2_ * (1.0 - r.dot(llt_.solve(r))));
  return {mean, variance};
}

double KrigingModel::expected_improvement(std::span<const double> pheno,
                                          double y_best) const {
  auto [mean, variance] = predict(pheno);
  const double s = std::sqrt(variance);
  const double improvement = y_best - mean;
  if (s < 1e-12) return std::max(improvement, 0.0);
  const double z = improvement / s;
  return improvement * normal_cdf(z) + s * normal_pdf(z);
}

std::string KrigingModel::diagnostics_json() const {
  nlohmann::json j = {{"theta", theta_},
                      {"mu_hat", mu_},
                      {"sigma2_hat", sigma2_},
                      {"nugget", nugget_},
                      {"training_size", training_size()}};
  return j.dump();
}

}  // namespace smbne
