#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ltv::sim {

// One Monte-Carlo cell of the estimator efficiency study.
struct EfficiencyRow {
  double sigma = 0.0;
  std::size_t n = 0;     // total draws per replication (train + test)
  std::size_t reps = 0;
  double mse_avg = 0.0;     // constant-predictor MSE over the test half
  double mse_mle = 0.0;
  double mse_finney = 0.0;
  double rel_eff_mle = 0.0;     // mse_avg / mse_mle
  double rel_eff_finney = 0.0;  // mse_avg / mse_finney
  double theoretical = 0.0;     // theoretical curve at (sigma, n/2)
  // Secondary reading of "MSE": replication-averaged squared error of each
  // estimator against the true mean exp(sigma^2 / 2).
  double err2_avg = 0.0;
  double err2_mle = 0.0;
  double err2_finney = 0.0;
};

// One replication's estimates and scores; kept so callers can run
// significance tests over replications.
struct Replication {
  double theta_avg = 0.0;
  double theta_mle = 0.0;
  double theta_finney = 0.0;
  double test_mse_avg = 0.0;
  double test_mse_mle = 0.0;
  double test_mse_finney = 0.0;
};

// n lognormal draws via the inverse-CDF transform of uniforms from a seeded
// mt19937_64, so the stream is reproducible across platforms.
std::vector<double> sample_lognormal(double mu, double sigma, std::size_t n,
                                     std::uint64_t seed);

// One replication: n draws from Lognormal(0, sigma^2), first half trains the
// estimators, second half scores them as constant predictors.
Replication run_replication(double sigma, std::size_t n, std::uint64_t seed);

std::vector<Replication> run_replications(double sigma, std::size_t n,
                                          std::size_t reps,
                                          std::size_t sigma_index,
                                          std::uint64_t seed);

std::vector<EfficiencyRow> run_efficiency_study(std::span<const double> sigmas,
                                                std::size_t n, std::size_t reps,
                                                std::uint64_t seed);

// CSV columns: sigma,n,reps,mse_avg,mse_mle,mse_finney,rel_eff_mle,
// rel_eff_finney,theoretical.
void save_efficiency_csv(std::span<const EfficiencyRow> rows,
                         const std::string& path);

}  // namespace ltv::sim
