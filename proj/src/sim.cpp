#include "ltv/sim.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

#include "ltv/dist.hpp"
#include "ltv/text.hpp"
#include "ltv/train.hpp"

namespace ltv::sim {

std::vector<double> sample_lognormal(double mu, double sigma, std::size_t n,
                                     std::uint64_t seed) {
  if (!(sigma > 0.0)) {
    throw std::invalid_argument("sigma must be > 0");
  }
  std::mt19937_64 rng(seed);
  // Uniform in (0,1) built from 53 random bits, then mapped through the
  // inverse normal CDF.
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u =
        (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
    out[i] = std::exp(mu + sigma * dist::normal_quantile(u));
  }
  return out;
}

Replication run_replication(double sigma, std::size_t n, std::uint64_t seed) {
  if (n < 4 || n % 2 != 0) {
    throw std::invalid_argument("n must be even and >= 4");
  }
  const auto samples = sample_lognormal(0.0, sigma, n, seed);
  const std::size_t half = n / 2;
  const std::span<const double> train_half(samples.data(), half);
  const std::span<const double> test_half(samples.data() + half, half);

  const auto report = dist::estimate_mean(train_half);

  auto constant_predictor_mse = [&](double theta) {
    double sum = 0.0;
    for (double x : test_half) {
      const double d = x - theta;
      sum += d * d;
    }
    return sum / static_cast<double>(half);
  };

  Replication rep;
  rep.theta_avg = report.theta_avg;
  rep.theta_mle = report.theta_mle;
  rep.theta_finney = report.theta_finney;
  rep.test_mse_avg = constant_predictor_mse(report.theta_avg);
  rep.test_mse_mle = constant_predictor_mse(report.theta_mle);
  rep.test_mse_finney = constant_predictor_mse(report.theta_finney);
  return rep;
}

std::vector<Replication> run_replications(double sigma, std::size_t n,
                                          std::size_t reps,
                                          std::size_t sigma_index,
                                          std::uint64_t seed) {
  std::vector<Replication> out(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    out[r] = run_replication(sigma, n,
                             train::derive_seed(seed, sigma_index, r));
  }
  return out;
}

std::vector<EfficiencyRow> run_efficiency_study(std::span<const double> sigmas,
                                                std::size_t n,
                                                std::size_t reps,
                                                std::uint64_t seed) {
  if (reps < 2) {
    throw std::invalid_argument("reps must be >= 2");
  }
  std::vector<EfficiencyRow> rows;
  for (std::size_t s = 0; s < sigmas.size(); ++s) {
    const double sigma = sigmas[s];
    const double true_mean = std::exp(sigma * sigma / 2.0);
    const auto replications = run_replications(sigma, n, reps, s, seed);

    EfficiencyRow row;
    row.sigma = sigma;
    row.n = n;
    row.reps = reps;
    for (const auto& rep : replications) {
      row.mse_avg += rep.test_mse_avg;
      row.mse_mle += rep.test_mse_mle;
      row.mse_finney += rep.test_mse_finney;
      row.err2_avg += (rep.theta_avg - true_mean) * (rep.theta_avg - true_mean);
      row.err2_mle += (rep.theta_mle - true_mean) * (rep.theta_mle - true_mean);
      row.err2_finney +=
          (rep.theta_finney - true_mean) * (rep.theta_finney - true_mean);
    }
    const auto r = static_cast<double>(reps);
    row.mse_avg /= r;
    row.mse_mle /= r;
    row.mse_finney /= r;
    row.err2_avg /= r;
    row.err2_mle /= r;
    row.err2_finney /= r;
    if (!std::isfinite(row.mse_avg) || !std::isfinite(row.mse_mle) ||
        !std::isfinite(row.mse_finney)) {
      throw std::runtime_error("non-finite MSE in efficiency study");
    }
    row.rel_eff_mle = row.mse_avg / row.mse_mle;
    row.rel_eff_finney = row.mse_avg / row.mse_finney;
    row.theoretical = dist::theoretical_rel_efficiency(sigma, n / 2);
    rows.push_back(row);
  }
  return rows;
}

void save_efficiency_csv(std::span<const EfficiencyRow> rows,
                         const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write efficiency CSV: " + path);
  }
  out << "sigma,n,reps,mse_avg,mse_mle,mse_finney,rel_eff_mle,"
         "rel_eff_finney,theoretical\n";
  for (const auto& row : rows) {
    out << text::format_double(row.sigma) << "," << row.n << "," << row.reps
        << "," << text::format_double(row.mse_avg) << ","
        << text::format_double(row.mse_mle) << ","
        << text::format_double(row.mse_finney) << ","
        << text::format_double(row.rel_eff_mle) << ","
        << text::format_double(row.rel_eff_finney) << ","
        << text::format_double(row.theoretical) << "\n";
  }
}

}  // namespace ltv::sim
