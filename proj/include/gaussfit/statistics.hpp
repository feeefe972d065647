#pragma once

#include <Eigen/Core>

#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <vector>

namespace gaussfit {

/// A mean and its standard error.
struct MeanEstimate {
  double mean = 0;
  double se = 0;
};

/// Mean of `values` with a batch-means standard error. Each chain (delimited
/// by `chain_offsets`, size chains + 1) is cut into contiguous batches so that
/// about `target_batches` batches exist overall; batches never straddle chains.
MeanEstimate batch_mean(std::span<const double> values, std::span<const Eigen::Index> chain_offsets,
                        int target_batches = 50);

/// Ratio of the batch-means variance of the mean to the i.i.d. variance,
/// floored at 1. Used to turn a correlated sample size into an effective one.
double variance_inflation(std::span<const double> values, std::span<const Eigen::Index> chain_offsets,
                          int target_batches = 50);

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }
inline double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2 * std::numbers::pi); }

/// Two-sided Kolmogorov-Smirnov distance between the empirical law of
/// `sample` and a continuous CDF.
double ks_distance(std::vector<double> sample, const std::function<double(double)>& cdf);

/// Asymptotic KS critical distance at the given significance for n
/// independent observations (Kolmogorov distribution quantile / sqrt(n)).
double ks_critical(double significance, double n);

}  // namespace gaussfit
