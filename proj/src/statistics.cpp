#include "gaussfit/statistics.hpp"

#include "gaussfit/error.hpp"

#include <algorithm>
#include <stdexcept>

namespace gaussfit {

namespace {

struct Batches {
  std::vector<double> means;
  std::vector<double> sizes;
};

Batches split_batches(std::span<const double> values, std::span<const Eigen::Index> chain_offsets,
                      int target_batches) {
  Batches out;
  const std::size_t chains = chain_offsets.size() > 1 ? chain_offsets.size() - 1 : 1;
  const int per_chain = std::max(1, static_cast<int>((target_batches + chains - 1) / chains));
  auto add_chain = [&](Eigen::Index begin, Eigen::Index end) {
    const Eigen::Index len = end - begin;
    if (len <= 0) return;
    const int k = static_cast<int>(std::min<Eigen::Index>(per_chain, len));
    for (int b = 0; b < k; ++b) {
      const Eigen::Index lo = begin + len * b / k, hi = begin + len * (b + 1) / k;
      double sum = 0;
      for (Eigen::Index i = lo; i < hi; ++i) sum += values[i];
      out.means.push_back(sum / static_cast<double>(hi - lo));
      out.sizes.push_back(static_cast<double>(hi - lo));
    }
  };
  if (chain_offsets.size() < 2) {
    add_chain(0, static_cast<Eigen::Index>(values.size()));
  } else {
    for (std::size_t c = 0; c + 1 < chain_offsets.size(); ++c) add_chain(chain_offsets[c], chain_offsets[c + 1]);
  }
  return out;
}

}  // namespace

MeanEstimate batch_mean(std::span<const double> values, std::span<const Eigen::Index> chain_offsets,
                        int target_batches) {
  if (values.empty()) throw Error(ErrorCode::EmptyBatch, "cannot average an empty sample");
  double total = 0;
  for (double v : values) total += v;
  const double n = static_cast<double>(values.size());
  MeanEstimate est{total / n, 0};
  const Batches b = split_batches(values, chain_offsets, target_batches);
  const std::size_t k = b.means.size();
  if (k < 2) return est;
  double acc = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const double frac = b.sizes[i] / n;
    acc += frac * frac * (b.means[i] - est.mean) * (b.means[i] - est.mean);
  }
  est.se = std::sqrt(acc * static_cast<double>(k) / static_cast<double>(k - 1));
  return est;
}

double variance_inflation(std::span<const double> values, std::span<const Eigen::Index> chain_offsets,
                          int target_batches) {
  const MeanEstimate est = batch_mean(values, chain_offsets, target_batches);
  const double n = static_cast<double>(values.size());
  double var = 0;
  for (double v : values) var += (v - est.mean) * (v - est.mean);
  var /= n;
  if (var <= 0) return 1.0;
  return std::max(1.0, est.se * est.se * n / var);
}

double ks_distance(std::vector<double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) throw Error(ErrorCode::EmptyBatch, "KS distance of an empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return d;
}

double ks_critical(double significance, double n) {
  // Kolmogorov limiting distribution: P(sqrt(n) D > x) = 2 sum (-1)^{k-1} exp(-2 k^2 x^2).
  auto tail = [](double x) {
    double s = 0;
    for (int k = 1; k <= 100; ++k) s += (k % 2 ? 2.0 : -2.0) * std::exp(-2.0 * k * k * x * x);
    return s;
  };
  double lo = 0.3, hi = 3.0;
  for (int iter = 0; iter < 100; ++iter) {
    const double mid = 0.5 * (lo + hi);
    (tail(mid) > significance ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi) / std::sqrt(n);
}

}  // namespace gaussfit
