#include "gaussfit/sampler.hpp"

#include <bit>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <fstream>
#include <sstream>
#include <thread>

namespace gaussfit {

int default_workers() {
  if (const char* env = std::getenv("GAUSSFIT_WORKERS")) {
    const int value = std::atoi(env);
    if (value > 0) return value;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

SamplerConfig resolve(const SamplerConfig& config, int dimension) {
  SamplerConfig out = config;
  if (out.workers <= 0) out.workers = default_workers();
  if (out.chains <= 0) out.chains = out.workers;
  if (out.burn_in < 0) out.burn_in = 100L * dimension;
  if (out.thinning <= 0) out.thinning = std::max(1, dimension / 2);
  if (out.batches < 1) throw Error(ErrorCode::InvalidConfig, "batches must be at least 1");
  if (out.start && out.start->size() != dimension)
    throw Error(ErrorCode::InvalidConfig, "sampler start point has the wrong dimension");
  return out;
}

std::string Target::tag() const {
  if (kind == Kind::Uniform) return "uniform";
  std::ostringstream os;
  os.precision(17);
  os << "gibbs(w=" << w << ")";
  return os.str();
}

namespace {

std::vector<Eigen::Index> split_counts(Eigen::Index m, int chains) {
  std::vector<Eigen::Index> offsets(chains + 1, 0);
  for (int c = 0; c < chains; ++c) offsets[c + 1] = offsets[c] + m / chains + (c < m % chains ? 1 : 0);
  return offsets;
}

// Runs every chain and hands each kept point to sink(chain, global_index, x).
// Chains are distributed round-robin over the worker threads; each chain owns
// its RNG stream, so the output does not depend on the worker count.
template <typename Sink>
void run_chains(const Body& body, double w, const SamplerConfig& cfg, const std::vector<Eigen::Index>& offsets,
                Sink&& sink) {
  const int n = body.dimension();
  const Eigen::VectorXd start = cfg.start ? *cfg.start : body.interior_point();
  if (!contains(body, start)) throw Error(ErrorCode::NotInterior, "sampler start point is outside the body");
  const double stddev = w > 0 ? 1.0 / std::sqrt(w) : std::numeric_limits<double>::infinity();

  auto run_chain = [&](int chain) {
    StreamRng rng(cfg.seed, static_cast<std::uint64_t>(chain));
    std::normal_distribution<double> normal;
    Eigen::VectorXd p = start;
    Eigen::VectorXd u(n);
    auto step = [&] {
      if (detail::uniform01(rng) < kCoordinateMoveProbability) {
        const int axis = std::min(n - 1, static_cast<int>(detail::uniform01(rng) * n));
        u.setZero();
        u(axis) = 1;
      } else {
        double norm = 0;
        do {
          for (int i = 0; i < n; ++i) u(i) = normal(rng);
          norm = u.norm();
        } while (norm == 0);
        u /= norm;
      }
      const Chord<double> chord = chord_interval_unchecked(body, p, u);
      if (!(chord.hi > chord.lo)) return;
      const double t = w == 0 ? chord.lo + chord.length() * detail::uniform01(rng)
                              : sample_truncated_gaussian_1d(chord.lo, chord.hi, -p.dot(u), stddev, rng);
      p += t * u;
    };
    for (long s = 0; s < cfg.burn_in; ++s) step();
    for (Eigen::Index k = offsets[chain]; k < offsets[chain + 1]; ++k) {
      for (long s = 0; s < cfg.thinning; ++s) step();
      sink(chain, k, p);
    }
  };

  const int chains = cfg.chains;
  const int workers = std::min(cfg.workers, chains);
  if (workers <= 1) {
    for (int c = 0; c < chains; ++c) run_chain(c);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (int t = 0; t < workers; ++t) {
    threads.emplace_back([&, t] {
      try {
        for (int c = t; c < chains; c += workers) run_chain(c);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : threads) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

SampleBatch sample_batch(const Body& body, double w, const SamplerConfig& config, Eigen::Index m) {
  if (m < 1) throw Error(ErrorCode::EmptyBatch, "sample count must be at least 1");
  if (w < 0 || std::isnan(w)) throw Error(ErrorCode::NegativeWeight, "inverse temperature must be nonnegative");
  SampleBatch batch;
  batch.config = resolve(config, body.dimension());
  batch.target = w == 0 ? Target{} : Target{Target::Kind::Gibbs, w};
  batch.chain_offsets = split_counts(m, batch.config.chains);
  batch.points.resize(body.dimension(), m);
  run_chains(body, w, batch.config, batch.chain_offsets,
             [&](int, Eigen::Index k, const Eigen::VectorXd& x) { batch.points.col(k) = x; });
  return batch;
}

}  // namespace

SampleBatch sample_uniform(const Body& body, const SamplerConfig& config, Eigen::Index m) {
  return sample_batch(body, 0.0, config, m);
}

SampleBatch sample_gibbs(const Body& body, double w, const SamplerConfig& config, Eigen::Index m) {
  SampleBatch batch = sample_batch(body, w, config, m);
  batch.target = Target{Target::Kind::Gibbs, w};
  return batch;
}

Series sample_gibbs_series(const Body& body, double w, const SamplerConfig& config, Eigen::Index m,
                           const std::function<double(const Eigen::VectorXd&)>& f) {
  if (m < 1) throw Error(ErrorCode::EmptyBatch, "sample count must be at least 1");
  if (w < 0 || std::isnan(w)) throw Error(ErrorCode::NegativeWeight, "inverse temperature must be nonnegative");
  const SamplerConfig cfg = resolve(config, body.dimension());
  Series series;
  series.chain_offsets = split_counts(m, cfg.chains);
  series.values.resize(m);
  run_chains(body, w, cfg, series.chain_offsets,
             [&](int, Eigen::Index k, const Eigen::VectorXd& x) { series.values(k) = f(x); });
  return series;
}

void write_sample_dump(const SampleBatch& batch, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::InvalidConfig, "cannot open sample dump " + path.string());
  for (Eigen::Index j = 0; j < batch.size(); ++j) {
    for (int i = 0; i < batch.dimension(); ++i) {
      double value = batch.points(i, j);
      std::uint64_t bits;
      std::memcpy(&bits, &value, sizeof bits);
      if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
      out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
    }
  }
  std::ofstream header(path.string() + ".hdr");
  header << "format float64-le-rows\n"
         << "dimension " << batch.dimension() << "\n"
         << "count " << batch.size() << "\n"
         << "seed " << batch.config.seed << "\n"
         << "chains " << batch.config.chains << "\n"
         << "target " << batch.target.tag() << "\n";
}

Eigen::MatrixXd read_sample_dump(const std::filesystem::path& path) {
  std::ifstream header(path.string() + ".hdr");
  if (!header) throw Error(ErrorCode::InvalidConfig, "missing sample dump header for " + path.string());
  long dimension = -1, count = -1;
  std::string key;
  while (header >> key) {
    if (key == "dimension")
      header >> dimension;
    else if (key == "count")
      header >> count;
    else
      std::getline(header, key);
  }
  if (dimension < 1 || count < 0) throw Error(ErrorCode::InvalidConfig, "malformed sample dump header");
  Eigen::MatrixXd points(dimension, count);
  std::ifstream in(path, std::ios::binary);
  for (long j = 0; j < count; ++j) {
    for (long i = 0; i < dimension; ++i) {
      std::uint64_t bits;
      if (!in.read(reinterpret_cast<char*>(&bits), sizeof bits))
        throw Error(ErrorCode::InvalidConfig, "sample dump is truncated");
      if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
      std::memcpy(&points(i, j), &bits, sizeof bits);
    }
  }
  return points;
}

}  // namespace gaussfit
