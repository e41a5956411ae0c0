#include "mdplab/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

namespace mdplab::kernels {

void set_worker_count(int workers) {
  if (workers > 0) omp_set_num_threads(workers);
}

int worker_count() { return omp_get_max_threads(); }

void apply_worker_env() {
  if (const char* v = std::getenv("MDPLAB_NUM_THREADS")) {
    try {
      set_worker_count(std::stoi(v));
    } catch (...) {
      // ignored: a malformed value keeps the OpenMP default
    }
  }
}

bool detail::in_parallel() { return omp_in_parallel() != 0; }

double compensated_sum(std::span<const double> xs) {
  double sum = 0.0;
  double c = 0.0;
  for (double x : xs) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      c += (sum - t) + x;
    } else {
      c += (x - t) + sum;
    }
    sum = t;
  }
  return sum + c;
}

MeanSe mean_se(std::span<const double> xs) {
  MeanSe r;
  r.count = xs.size();
  if (xs.empty()) return r;
  const double n = static_cast<double>(xs.size());
  r.mean = compensated_sum(xs) / n;
  if (xs.size() < 2) return r;
  std::vector<double> sq(xs.size());
  std::transform(xs.begin(), xs.end(), sq.begin(), [&](double x) {
    const double d = x - r.mean;
    return d * d;
  });
  r.sd = std::sqrt(compensated_sum(sq) / (n - 1.0));
  r.se = r.sd / std::sqrt(n);
  return r;
}

MeanSe batch_means(std::span<const double> xs, std::size_t batches) {
  MeanSe r;
  r.count = xs.size();
  if (xs.empty()) return r;
  r.mean = compensated_sum(xs) / static_cast<double>(xs.size());
  batches = std::min(batches, xs.size());
  if (batches < 2) return r;
  const std::size_t len = xs.size() / batches;
  std::vector<double> means(batches);
  for (std::size_t b = 0; b < batches; ++b) {
    means[b] = compensated_sum(xs.subspan(b * len, len)) / static_cast<double>(len);
  }
  const MeanSe bm = mean_se(means);
  r.sd = bm.sd * std::sqrt(static_cast<double>(len));
  r.se = bm.se;
  return r;
}

}  // namespace mdplab::kernels
