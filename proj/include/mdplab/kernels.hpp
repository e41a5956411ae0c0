#pragma once

// Parallel fan-out primitives.
//
// Every Monte Carlo estimator in the library is written as "compute one value
// per path index, then reduce in index order". The per-index step runs either
// serially (the reference) or under OpenMP; because each index writes its own
// slot and the reduction order is fixed, both backends return bitwise
// identical results for any worker count.

#include <cstddef>
#include <exception>
#include <span>
#include <type_traits>
#include <vector>

namespace mdplab::kernels {

enum class Backend { serial, openmp };

struct Exec {
  Backend backend = Backend::openmp;
};

inline constexpr Exec kSerial{Backend::serial};

/// Set the OpenMP worker count for subsequent parallel regions (<= 0 leaves it unchanged).
void set_worker_count(int workers);
int worker_count();

/// Apply the MDPLAB_NUM_THREADS environment variable, if present.
void apply_worker_env();

namespace detail {
bool in_parallel();
}

template <class F>
auto map_indices(std::size_t count, F&& f, Exec exec = {})
    -> std::vector<std::invoke_result_t<F&, std::size_t>> {
  using R = std::invoke_result_t<F&, std::size_t>;
  std::vector<R> out(count);
  if (exec.backend == Backend::serial || count < 2 || detail::in_parallel()) {
    for (std::size_t i = 0; i < count; ++i) out[i] = f(i);
    return out;
  }
  // Exceptions cannot cross the parallel region; the one from the lowest
  // index is rethrown so the failure is the same as in the serial run.
  std::exception_ptr error;
  std::size_t error_index = count;
  const auto n = static_cast<long long>(count);
#pragma omp parallel for schedule(dynamic, 16)
  for (long long i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      out[k] = f(k);
    } catch (...) {
#pragma omp critical(mdplab_map_error)
      if (k < error_index) {
        error_index = k;
        error = std::current_exception();
      }
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

/// Neumaier-compensated sum, in index order.
double compensated_sum(std::span<const double> xs);

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
  double sd = 0.0;
  std::size_t count = 0;
};

/// Sample mean and its standard error (unbiased variance).
MeanSe mean_se(std::span<const double> xs);

/// Batch-means standard error for a correlated series.
MeanSe batch_means(std::span<const double> xs, std::size_t batches = 50);

}  // namespace mdplab::kernels
