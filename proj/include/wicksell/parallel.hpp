#pragma once

#include <cstddef>
#include <exception>
#include <span>
#include <vector>

namespace wicksell {

/// Kernels come in two flavours that must agree bit for bit: a plain loop
/// kept as the reference, and an OpenMP loop. Every index owns its random
/// stream and its output slot, so the schedule cannot change any result.
enum class Execution
{
  serial,
  parallel
};

/// Number of OpenMP threads used by parallel kernels; n <= 0 keeps the default.
void set_threads(int n);
int max_threads();

/// out[i] = f(i) for i < count. Exceptions thrown inside the parallel loop
/// are captured and the first one is rethrown after the loop.
template <class T, class F>
std::vector<T> map_indexed(std::size_t count, F&& f, Execution ex)
{
  std::vector<T> out(count);
  if (ex == Execution::serial) {
    for (std::size_t i = 0; i < count; ++i)
      out[i] = f(i);
    return out;
  }
  std::exception_ptr error;
  const auto n = static_cast<std::ptrdiff_t>(count);
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = f(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(wicksell_map_error)
      if (!error)
        error = std::current_exception();
    }
  }
  if (error)
    std::rethrow_exception(error);
  return out;
}

/// Pairwise summation in a fixed order, independent of thread count.
double pairwise_sum(std::span<const double> x);

} // namespace wicksell
