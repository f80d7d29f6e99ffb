#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <vector>

namespace minerlink {

inline constexpr double kSecondsPerDay = 86400.0;

struct Measurement {
  std::size_t record_count = 0;  // n
  double elapsed_seconds = 0.0;
};

/// time = k * (n^2 - n) [+ intercept].
struct RuntimeModel {
  double k = 0.0;
  double intercept = 0.0;
  double fit_residual = 0.0;  // RMS seconds
  std::size_t n_points = 0;
};

/// Least squares through the origin on x = n^2 - n. With `with_intercept`,
/// an ordinary two-parameter line in x. Points with n < 2 carry no signal and
/// are ignored; throws DataError when none remain.
RuntimeModel fit_runtime(const std::vector<Measurement>& measurements,
                         bool with_intercept = false);

/// k * (n^2 - n) + intercept, in seconds.
double predict_seconds(const RuntimeModel& model, std::size_t n);

/// Runs `link_pairs(n)` once as a warm-up on the largest size, then once per
/// size, timing each call. The callable should process all nC2 pairs of the
/// first n records.
std::vector<Measurement> benchmark(const std::vector<std::size_t>& sizes,
                                   const std::function<void(std::size_t)>& link_pairs);

/// "record_count,elapsed_seconds" with a header line.
void write_measurements(std::ostream& out, const std::vector<Measurement>& m);
std::vector<Measurement> read_measurements(std::istream& in);

}  // namespace minerlink
