#include "kernels_impl.hpp"

namespace minerlink::kernels::scalar {

void affine_rows(std::span<const double> columns, std::size_t rows,
                 std::span<const double> weights, double bias,
                 std::span<double> out) {
  for (std::size_t i = 0; i < rows; ++i) out[i] = bias;
  for (std::size_t j = 0; j < weights.size(); ++j) {
    const double w = weights[j];
    const double* col = columns.data() + j * rows;
    for (std::size_t i = 0; i < rows; ++i) {
      const double prod = w * col[i];
      out[i] = out[i] + prod;
    }
  }
}

namespace {

double lane_dot(const double* a, const double* b, std::size_t n) {
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    for (std::size_t k = 0; k < 4; ++k) {
      const double prod = a[i + k] * b[i + k];
      lane[k] = lane[k] + prod;
    }
  }
  double acc = (lane[0] + lane[1]) + (lane[2] + lane[3]);
  for (; i < n; ++i) {
    const double prod = a[i] * b[i];
    acc = acc + prod;
  }
  return acc;
}

}  // namespace

void weighted_column_sums(std::span<const double> columns, std::size_t rows,
                          std::span<const double> coeffs,
                          std::span<double> out) {
  for (std::size_t j = 0; j < out.size(); ++j) {
    out[j] = lane_dot(coeffs.data(), columns.data() + j * rows, rows);
  }
}

double sum(std::span<const double> values) {
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  const std::size_t n = values.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    for (std::size_t k = 0; k < 4; ++k) lane[k] = lane[k] + values[i + k];
  }
  double acc = (lane[0] + lane[1]) + (lane[2] + lane[3]);
  for (; i < n; ++i) acc = acc + values[i];
  return acc;
}

void standardize(std::span<double> x, double mean, double inv_std) {
  for (double& v : x) v = (v - mean) * inv_std;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double prod = alpha * x[i];
    y[i] = y[i] + prod;
  }
}

}  // namespace minerlink::kernels::scalar
