#include "kernels_impl.hpp"

#if defined(MINERLINK_HAVE_AVX2)

#include <immintrin.h>

namespace minerlink::kernels::avx2 {

namespace {

inline double fold_lanes(__m256d acc) {
  alignas(32) double lane[4];
  _mm256_store_pd(lane, acc);
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

double lane_dot(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d prod =
        _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_add_pd(acc, prod);
  }
  double total = fold_lanes(acc);
  for (; i < n; ++i) {
    const double prod = a[i] * b[i];
    total = total + prod;
  }
  return total;
}

}  // namespace

void affine_rows(std::span<const double> columns, std::size_t rows,
                 std::span<const double> weights, double bias,
                 std::span<double> out) {
  double* dst = out.data();
  const __m256d vbias = _mm256_set1_pd(bias);
  std::size_t i = 0;
  for (; i + 4 <= rows; i += 4) _mm256_storeu_pd(dst + i, vbias);
  for (; i < rows; ++i) dst[i] = bias;

  for (std::size_t j = 0; j < weights.size(); ++j) {
    const double w = weights[j];
    const __m256d vw = _mm256_set1_pd(w);
    const double* col = columns.data() + j * rows;
    i = 0;
    for (; i + 4 <= rows; i += 4) {
      const __m256d prod = _mm256_mul_pd(vw, _mm256_loadu_pd(col + i));
      _mm256_storeu_pd(dst + i, _mm256_add_pd(_mm256_loadu_pd(dst + i), prod));
    }
    for (; i < rows; ++i) {
      const double prod = w * col[i];
      dst[i] = dst[i] + prod;
    }
  }
}

void weighted_column_sums(std::span<const double> columns, std::size_t rows,
                          std::span<const double> coeffs,
                          std::span<double> out) {
  for (std::size_t j = 0; j < out.size(); ++j) {
    out[j] = lane_dot(coeffs.data(), columns.data() + j * rows, rows);
  }
}

double sum(std::span<const double> values) {
  const double* v = values.data();
  const std::size_t n = values.size();
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(v + i));
  double total = fold_lanes(acc);
  for (; i < n; ++i) total = total + v[i];
  return total;
}

void standardize(std::span<double> x, double mean, double inv_std) {
  double* v = x.data();
  const std::size_t n = x.size();
  const __m256d vmean = _mm256_set1_pd(mean);
  const __m256d vscale = _mm256_set1_pd(inv_std);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(v + i), vmean);
    _mm256_storeu_pd(v + i, _mm256_mul_pd(d, vscale));
  }
  for (; i < n; ++i) v[i] = (v[i] - mean) * inv_std;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  const double* src = x.data();
  double* dst = y.data();
  const std::size_t n = y.size();
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(src + i));
    _mm256_storeu_pd(dst + i, _mm256_add_pd(_mm256_loadu_pd(dst + i), prod));
  }
  for (; i < n; ++i) {
    const double prod = alpha * src[i];
    dst[i] = dst[i] + prod;
  }
}

}  // namespace minerlink::kernels::avx2

#endif  // MINERLINK_HAVE_AVX2
