#pragma once

#include <cstddef>
#include <span>

#include "minerlink/kernels.hpp"

namespace minerlink::kernels {

namespace scalar {
void affine_rows(std::span<const double> columns, std::size_t rows,
                 std::span<const double> weights, double bias,
                 std::span<double> out);
void weighted_column_sums(std::span<const double> columns, std::size_t rows,
                          std::span<const double> coeffs,
                          std::span<double> out);
double sum(std::span<const double> values);
void standardize(std::span<double> x, double mean, double inv_std);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
}  // namespace scalar

#if defined(MINERLINK_HAVE_AVX2)
namespace avx2 {
void affine_rows(std::span<const double> columns, std::size_t rows,
                 std::span<const double> weights, double bias,
                 std::span<double> out);
void weighted_column_sums(std::span<const double> columns, std::size_t rows,
                          std::span<const double> coeffs,
                          std::span<double> out);
double sum(std::span<const double> values);
void standardize(std::span<double> x, double mean, double inv_std);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
}  // namespace avx2
#endif

}  // namespace minerlink::kernels
