#pragma once

// Column-wise arithmetic used by the pairwise classifier.
//
// Every kernel has a scalar reference and (on x86-64) an AVX2 variant. Both
// perform the same IEEE operations in the same order: element-wise kernels
// evaluate each element independently with separate multiply and add (no
// FMA), and reductions accumulate into four interleaved lanes that are folded
// as (l0 + l1) + (l2 + l3) followed by a sequential tail. The variants are
// therefore bitwise interchangeable.

#include <cstddef>
#include <span>
#include <string_view>

namespace minerlink::kernels {

enum class Isa { Scalar, Avx2 };

std::string_view isa_name(Isa isa);

struct KernelTable {
  Isa isa;

  /// out[i] = bias + sum_j weights[j] * columns[j][i], j ascending.
  /// `columns` is column-major: feature j occupies [j*rows, (j+1)*rows).
  void (*affine_rows)(std::span<const double> columns, std::size_t rows,
                      std::span<const double> weights, double bias,
                      std::span<double> out);

  /// out[j] = sum_i coeffs[i] * columns[j][i] in lane order.
  void (*weighted_column_sums)(std::span<const double> columns,
                               std::size_t rows,
                               std::span<const double> coeffs,
                               std::span<double> out);

  /// Lane-ordered sum of `values`.
  double (*sum)(std::span<const double> values);

  /// x[i] = (x[i] - mean) * inv_std.
  void (*standardize)(std::span<double> x, double mean, double inv_std);

  /// y[i] = y[i] + alpha * x[i].
  void (*axpy)(double alpha, std::span<const double> x, std::span<double> y);
};

const KernelTable& scalar_table();

/// Nullptr when the build or the CPU lacks AVX2.
const KernelTable* avx2_table();

/// Best table for this CPU. MINERLINK_SIMD=scalar forces the reference path.
const KernelTable& active();

}  // namespace minerlink::kernels
