#pragma once

#include "rfed/manifold.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace rfed {

/// Samples in rows, features in columns (p x d).
struct DataMatrix {
  Matrix values;
  std::string source;

  Index samples() const noexcept { return values.rows(); }
  Index features() const noexcept { return values.cols(); }
};

struct Range {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const noexcept { return end - begin; }
};

/// Contiguous near-equal blocks over a (possibly shuffled) row order.
struct Partition {
  std::vector<std::size_t> order;  // row permutation applied before slicing
  std::vector<Range> client_ranges;

  std::size_t clients() const noexcept { return client_ranges.size(); }
};

/// i.i.d. N(0, 1) entries from a stream keyed by `seed`.
DataMatrix gen_gaussian(Index p, Index d, std::uint64_t seed);

/// Splits p rows across n clients; sizes differ by at most one, earlier
/// clients take the remainder. `shuffle` permutes rows first using `seed`.
Partition partition_equal(std::size_t p, std::size_t n, bool shuffle, std::uint64_t seed);

/// Rows of `data` assigned to `client`.
Matrix client_block(const DataMatrix& data, const Partition& part, std::size_t client);

/// A = X^T X over the rows of the block (unnormalized Gram of the features).
Matrix covariance(const Matrix& block);

/// One covariance per client; `normalize` divides each by its sample count.
std::vector<Matrix> client_covariances(const DataMatrix& data, const Partition& part,
                                       bool normalize = false);

/// Subtracts the column means.
DataMatrix center(const DataMatrix& data);
/// Centers, then scales each column to unit (population) standard deviation.
/// Constant columns are left at zero.
DataMatrix standardize(const DataMatrix& data);

/// Comma-separated numeric rows. `label_column` (0-based, or -1 for none) is
/// dropped.
DataMatrix load_csv(const std::filesystem::path& path, bool has_header, int label_column);

/// IDX3 unsigned-byte image file (magic 0x00000803); pixels scaled to [0, 1],
/// one flattened image per row.
DataMatrix load_idx(const std::filesystem::path& path);

}  // namespace rfed
