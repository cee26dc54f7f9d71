#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "meandim/common.hpp"

namespace meandim {

/// An N x d feature matrix with optional targets. Immutable once built; the
/// empirical distribution every estimator samples from.
class Dataset {
 public:
  /// Validates: N >= 2, d >= 1, names distinct and d of them, all finite.
  Dataset(Matrix features, std::vector<std::string> feature_names,
          std::optional<Matrix> targets = std::nullopt,
          std::vector<std::string> target_names = {});

  /// Convenience: names x0..x{d-1}.
  static Dataset from_matrix(Matrix features);

  std::size_t n_rows() const { return static_cast<std::size_t>(features_.rows()); }
  std::size_t n_features() const { return static_cast<std::size_t>(features_.cols()); }

  const Matrix& features() const { return features_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }

  bool has_targets() const { return targets_.has_value(); }
  const Matrix& targets() const;
  const std::vector<std::string>& target_names() const { return target_names_; }

  std::span<const double> row(std::size_t k) const {
    return {features_.data() + k * n_features(), n_features()};
  }

  /// Rows [begin, end) as a new dataset (features and targets).
  Dataset slice(std::size_t begin, std::size_t end) const;

  /// Rows selected by index, in the given order.
  Dataset select_rows(std::span<const std::size_t> rows) const;

 private:
  Matrix features_;
  std::vector<std::string> feature_names_;
  std::optional<Matrix> targets_;
  std::vector<std::string> target_names_;
};

/// Reads a comma-separated file with a mandatory header row. Columns named in
/// `target_columns` become targets; the rest stay features in file order.
Dataset load_dataset(const std::filesystem::path& path,
                     const std::vector<std::string>& target_columns = {});

/// Writes features followed by targets, header first, shortest round-trip
/// formatting for every value.
void save_dataset(const Dataset& data, const std::filesystem::path& path);

struct IndexPair {
  std::size_t base;   // k
  std::size_t donor;  // l, never equal to base
  bool operator==(const IndexPair&) const = default;
};

struct PairIndexList {
  std::vector<IndexPair> pairs;
  std::uint64_t seed = 0;
  std::size_t n_rows = 0;
  /// True when r > N forced base rows to be drawn with replacement.
  bool bases_with_replacement = false;

  std::size_t size() const { return pairs.size(); }
};

/// Draws r (base, donor) row pairs. Bases are distinct when r <= N and drawn
/// with replacement otherwise; each donor is uniform over the other N-1 rows.
PairIndexList sample_pairs(std::size_t n_rows, std::size_t r, std::uint64_t seed);

inline PairIndexList sample_pairs(const Dataset& data, std::size_t r, std::uint64_t seed) {
  return sample_pairs(data.n_rows(), r, seed);
}

/// Copy of `base` with coordinate i taken from `donor`.
std::vector<double> make_replacement(std::span<const double> base,
                                     std::span<const double> donor, std::size_t i);

}  // namespace meandim
