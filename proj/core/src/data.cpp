#include "meandim/data.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "meandim/csv.hpp"
#include "meandim/rng.hpp"

namespace meandim {
namespace {

void check_finite(const Matrix& m, std::string_view what) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (!std::isfinite(m(r, c))) {
        std::ostringstream os;
        os << what << " contains a non-finite value at row " << r << ", column " << c;
        throw InvalidArgument(os.str());
      }
    }
  }
}

void check_names(const std::vector<std::string>& names, std::size_t expected,
                 std::string_view what) {
  if (names.size() != expected) {
    std::ostringstream os;
    os << what << ": expected " << expected << " names, got " << names.size();
    throw InvalidArgument(os.str());
  }
  std::unordered_set<std::string> seen;
  for (const auto& n : names) {
    if (!seen.insert(n).second) throw InvalidArgument(std::string(what) + ": duplicate name '" + n + "'");
  }
}

}  // namespace

Dataset::Dataset(Matrix features, std::vector<std::string> feature_names,
                 std::optional<Matrix> targets, std::vector<std::string> target_names)
    : features_(std::move(features)),
      feature_names_(std::move(feature_names)),
      targets_(std::move(targets)),
      target_names_(std::move(target_names)) {
  if (features_.rows() < 2) throw InvalidArgument("dataset needs at least 2 rows");
  if (features_.cols() < 1) throw InvalidArgument("dataset needs at least 1 feature");
  check_names(feature_names_, n_features(), "feature names");
  check_finite(features_, "features");
  if (targets_) {
    if (targets_->rows() != features_.rows())
      throw InvalidArgument("targets row count differs from features");
    if (target_names_.empty()) {
      for (Eigen::Index j = 0; j < targets_->cols(); ++j) target_names_.push_back("y" + std::to_string(j));
    }
    check_names(target_names_, static_cast<std::size_t>(targets_->cols()), "target names");
    check_finite(*targets_, "targets");
    for (const auto& t : target_names_) {
      if (std::find(feature_names_.begin(), feature_names_.end(), t) != feature_names_.end())
        throw InvalidArgument("name '" + t + "' is both a feature and a target");
    }
  } else if (!target_names_.empty()) {
    throw InvalidArgument("target names given without targets");
  }
}

Dataset Dataset::from_matrix(Matrix features) {
  std::vector<std::string> names;
  for (Eigen::Index j = 0; j < features.cols(); ++j) names.push_back("x" + std::to_string(j));
  return Dataset(std::move(features), std::move(names));
}

const Matrix& Dataset::targets() const {
  if (!targets_) throw InvalidArgument("dataset has no targets");
  return *targets_;
}

Dataset Dataset::slice(std::size_t begin, std::size_t end) const {
  if (begin > end || end > n_rows()) throw InvalidArgument("Dataset::slice: bad range");
  const auto n = static_cast<Eigen::Index>(end - begin);
  const auto b = static_cast<Eigen::Index>(begin);
  std::optional<Matrix> t;
  if (targets_) t = targets_->middleRows(b, n);
  return Dataset(features_.middleRows(b, n), feature_names_, std::move(t), target_names_);
}

Dataset Dataset::select_rows(std::span<const std::size_t> rows) const {
  Matrix f(static_cast<Eigen::Index>(rows.size()), features_.cols());
  std::optional<Matrix> t;
  if (targets_) t = Matrix(static_cast<Eigen::Index>(rows.size()), targets_->cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= n_rows()) throw InvalidArgument("Dataset::select_rows: index out of range");
    const auto dst = static_cast<Eigen::Index>(i);
    const auto src = static_cast<Eigen::Index>(rows[i]);
    f.row(dst) = features_.row(src);
    if (t) t->row(dst) = targets_->row(src);
  }
  return Dataset(std::move(f), feature_names_, std::move(t), target_names_);
}

Dataset load_dataset(const std::filesystem::path& path,
                     const std::vector<std::string>& target_columns) {
  if (!std::filesystem::exists(path)) throw InvalidArgument("missing file: " + path.string());
  const csv::Table table = csv::read(path);

  {
    std::unordered_set<std::string> seen;
    for (const auto& h : table.header) {
      if (h.empty()) throw InvalidArgument(path.string() + ": empty header name");
      if (!seen.insert(h).second) throw InvalidArgument(path.string() + ": duplicate header name '" + h + "'");
    }
  }

  std::vector<std::size_t> target_idx;
  for (const auto& name : target_columns) {
    const auto it = std::find(table.header.begin(), table.header.end(), name);
    if (it == table.header.end())
      throw InvalidArgument(path.string() + ": target column '" + name + "' not found");
    target_idx.push_back(static_cast<std::size_t>(it - table.header.begin()));
  }
  std::vector<std::size_t> feature_idx;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (std::find(target_idx.begin(), target_idx.end(), c) == target_idx.end()) feature_idx.push_back(c);
  }
  if (feature_idx.empty()) throw InvalidArgument(path.string() + ": no feature columns");

  const auto n = static_cast<Eigen::Index>(table.rows.size());
  Matrix features(n, static_cast<Eigen::Index>(feature_idx.size()));
  Matrix targets(n, static_cast<Eigen::Index>(target_idx.size()));
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& row = table.rows[static_cast<std::size_t>(r)];
    // Row numbers in messages are 1-based data rows.
    const auto row_no = static_cast<std::size_t>(r) + 1;
    for (std::size_t j = 0; j < feature_idx.size(); ++j) {
      const std::size_t c = feature_idx[j];
      features(r, static_cast<Eigen::Index>(j)) = csv::parse_real(row[c], row_no, table.header[c]);
    }
    for (std::size_t j = 0; j < target_idx.size(); ++j) {
      const std::size_t c = target_idx[j];
      targets(r, static_cast<Eigen::Index>(j)) = csv::parse_real(row[c], row_no, table.header[c]);
    }
  }

  std::vector<std::string> feature_names;
  for (auto c : feature_idx) feature_names.push_back(table.header[c]);
  if (target_idx.empty()) return Dataset(std::move(features), std::move(feature_names));
  return Dataset(std::move(features), std::move(feature_names), std::move(targets), target_columns);
}

void save_dataset(const Dataset& data, const std::filesystem::path& path) {
  std::vector<std::string> header = data.feature_names();
  if (data.has_targets()) header.insert(header.end(), data.target_names().begin(), data.target_names().end());
  std::string out = csv::join_row(header);
  const auto& f = data.features();
  std::vector<std::string> cells;
  for (Eigen::Index r = 0; r < f.rows(); ++r) {
    cells.clear();
    for (Eigen::Index c = 0; c < f.cols(); ++c) cells.push_back(csv::format_real(f(r, c)));
    if (data.has_targets()) {
      const auto& t = data.targets();
      for (Eigen::Index c = 0; c < t.cols(); ++c) cells.push_back(csv::format_real(t(r, c)));
    }
    out += csv::join_row(cells);
  }
  csv::write_atomic(path, out);
}

PairIndexList sample_pairs(std::size_t n_rows, std::size_t r, std::uint64_t seed) {
  if (n_rows < 2) throw InvalidArgument("sample_pairs: need at least 2 rows");
  if (r < 1) throw InvalidArgument("sample_pairs: r must be positive");

  Rng rng(seed);
  PairIndexList list;
  list.seed = seed;
  list.n_rows = n_rows;
  list.pairs.resize(r);

  if (r <= n_rows) {
    // Partial Fisher-Yates: the first r slots of a random permutation.
    std::vector<std::size_t> perm(n_rows);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = 0; i < r; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(n_rows - i));
      std::swap(perm[i], perm[j]);
      list.pairs[i].base = perm[i];
    }
  } else {
    list.bases_with_replacement = true;
    for (auto& p : list.pairs) p.base = static_cast<std::size_t>(rng.below(n_rows));
  }

  for (auto& p : list.pairs) {
    std::size_t l = 0;
    do {
      l = static_cast<std::size_t>(rng.below(n_rows));
    } while (l == p.base);
    p.donor = l;
  }
  return list;
}

std::vector<double> make_replacement(std::span<const double> base,
                                     std::span<const double> donor, std::size_t i) {
  if (base.size() != donor.size()) throw InvalidArgument("make_replacement: length mismatch");
  if (i >= base.size()) throw InvalidArgument("make_replacement: feature index out of range");
  std::vector<double> out(base.begin(), base.end());
  out[i] = donor[i];
  return out;
}

}  // namespace meandim
