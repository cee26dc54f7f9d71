#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "meandim/common.hpp"
#include "meandim/data.hpp"
#include "meandim/model.hpp"

namespace meandim {

/// Mean and orthogonal rotation fitted to a dataset's sample covariance.
struct PCAModel {
  Vector mean;          // d
  Matrix rotation;      // d x d, column j = eigenvector j
  Vector eigenvalues;   // d, non-increasing, >= 0
  bool whiten = false;

  std::size_t dim() const { return static_cast<std::size_t>(mean.size()); }
};

/// Eigenvalues below this fraction of the largest are clamped to zero.
inline constexpr double kPcaRelativeEigenFloor = 1e-12;

/// Symmetric eigendecomposition by cyclic Jacobi rotations. Eigenvalues are
/// returned in non-increasing order; each eigenvector's largest-magnitude
/// entry is made positive.
void symmetric_eigen(const Matrix& a, Vector& eigenvalues, Matrix& eigenvectors);

/// Sample covariance with divisor N - 1.
Matrix sample_covariance(const Matrix& features, Vector* mean_out = nullptr);

PCAModel fit_pca(const Dataset& data, bool whiten = false);

std::vector<double> transform(const PCAModel& pca, std::span<const double> x);
std::vector<double> inverse_transform(const PCAModel& pca, std::span<const double> z);

/// Row-wise versions; rows are observations.
Matrix transform_rows(const PCAModel& pca, const Matrix& x);
Matrix inverse_transform_rows(const PCAModel& pca, const Matrix& z);

/// Dataset of transformed features (targets and row order kept; features
/// renamed pc0..).
Dataset transform_dataset(const PCAModel& pca, const Dataset& data);

/// z -> model(inverse_transform(z)).
class InversePcaPredictor final : public Predictor {
 public:
  InversePcaPredictor(PredictorPtr model, PCAModel pca);

  std::size_t input_dim() const override { return pca_.dim(); }
  std::size_t output_dim() const override { return model_->output_dim(); }
  Matrix evaluate_batch(const Matrix& inputs) const override;

  const PCAModel& pca() const { return pca_; }

 private:
  PredictorPtr model_;
  PCAModel pca_;
};

PredictorPtr wrap_with_inverse_pca(PredictorPtr model, const PCAModel& pca);

std::string pca_to_json(const PCAModel& pca);
PCAModel pca_from_json(std::string_view text);
void save_pca(const PCAModel& pca, const std::filesystem::path& path);
PCAModel load_pca(const std::filesystem::path& path);

}  // namespace meandim
