#include "meandim/pca.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "meandim/csv.hpp"

namespace meandim {
namespace {

constexpr int kPcaFormatVersion = 1;
constexpr double kWhitenFloor = 1e-12;
constexpr int kMaxJacobiSweeps = 100;

double whiten_scale(const PCAModel& pca, Eigen::Index j) {
  const double lambda = pca.eigenvalues[j];
  return lambda >= kWhitenFloor ? std::sqrt(lambda) : 0.0;
}

void check_dim(const PCAModel& pca, std::size_t n, const char* what) {
  if (n != pca.dim()) throw InvalidArgument(std::string(what) + ": dimension mismatch");
}

}  // namespace

void symmetric_eigen(const Matrix& input, Vector& eigenvalues, Matrix& eigenvectors) {
  const Eigen::Index n = input.rows();
  if (n != input.cols()) throw InvalidArgument("symmetric_eigen: matrix is not square");
  if (!input.allFinite()) throw NumericalError("symmetric_eigen: non-finite matrix");

  Matrix a = input;
  Matrix v = Matrix::Identity(n, n);
  const double scale = std::max(a.squaredNorm(), 1e-300);

  for (int sweep = 0; sweep < kMaxJacobiSweeps; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off <= 1e-32 * scale) break;

    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index x, Eigen::Index y) { return a(x, x) > a(y, y); });

  eigenvalues.resize(n);
  eigenvectors.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::Index src = order[static_cast<std::size_t>(j)];
    eigenvalues[j] = a(src, src);
    Vector col = v.col(src);
    Eigen::Index arg = 0;
    col.cwiseAbs().maxCoeff(&arg);
    if (col[arg] < 0.0) col = -col;
    eigenvectors.col(j) = col;
  }
}

Matrix sample_covariance(const Matrix& features, Vector* mean_out) {
  const Eigen::Index n = features.rows();
  if (n < 2) throw InvalidArgument("sample_covariance: need at least 2 rows");
  const Vector mean = features.colwise().mean().transpose();
  const Matrix centered = features.rowwise() - mean.transpose();
  Matrix cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
  cov = 0.5 * (cov + cov.transpose());
  if (!cov.allFinite()) throw NumericalError("sample covariance is non-finite");
  if (mean_out) *mean_out = mean;
  return cov;
}

PCAModel fit_pca(const Dataset& data, bool whiten) {
  PCAModel pca;
  const Matrix cov = sample_covariance(data.features(), &pca.mean);
  symmetric_eigen(cov, pca.eigenvalues, pca.rotation);
  const double lambda_max = std::max(pca.eigenvalues.maxCoeff(), 0.0);
  for (Eigen::Index j = 0; j < pca.eigenvalues.size(); ++j) {
    if (pca.eigenvalues[j] < kPcaRelativeEigenFloor * lambda_max) pca.eigenvalues[j] = 0.0;
  }
  pca.whiten = whiten;
  return pca;
}

Matrix transform_rows(const PCAModel& pca, const Matrix& x) {
  check_dim(pca, static_cast<std::size_t>(x.cols()), "transform");
  Matrix z = (x.rowwise() - pca.mean.transpose()) * pca.rotation;
  if (pca.whiten) {
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
      const double s = whiten_scale(pca, j);
      if (s == 0.0) z.col(j).setZero();
      else z.col(j) /= s;
    }
  }
  return z;
}

Matrix inverse_transform_rows(const PCAModel& pca, const Matrix& z) {
  check_dim(pca, static_cast<std::size_t>(z.cols()), "inverse_transform");
  Matrix u = z;
  if (pca.whiten) {
    for (Eigen::Index j = 0; j < u.cols(); ++j) u.col(j) *= whiten_scale(pca, j);
  }
  Matrix x = u * pca.rotation.transpose();
  x.rowwise() += pca.mean.transpose();
  return x;
}

std::vector<double> transform(const PCAModel& pca, std::span<const double> x) {
  check_dim(pca, x.size(), "transform");
  const Matrix in = Eigen::Map<const Matrix>(x.data(), 1, static_cast<Eigen::Index>(x.size()));
  const Matrix out = transform_rows(pca, in);
  return {out.data(), out.data() + out.size()};
}

std::vector<double> inverse_transform(const PCAModel& pca, std::span<const double> z) {
  check_dim(pca, z.size(), "inverse_transform");
  const Matrix in = Eigen::Map<const Matrix>(z.data(), 1, static_cast<Eigen::Index>(z.size()));
  const Matrix out = inverse_transform_rows(pca, in);
  return {out.data(), out.data() + out.size()};
}

Dataset transform_dataset(const PCAModel& pca, const Dataset& data) {
  std::vector<std::string> names;
  for (std::size_t j = 0; j < pca.dim(); ++j) names.push_back("pc" + std::to_string(j));
  std::optional<Matrix> targets;
  if (data.has_targets()) targets = data.targets();
  return Dataset(transform_rows(pca, data.features()), std::move(names), std::move(targets),
                 data.has_targets() ? data.target_names() : std::vector<std::string>{});
}

InversePcaPredictor::InversePcaPredictor(PredictorPtr model, PCAModel pca)
    : model_(std::move(model)), pca_(std::move(pca)) {
  if (!model_) throw InvalidArgument("wrap_with_inverse_pca: null model");
  if (model_->input_dim() != pca_.dim())
    throw InvalidArgument("wrap_with_inverse_pca: model input_dim " + std::to_string(model_->input_dim()) +
                          " does not match PCA dimension " + std::to_string(pca_.dim()));
}

Matrix InversePcaPredictor::evaluate_batch(const Matrix& inputs) const {
  return model_->evaluate_batch(inverse_transform_rows(pca_, inputs));
}

PredictorPtr wrap_with_inverse_pca(PredictorPtr model, const PCAModel& pca) {
  return std::make_shared<InversePcaPredictor>(std::move(model), pca);
}

std::string pca_to_json(const PCAModel& pca) {
  nlohmann::json j;
  j["format_version"] = kPcaFormatVersion;
  j["mean"] = std::vector<double>(pca.mean.data(), pca.mean.data() + pca.mean.size());
  j["eigenvalues"] = std::vector<double>(pca.eigenvalues.data(), pca.eigenvalues.data() + pca.eigenvalues.size());
  j["rotation"] = std::vector<double>(pca.rotation.data(), pca.rotation.data() + pca.rotation.size());
  j["whiten"] = pca.whiten;
  return j.dump() + "\n";
}

PCAModel pca_from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format_version").get<int>() != kPcaFormatVersion)
      throw InvalidArgument("unsupported PCA format_version");
    const auto mean = j.at("mean").get<std::vector<double>>();
    const auto ev = j.at("eigenvalues").get<std::vector<double>>();
    const auto rot = j.at("rotation").get<std::vector<double>>();
    const std::size_t d = mean.size();
    if (d == 0 || ev.size() != d || rot.size() != d * d)
      throw InvalidArgument("PCA file: inconsistent array sizes");
    PCAModel pca;
    const auto n = static_cast<Eigen::Index>(d);
    pca.mean = Eigen::Map<const Vector>(mean.data(), n);
    pca.eigenvalues = Eigen::Map<const Vector>(ev.data(), n);
    pca.rotation = Eigen::Map<const Matrix>(rot.data(), n, n);
    pca.whiten = j.at("whiten").get<bool>();
    return pca;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed PCA file: ") + e.what());
  }
}

void save_pca(const PCAModel& pca, const std::filesystem::path& path) {
  csv::write_atomic(path, pca_to_json(pca));
}

PCAModel load_pca(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open PCA file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return pca_from_json(buffer.str());
}

}  // namespace meandim
