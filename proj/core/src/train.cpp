#include "meandim/train.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "meandim/parallel.hpp"

namespace meandim {
namespace {

Gradients zeros_like(const MLPModel& model) {
  Gradients g;
  for (const auto& l : model.layers()) {
    g.weights.push_back(Matrix::Zero(l.weights.rows(), l.weights.cols()));
    g.biases.push_back(Vector::Zero(l.biases.size()));
  }
  return g;
}

void check_targets(const MLPModel& model, const Matrix& targets, Loss loss) {
  if (loss == Loss::MSE) {
    if (static_cast<std::size_t>(targets.cols()) != model.output_dim())
      throw InvalidArgument("MSE training: target columns must equal model output_dim");
    return;
  }
  if (targets.cols() != 1) throw InvalidArgument("CrossEntropy training: expected one label column");
  for (Eigen::Index r = 0; r < targets.rows(); ++r) {
    const double v = targets(r, 0);
    if (v < 0 || v != std::floor(v) || v >= static_cast<double>(model.output_dim()))
      throw InvalidArgument("CrossEntropy training: label at row " + std::to_string(r) +
                            " is not an integer class below output_dim");
  }
}

// Sum (not mean) of per-row losses.
double row_loss_sum(const Matrix& out, const Matrix& targets, Loss loss) {
  double total = 0.0;
  if (loss == Loss::MSE) {
    for (Eigen::Index r = 0; r < out.rows(); ++r)
      for (Eigen::Index c = 0; c < out.cols(); ++c) {
        const double e = out(r, c) - targets(r, c);
        total += e * e;
      }
    return total;
  }
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    const auto cls = static_cast<Eigen::Index>(targets(r, 0));
    const double mx = out.row(r).maxCoeff();
    const double z = (out.row(r).array() - mx).exp().sum();
    total += std::log(z) - (out(r, cls) - mx);
  }
  return total;
}

double loss_denominator(const Matrix& out, Loss loss) {
  return loss == Loss::MSE ? static_cast<double>(out.rows() * out.cols())
                           : static_cast<double>(out.rows());
}

}  // namespace

double loss_and_gradients(const MLPModel& model, const Matrix& inputs, const Matrix& targets,
                          Loss loss, Gradients& grads) {
  const auto& layers = model.layers();
  const std::size_t n_layers = layers.size();
  if (grads.weights.size() != n_layers) grads = zeros_like(model);

  // Layer inputs h[j] and pre-activations z[j].
  std::vector<Matrix> h(n_layers);
  std::vector<Matrix> z(n_layers);
  Matrix cur = inputs;
  for (std::size_t j = 0; j < n_layers; ++j) {
    h[j] = cur;
    z[j] = cur * layers[j].weights.transpose();
    z[j].rowwise() += layers[j].biases.transpose();
    if (j + 1 < n_layers) {
      cur = z[j].unaryExpr([a = model.activation()](double v) { return apply_activation(a, v); });
    }
  }
  const Matrix& out = z.back();
  const double denom = loss_denominator(out, loss);
  const double value = row_loss_sum(out, targets, loss) / denom;

  Matrix delta(out.rows(), out.cols());
  if (loss == Loss::MSE) {
    delta = (2.0 / denom) * (out - targets);
  } else {
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
      const double mx = out.row(r).maxCoeff();
      Eigen::RowVectorXd p = (out.row(r).array() - mx).exp().matrix();
      p /= p.sum();
      p(static_cast<Eigen::Index>(targets(r, 0))) -= 1.0;
      delta.row(r) = p / denom;
    }
  }

  for (std::size_t jj = n_layers; jj-- > 0;) {
    grads.weights[jj].noalias() = delta.transpose() * h[jj];
    grads.biases[jj] = delta.colwise().sum().transpose();
    if (jj == 0) break;
    Matrix back = delta * layers[jj].weights;
    const Matrix& zp = z[jj - 1];
    switch (model.activation()) {
      case Activation::ReLU:
        back = back.cwiseProduct(zp.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; }));
        break;
      case Activation::TanH:
        back = back.cwiseProduct(zp.unaryExpr([](double v) {
          const double t = std::tanh(v);
          return 1.0 - t * t;
        }));
        break;
      case Activation::Identity:
        break;
    }
    delta = std::move(back);
  }
  return value;
}

double evaluate_loss(const MLPModel& model, const Matrix& inputs, const Matrix& targets, Loss loss) {
  check_targets(model, targets, loss);
  const auto n = static_cast<std::size_t>(inputs.rows());
  double total = 0.0;
  for (std::size_t b = 0; b < block_count(n); ++b) {
    const auto start = static_cast<Eigen::Index>(b * kRowBlock);
    const auto len = static_cast<Eigen::Index>(std::min(kRowBlock, n - b * kRowBlock));
    const Matrix out = model.evaluate_batch(inputs.middleRows(start, len));
    total += row_loss_sum(out, targets.middleRows(start, len), loss);
  }
  const double denom = loss == Loss::MSE ? static_cast<double>(n * model.output_dim())
                                         : static_cast<double>(n);
  return total / denom;
}

double error_rate(const MLPModel& model, const Matrix& inputs, const Matrix& targets) {
  const Matrix out = model.evaluate_batch(inputs);
  std::size_t wrong = 0;
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    Eigen::Index arg = 0;
    out.row(r).maxCoeff(&arg);
    if (static_cast<double>(arg) != targets(r, 0)) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(out.rows());
}

Trainer::Trainer(MLPModel model, const Dataset& data, TrainConfig cfg)
    : model_(std::move(model)), data_(data), cfg_(cfg), shuffle_rng_(cfg.seed) {
  if (cfg_.learning_rate <= 0.0 || !std::isfinite(cfg_.learning_rate))
    throw InvalidArgument("learning_rate must be positive");
  if (cfg_.batch_size == 0) throw InvalidArgument("batch_size must be positive");
  if (cfg_.batch_size > data_.n_rows())
    throw InvalidArgument("batch_size " + std::to_string(cfg_.batch_size) + " exceeds dataset rows " +
                          std::to_string(data_.n_rows()));
  if (data_.n_features() != model_.input_dim())
    throw InvalidArgument("training data has " + std::to_string(data_.n_features()) +
                          " features, model expects " + std::to_string(model_.input_dim()));
  check_targets(model_, data_.targets(), cfg_.loss);
  grads_ = zeros_like(model_);
  m_ = zeros_like(model_);
  v_ = zeros_like(model_);
  order_.resize(data_.n_rows());
  std::iota(order_.begin(), order_.end(), std::size_t{0});
}

void Trainer::step() {
  auto& layers = model_.mutable_layers();
  ++steps_;
  const double lr = cfg_.learning_rate;
  if (cfg_.optimizer == Optimizer::SGD) {
    for (std::size_t j = 0; j < layers.size(); ++j) {
      layers[j].weights -= lr * grads_.weights[j];
      layers[j].biases -= lr * grads_.biases[j];
    }
    return;
  }
  const double b1 = cfg_.adam_beta1;
  const double b2 = cfg_.adam_beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  const double eps = cfg_.adam_eps;
  auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
    param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  };
  for (std::size_t j = 0; j < layers.size(); ++j) {
    update(layers[j].weights, m_.weights[j], v_.weights[j], grads_.weights[j]);
    update(layers[j].biases, m_.biases[j], v_.biases[j], grads_.biases[j]);
  }
}

double Trainer::run_epoch() {
  const std::size_t n = data_.n_rows();
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(shuffle_rng_.below(i));
    std::swap(order_[i - 1], order_[j]);
  }
  const Matrix& features = data_.features();
  const Matrix& targets = data_.targets();
  double loss_sum = 0.0;
  std::size_t batches = 0;
  for (std::size_t start = 0; start < n; start += cfg_.batch_size) {
    const std::size_t len = std::min(cfg_.batch_size, n - start);
    Matrix xb(static_cast<Eigen::Index>(len), features.cols());
    Matrix yb(static_cast<Eigen::Index>(len), targets.cols());
    for (std::size_t r = 0; r < len; ++r) {
      const auto src = static_cast<Eigen::Index>(order_[start + r]);
      xb.row(static_cast<Eigen::Index>(r)) = features.row(src);
      yb.row(static_cast<Eigen::Index>(r)) = targets.row(src);
    }
    const double loss = loss_and_gradients(model_, xb, yb, cfg_.loss, grads_);
    if (!std::isfinite(loss)) {
      std::ostringstream os;
      os << "training diverged: non-finite loss at epoch " << epoch_ + 1 << ", batch " << batches;
      throw NumericalError(os.str());
    }
    step();
    loss_sum += loss;
    ++batches;
  }
  ++epoch_;
  for (const auto& l : model_.layers()) {
    if (!l.weights.allFinite() || !l.biases.allFinite()) {
      throw NumericalError("training diverged: non-finite parameters after epoch " + std::to_string(epoch_));
    }
  }
  return loss_sum / static_cast<double>(batches);
}

TrainResult train(MLPModel model, const Dataset& data, const TrainConfig& cfg) {
  if (cfg.epochs == 0) return {std::move(model), {}};
  Trainer trainer(std::move(model), data, cfg);
  std::vector<double> history;
  history.reserve(cfg.epochs);
  for (std::size_t e = 0; e < cfg.epochs; ++e) history.push_back(trainer.run_epoch());
  return {trainer.model(), std::move(history)};
}

TrainTestSplit split_dataset(const Dataset& data, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw InvalidArgument("test_fraction must be in (0, 1)");
  const std::size_t n = data.n_rows();
  const auto n_train = static_cast<std::size_t>(std::ceil((1.0 - test_fraction) * static_cast<double>(n) - 1e-9));
  if (n_train < 2 || n - n_train < 2) throw InvalidArgument("split leaves fewer than 2 rows on one side");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(perm[i - 1], perm[j]);
  }
  std::span<const std::size_t> all(perm);
  return {data.select_rows(all.first(n_train)), data.select_rows(all.subspan(n_train))};
}

}  // namespace meandim
