#pragma once

#include <cstdint>
#include <vector>

#include "meandim/data.hpp"
#include "meandim/model.hpp"
#include "meandim/rng.hpp"

namespace meandim {

enum class Optimizer { Adam, SGD };
enum class Loss { MSE, CrossEntropy };

struct TrainConfig {
  std::size_t epochs = 100;
  double learning_rate = 0.01;
  std::size_t batch_size = 128;
  Optimizer optimizer = Optimizer::Adam;
  Loss loss = Loss::MSE;
  std::uint64_t seed = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
};

/// Per-parameter gradients with the same shapes as the model layers.
struct Gradients {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
};

/// Mean loss over the batch and its exact gradient by backpropagation.
/// For CrossEntropy, targets is n x 1 holding integer class labels.
double loss_and_gradients(const MLPModel& model, const Matrix& inputs, const Matrix& targets,
                          Loss loss, Gradients& grads);

/// Mean loss without gradients, evaluated in fixed row blocks.
double evaluate_loss(const MLPModel& model, const Matrix& inputs, const Matrix& targets,
                     Loss loss);

/// Fraction of rows whose argmax differs from the integer label.
double error_rate(const MLPModel& model, const Matrix& inputs, const Matrix& targets);

/// Mini-batch trainer that keeps optimizer state between epochs, so training
/// can be paused at checkpoints and resumed without changing the trajectory.
class Trainer {
 public:
  Trainer(MLPModel model, const Dataset& data, TrainConfig cfg);

  /// One pass over the data; returns the mean training loss of its batches.
  double run_epoch();

  const MLPModel& model() const { return model_; }
  std::size_t epochs_done() const { return epoch_; }

 private:
  void step();

  MLPModel model_;
  const Dataset& data_;
  TrainConfig cfg_;
  Rng shuffle_rng_;
  std::vector<std::size_t> order_;
  std::size_t epoch_ = 0;
  std::size_t steps_ = 0;
  Gradients grads_;
  Gradients m_;
  Gradients v_;
};

struct TrainResult {
  MLPModel model;
  std::vector<double> loss_history;
};

TrainResult train(MLPModel model, const Dataset& data, const TrainConfig& cfg);

struct TrainTestSplit {
  Dataset train;
  Dataset test;
};

/// Shuffles rows by seed and puts the first ceil((1 - test_fraction) N) in train.
TrainTestSplit split_dataset(const Dataset& data, double test_fraction, std::uint64_t seed);

}  // namespace meandim
