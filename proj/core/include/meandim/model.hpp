#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "meandim/common.hpp"

namespace meandim {

/// A pure mapping from d-vectors to s-vectors. Everything the estimators see.
///
/// Implementations must be safe to call concurrently from several threads.
class Predictor {
 public:
  virtual ~Predictor() = default;

  virtual std::size_t input_dim() const = 0;
  virtual std::size_t output_dim() const = 0;

  /// inputs is n x input_dim(); returns n x output_dim().
  virtual Matrix evaluate_batch(const Matrix& inputs) const = 0;

  /// Single-point evaluation through the batch path.
  std::vector<double> evaluate(std::span<const double> x) const;
};

using PredictorPtr = std::shared_ptr<const Predictor>;

/// Adapts a scalar function of a d-vector.
class FunctionPredictor final : public Predictor {
 public:
  using Fn = std::function<double(std::span<const double>)>;

  FunctionPredictor(std::size_t input_dim, Fn fn);

  std::size_t input_dim() const override { return input_dim_; }
  std::size_t output_dim() const override { return 1; }
  Matrix evaluate_batch(const Matrix& inputs) const override;

 private:
  std::size_t input_dim_;
  Fn fn_;
};

/// Picks one output of a multi-output predictor.
class OutputSelector final : public Predictor {
 public:
  OutputSelector(PredictorPtr inner, std::size_t output);

  std::size_t input_dim() const override { return inner_->input_dim(); }
  std::size_t output_dim() const override { return 1; }
  Matrix evaluate_batch(const Matrix& inputs) const override;

 private:
  PredictorPtr inner_;
  std::size_t output_;
};

enum class Activation { ReLU, TanH, Identity };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view name);

struct DenseLayer {
  Matrix weights;  // out_dim x in_dim
  Vector biases;   // out_dim

  std::size_t in_dim() const { return static_cast<std::size_t>(weights.cols()); }
  std::size_t out_dim() const { return static_cast<std::size_t>(weights.rows()); }
};

/// Values of every neuron for a batch of inputs. pre[j] and post[j] are
/// n x layer[j].out_dim. The last layer has no activation, so its post equals
/// its pre.
struct BatchTrace {
  std::vector<Matrix> pre;
  std::vector<Matrix> post;
};

/// Single-input trace.
struct NeuronTrace {
  std::vector<std::vector<double>> pre_activation;
  std::vector<std::vector<double>> post_activation;
};

/// Dense feed-forward network; the activation follows every layer except the
/// last.
class MLPModel final : public Predictor {
 public:
  MLPModel(std::vector<DenseLayer> layers, Activation activation);

  std::size_t input_dim() const override { return layers_.front().in_dim(); }
  std::size_t output_dim() const override { return layers_.back().out_dim(); }
  Matrix evaluate_batch(const Matrix& inputs) const override;

  BatchTrace forward_traced_batch(const Matrix& inputs) const;

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& mutable_layers() { return layers_; }
  Activation activation() const { return activation_; }
  std::size_t parameter_count() const;

  /// Re-checks chaining and finiteness; throws InvalidArgument.
  void validate() const;

 private:
  std::vector<DenseLayer> layers_;
  Activation activation_;
};

std::vector<double> forward(const MLPModel& model, std::span<const double> x);
NeuronTrace forward_traced(const MLPModel& model, std::span<const double> x);

double apply_activation(Activation a, double v);

/// Uniform fan-in initialization: weights on [-b, b] with
/// b = gain * sqrt(3 / in_dim), gain sqrt(2) (ReLU), 5/3 (TanH), 1 (Identity);
/// biases on [-1/sqrt(in_dim), 1/sqrt(in_dim)].
DenseLayer kaiming_init(std::size_t out_dim, std::size_t in_dim, Activation activation,
                        std::uint64_t seed);

double kaiming_gain(Activation activation);

/// Kaiming: the activation-dependent gain table above. FrameworkDefault: the
/// common deep-learning framework default for dense layers (Kaiming uniform
/// with negative slope sqrt(5)), i.e. gain 1/sqrt(3) for every activation, so
/// weights and biases both lie on [-1/sqrt(in_dim), 1/sqrt(in_dim)].
enum class InitScheme { Kaiming, FrameworkDefault };

std::string_view to_string(InitScheme scheme);
InitScheme parse_init_scheme(std::string_view name);

DenseLayer init_layer(std::size_t out_dim, std::size_t in_dim, Activation activation,
                      InitScheme scheme, std::uint64_t seed);

/// input_dim -> hidden... -> output_dim, every layer initialized from one seed.
MLPModel build_mlp(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                   std::size_t output_dim, Activation activation, std::uint64_t seed,
                   InitScheme scheme = InitScheme::Kaiming);

/// -log softmax(model(x))[true_class], stabilized by subtracting the max logit.
double nll_output(const MLPModel& model, std::span<const double> x, std::size_t true_class);

/// Softmax of a logit vector (max-subtracted).
std::vector<double> softmax(std::span<const double> logits);

/// -log p[true_class] of a fixed class as a scalar predictor.
class NllPredictor final : public Predictor {
 public:
  NllPredictor(std::shared_ptr<const MLPModel> model, std::size_t true_class);

  std::size_t input_dim() const override { return model_->input_dim(); }
  std::size_t output_dim() const override { return 1; }
  Matrix evaluate_batch(const Matrix& inputs) const override;

 private:
  std::shared_ptr<const MLPModel> model_;
  std::size_t true_class_;
};

void save_model(const MLPModel& model, const std::filesystem::path& path);
MLPModel load_model(const std::filesystem::path& path);
std::string model_to_json(const MLPModel& model);
MLPModel model_from_json(std::string_view text);

}  // namespace meandim
