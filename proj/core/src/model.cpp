#include "meandim/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "meandim/csv.hpp"
#include "meandim/rng.hpp"

namespace meandim {
namespace {

constexpr int kModelFormatVersion = 1;

void require_finite_output(const Matrix& out) {
  if (!out.allFinite()) throw NumericalError("predictor produced a non-finite output");
}

void apply_activation_inplace(Activation a, Matrix& m) {
  switch (a) {
    case Activation::ReLU:
      m = m.cwiseMax(0.0);
      break;
    case Activation::TanH:
      m = m.array().tanh().matrix();
      break;
    case Activation::Identity:
      break;
  }
}

// Shared by evaluate_batch and the traced forward so that both produce
// bit-identical outputs.
template <typename Record>
Matrix run_layers(const std::vector<DenseLayer>& layers, Activation activation,
                  const Matrix& inputs, Record&& record) {
  Matrix h = inputs;
  for (std::size_t j = 0; j < layers.size(); ++j) {
    const DenseLayer& layer = layers[j];
    Matrix pre = h * layer.weights.transpose();
    pre.rowwise() += layer.biases.transpose();
    const bool last = j + 1 == layers.size();
    if (last) {
      record(j, pre, pre);
      h = std::move(pre);
    } else {
      Matrix post = pre;
      apply_activation_inplace(activation, post);
      record(j, pre, post);
      h = std::move(post);
    }
  }
  return h;
}

}  // namespace

std::vector<double> Predictor::evaluate(std::span<const double> x) const {
  if (x.size() != input_dim()) throw InvalidArgument("evaluate: input dimension mismatch");
  Matrix in(1, static_cast<Eigen::Index>(x.size()));
  std::copy(x.begin(), x.end(), in.data());
  const Matrix out = evaluate_batch(in);
  return {out.data(), out.data() + out.size()};
}

FunctionPredictor::FunctionPredictor(std::size_t input_dim, Fn fn)
    : input_dim_(input_dim), fn_(std::move(fn)) {
  if (input_dim_ == 0) throw InvalidArgument("FunctionPredictor: input_dim must be positive");
  if (!fn_) throw InvalidArgument("FunctionPredictor: empty function");
}

Matrix FunctionPredictor::evaluate_batch(const Matrix& inputs) const {
  if (static_cast<std::size_t>(inputs.cols()) != input_dim_)
    throw InvalidArgument("FunctionPredictor: input dimension mismatch");
  Matrix out(inputs.rows(), 1);
  for (Eigen::Index r = 0; r < inputs.rows(); ++r) {
    out(r, 0) = fn_(std::span<const double>(inputs.data() + r * inputs.cols(), input_dim_));
  }
  require_finite_output(out);
  return out;
}

OutputSelector::OutputSelector(PredictorPtr inner, std::size_t output)
    : inner_(std::move(inner)), output_(output) {
  if (!inner_) throw InvalidArgument("OutputSelector: null predictor");
  if (output_ >= inner_->output_dim()) throw InvalidArgument("OutputSelector: output index out of range");
}

Matrix OutputSelector::evaluate_batch(const Matrix& inputs) const {
  const Matrix all = inner_->evaluate_batch(inputs);
  return all.col(static_cast<Eigen::Index>(output_));
}

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::ReLU: return "relu";
    case Activation::TanH: return "tanh";
    case Activation::Identity: return "identity";
  }
  return "unknown";
}

Activation parse_activation(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "relu") return Activation::ReLU;
  if (lower == "tanh") return Activation::TanH;
  if (lower == "identity" || lower == "linear") return Activation::Identity;
  throw InvalidArgument("unknown activation '" + std::string(name) + "' (expected relu, tanh, identity)");
}

double apply_activation(Activation a, double v) {
  switch (a) {
    case Activation::ReLU: return v > 0.0 ? v : 0.0;
    case Activation::TanH: return std::tanh(v);
    case Activation::Identity: return v;
  }
  return v;
}

MLPModel::MLPModel(std::vector<DenseLayer> layers, Activation activation)
    : layers_(std::move(layers)), activation_(activation) {
  validate();
}

void MLPModel::validate() const {
  if (layers_.empty()) throw InvalidArgument("MLPModel: no layers");
  for (std::size_t j = 0; j < layers_.size(); ++j) {
    const auto& l = layers_[j];
    if (l.in_dim() == 0 || l.out_dim() == 0) throw InvalidArgument("MLPModel: empty layer");
    if (static_cast<std::size_t>(l.biases.size()) != l.out_dim())
      throw InvalidArgument("MLPModel: layer " + std::to_string(j) + " bias size mismatch");
    if (j > 0 && layers_[j - 1].out_dim() != l.in_dim())
      throw InvalidArgument("MLPModel: layer " + std::to_string(j) + " in_dim does not chain");
    if (!l.weights.allFinite() || !l.biases.allFinite())
      throw InvalidArgument("MLPModel: layer " + std::to_string(j) + " has non-finite parameters");
  }
}

std::size_t MLPModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.in_dim() * l.out_dim() + l.out_dim();
  return n;
}

Matrix MLPModel::evaluate_batch(const Matrix& inputs) const {
  if (static_cast<std::size_t>(inputs.cols()) != input_dim())
    throw InvalidArgument("MLPModel: input dimension mismatch");
  Matrix out = run_layers(layers_, activation_, inputs, [](std::size_t, const Matrix&, const Matrix&) {});
  require_finite_output(out);
  return out;
}

BatchTrace MLPModel::forward_traced_batch(const Matrix& inputs) const {
  if (static_cast<std::size_t>(inputs.cols()) != input_dim())
    throw InvalidArgument("MLPModel: input dimension mismatch");
  BatchTrace trace;
  trace.pre.reserve(layers_.size());
  trace.post.reserve(layers_.size());
  const Matrix out = run_layers(layers_, activation_, inputs,
                                [&](std::size_t, const Matrix& pre, const Matrix& post) {
                                  trace.pre.push_back(pre);
                                  trace.post.push_back(post);
                                });
  require_finite_output(out);
  return trace;
}

std::vector<double> forward(const MLPModel& model, std::span<const double> x) {
  return model.evaluate(x);
}

NeuronTrace forward_traced(const MLPModel& model, std::span<const double> x) {
  if (x.size() != model.input_dim()) throw InvalidArgument("forward_traced: input dimension mismatch");
  Matrix in(1, static_cast<Eigen::Index>(x.size()));
  std::copy(x.begin(), x.end(), in.data());
  const BatchTrace bt = model.forward_traced_batch(in);
  NeuronTrace t;
  for (std::size_t j = 0; j < bt.pre.size(); ++j) {
    t.pre_activation.emplace_back(bt.pre[j].data(), bt.pre[j].data() + bt.pre[j].size());
    t.post_activation.emplace_back(bt.post[j].data(), bt.post[j].data() + bt.post[j].size());
  }
  return t;
}

double kaiming_gain(Activation activation) {
  switch (activation) {
    case Activation::ReLU: return std::sqrt(2.0);
    case Activation::TanH: return 5.0 / 3.0;
    case Activation::Identity: return 1.0;
  }
  return 1.0;
}

namespace {

DenseLayer uniform_layer(std::size_t out_dim, std::size_t in_dim, double gain, std::uint64_t seed) {
  if (out_dim == 0 || in_dim == 0) throw InvalidArgument("layer initialization: dimensions must be positive");
  Rng rng(seed);
  const double fan_in = static_cast<double>(in_dim);
  const double w_bound = gain * std::sqrt(3.0 / fan_in);
  const double b_bound = 1.0 / std::sqrt(fan_in);
  DenseLayer layer;
  layer.weights.resize(static_cast<Eigen::Index>(out_dim), static_cast<Eigen::Index>(in_dim));
  layer.biases.resize(static_cast<Eigen::Index>(out_dim));
  for (Eigen::Index i = 0; i < layer.weights.size(); ++i) layer.weights.data()[i] = rng.uniform(-w_bound, w_bound);
  for (Eigen::Index i = 0; i < layer.biases.size(); ++i) layer.biases[i] = rng.uniform(-b_bound, b_bound);
  return layer;
}

}  // namespace

DenseLayer kaiming_init(std::size_t out_dim, std::size_t in_dim, Activation activation,
                        std::uint64_t seed) {
  return uniform_layer(out_dim, in_dim, kaiming_gain(activation), seed);
}

std::string_view to_string(InitScheme scheme) {
  return scheme == InitScheme::Kaiming ? "kaiming" : "framework";
}

InitScheme parse_init_scheme(std::string_view name) {
  if (name == "kaiming") return InitScheme::Kaiming;
  if (name == "framework") return InitScheme::FrameworkDefault;
  throw InvalidArgument("unknown init scheme '" + std::string(name) + "' (expected kaiming or framework)");
}

DenseLayer init_layer(std::size_t out_dim, std::size_t in_dim, Activation activation,
                      InitScheme scheme, std::uint64_t seed) {
  if (scheme == InitScheme::Kaiming) return kaiming_init(out_dim, in_dim, activation, seed);
  return uniform_layer(out_dim, in_dim, 1.0 / std::sqrt(3.0), seed);
}

MLPModel build_mlp(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                   std::size_t output_dim, Activation activation, std::uint64_t seed,
                   InitScheme scheme) {
  Rng seeds(seed);
  std::vector<DenseLayer> layers;
  std::size_t in = input_dim;
  for (std::size_t width : hidden) {
    layers.push_back(init_layer(width, in, activation, scheme, seeds.split()));
    in = width;
  }
  layers.push_back(init_layer(output_dim, in, activation, scheme, seeds.split()));
  return MLPModel(std::move(layers), activation);
}

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) throw InvalidArgument("softmax: empty logits");
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - mx);
    total += p[i];
  }
  for (auto& v : p) v /= total;
  return p;
}

namespace {

double nll_from_logits(const double* logits, std::size_t n, std::size_t true_class) {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) mx = std::max(mx, logits[i]);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += std::exp(logits[i] - mx);
  // -log(exp(z_c - mx) / total)
  return std::log(total) - (logits[true_class] - mx);
}

}  // namespace

double nll_output(const MLPModel& model, std::span<const double> x, std::size_t true_class) {
  if (model.output_dim() < 2) throw InvalidArgument("nll_output: model needs at least 2 outputs");
  if (true_class >= model.output_dim()) throw InvalidArgument("nll_output: class out of range");
  const auto logits = forward(model, x);
  return nll_from_logits(logits.data(), logits.size(), true_class);
}

NllPredictor::NllPredictor(std::shared_ptr<const MLPModel> model, std::size_t true_class)
    : model_(std::move(model)), true_class_(true_class) {
  if (!model_) throw InvalidArgument("NllPredictor: null model");
  if (model_->output_dim() < 2) throw InvalidArgument("NllPredictor: model needs at least 2 outputs");
  if (true_class_ >= model_->output_dim()) throw InvalidArgument("NllPredictor: class out of range");
}

Matrix NllPredictor::evaluate_batch(const Matrix& inputs) const {
  const Matrix logits = model_->evaluate_batch(inputs);
  Matrix out(logits.rows(), 1);
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    out(r, 0) = nll_from_logits(logits.data() + r * logits.cols(),
                                static_cast<std::size_t>(logits.cols()), true_class_);
  }
  return out;
}

std::string model_to_json(const MLPModel& model) {
  nlohmann::json j;
  j["format_version"] = kModelFormatVersion;
  j["input_dim"] = model.input_dim();
  j["activation"] = std::string(to_string(model.activation()));
  j["layers"] = nlohmann::json::array();
  for (const auto& l : model.layers()) {
    nlohmann::json lj;
    lj["in_dim"] = l.in_dim();
    lj["out_dim"] = l.out_dim();
    lj["weights"] = std::vector<double>(l.weights.data(), l.weights.data() + l.weights.size());
    lj["biases"] = std::vector<double>(l.biases.data(), l.biases.data() + l.biases.size());
    j["layers"].push_back(std::move(lj));
  }
  return j.dump() + "\n";
}

MLPModel model_from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed model file: ") + e.what());
  }
  try {
    if (j.at("format_version").get<int>() != kModelFormatVersion)
      throw InvalidArgument("unsupported model format_version");
    const auto input_dim = j.at("input_dim").get<std::size_t>();
    const Activation act = parse_activation(j.at("activation").get<std::string>());
    std::vector<DenseLayer> layers;
    for (const auto& lj : j.at("layers")) {
      const auto in = lj.at("in_dim").get<std::size_t>();
      const auto out = lj.at("out_dim").get<std::size_t>();
      const auto w = lj.at("weights").get<std::vector<double>>();
      const auto b = lj.at("biases").get<std::vector<double>>();
      if (w.size() != in * out || b.size() != out)
        throw InvalidArgument("model layer " + std::to_string(layers.size()) + ": array sizes do not match dims");
      DenseLayer layer;
      layer.weights = Eigen::Map<const Matrix>(w.data(), static_cast<Eigen::Index>(out),
                                               static_cast<Eigen::Index>(in));
      layer.biases = Eigen::Map<const Vector>(b.data(), static_cast<Eigen::Index>(out));
      layers.push_back(std::move(layer));
    }
    if (layers.empty()) throw InvalidArgument("model file has no layers");
    if (layers.front().in_dim() != input_dim) throw InvalidArgument("model input_dim does not match first layer");
    return MLPModel(std::move(layers), act);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed model file: ") + e.what());
  }
}

void save_model(const MLPModel& model, const std::filesystem::path& path) {
  csv::write_atomic(path, model_to_json(model));
}

MLPModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open model file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return model_from_json(buffer.str());
}

}  // namespace meandim
