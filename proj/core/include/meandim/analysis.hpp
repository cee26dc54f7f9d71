#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include "meandim/data.hpp"
#include "meandim/estimator.hpp"
#include "meandim/model.hpp"
#include "meandim/train.hpp"

namespace meandim {

enum class Stage { PreActivation, PostActivation, Output };
std::string_view to_string(Stage stage);

struct LamdRow {
  std::size_t layer = 0;
  Stage stage = Stage::Output;
  /// Average mean dimension over the stage's non-degenerate neurons; NaN when
  /// every neuron was degenerate.
  double lamd = 0.0;
  std::size_t neuron_count = 0;
  std::size_t degenerate_count = 0;

  bool available() const { return degenerate_count < neuron_count; }
};

struct LamdTable {
  std::vector<LamdRow> rows;
  std::size_t r = 0;
  std::uint64_t seed = 0;

  const LamdRow& at(std::size_t layer, Stage stage) const;
};

/// Layer-average mean dimension. Each neuron's pre- and post-activation value
/// is treated as the model output; one pair list serves every neuron.
LamdTable lamd(const MLPModel& model, const Dataset& data, std::size_t r, std::uint64_t seed,
               const ExecOptions& exec = {});

struct TrainingCurve {
  std::vector<std::size_t> epochs;
  /// NaN marks a checkpoint whose output was degenerate.
  std::vector<double> mean_dimension;
  std::vector<double> train_loss;
  std::vector<double> test_loss;
};

struct CurveOptions {
  std::size_t checkpoint_every = 10;
  std::size_t r = 0;  // 0 -> N - 1 of the training set
  std::uint64_t seed = 0;
  bool include_initial = false;
  ExecOptions exec;
};

/// Trains and estimates the mean dimension at every checkpoint with the same
/// pair list, so the curve reflects only changes in the model.
TrainingCurve md_during_training(MLPModel initial, const Dataset& train_data,
                                 const Dataset* test_data, const TrainConfig& cfg,
                                 const CurveOptions& options);

struct ImageShape {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;

  std::size_t size() const { return height * width * channels; }
  /// Feature index of (c, h, w); layout is channel-major then row-major.
  std::size_t index(std::size_t c, std::size_t h, std::size_t w) const {
    return (c * height + h) * width + w;
  }
};

struct Heatmap {
  ImageShape shape;
  std::vector<Matrix> channel_maps;  // channels x (height x width)
  Matrix aggregated;                 // mean over channels
  SensitivityReport report;
};

/// tau' per pixel-channel, reshaped. Features are treated as dependent.
Heatmap tau_prime_heatmap(const Predictor& model, const Dataset& data, const ImageShape& shape,
                          std::size_t r, std::uint64_t seed, const ExecOptions& exec = {});

/// Appends n_dummies i.i.d. uniform [low, high) columns named dummy_0...
Dataset augment_with_dummies(const Dataset& data, std::size_t n_dummies, std::uint64_t seed,
                             double low, double high);

std::filesystem::path write_lamd_csv(const LamdTable& table, const std::filesystem::path& path);
std::filesystem::path write_curve_csv(const TrainingCurve& curve,
                                      const std::filesystem::path& path);

/// channel_<c>.csv, aggregated.csv, heatmap_meta.json and optionally one P5
/// PGM per map (16-bit, min-max scaled; scales recorded in the metadata).
std::vector<std::filesystem::path> write_heatmap(const Heatmap& heatmap,
                                                 const std::filesystem::path& dir,
                                                 bool write_pgm);

}  // namespace meandim
