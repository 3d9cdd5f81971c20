#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "uqbot/data.hpp"
#include "uqbot/rng.hpp"

namespace uqbot {

enum class ArchKind { lstm, cnn_lstm };

std::string_view arch_kind_name(ArchKind kind) noexcept;
ArchKind parse_arch_kind(std::string_view name);

/// Classifier topology.
///
/// Each feature vector is read as a sequence of `n_features` scalar timesteps.
/// Every timestep is projected to `embed_dim` by a learned linear map (the
/// "embedding"), optionally passed through Conv1D(ReLU) + MaxPool1D
/// (`cnn_lstm`), then through dropout, a single LSTM layer of width
/// `hidden_size`, dropout again, and a dense softmax over the two classes.
struct ArchConfig {
  ArchKind kind = ArchKind::lstm;
  std::size_t n_features = 10;
  std::size_t hidden_size = 10;
  std::size_t embed_dim = 8;
  double dropout_rate = 0.5;
  std::size_t conv_filters = 16;
  std::size_t conv_kernel = 3;
  std::size_t pool_size = 2;
  std::size_t n_classes = 2;

  /// Throws InvalidArch.
  void validate() const;
  /// Length of the sequence entering the LSTM.
  std::size_t lstm_steps() const noexcept;
  std::size_t lstm_input_size() const noexcept;

  friend bool operator==(const ArchConfig&, const ArchConfig&) = default;
};

struct TensorInfo {
  std::string name;
  std::vector<std::size_t> shape;
  std::size_t offset = 0;
  std::size_t size = 0;
};

/// Placement of every named tensor inside one flat parameter vector.
class ParamLayout {
 public:
  explicit ParamLayout(const ArchConfig& arch);

  const std::vector<TensorInfo>& tensors() const noexcept { return tensors_; }
  const TensorInfo& find(std::string_view name) const;
  bool contains(std::string_view name) const noexcept;
  std::size_t total_size() const noexcept { return total_; }

 private:
  std::vector<TensorInfo> tensors_;
  std::size_t total_ = 0;
};

/// Flat real vector shaped by an ArchConfig's ParamLayout. Shared by weights,
/// gradients and SWAG moments so that all of them line up element for element.
class TensorSet {
 public:
  TensorSet() = default;
  explicit TensorSet(const ArchConfig& arch);

  const ArchConfig& arch() const noexcept { return arch_; }
  const ParamLayout& layout() const noexcept { return *layout_; }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }

  std::span<double> tensor(std::string_view name);
  std::span<const double> tensor(std::string_view name) const;

  bool all_finite() const noexcept;

  friend bool operator==(const TensorSet& a, const TensorSet& b) {
    return a.arch_ == b.arch_ && a.values_ == b.values_;
  }

 private:
  ArchConfig arch_;
  std::shared_ptr<const ParamLayout> layout_;
  std::vector<double> values_;
};

using Gradient = TensorSet;

struct ModelParams : TensorSet {
  ModelParams() = default;
  ModelParams(const ArchConfig& arch, std::uint64_t seed) : TensorSet(arch), seed(seed) {}

  std::uint64_t seed = 0;

  friend bool operator==(const ModelParams& a, const ModelParams& b) {
    return a.seed == b.seed && static_cast<const TensorSet&>(a) == static_cast<const TensorSet&>(b);
  }
};

/// p(y | x, w) over {benign, botnet}.
struct PredictionDist {
  std::array<double, 2> probs{0.5, 0.5};

  int argmax() const noexcept { return probs[1] > probs[0] ? 1 : 0; }
  friend bool operator==(const PredictionDist&, const PredictionDist&) = default;
};

enum class Mode { train, eval };

inline constexpr double kProbFloor = 1e-12;

/// Uniform [-0.1, 0.1] initialization, deterministic per seed.
ModelParams init_params(const ArchConfig& arch, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Network evaluation

/// Inverted-dropout masks for one forward pass: entries are 0 or 1/(1-rate).
struct DropoutMasks {
  std::vector<double> lstm_input;  // lstm_steps x lstm_input_size
  std::vector<double> lstm_output;  // hidden_size

  static DropoutMasks draw(const ArchConfig& arch, Rng& rng);
};

/// Reusable forward/backward workspace for one architecture. Not thread-safe;
/// use one Evaluator per thread.
class Evaluator {
 public:
  explicit Evaluator(const ArchConfig& arch);
  ~Evaluator();
  Evaluator(Evaluator&&) noexcept;
  Evaluator& operator=(Evaluator&&) noexcept;

  const ArchConfig& arch() const noexcept;

  /// `masks == nullptr` is eval mode.
  PredictionDist forward(const ModelParams& p, std::span<const double> x,
                         const DropoutMasks* masks = nullptr);

  /// Cross-entropy -log(max(p_y, 1e-12)); adds `scale * dLoss/dw` into `grad`.
  /// Returns the loss.
  double accumulate_gradient(const ModelParams& p, std::span<const double> x, int y,
                             Gradient& grad, double scale = 1.0,
                             const DropoutMasks* masks = nullptr);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

PredictionDist forward(const ModelParams& p, std::span<const double> x, Mode mode = Mode::eval,
                       Rng* rng = nullptr);
double loss(const ModelParams& p, std::span<const double> x, int y);
Gradient grad(const ModelParams& p, std::span<const double> x, int y);
/// Gradient of the mean eval-mode loss over `rows` of `d`.
Gradient mean_grad(const ModelParams& p, const Dataset& d, std::span<const std::size_t> rows);

std::vector<PredictionDist> predict_batch(const ModelParams& p, const Dataset& d);
std::vector<int> predict_labels(const ModelParams& p, const Dataset& d);
double accuracy(const ModelParams& p, const Dataset& d);

// ---------------------------------------------------------------------------
// Training

struct TrainConfig {
  double learning_rate = 0.01;
  std::size_t epochs = 20;
  std::uint64_t seed = 0;
  /// 1 = per-sample updates; larger values average gradients over minibatches.
  std::size_t batch_size = 1;

  void validate() const;
};

/// Stateful SGD driver. One seeded stream supplies both the epoch shuffles and
/// the dropout masks, so every procedure built on it (plain training, the
/// poisoning update, SWAG trajectories) is reproducible per seed.
class SgdSession {
 public:
  SgdSession(const ArchConfig& arch, std::uint64_t seed);

  Rng& rng() noexcept { return rng_; }
  Evaluator& evaluator() noexcept { return eval_; }

  /// Shuffles `rows` (positions into `d`) and performs one pass of updates.
  void epoch(ModelParams& p, const Dataset& d, std::vector<std::size_t> rows, double lr,
             std::size_t batch_size = 1);

  /// w <- w - lr * (dL(x, y, w) + extra), with dL evaluated under fresh
  /// train-mode dropout masks.
  void step(ModelParams& p, std::span<const double> x, int y, double lr,
            const Gradient* extra = nullptr);

 private:
  Rng rng_;
  Evaluator eval_;
  Gradient scratch_;
};

ModelParams train(const ModelParams& p0, const Dataset& d, const TrainConfig& cfg);

// ---------------------------------------------------------------------------
// Checkpoints

void save_checkpoint(const ModelParams& p, const std::filesystem::path& path);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace uqbot
