#include <algorithm>
#include <cmath>
#include <random>

#include "uqbot/error.hpp"
#include "uqbot/model.hpp"

namespace uqbot {

std::string_view arch_kind_name(ArchKind kind) noexcept {
  return kind == ArchKind::lstm ? "lstm" : "cnn_lstm";
}

ArchKind parse_arch_kind(std::string_view name) {
  if (name == "lstm") return ArchKind::lstm;
  if (name == "cnn_lstm" || name == "cnn-lstm") return ArchKind::cnn_lstm;
  throw Error(ErrorCode::InvalidArch, "unknown architecture '" + std::string(name) + "'");
}

void ArchConfig::validate() const {
  if (n_features < 1) throw Error(ErrorCode::InvalidArch, "n_features must be >= 1");
  if (hidden_size < 1) throw Error(ErrorCode::InvalidArch, "hidden_size must be >= 1");
  if (embed_dim < 1) throw Error(ErrorCode::InvalidArch, "embed_dim must be >= 1");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw Error(ErrorCode::InvalidArch, "dropout_rate must lie in [0, 1)");
  }
  if (n_classes != 2) throw Error(ErrorCode::InvalidArch, "n_classes is fixed at 2");
  if (kind == ArchKind::cnn_lstm) {
    if (pool_size < 1) throw Error(ErrorCode::InvalidArch, "pool_size must be >= 1");
    if (conv_filters < 1 || conv_kernel < 1) {
      throw Error(ErrorCode::InvalidArch, "conv_filters and conv_kernel must be >= 1");
    }
    if (n_features < pool_size) {
      throw Error(ErrorCode::InvalidArch, "n_features shorter than pool_size");
    }
  }
}

std::size_t ArchConfig::lstm_steps() const noexcept {
  return kind == ArchKind::cnn_lstm ? n_features / pool_size : n_features;
}

std::size_t ArchConfig::lstm_input_size() const noexcept {
  return kind == ArchKind::cnn_lstm ? conv_filters : embed_dim;
}

ParamLayout::ParamLayout(const ArchConfig& arch) {
  arch.validate();
  auto add = [this](std::string name, std::vector<std::size_t> shape) {
    std::size_t size = 1;
    for (auto s : shape) size *= s;
    tensors_.push_back(TensorInfo{std::move(name), std::move(shape), total_, size});
    total_ += size;
  };
  const std::size_t e = arch.embed_dim;
  const std::size_t h = arch.hidden_size;
  add("embed.weight", {e});
  add("embed.bias", {e});
  if (arch.kind == ArchKind::cnn_lstm) {
    add("conv.weight", {arch.conv_filters, e, arch.conv_kernel});
    add("conv.bias", {arch.conv_filters});
  }
  add("lstm.weight_ih", {4 * h, arch.lstm_input_size()});
  add("lstm.weight_hh", {4 * h, h});
  add("lstm.bias", {4 * h});
  add("dense.weight", {arch.n_classes, h});
  add("dense.bias", {arch.n_classes});
}

const TensorInfo& ParamLayout::find(std::string_view name) const {
  for (const auto& t : tensors_) {
    if (t.name == name) return t;
  }
  throw Error(ErrorCode::CheckpointError, "no tensor named '" + std::string(name) + "'");
}

bool ParamLayout::contains(std::string_view name) const noexcept {
  return std::any_of(tensors_.begin(), tensors_.end(),
                     [&](const TensorInfo& t) { return t.name == name; });
}

TensorSet::TensorSet(const ArchConfig& arch)
    : arch_(arch), layout_(std::make_shared<const ParamLayout>(arch)) {
  values_.assign(layout_->total_size(), 0.0);
}

std::span<double> TensorSet::tensor(std::string_view name) {
  const auto& t = layout_->find(name);
  return std::span<double>(values_).subspan(t.offset, t.size);
}

std::span<const double> TensorSet::tensor(std::string_view name) const {
  const auto& t = layout_->find(name);
  return std::span<const double>(values_).subspan(t.offset, t.size);
}

bool TensorSet::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

ModelParams init_params(const ArchConfig& arch, std::uint64_t seed) {
  ModelParams p(arch, seed);
  Rng rng(seed);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  for (double& v : p.values()) v = u(rng);
  return p;
}

}  // namespace uqbot
