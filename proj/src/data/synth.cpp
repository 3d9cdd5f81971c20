#include <cmath>
#include <random>

#include "uqbot/data.hpp"
#include "uqbot/error.hpp"
#include "uqbot/rng.hpp"

namespace uqbot {

Dataset synth_generate(const SynthSpec& spec) {
  if (spec.n_samples < 2 || spec.n_features < 1 || !(spec.class_separation >= 0.0) ||
      !(spec.noise_std >= 0.0) || !std::isfinite(spec.class_separation) ||
      !std::isfinite(spec.noise_std)) {
    throw Error(ErrorCode::InvalidSpec,
                "need n_samples >= 2, n_features >= 1, finite separation and noise >= 0");
  }
  const std::size_t n = spec.n_samples;
  const std::size_t f = spec.n_features;
  const double offset = 0.5 * spec.class_separation / std::sqrt(double(f));

  Rng rng(spec.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> feats(n * f);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = static_cast<int>(i % 2);
    const double centre = labels[i] == 1 ? offset : -offset;
    for (std::size_t j = 0; j < f; ++j) {
      feats[i * f + j] = centre + spec.noise_std * noise(rng);
    }
  }
  std::vector<std::string> names(f);
  for (std::size_t j = 0; j < f; ++j) names[j] = "f" + std::to_string(j);
  return Dataset("synth", std::move(names), std::move(feats), std::move(labels));
}

}  // namespace uqbot
