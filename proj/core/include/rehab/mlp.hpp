#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <nlohmann/json_fwd.hpp>
#include <span>
#include <vector>

#include "rehab/motion.hpp"

namespace rehab::ml {

inline constexpr std::array<std::size_t, 6> kGridUnits{16, 32, 64, 128, 256, 512};
inline constexpr std::array<double, 5> kGridRates{0.0001, 0.005, 0.001, 0.01, 0.1};

struct MlpConfig {
  std::vector<std::size_t> hidden{32};
  double learning_rate = 0.005;
  std::uint64_t seed = 1;

  /// Throws ConfigurationError for 0 or more than 3 hidden layers, zero-width
  /// layers, or a non-positive rate.
  void validate() const;
  /// True when a width or the rate lies outside the search grid.
  bool off_grid() const;

  friend bool operator==(const MlpConfig&, const MlpConfig&) = default;
};

/// Larger per-(exercise, component) architectures, chosen by grid search.
MlpConfig reference_config(Exercise exercise, Component component, std::uint64_t seed = 1);

/// Per-column affine map fitted on training inputs.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer identity(std::size_t dim);
  static Standardizer fit(std::span<const std::vector<double>> xs);
  void apply(std::span<const double> x, std::span<double> out) const;
};

struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weights;  // out x in, row-major
  std::vector<double> bias;
};

struct Sample {
  std::vector<double> x;
  int label = 0;
};

class MlpModel {
 public:
  /// He-uniform hidden layers and a zero output layer, so an untrained model
  /// answers 0.5 for every input.
  static MlpModel initialize(const MlpConfig& config, std::size_t input_dim);
  /// Every parameter zero.
  static MlpModel zeros(const MlpConfig& config, std::size_t input_dim);

  const MlpConfig& config() const noexcept { return config_; }
  std::size_t input_dim() const noexcept { return input_dim_; }
  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  std::vector<DenseLayer>& layers() noexcept { return layers_; }
  const Standardizer& standardizer() const noexcept { return standardizer_; }
  void set_standardizer(Standardizer s);
  std::size_t parameter_count() const;

  /// (P(label 0), P(label 1)).
  std::array<double, 2> predict_distribution(std::span<const double> x) const;
  /// Probability of label 1.
  double predict_proba(std::span<const double> x) const { return predict_distribution(x)[1]; }
  int predict(std::span<const double> x) const { return predict_proba(x) >= 0.5 ? 1 : 0; }

  /// Cross-entropy of one sample.
  double loss(std::span<const double> x, int label) const;
  double mean_loss(std::span<const Sample> data) const;

  /// Loss gradient for every parameter, laid out like layers().
  std::vector<DenseLayer> gradients(std::span<const double> x, int label) const;

  friend bool operator==(const MlpModel&, const MlpModel&);

 private:
  MlpConfig config_;
  std::size_t input_dim_ = 0;
  std::vector<DenseLayer> layers_;
  Standardizer standardizer_;

  void check_input(std::span<const double> x) const;
};

bool operator==(const MlpModel& a, const MlpModel& b);

/// One shuffled epoch of batch-1 Adam from a fresh initialization; the
/// standardizer is fitted on `data` first.
MlpModel train(const MlpConfig& config, std::span<const Sample> data);

/// Continues batch-1 Adam from `model` over one shuffled epoch of `data`
/// with the model's rate; the standardizer is kept. Returns a new model.
MlpModel finetune(const MlpModel& model, std::span<const Sample> data);

struct GradientCheckReport {
  double max_relative_error = 0.0;
  std::size_t parameters = 0;
  bool all_finite = true;
  bool pass = false;
};

/// Analytic gradient against central differences (step 1e-5) over every
/// parameter. `analytic_scale` multiplies the analytic side, for testing
/// the check itself.
GradientCheckReport gradient_check(const MlpModel& model, std::span<const double> x, int label,
                                   double tolerance = 1e-4, double analytic_scale = 1.0);

inline constexpr int kModelFormatVersion = 1;

nlohmann::json model_to_json(const MlpModel& m);
MlpModel model_from_json(const nlohmann::json& j);
void save_model(const MlpModel& m, const std::filesystem::path& path);
MlpModel load_model(const std::filesystem::path& path);

}  // namespace rehab::ml
