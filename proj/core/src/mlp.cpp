#include "rehab/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numeric>

#include "rehab/errors.hpp"
#include "rehab/random.hpp"

namespace rehab::ml {

namespace {

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;
constexpr double kFiniteStep = 1e-5;
constexpr double kRelativeFloor = 1e-6;

/// Forward/backward scratch plus Adam moments for one training run.
class Trainer {
 public:
  explicit Trainer(MlpModel& model) : model_(model) {
    const auto& layers = model_.layers();
    pre_.resize(layers.size());
    act_.resize(layers.size() + 1);
    delta_.resize(layers.size());
    m_.resize(layers.size());
    v_.resize(layers.size());
    act_[0].resize(model_.input_dim());
    for (std::size_t l = 0; l < layers.size(); ++l) {
      pre_[l].resize(layers[l].out);
      act_[l + 1].resize(layers[l].out);
      delta_[l].resize(layers[l].out);
      m_[l] = {layers[l].in, layers[l].out, std::vector<double>(layers[l].weights.size()),
               std::vector<double>(layers[l].out)};
      v_[l] = m_[l];
    }
  }

  void step(const Sample& s) {
    auto& layers = model_.layers();
    const std::size_t n = layers.size();
    model_.standardizer().apply(s.x, act_[0]);
    for (std::size_t l = 0; l < n; ++l) {
      const auto& L = layers[l];
      for (std::size_t o = 0; o < L.out; ++o) {
        const double* w = L.weights.data() + o * L.in;
        double z = L.bias[o];
        for (std::size_t i = 0; i < L.in; ++i) z += w[i] * act_[l][i];
        pre_[l][o] = z;
        act_[l + 1][o] = l + 1 < n ? std::max(z, 0.0) : z;
      }
    }
    const double z0 = pre_[n - 1][0];
    const double z1 = pre_[n - 1][1];
    const double mx = std::max(z0, z1);
    const double e0 = std::exp(z0 - mx);
    const double e1 = std::exp(z1 - mx);
    delta_[n - 1][0] = e0 / (e0 + e1) - (s.label == 0 ? 1.0 : 0.0);
    delta_[n - 1][1] = e1 / (e0 + e1) - (s.label == 1 ? 1.0 : 0.0);
    for (std::size_t l = n - 1; l > 0; --l) {
      const auto& L = layers[l];
      auto& d = delta_[l - 1];
      std::fill(d.begin(), d.end(), 0.0);
      for (std::size_t o = 0; o < L.out; ++o) {
        const double* w = L.weights.data() + o * L.in;
        const double g = delta_[l][o];
        if (g == 0.0) continue;
        for (std::size_t i = 0; i < L.in; ++i) d[i] += w[i] * g;
      }
      for (std::size_t i = 0; i < d.size(); ++i) {
        if (pre_[l - 1][i] <= 0.0) d[i] = 0.0;
      }
    }

    ++t_;
    const double lr = model_.config().learning_rate;
    const double c1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(t_));
    auto adam = [&](double& p, double& m, double& v, double g) {
      m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * g;
      v = kAdamBeta2 * v + (1.0 - kAdamBeta2) * g * g;
      p -= lr * (m / c1) / (std::sqrt(v / c2) + kAdamEps);
    };
    for (std::size_t l = 0; l < n; ++l) {
      auto& L = layers[l];
      for (std::size_t o = 0; o < L.out; ++o) {
        const double g = delta_[l][o];
        double* w = L.weights.data() + o * L.in;
        double* mw = m_[l].weights.data() + o * L.in;
        double* vw = v_[l].weights.data() + o * L.in;
        for (std::size_t i = 0; i < L.in; ++i) adam(w[i], mw[i], vw[i], g * act_[l][i]);
        adam(L.bias[o], m_[l].bias[o], v_[l].bias[o], g);
      }
    }
  }

 private:
  MlpModel& model_;
  std::vector<std::vector<double>> pre_;
  std::vector<std::vector<double>> act_;
  std::vector<std::vector<double>> delta_;
  std::vector<DenseLayer> m_;
  std::vector<DenseLayer> v_;
  std::uint64_t t_ = 0;
};

void check_dataset(const MlpModel& model, std::span<const Sample> data) {
  for (const auto& s : data) {
    if (s.x.size() != model.input_dim()) {
      throw ShapeError("sample has " + std::to_string(s.x.size()) + " features, model expects " +
                       std::to_string(model.input_dim()));
    }
    if (s.label != 0 && s.label != 1) throw DataError("labels must be 0 or 1");
    for (double v : s.x) {
      if (!std::isfinite(v)) throw DataError("non-finite feature in training data");
    }
  }
}

void run_epoch(MlpModel& model, std::span<const Sample> data, std::uint64_t shuffle_seed) {
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(shuffle_seed);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
  Trainer trainer(model);
  for (std::size_t i : order) trainer.step(data[i]);
}

}  // namespace

void MlpConfig::validate() const {
  if (hidden.empty() || hidden.size() > 3) throw ConfigurationError("network needs one to three hidden layers");
  for (auto h : hidden) {
    if (h == 0) throw ConfigurationError("hidden layer width must be positive");
  }
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigurationError("learning rate must be positive");
  }
}

bool MlpConfig::off_grid() const {
  for (auto h : hidden) {
    if (std::find(kGridUnits.begin(), kGridUnits.end(), h) == kGridUnits.end()) return true;
  }
  return std::find(kGridRates.begin(), kGridRates.end(), learning_rate) == kGridRates.end();
}

MlpConfig reference_config(Exercise exercise, Component component, std::uint64_t seed) {
  using H = std::vector<std::size_t>;
  switch (exercise) {
    case Exercise::E1:
      if (component == Component::Rom) return {H{256, 256, 256}, 0.005, seed};
      if (component == Component::Smoothness) return {H{16}, 0.0001, seed};
      return {H{512, 512, 512}, 0.005, seed};
    case Exercise::E2:
      if (component == Component::Rom) return {H{32, 32, 32}, 0.01, seed};
      if (component == Component::Smoothness) return {H{32}, 0.0001, seed};
      return {H{256, 256}, 0.0001, seed};
    case Exercise::E3:
      if (component == Component::Rom) return {H{16}, 0.005, seed};
      if (component == Component::Smoothness) return {H{128}, 0.0001, seed};
      return {H{256, 256, 256}, 0.1, seed};
  }
  return {};
}

Standardizer Standardizer::identity(std::size_t dim) {
  return {std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0)};
}

Standardizer Standardizer::fit(std::span<const std::vector<double>> xs) {
  if (xs.empty()) throw InsufficientDataError("cannot fit a standardizer on no samples");
  const std::size_t d = xs.front().size();
  Standardizer s{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  for (const auto& x : xs) {
    for (std::size_t i = 0; i < d; ++i) s.mean[i] += x[i];
  }
  for (auto& m : s.mean) m /= static_cast<double>(xs.size());
  for (const auto& x : xs) {
    for (std::size_t i = 0; i < d; ++i) s.scale[i] += (x[i] - s.mean[i]) * (x[i] - s.mean[i]);
  }
  for (auto& v : s.scale) {
    v = std::sqrt(v / static_cast<double>(xs.size()));
    if (v < 1e-8) v = 1.0;
  }
  return s;
}

void Standardizer::apply(std::span<const double> x, std::span<double> out) const {
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - mean[i]) / scale[i];
}

MlpModel MlpModel::zeros(const MlpConfig& config, std::size_t input_dim) {
  config.validate();
  if (input_dim == 0) throw ShapeError("input dimension must be positive");
  MlpModel m;
  m.config_ = config;
  m.input_dim_ = input_dim;
  m.standardizer_ = Standardizer::identity(input_dim);
  std::size_t in = input_dim;
  auto add = [&](std::size_t out) {
    m.layers_.push_back({in, out, std::vector<double>(in * out, 0.0), std::vector<double>(out, 0.0)});
    in = out;
  };
  for (auto h : config.hidden) add(h);
  add(2);
  return m;
}

MlpModel MlpModel::initialize(const MlpConfig& config, std::size_t input_dim) {
  MlpModel m = zeros(config, input_dim);
  Rng rng(derive_seed({config.seed, 0x696e6974ULL}));
  for (std::size_t l = 0; l + 1 < m.layers_.size(); ++l) {
    auto& L = m.layers_[l];
    const double limit = std::sqrt(6.0 / static_cast<double>(L.in));
    for (auto& w : L.weights) w = rng.uniform(-limit, limit);
  }
  return m;
}

void MlpModel::set_standardizer(Standardizer s) {
  if (s.mean.size() != input_dim_ || s.scale.size() != input_dim_) throw ShapeError("standardizer dimension mismatch");
  for (double v : s.scale) {
    if (!(v > 0.0) || !std::isfinite(v)) throw DataError("standardizer scale must be positive");
  }
  standardizer_ = std::move(s);
}

std::size_t MlpModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& L : layers_) n += L.weights.size() + L.bias.size();
  return n;
}

void MlpModel::check_input(std::span<const double> x) const {
  if (x.size() != input_dim_) {
    throw ShapeError("input has " + std::to_string(x.size()) + " features, model expects " + std::to_string(input_dim_));
  }
  for (double v : x) {
    if (!std::isfinite(v)) throw DataError("non-finite model input");
  }
}

std::array<double, 2> MlpModel::predict_distribution(std::span<const double> x) const {
  check_input(x);
  std::vector<double> a(input_dim_);
  standardizer_.apply(x, a);
  std::vector<double> next;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& L = layers_[l];
    next.assign(L.out, 0.0);
    for (std::size_t o = 0; o < L.out; ++o) {
      const double* w = L.weights.data() + o * L.in;
      double z = L.bias[o];
      for (std::size_t i = 0; i < L.in; ++i) z += w[i] * a[i];
      next[o] = l + 1 < layers_.size() ? std::max(z, 0.0) : z;
    }
    a.swap(next);
  }
  const double mx = std::max(a[0], a[1]);
  const double e0 = std::exp(a[0] - mx);
  const double e1 = std::exp(a[1] - mx);
  const double p1 = e1 / (e0 + e1);
  return {1.0 - p1, p1};
}

double MlpModel::loss(std::span<const double> x, int label) const {
  const auto p = predict_distribution(x);
  return -std::log(std::max(p[label == 1 ? 1 : 0], 1e-300));
}

double MlpModel::mean_loss(std::span<const Sample> data) const {
  if (data.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& s : data) sum += loss(s.x, s.label);
  return sum / static_cast<double>(data.size());
}

std::vector<DenseLayer> MlpModel::gradients(std::span<const double> x, int label) const {
  check_input(x);
  const std::size_t n = layers_.size();
  std::vector<std::vector<double>> pre(n);
  std::vector<std::vector<double>> act(n + 1);
  act[0].resize(input_dim_);
  standardizer_.apply(x, act[0]);
  for (std::size_t l = 0; l < n; ++l) {
    const auto& L = layers_[l];
    pre[l].resize(L.out);
    act[l + 1].resize(L.out);
    for (std::size_t o = 0; o < L.out; ++o) {
      double z = L.bias[o];
      for (std::size_t i = 0; i < L.in; ++i) z += L.weights[o * L.in + i] * act[l][i];
      pre[l][o] = z;
      act[l + 1][o] = l + 1 < n ? std::max(z, 0.0) : z;
    }
  }
  const double mx = std::max(pre[n - 1][0], pre[n - 1][1]);
  const double e0 = std::exp(pre[n - 1][0] - mx);
  const double e1 = std::exp(pre[n - 1][1] - mx);
  std::vector<double> delta{e0 / (e0 + e1) - (label == 0 ? 1.0 : 0.0), e1 / (e0 + e1) - (label == 1 ? 1.0 : 0.0)};

  std::vector<DenseLayer> grads(n);
  for (std::size_t l = n; l-- > 0;) {
    const auto& L = layers_[l];
    auto& G = grads[l];
    G = {L.in, L.out, std::vector<double>(L.weights.size()), delta};
    for (std::size_t o = 0; o < L.out; ++o) {
      for (std::size_t i = 0; i < L.in; ++i) G.weights[o * L.in + i] = delta[o] * act[l][i];
    }
    if (l == 0) break;
    std::vector<double> prev(L.in, 0.0);
    for (std::size_t o = 0; o < L.out; ++o) {
      for (std::size_t i = 0; i < L.in; ++i) prev[i] += L.weights[o * L.in + i] * delta[o];
    }
    for (std::size_t i = 0; i < L.in; ++i) {
      if (pre[l - 1][i] <= 0.0) prev[i] = 0.0;
    }
    delta.swap(prev);
  }
  return grads;
}

bool operator==(const MlpModel& a, const MlpModel& b) {
  if (!(a.config_ == b.config_) || a.input_dim_ != b.input_dim_ || a.layers_.size() != b.layers_.size()) return false;
  if (a.standardizer_.mean != b.standardizer_.mean || a.standardizer_.scale != b.standardizer_.scale) return false;
  for (std::size_t l = 0; l < a.layers_.size(); ++l) {
    if (a.layers_[l].weights != b.layers_[l].weights || a.layers_[l].bias != b.layers_[l].bias) return false;
  }
  return true;
}

MlpModel train(const MlpConfig& config, std::span<const Sample> data) {
  if (data.empty()) throw InsufficientDataError("training set is empty");
  MlpModel model = MlpModel::initialize(config, data.front().x.size());
  check_dataset(model, data);
  std::vector<std::vector<double>> xs;
  xs.reserve(data.size());
  for (const auto& s : data) xs.push_back(s.x);
  model.set_standardizer(Standardizer::fit(xs));
  run_epoch(model, data, derive_seed({config.seed, 0x73687566ULL}));
  return model;
}

MlpModel finetune(const MlpModel& model, std::span<const Sample> data) {
  MlpModel tuned = model;
  if (data.empty()) return tuned;
  check_dataset(tuned, data);
  run_epoch(tuned, data, derive_seed({model.config().seed, 0x66696e65ULL, data.size()}));
  return tuned;
}

GradientCheckReport gradient_check(const MlpModel& model, std::span<const double> x, int label, double tolerance,
                                   double analytic_scale) {
  GradientCheckReport report;
  const auto grads = model.gradients(x, label);
  MlpModel probe = model;
  auto compare = [&](double& param, double analytic) {
    const double saved = param;
    param = saved + kFiniteStep;
    const double up = probe.loss(x, label);
    param = saved - kFiniteStep;
    const double down = probe.loss(x, label);
    param = saved;
    const double numeric = (up - down) / (2.0 * kFiniteStep);
    const double a = analytic * analytic_scale;
    if (!std::isfinite(a) || !std::isfinite(numeric)) {
      report.all_finite = false;
      return;
    }
    const double err = std::abs(a - numeric) / std::max(std::abs(a) + std::abs(numeric), kRelativeFloor);
    report.max_relative_error = std::max(report.max_relative_error, err);
    ++report.parameters;
  };
  for (std::size_t l = 0; l < grads.size(); ++l) {
    auto& L = probe.layers()[l];
    for (std::size_t k = 0; k < L.weights.size(); ++k) compare(L.weights[k], grads[l].weights[k]);
    for (std::size_t k = 0; k < L.bias.size(); ++k) compare(L.bias[k], grads[l].bias[k]);
  }
  report.pass = report.all_finite && report.max_relative_error <= tolerance;
  return report;
}

nlohmann::json model_to_json(const MlpModel& m) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& L : m.layers()) {
    layers.push_back({{"in", L.in}, {"out", L.out}, {"weights", L.weights}, {"bias", L.bias}});
  }
  return {{"format", "rehab-mlp"},
          {"version", kModelFormatVersion},
          {"config",
           {{"hidden", m.config().hidden}, {"learning_rate", m.config().learning_rate}, {"seed", m.config().seed}}},
          {"input_dim", m.input_dim()},
          {"standardizer", {{"mean", m.standardizer().mean}, {"scale", m.standardizer().scale}}},
          {"layers", std::move(layers)}};
}

MlpModel model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "rehab-mlp") throw ParseError("not a model file");
    const int version = j.at("version").get<int>();
    if (version != kModelFormatVersion) throw VersionError("model format version " + std::to_string(version) + " not supported");
    MlpConfig config{j.at("config").at("hidden").get<std::vector<std::size_t>>(),
                     j.at("config").at("learning_rate").get<double>(), j.at("config").at("seed").get<std::uint64_t>()};
    MlpModel m = MlpModel::zeros(config, j.at("input_dim").get<std::size_t>());
    const auto& layers = j.at("layers");
    if (layers.size() != m.layers().size()) throw ShapeError("model file layer count does not match its config");
    for (std::size_t l = 0; l < layers.size(); ++l) {
      auto& L = m.layers()[l];
      auto w = layers[l].at("weights").get<std::vector<double>>();
      auto b = layers[l].at("bias").get<std::vector<double>>();
      if (w.size() != L.weights.size() || b.size() != L.bias.size()) throw ShapeError("model file layer shape mismatch");
      for (double v : w) {
        if (!std::isfinite(v)) throw DataError("non-finite weight in model file");
      }
      L.weights = std::move(w);
      L.bias = std::move(b);
    }
    m.set_standardizer({j.at("standardizer").at("mean").get<std::vector<double>>(),
                        j.at("standardizer").at("scale").get<std::vector<double>>()});
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed model file: ") + e.what());
  }
}

void save_model(const MlpModel& m, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write model file " + path.string());
  out << model_to_json(m).dump() << '\n';
  if (!out) throw IoError("write failure on " + path.string());
}

MlpModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed model file: ") + e.what());
  }
  return model_from_json(j);
}

}  // namespace rehab::ml
