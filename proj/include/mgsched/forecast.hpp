#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mgsched/random.hpp"

namespace mgsched::forecast {

// Min-max scaling to [0, 1]. A constant series maps to 0.
struct Normalization {
  double min = 0.0;
  double max = 1.0;

  static Normalization fit(std::span<const double> values);
  double normalize(double v) const;
  double denormalize(double v) const;
  std::vector<double> normalize(std::span<const double> v) const;
  std::vector<double> denormalize(std::span<const double> v) const;

  bool operator==(const Normalization&) const = default;
};

struct WindowedDataset {
  std::size_t m = 0;
  std::size_t n = 0;
  std::vector<std::vector<double>> inputs;
  std::vector<std::vector<double>> targets;
  Normalization norm;

  std::size_t size() const { return inputs.size(); }
};

// Every (m inputs, n following targets) pair of the series, as given. The
// stored normalization is fitted on the same series but not applied.
WindowedDataset make_windows(std::span<const double> series, std::size_t m, std::size_t n);

// Normalization fitted on the first `split` share of the series. Training
// windows lie inside that share; test windows have targets entirely after
// it (their inputs may reach back into it). Both are normalized.
struct SplitData {
  WindowedDataset train;
  WindowedDataset test;
  Normalization norm;
  std::size_t split_index = 0;
};

SplitData split_series(std::span<const double> series, std::size_t m, std::size_t n,
                       double split);

struct Metrics {
  std::optional<double> mape;  // percent; empty when an actual value is zero
  double mae = 0.0;
  double rmse = 0.0;
};

Metrics evaluate(std::span<const double> predicted, std::span<const double> actual);

// One LSTM direction. Gate rows are stacked input, forget, candidate, output,
// H rows each: wx is 4H x D, wh is 4H x H, b has 4H entries.
struct LstmParams {
  Eigen::MatrixXd wx;
  Eigen::MatrixXd wh;
  Eigen::VectorXd b;

  std::size_t hidden() const { return static_cast<std::size_t>(wh.cols()); }
  std::size_t input() const { return static_cast<std::size_t>(wx.cols()); }
};

struct LstmState {
  Eigen::VectorXd h;
  Eigen::VectorXd c;
};

LstmParams zero_lstm(std::size_t input, std::size_t hidden);

LstmState lstm_step(const LstmParams& p, const Eigen::VectorXd& x, const Eigen::VectorXd& h_prev,
                    const Eigen::VectorXd& c_prev);

enum class ModelKind { Blstm, Lstm, Mlp };
enum class Pooling { Final, Mean };

std::string_view to_string(ModelKind k);
ModelKind parse_model_kind(std::string_view s);

struct NetworkConfig {
  ModelKind kind = ModelKind::Blstm;
  std::size_t window = 48;
  std::size_t horizon = 24;
  std::size_t hidden = 128;
  std::size_t layers = 2;
  double dropout = 0.3;
  Pooling pooling = Pooling::Final;

  bool operator==(const NetworkConfig&) const = default;
};

void validate(const NetworkConfig& config);

struct Tensor {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t offset = 0;

  bool operator==(const Tensor&) const = default;
};

// Fixed alignment keeps Eigen's vectorized kernels, and so the rounding of
// every result, independent of where the allocator puts the buffer.
using ParamVector = std::vector<double, Eigen::aligned_allocator<double>>;

// All weights live in one flat vector; tensors are views into it.
//
// Recurrent kinds: layer l has forward (and for Blstm backward) LstmParams.
// Layer 1 reads the window; later layers read relu(forward + backward) of
// the layer below at each step. The head maps the last layer's forward state
// after the final step and backward state after the first step (or their
// means over all steps) through separate matrices, plus a bias.
// Mlp: `layers` dense relu layers of width `hidden`, then the head.
// Dropout sits right before the head, in training only.
class Network {
 public:
  Network() = default;
  explicit Network(const NetworkConfig& config);

  const NetworkConfig& config() const { return config_; }
  const std::vector<Tensor>& tensors() const { return tensors_; }
  ParamVector& params() { return params_; }
  const ParamVector& params() const { return params_; }
  const Tensor& tensor(std::string_view name) const;

  Eigen::Map<Eigen::MatrixXd> view(const Tensor& t);
  Eigen::Map<const Eigen::MatrixXd> view(const Tensor& t) const;

  LstmParams lstm(std::size_t layer, bool backward) const;
  void set_lstm(std::size_t layer, bool backward, const LstmParams& p);

  Normalization norm;

  bool operator==(const Network&) const = default;

 private:
  void add(std::string name, std::size_t rows, std::size_t cols);

  NetworkConfig config_;
  std::vector<Tensor> tensors_;
  ParamVector params_;
};

// Every parameter uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)]; for the
// recurrent blocks fan_in is H.
Network make_network(const NetworkConfig& config, std::uint64_t seed);

// Network output for one normalized window (dropout off).
Eigen::VectorXd forward(const Network& net, std::span<const double> window);

// Alias kept for the bidirectional case.
inline Eigen::VectorXd blstm_forward(const Network& net, std::span<const double> window) {
  return forward(net, window);
}

// Raw window in, raw forecast out, using the network's normalization.
std::vector<double> predict(const Network& net, std::span<const double> window);

// Mean squared error over the batch (columns of inputs / targets) and its
// gradient with respect to params(). Dropout masks are drawn from `dropout`
// when given; a copy of the same generator reproduces the same masks.
double loss_and_gradient(const Network& net, const Eigen::MatrixXd& inputs,
                         const Eigen::MatrixXd& targets, std::vector<double>& grad,
                         Rng* dropout = nullptr);

struct TrainConfig {
  std::size_t epochs = 250;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t batch_size = 32;
  std::uint64_t seed = 1;
  double split = 0.8;
};

void validate(const TrainConfig& config);

struct TrainResult {
  Network net;
  std::vector<double> loss_trace;  // mean training loss per epoch
};

// Minibatch ADAM on mean squared error. Throws ErrorCode::Diverged on a
// non-finite loss.
TrainResult train(Network net, const WindowedDataset& data, const TrainConfig& config);

// Mean squared error of the network on a normalized dataset, dropout off.
double dataset_loss(const Network& net, const WindowedDataset& data);

struct ModelReport {
  TrainResult trained;
  Metrics test;                          // in series units
  std::vector<std::vector<double>> test_predictions;  // raw, one per test window
};

// Split, normalize, build, train and score one model on a raw series.
ModelReport fit_and_evaluate(std::span<const double> series, const NetworkConfig& net,
                             const TrainConfig& config);

// Text format: header lines, then for each tensor "tensor <name> <rows> <cols>"
// followed by its values row by row. Doubles are printed shortest
// round-trip, so loading reproduces the parameters exactly.
std::string serialize_network(const Network& net);
Network parse_network(const std::string& text);
void save_network(const Network& net, const std::filesystem::path& path);
Network load_network(const std::filesystem::path& path);

// `timestamp,power_mw` rows.
std::vector<double> parse_series_csv(const std::string& text);
std::vector<double> load_series_csv(const std::filesystem::path& path);
std::string series_csv(std::span<const double> values);
void save_series_csv(std::span<const double> values, const std::filesystem::path& path);

}  // namespace mgsched::forecast
