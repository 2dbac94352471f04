#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "mgsched/error.hpp"
#include "mgsched/forecast.hpp"

using namespace mgsched;
using namespace mgsched::forecast;

namespace {

NetworkConfig tiny(ModelKind kind, Pooling pooling = Pooling::Final, double dropout = 0.0) {
  NetworkConfig c;
  c.kind = kind;
  c.window = 5;
  c.horizon = 2;
  c.hidden = 3;
  c.layers = 2;
  c.dropout = dropout;
  c.pooling = pooling;
  return c;
}

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform();
  return m;
}

// Worst relative gap between the analytic gradient and central differences
// with step 1e-4. Dropout masks come from copies of one generator, so every
// evaluation sees the same masks.
double gradient_error(const NetworkConfig& config) {
  auto net = make_network(config, 3);
  Rng data(9);
  const auto x = random_matrix(static_cast<Eigen::Index>(config.window), 4, data);
  const auto y = random_matrix(static_cast<Eigen::Index>(config.horizon), 4, data);
  const Rng masks(11);
  std::vector<double> grad, scratch;
  Rng m0 = masks;
  loss_and_gradient(net, x, y, grad, &m0);
  REQUIRE(grad.size() == net.params().size());
  const double h = 1e-4;
  double worst = 0.0;
  for (std::size_t k = 0; k < grad.size(); ++k) {
    const double p = net.params()[k];
    net.params()[k] = p + h;
    Rng m1 = masks;
    const double plus = loss_and_gradient(net, x, y, scratch, &m1);
    net.params()[k] = p - h;
    Rng m2 = masks;
    const double minus = loss_and_gradient(net, x, y, scratch, &m2);
    net.params()[k] = p;
    const double fd = (plus - minus) / (2 * h);
    const double scale = std::max({std::abs(fd), std::abs(grad[k]), 1e-8});
    worst = std::max(worst, std::abs(fd - grad[k]) / scale);
  }
  return worst;
}

std::vector<double> sine(std::size_t n) {
  std::vector<double> s(n);
  for (std::size_t t = 0; t < n; ++t) s[t] = 1.0 + 0.5 * std::sin(2 * std::numbers::pi * t / 24.0);
  return s;
}

}  // namespace

TEST_CASE("sliding windows") {
  const std::vector<double> s{1, 2, 3, 4, 5};
  const auto d = make_windows(s, 3, 1);
  REQUIRE(d.size() == 2);
  CHECK(d.inputs[0] == std::vector<double>{1, 2, 3});
  CHECK(d.targets[0] == std::vector<double>{4});
  CHECK(d.inputs[1] == std::vector<double>{2, 3, 4});
  CHECK(d.targets[1] == std::vector<double>{5});
  CHECK(make_windows(s, 3, 2).size() == 1);
  CHECK_THROWS_AS(make_windows(s, 4, 2), Error);

  const auto long_series = sine(200);
  const auto w = make_windows(long_series, 48, 24);
  CHECK(w.size() == 129);
  // Each input followed by its target is a contiguous slice of the series.
  for (std::size_t k = 0; k < w.size(); k += 16) {
    std::vector<double> joined = w.inputs[k];
    joined.insert(joined.end(), w.targets[k].begin(), w.targets[k].end());
    CHECK(std::equal(joined.begin(), joined.end(), long_series.begin() + static_cast<long>(k)));
  }
}

TEST_CASE("normalization") {
  const std::vector<double> v{3.0, -1.5, 7.25, 0.1};
  const auto n = Normalization::fit(v);
  CHECK(n.min == -1.5);
  CHECK(n.max == 7.25);
  for (double x : v) CHECK(std::abs(n.denormalize(n.normalize(x)) - x) < 1e-12);
  const auto flat = Normalization::fit(std::vector<double>(5, 2.0));
  CHECK(flat.normalize(2.0) == 0.0);
  CHECK(flat.denormalize(0.0) == 2.0);
}

TEST_CASE("train/test split uses the training share for scaling") {
  auto s = sine(300);
  s[299] = 50.0;  // outlier only in the test share
  const auto split = split_series(s, 48, 24, 0.8);
  CHECK(split.split_index == 240);
  CHECK(split.norm.max < 2.0);
  CHECK(split.train.size() == 240 - 72 + 1);
  CHECK(split.test.size() == 60 - 24 + 1);
  CHECK(split.test.targets.back().back() == doctest::Approx(split.norm.normalize(50.0)));
}

TEST_CASE("metrics by hand") {
  const std::vector<double> y{100, 200}, p{110, 190};
  const auto m = evaluate(p, y);
  REQUIRE(m.mape.has_value());
  CHECK(*m.mape == doctest::Approx(7.5));
  CHECK(m.mae == doctest::Approx(10.0));
  CHECK(m.rmse == doctest::Approx(10.0));
  const auto same = evaluate(y, y);
  CHECK(*same.mape == 0.0);
  CHECK(same.mae == 0.0);
  CHECK(same.rmse == 0.0);
  const auto zero = evaluate(std::vector<double>{1, 2}, std::vector<double>{0, 2});
  CHECK_FALSE(zero.mape.has_value());
  CHECK(zero.mae == doctest::Approx(0.5));
  CHECK(zero.rmse >= zero.mae);
}

TEST_CASE("LSTM cell by hand") {
  const auto p = zero_lstm(2, 1);
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(2, 0.7);
  auto s = lstm_step(p, x, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1));
  CHECK(s.h(0) == 0.0);
  CHECK(s.c(0) == 0.0);
  s = lstm_step(p, x, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1));
  CHECK(std::abs(s.c(0) - 0.5) < 1e-12);
  CHECK(std::abs(s.h(0) - 0.5 * std::tanh(0.5)) < 1e-12);
  CHECK(s.h(0) == doctest::Approx(0.23106).epsilon(1e-5));
}

TEST_CASE("gates keep the hidden state inside (-1, 1)") {
  Rng rng(4);
  LstmParams p = zero_lstm(3, 4);
  for (Eigen::Index i = 0; i < p.wx.size(); ++i) p.wx.data()[i] = rng.uniform(-20, 20);
  for (Eigen::Index i = 0; i < p.wh.size(); ++i) p.wh.data()[i] = rng.uniform(-20, 20);
  for (Eigen::Index i = 0; i < p.b.size(); ++i) p.b.data()[i] = rng.uniform(-20, 20);
  Eigen::VectorXd h = Eigen::VectorXd::Zero(4), c = Eigen::VectorXd::Zero(4);
  for (int t = 0; t < 50; ++t) {
    Eigen::VectorXd x(3);
    for (int d = 0; d < 3; ++d) x(d) = rng.uniform(-100, 100);
    const auto s = lstm_step(p, x, h, c);
    CHECK(s.h.cwiseAbs().maxCoeff() < 1.0);
    CHECK(s.c.cwiseAbs().maxCoeff() <= c.cwiseAbs().maxCoeff() + 1.0);
    h = s.h;
    c = s.c;
  }
}

TEST_CASE("all-zero network predicts its output bias") {
  for (auto kind : {ModelKind::Blstm, ModelKind::Lstm, ModelKind::Mlp}) {
    Network net(tiny(kind));
    auto b = net.view(net.tensor("head.b"));
    b(0, 0) = 0.25;
    b(1, 0) = -0.5;
    const std::vector<double> window{0.1, 0.9, 0.3, 0.4, 0.2};
    const auto y = forward(net, window);
    CHECK(y(0) == 0.25);
    CHECK(y(1) == -0.5);
  }
}

TEST_CASE("reversing the window and swapping directions leaves the output unchanged") {
  for (auto pooling : {Pooling::Final, Pooling::Mean}) {
    auto config = tiny(ModelKind::Blstm, pooling);
    config.hidden = 4;
    const auto net = make_network(config, 21);
    auto swapped = net;
    for (std::size_t l = 0; l < config.layers; ++l) {
      swapped.set_lstm(l, false, net.lstm(l, true));
      swapped.set_lstm(l, true, net.lstm(l, false));
    }
    swapped.view(swapped.tensor("head.wf")) = net.view(net.tensor("head.wb"));
    swapped.view(swapped.tensor("head.wb")) = net.view(net.tensor("head.wf"));
    const std::vector<double> window{0.1, 0.9, 0.3, 0.4, 0.2};
    const std::vector<double> reversed(window.rbegin(), window.rend());
    const auto a = forward(net, window);
    const auto b = forward(swapped, reversed);
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(forward(net, window) == a);
  }
}

TEST_CASE("wrong window length is refused") {
  const auto net = make_network(tiny(ModelKind::Blstm), 1);
  CHECK_THROWS_AS(forward(net, std::vector<double>{1, 2, 3}), Error);
}

TEST_CASE("analytic gradients match central differences") {
  for (auto kind : {ModelKind::Blstm, ModelKind::Lstm, ModelKind::Mlp}) {
    for (auto pooling : {Pooling::Final, Pooling::Mean}) {
      for (double dropout : {0.0, 0.3}) {
        CAPTURE(to_string(kind));
        CAPTURE(static_cast<int>(pooling));
        CAPTURE(dropout);
        CHECK(gradient_error(tiny(kind, pooling, dropout)) < 1e-4);
      }
    }
  }
}

TEST_CASE("dropout rate zero matches the dropout-free path exactly") {
  const auto net = make_network(tiny(ModelKind::Blstm), 5);
  Rng data(2);
  const auto x = random_matrix(5, 3, data);
  const auto y = random_matrix(2, 3, data);
  std::vector<double> g1, g2;
  Rng masks(8);
  const double a = loss_and_gradient(net, x, y, g1, &masks);
  const double b = loss_and_gradient(net, x, y, g2, nullptr);
  CHECK(a == b);
  CHECK(g1 == g2);
}

TEST_CASE("model files reload bit for bit") {
  auto config = tiny(ModelKind::Blstm, Pooling::Mean, 0.3);
  auto net = make_network(config, 13);
  net.norm = {0.125, 3.0 / 7.0};
  const auto back = parse_network(serialize_network(net));
  CHECK(back == net);
  const auto path = std::filesystem::temp_directory_path() / "mgsched_model_test.txt";
  save_network(net, path);
  CHECK(load_network(path) == net);
  CHECK_THROWS_AS(parse_network("not a model"), Error);
  auto text = serialize_network(net);
  CHECK_THROWS_AS(parse_network(text.substr(0, text.size() / 2)), Error);
}

TEST_CASE("series CSV") {
  const std::vector<double> s{0.5, 0.25, 1.0 / 3.0};
  CHECK(parse_series_csv(series_csv(s)) == s);
  CHECK_THROWS_AS(parse_series_csv(""), Error);
  CHECK_THROWS_AS(parse_series_csv("timestamp,power_mw\n0,abc\n"), Error);
}

TEST_CASE("training is reproducible") {
  NetworkConfig config = tiny(ModelKind::Blstm, Pooling::Final, 0.3);
  config.window = 12;
  config.horizon = 4;
  TrainConfig t;
  t.epochs = 3;
  t.batch_size = 8;
  const auto split = split_series(sine(120), 12, 4, 0.8);
  const auto a = train(make_network(config, 1), split.train, t);
  const auto b = train(make_network(config, 1), split.train, t);
  CHECK(a.loss_trace.size() == 3);
  CHECK(a.loss_trace == b.loss_trace);
  CHECK(a.net == b.net);
}

TEST_CASE("constant series is learned") {
  for (auto kind : {ModelKind::Blstm, ModelKind::Mlp}) {
    CAPTURE(to_string(kind));
    NetworkConfig config = tiny(kind, Pooling::Final, 0.3);
    config.window = 8;
    config.horizon = 4;
    config.hidden = 8;
    TrainConfig t;
    t.epochs = 150;
    t.batch_size = 8;
    t.learning_rate = 1e-2;
    const std::vector<double> series(100, 4.2);
    const auto report = fit_and_evaluate(series, config, t);
    CHECK(dataset_loss(report.trained.net, split_series(series, 8, 4, 0.8).train) < 1e-6);
    for (const auto& p : report.test_predictions) {
      for (double v : p) CHECK(v == doctest::Approx(4.2).epsilon(1e-3));
    }
  }
}

TEST_CASE("noiseless sine: training cuts the loss at least a hundredfold") {
  NetworkConfig config;
  config.kind = ModelKind::Blstm;
  config.hidden = 16;
  TrainConfig t;
  t.epochs = 60;
  t.learning_rate = 5e-3;
  const auto split = split_series(sine(400), 48, 24, 0.8);
  const auto start = make_network(config, 1);
  const double before = dataset_loss(start, split.train);
  const auto trained = train(start, split.train, t);
  const double after = dataset_loss(trained.net, split.train);
  MESSAGE("loss " << before << " -> " << after);
  CHECK(after * 100.0 <= before);
}

TEST_CASE("configuration checks") {
  NetworkConfig bad;
  bad.hidden = 0;
  CHECK_THROWS_AS(validate(bad), Error);
  bad = {};
  bad.dropout = 1.0;
  CHECK_THROWS_AS(validate(bad), Error);
  TrainConfig t;
  t.epochs = 0;
  CHECK_THROWS_AS(validate(t), Error);
  t = {};
  t.split = 1.0;
  CHECK_THROWS_AS(validate(t), Error);
  CHECK(parse_model_kind("ann") == ModelKind::Mlp);
  CHECK(to_string(ModelKind::Blstm) == "blstm");
}
