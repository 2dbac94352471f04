#include "mgsched/forecast.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

#include "format.hpp"
#include "mgsched/error.hpp"

namespace mgsched::forecast {

using detail::fmt;
using Eigen::MatrixXd;
using Eigen::VectorXd;

Normalization Normalization::fit(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::InvalidArgument, "cannot normalize an empty series");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return {*lo, *hi};
}

double Normalization::normalize(double v) const {
  const double span = max - min;
  return span > 0.0 ? (v - min) / span : v - min;
}

double Normalization::denormalize(double v) const {
  const double span = max - min;
  return span > 0.0 ? v * span + min : v + min;
}

std::vector<double> Normalization::normalize(std::span<const double> v) const {
  std::vector<double> out(v.size());
  std::transform(v.begin(), v.end(), out.begin(), [&](double x) { return normalize(x); });
  return out;
}

std::vector<double> Normalization::denormalize(std::span<const double> v) const {
  std::vector<double> out(v.size());
  std::transform(v.begin(), v.end(), out.begin(), [&](double x) { return denormalize(x); });
  return out;
}

WindowedDataset make_windows(std::span<const double> series, std::size_t m, std::size_t n) {
  if (m == 0 || n == 0) throw Error(ErrorCode::InvalidArgument, "window sizes must be at least 1");
  if (series.size() < m + n) {
    throw Error(ErrorCode::InvalidArgument,
                "series has " + std::to_string(series.size()) + " points, needs at least " +
                    std::to_string(m + n) + " for m=" + std::to_string(m) +
                    ", n=" + std::to_string(n));
  }
  WindowedDataset d;
  d.m = m;
  d.n = n;
  d.norm = Normalization::fit(series);
  const std::size_t count = series.size() - m - n + 1;
  d.inputs.reserve(count);
  d.targets.reserve(count);
  for (std::size_t s = 0; s < count; ++s) {
    d.inputs.emplace_back(series.begin() + s, series.begin() + s + m);
    d.targets.emplace_back(series.begin() + s + m, series.begin() + s + m + n);
  }
  return d;
}

SplitData split_series(std::span<const double> series, std::size_t m, std::size_t n,
                       double split) {
  if (!(split > 0.0 && split < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "split must lie in (0, 1)");
  }
  const auto cut = static_cast<std::size_t>(std::floor(split * static_cast<double>(series.size())));
  if (cut < m + n || series.size() - cut < n) {
    throw Error(ErrorCode::InvalidArgument,
                "series of " + std::to_string(series.size()) +
                    " points is too short to split for m=" + std::to_string(m) +
                    ", n=" + std::to_string(n));
  }
  SplitData out;
  out.split_index = cut;
  out.norm = Normalization::fit(series.first(cut));
  const auto scaled = out.norm.normalize(series);
  const std::span<const double> all(scaled);
  out.train = make_windows(all.first(cut), m, n);
  out.test = make_windows(all.subspan(cut - m), m, n);
  out.train.norm = out.norm;
  out.test.norm = out.norm;
  return out;
}

Metrics evaluate(std::span<const double> predicted, std::span<const double> actual) {
  if (predicted.size() != actual.size() || actual.empty()) {
    throw Error(ErrorCode::InvalidArgument, "metrics need equal, non-empty sequences");
  }
  double abs_sum = 0.0, sq_sum = 0.0, pct_sum = 0.0;
  bool pct_defined = true;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const double e = predicted[i] - actual[i];
    abs_sum += std::abs(e);
    sq_sum += e * e;
    if (actual[i] == 0.0) {
      pct_defined = false;
    } else {
      pct_sum += std::abs(e) / std::abs(actual[i]);
    }
  }
  const double count = static_cast<double>(actual.size());
  Metrics m;
  m.mae = abs_sum / count;
  m.rmse = std::sqrt(sq_sum / count);
  if (pct_defined) m.mape = 100.0 * pct_sum / count;
  return m;
}

LstmParams zero_lstm(std::size_t input, std::size_t hidden) {
  const auto h = static_cast<Eigen::Index>(hidden);
  return {MatrixXd::Zero(4 * h, static_cast<Eigen::Index>(input)), MatrixXd::Zero(4 * h, h),
          VectorXd::Zero(4 * h)};
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

LstmState lstm_step(const LstmParams& p, const VectorXd& x, const VectorXd& h_prev,
                    const VectorXd& c_prev) {
  const auto h = static_cast<Eigen::Index>(p.hidden());
  if (p.wx.rows() != 4 * h || p.wh.rows() != 4 * h || p.b.size() != 4 * h ||
      x.size() != p.wx.cols() || h_prev.size() != h || c_prev.size() != h) {
    throw Error(ErrorCode::InvalidArgument, "lstm_step shape mismatch");
  }
  const VectorXd g = p.wx * x + p.wh * h_prev + p.b;
  LstmState s;
  s.c.resize(h);
  s.h.resize(h);
  for (Eigen::Index k = 0; k < h; ++k) {
    const double in = sigmoid(g(k));
    const double forget = sigmoid(g(h + k));
    const double cand = std::tanh(g(2 * h + k));
    const double out = sigmoid(g(3 * h + k));
    s.c(k) = forget * c_prev(k) + in * cand;
    s.h(k) = out * std::tanh(s.c(k));
  }
  return s;
}

std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::Blstm: return "blstm";
    case ModelKind::Lstm: return "lstm";
    case ModelKind::Mlp: return "ann";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view s) {
  if (s == "blstm") return ModelKind::Blstm;
  if (s == "lstm") return ModelKind::Lstm;
  if (s == "ann" || s == "mlp") return ModelKind::Mlp;
  throw Error(ErrorCode::InvalidArgument, "unknown model kind '" + std::string(s) + "'");
}

void validate(const NetworkConfig& c) {
  if (c.window == 0 || c.horizon == 0 || c.hidden == 0 || c.layers == 0) {
    throw Error(ErrorCode::InvalidArgument, "window, horizon, hidden and layers must be >= 1");
  }
  if (!(c.dropout >= 0.0 && c.dropout < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "dropout must lie in [0, 1)");
  }
}

namespace {

bool recurrent(const NetworkConfig& c) { return c.kind != ModelKind::Mlp; }
bool bidirectional(const NetworkConfig& c) { return c.kind == ModelKind::Blstm; }

std::string lstm_name(std::size_t layer, bool backward, std::string_view part) {
  return "l" + std::to_string(layer + 1) + (backward ? ".bwd." : ".fwd.") + std::string(part);
}

std::string dense_name(std::size_t layer, std::string_view part) {
  return "dense" + std::to_string(layer + 1) + "." + std::string(part);
}

}  // namespace

Network::Network(const NetworkConfig& config) : config_(config) {
  validate(config);
  const std::size_t h = config.hidden;
  if (recurrent(config)) {
    for (std::size_t l = 0; l < config.layers; ++l) {
      const std::size_t in = l == 0 ? 1 : h;
      for (int dir = 0; dir < (bidirectional(config) ? 2 : 1); ++dir) {
        add(lstm_name(l, dir == 1, "wx"), 4 * h, in);
        add(lstm_name(l, dir == 1, "wh"), 4 * h, h);
        add(lstm_name(l, dir == 1, "b"), 4 * h, 1);
      }
    }
    add("head.wf", config.horizon, h);
    if (bidirectional(config)) add("head.wb", config.horizon, h);
  } else {
    for (std::size_t l = 0; l < config.layers; ++l) {
      add(dense_name(l, "w"), h, l == 0 ? config.window : h);
      add(dense_name(l, "b"), h, 1);
    }
    add("head.wf", config.horizon, h);
  }
  add("head.b", config.horizon, 1);
}

void Network::add(std::string name, std::size_t rows, std::size_t cols) {
  tensors_.push_back({std::move(name), rows, cols, params_.size()});
  params_.resize(params_.size() + rows * cols, 0.0);
}

const Tensor& Network::tensor(std::string_view name) const {
  for (const auto& t : tensors_) {
    if (t.name == name) return t;
  }
  throw Error(ErrorCode::InvalidArgument, "network has no tensor '" + std::string(name) + "'");
}

Eigen::Map<MatrixXd> Network::view(const Tensor& t) {
  return {params_.data() + t.offset, static_cast<Eigen::Index>(t.rows),
          static_cast<Eigen::Index>(t.cols)};
}

Eigen::Map<const MatrixXd> Network::view(const Tensor& t) const {
  return {params_.data() + t.offset, static_cast<Eigen::Index>(t.rows),
          static_cast<Eigen::Index>(t.cols)};
}

LstmParams Network::lstm(std::size_t layer, bool backward) const {
  return {view(tensor(lstm_name(layer, backward, "wx"))),
          view(tensor(lstm_name(layer, backward, "wh"))),
          view(tensor(lstm_name(layer, backward, "b")))};
}

void Network::set_lstm(std::size_t layer, bool backward, const LstmParams& p) {
  auto wx = view(tensor(lstm_name(layer, backward, "wx")));
  auto wh = view(tensor(lstm_name(layer, backward, "wh")));
  auto b = view(tensor(lstm_name(layer, backward, "b")));
  if (p.wx.rows() != wx.rows() || p.wx.cols() != wx.cols() || p.wh.rows() != wh.rows() ||
      p.wh.cols() != wh.cols() || p.b.size() != b.rows()) {
    throw Error(ErrorCode::InvalidArgument, "set_lstm shape mismatch");
  }
  wx = p.wx;
  wh = p.wh;
  b = p.b;
}

Network make_network(const NetworkConfig& config, std::uint64_t seed) {
  Network net(config);
  Rng rng(seed);
  const double recurrent_scale = 1.0 / std::sqrt(static_cast<double>(config.hidden));
  for (const auto& t : net.tensors()) {
    double scale = recurrent_scale;
    if (t.name.starts_with("dense")) {
      const auto& w = net.tensor(t.name.substr(0, t.name.size() - 1) + "w");
      scale = 1.0 / std::sqrt(static_cast<double>(w.cols));
    }
    for (std::size_t k = 0; k < t.rows * t.cols; ++k) {
      net.params()[t.offset + k] = rng.uniform(-scale, scale);
    }
  }
  return net;
}

namespace {

using ConstMap = Eigen::Map<const MatrixXd>;
using Map = Eigen::Map<MatrixXd>;

// Activations of one direction over the whole sequence; column block t holds
// time step t for every batch member.
struct DirCache {
  MatrixXd gates;  // activated i, f, g, o
  MatrixXd c;
  MatrixXd tanh_c;
  MatrixXd h;
};

struct LayerCache {
  MatrixXd input;   // D x (m * B)
  MatrixXd summed;  // pre-relu layer output fed upwards
  DirCache fwd, bwd;
};

struct Pass {
  Eigen::Index batch = 0;
  std::vector<LayerCache> layers;  // recurrent kinds
  std::vector<MatrixXd> dense_in;  // mlp: input of each dense layer
  std::vector<MatrixXd> dense_pre;
  MatrixXd feat_f, feat_b;  // head features before dropout
  MatrixXd mask_f, mask_b;  // empty when dropout is off
  MatrixXd y;
};

struct Weights {
  const Network& net;
  const ParamVector& params;

  ConstMap operator()(const std::string& name) const {
    const Tensor& t = net.tensor(name);
    return {params.data() + t.offset, static_cast<Eigen::Index>(t.rows),
            static_cast<Eigen::Index>(t.cols)};
  }
};

struct Grads {
  const Network& net;
  ParamVector& grad;

  Map operator()(const std::string& name) const {
    const Tensor& t = net.tensor(name);
    return {grad.data() + t.offset, static_cast<Eigen::Index>(t.rows),
            static_cast<Eigen::Index>(t.cols)};
  }
};

// Written through exp so Eigen vectorizes them; std::tanh is scalar only.
template <typename M>
auto fast_sigmoid(const M& x) {
  return (1.0 + (-x.array()).exp()).inverse().matrix();
}

template <typename M>
auto fast_tanh(const M& x) {
  return (1.0 - 2.0 / ((2.0 * x.array()).exp() + 1.0)).matrix();
}

void run_direction(const ConstMap& wx, const ConstMap& wh, const ConstMap& b, const MatrixXd& x,
                   Eigen::Index steps, Eigen::Index batch, bool reverse, DirCache& out) {
  const Eigen::Index h = wh.cols();
  out.gates.noalias() = wx * x;
  out.gates.colwise() += b.col(0);
  out.c.resize(h, steps * batch);
  out.tanh_c.resize(h, steps * batch);
  out.h.resize(h, steps * batch);
  MatrixXd h_prev = MatrixXd::Zero(h, batch);
  MatrixXd c_prev = MatrixXd::Zero(h, batch);
  for (Eigen::Index s = 0; s < steps; ++s) {
    const Eigen::Index t = reverse ? steps - 1 - s : s;
    auto g = out.gates.middleCols(t * batch, batch);
    if (s > 0) g.noalias() += wh * h_prev;
    g.topRows(2 * h) = fast_sigmoid(g.topRows(2 * h));
    g.middleRows(2 * h, h) = fast_tanh(g.middleRows(2 * h, h));
    g.bottomRows(h) = fast_sigmoid(g.bottomRows(h));
    auto c = out.c.middleCols(t * batch, batch);
    c = g.middleRows(h, h).cwiseProduct(c_prev) + g.topRows(h).cwiseProduct(g.middleRows(2 * h, h));
    auto tc = out.tanh_c.middleCols(t * batch, batch);
    tc = fast_tanh(c);
    auto hh = out.h.middleCols(t * batch, batch);
    hh = g.bottomRows(h).cwiseProduct(tc);
    h_prev = hh;
    c_prev = c;
  }
}

// dh holds the gradient arriving at every step's output. Adds parameter
// gradients and, if dx is given, writes the gradient for the inputs.
void backprop_direction(const ConstMap& wx, const ConstMap& wh, const MatrixXd& x,
                        const DirCache& cache, const MatrixXd& dh, Eigen::Index steps,
                        Eigen::Index batch, bool reverse, Map dwx, Map dwh, Map db,
                        MatrixXd* dx) {
  const Eigen::Index h = wh.cols();
  MatrixXd dgates(4 * h, steps * batch);
  MatrixXd dh_next = MatrixXd::Zero(h, batch);
  MatrixXd dc_next = MatrixXd::Zero(h, batch);
  MatrixXd h_prevs = MatrixXd::Zero(h, steps * batch);  // recurrent input at each t
  for (Eigen::Index s = steps; s-- > 0;) {
    const Eigen::Index t = reverse ? steps - 1 - s : s;
    const auto cols = [&](const MatrixXd& m) { return m.middleCols(t * batch, batch); };
    const auto g = cols(cache.gates);
    const auto in = g.topRows(h).array();
    const auto forget = g.middleRows(h, h).array();
    const auto cand = g.middleRows(2 * h, h).array();
    const auto out = g.bottomRows(h).array();
    const auto tc = cols(cache.tanh_c).array();
    MatrixXd c_prev, h_prev;
    if (s > 0) {
      const Eigen::Index tp = reverse ? t + 1 : t - 1;
      c_prev = cache.c.middleCols(tp * batch, batch);
      h_prev = cache.h.middleCols(tp * batch, batch);
    } else {
      c_prev = MatrixXd::Zero(h, batch);
      h_prev = MatrixXd::Zero(h, batch);
    }
    const MatrixXd dh_t = cols(dh) + dh_next;
    const Eigen::ArrayXXd dc = dc_next.array() + dh_t.array() * out * (1.0 - tc * tc);
    auto dg = dgates.middleCols(t * batch, batch);
    dg.topRows(h) = (dc * cand * in * (1.0 - in)).matrix();
    dg.middleRows(h, h) = (dc * c_prev.array() * forget * (1.0 - forget)).matrix();
    dg.middleRows(2 * h, h) = (dc * in * (1.0 - cand * cand)).matrix();
    dg.bottomRows(h) = (dh_t.array() * tc * out * (1.0 - out)).matrix();
    dc_next = (dc * forget).matrix();
    dh_next.noalias() = wh.transpose() * dg;
    h_prevs.middleCols(t * batch, batch) = h_prev;
  }
  dwx.noalias() += dgates * x.transpose();
  dwh.noalias() += dgates * h_prevs.transpose();
  db.col(0) += dgates.rowwise().sum();
  if (dx) dx->noalias() = wx.transpose() * dgates;
}

// Inputs arrive as m x B (one window per column); recurrent layers want the
// sequence as 1 x (m * B) with time-major column blocks.
MatrixXd sequence_input(const MatrixXd& inputs) {
  const Eigen::Index m = inputs.rows(), batch = inputs.cols();
  MatrixXd x(1, m * batch);
  for (Eigen::Index t = 0; t < m; ++t) x.middleCols(t * batch, batch) = inputs.row(t);
  return x;
}

MatrixXd draw_mask(Eigen::Index rows, Eigen::Index cols, double rate, Rng& rng) {
  MatrixXd mask(rows, cols);
  const double keep = 1.0 / (1.0 - rate);
  // Column by column, so each example gets its own mask.
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) mask(i, j) = rng.uniform() < rate ? 0.0 : keep;
  }
  return mask;
}

Pass run_forward(const Network& net, const ParamVector& params, const MatrixXd& inputs,
                 Rng* dropout) {
  const NetworkConfig& cfg = net.config();
  if (inputs.rows() != static_cast<Eigen::Index>(cfg.window)) {
    throw Error(ErrorCode::InvalidArgument,
                "window length " + std::to_string(inputs.rows()) + " does not match network (" +
                    std::to_string(cfg.window) + ")");
  }
  const Weights w{net, params};
  Pass pass;
  const Eigen::Index batch = inputs.cols();
  const auto steps = static_cast<Eigen::Index>(cfg.window);
  pass.batch = batch;
  if (recurrent(cfg)) {
    const bool both = bidirectional(cfg);
    pass.layers.resize(cfg.layers);
    for (std::size_t l = 0; l < cfg.layers; ++l) {
      LayerCache& lc = pass.layers[l];
      lc.input = l == 0 ? sequence_input(inputs)
                        : MatrixXd(pass.layers[l - 1].summed.cwiseMax(0.0));
      run_direction(w(lstm_name(l, false, "wx")), w(lstm_name(l, false, "wh")),
                    w(lstm_name(l, false, "b")), lc.input, steps, batch, false, lc.fwd);
      if (both) {
        run_direction(w(lstm_name(l, true, "wx")), w(lstm_name(l, true, "wh")),
                      w(lstm_name(l, true, "b")), lc.input, steps, batch, true, lc.bwd);
      }
      if (l + 1 < cfg.layers) lc.summed = both ? MatrixXd(lc.fwd.h + lc.bwd.h) : lc.fwd.h;
    }
    const LayerCache& top = pass.layers.back();
    if (cfg.pooling == Pooling::Final) {
      pass.feat_f = top.fwd.h.middleCols((steps - 1) * batch, batch);
      if (both) pass.feat_b = top.bwd.h.leftCols(batch);
    } else {
      pass.feat_f = MatrixXd::Zero(top.fwd.h.rows(), batch);
      for (Eigen::Index t = 0; t < steps; ++t) pass.feat_f += top.fwd.h.middleCols(t * batch, batch);
      pass.feat_f /= static_cast<double>(steps);
      if (both) {
        pass.feat_b = MatrixXd::Zero(top.bwd.h.rows(), batch);
        for (Eigen::Index t = 0; t < steps; ++t) {
          pass.feat_b += top.bwd.h.middleCols(t * batch, batch);
        }
        pass.feat_b /= static_cast<double>(steps);
      }
    }
  } else {
    MatrixXd a = inputs;
    for (std::size_t l = 0; l < cfg.layers; ++l) {
      MatrixXd z = w(dense_name(l, "w")) * a;
      z.colwise() += w(dense_name(l, "b")).col(0);
      pass.dense_in.push_back(std::move(a));
      a = z.cwiseMax(0.0);
      pass.dense_pre.push_back(std::move(z));
    }
    pass.feat_f = std::move(a);
  }

  const bool drop = dropout && cfg.dropout > 0.0;
  if (drop) {
    pass.mask_f = draw_mask(pass.feat_f.rows(), batch, cfg.dropout, *dropout);
    if (pass.feat_b.size()) pass.mask_b = draw_mask(pass.feat_b.rows(), batch, cfg.dropout, *dropout);
  }
  pass.y = w("head.wf") * (drop ? MatrixXd(pass.feat_f.cwiseProduct(pass.mask_f)) : pass.feat_f);
  if (pass.feat_b.size()) {
    pass.y.noalias() +=
        w("head.wb") * (drop ? MatrixXd(pass.feat_b.cwiseProduct(pass.mask_b)) : pass.feat_b);
  }
  pass.y.colwise() += w("head.b").col(0);
  return pass;
}

void run_backward(const Network& net, const Pass& pass, const MatrixXd& dy,
                  ParamVector& grad) {
  const NetworkConfig& cfg = net.config();
  const Weights w{net, net.params()};
  const Grads g{net, grad};
  const Eigen::Index batch = pass.batch;
  const auto steps = static_cast<Eigen::Index>(cfg.window);
  const bool drop = pass.mask_f.size() > 0;

  g("head.b").col(0) += dy.rowwise().sum();
  g("head.wf").noalias() +=
      dy * (drop ? MatrixXd(pass.feat_f.cwiseProduct(pass.mask_f)) : pass.feat_f).transpose();
  MatrixXd df = w("head.wf").transpose() * dy;
  if (drop) df = df.cwiseProduct(pass.mask_f);
  MatrixXd db_feat;
  if (pass.feat_b.size()) {
    g("head.wb").noalias() +=
        dy * (drop ? MatrixXd(pass.feat_b.cwiseProduct(pass.mask_b)) : pass.feat_b).transpose();
    db_feat = w("head.wb").transpose() * dy;
    if (drop) db_feat = db_feat.cwiseProduct(pass.mask_b);
  }

  if (!recurrent(cfg)) {
    MatrixXd da = std::move(df);
    for (std::size_t l = cfg.layers; l-- > 0;) {
      const MatrixXd dz = (pass.dense_pre[l].array() > 0.0).select(da, 0.0);
      g(dense_name(l, "w")).noalias() += dz * pass.dense_in[l].transpose();
      g(dense_name(l, "b")).col(0) += dz.rowwise().sum();
      if (l > 0) da = w(dense_name(l, "w")).transpose() * dz;
    }
    return;
  }

  const bool both = bidirectional(cfg);
  const Eigen::Index h = static_cast<Eigen::Index>(cfg.hidden);
  MatrixXd dh_f = MatrixXd::Zero(h, steps * batch);
  MatrixXd dh_b = both ? MatrixXd::Zero(h, steps * batch) : MatrixXd();
  if (cfg.pooling == Pooling::Final) {
    dh_f.middleCols((steps - 1) * batch, batch) = df;
    if (both) dh_b.leftCols(batch) = db_feat;
  } else {
    const double scale = 1.0 / static_cast<double>(steps);
    for (Eigen::Index t = 0; t < steps; ++t) {
      dh_f.middleCols(t * batch, batch) = df * scale;
      if (both) dh_b.middleCols(t * batch, batch) = db_feat * scale;
    }
  }
  for (std::size_t l = cfg.layers; l-- > 0;) {
    const LayerCache& lc = pass.layers[l];
    MatrixXd dx_f, dx_b;
    const bool need_dx = l > 0;
    backprop_direction(w(lstm_name(l, false, "wx")), w(lstm_name(l, false, "wh")), lc.input,
                       lc.fwd, dh_f, steps, batch, false, g(lstm_name(l, false, "wx")),
                       g(lstm_name(l, false, "wh")), g(lstm_name(l, false, "b")),
                       need_dx ? &dx_f : nullptr);
    if (both) {
      backprop_direction(w(lstm_name(l, true, "wx")), w(lstm_name(l, true, "wh")), lc.input,
                         lc.bwd, dh_b, steps, batch, true, g(lstm_name(l, true, "wx")),
                         g(lstm_name(l, true, "wh")), g(lstm_name(l, true, "b")),
                         need_dx ? &dx_b : nullptr);
    }
    if (!need_dx) break;
    if (both) dx_f += dx_b;
    // Through the relu into the layer below, whose outputs were summed.
    const MatrixXd ds = (pass.layers[l - 1].summed.array() > 0.0).select(dx_f, 0.0);
    dh_f = ds;
    if (both) dh_b = ds;
  }
}

MatrixXd columns(const std::vector<std::vector<double>>& rows, std::span<const std::size_t> pick,
                 std::size_t len) {
  MatrixXd out(static_cast<Eigen::Index>(len), static_cast<Eigen::Index>(pick.size()));
  for (std::size_t j = 0; j < pick.size(); ++j) {
    const auto& r = rows[pick[j]];
    for (std::size_t i = 0; i < len; ++i) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r[i];
    }
  }
  return out;
}

MatrixXd forward_batch(const Network& net, const MatrixXd& inputs) {
  return run_forward(net, net.params(), inputs, nullptr).y;
}

}  // namespace

VectorXd forward(const Network& net, std::span<const double> window) {
  if (window.size() != net.config().window) {
    throw Error(ErrorCode::InvalidArgument,
                "window length " + std::to_string(window.size()) + " does not match network (" +
                    std::to_string(net.config().window) + ")");
  }
  const MatrixXd x = Eigen::Map<const MatrixXd>(window.data(),
                                                static_cast<Eigen::Index>(window.size()), 1);
  return forward_batch(net, x).col(0);
}

std::vector<double> predict(const Network& net, std::span<const double> window) {
  const auto scaled = net.norm.normalize(window);
  const VectorXd y = forward(net, scaled);
  return net.norm.denormalize(std::span<const double>(y.data(), static_cast<std::size_t>(y.size())));
}

double loss_and_gradient(const Network& net, const MatrixXd& inputs, const MatrixXd& targets,
                         std::vector<double>& grad, Rng* dropout) {
  if (targets.rows() != static_cast<Eigen::Index>(net.config().horizon) ||
      targets.cols() != inputs.cols() || inputs.cols() == 0) {
    throw Error(ErrorCode::InvalidArgument, "batch shape does not match network");
  }
  const Pass pass = run_forward(net, net.params(), inputs, dropout);
  const MatrixXd err = pass.y - targets;
  const double count = static_cast<double>(err.size());
  ParamVector aligned(net.params().size(), 0.0);
  run_backward(net, pass, err * (2.0 / count), aligned);
  grad.assign(aligned.begin(), aligned.end());
  return err.squaredNorm() / count;
}

void validate(const TrainConfig& c) {
  if (c.epochs < 1) throw Error(ErrorCode::InvalidArgument, "epochs must be >= 1");
  if (c.batch_size < 1) throw Error(ErrorCode::InvalidArgument, "batch size must be >= 1");
  if (!(c.learning_rate > 0.0)) throw Error(ErrorCode::InvalidArgument, "learning rate must be > 0");
  if (!(c.beta1 >= 0.0 && c.beta1 < 1.0 && c.beta2 >= 0.0 && c.beta2 < 1.0 && c.epsilon > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "ADAM betas must lie in [0, 1) and epsilon be > 0");
  }
  if (!(c.split > 0.0 && c.split < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "split must lie in (0, 1)");
  }
}

TrainResult train(Network net, const WindowedDataset& data, const TrainConfig& config) {
  validate(config);
  if (data.size() == 0) throw Error(ErrorCode::InvalidArgument, "training set is empty");
  if (data.m != net.config().window || data.n != net.config().horizon) {
    throw Error(ErrorCode::InvalidArgument, "dataset window sizes do not match network");
  }
  Rng order_rng(config.seed);
  Rng dropout_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  const std::size_t np = net.params().size();
  std::vector<double> m1(np, 0.0), m2(np, 0.0), grad;
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  TrainResult result;
  double b1t = 1.0, b2t = 1.0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[order_rng.index(i)]);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t count = std::min(config.batch_size, order.size() - start);
      const std::span<const std::size_t> pick(order.data() + start, count);
      const MatrixXd x = columns(data.inputs, pick, data.m);
      const MatrixXd y = columns(data.targets, pick, data.n);
      const double loss = loss_and_gradient(net, x, y, grad, &dropout_rng);
      if (!std::isfinite(loss)) {
        throw Error(ErrorCode::Diverged, "training diverged at epoch " + std::to_string(epoch + 1) +
                                             ": loss is " + fmt(loss));
      }
      total += loss * static_cast<double>(count);
      b1t *= config.beta1;
      b2t *= config.beta2;
      const double step = config.learning_rate;
      auto& p = net.params();
      for (std::size_t k = 0; k < np; ++k) {
        m1[k] = config.beta1 * m1[k] + (1.0 - config.beta1) * grad[k];
        m2[k] = config.beta2 * m2[k] + (1.0 - config.beta2) * grad[k] * grad[k];
        const double mhat = m1[k] / (1.0 - b1t);
        const double vhat = m2[k] / (1.0 - b2t);
        p[k] -= step * mhat / (std::sqrt(vhat) + config.epsilon);
      }
    }
    const double mean = total / static_cast<double>(order.size());
    if (!std::isfinite(mean)) {
      throw Error(ErrorCode::Diverged, "training diverged at epoch " + std::to_string(epoch + 1));
    }
    result.loss_trace.push_back(mean);
  }
  result.net = std::move(net);
  return result;
}

namespace {

MatrixXd predict_dataset(const Network& net, const WindowedDataset& data) {
  MatrixXd out(static_cast<Eigen::Index>(data.n), static_cast<Eigen::Index>(data.size()));
  constexpr std::size_t chunk = 256;
  std::vector<std::size_t> pick;
  for (std::size_t start = 0; start < data.size(); start += chunk) {
    const std::size_t count = std::min(chunk, data.size() - start);
    pick.resize(count);
    std::iota(pick.begin(), pick.end(), start);
    out.middleCols(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(count)) =
        forward_batch(net, columns(data.inputs, pick, data.m));
  }
  return out;
}

}  // namespace

double dataset_loss(const Network& net, const WindowedDataset& data) {
  if (data.size() == 0) throw Error(ErrorCode::InvalidArgument, "dataset is empty");
  const MatrixXd y = predict_dataset(net, data);
  double sum = 0.0;
  for (std::size_t j = 0; j < data.size(); ++j) {
    for (std::size_t i = 0; i < data.n; ++i) {
      const double e = y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) - data.targets[j][i];
      sum += e * e;
    }
  }
  return sum / static_cast<double>(data.size() * data.n);
}

ModelReport fit_and_evaluate(std::span<const double> series, const NetworkConfig& config,
                             const TrainConfig& train_config) {
  validate(train_config);
  const SplitData split = split_series(series, config.window, config.horizon, train_config.split);
  Network net = make_network(config, train_config.seed);
  net.norm = split.norm;
  ModelReport report;
  report.trained = train(std::move(net), split.train, train_config);
  const MatrixXd y = predict_dataset(report.trained.net, split.test);
  const WindowedDataset raw =
      make_windows(series.subspan(split.split_index - config.window), config.window, config.horizon);
  std::vector<double> predicted, actual;
  for (std::size_t j = 0; j < raw.size(); ++j) {
    std::vector<double> row(config.horizon);
    for (std::size_t i = 0; i < config.horizon; ++i) {
      row[i] = split.norm.denormalize(y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
    predicted.insert(predicted.end(), row.begin(), row.end());
    actual.insert(actual.end(), raw.targets[j].begin(), raw.targets[j].end());
    report.test_predictions.push_back(std::move(row));
  }
  report.test = evaluate(predicted, actual);
  return report;
}

namespace {

std::string_view pooling_name(Pooling p) { return p == Pooling::Final ? "final" : "mean"; }

double parse_double(const std::string& token, const std::string& what) {
  double v = 0.0;
  const auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc{} || end != token.data() + token.size()) {
    throw Error(ErrorCode::Parse, "model file: bad number '" + token + "' in " + what);
  }
  return v;
}

std::size_t parse_size(const std::string& token, const std::string& what) {
  std::size_t v = 0;
  const auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc{} || end != token.data() + token.size()) {
    throw Error(ErrorCode::Parse, "model file: bad integer '" + token + "' in " + what);
  }
  return v;
}

}  // namespace

std::string serialize_network(const Network& net) {
  const NetworkConfig& c = net.config();
  std::ostringstream out;
  out << "mgsched-network 1\n"
      << "kind " << to_string(c.kind) << "\n"
      << "window " << c.window << "\n"
      << "horizon " << c.horizon << "\n"
      << "hidden " << c.hidden << "\n"
      << "layers " << c.layers << "\n"
      << "dropout " << fmt(c.dropout) << "\n"
      << "pooling " << pooling_name(c.pooling) << "\n"
      << "norm " << fmt(net.norm.min) << " " << fmt(net.norm.max) << "\n";
  for (const auto& t : net.tensors()) {
    out << "tensor " << t.name << " " << t.rows << " " << t.cols << "\n";
    const auto v = net.view(t);
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
      for (Eigen::Index j = 0; j < v.cols(); ++j) out << (j ? " " : "") << fmt(v(i, j));
      out << "\n";
    }
  }
  return out.str();
}

Network parse_network(const std::string& text) {
  std::istringstream in(text);
  std::string key, value;
  in >> key >> value;
  if (key != "mgsched-network" || value != "1") {
    throw Error(ErrorCode::Parse, "not a network file (bad header)");
  }
  NetworkConfig c;
  Normalization norm;
  const auto expect = [&](const char* name) {
    if (!(in >> key) || key != name) {
      throw Error(ErrorCode::Parse, std::string("model file: expected '") + name + "'");
    }
    if (!(in >> value)) throw Error(ErrorCode::Parse, std::string("model file: missing ") + name);
    return value;
  };
  c.kind = parse_model_kind(expect("kind"));
  c.window = parse_size(expect("window"), "window");
  c.horizon = parse_size(expect("horizon"), "horizon");
  c.hidden = parse_size(expect("hidden"), "hidden");
  c.layers = parse_size(expect("layers"), "layers");
  c.dropout = parse_double(expect("dropout"), "dropout");
  const std::string pooling = expect("pooling");
  if (pooling == "final") {
    c.pooling = Pooling::Final;
  } else if (pooling == "mean") {
    c.pooling = Pooling::Mean;
  } else {
    throw Error(ErrorCode::Parse, "model file: unknown pooling '" + pooling + "'");
  }
  norm.min = parse_double(expect("norm"), "norm");
  if (!(in >> value)) throw Error(ErrorCode::Parse, "model file: missing norm max");
  norm.max = parse_double(value, "norm");

  Network net;
  try {
    net = Network(c);
  } catch (const Error& e) {
    throw Error(ErrorCode::Parse, std::string("model file: ") + e.what());
  }
  net.norm = norm;
  for (const auto& t : net.tensors()) {
    std::string name, rows, cols;
    if (!(in >> key >> name >> rows >> cols) || key != "tensor") {
      throw Error(ErrorCode::Parse, "model file: expected tensor " + t.name);
    }
    if (name != t.name || parse_size(rows, name) != t.rows || parse_size(cols, name) != t.cols) {
      throw Error(ErrorCode::Parse, "model file: tensor " + name + " " + rows + "x" + cols +
                                        " does not match expected " + t.name + " " +
                                        std::to_string(t.rows) + "x" + std::to_string(t.cols));
    }
    auto v = net.view(t);
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
      for (Eigen::Index j = 0; j < v.cols(); ++j) {
        if (!(in >> value)) throw Error(ErrorCode::Parse, "model file: tensor " + name + " truncated");
        v(i, j) = parse_double(value, name);
      }
    }
  }
  if (in >> key) throw Error(ErrorCode::Parse, "model file: trailing data '" + key + "'");
  return net;
}

void save_network(const Network& net, const std::filesystem::path& path) {
  detail::write_file(path, serialize_network(net));
}

Network load_network(const std::filesystem::path& path) {
  return parse_network(detail::read_file(path));
}

std::vector<double> parse_series_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::Parse, "series CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "timestamp,power_mw") {
    throw Error(ErrorCode::Parse,
                "series CSV header must be 'timestamp,power_mw', got '" + line + "'");
  }
  std::vector<double> values;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
      throw Error(ErrorCode::Parse, "series CSV row " + std::to_string(row) + ": expected 2 fields");
    }
    const std::string field = line.substr(comma + 1);
    double v = 0.0;
    const auto [end, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc{} || end != field.data() + field.size() || !std::isfinite(v)) {
      throw Error(ErrorCode::Parse,
                  "series CSV row " + std::to_string(row) + ": bad value '" + field + "'");
    }
    values.push_back(v);
  }
  if (values.empty()) throw Error(ErrorCode::Parse, "series CSV has no rows");
  return values;
}

std::vector<double> load_series_csv(const std::filesystem::path& path) {
  return parse_series_csv(detail::read_file(path));
}

std::string series_csv(std::span<const double> values) {
  std::ostringstream out;
  out << "timestamp,power_mw\n";
  for (std::size_t i = 0; i < values.size(); ++i) out << i << "," << fmt(values[i]) << "\n";
  return out.str();
}

void save_series_csv(std::span<const double> values, const std::filesystem::path& path) {
  detail::write_file(path, series_csv(values));
}

}  // namespace mgsched::forecast
