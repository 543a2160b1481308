#include "tzsl/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "tzsl/error.hpp"

namespace tzsl {

namespace {

bool finite_span(std::span<const double> xs) {
  return std::all_of(xs.begin(), xs.end(),
                     [](double x) { return std::isfinite(x); });
}

void check_same_shape(const ProjectionNet& a, const ProjectionNet& b,
                      const char* context) {
  auto sa = a.shape();
  auto sb = b.shape();
  if (sa.semantic_dim != sb.semantic_dim)
    throw ShapeError(std::string(context) + " (semantic dim)", sa.semantic_dim,
                     sb.semantic_dim);
  if (sa.hidden_dim != sb.hidden_dim)
    throw ShapeError(std::string(context) + " (hidden dim)", sa.hidden_dim,
                     sb.hidden_dim);
  if (sa.feature_dim != sb.feature_dim)
    throw ShapeError(std::string(context) + " (feature dim)", sa.feature_dim,
                     sb.feature_dim);
}

// hidden = tanh(w1^T e + b1); out = tanh(w2^T hidden + b2)
void forward_into(const ProjectionNet& net, std::span<const double> e,
                  std::span<double> hidden, std::span<double> out) {
  const std::size_t d = net.w1.rows();
  const std::size_t h = net.w1.cols();
  const std::size_t m = net.w2.cols();

  std::copy(net.b1.begin(), net.b1.end(), hidden.begin());
  for (std::size_t i = 0; i < d; ++i) {
    const double ei = e[i];
    const double* w = net.w1.row(i).data();
    for (std::size_t j = 0; j < h; ++j) hidden[j] += ei * w[j];
  }
  for (std::size_t j = 0; j < h; ++j) hidden[j] = std::tanh(hidden[j]);

  std::copy(net.b2.begin(), net.b2.end(), out.begin());
  for (std::size_t j = 0; j < h; ++j) {
    const double hj = hidden[j];
    const double* w = net.w2.row(j).data();
    for (std::size_t k = 0; k < m; ++k) out[k] += hj * w[k];
  }
  for (std::size_t k = 0; k < m; ++k) out[k] = std::tanh(out[k]);
}

}  // namespace

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols,
                         std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_)
    throw ShapeError("DenseMatrix data length", rows_ * cols_, data_.size());
}

bool DenseMatrix::all_finite() const noexcept { return finite_span(data_); }

ProjectionNet::ProjectionNet(NetShape shape)
    : w1(shape.semantic_dim, shape.hidden_dim),
      b1(shape.hidden_dim, 0.0),
      w2(shape.hidden_dim, shape.feature_dim),
      b2(shape.feature_dim, 0.0) {}

ProjectionNet ProjectionNet::glorot(NetShape shape, std::uint64_t seed) {
  ProjectionNet net(shape);
  std::mt19937_64 rng(seed);
  auto fill = [&rng](DenseMatrix& w) {
    const double limit =
        std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (double& x : w.values()) x = dist(rng);
  };
  fill(net.w1);
  fill(net.w2);
  return net;
}

std::array<std::span<double>, 4> ProjectionNet::blocks() {
  return {w1.values(), std::span<double>(b1), w2.values(), std::span<double>(b2)};
}

std::array<std::span<const double>, 4> ProjectionNet::blocks() const {
  return {w1.values(), std::span<const double>(b1), w2.values(),
          std::span<const double>(b2)};
}

std::size_t ProjectionNet::parameter_count() const noexcept {
  return w1.size() + b1.size() + w2.size() + b2.size();
}

void ProjectionNet::check_consistent() const {
  if (b1.size() != w1.cols()) throw ShapeError("hidden bias", w1.cols(), b1.size());
  if (w2.rows() != w1.cols()) throw ShapeError("second layer rows", w1.cols(), w2.rows());
  if (b2.size() != w2.cols()) throw ShapeError("output bias", w2.cols(), b2.size());
}

bool ProjectionNet::all_finite() const noexcept {
  for (auto block : blocks())
    if (!finite_span(block)) return false;
  return true;
}

Vector forward(const ProjectionNet& net, std::span<const double> semantic) {
  if (semantic.size() != net.w1.rows())
    throw ShapeError("forward input", net.w1.rows(), semantic.size());
  Vector hidden(net.w1.cols());
  Vector out(net.w2.cols());
  forward_into(net, semantic, hidden, out);
  return out;
}

DenseMatrix forward_rows(const ProjectionNet& net, const DenseMatrix& semantic_rows) {
  if (semantic_rows.cols() != net.w1.rows())
    throw ShapeError("forward input", net.w1.rows(), semantic_rows.cols());
  DenseMatrix out(semantic_rows.rows(), net.w2.cols());
  Vector hidden(net.w1.cols());
  for (std::size_t r = 0; r < semantic_rows.rows(); ++r)
    forward_into(net, semantic_rows.row(r), hidden, out.row(r));
  return out;
}

NetGradient backward(const ProjectionNet& net, std::span<const UpstreamSample> batch) {
  const std::size_t d = net.w1.rows();
  const std::size_t h = net.w1.cols();
  const std::size_t m = net.w2.cols();

  NetGradient grad(net.shape());
  Vector hidden(h), out(m), delta_out(m), delta_hidden(h);

  for (const auto& sample : batch) {
    if (sample.input.size() != d)
      throw ShapeError("backward input", d, sample.input.size());
    if (sample.grad_output.size() != m)
      throw ShapeError("backward upstream gradient", m, sample.grad_output.size());
    if (!finite_span(sample.grad_output))
      throw NumericError("backward: non-finite upstream gradient");

    forward_into(net, sample.input, hidden, out);

    for (std::size_t k = 0; k < m; ++k)
      delta_out[k] = sample.grad_output[k] * (1.0 - out[k] * out[k]);

    for (std::size_t j = 0; j < h; ++j) {
      const double hj = hidden[j];
      const double* w = net.w2.row(j).data();
      double* gw = grad.w2.row(j).data();
      double back = 0.0;
      for (std::size_t k = 0; k < m; ++k) {
        gw[k] += hj * delta_out[k];
        back += w[k] * delta_out[k];
      }
      delta_hidden[j] = back * (1.0 - hj * hj);
    }
    for (std::size_t k = 0; k < m; ++k) grad.b2[k] += delta_out[k];

    for (std::size_t i = 0; i < d; ++i) {
      const double ei = sample.input[i];
      double* gw = grad.w1.row(i).data();
      for (std::size_t j = 0; j < h; ++j) gw[j] += ei * delta_hidden[j];
    }
    for (std::size_t j = 0; j < h; ++j) grad.b1[j] += delta_hidden[j];
  }
  return grad;
}

void axpy(double scale, const ProjectionNet& b, ProjectionNet& a) {
  check_same_shape(a, b, "axpy");
  auto dst = a.blocks();
  auto src = b.blocks();
  for (std::size_t blk = 0; blk < dst.size(); ++blk)
    for (std::size_t i = 0; i < dst[blk].size(); ++i) dst[blk][i] += scale * src[blk][i];
}

void adam_update(std::span<double> params, std::span<const double> grad,
                 std::span<double> first_moment, std::span<double> second_moment,
                 std::size_t step, double lr, const AdamHyper& hyper) {
  const double t = static_cast<double>(step);
  const double correction1 = 1.0 - std::pow(hyper.beta1, t);
  const double correction2 = 1.0 - std::pow(hyper.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grad[i];
    first_moment[i] = hyper.beta1 * first_moment[i] + (1.0 - hyper.beta1) * g;
    second_moment[i] = hyper.beta2 * second_moment[i] + (1.0 - hyper.beta2) * g * g;
    const double m_hat = first_moment[i] / correction1;
    const double v_hat = second_moment[i] / correction2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + hyper.epsilon);
  }
}

void adam_step(ProjectionNet& net, const NetGradient& grad, AdamState& state,
               double lr) {
  if (!(lr > 0.0) || !std::isfinite(lr))
    throw ValidationError("adam_step: learning rate must be positive");
  check_same_shape(net, grad, "adam_step gradient");
  check_same_shape(net, state.first_moment, "adam_step first moment");
  check_same_shape(net, state.second_moment, "adam_step second moment");
  if (!grad.all_finite()) throw NumericError("adam_step: non-finite gradient");

  const std::size_t step = state.step + 1;
  auto params = net.blocks();
  auto g = grad.blocks();
  auto m1 = state.first_moment.blocks();
  auto m2 = state.second_moment.blocks();
  for (std::size_t blk = 0; blk < params.size(); ++blk)
    adam_update(params[blk], g[blk], m1[blk], m2[blk], step, lr, state.hyper);
  state.step = step;
}

NetGradient finite_diff_grad(const LossClosure& loss, const ProjectionNet& net,
                             double h) {
  if (!(h > 0.0)) throw ValidationError("finite_diff_grad: step must be positive");
  ProjectionNet probe = net;
  NetGradient grad(net.shape());
  auto params = probe.blocks();
  auto out = grad.blocks();
  for (std::size_t blk = 0; blk < params.size(); ++blk) {
    for (std::size_t i = 0; i < params[blk].size(); ++i) {
      const double saved = params[blk][i];
      params[blk][i] = saved + h;
      const double up = loss(probe);
      params[blk][i] = saved - h;
      const double down = loss(probe);
      params[blk][i] = saved;
      if (!std::isfinite(up) || !std::isfinite(down))
        throw NumericError("finite_diff_grad: non-finite loss evaluation");
      out[blk][i] = (up - down) / (2.0 * h);
    }
  }
  return grad;
}

}  // namespace tzsl
