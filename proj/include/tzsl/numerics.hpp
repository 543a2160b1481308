#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace tzsl {

using Vector = std::vector<double>;

// Row-major dense matrix of doubles.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  bool all_finite() const noexcept;

  bool operator==(const DenseMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct NetShape {
  std::size_t semantic_dim = 0;
  std::size_t hidden_dim = 512;
  std::size_t feature_dim = 0;

  bool operator==(const NetShape&) const = default;
};

// Two tanh layers mapping a semantic vector (d) into feature space (m):
//   out = tanh(w2^T tanh(w1^T e + b1) + b2)
// w1 is d x h, w2 is h x m.
struct ProjectionNet {
  DenseMatrix w1;
  Vector b1;
  DenseMatrix w2;
  Vector b2;

  ProjectionNet() = default;
  explicit ProjectionNet(NetShape shape);  // all zeros

  // Weights uniform in +-sqrt(6 / (fan_in + fan_out)), biases zero.
  static ProjectionNet glorot(NetShape shape, std::uint64_t seed);

  NetShape shape() const noexcept {
    return {w1.rows(), w1.cols(), w2.cols()};
  }

  // Parameter blocks in serialization order: w1, b1, w2, b2.
  std::array<std::span<double>, 4> blocks();
  std::array<std::span<const double>, 4> blocks() const;
  std::size_t parameter_count() const noexcept;

  // Throws ShapeError if the blocks disagree with each other.
  void check_consistent() const;
  bool all_finite() const noexcept;

  bool operator==(const ProjectionNet&) const = default;
};

// Parameter-shaped gradient.
using NetGradient = ProjectionNet;

Vector forward(const ProjectionNet& net, std::span<const double> semantic);

// Projects every row of `semantic_rows` (n x d) into an n x m matrix.
DenseMatrix forward_rows(const ProjectionNet& net, const DenseMatrix& semantic_rows);

// One backward contribution: an input vector and dLoss/dOutput at that input.
struct UpstreamSample {
  std::span<const double> input;
  std::span<const double> grad_output;
};

// Exact gradient of sum_i <grad_output_i, net(input_i)> with respect to the
// parameters. Samples are accumulated left to right.
NetGradient backward(const ProjectionNet& net, std::span<const UpstreamSample> batch);

// a += scale * b, blockwise. Shapes must agree.
void axpy(double scale, const ProjectionNet& b, ProjectionNet& a);

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::size_t step = 0;
  ProjectionNet first_moment;
  ProjectionNet second_moment;
  AdamHyper hyper;

  AdamState() = default;
  explicit AdamState(NetShape shape)
      : first_moment(shape), second_moment(shape) {}

  bool operator==(const AdamState& o) const {
    return step == o.step && first_moment == o.first_moment &&
           second_moment == o.second_moment;
  }
};

// Bias-corrected Adam update of a flat parameter block. `step` is the
// 1-based index of the update being applied.
void adam_update(std::span<double> params, std::span<const double> grad,
                 std::span<double> first_moment, std::span<double> second_moment,
                 std::size_t step, double lr, const AdamHyper& hyper);

// Applies one Adam update to `net`. A non-finite gradient throws
// NumericError and leaves both `net` and `state` untouched.
void adam_step(ProjectionNet& net, const NetGradient& grad, AdamState& state,
               double lr);

using LossClosure = std::function<double(const ProjectionNet&)>;

// Central-difference gradient of `loss` at `net`. Test oracle for backward.
NetGradient finite_diff_grad(const LossClosure& loss, const ProjectionNet& net,
                             double h);

}  // namespace tzsl
