#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <random>

#include "agreelearn/common.hpp"

namespace agreelearn {

/// An affine layer with its gradient buffers. Batches are row-major: one
/// sample per row, so the forward map is x * w^T + b^T.
struct Dense {
  Eigen::MatrixXd w;   // out x in
  Eigen::VectorXd b;   // out
  Eigen::MatrixXd gw;  // same shape as w
  Eigen::VectorXd gb;

  Dense() = default;
  Dense(std::size_t out, std::size_t in)
      : w(Eigen::MatrixXd::Zero(out, in)),
        b(Eigen::VectorXd::Zero(out)),
        gw(Eigen::MatrixXd::Zero(out, in)),
        gb(Eigen::VectorXd::Zero(out)) {}

  /// Uniform init scaled by fan-in; biases start at zero.
  void init_uniform(Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(w.cols()));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = u(rng);
    }
    b.setZero();
  }

  void zero_grad() {
    gw.setZero();
    gb.setZero();
  }

  std::size_t param_count() const { return static_cast<std::size_t>(w.size() + b.size()); }
};

inline Eigen::MatrixXd affine(const Dense& d, const Eigen::MatrixXd& x) {
  return (x * d.w.transpose()).rowwise() + d.b.transpose();
}

/// Accumulates gw/gb from upstream gradient dy (B x out) and returns dx.
inline Eigen::MatrixXd affine_backward(Dense& d, const Eigen::MatrixXd& x,
                                       const Eigen::MatrixXd& dy) {
  d.gw += dy.transpose() * x;
  d.gb += dy.colwise().sum().transpose();
  return dy * d.w;
}

inline Eigen::MatrixXd relu(const Eigen::MatrixXd& x) { return x.cwiseMax(0.0); }

inline Eigen::MatrixXd relu_backward(const Eigen::MatrixXd& pre, const Eigen::MatrixXd& dy) {
  return ((pre.array() > 0.0).cast<double>() * dy.array()).matrix();
}

inline Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& z) {
  Eigen::MatrixXd out(z.rows(), z.cols());
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    const double m = z.row(r).maxCoeff();
    const Eigen::ArrayXd e = (z.row(r).array() - m).exp();
    out.row(r) = (e / e.sum()).matrix();
  }
  return out;
}

/// Given dL/dp for a row-wise softmax output p, returns dL/dz.
inline Eigen::MatrixXd softmax_backward(const Eigen::MatrixXd& p, const Eigen::MatrixXd& dp) {
  Eigen::MatrixXd dz(p.rows(), p.cols());
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    const double dot = p.row(r).dot(dp.row(r));
    dz.row(r) = (p.row(r).array() * (dp.row(r).array() - dot)).matrix();
  }
  return dz;
}

}  // namespace agreelearn
