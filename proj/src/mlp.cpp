#include "ohio/mlp.hpp"

#include <cmath>
#include <string>

namespace ohio {

std::string_view to_string(Head head) {
  switch (head) {
    case Head::Linear: return "linear";
    case Head::Softmax: return "softmax";
    case Head::Mixed: return "mixed";
  }
  return "?";
}

Head head_from_string(std::string_view name) {
  for (Head h : {Head::Linear, Head::Softmax, Head::Mixed})
    if (to_string(h) == name) return h;
  fail(ErrorCode::ParseError, "unknown head '" + std::string(name) + "'");
}

Mlp::Mlp(std::vector<int> sizes, Head head, SeededRng& rng, int linear_dims)
    : sizes_(std::move(sizes)), head_(head), linear_dims_(head == Head::Mixed ? linear_dims : 0) {
  if (sizes_.size() < 2) fail(ErrorCode::InvalidArgument, "an MLP needs input and output sizes");
  for (int s : sizes_)
    if (s < 1) fail(ErrorCode::InvalidArgument, "layer sizes must be >= 1");
  if (head_ == Head::Mixed && (linear_dims_ < 0 || linear_dims_ >= sizes_.back()))
    fail(ErrorCode::InvalidArgument, "mixed head needs 0 <= linear_dims < output size");
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const int in = sizes_[l], out = sizes_[l + 1];
    const double limit = std::sqrt(6.0 / (in + out));
    Mat W(out, in);
    for (int j = 0; j < in; ++j)
      for (int i = 0; i < out; ++i) W(i, j) = rng.uniform(-limit, limit);
    W_.push_back(std::move(W));
    b_.push_back(Vec::Zero(out));
  }
}

Mat Mlp::pre_head(const Mat& X, std::vector<Mat>* acts) const {
  if (X.rows() != input_dim()) fail(ErrorCode::DimMismatch, "input has " + std::to_string(X.rows()) + " rows, expected " + std::to_string(input_dim()));
  Mat h = X;
  if (acts) acts->push_back(h);
  for (int l = 0; l < layers(); ++l) {
    Mat z = (W_[l] * h).colwise() + b_[l];
    if (l + 1 < layers()) {
      h = z.array().tanh().matrix();
      if (acts) acts->push_back(h);
    } else {
      h = std::move(z);
    }
  }
  return h;
}

namespace {

// Column-wise softmax of rows [start, end).
void softmax_rows(Mat& Z, int start) {
  const int k = static_cast<int>(Z.rows()) - start;
  if (k <= 0) return;
  auto block = Z.bottomRows(k);
  for (Eigen::Index c = 0; c < block.cols(); ++c) {
    const double m = block.col(c).maxCoeff();
    block.col(c) = (block.col(c).array() - m).exp().matrix();
    block.col(c) /= block.col(c).sum();
  }
}

}  // namespace

Mat Mlp::forward(const Mat& X) const {
  Mat Z = pre_head(X, nullptr);
  if (head_ == Head::Softmax) softmax_rows(Z, 0);
  if (head_ == Head::Mixed) softmax_rows(Z, linear_dims_);
  return Z;
}

Vec Mlp::forward(const Vec& x) const { return forward(Mat(x)).col(0); }

double Mlp::loss_and_gradient(const Mat& X, const Mat& Y, const Vec& weights, MlpGradient* grad) const {
  const Eigen::Index N = X.cols();
  if (N == 0) fail(ErrorCode::EmptyDataset, "empty batch");
  if (Y.rows() != output_dim() || Y.cols() != N) fail(ErrorCode::DimMismatch, "target shape does not match the network");
  if (weights.size() != 0 && weights.size() != N) fail(ErrorCode::DimMismatch, "one weight per sample expected");
  const Vec w = weights.size() ? weights : Vec::Ones(N);

  std::vector<Mat> acts;
  const Mat Z = pre_head(X, grad ? &acts : nullptr);
  const int lin = head_ == Head::Linear ? output_dim() : (head_ == Head::Softmax ? 0 : linear_dims_);
  const int soft = output_dim() - lin;

  double loss = 0.0;
  Mat dZ(Z.rows(), N);
  for (Eigen::Index c = 0; c < N; ++c) {
    const double scale = w(c) / static_cast<double>(N);
    if (lin > 0) {
      const Vec diff = Z.col(c).head(lin) - Y.col(c).head(lin);
      loss += scale * diff.squaredNorm();
      dZ.col(c).head(lin) = 2.0 * scale * diff;
    }
    if (soft > 0) {
      const Vec z = Z.col(c).tail(soft);
      const Vec t = Y.col(c).tail(soft);
      const double m = z.maxCoeff();
      const double lse = m + std::log((z.array() - m).exp().sum());
      const Vec logp = z.array() - lse;
      loss -= scale * t.dot(logp);
      dZ.col(c).tail(soft) = scale * (logp.array().exp() * t.sum() - t.array()).matrix();
    }
  }
  if (!std::isfinite(loss)) fail(ErrorCode::NonFiniteLoss, "training loss is non-finite");
  if (!grad) return loss;

  grad->W.assign(layers(), Mat());
  grad->b.assign(layers(), Vec());
  Mat delta = std::move(dZ);
  for (int l = layers() - 1; l >= 0; --l) {
    grad->W[l] = delta * acts[l].transpose();
    grad->b[l] = delta.rowwise().sum();
    if (l > 0) {
      Mat back = W_[l].transpose() * delta;
      delta = (back.array() * (1.0 - acts[l].array().square())).matrix();
    }
  }
  return loss;
}

std::size_t Mlp::num_params() const {
  std::size_t n = 0;
  for (int l = 0; l < layers(); ++l) n += W_[l].size() + b_[l].size();
  return n;
}

// Parameter order: per layer, W (column-major) then b.
Vec Mlp::flat_params() const {
  Vec p(num_params());
  Eigen::Index at = 0;
  for (int l = 0; l < layers(); ++l) {
    p.segment(at, W_[l].size()) = Eigen::Map<const Vec>(W_[l].data(), W_[l].size());
    at += W_[l].size();
    p.segment(at, b_[l].size()) = b_[l];
    at += b_[l].size();
  }
  return p;
}

void Mlp::set_flat_params(const Vec& p) {
  if (static_cast<std::size_t>(p.size()) != num_params()) fail(ErrorCode::DimMismatch, "parameter count mismatch");
  Eigen::Index at = 0;
  for (int l = 0; l < layers(); ++l) {
    W_[l] = Eigen::Map<const Mat>(p.data() + at, W_[l].rows(), W_[l].cols());
    at += W_[l].size();
    b_[l] = p.segment(at, b_[l].size());
    at += b_[l].size();
  }
}

Vec Mlp::flatten(const MlpGradient& g) const {
  Vec p(num_params());
  Eigen::Index at = 0;
  for (int l = 0; l < layers(); ++l) {
    p.segment(at, g.W[l].size()) = Eigen::Map<const Vec>(g.W[l].data(), g.W[l].size());
    at += g.W[l].size();
    p.segment(at, g.b[l].size()) = g.b[l];
    at += g.b[l].size();
  }
  return p;
}

}  // namespace ohio
