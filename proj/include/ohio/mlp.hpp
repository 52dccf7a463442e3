#pragma once

#include <string_view>
#include <vector>

#include "ohio/core.hpp"
#include "ohio/rng.hpp"

namespace ohio {

/// Output head. Mixed keeps the first `linear_dims` outputs linear and puts a
/// softmax over the rest (production targets followed by shares).
enum class Head { Linear, Softmax, Mixed };

std::string_view to_string(Head head);
Head head_from_string(std::string_view name);

struct MlpGradient {
  std::vector<Mat> W;
  std::vector<Vec> b;
};

/// Fully connected tanh network. Batches are column-major: one sample per column.
class Mlp {
 public:
  Mlp() = default;
  /// Glorot-uniform weights, zero biases.
  Mlp(std::vector<int> sizes, Head head, SeededRng& rng, int linear_dims = 0);

  const std::vector<int>& sizes() const { return sizes_; }
  Head head() const { return head_; }
  int linear_dims() const { return linear_dims_; }
  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  int layers() const { return static_cast<int>(W_.size()); }
  Mat& weight(int l) { return W_[l]; }
  Vec& bias(int l) { return b_[l]; }

  /// Head outputs (probabilities for the softmax block).
  Mat forward(const Mat& X) const;
  Vec forward(const Vec& x) const;

  /// Weighted batch loss and its gradient. Linear outputs use squared error,
  /// softmax outputs use cross-entropy against target distributions; each
  /// sample's term is scaled by weights(i) / N. Empty weights mean all ones.
  double loss_and_gradient(const Mat& X, const Mat& Y, const Vec& weights, MlpGradient* grad) const;

  std::size_t num_params() const;
  Vec flat_params() const;
  void set_flat_params(const Vec& p);
  Vec flatten(const MlpGradient& g) const;

 private:
  Mat pre_head(const Mat& X, std::vector<Mat>* activations) const;

  std::vector<int> sizes_;
  Head head_ = Head::Linear;
  int linear_dims_ = 0;
  std::vector<Mat> W_;
  std::vector<Vec> b_;
};

}  // namespace ohio
