#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "ohio/core.hpp"
#include "ohio/rng.hpp"

namespace ohio {

using Objective = std::function<double(const Vec&)>;

/// Adam update rule (beta1 0.9, beta2 0.999, eps 1e-8 by default).
class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  // Returns the parameter increment for `grad` (to be added to the parameters).
  Vec step(const Vec& grad);
  void reset() { t_ = 0; m_.resize(0); v_.resize(0); }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  Vec m_, v_;
};

Vec central_gradient(const Objective& f, const Vec& x, double eps);

struct Box {
  Vec lo;
  Vec hi;
  Vec project(const Vec& x) const { return x.cwiseMax(lo).cwiseMin(hi); }
};

struct OptimResult {
  Vec x;
  double loss = 0.0;
  double initial_loss = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> history;  // per-iteration loss (best elite loss for CEM)
};

struct GradientOptions {
  double lr = 0.01;
  int max_steps = 10000;
  double tol = 1e-5;
  double fd_eps = 1e-6;
  std::optional<Box> box;
};

/// Adam on central finite-difference gradients. Returns the best iterate seen;
/// converged iff its loss is at most `tol`.
OptimResult adam_minimize(const Objective& f, Vec x0, const GradientOptions& options);

struct CemOptions {
  int samples = 50;
  double elite_frac = 0.2;
  int patience = 4;
  int max_iterations = 10000;
  double tol = 1e-5;
  double min_variance = 1e-6;
  std::optional<Box> box;
};

/// Cross-entropy method with a diagonal Gaussian. The incumbent best point
/// joins every elite pool, so the best elite loss never increases. Stops when
/// the best loss reaches `tol`, after `patience` iterations without
/// improvement, or after `max_iterations`.
OptimResult cem_minimize(const Objective& f, const Vec& mean0, const Vec& std0, const CemOptions& options,
                         SeededRng& rng);

}  // namespace ohio
