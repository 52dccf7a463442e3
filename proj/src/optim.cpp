#include "ohio/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ohio {

Vec Adam::step(const Vec& grad) {
  if (m_.size() != grad.size()) {
    m_ = Vec::Zero(grad.size());
    v_ = Vec::Zero(grad.size());
    t_ = 0;
  }
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  return -lr_ * (m_ / c1).array() / ((v_ / c2).array().sqrt() + eps_);
}

Vec central_gradient(const Objective& f, const Vec& x, double eps) {
  Vec g(x.size());
  Vec probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe(i) = x(i) + eps;
    const double up = f(probe);
    probe(i) = x(i) - eps;
    const double down = f(probe);
    probe(i) = x(i);
    g(i) = (up - down) / (2.0 * eps);
  }
  return g;
}

OptimResult adam_minimize(const Objective& f, Vec x0, const GradientOptions& options) {
  if (!(options.lr > 0.0)) fail(ErrorCode::InvalidArgument, "learning rate must be positive");
  if (options.box) x0 = options.box->project(x0);
  OptimResult out;
  Vec x = x0;
  double loss = f(x);
  if (!std::isfinite(loss)) fail(ErrorCode::NonFiniteLoss, "objective is non-finite at the initial point");
  out.x = x;
  out.loss = out.initial_loss = loss;
  Adam adam(options.lr);
  for (int step = 0; step < options.max_steps && out.loss > options.tol; ++step) {
    const Vec grad = central_gradient(f, x, options.fd_eps);
    if (!grad.allFinite()) fail(ErrorCode::NonFiniteGradient, "finite-difference gradient is non-finite");
    x += adam.step(grad);
    if (options.box) x = options.box->project(x);
    loss = f(x);
    if (!std::isfinite(loss)) fail(ErrorCode::NonFiniteLoss, "objective became non-finite");
    out.history.push_back(loss);
    out.iterations = step + 1;
    if (loss < out.loss) {
      out.loss = loss;
      out.x = x;
    }
  }
  out.converged = out.loss <= options.tol;
  return out;
}

OptimResult cem_minimize(const Objective& f, const Vec& mean0, const Vec& std0, const CemOptions& options,
                         SeededRng& rng) {
  if (options.samples < 1) fail(ErrorCode::InvalidArgument, "CEM needs at least one sample");
  if (!(options.elite_frac > 0.0 && options.elite_frac <= 1.0))
    fail(ErrorCode::InvalidArgument, "elite fraction must lie in (0, 1]");
  if (mean0.size() != std0.size()) fail(ErrorCode::DimMismatch, "CEM mean and std sizes differ");

  const Eigen::Index dim = mean0.size();
  const int n_elite = std::max(1, static_cast<int>(std::ceil(options.elite_frac * options.samples)));

  Vec mean = options.box ? options.box->project(mean0) : mean0;
  Vec var = std0.cwiseProduct(std0).cwiseMax(options.min_variance);

  OptimResult out;
  out.x = mean;
  out.loss = out.initial_loss = f(mean);
  if (!std::isfinite(out.loss)) fail(ErrorCode::NonFiniteLoss, "objective is non-finite at the initial mean");

  std::vector<Vec> pool;
  std::vector<double> losses;
  std::vector<int> order;
  int stale = 0;
  for (int it = 0; it < options.max_iterations && out.loss > options.tol; ++it) {
    pool.assign(1, out.x);
    losses.assign(1, out.loss);
    for (int k = 0; k < options.samples; ++k) {
      Vec x(dim);
      for (Eigen::Index i = 0; i < dim; ++i) x(i) = mean(i) + std::sqrt(var(i)) * rng.normal();
      if (options.box) x = options.box->project(x);
      const double l = f(x);
      pool.push_back(std::move(x));
      // Non-finite samples rank last instead of aborting the search.
      losses.push_back(std::isfinite(l) ? l : std::numeric_limits<double>::infinity());
    }
    order.resize(pool.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return losses[a] < losses[b]; });

    Vec new_mean = Vec::Zero(dim);
    for (int e = 0; e < n_elite; ++e) new_mean += pool[order[e]];
    new_mean /= n_elite;
    Vec new_var = Vec::Zero(dim);
    for (int e = 0; e < n_elite; ++e) new_var += (pool[order[e]] - new_mean).cwiseAbs2();
    new_var /= n_elite;
    mean = new_mean;
    var = new_var.cwiseMax(options.min_variance);

    out.iterations = it + 1;
    const double best = losses[order[0]];
    out.history.push_back(best);
    if (best < out.loss) {
      out.loss = best;
      out.x = pool[order[0]];
      stale = 0;
    } else if (++stale >= options.patience) {
      break;
    }
  }
  out.converged = out.loss <= options.tol;
  return out;
}

}  // namespace ohio
