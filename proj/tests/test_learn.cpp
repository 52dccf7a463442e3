#include <doctest.h>

#include <cmath>
#include <limits>

#include "ohio/learn.hpp"
#include "ohio/relabel.hpp"

using namespace ohio;

namespace {

RelabeledSample goal_sample(std::int64_t ep, std::int64_t t, const Vec& s, const Vec& u, double r = 0.0) {
  return {ep, t, s, HighAction::goal(u), r, s, 0.0};
}

double numeric_grad(Mlp net, const Mat& X, const Mat& Y, const Vec& w, Eigen::Index k) {
  Vec p = net.flat_params();
  const double h = 1e-6 * std::max(1.0, std::abs(p(k)));
  const double x0 = p(k);
  p(k) = x0 + h;
  net.set_flat_params(p);
  const double up = net.loss_and_gradient(X, Y, w, nullptr);
  p(k) = x0 - h;
  net.set_flat_params(p);
  const double down = net.loss_and_gradient(X, Y, w, nullptr);
  return (up - down) / (2 * h);
}

}  // namespace

TEST_CASE("single linear layer gradient by hand") {
  SeededRng rng(0);
  Mlp net({3, 1}, Head::Linear, rng);
  const Vec x = (Vec(3) << 1.0, -2.0, 0.5).finished();
  const Mat Y = Mat::Constant(1, 1, 0.7);
  MlpGradient g;
  net.loss_and_gradient(Mat(x), Y, Vec(), &g);
  const double pred = (net.weight(0) * x)(0) + net.bias(0)(0);
  CHECK(g.W[0].row(0).transpose().isApprox(2.0 * (pred - 0.7) * x, 1e-12));
  CHECK(g.b[0](0) == doctest::Approx(2.0 * (pred - 0.7)));
}

TEST_CASE("zero network with zero targets has zero loss and gradient") {
  SeededRng rng(0);
  Mlp net({4, 8, 2}, Head::Linear, rng);
  net.set_flat_params(Vec::Zero(net.num_params()));
  MlpGradient g;
  SeededRng data(1);
  Mat X(4, 5);
  for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = data.normal();
  CHECK(net.loss_and_gradient(X, Mat::Zero(2, 5), Vec(), &g) == 0.0);
  CHECK(net.flatten(g).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("backprop matches central finite differences") {
  SeededRng rng(42);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const Head head = trial % 3 == 0 ? Head::Linear : (trial % 3 == 1 ? Head::Softmax : Head::Mixed);
    const int in = 2 + trial % 3, out = 3 + trial % 2, n = 4 + trial;
    Mlp net({in, 6, 5, out}, head, rng, head == Head::Mixed ? 1 : 0);
    Mat X(in, n), Y(out, n);
    for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = rng.normal();
    for (Eigen::Index c = 0; c < n; ++c) {
      for (int r = 0; r < out; ++r) Y(r, c) = rng.uniform();
      const int lin = head == Head::Linear ? out : (head == Head::Softmax ? 0 : 1);
      if (lin < out) Y.col(c).tail(out - lin) /= Y.col(c).tail(out - lin).sum();
    }
    Vec w(n);
    for (int i = 0; i < n; ++i) w(i) = rng.uniform(0.5, 2.0);
    MlpGradient g;
    net.loss_and_gradient(X, Y, w, &g);
    const Vec analytic = net.flatten(g);
    for (Eigen::Index k = 0; k < analytic.size(); ++k) {
      const double fd = numeric_grad(net, X, Y, w, k);
      const double rel = std::abs(fd - analytic(k)) / std::max(1e-6, std::max(std::abs(fd), std::abs(analytic(k))));
      worst = std::max(worst, rel);
    }
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("flat parameter round trip") {
  SeededRng rng(3);
  Mlp net({3, 4, 2}, Head::Softmax, rng);
  const Vec p = net.flat_params();
  net.set_flat_params(p);
  CHECK(net.flat_params() == p);
  CHECK(p.size() == 3 * 4 + 4 + 4 * 2 + 2);
}

TEST_CASE("BC learns a realizable linear map") {
  SeededRng rng(5);
  std::vector<RelabeledSample> train, test;
  for (int i = 0; i < 1200; ++i) {
    const Vec s = (Vec(2) << rng.uniform(-1, 1), rng.uniform(-1, 1)).finished();
    (i < 1000 ? train : test).push_back(goal_sample(i, 0, s, 2.0 * s));
  }
  LearnerConfig cfg;
  cfg.epochs = 200;
  const TrainResult r = bc_train(train, cfg);
  double mse = 0.0;
  for (const auto& smp : test) mse += (r.policy.act(smp.s).values() - smp.u.values()).squaredNorm() / 2.0;
  mse /= static_cast<double>(test.size());
  CHECK(mse < 1e-3);
  CHECK(r.curve.size() == 200);
  CHECK(r.curve.back().loss < 1e-3);
}

TEST_CASE("BC memorizes a single point") {
  std::vector<RelabeledSample> data(50, goal_sample(0, 0, (Vec(2) << 0.3, -0.2).finished(), (Vec(2) << 1.5, 2.5).finished()));
  LearnerConfig cfg;
  cfg.epochs = 50;
  const TrainResult r = bc_train(data, cfg);
  CHECK((r.policy.act(data[0].s).values() - data[0].u.values()).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("distribution policies output the simplex") {
  SeededRng rng(6);
  std::vector<RelabeledSample> data;
  for (int i = 0; i < 200; ++i) {
    const Vec s = (Vec(3) << rng.normal(), rng.normal(), rng.normal()).finished();
    data.push_back({i, 0, s, dirichlet_dispersion(4, rng), 0.0, s, 0.0});
  }
  LearnerConfig cfg;
  cfg.epochs = 5;
  const TrainResult r = bc_train(data, cfg);
  for (int i = 0; i < 100; ++i) {
    const Vec s = (Vec(3) << 10 * rng.normal(), rng.normal(), rng.normal()).finished();
    const Vec u = r.policy.act(s).values();
    CHECK(u.minCoeff() >= 0.0);
    CHECK(std::abs(u.sum() - 1.0) < 1e-9);
  }
}

TEST_CASE("full-batch training loss does not increase") {
  SeededRng rng(7);
  std::vector<RelabeledSample> data;
  for (int i = 0; i < 64; ++i) {
    const Vec s = (Vec(2) << rng.normal(), rng.normal()).finished();
    data.push_back(goal_sample(i, 0, s, (Vec(1) << std::sin(s(0)) + 0.5 * s(1)).finished()));
  }
  LearnerConfig cfg;
  cfg.batch = 64;
  cfg.lr = 1e-4;
  cfg.epochs = 100;
  const TrainResult r = bc_train(data, cfg);
  for (std::size_t e = 1; e < r.curve.size(); ++e) CHECK(r.curve[e].loss <= r.curve[e - 1].loss + 1e-12);
}

TEST_CASE("expectile of two points") {
  const double v[2] = {0.0, 1.0};
  CHECK(std::abs(fit_expectile(v, 0.9) - 0.9) < 1e-6);
  CHECK(std::abs(fit_expectile(v, 0.5) - 0.5) < 1e-9);
}

TEST_CASE("expectile agrees with a grid minimization") {
  SeededRng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> xs(7);
    for (double& x : xs) x = rng.normal();
    const double tau = rng.uniform(0.05, 0.95);
    auto loss = [&](double v) {
      double s = 0.0;
      for (double x : xs) s += (x < v ? 1 - tau : tau) * (x - v) * (x - v);
      return s;
    };
    double best = 0.0, best_loss = std::numeric_limits<double>::infinity();
    for (double v = -4; v <= 4; v += 1e-4)
      if (loss(v) < best_loss) best_loss = loss(v), best = v;
    CHECK(std::abs(fit_expectile(xs, tau) - best) < 2e-4);
  }
}

TEST_CASE("AWR with infinite temperature reproduces BC") {
  SeededRng rng(9);
  std::vector<RelabeledSample> data;
  for (int i = 0; i < 150; ++i) {
    const Vec s = (Vec(2) << rng.normal(), rng.normal()).finished();
    data.push_back(goal_sample(i / 10, i % 10, s, (Vec(2) << s(1), -s(0)).finished(), rng.normal()));
  }
  LearnerConfig cfg;
  cfg.epochs = 10;
  cfg.value_sweeps = 2;
  cfg.value_epochs = 2;
  const TrainResult bc = bc_train(data, cfg);
  cfg.beta = std::numeric_limits<double>::infinity();
  const TrainResult awr = awr_train(data, cfg);
  CHECK(awr.policy.net.flat_params() == bc.policy.net.flat_params());
  CHECK(awr.curve.back().mean_weight == 1.0);
}

TEST_CASE("learner rejects empty data and bad settings") {
  std::vector<RelabeledSample> none;
  try {
    bc_train(none, {});
    FAIL("expected EmptyDataset");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyDataset);
  }
  LearnerConfig cfg;
  cfg.expectile = 1.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.expectile = 0.9;
  cfg.beta = 0.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("evaluation: expert self-reference, random is worse, deterministic") {
  LinearEnv env;
  LowLevelSpec spec;
  spec.r_weight = 5.0;
  const HighPolicy expert = make_behavior_policy(PolicyKind::HierarchicalExpert, env);
  const EvalResult ref = evaluate_policy(expert, env, spec, 50, 10);
  const EvalResult self = evaluate_policy(expert, env, spec, 50, 10, ref.mean);
  CHECK(self.normalized == doctest::Approx(100.0).epsilon(1e-12));
  const HighPolicy random = [](const Env&, SeededRng& rng) {
    return HighAction::goal((Vec(2) << rng.uniform(-5, 5), rng.uniform(-5, 5)).finished());
  };
  const EvalResult rnd = evaluate_policy(random, env, spec, 50, 10, ref.mean);
  CHECK(rnd.mean < ref.mean);
  const EvalResult again = evaluate_policy(random, env, spec, 50, 10, ref.mean);
  CHECK(again.returns == rnd.returns);
}

TEST_CASE("AWR is at least as good as BC on mixed-quality goal data") {
  LinearEnv env;
  LowLevelSpec spec;
  spec.r_weight = 5.0;
  std::vector<Transition> raw;
  PolicyParams noisy;
  noisy.exploration_noise = 3.0;
  for (int ep = 0; ep < 100; ++ep) {
    const auto tr = collect_episode(env, PolicyKind::HierarchicalExpert, ep % 2 ? noisy : PolicyParams{}, spec, ep, ep);
    raw.insert(raw.end(), tr.begin(), tr.end());
  }
  const RelabelOutput rel = relabel_dataset(raw, env, spec, {}, 0);
  LearnerConfig cfg;
  cfg.epochs = 100;
  const TrainResult bc = bc_train(rel.samples, cfg);
  cfg.algorithm = Algorithm::AWR;
  const TrainResult awr = train(rel.samples, cfg);
  const EvalResult eb = evaluate_policy(bc.policy.as_policy(), env, spec, 20, 500);
  const EvalResult ea = evaluate_policy(awr.policy.as_policy(), env, spec, 20, 500);
  MESSAGE("BC mean " << eb.mean << ", AWR mean " << ea.mean);
  CHECK(ea.mean >= eb.mean);
}
