#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "knaf/learner.hpp"
#include "test_util.hpp"

using knaf::GaussianKernel;
using knaf::NAFPolicy;
using knaf::Transition;
using knaf::TrainConfig;
using testutil::random_vec;

namespace {

NAFPolicy random_policy(std::mt19937_64& rng, int p, int q, int order,
                        double l0 = 0.8) {
  NAFPolicy pol(GaussianKernel(0.75, p), Eigen::VectorXd::Constant(q, -10.0),
                Eigen::VectorXd::Constant(q, 10.0), l0);
  for (int i = 0; i < order; ++i) {
    pol = pol.add_center(random_vec(rng, p, -2.0, 2.0),
                         random_vec(rng, pol.stacked_dim(), -0.5, 0.5));
  }
  return pol;
}

/// Deterministic 2-D drift environment; remembers every state it was stepped
/// from so tests can recount visitation.
class ToyEnv {
public:
  int state_dim() const { return 2; }
  int action_dim() const { return 1; }
  Eigen::VectorXd action_low() const {
    return Eigen::VectorXd::Constant(1, -1.0);
  }
  Eigen::VectorXd action_high() const {
    return Eigen::VectorXd::Constant(1, 1.0);
  }

  Eigen::VectorXd reset(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    pos_ = Eigen::Vector2d(u(rng), u(rng));
    return pos_;
  }

  knaf::EnvStep step(const Eigen::VectorXd& a) {
    visited.push_back(pos_);
    ++count_;
    pos_(0) = wrap(pos_(0) + 0.25 + 0.2 * a(0));
    pos_(1) = wrap(pos_(1) + 0.11);
    const bool done = done_period > 0 && count_ % done_period == 0;
    return {pos_, -0.1 * pos_.squaredNorm() + (done ? -1.0 : 0.0), done};
  }

  int done_period = 0;  // 0 = never terminal
  std::vector<Eigen::Vector2d> visited;

private:
  static double wrap(double x) {
    while (x > 2.0) x -= 4.0;
    while (x < -2.0) x += 4.0;
    return x;
  }
  Eigen::Vector2d pos_ = Eigen::Vector2d::Zero();
  long count_ = 0;
};

TrainConfig toy_config() {
  TrainConfig cfg;
  cfg.bandwidth = Eigen::VectorXd::Constant(2, 0.75);
  cfg.sigma_explore = Eigen::VectorXd::Constant(1, 0.2);
  cfg.epsilon = 0.5;
  cfg.max_steps = 200;
  cfg.episode_max_len = 50;
  cfg.seed = 3;
  return cfg;
}

}  // namespace

TEST_CASE("td error: empty policy and terminal transitions") {
  std::mt19937_64 rng(1);
  NAFPolicy empty(GaussianKernel(0.75, 2), Eigen::VectorXd::Constant(1, -1.0),
                  Eigen::VectorXd::Constant(1, 1.0), 0.01);
  Transition t{random_vec(rng, 2, -1, 1), random_vec(rng, 1, -1, 1), 1.0,
               random_vec(rng, 2, -1, 1), false};
  knaf::TdError e = knaf::td_error(empty, t, 0.99);
  CHECK(e.y == 1.0);
  CHECK(e.delta == doctest::Approx(1.0 - knaf::q_value(empty, t.s, t.a)));

  NAFPolicy pol = random_policy(rng, 2, 1, 4);
  t.r = -200.0;
  t.done = true;
  e = knaf::td_error(pol, t, 0.99);
  CHECK(e.y == -200.0);
}

TEST_CASE("td error recomposes from evaluations") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    NAFPolicy pol = random_policy(rng, 2, 2, 5);
    Transition t{random_vec(rng, 2, -2, 2), random_vec(rng, 2, -1, 1),
                 std::uniform_real_distribution<double>(-2, 2)(rng),
                 random_vec(rng, 2, -2, 2), false};
    const double gamma = 0.97;
    knaf::TdError e = knaf::td_error(pol, t, gamma);
    const double y = t.r + gamma * pol.value(t.s_next);
    const double q = pol.value(t.s) + knaf::advantage(pol, t.s, t.a);
    CHECK(e.y == doctest::Approx(y).epsilon(1e-13));
    CHECK(e.delta == doctest::Approx(y - q).epsilon(1e-12));
  }
}

TEST_CASE("zero TD error moves only the density") {
  std::mt19937_64 rng(3);
  TrainConfig cfg = toy_config();
  for (int trial = 0; trial < 50; ++trial) {
    NAFPolicy pol = random_policy(rng, 2, 1, 4);
    Transition t{random_vec(rng, 2, -2, 2), random_vec(rng, 1, -1, 1), 0.0,
                 random_vec(rng, 2, -2, 2), true};
    t.r = knaf::q_value(pol, t.s, t.a);  // forces y == Q exactly
    NAFPolicy out = knaf::gradient_step(pol, t, cfg);
    REQUIRE(out.order() == pol.order() + 1);
    const Eigen::VectorXd row = out.stacked_weights().bottomRows(1).transpose();
    CHECK(row(NAFPolicy::value_col()) == 0.0);
    CHECK(row.segment(out.pi_col(), 1).norm() == 0.0);
    CHECK(row.segment(out.l_col(), 1).norm() == 0.0);
    CHECK(row(out.rho_col()) == 1.0);
  }
}

TEST_CASE("acting at the policy mean moves only V and the density") {
  std::mt19937_64 rng(4);
  TrainConfig cfg = toy_config();
  for (int trial = 0; trial < 50; ++trial) {
    NAFPolicy pol = random_policy(rng, 2, 2, 4);
    cfg.sigma_explore = Eigen::VectorXd::Constant(2, 0.2);
    Transition t{random_vec(rng, 2, -2, 2), Eigen::VectorXd(), 0.7,
                 random_vec(rng, 2, -2, 2), false};
    t.a = pol.policy_mean(t.s);
    NAFPolicy out = knaf::gradient_step(pol, t, cfg);
    const Eigen::VectorXd row = out.stacked_weights().bottomRows(1).transpose();
    CHECK(row.segment(out.pi_col(), 2).norm() == 0.0);
    CHECK(row.segment(out.l_col(), 4).norm() == 0.0);
    CHECK(row(out.rho_col()) == 1.0);
    CHECK(row(NAFPolicy::value_col()) != 0.0);
  }
}

TEST_CASE("single step from the empty policy matches the closed form") {
  TrainConfig cfg = toy_config();
  cfg.alpha = 0.25;
  cfg.beta = 0.25;
  cfg.zeta = 0.001;
  cfg.l0 = 0.01;
  NAFPolicy empty(GaussianKernel(0.75, 2), Eigen::VectorXd::Constant(1, -1.0),
                  Eigen::VectorXd::Constant(1, 1.0), cfg.l0);
  Transition t;
  t.s = Eigen::Vector2d(0.4, -0.2);
  t.a = Eigen::VectorXd::Constant(1, 0.6);
  t.r = 1.0;
  t.s_next = Eigen::Vector2d(0.5, -0.1);
  t.done = false;

  // V=0, pi=0, L=l0 everywhere: y = r, delta = r + l0^2 a^2 / 2.
  const double a = t.a(0);
  const double delta = t.r + 0.5 * cfg.l0 * cfg.l0 * a * a;
  NAFPolicy out = knaf::gradient_step(empty, t, cfg);
  REQUIRE(out.order() == 1);
  const Eigen::VectorXd row = out.stacked_weights().row(0).transpose();
  CHECK(row(0) == doctest::Approx(cfg.alpha * delta).epsilon(1e-14));
  CHECK(row(1) ==
        doctest::Approx(cfg.beta * delta * cfg.l0 * cfg.l0 * a).epsilon(1e-14));
  CHECK(row(2) ==
        doctest::Approx(-cfg.zeta * delta * cfg.l0 * a * a).epsilon(1e-14));
  CHECK(row(3) == 1.0);
}

TEST_CASE("update directions match central finite differences of the loss") {
  std::mt19937_64 rng(5);
  TrainConfig cfg = toy_config();
  cfg.sigma_explore = Eigen::VectorXd::Constant(2, 0.2);
  const int q = 2;
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    NAFPolicy pol = random_policy(rng, 2, q, 4);
    Transition t{random_vec(rng, 2, -2, 2), random_vec(rng, q, -1.5, 1.5), 1.3,
                 random_vec(rng, 2, -2, 2), false};
    const knaf::TdError e = knaf::td_error(pol, t, cfg.gamma);
    const double y = e.y;

    const Eigen::VectorXd stacked = pol.stacked_eval(t.s);
    const double v0 = stacked(NAFPolicy::value_col());
    const Eigen::VectorXd m0 = stacked.segment(pol.pi_col(), q);
    const Eigen::MatrixXd l_base = pol.advantage_factor_from(stacked);

    const auto loss = [&](double v, const Eigen::VectorXd& m,
                          const Eigen::MatrixXd& l) {
      const Eigen::VectorXd u = t.a - m;
      const double qv = v - 0.5 * (l * u).squaredNorm();
      return 0.5 * (y - qv) * (y - qv);
    };

    NAFPolicy out = knaf::gradient_step(pol, t, cfg);
    REQUIRE(out.order() == pol.order() + 1);
    const Eigen::VectorXd row = out.stacked_weights().bottomRows(1).transpose();

    const double h = 1e-5;
    const auto close = [&](double analytic, double fd) {
      const double scale = std::max({std::abs(analytic), std::abs(fd), 1e-3});
      CHECK(std::abs(analytic - fd) <= 1e-4 * scale);
    };

    // dV direction: row_V = -alpha * df/dv.
    const double dv = (loss(v0 + h, m0, l_base) - loss(v0 - h, m0, l_base)) /
                      (2 * h);
    close(row(NAFPolicy::value_col()), -cfg.alpha * dv);

    // dpi direction per coordinate.
    for (int i = 0; i < q; ++i) {
      Eigen::VectorXd mp = m0, mm = m0;
      mp(i) += h;
      mm(i) -= h;
      const double dm = (loss(v0, mp, l_base) - loss(v0, mm, l_base)) / (2 * h);
      close(row(pol.pi_col() + i), -cfg.beta * dm);
    }

    // dL direction per matrix entry.
    for (int r = 0; r < q; ++r) {
      for (int c = 0; c < q; ++c) {
        Eigen::MatrixXd lp = l_base, lm = l_base;
        lp(r, c) += h;
        lm(r, c) -= h;
        const double dl = (loss(v0, m0, lp) - loss(v0, m0, lm)) / (2 * h);
        close(row(pol.l_col() + r * q + c), -cfg.zeta * dl);
      }
    }
    ++checked;
  }
  CHECK(checked == 200);
}

TEST_CASE("lambda shrinks existing V/pi/L weights but not rho") {
  std::mt19937_64 rng(6);
  TrainConfig cfg = toy_config();
  cfg.lambda = 0.1;
  NAFPolicy pol = random_policy(rng, 2, 1, 3);
  Transition t{random_vec(rng, 2, -2, 2), random_vec(rng, 1, -1, 1), 0.5,
               random_vec(rng, 2, -2, 2), false};
  NAFPolicy out = knaf::gradient_step(pol, t, cfg);
  const Eigen::MatrixXd& w0 = pol.stacked_weights();
  const Eigen::MatrixXd& w1 = out.stacked_weights();
  for (int n = 0; n < pol.order(); ++n) {
    CHECK(w1(n, 0) == doctest::Approx(w0(n, 0) * (1 - cfg.alpha * cfg.lambda)));
    CHECK(w1(n, 1) == doctest::Approx(w0(n, 1) * (1 - cfg.beta * cfg.lambda)));
    CHECK(w1(n, 2) == doctest::Approx(w0(n, 2) * (1 - cfg.zeta * cfg.lambda)));
    CHECK(w1(n, 3) == w0(n, 3));
  }
}

TEST_CASE("max_steps = 0 returns the stated initialization") {
  ToyEnv env;
  TrainConfig cfg = toy_config();
  cfg.max_steps = 0;
  knaf::TrainResult r = knaf::train(env, cfg);
  CHECK(r.policy.order() == 0);
  CHECK(r.steps.empty());
  Eigen::VectorXd s = Eigen::Vector2d(0.3, 0.4);
  CHECK(r.policy.value(s) == 0.0);
  CHECK(r.policy.policy_mean(s).norm() == 0.0);
  CHECK(r.policy.advantage_factor(s) ==
        Eigen::MatrixXd::Identity(1, 1) * cfg.l0);
  CHECK(r.policy.density(s) == 0.0);
}

TEST_CASE("one training step is explore + gradient_step + compress") {
  TrainConfig cfg = toy_config();
  cfg.max_steps = 1;
  ToyEnv env;
  knaf::TrainResult r = knaf::train(env, cfg);

  ToyEnv env2;
  std::mt19937_64 rng(cfg.seed);
  NAFPolicy manual(GaussianKernel(cfg.bandwidth),
                   env2.action_low(), env2.action_high(), cfg.l0);
  Eigen::VectorXd obs = env2.reset(rng);
  Transition t;
  t.s = obs;
  t.a = knaf::explore_action(manual, obs, cfg.sigma_explore, rng);
  knaf::EnvStep es = env2.step(t.a);
  t.r = es.reward;
  t.s_next = es.obs;
  t.done = es.done;
  manual = knaf::compress_policy(knaf::gradient_step(manual, t, cfg),
                                 cfg.epsilon);
  CHECK(r.policy.centers() == manual.centers());
  CHECK(r.policy.stacked_weights() == manual.stacked_weights());
}

TEST_CASE("density equals the kernel recount when compression is off") {
  ToyEnv env;
  TrainConfig cfg = toy_config();
  cfg.enable_compression = false;
  cfg.max_steps = 300;
  knaf::TrainResult r = knaf::train(env, cfg);
  REQUIRE(env.visited.size() == 300);

  std::mt19937_64 rng(9);
  const GaussianKernel& k = r.policy.kernel();
  for (int probe = 0; probe < 50; ++probe) {
    Eigen::VectorXd s = random_vec(rng, 2, -2.0, 2.0);
    double expect = 0.0;
    for (const Eigen::Vector2d& v : env.visited) {
      expect += k(v, s);
    }
    CHECK(r.policy.density(s) == doctest::Approx(expect).epsilon(1e-10));
  }
}

TEST_CASE("same seed and config reproduce the run bit for bit") {
  TrainConfig cfg = toy_config();
  cfg.max_steps = 150;
  ToyEnv e1, e2;
  e1.done_period = 40;
  e2.done_period = 40;
  knaf::TrainResult a = knaf::train(e1, cfg);
  knaf::TrainResult b = knaf::train(e2, cfg);
  REQUIRE(a.steps.size() == b.steps.size());
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    CHECK(a.steps[i].reward == b.steps[i].reward);
    CHECK(a.steps[i].delta == b.steps[i].delta);
    CHECK(a.steps[i].model_order == b.steps[i].model_order);
    CHECK(a.steps[i].episode == b.steps[i].episode);
  }
  CHECK(a.policy.centers() == b.policy.centers());
  CHECK(a.policy.stacked_weights() == b.policy.stacked_weights());
}

TEST_CASE("episode bookkeeping on terminals and truncation") {
  ToyEnv env;
  env.done_period = 30;
  TrainConfig cfg = toy_config();
  cfg.max_steps = 100;
  cfg.episode_max_len = 12;  // truncates before any terminal fires
  knaf::TrainResult r = knaf::train(env, cfg);
  REQUIRE(!r.episodes.empty());
  long total_len = 0;
  for (const auto& ep : r.episodes) {
    total_len += ep.length;
    CHECK(ep.length <= cfg.episode_max_len);
  }
  CHECK(total_len <= cfg.max_steps);
  // Episode indices in step records are consistent and nondecreasing.
  long prev = 0;
  for (const auto& srec : r.steps) {
    CHECK(srec.episode >= prev);
    prev = srec.episode;
  }
}

TEST_CASE("non-finite rewards abort with a diagnostic") {
  class NanEnv : public ToyEnv {
  public:
    knaf::EnvStep step(const Eigen::VectorXd& a) {
      knaf::EnvStep es = ToyEnv::step(a);
      if (++n_ == 3) es.reward = std::nan("");
      return es;
    }

  private:
    int n_ = 0;
  };
  NanEnv env;
  TrainConfig cfg = toy_config();
  CHECK_THROWS_AS(knaf::train(env, cfg), std::runtime_error);
}

TEST_CASE("config validation") {
  TrainConfig cfg = toy_config();
  cfg.gamma = 1.0;
  CHECK_THROWS_AS(cfg.validate(2, 1), std::invalid_argument);
  cfg = toy_config();
  cfg.alpha = 0.0;
  CHECK_THROWS_AS(cfg.validate(2, 1), std::invalid_argument);
  cfg = toy_config();
  cfg.bandwidth = Eigen::VectorXd::Constant(3, 0.75);
  CHECK_THROWS_AS(cfg.validate(2, 1), std::invalid_argument);
  cfg = toy_config();
  CHECK_NOTHROW(cfg.validate(2, 1));
}
