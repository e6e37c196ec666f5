#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "ssagait/contrastive/trainer.hpp"
#include "ssagait/dataset.hpp"
#include "ssagait/runtime.hpp"
#include "test_support.hpp"

using namespace ssagait;
using namespace ssagait::contrastive;
using Eigen::MatrixXd;

namespace {

TrainConfig tiny_config(std::uint64_t seed = 3) {
  TrainConfig cfg;
  cfg.seed = seed;
  cfg.batch_size = 4;
  cfg.bank_size = 12;
  cfg.epochs = 2;
  cfg.encoder = test::tiny_encoder();
  return cfg;
}

GaitDataset tiny_dataset(int n = 10) {
  SynthConfig sc;
  sc.n_samples = n;
  sc.seed = 4;
  return generate_synthetic(sc);
}

std::vector<const SkeletonSequence*> pointers(const GaitDataset& ds, int begin, int count) {
  std::vector<const SkeletonSequence*> out;
  for (int i = begin; i < begin + count; ++i) out.push_back(&ds.sequences[i]);
  return out;
}

}  // namespace

TEST_CASE("InfoNCE closed form with two orthogonal negatives") {
  MatrixXd q = MatrixXd::Zero(3, 1), bank = MatrixXd::Zero(3, 2);
  q(0, 0) = 1;
  bank(1, 0) = 1;
  bank(2, 1) = 1;
  const double expected = oracle::infonce_two_orthogonal(0.07);
  CHECK(expected == doctest::Approx(1.249e-6).epsilon(1e-3));
  const double got = infonce_loss<double>(q, q, bank, 0.07);
  CHECK(std::abs(got - expected) / expected < 1e-9);

  const auto p = conditional_distribution<double>(q, q, bank, 0.07);
  CHECK(p(0, 0) == doctest::Approx(1.0 - 2.0 * std::exp(-1.0 / 0.07)).epsilon(1e-12));
}

TEST_CASE("InfoNCE limits, monotonicity and consistency") {
  RngStream rng(1);
  const MatrixXd bank = oracle::unit_columns(8, 5, rng);
  const MatrixXd q = oracle::unit_columns(8, 3, rng), k = oracle::unit_columns(8, 3, rng);
  CHECK(infonce_loss<double>(q, k, bank, 1e9) == doctest::Approx(std::log(6.0)).epsilon(1e-9));

  const auto p = conditional_distribution<double>(q, k, bank, 0.07);
  const double mean_neg_log = -(p.row(0).array().log()).mean();
  CHECK(std::abs(infonce_loss<double>(q, k, bank, 0.07) - mean_neg_log) < 1e-9);

  // Moving the query toward its positive lowers the loss.
  const MatrixXd closer = (q + 0.3 * k).colwise().normalized();
  for (Eigen::Index n = 0; n < 3; ++n) {
    const MatrixXd qa = q.col(n), qb = closer.col(n), kk = k.col(n);
    if (qb.col(0).dot(kk.col(0)) > qa.col(0).dot(kk.col(0)))
      CHECK(infonce_loss<double>(qb, kk, bank, 0.07) < infonce_loss<double>(qa, kk, bank, 0.07));
  }

  CHECK_THROWS(infonce_loss<double>(q, k, MatrixXd(8, 0), 0.07));
  CHECK_THROWS(infonce_loss<double>(q, k, bank, 0.0));
}

TEST_CASE("conditional distributions are normalized") {
  RngStream rng(2);
  for (int trial = 0; trial < 1000; ++trial) {
    const int dim = 2 + static_cast<int>(rng.below(16)), m = 1 + static_cast<int>(rng.below(20));
    const MatrixXd bank = oracle::unit_columns(dim, m, rng);
    const MatrixXd q = oracle::unit_columns(dim, 2, rng), k = oracle::unit_columns(dim, 2, rng);
    const double tau = rng.uniform(0.07, 2.0);
    const auto p = conditional_distribution<double>(q, k, bank, tau);
    for (Eigen::Index n = 0; n < 2; ++n) CHECK(std::abs(p.col(n).sum() - 1.0) <= 1e-6);
    CHECK((p.array() > 0).all());
    CHECK((p.array() < 1).all());

    // Rescaling tau keeps the argmax.
    const auto p2 = conditional_distribution<double>(q, k, bank, tau * 3.7);
    for (Eigen::Index n = 0; n < 2; ++n) {
      Eigen::Index a = 0, b = 0;
      p.col(n).maxCoeff(&a);
      p2.col(n).maxCoeff(&b);
      CHECK(a == b);
    }
  }

  MatrixXd same = MatrixXd::Zero(4, 1);
  same(0, 0) = 1;
  MatrixXd bank = same.replicate(1, 3);
  const auto uniform = conditional_distribution<double>(same, same, bank, 0.07);
  CHECK((uniform.array() - 0.25).abs().maxCoeff() < 1e-15);
}

TEST_CASE("divergence loss matches a brute-force double sum") {
  RngStream rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const MatrixXd bank = oracle::unit_columns(5, 3, rng);
    const MatrixXd z1 = oracle::unit_columns(5, 2, rng), z2 = oracle::unit_columns(5, 2, rng);
    const MatrixXd z3 = oracle::unit_columns(5, 2, rng), z3d = oracle::unit_columns(5, 2, rng);
    const double tau = rng.uniform(0.05, 1.0);
    const auto got = ddm_loss<double>(z1, z2, z3, z3d, bank, tau);
    const auto ref = oracle::reference_ddm(z1, z2, z3, z3d, bank, tau);
    CHECK(std::abs(got.l_d1 - ref.l_d1) <= 1e-9 * std::abs(ref.l_d1));
    CHECK(std::abs(got.l_d2 - ref.l_d2) <= 1e-9 * std::abs(ref.l_d2));
    CHECK(std::abs(got.l_d - ref.l_d) <= 1e-9 * std::abs(ref.l_d));
    // Gibbs inequality.
    CHECK(got.l_d1 >= ref.target_entropy - 1e-12);
    CHECK(got.l_d2 >= ref.target_entropy - 1e-12);
    const auto target = conditional_distribution<double>(z2, z1, bank, tau);
    CHECK(mean_entropy<double>(target) == doctest::Approx(ref.target_entropy).epsilon(1e-12));

    const auto eq = ddm_loss<double>(z1, z2, z2, z2, bank, tau);
    CHECK(eq.l_d1 == doctest::Approx(ref.target_entropy).epsilon(1e-12));
    CHECK(eq.l_d2 == doctest::Approx(ref.target_entropy).epsilon(1e-12));
  }
}

TEST_CASE("objective gradients match central differences") {
  RngStream rng(4);
  const double tau = 0.07, alpha = 1.0, beta = 1.0;
  const MatrixXd bank = oracle::unit_columns(6, 7, rng);
  const MatrixXd z1 = oracle::unit_columns(6, 3, rng), z2 = oracle::unit_columns(6, 3, rng);
  const MatrixXd z3 = oracle::unit_columns(6, 3, rng), z3d = oracle::unit_columns(6, 3, rng);
  const auto o = oracle::objective(z1, z2, z3, z3d, bank, tau, alpha, beta);
  const MatrixXd target = conditional_distribution<double>(z2, z1, bank, tau);

  // The target is held fixed while z2 moves.
  const auto f2 = [&](const MatrixXd& x) {
    return alpha * infonce_loss<double>(x, z1, bank, tau) +
           beta * 0.5 *
               (distribution_cross_entropy<double>(target, z3, z1, bank, tau) +
                distribution_cross_entropy<double>(target, z3d, z1, bank, tau));
  };
  const auto f3 = [&](const MatrixXd& x) { return oracle::objective(z1, z2, x, z3d, bank, tau, alpha, beta).total; };
  const auto f3d = [&](const MatrixXd& x) { return oracle::objective(z1, z2, z3, x, bank, tau, alpha, beta).total; };
  CHECK(oracle::relative_error(o.dz2, oracle::numeric_gradient(f2, z2, 1e-5)) < 1e-4);
  CHECK(oracle::relative_error(o.dz3, oracle::numeric_gradient(f3, z3, 1e-5)) < 1e-4);
  CHECK(oracle::relative_error(o.dz3d, oracle::numeric_gradient(f3d, z3d, 1e-5)) < 1e-4);

  // The divergence term sends nothing into z2: its gradient is InfoNCE's alone.
  MatrixXd dinfo;
  infonce_loss<double>(z2, z1, bank, tau, &dinfo);
  CHECK(o.dz2 == alpha * dinfo);
}

TEST_CASE("key encoder never receives gradients") {
  configure_runtime();
  const auto ds = tiny_dataset(8);
  ContrastiveTrainer<double> trainer(tiny_config(), ds.topology);
  for (int s = 0; s < 2; ++s) trainer.step(pointers(ds, 4 * s, 4), 0);
  for (auto* p : trainer.key().parameters()) CHECK(p->grad.isZero(0));
  bool query_moved = false;
  for (auto* p : trainer.query().parameters()) query_moved = query_moved || !p->grad.isZero(0);
  CHECK(query_moved);
}

TEST_CASE("momentum update") {
  RngStream rng(5);
  nn::Parameter<double> k, q;
  k.resize(4, 3);
  q.resize(4, 3);
  for (Eigen::Index i = 0; i < 12; ++i) {
    k.value.data()[i] = rng.uniform(-1, 1);
    q.value.data()[i] = rng.uniform(-1, 1);
  }
  const MatrixXd k0 = k.value;
  std::vector<nn::Parameter<double>*> kp{&k}, qp{&q};
  const double m = 0.999;
  for (int step = 1; step <= 100; ++step) {
    momentum_update(kp, qp, m);
    const double mk = std::pow(m, step);
    CHECK((k.value - (mk * k0 + (1 - mk) * q.value)).cwiseAbs().maxCoeff() <= 1e-10);
  }

  momentum_update(kp, qp, 1.0);
  const MatrixXd before = k.value;
  CHECK(k.value == before);
  momentum_update(kp, qp, 0.0);
  CHECK(k.value == q.value);

  nn::Parameter<double> zero, one;
  zero.resize(1, 1);
  one.resize(1, 1);
  one.value(0, 0) = 1.0;
  std::vector<nn::Parameter<double>*> zk{&zero}, oq{&one};
  momentum_update(zk, oq, 0.999);
  CHECK(zero.value(0, 0) == doctest::Approx(0.001).epsilon(1e-12));

  nn::Parameter<double> wrong;
  wrong.resize(2, 2);
  std::vector<nn::Parameter<double>*> wp{&wrong};
  CHECK_THROWS(momentum_update(wp, qp, 0.5));
  CHECK_THROWS(momentum_update(kp, qp, 1.5));
}

TEST_CASE("memory bank is a FIFO of the newest keys") {
  const int cap = 40;
  MemoryBank<double> bank(3, cap);
  std::vector<Eigen::Vector3d> all;
  RngStream rng(6);
  int pushed = 0;
  while (pushed < 3 * cap) {
    const int k = std::min(1 + static_cast<int>(rng.below(9)), 3 * cap - pushed);
    MatrixXd keys(3, k);
    for (int j = 0; j < k; ++j) {
      const double a = 0.01 * (pushed + j);
      keys.col(j) << std::cos(a), std::sin(a), 0.0;
      all.emplace_back(keys.col(j));
    }
    bank.enqueue(keys);
    pushed += k;
    CHECK(bank.size() == std::min(pushed, cap));
  }
  CHECK(bank.full());
  const MatrixXd ordered = bank.ordered();
  for (int j = 0; j < cap; ++j) CHECK(ordered.col(j) == all[all.size() - cap + j]);
  for (int j = 0; j < cap; ++j) CHECK(std::abs(ordered.col(j).norm() - 1.0) <= 1e-6);

  // A chunk larger than the capacity keeps only its newest columns.
  MatrixXd big(3, cap + 5);
  for (int j = 0; j < cap + 5; ++j) big.col(j) << std::cos(j), std::sin(j), 0.0;
  bank.enqueue(big);
  CHECK(bank.ordered() == big.rightCols(cap));

  CHECK_THROWS(bank.enqueue(MatrixXd::Ones(3, 1)));
  bank.clear();
  CHECK(bank.empty());
}

TEST_CASE("learning-rate schedule") {
  const TrainConfig cfg;
  CHECK(cfg.lr_at(0) == 1e-3);
  CHECK(cfg.lr_at(399) == 1e-3);
  CHECK(cfg.lr_at(400) == doctest::Approx(1e-4).epsilon(1e-12));
  CHECK(cfg.lr_at(499) == doctest::Approx(1e-4).epsilon(1e-12));
  StepSchedule two{1.0, {2, 4}, 0.5};
  CHECK(two.at(1) == 1.0);
  CHECK(two.at(2) == 0.5);
  CHECK(two.at(5) == 0.25);
}

TEST_CASE("SGD follows momentum with folded weight decay") {
  nn::Parameter<double> p;
  p.resize(1, 1);
  p.value(0, 0) = 1.0;
  Sgd<double> sgd({&p}, 0.9, 0.1);
  p.grad(0, 0) = 0.5;
  sgd.step(0.1);  // v = 0.5 + 0.1 = 0.6
  CHECK(p.value(0, 0) == doctest::Approx(0.94).epsilon(1e-14));
  p.grad(0, 0) = 0.5;
  sgd.step(0.1);  // v = 0.9 * 0.6 + 0.5 + 0.094 = 1.134
  CHECK(p.value(0, 0) == doctest::Approx(0.94 - 0.1134).epsilon(1e-14));
}

TEST_CASE("training steps: bank growth, loss composition, determinism") {
  configure_runtime();
  const auto ds = tiny_dataset(10);
  auto cfg = tiny_config();
  cfg.alpha = 0.7;
  cfg.beta = 1.3;

  ContrastiveTrainer<double> a(cfg, ds.topology), b(cfg, ds.topology);
  std::vector<int> sizes;
  for (int s = 0; s < 5; ++s) {
    const auto batch = pointers(ds, (2 * s) % 6, 4);
    const auto ra = a.step(batch, 0);
    const auto rb = b.step(batch, 0);
    CHECK(ra == rb);
    CHECK(std::abs(ra.total - (cfg.alpha * ra.l_info + cfg.beta * ra.l_d)) <= 1e-9);
    CHECK(ra.l_d == doctest::Approx(0.5 * (ra.l_d1 + ra.l_d2)).epsilon(1e-12));
    CHECK(std::isfinite(ra.total));
    CHECK(ra.lr == cfg.lr_at(0));
    CHECK(ra.step == s);
    sizes.push_back(ra.bank_size);
  }
  CHECK(sizes == std::vector<int>{4, 8, 12, 12, 12});
  CHECK(a.bank().ordered() == b.bank().ordered());

  // The baseline has no divergence term.
  auto base_cfg = cfg;
  base_cfg.strong_branch = false;
  ContrastiveTrainer<double> base(base_cfg, ds.topology);
  const auto r = base.step(pointers(ds, 0, 4), 0);
  CHECK(r.l_d == 0.0);
  CHECK(r.total == doctest::Approx(cfg.alpha * r.l_info).epsilon(1e-15));
}

TEST_CASE("views are deterministic regardless of worker count") {
  const auto ds = tiny_dataset(6);
  auto cfg = tiny_config();
  const auto batch = pointers(ds, 0, 6);
  const auto v1 = make_views<float>(batch, ds.topology, cfg, 3);
  cfg.workers = 3;
  const auto v3 = make_views<float>(batch, ds.topology, cfg, 3);
  CHECK(v1.s1 == v3.s1);
  CHECK(v1.s2 == v3.s2);
  CHECK(v1.s3 == v3.s3);
  CHECK_FALSE(v1.s1 == v1.s2);
  const auto other = make_views<float>(batch, ds.topology, cfg, 4);
  CHECK_FALSE(other.s1 == v1.s1);
}

TEST_CASE("epoch order is a seeded permutation") {
  const auto o = epoch_order(7, 3, 50);
  auto sorted = o;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 50; ++i) CHECK(sorted[i] == i);
  CHECK(o == epoch_order(7, 3, 50));
  CHECK(o != epoch_order(7, 4, 50));
}

TEST_CASE("pretraining lowers the loss") {
  configure_runtime();
  const auto ds = tiny_dataset(24);
  auto cfg = tiny_config(9);
  cfg.epochs = 12;
  cfg.lr = {0.05, {}, 0.1};
  std::vector<const SkeletonSequence*> ptrs;
  for (const auto& s : ds.sequences) ptrs.push_back(&s);
  std::vector<double> totals;
  pretrain_run<float>(ptrs, ds.topology, cfg, [&](const StepReport& r) { totals.push_back(r.total); });
  REQUIRE(totals.size() == 12u * 6);
  double first = 0, last = 0;
  for (int i = 0; i < 10; ++i) {
    first += totals[i];
    last += totals[totals.size() - 1 - i];
  }
  CHECK(last < first);
}

TEST_CASE("config validation") {
  TrainConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.tau = 0;
  CHECK_THROWS(cfg.validate());
  cfg = {};
  cfg.key_momentum = 1.0;
  CHECK_THROWS(cfg.validate());
  cfg = {};
  cfg.batch_size = 1;
  CHECK_THROWS(cfg.validate());
  cfg = {};
  cfg.alpha = -1;
  CHECK_THROWS(cfg.validate());
}
