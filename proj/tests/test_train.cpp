#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "npgnn/data_io.hpp"
#include "npgnn/training.hpp"

using namespace npgnn;

namespace {

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
  REQUIRE(a.same_shape(b));
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

// O(P * N) pairwise counting definition of AUC
double auc_oracle(const std::vector<int>& labels, const std::vector<double>& scores) {
  double wins = 0.0;
  std::size_t p = 0, n = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 1) continue;
    ++p;
    for (std::size_t j = 0; j < labels.size(); ++j) {
      if (labels[j] == 1) continue;
      if (scores[i] > scores[j]) wins += 1.0;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  n = labels.size() - p;
  return wins / (static_cast<double>(p) * static_cast<double>(n));
}

// direct summation definition of AP with stable score-descending order
double ap_oracle(const std::vector<int>& labels, const std::vector<double>& scores) {
  std::vector<std::size_t> idx(labels.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double hits = 0.0, sum = 0.0, total = 0.0;
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (labels[idx[r]] == 1) {
      hits += 1.0;
      sum += hits / static_cast<double>(r + 1);
    }
  }
  for (int l : labels) total += l == 1 ? 1.0 : 0.0;
  return sum / total;
}

}  // namespace

TEST_CASE("glorot_init bound, reproducibility, and mean") {
  Rng a(42), b(42);
  DenseMatrix m1 = glorot_init(2, 4, a);
  DenseMatrix m2 = glorot_init(2, 4, b);
  CHECK(max_abs_diff(m1, m2) == 0.0);
  double bound = std::sqrt(6.0 / (2 + 4));  // = 1.0
  CHECK(bound == doctest::Approx(1.0));
  for (std::size_t i = 0; i < m1.size(); ++i) {
    CHECK(m1.data()[i] <= bound);
    CHECK(m1.data()[i] >= -bound);
  }

  Rng big(7);
  const std::size_t rows = 500, cols = 200;  // 1e5 draws
  DenseMatrix m = glorot_init(rows, cols, big);
  double mean = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) mean += m.data()[i];
  mean /= static_cast<double>(m.size());
  double a_bound = std::sqrt(6.0 / (rows + cols));
  double se = a_bound / std::sqrt(3.0 * static_cast<double>(m.size()));
  CHECK(std::abs(mean) < 3.0 * se);
}

TEST_CASE("adam_step with zero gradient leaves parameters unchanged") {
  DenseMatrix w(2, 2, {1, 2, 3, 4});
  DenseMatrix w0 = w;
  std::vector<DenseMatrix*> params{&w};
  AdamState st = AdamState::like(params);
  std::vector<DenseMatrix> grads{DenseMatrix(2, 2)};
  adam_step(params, grads, st, 0.01, 0.9, 0.999, 1e-8);
  CHECK(max_abs_diff(w, w0) == 0.0);
  CHECK(st.t == 1);
  adam_step(params, grads, st, 0.01, 0.9, 0.999, 1e-8);
  CHECK(st.t == 2);
}

TEST_CASE("adam first step moves by roughly the learning rate") {
  DenseMatrix w(1, 1, 0.0);
  std::vector<DenseMatrix*> params{&w};
  AdamState st = AdamState::like(params);
  std::vector<DenseMatrix> grads{DenseMatrix(1, 1, 1.0)};
  adam_step(params, grads, st, 0.01, 0.9, 0.999, 1e-8);
  // bias correction makes m_hat = v_hat = g on step one
  CHECK(w(0, 0) == doctest::Approx(-0.01).epsilon(1e-6));
}

TEST_CASE("adam matches a scalar reference over random gradient sequences") {
  Rng rng(33);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int rep = 0; rep < 100; ++rep) {
    double lr = 0.05, b1 = 0.9, b2 = 0.999, eps = 1e-8;
    DenseMatrix w(1, 1, u(rng));
    double w_ref = w(0, 0), m = 0.0, v = 0.0;
    std::vector<DenseMatrix*> params{&w};
    AdamState st = AdamState::like(params);
    for (int t = 1; t <= 10; ++t) {
      double g = u(rng);
      std::vector<DenseMatrix> grads{DenseMatrix(1, 1, g)};
      adam_step(params, grads, st, lr, b1, b2, eps);
      m = b1 * m + (1 - b1) * g;
      v = b2 * v + (1 - b2) * g * g;
      double mh = m / (1 - std::pow(b1, t));
      double vh = v / (1 - std::pow(b2, t));
      w_ref -= lr * mh / (std::sqrt(vh) + eps);
      CHECK(w(0, 0) == doctest::Approx(w_ref).epsilon(1e-12));
    }
  }
}

TEST_CASE("adam rejects non-finite gradients") {
  DenseMatrix w(1, 1, 0.0);
  std::vector<DenseMatrix*> params{&w};
  AdamState st = AdamState::like(params);
  std::vector<DenseMatrix> grads{DenseMatrix(1, 1, std::nan(""))};
  CHECK_THROWS_AS(adam_step(params, grads, st, 0.01, 0.9, 0.999, 1e-8), NumericError);
}

TEST_CASE("roc_auc known values") {
  CHECK(roc_auc({1, 0}, {0.9, 0.1}) == doctest::Approx(1.0));
  CHECK(roc_auc({1, 0}, {0.1, 0.9}) == doctest::Approx(0.0));
  CHECK(roc_auc({1, 0}, {0.5, 0.5}) == doctest::Approx(0.5));
  CHECK(roc_auc({1, 1, 0, 0}, {0.8, 0.4, 0.6, 0.2}) == doctest::Approx(0.75));
  CHECK_THROWS_AS(roc_auc({1, 1}, {0.5, 0.6}), InputError);
  CHECK_THROWS_AS(roc_auc({0, 0}, {0.5, 0.6}), InputError);
}

TEST_CASE("roc_auc matches pairwise-counting oracle and is rank invariant") {
  Rng rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::bernoulli_distribution lab(0.4);
  std::uniform_int_distribution<int> quant(0, 9);
  for (int rep = 0; rep < 100; ++rep) {
    std::size_t n = 30;
    std::vector<int> labels(n);
    std::vector<double> scores(n);
    bool has_pos = false, has_neg = false;
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = lab(rng) ? 1 : 0;
      scores[i] = quant(rng) / 10.0;  // coarse grid forces ties
      (labels[i] ? has_pos : has_neg) = true;
    }
    if (!has_pos || !has_neg) continue;
    double got = roc_auc(labels, scores);
    CHECK(got == doctest::Approx(auc_oracle(labels, scores)).epsilon(1e-12));

    // strictly monotone transform of scores preserves AUC
    std::vector<double> warped(n);
    for (std::size_t i = 0; i < n; ++i) warped[i] = std::exp(3.0 * scores[i]) - 0.5;
    CHECK(roc_auc(labels, warped) == doctest::Approx(got).epsilon(1e-12));
  }
}

TEST_CASE("roc_auc on balanced random scores is near one half") {
  Rng rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::size_t n = 20000;
  std::vector<int> labels(n);
  std::vector<double> scores(n);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = i % 2;
    scores[i] = u(rng);
  }
  CHECK(roc_auc(labels, scores) == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("average_precision known values and oracle") {
  CHECK(average_precision({1, 1, 0, 0}, {0.9, 0.8, 0.2, 0.1}) == doctest::Approx(1.0));
  // ranks: pos@1, neg@2, pos@3 -> (1/1 + 2/3) / 2
  CHECK(average_precision({1, 0, 1}, {0.9, 0.8, 0.7}) ==
        doctest::Approx((1.0 + 2.0 / 3.0) / 2.0).epsilon(1e-9));
  CHECK((1.0 + 2.0 / 3.0) / 2.0 == doctest::Approx(0.833333).epsilon(1e-6));
  CHECK_THROWS_AS(average_precision({0, 0}, {0.5, 0.6}), InputError);

  Rng rng(71);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::bernoulli_distribution lab(0.3);
  for (int rep = 0; rep < 500; ++rep) {
    std::size_t n = 25;
    std::vector<int> labels(n);
    std::vector<double> scores(n);
    bool has_pos = false;
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = lab(rng) ? 1 : 0;
      scores[i] = u(rng);
      if (labels[i]) has_pos = true;
    }
    if (!has_pos) continue;
    CHECK(average_precision(labels, scores) ==
          doctest::Approx(ap_oracle(labels, scores)).epsilon(1e-12));
  }
}

TEST_CASE("average_precision is 1 exactly when positives outrank negatives") {
  std::vector<int> labels{1, 1, 1, 0, 0};
  std::vector<double> separated{0.9, 0.8, 0.7, 0.3, 0.2};
  CHECK(average_precision(labels, separated) == doctest::Approx(1.0));
  std::vector<double> mixed{0.9, 0.8, 0.25, 0.3, 0.2};
  CHECK(average_precision(labels, mixed) < 1.0);
}

TEST_CASE("metrics report aggregation") {
  MetricsReport r = MetricsReport::aggregate({0.9, 0.8, 0.7}, {0.6, 0.6, 0.6});
  CHECK(r.auc_mean == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(r.ap_mean == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(r.ap_se == doctest::Approx(0.0).epsilon(1e-12));
  // sample std = 0.1, se = 0.1 / sqrt(3)
  CHECK(r.auc_se == doctest::Approx(0.1 / std::sqrt(3.0)).epsilon(1e-9));
}

TEST_CASE("training is deterministic for a fixed seed") {
  Rng data_rng(2);
  Graph g = generate_sbm(24, 2, 0.6, 0.05, 2, data_rng);
  Rng split_rng(3);
  SplitBundle split = make_transductive_split(g, 0.1, 0.05, split_rng);

  TrainConfig cfg;
  cfg.iterations = 10;
  cfg.eval_every = 5;
  cfg.seed = 11;
  cfg.model.hidden1 = 8;
  cfg.model.latent = 4;
  cfg.model.hidden2 = 8;
  cfg.model.embed = 4;

  TrainRun a = train(split, cfg);
  TrainRun b = train(split, cfg);
  REQUIRE(a.loss_history.size() == 10);
  for (std::size_t i = 0; i < a.loss_history.size(); ++i)
    CHECK(a.loss_history[i] == b.loss_history[i]);
  CHECK(a.test_auc == b.test_auc);
  CHECK(a.test_ap == b.test_ap);
  auto ab = a.params.blocks();
  auto bb = b.params.blocks();
  for (std::size_t i = 0; i < ab.size(); ++i) CHECK(max_abs_diff(*ab[i], *bb[i]) == 0.0);
}

TEST_CASE("full-graph context makes every KL term zero") {
  Rng data_rng(4);
  Graph g = generate_sbm(20, 2, 0.6, 0.05, 2, data_rng);
  Rng split_rng(5);
  SplitBundle split = make_transductive_split(g, 0.1, 0.05, split_rng);

  TrainConfig cfg;
  cfg.iterations = 5;
  cfg.eval_every = 5;
  cfg.context_fraction = 1.0;
  cfg.model.hidden1 = 8;
  cfg.model.latent = 4;
  cfg.model.hidden2 = 8;
  cfg.model.embed = 4;
  TrainRun run = train(split, cfg);
  for (const auto& pt : run.history) CHECK(std::abs(pt.kl) < 1e-10);
}

TEST_CASE("elbo improves on a planted-partition graph") {
  Rng data_rng(0);
  Graph g = generate_sbm(30, 2, 0.5, 0.02, 2, data_rng);
  Rng split_rng(0);
  SplitBundle split = make_transductive_split(g, 0.1, 0.05, split_rng);

  TrainConfig cfg;
  cfg.iterations = 200;
  cfg.eval_every = 200;
  cfg.seed = 0;
  cfg.model.hidden1 = 16;
  cfg.model.latent = 8;
  cfg.model.hidden2 = 16;
  cfg.model.embed = 8;
  TrainRun run = train(split, cfg);
  REQUIRE(run.loss_history.size() == 200);
  CHECK(run.loss_history.back() > run.loss_history.front());
  CHECK(run.test_auc > 0.5);
}

TEST_CASE("vgae training improves and stays finite") {
  Rng data_rng(1);
  Graph g = generate_sbm(30, 2, 0.5, 0.02, 2, data_rng);
  Rng split_rng(1);
  SplitBundle split = make_transductive_split(g, 0.1, 0.05, split_rng);

  TrainConfig cfg;
  cfg.iterations = 100;
  cfg.eval_every = 100;
  cfg.model_kind = ModelKind::vgae;
  cfg.model.hidden1 = 16;
  cfg.model.latent = 8;
  TrainRun run = train(split, cfg);
  for (double l : run.loss_history) CHECK(std::isfinite(l));
  CHECK(run.loss_history.back() > run.loss_history.front());
  CHECK(run.test_auc >= 0.0);
}

TEST_CASE("predict_scores properties") {
  Rng data_rng(6);
  Graph g = generate_sbm(24, 2, 0.6, 0.05, 2, data_rng);
  Rng split_rng(7);
  SplitBundle split = make_transductive_split(g, 0.1, 0.05, split_rng);

  TrainConfig cfg;
  cfg.iterations = 20;
  cfg.eval_every = 20;
  cfg.model.hidden1 = 8;
  cfg.model.latent = 4;
  cfg.model.hidden2 = 8;
  cfg.model.embed = 4;
  TrainRun run = train(split, cfg);

  EdgeList pairs = split.test_pos;
  pairs.insert(pairs.end(), split.test_neg.begin(), split.test_neg.end());
  pairs.push_back(pairs.front());  // duplicated query must score identically
  std::vector<double> s = predict_scores(run.params, cfg, split, pairs);
  REQUIRE(s.size() == pairs.size());
  for (double v : s) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
  CHECK(s.back() == s.front());

  // deterministic across calls
  std::vector<double> s2 = predict_scores(run.params, cfg, split, pairs);
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(s[i] == s2[i]);
}

TEST_CASE("inductive and few-shot training run end to end") {
  Rng data_rng(8);
  Graph g = generate_sbm(40, 2, 0.5, 0.05, 2, data_rng);

  TrainConfig cfg;
  cfg.iterations = 15;
  cfg.eval_every = 15;
  cfg.model.hidden1 = 8;
  cfg.model.latent = 4;
  cfg.model.hidden2 = 8;
  cfg.model.embed = 4;

  Rng r1(9);
  SplitBundle ind = make_inductive_split(g, 0.1, 0.05, r1);
  TrainRun run_ind = train(ind, cfg);
  CHECK(run_ind.test_auc >= 0.0);
  CHECK(run_ind.test_auc <= 1.0);

  Rng r2(10);
  SplitBundle fs = make_fewshot_split(g, 0.5, r2);
  TrainRun run_fs = train(fs, cfg);
  CHECK(run_fs.test_auc >= 0.0);
  CHECK(run_fs.val_auc == -1.0);  // no validation set in the few-shot task
}
