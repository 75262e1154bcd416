#include "doctest.h"

#include <set>

#include "chef/hebbian.hpp"
#include "chef/toy_backbone.hpp"
#include "test_util.hpp"

using namespace chef;

namespace {

// Two well separated Gaussian clusters, `shots` samples each.
Episode separable_episode(int shots, std::uint64_t seed) {
  CounterRng rng(seed, 0);
  Episode ep;
  ep.class_map = {0, 1};
  ep.support.layer_ids = ep.query.layer_ids = {"x"};
  Matrix s(2 * shots, 3), q(10, 3);
  for (int i = 0; i < 2 * shots; ++i) {
    const double center = i < shots ? 4.0 : -4.0;
    for (int d = 0; d < 3; ++d) s(i, d) = center + rng.normal();
    ep.support.labels.push_back(i < shots ? 0 : 1);
  }
  for (int i = 0; i < 10; ++i) {
    const double center = i < 5 ? 4.0 : -4.0;
    for (int d = 0; d < 3; ++d) q(i, d) = center + rng.normal();
    ep.query.labels.push_back(i < 5 ? 0 : 1);
  }
  ep.support.layers = {s};
  ep.query.layers = {q};
  return ep;
}

Episode random_episode(CounterRng& rng, int ways, int shots, const std::vector<Eigen::Index>& dims) {
  Episode ep;
  for (int c = 0; c < ways; ++c) ep.class_map.push_back(c);
  for (std::size_t l = 0; l < dims.size(); ++l) {
    const std::string id = "l" + std::to_string(l);
    ep.support.layer_ids.push_back(id);
    ep.query.layer_ids.push_back(id);
    ep.support.layers.push_back(test::random_matrix(rng, ways * shots, dims[l]));
    ep.query.layers.push_back(test::random_matrix(rng, ways * 3, dims[l]));
  }
  for (int i = 0; i < ways * shots; ++i) ep.support.labels.push_back(i % ways);
  for (int i = 0; i < ways * 3; ++i) ep.query.labels.push_back(i % ways);
  return ep;
}

}  // namespace

TEST_CASE("worked 2-way example from zero weights") {
  const Matrix z = Matrix::Identity(2, 2);
  const Matrix y = Matrix::Identity(2, 2);
  const Matrix w = hebb_rule(z, y, {1.0, 1});
  Matrix expected(2, 2);
  expected << 0.5, -0.5, -0.5, 0.5;
  CHECK(w == expected);
}

TEST_CASE("first step from zero has V = 1/K - Y exactly") {
  CounterRng rng(3, 0);
  for (int ways : {2, 3, 5, 7}) {
    const Matrix y = test::random_onehot(rng, 12, ways);
    const Matrix z = test::random_matrix(rng, 12, 6);
    const Matrix v = ce_grad_wrt_logits(y, Matrix(z * Matrix::Zero(ways, 6).transpose()));
    const Matrix expected = (Matrix::Constant(12, ways, 1.0 / ways) - y);
    CHECK(v == expected);
  }
}

TEST_CASE("one Hebb step is one gradient step on the summed cross-entropy") {
  CounterRng rng(4, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const int ways = 2 + static_cast<int>(rng.below(4));
    const Eigen::Index rows = 1 + static_cast<Eigen::Index>(rng.below(20));
    const Eigen::Index dim = 1 + static_cast<Eigen::Index>(rng.below(16));
    const Matrix z = test::random_matrix(rng, rows, dim);
    const Matrix y = test::random_onehot(rng, rows, ways);
    const Matrix w0 = test::random_matrix(rng, ways, dim, 0.3);
    const double alpha = 0.05;
    const Matrix grad = test::finite_difference(
        [&](const Matrix& w) { return test::naive_summed_ce(y, Matrix(z * w.transpose())); }, w0);
    const Matrix step = hebb_step(z, y, w0, alpha) - w0;
    CHECK(test::rel_err(step, -alpha * grad) <= 1e-5);
  }
}

TEST_CASE("default hyperparameters fit a separable 5-shot 2-way support set") {
  const Episode ep = separable_episode(5, 8);
  const EnsembleModel model = fit_ensemble(ep, {"x"}, HebbianConfig{});
  CHECK(accuracy(predict(model, ep.support).labels, ep.support.labels) == 1.0);
}

TEST_CASE("summed loss is non-increasing for a small learning rate") {
  const Episode ep = separable_episode(5, 9);
  const Matrix& z = ep.support.layers[0];
  const Matrix y = one_hot(ep.support.labels, 2);
  Matrix w = Matrix::Zero(2, 3);
  double previous = summed_cross_entropy(y, Matrix(z * w.transpose()));
  for (int step = 0; step < 400; ++step) {
    w = hebb_step(z, y, w, 0.001);
    const double loss = summed_cross_entropy(y, Matrix(z * w.transpose()));
    CHECK(loss <= previous + 1e-12);
    previous = loss;
  }
}

TEST_CASE("scaling a layer by c scales its one-step weights by c and logits by c^2") {
  CounterRng rng(5, 0);
  const Matrix z = test::random_matrix(rng, 15, 7);
  const Matrix q = test::random_matrix(rng, 4, 7);
  const Matrix y = test::random_onehot(rng, 15, 3);
  const double c = 3.5;
  const Matrix w = hebb_rule(z, y, {0.01, 1});
  const Matrix wc = hebb_rule(Matrix(c * z), y, {0.01, 1});
  CHECK(test::rel_err(wc, c * w) <= 1e-12);
  CHECK(test::rel_err(Matrix(c * q * wc.transpose()), Matrix(c * c * q * w.transpose())) <= 1e-12);
}

TEST_CASE("relabeling the classes permutes weights and fused logits") {
  CounterRng rng(6, 0);
  Episode ep = random_episode(rng, 4, 5, {6, 3});
  const std::vector<int> perm{2, 0, 3, 1};  // old label -> new label
  Episode permuted = ep;
  for (int& l : permuted.support.labels) l = perm[static_cast<std::size_t>(l)];
  for (int& l : permuted.query.labels) l = perm[static_cast<std::size_t>(l)];
  for (int old = 0; old < 4; ++old) permuted.class_map[static_cast<std::size_t>(perm[old])] = ep.class_map[old];

  const HebbianConfig cfg{0.01, 50};
  const EnsembleModel a = fit_ensemble(ep, {"l0", "l1"}, cfg);
  const EnsembleModel b = fit_ensemble(permuted, {"l0", "l1"}, cfg);
  const Prediction pa = predict(a, ep.query), pb = predict(b, permuted.query);
  for (int old = 0; old < 4; ++old) {
    for (std::size_t h = 0; h < 2; ++h) {
      CHECK((a.heads[h].weights.row(old) - b.heads[h].weights.row(perm[old])).norm() <=
            1e-12 * a.heads[h].weights.norm());
    }
    CHECK((pa.scores.col(old) - pb.scores.col(perm[old])).norm() <= 1e-12 * pa.scores.norm());
  }
  std::set<std::pair<std::size_t, int>> orig, relabeled;
  for (std::size_t i = 0; i < pa.labels.size(); ++i) {
    orig.insert({i, ep.class_map[static_cast<std::size_t>(pa.labels[i])]});
    relabeled.insert({i, permuted.class_map[static_cast<std::size_t>(pb.labels[i])]});
  }
  CHECK(orig == relabeled);
}

TEST_CASE("fit_ensemble builds one head per layer") {
  CounterRng rng(7, 0);
  const Episode ep = random_episode(rng, 5, 5, {4, 8, 16, 3, 5, 9});
  const HebbianConfig cfg{0.01, 20};
  const EnsembleModel model = fit_ensemble(ep, ep.support.layer_ids, cfg);
  REQUIRE(model.heads.size() == 6);
  for (std::size_t h = 0; h < 6; ++h) {
    CHECK(model.heads[h].layer_id == ep.support.layer_ids[h]);
    CHECK(model.heads[h].weights.rows() == 5);
    CHECK(model.heads[h].weights.cols() == ep.support.layers[h].cols());
  }

  const EnsembleModel single = fit_ensemble(ep, {"l2"}, cfg);
  const Matrix direct = ep.query.layers[2] * hebb_rule(ep.support.layers[2], one_hot(ep.support.labels, 5), cfg).transpose();
  CHECK(predict(single, ep.query).scores == direct);

  CHECK_THROWS_AS(fit_ensemble(ep, {"l0", "l0"}, cfg), ConfigError);
  CHECK_THROWS_AS(fit_ensemble(ep, {"nope"}, cfg), ConfigError);
}

TEST_CASE("predict sums per-head logits") {
  EnsembleModel model;
  Matrix w1(2, 1), w2(2, 1);
  w1 << 1.0, 0.0;
  w2 << 0.2, 0.5;
  model.heads = {{"a", w1}, {"b", w2}};
  LabeledLayers q;
  q.layer_ids = {"a", "b"};
  q.layers = {Matrix::Ones(1, 1), Matrix::Ones(1, 1)};
  q.labels = {0};
  const Prediction p = predict(model, q);
  CHECK(p.scores(0, 0) == doctest::Approx(1.2));
  CHECK(p.scores(0, 1) == doctest::Approx(0.5));
  CHECK(p.labels == std::vector<int>{0});

  model.heads = {{"a", Matrix::Zero(3, 1)}, {"b", Matrix::Zero(3, 1)}};
  const Prediction zero = predict(model, q);
  CHECK(zero.scores == Matrix::Zero(1, 3));
  CHECK(zero.labels == std::vector<int>{0});

  LabeledLayers missing = q;
  missing.layer_ids = {"a", "c"};
  CHECK_THROWS_AS(predict(model, missing), DataError);
  LabeledLayers wrong_dim = q;
  wrong_dim.layers[1] = Matrix::Ones(1, 2);
  CHECK_THROWS_AS(predict(model, wrong_dim), DimensionError);
}

TEST_CASE("fused logits equal the sum of single-head predictions") {
  CounterRng rng(8, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const Episode ep = random_episode(rng, 5, 3, {5, 7, 2});
    const EnsembleModel model = fit_ensemble(ep, ep.support.layer_ids, {0.01, 30});
    Matrix total = Matrix::Zero(ep.query.rows(), 5);
    for (const auto& head : model.heads) {
      EnsembleModel solo;
      solo.heads = {head};
      total += predict(solo, ep.query).scores;
    }
    CHECK((predict(model, ep.query).scores - total).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("z-scored fusion") {
  Matrix logits(2, 3);
  logits << 1, 2, 3, 5, 5, 5;
  const Matrix z = zscore_rows(logits);
  CHECK(z.row(0).sum() == doctest::Approx(0.0));
  CHECK(z.row(0).squaredNorm() / 3.0 == doctest::Approx(1.0));
  CHECK(z.row(1) == Eigen::RowVector3d::Zero());

  CounterRng rng(9, 0);
  const Episode ep = random_episode(rng, 3, 4, {4, 4});
  HebbianConfig cfg{0.01, 10, true};
  const EnsembleModel model = fit_ensemble(ep, {"l0", "l1"}, cfg);
  CHECK(model.zscore_logits);
  const Matrix expected = zscore_rows(model.heads[0].logits(ep.query.layers[0])) +
                          zscore_rows(model.heads[1].logits(ep.query.layers[1]));
  CHECK((predict(model, ep.query).scores - expected).norm() <= 1e-12);
}

TEST_CASE("divergence and configuration errors") {
  const Matrix z = Matrix::Identity(2, 2), y = Matrix::Identity(2, 2);
  CHECK_THROWS_WITH_AS(hebb_rule(z, y, {1e13, 3}), doctest::Contains("step 1"), NumericalError);
  CHECK_THROWS_AS(hebb_rule(z, y, {0.0, 3}), ConfigError);
  CHECK_THROWS_AS(hebb_rule(z, y, {0.1, 0}), ConfigError);
  CHECK_THROWS_AS(hebb_rule(Matrix::Identity(3, 2), y, {0.1, 1}), DimensionError);
}

TEST_CASE("accuracy") {
  CHECK(accuracy({0, 1, 2}, {0, 1, 2}) == 1.0);
  CHECK(accuracy({0, 1}, {1, 0}) == 0.0);
  CHECK(accuracy({0, 1, 2, 3, 4}, {0, 1, 2, 0, 0}) == doctest::Approx(0.6));
  CHECK_THROWS_AS(accuracy({0}, {0, 1}), DimensionError);
}
