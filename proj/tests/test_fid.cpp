#include "doctest.h"

#include <iomanip>

#include <Eigen/Eigenvalues>

#include "chef/fid.hpp"
#include "fixture.hpp"

using namespace chef;

namespace {

GaussianStats stats(Vector mean, Matrix cov) { return {std::move(mean), std::move(cov), 100}; }

Matrix random_spd(CounterRng& rng, Eigen::Index n) {
  const Matrix b = test::random_matrix(rng, n, n);
  return b * b.transpose() / static_cast<double>(n) + 0.05 * Matrix::Identity(n, n);
}

// tr((A B)^{1/2}) from the eigenvalues of the non-symmetric product A B,
// which are real and non-negative for SPD A, B.
double trace_sqrt_product(const Matrix& a, const Matrix& b) {
  Eigen::EigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(a * b)};
  double t = 0;
  for (const auto& ev : es.eigenvalues()) t += std::sqrt(std::max(ev.real(), 0.0));
  return t;
}

double reference_fid(const GaussianStats& a, const GaussianStats& b) {
  return (a.mean - b.mean).squaredNorm() + a.cov.trace() + b.cov.trace() - 2 * trace_sqrt_product(a.cov, b.cov);
}

}  // namespace

TEST_CASE("fit_gaussian worked examples") {
  Matrix x(2, 2);
  x << 0, 0, 2, 2;
  const GaussianStats g = fit_gaussian(x);
  CHECK(g.n == 2);
  CHECK(g.mean == Vector::Constant(2, 1.0));
  CHECK(g.cov == Matrix::Constant(2, 2, 2.0));

  const GaussianStats same = fit_gaussian(Matrix::Constant(5, 3, 1.5));
  CHECK(same.cov == Matrix::Zero(3, 3));

  CounterRng rng(21, 0);
  const GaussianStats big = fit_gaussian(test::random_matrix(rng, 10000, 4));
  CHECK((big.cov - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() <= 0.1);
  CHECK(big.mean.cwiseAbs().maxCoeff() <= 0.05);
  CHECK(big.cov == big.cov.transpose());

  CHECK_THROWS_AS(fit_gaussian(Matrix::Zero(1, 3)), DataError);
  Matrix bad = Matrix::Zero(3, 2);
  bad(1, 1) = std::nan("");
  CHECK_THROWS_AS(fit_gaussian(bad), DataError);
}

TEST_CASE("distance of a population to itself is zero") {
  CounterRng rng(22, 0);
  for (Eigen::Index d : {1, 4, 16}) {
    const GaussianStats g = fit_gaussian(test::random_matrix(rng, 40, d));
    CHECK(frechet_distance(g, g) <= 1e-8);
  }
  // Fewer samples than dimensions: a rank-deficient covariance.
  const GaussianStats thin = fit_gaussian(test::random_matrix(rng, 5, 16));
  CHECK(std::abs(frechet_distance(thin, thin)) <= 1e-8);
}

TEST_CASE("closed-form cases") {
  Vector m0(1), m2(1);
  m0 << 0;
  m2 << 2;
  CHECK(std::abs(frechet_distance(stats(m0, Matrix::Identity(1, 1)), stats(m2, Matrix::Identity(1, 1))) - 4.0) <= 1e-10);

  const GaussianStats i2 = stats(Vector::Zero(2), Matrix::Identity(2, 2));
  const GaussianStats four = stats(Vector::Zero(2), 4.0 * Matrix::Identity(2, 2));
  CHECK(std::abs(frechet_distance(i2, four) - 2.0) <= 1e-8);

  // Diagonal covariances: sum of squared mean gaps plus (sqrt a_i - sqrt b_i)^2.
  CounterRng rng(23, 0);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng.below(12));
    Vector ma(d), mb(d), va(d), vb(d);
    double expected = 0;
    for (Eigen::Index i = 0; i < d; ++i) {
      ma(i) = rng.normal();
      mb(i) = rng.normal();
      va(i) = rng.uniform(0.1, 5.0);
      vb(i) = rng.uniform(0.1, 5.0);
      expected += (ma(i) - mb(i)) * (ma(i) - mb(i)) + std::pow(std::sqrt(va(i)) - std::sqrt(vb(i)), 2);
    }
    const double got = frechet_distance(stats(ma, va.asDiagonal()), stats(mb, vb.asDiagonal()));
    CHECK(std::abs(got - expected) <= 1e-9 * std::max(1.0, expected));
  }
}

TEST_CASE("matches the product-eigenvalue formula and is symmetric") {
  CounterRng rng(24, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng.below(16));
    const GaussianStats a = stats(test::random_matrix(rng, d, 1), random_spd(rng, d));
    const GaussianStats b = stats(test::random_matrix(rng, d, 1), random_spd(rng, d));
    const double ab = frechet_distance(a, b), ba = frechet_distance(b, a);
    CHECK(ab >= 0.0);
    CHECK(std::abs(ab - ba) <= 1e-6 * std::max(ab, 1e-12));
    CHECK(std::abs(ab - reference_fid(a, b)) <= 1e-6 * std::max(1.0, ab));
  }
}

TEST_CASE("a common translation leaves the distance unchanged") {
  CounterRng rng(25, 0);
  const Matrix x = test::random_matrix(rng, 60, 5);
  const Matrix y = test::random_matrix(rng, 60, 5, 2.0);
  const Eigen::RowVectorXd t = test::random_matrix(rng, 1, 5, 3.0);
  const double base = frechet_distance(fit_gaussian(x), fit_gaussian(y));
  const double moved = frechet_distance(fit_gaussian(x.rowwise() + t), fit_gaussian(y.rowwise() + t));
  CHECK(std::abs(base - moved) <= 1e-9 * base);
  const double one_moved = frechet_distance(fit_gaussian(x), fit_gaussian(x.rowwise() + t));
  CHECK(std::abs(one_moved - t.squaredNorm()) <= 1e-9 * t.squaredNorm());
}

TEST_CASE("dimension mismatch") {
  const GaussianStats a = stats(Vector::Zero(2), Matrix::Identity(2, 2));
  const GaussianStats b = stats(Vector::Zero(3), Matrix::Identity(3, 3));
  CHECK_THROWS_AS(frechet_distance(a, b), DimensionError);
}

TEST_CASE("fixture domains order by shift strength") {
  const FeatureSet& source = test::fixture_domain("source");
  CHECK(fid_between_sets(source, source, "h3") <= 1e-8);
  const double prior = fid_between_sets(source, test::fixture_domain("prior"), "h3");
  const double covariate = fid_between_sets(source, test::fixture_domain("covariate"), "h3");
  MESSAGE(std::setprecision(17) << "fixture fid h3: prior=" << prior << " covariate=" << covariate);
  CHECK(covariate > prior);
  CHECK(covariate > 0.0);
  // Recorded from the fixture at build time.
  CHECK(prior == doctest::Approx(27.761317612037139).epsilon(1e-9));
  CHECK(covariate == doctest::Approx(70.041700939257822).epsilon(1e-9));
  CHECK(fid_between_sets(source, test::fixture_domain("covariate"), "h3") == covariate);
  CHECK_THROWS_AS(fid_between_sets(source, source, "nope"), ConfigError);
}
