#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "alphait/composition.hpp"
#include "alphait/metrics.hpp"
#include "alphait/transforms.hpp"
#include "helpers.hpp"

using namespace alphait;

TEST_CASE("hellinger hand values") {
  const Composition p{0.5, 0.5};
  CHECK(hellinger(p, p) == 0.0);
  CHECK(hellinger(Composition{1.0, 0.0, 0.0}, Composition{0.0, 1.0, 0.0}) ==
        doctest::Approx(1.0).epsilon(1e-14));
  CHECK(hellinger(p, Composition{0.25, 0.75}) ==
        doctest::Approx(0.18459191128251453).epsilon(1e-14));
  CHECK_THROWS_AS(hellinger(p, Composition{0.5, 0.25, 0.25}),
                  std::invalid_argument);
}

TEST_CASE("total variation hand values") {
  const Composition p{0.5, 0.5};
  CHECK(total_variation(p, p) == 0.0);
  CHECK(total_variation(Composition{1.0, 0.0, 0.0},
                        Composition{0.0, 1.0, 0.0}) == 1.0);
  CHECK(total_variation(p, Composition{0.25, 0.75}) ==
        doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("pairwise inequality between hellinger and total variation") {
  std::mt19937_64 rng(101);
  const double root2 = std::sqrt(2.0);
  for (int rep = 0; rep < 1000; ++rep) {
    const int d = 3 + static_cast<int>(rng() % 3);
    const Composition p = rep % 3 == 0
                              ? testutil::random_composition_with_zeros(rng, d, 1)
                              : testutil::random_composition(rng, d);
    const Composition q = rep % 5 == 0
                              ? testutil::random_composition_with_zeros(rng, d, 1)
                              : testutil::random_composition(rng, d);
    const double dh = hellinger(p, q);
    const double dtv = total_variation(p, q);
    CHECK(dh * dh <= dtv + 1e-14);
    CHECK(dtv <= root2 * dh + 1e-14);
    CHECK(dh == doctest::Approx(hellinger(q, p)));
    CHECK(dtv == doctest::Approx(total_variation(q, p)));
  }
}

TEST_CASE("distances satisfy the triangle inequality") {
  std::mt19937_64 rng(103);
  for (int rep = 0; rep < 200; ++rep) {
    const Composition a = testutil::random_composition(rng, 4);
    const Composition b = testutil::random_composition(rng, 4);
    const Composition c = testutil::random_composition(rng, 4);
    CHECK(hellinger(a, c) <= hellinger(a, b) + hellinger(b, c) + 1e-13);
    CHECK(total_variation(a, c) <=
          total_variation(a, b) + total_variation(b, c) + 1e-13);
    CHECK(alpha_it_distance(a, c, 0.4) <=
          alpha_it_distance(a, b, 0.4) + alpha_it_distance(b, c, 0.4) + 1e-13);
  }
}

TEST_CASE("alpha-IT distance limits") {
  std::mt19937_64 rng(107);
  for (int rep = 0; rep < 20; ++rep) {
    const Composition x = testutil::random_composition(rng, 3, 5.0);
    const Composition y = testutil::random_composition(rng, 3, 5.0);
    CHECK(alpha_it_distance(x, y, 1.0) ==
          doctest::Approx((x.parts() - y.parts()).norm()).epsilon(1e-12));
    CHECK(std::abs(alpha_it_distance(x, y, 1e-4) - aitchison_distance(x, y)) <=
          1e-3);
  }
  CHECK_THROWS_AS(
      alpha_it_distance(uniform_composition(3), uniform_composition(3), 0.0),
      std::invalid_argument);
}

TEST_CASE("frechet mean trivial cases") {
  const Composition x{0.2, 0.3, 0.5};
  const std::vector<Composition> same{x, x, x};
  CHECK((frechet_mean(same, 0.7).parts() - x.parts()).cwiseAbs().maxCoeff() <=
        1e-9);

  std::mt19937_64 rng(109);
  std::vector<Composition> xs;
  Eigen::VectorXd arith = Eigen::VectorXd::Zero(4);
  for (int i = 0; i < 6; ++i) {
    xs.push_back(testutil::random_composition(rng, 4, 4.0));
    arith += xs.back().parts();
  }
  arith /= 6.0;
  CHECK((frechet_mean(xs, 1.0).parts() - arith).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK_THROWS_AS(frechet_mean({}, 0.5), std::invalid_argument);
}

TEST_CASE("frechet mean matches a barycentric grid search") {
  const double a = 0.2;
  const std::vector<Composition> xs{Composition{0.7, 0.2, 0.1},
                                    Composition{0.1, 0.3, 0.6}};
  std::vector<Eigen::VectorXd> images;
  for (const auto& x : xs) images.push_back(alpha_it(x, a).coords);
  const auto objective = [&](const Composition& y) {
    const Eigen::VectorXd z = alpha_it(y, a).coords;
    double s = 0.0;
    for (const auto& img : images) s += (z - img).squaredNorm();
    return s;
  };

  double lo1 = 0.0, hi1 = 1.0, lo2 = 0.0, hi2 = 1.0;
  Composition best = uniform_composition(3);
  double best_val = objective(best);
  for (int level = 0; level < 3; ++level) {
    const int steps = 200;
    for (int i = 0; i <= steps; ++i) {
      for (int j = 0; j <= steps; ++j) {
        const double p1 = lo1 + (hi1 - lo1) * i / steps;
        const double p2 = lo2 + (hi2 - lo2) * j / steps;
        if (p1 + p2 >= 1.0) continue;
        const Composition y{p1, p2, 1.0 - p1 - p2};
        const double val = objective(y);
        if (val < best_val) {
          best_val = val;
          best = y;
        }
      }
    }
    const double w1 = (hi1 - lo1) / steps * 4.0;
    const double w2 = (hi2 - lo2) / steps * 4.0;
    lo1 = std::max(0.0, best[0] - w1);
    hi1 = std::min(1.0, best[0] + w1);
    lo2 = std::max(0.0, best[1] - w2);
    hi2 = std::min(1.0, best[1] + w2);
  }

  const Composition mean = frechet_mean(xs, a);
  CHECK(objective(mean) <= best_val + 1e-10);
  CHECK((mean.parts() - best.parts()).cwiseAbs().maxCoeff() <= 1e-4);
}

TEST_CASE("score predictions aggregates the pairwise distances") {
  const std::vector<Composition> truth{Composition{0.5, 0.3, 0.2},
                                       Composition{0.1, 0.1, 0.8},
                                       Composition{1.0 / 3, 1.0 / 3, 1.0 / 3}};
  const std::vector<Composition> pred{Composition{0.4, 0.4, 0.2},
                                      Composition{0.2, 0.1, 0.7},
                                      Composition{0.3, 0.4, 0.3}};
  const double a = 0.6;
  double h = 0.0, tv = 0.0, sq = 0.0;
  for (int i = 0; i < 3; ++i) {
    h += hellinger(truth[i], pred[i]);
    tv += total_variation(truth[i], pred[i]);
    const double d = alpha_it_distance(truth[i], pred[i], a);
    sq += d * d;
  }
  const ScoreReport rep = score_predictions(truth, pred, a, 2.0);
  CHECK(rep.n_pairs == 3);
  CHECK(rep.alpha_used == a);
  CHECK(rep.hellinger_mean == doctest::Approx(h / 3.0).epsilon(1e-14));
  CHECK(rep.total_variation_mean == doctest::Approx(tv / 3.0).epsilon(1e-14));
  CHECK(rep.alpha_it_rmse == doctest::Approx(std::sqrt(sq / 3.0)).epsilon(1e-14));
  CHECK(rep.normalized_rmse() ==
        doctest::Approx(rep.alpha_it_rmse / 2.0).epsilon(1e-14));

  const ScoreReport zero = score_predictions(truth, truth, a);
  CHECK(zero.hellinger_mean == 0.0);
  CHECK(zero.total_variation_mean == 0.0);
  CHECK(zero.alpha_it_rmse == 0.0);
  CHECK(std::isnan(zero.sigma));

  const ScoreReport single = score_predictions({truth[0]}, {pred[0]}, a);
  CHECK(single.alpha_it_rmse ==
        doctest::Approx(alpha_it_distance(truth[0], pred[0], a)));
  CHECK_THROWS_AS(score_predictions(truth, {pred[0]}, a),
                  std::invalid_argument);
}

TEST_CASE("pooled sigma hand value") {
  std::vector<Eigen::VectorXd> coords;
  coords.push_back(Eigen::Vector2d(1.0, 10.0));
  coords.push_back(Eigen::Vector2d(3.0, 10.0));
  coords.push_back(Eigen::Vector2d(5.0, 16.0));
  // coordinate variances about their own means: 4 and 12; pooled: sqrt(8)
  CHECK(pooled_sigma(coords) == doctest::Approx(std::sqrt(8.0)).epsilon(1e-14));
  CHECK_THROWS_AS(pooled_sigma({Eigen::Vector2d(1.0, 2.0)}),
                  std::invalid_argument);
}
