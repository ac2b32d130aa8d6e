#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "alphait/composition.hpp"
#include "alphait/gaussian_sim.hpp"
#include "alphait/geostat.hpp"
#include "alphait/transforms.hpp"
#include "doctest.h"
#include "helpers.hpp"

using alphait::apply_scenario;
using alphait::BivariateMaternParams;
using alphait::Composition;
using alphait::CompositionalField;
using alphait::derive_seed;
using alphait::GaussianField;
using alphait::inject_zeros;
using alphait::ScenarioConfig;
using alphait::scenario_preset;
using alphait::simulate_grf;
using alphait::to_compositions;
using alphait::ZeroInjectionMix;

namespace {

int zero_count(const Composition& x) {
  int count = 0;
  for (int i = 0; i < x.dimension(); ++i) {
    if (x[i] == 0.0) ++count;
  }
  return count;
}

bool same_parts(const Composition& a, const Composition& b) {
  return (a.parts() - b.parts()).cwiseAbs().maxCoeff() == 0.0;
}

CompositionalField random_field(int n, int d, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(0.0, 10.0);
  Eigen::MatrixXd locations(n, 2);
  std::vector<Composition> compositions;
  for (int i = 0; i < n; ++i) {
    locations(i, 0) = coord(rng);
    locations(i, 1) = coord(rng);
    compositions.push_back(testutil::random_composition(rng, d, 5.0));
  }
  return CompositionalField(locations, std::move(compositions));
}

}  // namespace

TEST_CASE("scenario presets match the protocol table") {
  struct Row {
    const char* name;
    double alpha0;
    double shift_x;
    double shift_y;
    double sigma;
  };
  const Row rows[] = {
      {"center-0", 0.0, 0.0, 0.0, 1.0},
      {"center-0.2", 0.2, 0.0, 0.0, 0.50},
      {"center-0.6", 0.6, 0.0, 0.0, 0.15},
      {"center-1", 1.0, 0.0, 0.0, 0.065},
      {"border-0", 0.0, -2.3, 1.0, 1.0},
      {"border-0.2", 0.2, -2.3, 1.0, 0.50},
      {"border-0.6", 0.6, -2.3, 1.0, 0.15},
      {"border-1", 1.0, -2.3, 1.0, 0.065},
      {"corner-0", 0.0, 4.0, -3.0, 1.0},
      {"corner-0.2", 0.2, 4.0, -3.0, 0.38},
      {"corner-0.6", 0.6, 4.0, -3.0, 0.11},
      {"corner-1", 1.0, 4.0, -3.0, 0.045},
  };
  for (const Row& row : rows) {
    CAPTURE(row.name);
    const ScenarioConfig config = scenario_preset(row.name, 7);
    CHECK(config.alpha0 == row.alpha0);
    CHECK(config.shift.x() == row.shift_x);
    CHECK(config.shift.y() == row.shift_y);
    CHECK(config.scale == row.sigma);
    CHECK(config.seed == 7);
    CHECK(config.n_points == 2000);
    CHECK(config.model.direct_sill == 1.0);
    CHECK(config.model.cross_sill == 0.8);
    CHECK(config.model.smoothness == 0.5);
    CHECK(config.model.scale == 1.0);
    CHECK(config.domain_min == Eigen::Vector2d(0.0, 0.0));
    CHECK(config.domain_max == Eigen::Vector2d(10.0, 10.0));
  }
  CHECK_THROWS_AS(scenario_preset("corner-0.3"), std::invalid_argument);
  CHECK_THROWS_AS(scenario_preset("middle-0.2"), std::invalid_argument);
  CHECK_THROWS_AS(scenario_preset("center"), std::invalid_argument);
}

TEST_CASE("simulation is reproducible from the seed") {
  ScenarioConfig config = scenario_preset("center-0.2", 42);
  config.n_points = 60;

  const GaussianField a = simulate_grf(config);
  const GaussianField b = simulate_grf(config);
  CHECK((a.locations - b.locations).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.scores - b.scores).cwiseAbs().maxCoeff() == 0.0);

  config.seed = 43;
  const GaussianField c = simulate_grf(config);
  CHECK((a.scores - c.scores).cwiseAbs().maxCoeff() > 0.0);
  CHECK((a.locations - c.locations).cwiseAbs().maxCoeff() > 0.0);

  CHECK(derive_seed(42, 0) != derive_seed(42, 1));
  CHECK(derive_seed(42, 0) != derive_seed(43, 0));
  CHECK(derive_seed(42, 7) == derive_seed(42, 7));
}

// One n=2000 realization with a frozen seed; a single realization of a field
// with range 1 on a 10 x 10 domain has only ~100 independent patches, so the
// estimates below fluctuate at the 0.1 scale across seeds and the tolerances
// hold for this deterministic draw, not for every seed.
TEST_CASE("simulated field matches the covariance model") {
  const ScenarioConfig config = scenario_preset("center-0.2", 20260819);
  const GaussianField field = simulate_grf(config);
  const int n = config.n_points;
  REQUIRE(field.scores.rows() == n);
  REQUIRE(field.locations.rows() == n);

  for (int i = 0; i < n; ++i) {
    CHECK(field.locations(i, 0) >= 0.0);
    CHECK(field.locations(i, 0) <= 10.0);
    CHECK(field.locations(i, 1) >= 0.0);
    CHECK(field.locations(i, 1) <= 10.0);
  }

  const Eigen::RowVector2d mean = field.scores.colwise().mean();
  const Eigen::MatrixXd centered = field.scores.rowwise() - mean;
  const Eigen::Matrix2d sample_cov =
      centered.transpose() * centered / static_cast<double>(n);
  CHECK(sample_cov(0, 0) == doctest::Approx(1.0).epsilon(0.1));
  CHECK(sample_cov(1, 1) == doctest::Approx(1.0).epsilon(0.1));
  CHECK(std::abs(sample_cov(0, 1) - 0.8) <= 0.1);

  // Cross-correlation over pairs closer than half the Matern scale; the
  // shared correlation factor cancels in the ratio.
  Eigen::Matrix2d near = Eigen::Matrix2d::Zero();
  long pairs = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      if ((field.locations.row(i) - field.locations.row(j)).norm() > 0.5) {
        continue;
      }
      near += (field.scores.row(i) - mean).transpose() *
              (field.scores.row(j) - mean);
      ++pairs;
    }
  }
  near /= static_cast<double>(pairs);
  const double cross_corr = near(0, 1) / std::sqrt(near(0, 0) * near(1, 1));
  CHECK(std::abs(cross_corr - 0.8) <= 0.1);

  // Direct variogram follows the exponential curve 1 - exp(-h) (nu = 1/2);
  // the cross variogram levels off at the cross sill 0.8.
  const alphait::EmpiricalVariogram ev =
      alphait::empirical_cross_variogram(field.locations, field.scores);
  const int bins = static_cast<int>(ev.semivariance.size());
  REQUIRE(bins == 15);
  double direct_sill = 0.0;
  double cross_sill = 0.0;
  for (int b = 0; b < bins; ++b) {
    CHECK_FALSE(ev.sparse_bin[b]);
    const double theory = 1.0 - std::exp(-ev.bin_centers[b]);
    CHECK(std::abs(ev.semivariance[b](0, 0) - theory) <= 0.25);
    CHECK(ev.semivariance[b](0, 1) == ev.semivariance[b](1, 0));
    if (b >= bins - 5) {
      direct_sill += ev.semivariance[b](0, 0);
      cross_sill += ev.semivariance[b](0, 1);
    }
  }
  CHECK(std::abs(direct_sill / 5.0 - 1.0) <= 0.15);
  CHECK(std::abs(cross_sill / 5.0 - 0.8) <= 0.1);
}

TEST_CASE("invalid simulation parameters are rejected") {
  ScenarioConfig config = scenario_preset("center-0.2", 1);

  config.n_points = 5001;
  CHECK_THROWS_AS(simulate_grf(config), std::invalid_argument);
  config.n_points = 0;
  CHECK_THROWS_AS(simulate_grf(config), std::invalid_argument);
  config.n_points = 10;

  config.model.cross_sill = 1.2;
  CHECK_THROWS_AS(simulate_grf(config), std::invalid_argument);
  config.model.cross_sill = 0.8;

  config.model.scale = 0.0;
  CHECK_THROWS_AS(simulate_grf(config), std::invalid_argument);
  config.model.scale = 1.0;

  config.domain_max = config.domain_min;
  CHECK_THROWS_AS(simulate_grf(config), std::invalid_argument);
}

TEST_CASE("scenario map is the documented affine transformation") {
  Eigen::MatrixXd scores(3, 2);
  scores << 0.3, -0.2, 0.0, 0.0, -0.4, 0.25;

  ScenarioConfig identity;
  identity.alpha0 = 0.2;
  identity.shift = Eigen::Vector2d(0.0, 0.0);
  identity.scale = 1.0;
  CHECK((apply_scenario(scores, identity) - scores).cwiseAbs().maxCoeff() ==
        0.0);

  ScenarioConfig border = scenario_preset("border-0.2", 0);
  const Eigen::MatrixXd mapped = apply_scenario(scores, border);
  for (int i = 0; i < 3; ++i) {
    CHECK(mapped(i, 0) == 0.50 * (scores(i, 0) - -2.3));
    CHECK(mapped(i, 1) == 0.50 * (scores(i, 1) - 1.0));
  }

  // alpha0 = 0 has codomain R^2: arbitrarily large scores pass through.
  Eigen::MatrixXd wild(2, 2);
  wild << 500.0, -900.0, 1e4, 1e4;
  ScenarioConfig ilr = scenario_preset("center-0", 0);
  CHECK((apply_scenario(wild, ilr) - wild).cwiseAbs().maxCoeff() == 0.0);

  // For alpha0 > 0 a far-out point must be reported by index.
  ScenarioConfig tight = scenario_preset("center-0.6", 0);
  tight.scale = 1.0;
  Eigen::MatrixXd bad(3, 2);
  bad << 0.1, 0.0, 0.0, -0.1, 50.0, 0.0;
  try {
    apply_scenario(bad, tight);
    FAIL("expected an out-of-codomain error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("point 2") != std::string::npos);
  }
}

TEST_CASE("scores become compositions and round-trip") {
  SUBCASE("zero score maps to the uniform composition") {
    Eigen::MatrixXd scores = Eigen::MatrixXd::Zero(1, 2);
    Eigen::MatrixXd location = Eigen::MatrixXd::Zero(1, 2);
    for (double alpha0 : {0.0, 0.2, 0.6, 1.0}) {
      CAPTURE(alpha0);
      const CompositionalField field =
          to_compositions(location, scores, alpha0);
      for (int i = 0; i < 3; ++i) {
        CHECK(field.compositions[0][i] ==
              doctest::Approx(1.0 / 3.0).epsilon(1e-12));
      }
    }
  }

  SUBCASE("round-trip recovers the scenario scores") {
    for (const char* name : {"center-0.2", "border-0.6", "corner-0.2"}) {
      CAPTURE(name);
      ScenarioConfig config = scenario_preset(name, 11);
      config.n_points = 150;
      const GaussianField grf = simulate_grf(config);
      const Eigen::MatrixXd scores = apply_scenario(grf.scores, config);
      const CompositionalField field =
          to_compositions(grf.locations, scores, config.alpha0);
      REQUIRE(field.size() == 150);
      for (int i = 0; i < field.size(); ++i) {
        const Eigen::VectorXd z =
            alphait::alpha_it(field.compositions[i], config.alpha0).coords;
        CHECK((z - scores.row(i).transpose()).norm() <= 1e-7);
      }
    }
  }

  SUBCASE("ilr path round-trips as well") {
    ScenarioConfig config = scenario_preset("border-0", 5);
    config.n_points = 80;
    const GaussianField grf = simulate_grf(config);
    const Eigen::MatrixXd scores = apply_scenario(grf.scores, config);
    const CompositionalField field =
        to_compositions(grf.locations, scores, 0.0);
    for (int i = 0; i < field.size(); ++i) {
      const Eigen::VectorXd z = alphait::ilr(field.compositions[i]);
      CHECK((z - scores.row(i).transpose()).norm() <= 1e-9);
    }
  }

  SUBCASE("alpha0 = 1 back-transformation is the affine inverse") {
    ScenarioConfig config = scenario_preset("center-1", 3);
    config.n_points = 100;
    const GaussianField grf = simulate_grf(config);
    const Eigen::MatrixXd scores = apply_scenario(grf.scores, config);
    const CompositionalField field =
        to_compositions(grf.locations, scores, 1.0);
    const Eigen::MatrixXd basis = alphait::transform_basis(3).helmert();
    for (int i = 0; i < field.size(); ++i) {
      REQUIRE(field.compositions[i].strictly_positive());
      const Eigen::VectorXd expected =
          basis.transpose() * scores.row(i).transpose() +
          Eigen::VectorXd::Constant(3, 1.0 / 3.0);
      CHECK((field.compositions[i].parts() - expected).cwiseAbs().maxCoeff() <=
            1e-10);
    }
  }

  SUBCASE("row mismatch is rejected") {
    CHECK_THROWS_AS(to_compositions(Eigen::MatrixXd::Zero(2, 2),
                                    Eigen::MatrixXd::Zero(3, 2), 0.5),
                    std::invalid_argument);
  }
}

TEST_CASE("zero injection respects fraction, mix and determinism") {
  const CompositionalField field = random_field(400, 4, 91);
  const ZeroInjectionMix mix{0.31, 0.12};

  const CompositionalField injected = inject_zeros(field, 0.43, mix, 17);
  REQUIRE(injected.size() == 400);

  int one_zero = 0;
  int two_zero = 0;
  for (int i = 0; i < injected.size(); ++i) {
    const Composition& x = injected.compositions[i];
    const Composition& original = field.compositions[i];
    const int zeros = zero_count(x);
    CHECK(x.parts().sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(zeros <= 2);
    if (zeros == 0) {
      CHECK(same_parts(x, original));
      continue;
    }
    zeros == 1 ? ++one_zero : ++two_zero;
    // The zeroed parts were the smallest ones of the original composition.
    double largest_zeroed = 0.0;
    double smallest_kept = 1.0;
    double zeroed_mass = 0.0;
    for (int j = 0; j < 4; ++j) {
      if (x[j] == 0.0) {
        largest_zeroed = std::max(largest_zeroed, original[j]);
        zeroed_mass += original[j];
      } else {
        smallest_kept = std::min(smallest_kept, original[j]);
      }
    }
    CHECK(largest_zeroed <= smallest_kept);
    for (int j = 0; j < 4; ++j) {
      if (x[j] != 0.0) {
        CHECK(x[j] ==
              doctest::Approx(original[j] / (1.0 - zeroed_mass)).epsilon(1e-6));
      }
    }
  }
  // round(0.43 * 400) = 172 affected, split 124 / 48 by the 31:12 mix.
  CHECK(one_zero == 124);
  CHECK(two_zero == 48);

  const CompositionalField again = inject_zeros(field, 0.43, mix, 17);
  for (int i = 0; i < 400; ++i) {
    CHECK(same_parts(again.compositions[i], injected.compositions[i]));
  }
  const CompositionalField other = inject_zeros(field, 0.43, mix, 18);
  bool any_difference = false;
  for (int i = 0; i < 400; ++i) {
    any_difference =
        any_difference ||
        !same_parts(other.compositions[i], injected.compositions[i]);
  }
  CHECK(any_difference);

  const CompositionalField untouched = inject_zeros(field, 0.0, mix, 17);
  for (int i = 0; i < 400; ++i) {
    CHECK(same_parts(untouched.compositions[i], field.compositions[i]));
  }

  CHECK_THROWS_AS(inject_zeros(field, 1.0, mix, 0), std::invalid_argument);
  CHECK_THROWS_AS(inject_zeros(field, -0.1, mix, 0), std::invalid_argument);
  CHECK_THROWS_AS(inject_zeros(field, 0.2, ZeroInjectionMix{0.0, 0.0}, 0),
                  std::invalid_argument);
}

TEST_CASE("zero injection keeps at least two positive parts") {
  SUBCASE("two-zero draws on 3-part data downgrade to one zero") {
    const CompositionalField field = random_field(50, 3, 23);
    const CompositionalField injected =
        inject_zeros(field, 0.4, ZeroInjectionMix{1.0, 1.0}, 9);
    int affected = 0;
    for (int i = 0; i < injected.size(); ++i) {
      const int zeros = zero_count(injected.compositions[i]);
      CHECK(zeros <= 1);
      affected += zeros;
    }
    CHECK(affected == 20);
  }

  SUBCASE("already-degenerate rows are passed over") {
    CompositionalField field = random_field(10, 3, 31);
    for (int i = 0; i < 4; ++i) {
      Eigen::VectorXd parts = field.compositions[i].parts();
      parts[0] = 0.0;
      field.compositions[i] = alphait::closure(parts);
    }
    const CompositionalField injected =
        inject_zeros(field, 0.5, ZeroInjectionMix{1.0, 0.0}, 2);
    int fresh = 0;
    for (int i = 0; i < 10; ++i) {
      if (i < 4) {
        CHECK(same_parts(injected.compositions[i], field.compositions[i]));
      } else if (zero_count(injected.compositions[i]) == 1) {
        ++fresh;
      }
    }
    CHECK(fresh == 5);
  }
}
