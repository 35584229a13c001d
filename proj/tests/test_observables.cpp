#include <doctest.h>

#include <cmath>
#include <random>

#include "lrising/enumerate.hpp"
#include "lrising/observables.hpp"

using namespace lrising;
using namespace lrising::observables;

namespace {

SpinConfiguration flat_interface(const BoxGeometry& box, int level) {
  SpinConfiguration s(box, -1);
  for (std::size_t k = 0; k < box.size(); ++k)
    if (box.site(k).j >= level) s.set(k, +1);
  return s;
}

}  // namespace

TEST_CASE("profile accumulator") {
  const auto box = BoxGeometry::centered(1, 0);
  ProfileAccumulator acc(box);
  acc.add(SpinConfiguration(box, +1));
  CHECK_THROWS_AS(acc.finish(), ValidationError);
  SpinConfiguration s(box, +1);
  s.set(0, -1);
  acc.add(s);
  acc.add(SpinConfiguration(box, +1));
  acc.add(SpinConfiguration(box, +1));
  const auto p = acc.finish();
  CHECK(p.n_samples == 4u);
  CHECK(p.mean[0] == doctest::Approx(0.5));
  CHECK(p.mean[1] == 1.0);
  // sample variance of {+1,-1,+1,+1} is 1; stderr = sqrt(1/4)
  CHECK(p.std_error[0] == doctest::Approx(0.5));
  CHECK(p.std_error[1] == 0.0);
  CHECK_THROWS_AS(acc.add(SpinConfiguration(BoxGeometry::square(1))), ValidationError);

  const std::vector<SpinConfiguration> v{SpinConfiguration(box, +1), s, SpinConfiguration(box, +1),
                                         SpinConfiguration(box, +1)};
  const auto q = magnetization_profile(v);
  CHECK(q.mean == p.mean);
  CHECK(q.std_error == p.std_error);
}

TEST_CASE("exact antisymmetry about the interface") {
  for (const auto& model : {CouplingModel::isotropic(3.0), CouplingModel::biaxial(1.5, 2.5)}) {
    for (int h : {0, 1}) {
      const auto box = BoxGeometry::interface_symmetric(2, 2, h);
      const auto g = enumerate::build_exact(model, box, BoundaryCondition::dobrushin(h), 0.7, 1e-12);
      const auto p = exact_profile(g);
      const auto r = antisymmetry_residual(p, h);
      CHECK(r.max_abs_residual < 1e-11);
      CHECK(p.mean_at({0, h}) > 0.0);
      CHECK(p.mean_at({0, h - 1}) < 0.0);
    }
  }
  // a box that is not mirror-symmetric is rejected
  const auto g = enumerate::build_exact(CouplingModel::isotropic(3.0), BoxGeometry::square(1),
                                        BoundaryCondition::dobrushin(0), 0.5, 1e-10);
  CHECK_THROWS_AS(antisymmetry_residual(exact_profile(g), 0), ValidationError);
  // off by one height is a real violation
  const auto box = BoxGeometry::interface_symmetric(1, 2, 0);
  const auto g1 = enumerate::build_exact(CouplingModel::isotropic(3.0), box, BoundaryCondition::dobrushin(1), 0.7, 1e-10);
  CHECK(antisymmetry_residual(exact_profile(g1), 0).max_abs_residual > 0.05);
}

TEST_CASE("antisymmetry ratio uses the combined standard error") {
  const auto box = BoxGeometry::interface_symmetric(0, 1, 0);  // rows -1, 0
  MagnetizationProfile p{box, {-0.4, 0.5}, {0.03, 0.04}, 100};
  const auto r = antisymmetry_residual(p, 0);
  CHECK(r.max_abs_residual == doctest::Approx(0.1));
  CHECK(r.max_ratio == doctest::Approx(0.1 / 0.05));
}

TEST_CASE("interface height of flat and shifted interfaces") {
  const auto box = BoxGeometry::interface_symmetric(3, 4, 0);
  for (int k = -4; k <= 4; ++k) {
    const auto s = flat_interface(box, k);
    const auto t = interface_height(s, 0);
    for (double h : t.heights) CHECK(h == doctest::Approx(static_cast<double>(k)));
    CHECK(column_height(s, 2, 0) == doctest::Approx(static_cast<double>(k)));
    // shifting the reference shifts the height
    CHECK(column_height(s, 0, 2) == doctest::Approx(static_cast<double>(k - 2)));
  }
  // flip plus mirror about -1/2 negates the height
  SpinConfiguration s = flat_interface(box, 1);
  s.set({1, -3}, +1);
  s.set({2, 3}, -1);
  SpinConfiguration m(box, +1);
  for (std::size_t k = 0; k < box.size(); ++k) {
    const Site x = box.site(k);
    m.set(k, -s.at({x.i, -1 - x.j}));
  }
  const auto a = interface_height(s, 0), b = interface_height(m, 0);
  for (std::size_t c = 0; c < a.heights.size(); ++c) CHECK(a.heights[c] == -b.heights[c]);
  CHECK(a.at(1) == 0.0);  // a plus spin below the reference lowers the column
  CHECK(a.at(0) == 1.0);
  CHECK_THROWS_AS(column_height(s, 10, 0), ValidationError);
}

TEST_CASE("height variance at infinite temperature") {
  const auto box = BoxGeometry::interface_symmetric(1, 3, 0);  // 3 x 6
  const auto g = enumerate::build_exact(CouplingModel::isotropic(3.0), box, BoundaryCondition::dobrushin(0), 0.0, 1e-10);
  const double m1 = enumerate::exact_expectation(g, [](const SpinConfiguration& s) { return column_height(s, 0, 0); });
  const double m2 = enumerate::exact_expectation(g, [](const SpinConfiguration& s) {
    const double h = column_height(s, 0, 0);
    return h * h;
  });
  CHECK(std::abs(m1) < 1e-12);
  CHECK(m2 - m1 * m1 == doctest::Approx(6.0 / 4.0));
}

TEST_CASE("fluctuation analysis") {
  std::mt19937_64 gen(3);
  std::vector<SizeSeries> series;
  for (int L : {8, 16, 32, 64}) {
    std::normal_distribution<double> d(0.0, std::sqrt(static_cast<double>(L)));
    SizeSeries s{L, {}};
    for (int k = 0; k < 4000; ++k) s.heights.push_back(d(gen));
    series.push_back(std::move(s));
  }
  const auto rep = interface_fluctuations(series, 5, 400);
  REQUIRE(rep.slope.has_value());
  CHECK(*rep.slope == doctest::Approx(1.0).epsilon(0.1));
  CHECK(rep.strictly_increasing_separated());
  CHECK_FALSE(rep.degenerate);
  for (const auto& f : rep.sizes) {
    CHECK(f.ci_low < f.variance);
    CHECK(f.ci_high > f.variance);
    // Var of a sample variance of Gaussians: 2 sigma^4 / (n - 1)
    CHECK(f.bootstrap_error == doctest::Approx(f.size * std::sqrt(2.0 / 3999.0)).epsilon(0.2));
  }
  // reproducible from the seed, and block bootstrap runs
  const auto again = interface_fluctuations(series, 5, 400);
  CHECK(again.sizes[1].ci_low == rep.sizes[1].ci_low);
  const auto blocks = interface_fluctuations(series, 5, 400, 20);
  CHECK(blocks.block_length == 20u);
  CHECK(blocks.sizes[0].variance == rep.sizes[0].variance);

  // flat series: variance identical, not separated
  std::vector<SizeSeries> flat{{4, {0, 0, 0}}, {8, {0, 0, 0}}, {16, {0, 0, 0}}};
  const auto deg = interface_fluctuations(flat);
  CHECK(deg.degenerate);
  CHECK_FALSE(deg.slope.has_value());
  CHECK_FALSE(deg.strictly_increasing_separated());

  CHECK_THROWS_AS(interface_fluctuations(std::span<const SizeSeries>(series.data(), 2)), ValidationError);
  std::vector<SizeSeries> unordered{series[1], series[0], series[2]};
  CHECK_THROWS_AS(interface_fluctuations(unordered), ValidationError);
  CHECK_THROWS_AS(interface_fluctuations(series, 1, 1000, 3000), ValidationError);
}

TEST_CASE("van Beijeren inequality on tiny instances") {
  for (const auto& model : {CouplingModel::aniso_nn(1.5), CouplingModel::biaxial(1.3, 3.0)})
    for (double beta : {0.3, 1.0, 2.0})
      for (auto [L, M, Lc] : {std::tuple{1, 1, 1}, {1, 1, 4}, {0, 2, 2}, {2, 1, 2}}) {
        VanBeijerenSetup s{model, L, M, Lc, beta};
        const auto r = van_beijeren_exact(s);
        CAPTURE(beta);
        CAPTURE(L);
        CHECK(r.columns.size() == static_cast<std::size_t>(2 * L + 1));
        CHECK(r.min_margin >= -1e-12);
        CHECK(r.mode == "exact");
        CHECK_FALSE(r.exploratory);
        for (double v : r.rhs) CHECK(v > 0.0);
      }
  VanBeijerenSetup bad{CouplingModel::aniso_nn(2.5), 1, 1, 1, 1.0};
  CHECK_THROWS_AS(van_beijeren_exact(bad), ValidationError);
  bad.claim_mode = false;
  const auto r = van_beijeren_exact(bad);
  CHECK(r.exploratory);
  const auto j = r.to_json();
  CHECK(j.contains("lhs"));
  CHECK(j.contains("min_margin"));
  CHECK(j["exploratory"] == true);
  CHECK_THROWS_AS(van_beijeren_exact({CouplingModel::isotropic(3.0), 1, 1, 1, 1.0}), ValidationError);
  CHECK_THROWS_AS(van_beijeren_exact({CouplingModel::aniso_nn(1.5), 2, 1, 1, 1.0}), ValidationError);
}

TEST_CASE("van Beijeren Monte Carlo agrees with enumeration") {
  VanBeijerenSetup s{CouplingModel::aniso_nn(1.5), 1, 1, 3, 0.8};
  const auto ex = van_beijeren_exact(s);
  const auto mc = van_beijeren_mc(s, {3, 200, 20000, 2});
  CHECK(mc.mode == "mc");
  for (std::size_t c = 0; c < ex.columns.size(); ++c) {
    CHECK(std::abs(mc.lhs[c] - ex.lhs[c]) < 6.0 * mc.lhs_error[c] + 1e-3);
    CHECK(std::abs(mc.rhs[c] - ex.rhs[c]) < 6.0 * mc.rhs_error[c] + 1e-3);
  }
}

TEST_CASE("relative entropy estimator") {
  const auto model = CouplingModel::isotropic(2.5);
  const auto box = BoxGeometry::from_bounds(-3, 3, -3, 4);
  MagnetizationProfile p{box, std::vector<double>(box.size()), std::vector<double>(box.size(), 0.01), 1000};
  for (std::size_t k = 0; k < box.size(); ++k) {
    const int j = box.site(k).j;
    p.mean[k] = j >= 1 ? 1.0 - 0.5 / j : -1.0 + 0.5 / (1 - j);
  }
  const auto r = relative_entropy_estimator(p, model, 3, 3);
  CHECK(r.within_bound);
  CHECK(r.estimate.value < r.bound.value);
  CHECK(r.estimate.value > 0.0);
  const auto w = profile_weight_grid(p, 3);
  CHECK(w(0, 1) == doctest::Approx(0.5));
  CHECK(w(0, 4) == doctest::Approx(0.875));
  CHECK(w(0, 40) == doctest::Approx(0.875));  // rows above the box repeat the top row

  CHECK_THROWS_AS(relative_entropy_estimator(p, model, 4, 3), ValidationError);
  MagnetizationProfile below{BoxGeometry::from_bounds(-3, 3, -3, 0), std::vector<double>(28, 0.0),
                             std::vector<double>(28, 0.0), 10};
  CHECK_THROWS_AS(relative_entropy_estimator(below, model, 3, 3), ValidationError);
  p.mean[box.index({0, 2})] = std::nan("");
  CHECK_THROWS_AS(relative_entropy_estimator(p, model, 3, 3), ValidationError);
}

TEST_CASE("profile export and observables") {
  const auto box = BoxGeometry::centered(1, 0);
  MagnetizationProfile p{box, {0.1, 0.2, 0.3}, {0.01, 0.02, 0.03}, 50};
  const auto csv = profile_csv(p);
  CHECK(csv.rfind("# schema_version=1\ni,j,mean,std_error\n-1,0,0.1", 0) == 0);
  const auto j = profile_summary(p);
  CHECK(j["n_samples"] == 50);
  CHECK(j["mean_magnetization"].get<double>() == doctest::Approx(0.2));
  CHECK(j["max_std_error"].get<double>() == doctest::Approx(0.03));
  CHECK(magnetization_observable().name == "magnetization");
  const auto h = column_height_observable(0, 0);
  CHECK(h.name == "height_i0");
  CHECK(h.fn(flat_interface(BoxGeometry::interface_symmetric(1, 2, 0), 1)) == 1.0);
}

TEST_CASE("batch-means profile errors") {
  const auto box = BoxGeometry::centered(0, 0);
  ProfileAccumulator acc(box, 2);
  // batches {+,+}, {-,-}, {+,-} -> batch means 1, -1, 0
  for (int s : {1, 1, -1, -1, 1, -1, 1}) acc.add(SpinConfiguration(box, s));
  const auto p = acc.finish();
  CHECK(p.n_samples == 6u);
  CHECK(p.mean[0] == doctest::Approx(0.0));
  CHECK(p.std_error[0] == doctest::Approx(std::sqrt(1.0 / 3.0)));
  ProfileAccumulator few(box, 4);
  for (int k = 0; k < 7; ++k) few.add(SpinConfiguration(box, 1));
  CHECK_THROWS_AS(few.finish(), ValidationError);
}
