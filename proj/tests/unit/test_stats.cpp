#include "doctest.h"

#include <cmath>
#include <initializer_list>

#include "hdi/stats.hpp"

using namespace hdi;

TEST_SUITE("stats") {

TEST_CASE("normal cdf and quantile invert each other") {
  for (double p : {1e-12, 1e-6, 0.01, 0.3, 0.5, 0.7, 0.975, 1.0 - 1e-6}) {
    const double z = norm_quantile(p);
    CHECK(norm_cdf(z) == doctest::Approx(p).epsilon(1e-10));
  }
  CHECK(norm_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
  CHECK(norm_quantile(0.5) == doctest::Approx(0.0));
  CHECK(z_upper(0.05) == doctest::Approx(1.6448536269514722).epsilon(1e-12));
}

TEST_CASE("upper tail is accurate far out") {
  // reference values from the asymptotic-safe erfc
  CHECK(norm_sf(10.0) == doctest::Approx(7.61985302416053e-24).epsilon(1e-10));
  CHECK(norm_sf(0.0) == doctest::Approx(0.5));
  CHECK(norm_sf(-3.0) + norm_sf(3.0) == doctest::Approx(1.0));
}

TEST_CASE("chi-square cdf matches known quantiles") {
  // medians: chi2_1 ~ 0.454936, chi2_3 ~ 2.365974
  CHECK(chi2_cdf(0.45493642311957305, 1) == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(chi2_cdf(2.3659738843753377, 3) == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(chi2_cdf(0.0, 3) == doctest::Approx(0.0));
  CHECK(chi2_sf(1e3, 3) < 1e-100);
  // consistency P + Q = 1
  for (double x : {0.1, 1.0, 2.5, 7.0, 30.0})
    CHECK(chi2_cdf(x, 3) + chi2_sf(x, 3) == doctest::Approx(1.0).epsilon(1e-12));
}

} // TEST_SUITE
