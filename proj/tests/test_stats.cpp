#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "wsnlab/stats.hpp"

using namespace wsnlab;

namespace {

Dataset make_dataset(std::vector<std::string> names, std::vector<std::vector<double>> cols, std::vector<double> e) {
  Dataset d;
  d.names = names;
  d.symbols = names;
  d.columns = std::move(cols);
  d.response = std::move(e);
  for (std::size_t r = 0; r < d.response.size(); ++r) {
    d.seeds.push_back(r);
    d.received.push_back(0);
    d.generated.push_back(0);
    d.detected.push_back(0);
    d.dropped.push_back(0);
    d.performance_ok.push_back(1);
  }
  return d;
}

CorrelationReport golden_report() {
  CorrelationReport r;
  r.samples = 800;
  auto add = [&](const char* name, const char* symbol, double p, double lin, double nl) {
    r.rows.push_back({name, symbol, p, lin, nl, false, false});
  };
  add("transmission_interval", "g_Tx", 3.7979e-005, 0.2842, 0.2474);
  add("num_hop", "h_iD", 0.00051, -0.2411, -0.2247);
  add("sensor_interval", "g_sense", 0.02397, 0.1580, 0.1280);
  add("sense_radius", "r_sense", 0.04933, -0.1355, -0.1178);
  add("net_density", "net_dens", 0.11896, -0.1095, -0.0474);
  add("transmission_radius", "r_Tx", 0.32401, -0.0694, -0.0693);
  add("sink", "snk", 0.42896, -0.0557, 0.0004);
  add("neigh", "n", 0.44191, -0.0541, 0.0088);
  return r;
}

}  // namespace

TEST(LinearCorr, PerfectlyLinear) {
  std::vector<double> p{1, 2, 3, 4, 5.5}, up, down;
  for (double x : p) {
    up.push_back(3 * x - 7);
    down.push_back(-0.25 * x + 2);
  }
  EXPECT_NEAR(linear_corr(p, up), 1.0, 1e-12);
  EXPECT_NEAR(linear_corr(p, down), -1.0, 1e-12);
}

TEST(LinearCorr, HandValue) {
  std::vector<double> a{1, 2, 4}, b{1, 3, 3};
  EXPECT_NEAR(linear_corr(a, b), 0.7559289460184544, 1e-15);
}

TEST(LinearCorr, SeriesOverload) {
  Series a{"p", {1, 2, 4}}, b{"E", {1, 3, 3}};
  EXPECT_EQ(linear_corr(a, b), linear_corr(a.values, b.values));
}

TEST(LinearCorr, AffineInvarianceAndSymmetry) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n01;
  std::uniform_real_distribution<double> coef(-5, 5);
  for (int k = 0; k < 2000; ++k) {
    std::size_t m = 3 + k % 40;
    std::vector<double> p(m), e(m), q(m);
    for (std::size_t i = 0; i < m; ++i) {
      p[i] = n01(rng);
      e[i] = 0.5 * p[i] + n01(rng);
    }
    double a = coef(rng), b = coef(rng);
    if (std::abs(a) < 0.1) a = 0.1;
    for (std::size_t i = 0; i < m; ++i) q[i] = a * p[i] + b;
    double r = linear_corr(p, e);
    EXPECT_NEAR(linear_corr(q, e), a > 0 ? r : -r, 1e-9);
    EXPECT_NEAR(linear_corr(e, p), r, 1e-14);
    EXPECT_LE(std::abs(r), 1.0);
  }
}

TEST(LinearCorr, Errors) {
  std::vector<double> c{2, 2, 2}, v{1, 2, 3};
  EXPECT_THROW(linear_corr(c, v), ZeroVarianceError);
  EXPECT_THROW(linear_corr(v, c), ZeroVarianceError);
  std::vector<double> two{1, 2};
  EXPECT_THROW(linear_corr(two, two), InsufficientDataError);
  std::vector<double> four{1, 2, 3, 4};
  EXPECT_THROW(linear_corr(v, four), DataError);
  std::vector<double> bad{1, std::nan(""), 3};
  EXPECT_THROW(linear_corr(bad, v), DataError);
}

TEST(NonlinearCorr, SymmetricCase) {
  std::vector<double> p{-1, 0, 1}, e{2, 0, 2};
  EXPECT_NEAR(linear_corr(p, e), 0.0, 1e-15);
  EXPECT_NEAR(nonlinear_corr(p, e), 1.0, 1e-15);
}

TEST(NonlinearCorr, EqualsLinearOnSquaresExactly) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n01;
  for (int k = 0; k < 2000; ++k) {
    std::size_t m = 3 + k % 30;
    std::vector<double> p(m), e(m), p2(m), e2(m);
    for (std::size_t i = 0; i < m; ++i) {
      p[i] = n01(rng) + 1;
      e[i] = n01(rng);
      p2[i] = p[i] * p[i];
      e2[i] = e[i] * e[i];
    }
    EXPECT_EQ(nonlinear_corr(p, e), linear_corr(p2, e2));
  }
}

TEST(NonlinearCorr, OrderOneIsLinear) {
  std::vector<double> a{1, 2, 4, 3}, b{1, 3, 3, 9};
  EXPECT_EQ(higher_order_corr(a, b, 1), linear_corr(a, b));
  EXPECT_THROW(higher_order_corr(a, b, 0), DataError);
}

TEST(NonlinearCorr, ConstantSquares) {
  std::vector<double> p{-1, 1, -1, 1}, e{1, 2, 3, 4};
  EXPECT_NO_THROW(linear_corr(p, e));
  EXPECT_THROW(nonlinear_corr(p, e), ZeroVarianceError);
}

TEST(IncompleteBeta, ClosedForms) {
  for (double x : {0.01, 0.2, 0.5, 0.77, 0.99}) {
    for (double a : {0.5, 1.0, 3.5, 20.0}) {
      EXPECT_NEAR(special::incomplete_beta(a, 1.0, x), std::pow(x, a), 1e-12);
      EXPECT_NEAR(special::incomplete_beta(1.0, a, x), 1 - std::pow(1 - x, a), 1e-12);
      EXPECT_NEAR(special::incomplete_beta(a, 2.5, x), 1 - special::incomplete_beta(2.5, a, 1 - x), 1e-12);
    }
  }
  EXPECT_NEAR(special::incomplete_beta(7, 7, 0.5), 0.5, 1e-13);
  EXPECT_EQ(special::incomplete_beta(2, 3, 0.0), 0.0);
  EXPECT_EQ(special::incomplete_beta(2, 3, 1.0), 1.0);
  EXPECT_THROW(special::incomplete_beta(0, 3, 0.5), NumericalError);
  EXPECT_THROW(special::incomplete_beta(1, 3, 1.5), NumericalError);
}

TEST(PValue, FrozenReferenceValues) {
  // Two-sided t-test p-values computed with an independent statistics package.
  EXPECT_NEAR(p_value(0.5, 100), 1.1804920270376276e-07, 1e-7 * 1.1804920270376276e-07);
  EXPECT_NEAR(p_value(0.3, 20), 0.1987577173445536, 1e-9);
  EXPECT_NEAR(p_value(0.2, 50), 0.1637530812454175, 1e-9);
  EXPECT_NEAR(p_value(0.1, 500), 0.025346603704893656, 1e-9);
}

TEST(PValue, MatchesQuadrature) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> mdist(5, 800);
  std::uniform_real_distribution<double> rdist(-0.95, 0.95);
  for (int k = 0; k < 40; ++k) {
    int m = mdist(rng);
    double r = rdist(rng) * std::min(1.0, 4.0 / std::sqrt(m));
    double want = oracle::p_value(r, m);
    EXPECT_NEAR(p_value(r, m), want, 1e-8 * want + 1e-13) << "r=" << r << " M=" << m;
  }
}

TEST(PValue, EdgeCases) {
  EXPECT_EQ(p_value(0.0, 10), 1.0);
  EXPECT_EQ(p_value(1.0, 10), 0.0);
  EXPECT_EQ(p_value(-1.0, 10), 0.0);
  EXPECT_EQ(p_value(0.3, 50), p_value(-0.3, 50));
  EXPECT_GT(p_value(0.2, 50), p_value(0.3, 50));
  EXPECT_GT(p_value(0.2, 50), p_value(0.2, 100));
  EXPECT_THROW(p_value(0.5, 2), InsufficientDataError);
  EXPECT_THROW(p_value(1.5, 20), DataError);
}

TEST(Analyze, FlagsConstantColumns) {
  auto d = make_dataset({"a", "b", "c"}, {{1, 2, 3, 4, 5}, {7, 7, 7, 7, 7}, {-2, -1, 0, 1, 2}}, {2, 4, 5, 4, 5});
  auto rep = analyze(d);
  ASSERT_EQ(rep.rows.size(), 3u);
  EXPECT_EQ(rep.samples, 5u);
  EXPECT_FALSE(rep.rows[0].zero_variance);
  EXPECT_TRUE(rep.rows[1].zero_variance);
  EXPECT_EQ(rep.rows[1].p_value, 1.0);
  EXPECT_EQ(rep.rows[1].linear, 0.0);
  EXPECT_NEAR(rep.rows[0].linear, linear_corr(d.columns[0], d.response), 0);
  EXPECT_NEAR(rep.rows[0].p_value, p_value(rep.rows[0].linear, 5), 0);
  auto sel = reduce(rep, 0.99);
  for (const auto& s : sel.selected) EXPECT_NE(s, "b");
}

TEST(Analyze, TooFewRows) {
  auto d = make_dataset({"a"}, {{1, 2}}, {1, 2});
  EXPECT_THROW(analyze(d), InsufficientDataError);
}

TEST(Reduce, TableSixGolden) {
  auto sel = reduce(golden_report(), 0.05);
  EXPECT_EQ(sel.selected,
            (std::vector<std::string>{"transmission_interval", "num_hop", "sensor_interval", "sense_radius"}));
  EXPECT_EQ(sel.alpha, 0.05);
  EXPECT_EQ(sel.rule, "p_value < 0.05");
}

TEST(Reduce, OrderIndependentOfRows) {
  auto rep = golden_report();
  std::reverse(rep.rows.begin(), rep.rows.end());
  EXPECT_EQ(reduce(rep, 0.05).selected, reduce(golden_report(), 0.05).selected);
}

TEST(Reduce, ThresholdConjunct) {
  auto sel = reduce(golden_report(), 0.05, 0.2);
  EXPECT_EQ(sel.selected, (std::vector<std::string>{"transmission_interval", "num_hop"}));
  EXPECT_EQ(sel.rule, "p_value < 0.05 and |linear_corr| >= 0.2");
}

TEST(Reduce, TiesBrokenByName) {
  CorrelationReport r;
  r.rows.push_back({"zeta", "z", 0.01, 0.3, 0.3, false, false});
  r.rows.push_back({"alpha", "a", 0.01, 0.3, 0.3, false, false});
  EXPECT_EQ(reduce(r, 0.05).selected, (std::vector<std::string>{"alpha", "zeta"}));
}

TEST(Reduce, WhiteNoiseTinyAlphaIsEmpty) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n01;
  std::vector<std::vector<double>> cols(4, std::vector<double>(200));
  std::vector<double> e(200);
  for (auto& c : cols)
    for (auto& x : c) x = n01(rng);
  for (auto& x : e) x = n01(rng);
  auto sel = reduce(analyze(make_dataset({"a", "b", "c", "d"}, cols, e)), 1e-9);
  EXPECT_TRUE(sel.selected.empty());
}

TEST(Reduce, AlphaValidated) {
  EXPECT_THROW(reduce(golden_report(), 0.0), DataError);
  EXPECT_THROW(reduce(golden_report(), 1.0), DataError);
}
