#include "prqkd/experiments.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

using namespace prqkd;

namespace {

constexpr double kPi = std::numbers::pi;

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("prqkd_" + name);
}

// Independent chi-square CDF: Simpson's rule on the density.
double chi_square_cdf_simpson(double x, double k) {
  const int n = 200000;
  const double h = x / n;
  const double log_norm = -(k / 2) * std::log(2.0) - std::lgamma(k / 2);
  auto pdf = [&](double t) { return t <= 0.0 ? 0.0 : std::exp(log_norm + (k / 2 - 1) * std::log(t) - t / 2); };
  double sum = pdf(0.0) + pdf(x);
  for (int i = 1; i < n; ++i) sum += pdf(i * h) * (i % 2 ? 4.0 : 2.0);
  return sum * h / 3;
}

std::size_t count_lines(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  std::string line;
  while (std::getline(in, line)) ++n;
  return n;
}

}  // namespace

TEST(ScanDelays, grid) {
  const auto d = scan_delays(200.0, 10.0);
  ASSERT_EQ(d.size(), 41u);
  EXPECT_EQ(d.front(), -200.0);
  EXPECT_EQ(d.back(), 200.0);
  EXPECT_EQ(d[20], 0.0);
  EXPECT_EQ(scan_delays(0.0, 10.0).size(), 1u);
  EXPECT_THROW(scan_delays(100.0, 0.0), ValidationError);
  EXPECT_THROW(scan_delays(-1.0, 10.0), ValidationError);
}

TEST(ClassifyDelay, default_geometry) {
  const SessionConfig cfg;
  int aligned = 0;
  for (double d : scan_delays(200.0, 10.0)) {
    const double a = std::abs(d);
    const Alignment c = classify_delay(cfg, d);
    if (a == 70 || a == 80 || a == 120 || a == 130) {
      EXPECT_EQ(c, Alignment::Waist) << d;
    } else if (a == 90 || a == 100 || a == 110) {
      EXPECT_EQ(c, Alignment::Misaligned) << d;
    } else {
      EXPECT_EQ(c, Alignment::Aligned) << d;
      ++aligned;
    }
  }
  EXPECT_EQ(aligned, 27);

  SessionConfig no_roundtrip;
  no_roundtrip.timing.roundtrip_ns = 0.0;
  for (double d : scan_delays(200.0, 1.0)) EXPECT_NE(classify_delay(no_roundtrip, d), Alignment::Waist) << d;
}

TEST(DelayScan, single_point_matches_plain_session) {
  SessionConfig base;
  base.n_bits = 100000;
  base.seed = 44;
  const std::vector<double> delays = {0.0};
  const DelayScanResult r = delay_scan(base, delays);
  ASSERT_EQ(r.points.size(), 1u);
  SessionConfig plain = base;
  plain.seed = scan_point_seed(base.seed, 0);
  const QberEstimate q = session_qber(plain);
  EXPECT_EQ(r.points[0].delay_ns, 0.0);
  EXPECT_EQ(r.points[0].estimate.n_sifted, q.n_sifted);
  EXPECT_EQ(r.points[0].estimate.n_errors, q.n_errors);
}

TEST(DelayScan, thread_count_does_not_change_results) {
  SessionConfig base;
  base.n_bits = 20000;
  const auto delays = scan_delays(200.0, 50.0);
  const DelayScanResult a = delay_scan(base, delays, 1);
  const DelayScanResult b = delay_scan(base, delays, 4);
  ASSERT_EQ(a.points.size(), b.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    EXPECT_EQ(a.points[i].delay_ns, b.points[i].delay_ns);
    EXPECT_EQ(a.points[i].estimate.n_errors, b.points[i].estimate.n_errors);
    EXPECT_EQ(a.points[i].estimate.n_sifted, b.points[i].estimate.n_sifted);
  }
}

TEST(DelayScan, appending_points_keeps_existing_seeds) {
  SessionConfig base;
  base.n_bits = 20000;
  const std::vector<double> short_grid = {-100.0, 0.0};
  const std::vector<double> long_grid = {-100.0, 0.0, 100.0};
  const auto a = delay_scan(base, short_grid);
  const auto b = delay_scan(base, long_grid);
  for (std::size_t i = 0; i < 2; ++i) EXPECT_EQ(a.points[i].estimate.n_errors, b.points[i].estimate.n_errors);
}

TEST(DelayScan, errors) {
  SessionConfig base;
  EXPECT_THROW(delay_scan(base, std::vector<double>{}), ValidationError);
  EXPECT_THROW(delay_scan(base, std::vector<double>{10.0, 10.0}), ValidationError);

  base.n_bits = 100;
  base.mean_photon = 0.0;
  base.optics.detector.dark_prob = 0.0;
  try {
    delay_scan(base, std::vector<double>{-20.0, 30.0});
    FAIL() << "expected InsufficientStatistics";
  } catch (const InsufficientStatistics& e) {
    EXPECT_NE(std::string(e.what()).find("delay_ns=-20"), std::string::npos) << e.what();
  }
}

TEST(DelayScan, waist_with_equal_split_polarization_is_quarter) {
  // Analytic: QBER = f_mismatch * E[sin^2(delta/2)] = 0.5 * 0.5.
  // Monte Carlo cross-check of E[sin^2(delta/2)] for the difference of two
  // independent uniform 12-bit codes.
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> code(0, kMaxCode);
  double acc = 0.0;
  const int n = 400000;
  for (int i = 0; i < n; ++i) {
    const double delta = code_to_phase(code(rng)) - code_to_phase(code(rng));
    acc += 0.5 * std::pow(std::sin(delta / 2), 2);
  }
  EXPECT_NEAR(acc / n, 0.25, 0.002);

  SessionConfig base;
  base.polarization = PolarizedAmplitude(std::sqrt(0.5), std::sqrt(0.5));
  base.optics.coding_phase_jitter_rad = 0.0;
  const std::vector<double> delays = {-130.0, -80.0, 70.0, 120.0};
  const DelayScanResult r = delay_scan(base, delays);
  for (const auto& p : r.points) {
    EXPECT_EQ(classify_delay(base, p.delay_ns), Alignment::Waist);
    EXPECT_NEAR(p.estimate.qber, 0.25, 4 * std::sqrt(0.25 * 0.75 / p.estimate.n_sifted)) << p.delay_ns;
  }
}

TEST(Uniformity, threshold_matches_independent_cdf) {
  const double q = chi_square_quantile(0.99, 255.0);
  EXPECT_NEAR(q, 310.457, 1e-3);
  EXPECT_NEAR(chi_square_cdf_simpson(q, 255.0), 0.99, 1e-7);
  EXPECT_NEAR(chi_square_cdf_simpson(chi_square_quantile(0.99, 31.0), 31.0), 0.99, 1e-7);
}

TEST(Uniformity, constant_phases_are_maximally_nonuniform) {
  const std::vector<double> phases(5000, 1.0);
  const ChiSquareResult r = uniformity_chisq(phases, 16);
  EXPECT_NEAR(r.statistic, 5000.0 * 15.0, 1e-6);
  EXPECT_TRUE(r.rejected());
}

TEST(Uniformity, equal_counts_give_zero) {
  std::vector<double> phases;
  for (int rep = 0; rep < 40; ++rep) {
    for (int b = 0; b < 32; ++b) phases.push_back((b + 0.5) * 2 * kPi / 32);
  }
  const ChiSquareResult r = uniformity_chisq(phases, 32);
  EXPECT_EQ(r.statistic, 0.0);
  EXPECT_FALSE(r.rejected());
}

TEST(Uniformity, grid_phases_land_in_their_own_bins) {
  // Every 12-bit code once, 256 bins of 16 codes each: exact equality.
  std::vector<double> phases;
  for (int c = 0; c <= kMaxCode; ++c) phases.push_back(code_to_phase(c));
  EXPECT_EQ(uniformity_chisq(phases, 256).statistic, 0.0);
  // Wrapping.
  std::vector<double> shifted;
  for (double p : phases) shifted.push_back(p + 4 * kPi);
  EXPECT_EQ(uniformity_chisq(shifted, 256).statistic, 0.0);
}

TEST(Uniformity, errors) {
  EXPECT_THROW(uniformity_chisq(std::vector<double>(100, 0.0), 11), ValidationError);
  EXPECT_THROW(uniformity_chisq(std::vector<double>(100, 0.0), 1), ValidationError);
  std::vector<double> bad(100, 0.0);
  bad[3] = std::nan("");
  EXPECT_THROW(uniformity_chisq(bad, 2), ValidationError);
}

TEST(FockDensity, continuous_uniform_is_poisson_diagonal) {
  const auto rho = fock_density_matrix(0.1, PhaseDistribution::continuous_uniform(), 10);
  EXPECT_NEAR(rho.entries(0, 0).real(), std::exp(-0.1), 1e-15);
  EXPECT_NEAR(rho.entries(0, 0).real(), 0.904837, 1e-6);
  EXPECT_EQ(offdiag_norm(rho), 0.0);
  double factorial = 1.0;
  for (int n = 0; n <= 10; ++n) {
    if (n > 0) factorial *= n;
    EXPECT_NEAR(rho.entries(n, n).real(), std::exp(-0.1) * std::pow(0.1, n) / factorial, 1e-15);
    EXPECT_EQ(rho.entries(n, n).imag(), 0.0);
  }
}

TEST(FockDensity, fixed_phase_is_pure_coherent_state) {
  const auto rho = fock_density_matrix(0.1, PhaseDistribution::fixed(0.0), 20);
  EXPECT_NEAR(rho.entries(0, 1).real(), std::exp(-0.1) * std::sqrt(0.1), 1e-15);
  EXPECT_NEAR(rho.entries(0, 1).real(), 0.28614, 1e-5);
  EXPECT_NEAR(offdiag_norm(rho), std::exp(-0.1) * std::sqrt(0.1), 1e-15);
  // Pure: rho^2 = rho up to truncation.
  EXPECT_NEAR((rho.entries * rho.entries - rho.entries * rho.entries.trace()).norm(), 0.0, 1e-14);

  const auto rotated = fock_density_matrix(0.3, PhaseDistribution::fixed(0.7), 6);
  EXPECT_NEAR(std::arg(rotated.entries(2, 0)), 1.4, 1e-14);
}

TEST(FockDensity, discrete_two_point_keeps_even_coherences) {
  const auto rho = fock_density_matrix(0.1, PhaseDistribution::discrete(2), 20);
  EXPECT_EQ(rho.entries(0, 1), std::complex<double>(0.0));
  EXPECT_NEAR(std::abs(rho.entries(0, 2)), std::exp(-0.1) * 0.1 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(offdiag_norm(rho), 0.06398, 1e-5);
}

TEST(FockDensity, discrete_converges_to_uniform_once_points_exceed_truncation) {
  const auto uniform = fock_density_matrix(0.5, PhaseDistribution::continuous_uniform(), 12);
  for (std::size_t n_points : {2u, 5u, 12u, 13u, 40u, 4096u}) {
    const auto rho = fock_density_matrix(0.5, PhaseDistribution::discrete(n_points), 12);
    const bool exact = n_points > 12;
    EXPECT_EQ(rho.entries == uniform.entries, exact) << n_points;
    EXPECT_EQ(offdiag_norm(rho) == 0.0, exact) << n_points;
  }
}

TEST(FockDensity, discrete_characteristic_matches_phasor_average) {
  // Oracle: average of exp(i d phi) over the N grid phases.
  for (std::size_t n_points : {1u, 3u, 7u}) {
    const auto dist = PhaseDistribution::discrete(n_points);
    for (long d = -9; d <= 9; ++d) {
      std::complex<double> avg = 0.0;
      for (std::size_t k = 0; k < n_points; ++k) avg += std::polar(1.0, d * 2 * kPi * k / n_points);
      avg /= static_cast<double>(n_points);
      EXPECT_NEAR(std::abs(dist.characteristic(d) - avg), 0.0, 1e-12);
    }
  }
}

TEST(FockDensity, structural_invariants) {
  for (double mu : {0.0, 0.1, 1.0, 5.0}) {
    for (const auto& dist : {PhaseDistribution::continuous_uniform(), PhaseDistribution::discrete(3),
                             PhaseDistribution::fixed(1.1)}) {
      const auto rho = fock_density_matrix(mu, dist, 30);
      EXPECT_NEAR((rho.entries - rho.entries.adjoint()).norm(), 0.0, 1e-12);
      EXPECT_GE(rho.truncation_deficit(), -1e-12);
      // Deficit equals the Poisson tail beyond n_max.
      double tail = 0.0;
      for (int n = 31; n < 200; ++n) tail += std::exp(-mu + n * std::log(std::max(mu, 1e-300)) - std::lgamma(n + 1.0));
      EXPECT_NEAR(rho.truncation_deficit(), mu == 0.0 ? 0.0 : tail, 1e-12);
      for (int n = 0; n <= 30; ++n) EXPECT_GE(rho.entries(n, n).real(), 0.0);
    }
  }
}

TEST(FockDensity, large_truncation_is_stable) {
  const auto rho = fock_density_matrix(1.0, PhaseDistribution::continuous_uniform(), 100);
  EXPECT_TRUE(rho.entries.allFinite());
  EXPECT_NEAR(rho.entries.trace().real(), 1.0, 1e-12);
  EXPECT_THROW(fock_density_matrix(-1.0, PhaseDistribution::continuous_uniform(), 5), ValidationError);
  EXPECT_THROW(fock_density_matrix(1.0, PhaseDistribution::continuous_uniform(), 0), ValidationError);
  EXPECT_THROW(fock_density_matrix(1.0, PhaseDistribution::discrete(0), 5), ValidationError);
}

TEST(ScanCsv, line_counts_and_round_trip) {
  DelayScanResult r;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double d : scan_delays(200.0, 10.0)) {
    const std::size_t n = 5000 + static_cast<std::size_t>(u(rng) * 10000);
    r.points.push_back({d, estimate_qber(static_cast<std::size_t>(u(rng) * n), n)});
  }
  const auto path = temp_path("scan.csv");
  export_csv(r, path);
  EXPECT_EQ(count_lines(path), 42u);
  const DelayScanResult back = read_scan_csv(path);
  ASSERT_EQ(back.points.size(), r.points.size());
  for (std::size_t i = 0; i < r.points.size(); ++i) {
    EXPECT_NEAR(back.points[i].delay_ns, r.points[i].delay_ns, 1e-9);
    EXPECT_NEAR(back.points[i].estimate.qber, r.points[i].estimate.qber, 1e-9);
    EXPECT_NEAR(back.points[i].estimate.std_error, r.points[i].estimate.std_error, 1e-9);
    EXPECT_EQ(back.points[i].estimate.n_sifted, r.points[i].estimate.n_sifted);
    EXPECT_EQ(back.points[i].estimate.n_errors, r.points[i].estimate.n_errors);
  }

  export_csv(DelayScanResult{}, path);
  EXPECT_EQ(count_lines(path), 1u);
  std::filesystem::remove(path);
  EXPECT_THROW(export_csv(r, std::filesystem::path("/nonexistent-dir/scan.csv")), IoError);
}

TEST(DensityCsv, rows) {
  const auto rho = fock_density_matrix(0.1, PhaseDistribution::fixed(0.0), 1);
  std::ostringstream out;
  export_density_csv(rho, out);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "n,m,re,im");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 4);
  EXPECT_NE(out.str().find("0,1," + format_double(rho.entries(0, 1).real()) + ",0\n"), std::string::npos);
}

TEST(FormatDouble, round_trips) {
  for (double v : {0.0, -200.0, 0.1, 1.0 / 3.0, 6.02e23, 1e-300}) EXPECT_EQ(std::stod(format_double(v)), v);
}
