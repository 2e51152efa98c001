#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "prqkd/errors.hpp"
#include "prqkd/protocol.hpp"

namespace prqkd {

// ---------------------------------------------------------------------------
// Delay scan

struct ScanPoint {
  double delay_ns = 0.0;
  QberEstimate estimate;
};

struct DelayScanResult {
  std::vector<ScanPoint> points;
};

// -range, -range + step, ..., +range. Both arguments must be positive.
std::vector<double> scan_delays(double range_ns, double step_ns);

std::uint64_t scan_point_seed(std::uint64_t base_seed, std::size_t delay_index);

// One independent session per delay, seeded from (base seed, delay index).
// Results are ordered by input position and do not depend on `threads`.
DelayScanResult delay_scan(const SessionConfig& base, std::span<const double> delays, unsigned threads = 1);

// Where the generator transition falls relative to the four modulation
// instants of a mid-frame bit (reference and signal, forward and return).
enum class Alignment {
  Aligned,     // all four instants share a slot
  Waist,       // the two passes of one pulse straddle a transition
  Misaligned,  // reference and signal sit in different slots, each pulse internally uniform
};

Alignment classify_delay(const SessionConfig& cfg, double delay_ns);

void export_csv(const DelayScanResult& result, std::ostream& out);
void export_csv(const DelayScanResult& result, const std::filesystem::path& path);
DelayScanResult read_scan_csv(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Uniformity audit

struct ChiSquareResult {
  double statistic = 0.0;
  double threshold_p99 = 0.0;
  std::size_t n_bins = 0;
  std::size_t n_samples = 0;

  bool rejected() const { return statistic > threshold_p99; }
};

double chi_square_quantile(double probability, double degrees_of_freedom);

// Equal-width bins over [0, 2pi); phases are wrapped into that range first.
ChiSquareResult uniformity_chisq(std::span<const double> phases, std::size_t n_bins);

// ---------------------------------------------------------------------------
// Fock-basis density matrix of a phase-averaged coherent state

struct PhaseDistribution {
  enum class Kind { ContinuousUniform, Discrete, Fixed };

  Kind kind = Kind::ContinuousUniform;
  std::size_t n_points = 0;  // Discrete: phases 2 pi k / n_points
  double phase = 0.0;        // Fixed

  static PhaseDistribution continuous_uniform() { return {}; }
  static PhaseDistribution discrete(std::size_t n) { return {Kind::Discrete, n, 0.0}; }
  static PhaseDistribution fixed(double phi) { return {Kind::Fixed, 0, phi}; }

  // E[exp(i d phi)] for integer d.
  std::complex<double> characteristic(long d) const {
    switch (kind) {
      case Kind::ContinuousUniform:
        return d == 0 ? 1.0 : 0.0;
      case Kind::Discrete: {
        const long n = static_cast<long>(n_points);
        return d % n == 0 ? 1.0 : 0.0;
      }
      case Kind::Fixed:
        return std::polar(1.0, static_cast<double>(d) * phase);
    }
    return 0.0;
  }
};

template <typename Scalar>
struct FockDensityMatrixT {
  using Matrix = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic>;

  Matrix entries;
  Scalar mean_photon = 0;
  int n_max = 0;

  // Probability mass beyond n_max lost to truncation.
  Scalar truncation_deficit() const { return Scalar(1) - entries.trace().real(); }
};
using FockDensityMatrix = FockDensityMatrixT<double>;

// rho_nm = exp(-mu) mu^((n+m)/2) / sqrt(n! m!) E[exp(i (n-m) phi)], with the
// amplitude prefactor evaluated in log space.
template <typename Scalar = double>
FockDensityMatrixT<Scalar> fock_density_matrix(Scalar mean_photon, const PhaseDistribution& dist, int n_max) {
  if (!(mean_photon >= 0) || !std::isfinite(static_cast<double>(mean_photon))) {
    throw ValidationError("mean photon number must be >= 0");
  }
  if (n_max < 1) throw ValidationError("n_max must be >= 1");
  if (dist.kind == PhaseDistribution::Kind::Discrete && dist.n_points == 0) {
    throw ValidationError("discrete phase distribution needs at least one point");
  }

  using std::exp;
  using std::lgamma;
  using std::log;
  const int dim = n_max + 1;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> amp(dim);
  for (int n = 0; n < dim; ++n) {
    if (mean_photon == 0) {
      amp(n) = n == 0 ? Scalar(1) : Scalar(0);
    } else {
      amp(n) = exp(Scalar(0.5) * (-mean_photon + Scalar(n) * log(mean_photon) - lgamma(Scalar(n + 1))));
    }
  }

  FockDensityMatrixT<Scalar> rho;
  rho.mean_photon = mean_photon;
  rho.n_max = n_max;
  rho.entries.resize(dim, dim);
  for (int n = 0; n < dim; ++n) {
    for (int m = 0; m < dim; ++m) {
      const std::complex<double> c = dist.characteristic(static_cast<long>(n) - static_cast<long>(m));
      rho.entries(n, m) = (amp(n) * amp(m)) * std::complex<Scalar>(Scalar(c.real()), Scalar(c.imag()));
    }
  }
  return rho;
}

template <typename Scalar>
Scalar offdiag_norm(const FockDensityMatrixT<Scalar>& rho) {
  Scalar best = 0;
  for (Eigen::Index n = 0; n < rho.entries.rows(); ++n) {
    for (Eigen::Index m = 0; m < rho.entries.cols(); ++m) {
      if (n != m) best = std::max(best, std::abs(rho.entries(n, m)));
    }
  }
  return best;
}

// Rows of n,m,re,im.
void export_density_csv(const FockDensityMatrix& rho, std::ostream& out);
void export_density_csv(const FockDensityMatrix& rho, const std::filesystem::path& path);

// Shortest decimal that parses back to the same double.
std::string format_double(double v);

}  // namespace prqkd
