#pragma once

// Coherent-state polarization optics. A pulse is a two-mode Jones vector of
// complex field amplitudes in units of sqrt(photons), so squaredNorm() is the
// mean photon number. Detection is the threshold (click / no click) model for
// a Poissonian photon number.

#include <cmath>
#include <complex>
#include <cstddef>
#include <random>

#include <Eigen/Dense>

#include "prqkd/errors.hpp"

namespace prqkd {

template <typename Scalar>
using PolarizedAmplitudeT = Eigen::Matrix<std::complex<Scalar>, 2, 1>;
using PolarizedAmplitude = PolarizedAmplitudeT<double>;

// Component indices into a PolarizedAmplitude.
inline constexpr Eigen::Index kH = 0;
inline constexpr Eigen::Index kV = 1;

template <typename Scalar>
struct PulseT {
  PolarizedAmplitudeT<Scalar> amplitude = PolarizedAmplitudeT<Scalar>::Zero();
  Scalar t_ns = 0;  // arrival at the randomizer's modulator, from frame start
};
using Pulse = PulseT<double>;

// Reference (short arm) and signal (long arm) halves of one bit.
template <typename Scalar>
struct PulsePairT {
  PulseT<Scalar> reference;
  PulseT<Scalar> signal;
  std::size_t bit_index = 0;
};
using PulsePair = PulsePairT<double>;

struct DetectorConfig {
  double efficiency = 0.45;
  double dark_prob = 1e-5;  // per gate

  void validate() const {
    if (!(efficiency >= 0.0 && efficiency <= 1.0)) {
      throw ValidationError("detector efficiency must lie in [0, 1]");
    }
    if (!(dark_prob >= 0.0 && dark_prob < 1.0)) {
      throw ValidationError("detector dark_prob must lie in [0, 1)");
    }
  }
};

// Mean photon numbers arriving at the two output ports of the final coupler.
template <typename Scalar>
struct DetectorMeans {
  Scalar d0 = 0;
  Scalar d1 = 0;
};

template <typename Derived>
auto mean_photon_number(const Eigen::MatrixBase<Derived>& a) {
  return a.squaredNorm();
}

template <typename Scalar>
Scalar mean_photon_number(const PulseT<Scalar>& p) {
  return p.amplitude.squaredNorm();
}

template <typename Scalar>
Scalar db_to_power_ratio(Scalar loss_db) {
  using std::pow;
  return pow(Scalar(10), -loss_db / Scalar(10));
}

template <typename Scalar>
std::complex<Scalar> unit_phasor(Scalar phi) {
  return std::polar(Scalar(1), phi);
}

// Asymmetric Mach-Zehnder: 50/50 split; the long arm carries the phase
// modulator whose insertion loss makes the signal weaker than the reference.
template <typename Scalar>
PulsePairT<Scalar> mzi_split(const PulseT<Scalar>& input, Scalar insertion_loss_db,
                             Scalar mzi_delay_ns, std::size_t bit_index = 0) {
  if (!(insertion_loss_db >= 0)) throw ValidationError("MZI insertion loss must be >= 0 dB");
  if (!(mzi_delay_ns >= 0)) throw ValidationError("MZI arm delay must be >= 0 ns");
  if (!input.amplitude.allFinite()) throw ValidationError("MZI input amplitude is not finite");

  using std::sqrt;
  const Scalar half = sqrt(Scalar(0.5));
  PulsePairT<Scalar> out;
  out.bit_index = bit_index;
  out.reference.amplitude = input.amplitude * half;
  out.reference.t_ns = input.t_ns;
  out.signal.amplitude = input.amplitude * (half * sqrt(db_to_power_ratio(insertion_loss_db)));
  out.signal.t_ns = input.t_ns + mzi_delay_ns;
  return out;
}

// Ideal Faraday mirror: H <-> V. The common reflection phase is dropped.
template <typename Derived>
auto faraday_swap(const Eigen::MatrixBase<Derived>& a) {
  EIGEN_STATIC_ASSERT_VECTOR_SPECIFIC_SIZE(Derived, 2);
  return a.reverse().eval();
}

template <typename Derived, typename Scalar>
auto apply_phase(const Eigen::MatrixBase<Derived>& a, Scalar phi_h, Scalar phi_v) {
  EIGEN_STATIC_ASSERT_VECTOR_SPECIFIC_SIZE(Derived, 2);
  typename Derived::PlainObject out = a;
  out(kH) *= unit_phasor(phi_h);
  out(kV) *= unit_phasor(phi_v);
  return out;
}

// Scales both pulses by one real factor so reference + signal carry
// target_mean photons in total. Relative amplitude and phase are untouched.
template <typename Scalar>
PulsePairT<Scalar> attenuate_to_mean_photon(const PulsePairT<Scalar>& pair, Scalar target_mean) {
  if (!(target_mean >= 0)) throw ValidationError("target mean photon number must be >= 0");
  const Scalar current = mean_photon_number(pair.reference) + mean_photon_number(pair.signal);
  if (target_mean == 0) {
    PulsePairT<Scalar> out = pair;
    out.reference.amplitude.setZero();
    out.signal.amplitude.setZero();
    return out;
  }
  if (!(current > 0)) throw ValidationError("cannot attenuate a vacuum pair to a nonzero mean");

  using std::sqrt;
  const Scalar factor = sqrt(target_mean / current);
  PulsePairT<Scalar> out = pair;
  out.reference.amplitude *= factor;
  out.signal.amplitude *= factor;
  return out;
}

// Final 50/50 coupler. Each polarization mode interferes with its own kind.
template <typename DerivedS, typename DerivedR>
auto interfere(const Eigen::MatrixBase<DerivedS>& signal, const Eigen::MatrixBase<DerivedR>& reference) {
  using Scalar = typename DerivedS::RealScalar;
  DetectorMeans<Scalar> out;
  out.d0 = (signal + reference).squaredNorm() / Scalar(2);
  out.d1 = (signal - reference).squaredNorm() / Scalar(2);
  return out;
}

template <typename Scalar>
Scalar click_probability(Scalar mean_photons, const DetectorConfig& cfg) {
  if (!(mean_photons >= 0)) throw ValidationError("mean photon number at a detector must be >= 0");
  using std::exp;
  return Scalar(1) - Scalar(1 - cfg.dark_prob) * exp(-Scalar(cfg.efficiency) * mean_photons);
}

template <typename Scalar, typename Urbg>
bool detect(Scalar mean_photons, const DetectorConfig& cfg, Urbg& rng) {
  const Scalar p = click_probability(mean_photons, cfg);
  return std::bernoulli_distribution(static_cast<double>(p))(rng);
}

template <typename Scalar>
PulseT<Scalar> propagate_fiber(const PulseT<Scalar>& p, Scalar length_km, Scalar loss_db_per_km) {
  if (!(length_km >= 0)) throw ValidationError("fiber length must be >= 0 km");
  if (!(loss_db_per_km >= 0)) throw ValidationError("fiber loss must be >= 0 dB/km");
  if (length_km == 0 || loss_db_per_km == 0) return p;
  using std::sqrt;
  PulseT<Scalar> out = p;
  out.amplitude *= sqrt(db_to_power_ratio(loss_db_per_km * length_km));
  return out;
}

}  // namespace prqkd
