#pragma once

// Plug-and-play BB84 round trip.
//
// Bob emits one strong pulse per period. His asymmetric MZI splits it into a
// reference (short arm) and a signal (long arm, weaker by the modulator's
// insertion loss). At Alice the signal takes the coding phase, both pulses
// cross the phase randomizer, are attenuated to the target mean photon
// number and reflected back. On the return the routing is swapped: the
// reference takes the long arm through Bob's modulator (and its loss), the
// signal takes the short arm, and the two meet at the output coupler.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "prqkd/optics.hpp"
#include "prqkd/randomizer.hpp"

namespace prqkd {

enum class Basis : std::uint8_t { X = 0, Y = 1 };

struct BasisBit {
  Basis basis = Basis::X;
  std::uint8_t bit = 0;

  friend bool operator==(const BasisBit&, const BasisBit&) = default;
};

// Phases in quarter turns so the four BB84 values are applied exactly.
int coding_quarter_turns(const BasisBit& b);
int measurement_quarter_turns(Basis b);
std::complex<double> quarter_turn_phasor(int quarter_turns);
double coding_phase(const BasisBit& b);
double measurement_phase(Basis b);

enum class DoubleClickPolicy { Discard, RandomAssign };

// Whether the target mean photon number counts reference + signal, or the
// signal pulse alone.
enum class MeanPhotonMode { PerBit, PerSignalPulse };

struct OpticsConfig {
  double mzi_delay_ns = 50.0;
  double insertion_loss_db = 3.0;
  double fiber_km = 5.0;
  double fiber_loss_db_per_km = 0.2;
  double source_mean_photon = 1.0e6;      // Bob's laser, before Alice's attenuator
  double coding_phase_jitter_rad = 0.1;   // Gaussian sigma on Alice's coding phase
  DetectorConfig detector;

  void validate() const;
};

struct SessionConfig {
  std::size_t n_bits = 843000;
  double mean_photon = 0.1;
  MeanPhotonMode mean_photon_mode = MeanPhotonMode::PerBit;
  std::size_t frame_len = kDefaultFrameLength;
  RandomizerTiming timing;
  // Reference pulse arrival at the modulator within its period. When unset,
  // the bit's modulation window [t_ref, t_sig + roundtrip] is centered between
  // generator transitions for delay_ns = 0.
  std::optional<double> arrival_offset_ns;
  OpticsConfig optics;
  bool randomizer_enabled = true;
  // Jones vector entering Alice's randomizer; unset draws one uniformly over
  // the Poincare sphere per session.
  std::optional<PolarizedAmplitude> polarization;
  DoubleClickPolicy double_click = DoubleClickPolicy::Discard;
  std::uint64_t seed = 1;

  void validate() const;
  double resolved_arrival_offset_ns() const;
};

struct DetectionRecord {
  std::size_t bit_index = 0;  // global index across frames
  BasisBit alice;
  Basis bob_basis = Basis::X;
  bool click_d0 = false;
  bool click_d1 = false;
  // Conclusive bit after the double-click policy; -1 when inconclusive.
  std::int8_t outcome = -1;
  double mean_d0 = 0.0;
  double mean_d1 = 0.0;
};

struct SessionResult {
  std::vector<DetectionRecord> records;
  std::vector<double> emitted_phases;  // global phase put on each bit by the randomizer
};

using RecordSink = std::function<void(const DetectionRecord&, double emitted_phase)>;

// Streams every simulated bit into the sink, in bit order.
void simulate_session(const SessionConfig& cfg, const RecordSink& sink);

SessionResult run_session(const SessionConfig& cfg);

struct SiftedBit {
  std::uint8_t alice_bit = 0;
  std::uint8_t bob_bit = 0;
};

std::vector<SiftedBit> sift(std::span<const DetectionRecord> records);

struct QberEstimate {
  double qber = 0.0;
  double std_error = 0.0;
  std::size_t n_sifted = 0;
  std::size_t n_errors = 0;
};

QberEstimate estimate_qber(std::size_t n_errors, std::size_t n_sifted);
QberEstimate estimate_qber(std::span<const SiftedBit> sifted);

// Sifts and counts on the fly without keeping the records.
QberEstimate session_qber(const SessionConfig& cfg);

// Columns: bit_index,alice_basis,alice_bit,bob_basis,click_d0,click_d1
void write_records_csv(const std::filesystem::path& path, std::span<const DetectionRecord> records);

PolarizedAmplitude random_polarization(Rng& rng);

}  // namespace prqkd
