#include "prqkd/protocol.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <string>

namespace prqkd {

int coding_quarter_turns(const BasisBit& b) {
  return (b.basis == Basis::X ? 0 : 1) + 2 * b.bit;
}

int measurement_quarter_turns(Basis b) { return b == Basis::X ? 0 : 1; }

std::complex<double> quarter_turn_phasor(int quarter_turns) {
  switch (((quarter_turns % 4) + 4) % 4) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, 1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, -1.0};
  }
}

double coding_phase(const BasisBit& b) { return coding_quarter_turns(b) * std::numbers::pi / 2.0; }

double measurement_phase(Basis b) { return measurement_quarter_turns(b) * std::numbers::pi / 2.0; }

void OpticsConfig::validate() const {
  if (!(mzi_delay_ns >= 0.0)) throw ValidationError("mzi_delay_ns must be >= 0");
  if (!(insertion_loss_db >= 0.0)) throw ValidationError("insertion_loss_db must be >= 0");
  if (!(fiber_km >= 0.0)) throw ValidationError("fiber_km must be >= 0");
  if (!(fiber_loss_db_per_km >= 0.0)) throw ValidationError("fiber_loss_db_per_km must be >= 0");
  if (!(source_mean_photon > 0.0) || !std::isfinite(source_mean_photon)) {
    throw ValidationError("source_mean_photon must be > 0");
  }
  if (!(coding_phase_jitter_rad >= 0.0) || !std::isfinite(coding_phase_jitter_rad)) {
    throw ValidationError("coding_phase_jitter_rad must be >= 0");
  }
  detector.validate();
}

double SessionConfig::resolved_arrival_offset_ns() const {
  if (arrival_offset_ns) return *arrival_offset_ns;
  return 0.5 * (timing.period_ns - optics.mzi_delay_ns - timing.roundtrip_ns);
}

void SessionConfig::validate() const {
  if (n_bits == 0) throw ValidationError("bits must be > 0");
  if (!(mean_photon >= 0.0) || !std::isfinite(mean_photon)) throw ValidationError("mean_photon must be >= 0");
  if (frame_len == 0) throw ValidationError("frame_len must be > 0");
  timing.validate();
  optics.validate();
  if (polarization) {
    if (!polarization->allFinite() || !(polarization->squaredNorm() > 0.0)) {
      throw ValidationError("polarization must be a finite nonzero Jones vector");
    }
  }
  const double offset = resolved_arrival_offset_ns();
  if (!(offset >= 0.0) || !std::isfinite(offset)) {
    throw ValidationError(arrival_offset_ns ? "arrival_offset_ns must be >= 0"
                                            : "mzi_delay_ns + roundtrip_ns exceeds the pulse period; "
                                              "set arrival_offset_ns explicitly");
  }
}

PolarizedAmplitude random_polarization(Rng& rng) {
  std::uniform_real_distribution<double> s1(-1.0, 1.0);
  std::uniform_real_distribution<double> azimuth(0.0, 2.0 * std::numbers::pi);
  const double s = s1(rng);
  const double psi = azimuth(rng);
  PolarizedAmplitude out;
  out(kH) = std::sqrt(0.5 * (1.0 + s));
  out(kV) = std::polar(std::sqrt(0.5 * (1.0 - s)), psi);
  return out;
}

void simulate_session(const SessionConfig& cfg, const RecordSink& sink) {
  cfg.validate();

  Rng pattern_rng = make_stream(cfg.seed, Stream::Pattern);
  Rng basis_rng = make_stream(cfg.seed, Stream::Basis);
  Rng noise_rng = make_stream(cfg.seed, Stream::Noise);
  Rng detection_rng = make_stream(cfg.seed, Stream::Detection);
  Rng polarization_rng = make_stream(cfg.seed, Stream::Polarization);

  PolarizedAmplitude jones = cfg.polarization ? *cfg.polarization : random_polarization(polarization_rng);
  jones.normalize();

  const OpticsConfig& optics = cfg.optics;
  const double offset = cfg.resolved_arrival_offset_ns();
  const double bob_long_arm = std::sqrt(db_to_power_ratio(optics.insertion_loss_db));
  std::normal_distribution<double> unit_normal(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);

  PhasePattern pattern;
  for (std::size_t i = 0; i < cfg.n_bits; ++i) {
    const std::size_t k = i % cfg.frame_len;
    if (k == 0 && cfg.randomizer_enabled) pattern = generate_pattern(pattern_rng, cfg.frame_len);

    const std::uint64_t choice = basis_rng();
    DetectionRecord rec;
    rec.bit_index = i;
    rec.alice.basis = (choice & 1u) ? Basis::Y : Basis::X;
    rec.alice.bit = static_cast<std::uint8_t>((choice >> 1) & 1u);
    rec.bob_basis = ((choice >> 2) & 1u) ? Basis::Y : Basis::X;

    Pulse source;
    source.amplitude = jones * std::sqrt(optics.source_mean_photon);
    source.t_ns = static_cast<double>(k) * cfg.timing.period_ns + offset;

    PulsePair pair = mzi_split(source, optics.insertion_loss_db, optics.mzi_delay_ns, k);
    pair.reference = propagate_fiber(pair.reference, optics.fiber_km, optics.fiber_loss_db_per_km);
    pair.signal = propagate_fiber(pair.signal, optics.fiber_km, optics.fiber_loss_db_per_km);

    // Alice: coding phase on the signal pulse only.
    std::complex<double> coding = quarter_turn_phasor(coding_quarter_turns(rec.alice));
    if (optics.coding_phase_jitter_rad > 0.0) coding *= unit_phasor(optics.coding_phase_jitter_rad * unit_normal(noise_rng));
    pair.signal.amplitude *= coding;

    double emitted_phase = 0.0;
    if (cfg.randomizer_enabled) {
      emitted_phase = phase_at(pair.reference.t_ns, pattern, cfg.timing);
      pair.reference = modulate_pi(pair.reference, pattern, cfg.timing);
      pair.signal = modulate_pi(pair.signal, pattern, cfg.timing);
    } else {
      // Undriven modulator: only its Faraday mirror acts.
      pair.reference.amplitude = faraday_swap(pair.reference.amplitude);
      pair.signal.amplitude = faraday_swap(pair.signal.amplitude);
    }

    double target = cfg.mean_photon;
    if (cfg.mean_photon_mode == MeanPhotonMode::PerSignalPulse) {
      const double sig = mean_photon_number(pair.signal);
      target = sig > 0.0 ? cfg.mean_photon * (sig + mean_photon_number(pair.reference)) / sig : 0.0;
    }
    pair = attenuate_to_mean_photon(pair, target);

    // Alice's own Faraday mirror, then the channel back to Bob.
    pair.reference.amplitude = faraday_swap(pair.reference.amplitude);
    pair.signal.amplitude = faraday_swap(pair.signal.amplitude);
    pair.reference = propagate_fiber(pair.reference, optics.fiber_km, optics.fiber_loss_db_per_km);
    pair.signal = propagate_fiber(pair.signal, optics.fiber_km, optics.fiber_loss_db_per_km);

    // Bob: reference through the long arm and his modulator.
    const PolarizedAmplitude reference =
        pair.reference.amplitude * (bob_long_arm * quarter_turn_phasor(measurement_quarter_turns(rec.bob_basis)));
    const auto means = interfere(pair.signal.amplitude, reference);
    rec.mean_d0 = means.d0;
    rec.mean_d1 = means.d1;

    rec.click_d0 = detect(means.d0, optics.detector, detection_rng);
    rec.click_d1 = detect(means.d1, optics.detector, detection_rng);
    if (rec.click_d0 != rec.click_d1) {
      rec.outcome = rec.click_d0 ? 0 : 1;
    } else if (rec.click_d0 && cfg.double_click == DoubleClickPolicy::RandomAssign) {
      rec.outcome = coin(detection_rng) ? 1 : 0;
    }

    sink(rec, emitted_phase);
  }
}

SessionResult run_session(const SessionConfig& cfg) {
  cfg.validate();
  SessionResult out;
  out.records.reserve(cfg.n_bits);
  out.emitted_phases.reserve(cfg.n_bits);
  simulate_session(cfg, [&](const DetectionRecord& rec, double phase) {
    out.records.push_back(rec);
    out.emitted_phases.push_back(phase);
  });
  return out;
}

namespace {

bool is_sifted(const DetectionRecord& r) { return r.alice.basis == r.bob_basis && r.outcome >= 0; }

}  // namespace

std::vector<SiftedBit> sift(std::span<const DetectionRecord> records) {
  std::vector<SiftedBit> out;
  for (const auto& r : records) {
    if (is_sifted(r)) out.push_back({r.alice.bit, static_cast<std::uint8_t>(r.outcome)});
  }
  return out;
}

QberEstimate estimate_qber(std::size_t n_errors, std::size_t n_sifted) {
  if (n_sifted == 0) throw InsufficientStatistics("no sifted bits; QBER is undefined");
  if (n_errors > n_sifted) throw ValidationError("more errors than sifted bits");
  QberEstimate q;
  q.n_sifted = n_sifted;
  q.n_errors = n_errors;
  q.qber = static_cast<double>(n_errors) / static_cast<double>(n_sifted);
  q.std_error = std::sqrt(q.qber * (1.0 - q.qber) / static_cast<double>(n_sifted));
  return q;
}

QberEstimate estimate_qber(std::span<const SiftedBit> sifted) {
  std::size_t errors = 0;
  for (const auto& s : sifted) errors += (s.alice_bit != s.bob_bit);
  return estimate_qber(errors, sifted.size());
}

QberEstimate session_qber(const SessionConfig& cfg) {
  std::size_t sifted = 0;
  std::size_t errors = 0;
  simulate_session(cfg, [&](const DetectionRecord& r, double) {
    if (!is_sifted(r)) return;
    ++sifted;
    errors += (r.outcome != r.alice.bit);
  });
  return estimate_qber(errors, sifted);
}

void write_records_csv(const std::filesystem::path& path, std::span<const DetectionRecord> records) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "bit_index,alice_basis,alice_bit,bob_basis,click_d0,click_d1\n";
  for (const auto& r : records) {
    out << r.bit_index << ',' << (r.alice.basis == Basis::X ? 'X' : 'Y') << ',' << int(r.alice.bit) << ','
        << (r.bob_basis == Basis::X ? 'X' : 'Y') << ',' << int(r.click_d0) << ',' << int(r.click_d1) << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace prqkd
