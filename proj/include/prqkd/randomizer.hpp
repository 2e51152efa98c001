#pragma once

// Functional generator driving the polarization-insensitive phase modulator.
//
// After the frame trigger the generator holds for delay_ns, then steps
// through one 12-bit code per pulse period. The modulator phases a single
// polarization axis per pass; the pulse crosses it once on the way to the
// Faraday mirror and once on the way back, roundtrip_ns later, so each
// polarization component samples the drive at a different instant.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "prqkd/optics.hpp"
#include "prqkd/rng.hpp"

namespace prqkd {

inline constexpr int kCodeBits = 12;
inline constexpr int kCodeLevels = 1 << kCodeBits;
inline constexpr int kMaxCode = kCodeLevels - 1;
inline constexpr std::size_t kDefaultFrameLength = 504;

struct PhasePattern {
  std::vector<std::uint16_t> codes;

  std::size_t size() const { return codes.size(); }
  // Throws ValidationError unless every code is in range and the length matches.
  void validate(std::size_t frame_len) const;
};

struct RandomizerTiming {
  double period_ns = 200.0;   // 5 MHz
  double delay_ns = 0.0;      // generator hold offset, the scan variable
  double roundtrip_ns = 20.0; // modulator -> mirror -> modulator, ~2 m of fiber

  void validate() const;
};

PhasePattern generate_pattern(Rng& rng, std::size_t frame_len);

double code_to_phase(int code);

// Pattern slot active at time t, or nullopt while the generator idles.
std::optional<std::size_t> slot_at(double t_ns, std::size_t frame_len, const RandomizerTiming& timing);

double phase_at(double t_ns, const PhasePattern& pattern, const RandomizerTiming& timing);

struct PassPhases {
  double forward = 0.0;  // applied to H on the way in
  double ret = 0.0;      // applied to the new H (old V) on the way back
};

PassPhases pass_phases(double t_ns, const PhasePattern& pattern, const RandomizerTiming& timing);

Pulse modulate_pi(const Pulse& pulse, const PhasePattern& pattern, const RandomizerTiming& timing);

// One code per line. Files may hold several consecutive frames.
void write_pattern(const std::filesystem::path& path, const PhasePattern& pattern);
std::vector<PhasePattern> read_patterns(const std::filesystem::path& path, std::size_t frame_len);

}  // namespace prqkd
