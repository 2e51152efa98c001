#include "prqkd/randomizer.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <string>

namespace prqkd {

void PhasePattern::validate(std::size_t frame_len) const {
  if (codes.size() != frame_len) {
    throw ValidationError("phase pattern has " + std::to_string(codes.size()) + " codes, expected " +
                          std::to_string(frame_len));
  }
  for (std::size_t i = 0; i < codes.size(); ++i) {
    if (codes[i] > kMaxCode) {
      throw ValidationError("phase code " + std::to_string(codes[i]) + " at index " + std::to_string(i) +
                            " exceeds 12 bits");
    }
  }
}

void RandomizerTiming::validate() const {
  if (!(period_ns > 0.0) || !std::isfinite(period_ns)) throw ValidationError("period_ns must be > 0");
  if (!(roundtrip_ns >= 0.0) || !std::isfinite(roundtrip_ns)) throw ValidationError("roundtrip_ns must be >= 0");
  if (!std::isfinite(delay_ns)) throw ValidationError("delay_ns must be finite");
}

PhasePattern generate_pattern(Rng& rng, std::size_t frame_len) {
  if (frame_len == 0) throw ValidationError("frame length must be > 0");
  std::uniform_int_distribution<int> code(0, kMaxCode);
  PhasePattern out;
  out.codes.resize(frame_len);
  for (auto& c : out.codes) c = static_cast<std::uint16_t>(code(rng));
  return out;
}

double code_to_phase(int code) {
  if (code < 0 || code > kMaxCode) {
    throw ValidationError("phase code " + std::to_string(code) + " outside [0, 4095]");
  }
  return 2.0 * std::numbers::pi * static_cast<double>(code) / static_cast<double>(kCodeLevels);
}

std::optional<std::size_t> slot_at(double t_ns, std::size_t frame_len, const RandomizerTiming& timing) {
  const double slot = std::floor((t_ns - timing.delay_ns) / timing.period_ns);
  if (slot < 0.0 || slot >= static_cast<double>(frame_len)) return std::nullopt;
  return static_cast<std::size_t>(slot);
}

double phase_at(double t_ns, const PhasePattern& pattern, const RandomizerTiming& timing) {
  const auto slot = slot_at(t_ns, pattern.size(), timing);
  return slot ? code_to_phase(pattern.codes[*slot]) : 0.0;
}

PassPhases pass_phases(double t_ns, const PhasePattern& pattern, const RandomizerTiming& timing) {
  return {phase_at(t_ns, pattern, timing), phase_at(t_ns + timing.roundtrip_ns, pattern, timing)};
}

Pulse modulate_pi(const Pulse& pulse, const PhasePattern& pattern, const RandomizerTiming& timing) {
  const PassPhases phases = pass_phases(pulse.t_ns, pattern, timing);
  Pulse out = pulse;
  out.amplitude = apply_phase(faraday_swap(apply_phase(pulse.amplitude, phases.forward, 0.0)), phases.ret, 0.0);
  return out;
}

void write_pattern(const std::filesystem::path& path, const PhasePattern& pattern) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (auto c : pattern.codes) out << c << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<PhasePattern> read_patterns(const std::filesystem::path& path, std::size_t frame_len) {
  if (frame_len == 0) throw ValidationError("frame length must be > 0");
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());

  std::vector<std::uint16_t> codes;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    const std::string token = line.substr(first, last - first + 1);
    std::size_t used = 0;
    long value = -1;
    try {
      value = std::stol(token, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != token.size() || value < 0 || value > kMaxCode) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": expected a code in [0, 4095], got '" +
                            token + "'");
    }
    codes.push_back(static_cast<std::uint16_t>(value));
  }
  if (in.bad()) throw IoError("read failed: " + path.string());
  if (codes.empty() || codes.size() % frame_len != 0) {
    throw ValidationError(path.string() + ": " + std::to_string(codes.size()) +
                          " codes is not a whole number of frames of length " + std::to_string(frame_len));
  }

  std::vector<PhasePattern> frames(codes.size() / frame_len);
  for (std::size_t f = 0; f < frames.size(); ++f) {
    frames[f].codes.assign(codes.begin() + static_cast<std::ptrdiff_t>(f * frame_len),
                           codes.begin() + static_cast<std::ptrdiff_t>((f + 1) * frame_len));
  }
  return frames;
}

}  // namespace prqkd
