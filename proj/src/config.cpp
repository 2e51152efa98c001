#include "prqkd/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>

namespace prqkd {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
  throw ValidationError("invalid value '" + std::string(value) + "' for " + std::string(key) + ": expected " +
                        std::string(expected));
}

double parse_double(std::string_view key, std::string_view value) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size() || !std::isfinite(v)) {
    bad_value(key, value, "a finite number");
  }
  return v;
}

template <typename Int>
Int parse_integer(std::string_view key, std::string_view value) {
  Int v = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) bad_value(key, value, "a nonnegative integer");
  return v;
}

bool parse_on_off(std::string_view key, std::string_view value) {
  if (value == "on" || value == "true" || value == "1") return true;
  if (value == "off" || value == "false" || value == "0") return false;
  bad_value(key, value, "on|off");
}

std::optional<PolarizedAmplitude> parse_polarization(std::string_view key, std::string_view value) {
  const double r = std::sqrt(0.5);
  PolarizedAmplitude p;
  if (value == "random") return std::nullopt;
  if (value == "h") return PolarizedAmplitude(1.0, 0.0);
  if (value == "v") return PolarizedAmplitude(0.0, 1.0);
  if (value == "d") return PolarizedAmplitude(r, r);
  if (value == "a") return PolarizedAmplitude(r, -r);
  if (value == "r") return PolarizedAmplitude(r, std::complex<double>(0.0, -r));
  if (value == "l") return PolarizedAmplitude(r, std::complex<double>(0.0, r));

  // h_re,h_im,v_re,v_im
  double parts[4];
  std::size_t start = 0;
  for (int i = 0; i < 4; ++i) {
    const auto comma = value.find(',', start);
    if ((i < 3) != (comma != std::string_view::npos)) {
      bad_value(key, value, "random|h|v|d|a|r|l or h_re,h_im,v_re,v_im");
    }
    parts[i] = parse_double(key, trim(value.substr(start, comma == std::string_view::npos ? comma : comma - start)));
    start = comma + 1;
  }
  p << std::complex<double>(parts[0], parts[1]), std::complex<double>(parts[2], parts[3]);
  return p;
}

std::string format_polarization(const std::optional<PolarizedAmplitude>& p) {
  if (!p) return "random";
  return format_double((*p)(kH).real()) + "," + format_double((*p)(kH).imag()) + "," +
         format_double((*p)(kV).real()) + "," + format_double((*p)(kV).imag());
}

PhaseDistribution parse_phase_dist(std::string_view key, std::string_view value) {
  if (value == "uniform") return PhaseDistribution::continuous_uniform();
  if (value.starts_with("discrete:")) {
    const auto n = parse_integer<std::size_t>(key, value.substr(9));
    if (n == 0) bad_value(key, value, "discrete:N with N >= 1");
    return PhaseDistribution::discrete(n);
  }
  if (value.starts_with("fixed:")) return PhaseDistribution::fixed(parse_double(key, value.substr(6)));
  bad_value(key, value, "uniform|discrete:N|fixed:PHI");
}

std::string format_phase_dist(const PhaseDistribution& d) {
  switch (d.kind) {
    case PhaseDistribution::Kind::ContinuousUniform: return "uniform";
    case PhaseDistribution::Kind::Discrete: return "discrete:" + std::to_string(d.n_points);
    case PhaseDistribution::Kind::Fixed: return "fixed:" + format_double(d.phase);
  }
  return {};
}

struct Setting {
  SettingInfo info;
  std::function<void(RunConfig&, std::string_view key, std::string_view value)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define PRQKD_DOUBLE(name, field, help)                                                                    \
  Setting {                                                                                                \
    {name, help}, [](RunConfig& c, std::string_view k, std::string_view v) { c.field = parse_double(k, v); }, \
        [](const RunConfig& c) { return format_double(c.field); }                                          \
  }

const std::vector<Setting>& settings() {
  static const std::vector<Setting> table = {
      {{"seed", "base seed for every random stream"},
       [](RunConfig& c, std::string_view k, std::string_view v) { c.session.seed = parse_integer<std::uint64_t>(k, v); },
       [](const RunConfig& c) { return std::to_string(c.session.seed); }},
      {{"bits", "bits simulated per session"},
       [](RunConfig& c, std::string_view k, std::string_view v) { c.session.n_bits = parse_integer<std::size_t>(k, v); },
       [](const RunConfig& c) { return std::to_string(c.session.n_bits); }},
      PRQKD_DOUBLE("mean_photon", session.mean_photon, "mean photon number leaving Alice"),
      {{"mean_photon_mode", "per_bit (reference + signal) or per_signal"},
       [](RunConfig& c, std::string_view k, std::string_view v) {
         if (v == "per_bit") c.session.mean_photon_mode = MeanPhotonMode::PerBit;
         else if (v == "per_signal") c.session.mean_photon_mode = MeanPhotonMode::PerSignalPulse;
         else bad_value(k, v, "per_bit|per_signal");
       },
       [](const RunConfig& c) {
         return std::string(c.session.mean_photon_mode == MeanPhotonMode::PerBit ? "per_bit" : "per_signal");
       }},
      PRQKD_DOUBLE("delay_ns", session.timing.delay_ns, "functional generator hold offset (scan center for `scan`)"),
      PRQKD_DOUBLE("period_ns", session.timing.period_ns, "pulse period"),
      PRQKD_DOUBLE("roundtrip_ns", session.timing.roundtrip_ns, "modulator to mirror and back"),
      {{"frame_len", "pulses per frame"},
       [](RunConfig& c, std::string_view k, std::string_view v) { c.session.frame_len = parse_integer<std::size_t>(k, v); },
       [](const RunConfig& c) { return std::to_string(c.session.frame_len); }},
      {{"arrival_offset_ns", "reference arrival within its period, or `auto`"},
       [](RunConfig& c, std::string_view k, std::string_view v) {
         if (v == "auto") c.session.arrival_offset_ns.reset();
         else c.session.arrival_offset_ns = parse_double(k, v);
       },
       [](const RunConfig& c) {
         return c.session.arrival_offset_ns ? format_double(*c.session.arrival_offset_ns) : std::string("auto");
       }},
      PRQKD_DOUBLE("mzi_delay_ns", session.optics.mzi_delay_ns, "MZI arm time difference"),
      PRQKD_DOUBLE("insertion_loss_db", session.optics.insertion_loss_db, "long-arm modulator insertion loss"),
      PRQKD_DOUBLE("fiber_km", session.optics.fiber_km, "channel length"),
      PRQKD_DOUBLE("fiber_loss_db_per_km", session.optics.fiber_loss_db_per_km, "channel attenuation"),
      PRQKD_DOUBLE("source_mean_photon", session.optics.source_mean_photon, "Bob's laser pulse mean photon number"),
      PRQKD_DOUBLE("coding_phase_jitter_rad", session.optics.coding_phase_jitter_rad,
                   "Gaussian sigma on Alice's coding phase"),
      PRQKD_DOUBLE("efficiency", session.optics.detector.efficiency, "detector efficiency"),
      PRQKD_DOUBLE("dark_prob", session.optics.detector.dark_prob, "dark count probability per gate"),
      {{"double_click", "discard or random"},
       [](RunConfig& c, std::string_view k, std::string_view v) {
         if (v == "discard") c.session.double_click = DoubleClickPolicy::Discard;
         else if (v == "random") c.session.double_click = DoubleClickPolicy::RandomAssign;
         else bad_value(k, v, "discard|random");
       },
       [](const RunConfig& c) {
         return std::string(c.session.double_click == DoubleClickPolicy::Discard ? "discard" : "random");
       }},
      {{"randomizer", "on|off"},
       [](RunConfig& c, std::string_view k, std::string_view v) { c.session.randomizer_enabled = parse_on_off(k, v); },
       [](const RunConfig& c) { return std::string(c.session.randomizer_enabled ? "on" : "off"); }},
      {{"polarization", "random|h|v|d|a|r|l or h_re,h_im,v_re,v_im"},
       [](RunConfig& c, std::string_view k, std::string_view v) { c.session.polarization = parse_polarization(k, v); },
       [](const RunConfig& c) { return format_polarization(c.session.polarization); }},
      PRQKD_DOUBLE("scan_range_ns", scan_range_ns, "scan half-width"),
      PRQKD_DOUBLE("scan_step_ns", scan_step_ns, "scan step"),
      {{"threads", "worker threads for scans"},
       [](RunConfig& c, std::string_view k, std::string_view v) { c.threads = parse_integer<unsigned>(k, v); },
       [](const RunConfig& c) { return std::to_string(c.threads); }},
      {{"output", "output file (stdout when unset)"},
       [](RunConfig& c, std::string_view, std::string_view v) { c.output = std::filesystem::path(std::string(v)); },
       [](const RunConfig& c) { return c.output ? c.output->string() : std::string(); }},
      {{"codes", "codes drawn for verify-uniformity"},
       [](RunConfig& c, std::string_view k, std::string_view v) { c.audit_codes = parse_integer<std::size_t>(k, v); },
       [](const RunConfig& c) { return std::to_string(c.audit_codes); }},
      {{"bins", "chi-square bins for verify-uniformity"},
       [](RunConfig& c, std::string_view k, std::string_view v) { c.audit_bins = parse_integer<std::size_t>(k, v); },
       [](const RunConfig& c) { return std::to_string(c.audit_bins); }},
      {{"pattern", "pattern file to audit instead of the generator"},
       [](RunConfig& c, std::string_view, std::string_view v) { c.pattern_file = std::filesystem::path(std::string(v)); },
       [](const RunConfig& c) { return c.pattern_file ? c.pattern_file->string() : std::string(); }},
      {{"phase_dist", "uniform|discrete:N|fixed:PHI"},
       [](RunConfig& c, std::string_view k, std::string_view v) { c.phase_dist = parse_phase_dist(k, v); },
       [](const RunConfig& c) { return format_phase_dist(c.phase_dist); }},
      {{"n_max", "Fock-space truncation"},
       [](RunConfig& c, std::string_view k, std::string_view v) { c.n_max = parse_integer<int>(k, v); },
       [](const RunConfig& c) { return std::to_string(c.n_max); }},
  };
  return table;
}

#undef PRQKD_DOUBLE

}  // namespace

void RunConfig::validate() const {
  session.validate();
  if (threads == 0) throw ValidationError("threads must be >= 1");
  if (!(scan_range_ns >= 0.0)) throw ValidationError("scan_range_ns must be >= 0");
  if (!(scan_step_ns > 0.0)) throw ValidationError("scan_step_ns must be > 0");
  if (audit_codes == 0) throw ValidationError("codes must be > 0");
  if (audit_bins < 2) throw ValidationError("bins must be >= 2");
  if (n_max < 1) throw ValidationError("n_max must be >= 1");
}

const std::vector<SettingInfo>& setting_keys() {
  static const std::vector<SettingInfo> keys = [] {
    std::vector<SettingInfo> out;
    for (const auto& s : settings()) out.push_back(s.info);
    return out;
  }();
  return keys;
}

void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value) {
  for (const auto& s : settings()) {
    if (s.info.key == key) {
      s.set(cfg, key, trim(value));
      return;
    }
  }
  throw ValidationError("unknown setting '" + std::string(key) + "'");
}

void load_config_file(RunConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": expected `key = value`");
    }
    try {
      apply_setting(cfg, trim(body.substr(0, eq)), trim(body.substr(eq + 1)));
    } catch (const ValidationError& e) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (in.bad()) throw IoError("read failed: " + path.string());
}

std::vector<std::pair<std::string, std::string>> describe(const RunConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& s : settings()) out.emplace_back(s.info.key, s.get(cfg));
  return out;
}

std::string flag_name(std::string_view key) {
  std::string out = "--";
  for (char ch : key) out.push_back(ch == '_' ? '-' : ch);
  return out;
}

}  // namespace prqkd
