#include "prqkd/experiments.hpp"

#include <atomic>
#include <charconv>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <boost/math/distributions/chi_squared.hpp>

namespace prqkd {

std::string format_double(double v) {
  if (v == 0.0) v = 0.0;  // drop the sign of -0
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::vector<double> scan_delays(double range_ns, double step_ns) {
  if (!(range_ns >= 0.0) || !std::isfinite(range_ns)) throw ValidationError("scan range must be >= 0");
  if (!(step_ns > 0.0) || !std::isfinite(step_ns)) throw ValidationError("scan step must be > 0");
  // Integer stepping keeps every point on the exact grid.
  const auto half = static_cast<long>(std::floor(range_ns / step_ns + 1e-9));
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(2 * half + 1));
  for (long i = -half; i <= half; ++i) out.push_back(static_cast<double>(i) * step_ns);
  return out;
}

std::uint64_t scan_point_seed(std::uint64_t base_seed, std::size_t delay_index) {
  return mix_seed(base_seed, 0x5CA11ULL + static_cast<std::uint64_t>(delay_index));
}

namespace {

[[noreturn]] void rethrow_annotated(const std::exception_ptr& ep, double delay_ns) {
  const std::string where = "delay_ns=" + format_double(delay_ns) + ": ";
  try {
    std::rethrow_exception(ep);
  } catch (const InsufficientStatistics& e) {
    throw InsufficientStatistics(where + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(where + e.what());
  } catch (const IoError& e) {
    throw IoError(where + e.what());
  } catch (const std::exception& e) {
    throw std::runtime_error(where + e.what());
  }
}

}  // namespace

DelayScanResult delay_scan(const SessionConfig& base, std::span<const double> delays, unsigned threads) {
  if (delays.empty()) throw ValidationError("delay scan needs at least one delay");
  for (std::size_t i = 1; i < delays.size(); ++i) {
    if (!(delays[i] > delays[i - 1])) throw ValidationError("scan delays must be strictly increasing");
  }
  base.validate();

  DelayScanResult result;
  result.points.resize(delays.size());
  std::vector<std::exception_ptr> errors(delays.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < delays.size(); i = next++) {
      try {
        SessionConfig cfg = base;
        cfg.timing.delay_ns = delays[i];
        cfg.seed = scan_point_seed(base.seed, i);
        result.points[i] = {delays[i], session_qber(cfg)};
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };

  const unsigned n_workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(delays.size())));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }

  for (std::size_t i = 0; i < delays.size(); ++i) {
    if (errors[i]) rethrow_annotated(errors[i], delays[i]);
  }
  return result;
}

Alignment classify_delay(const SessionConfig& cfg, double delay_ns) {
  const double period = cfg.timing.period_ns;
  const double t_ref = cfg.resolved_arrival_offset_ns() + period;
  const double t_sig = t_ref + cfg.optics.mzi_delay_ns;
  const double rt = cfg.timing.roundtrip_ns;
  auto slot = [&](double t) { return std::floor((t - delay_ns) / period); };

  const double ref_fwd = slot(t_ref), ref_ret = slot(t_ref + rt);
  const double sig_fwd = slot(t_sig), sig_ret = slot(t_sig + rt);
  if (ref_fwd != ref_ret || sig_fwd != sig_ret) return Alignment::Waist;
  return ref_fwd == sig_fwd ? Alignment::Aligned : Alignment::Misaligned;
}

void export_csv(const DelayScanResult& result, std::ostream& out) {
  out << "delay_ns,qber,std_error,n_sifted,n_errors\n";
  for (const auto& p : result.points) {
    out << format_double(p.delay_ns) << ',' << format_double(p.estimate.qber) << ','
        << format_double(p.estimate.std_error) << ',' << p.estimate.n_sifted << ',' << p.estimate.n_errors << '\n';
  }
}

void export_csv(const DelayScanResult& result, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  export_csv(result, out);
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

DelayScanResult read_scan_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "delay_ns,qber,std_error,n_sifted,n_errors") {
    throw ValidationError(path.string() + ": missing scan CSV header");
  }
  DelayScanResult result;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string field[5];
    for (auto& f : field) std::getline(row, f, ',');
    ScanPoint p;
    try {
      p.delay_ns = std::stod(field[0]);
      p.estimate.qber = std::stod(field[1]);
      p.estimate.std_error = std::stod(field[2]);
      p.estimate.n_sifted = std::stoull(field[3]);
      p.estimate.n_errors = std::stoull(field[4]);
    } catch (const std::exception&) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": malformed row");
    }
    result.points.push_back(p);
  }
  return result;
}

double chi_square_quantile(double probability, double degrees_of_freedom) {
  if (!(probability > 0.0 && probability < 1.0)) throw ValidationError("quantile probability must be in (0, 1)");
  if (!(degrees_of_freedom > 0.0)) throw ValidationError("degrees of freedom must be > 0");
  return boost::math::quantile(boost::math::chi_squared_distribution<double>(degrees_of_freedom), probability);
}

ChiSquareResult uniformity_chisq(std::span<const double> phases, std::size_t n_bins) {
  if (n_bins < 2) throw ValidationError("chi-square audit needs at least 2 bins");
  if (phases.size() < 10 * n_bins) {
    throw ValidationError("chi-square audit undersampled: " + std::to_string(phases.size()) + " samples for " +
                          std::to_string(n_bins) + " bins (need >= 10 per bin)");
  }

  constexpr double two_pi = 2.0 * std::numbers::pi;
  std::vector<std::size_t> counts(n_bins, 0);
  for (double phi : phases) {
    if (!std::isfinite(phi)) throw ValidationError("non-finite phase in uniformity audit");
    double wrapped = std::fmod(phi, two_pi);
    if (wrapped < 0.0) wrapped += two_pi;
    // Bins are half-open; a phase within rounding of an edge belongs above it.
    double pos = wrapped / two_pi * static_cast<double>(n_bins);
    const double edge = std::round(pos);
    if (std::abs(pos - edge) <= 1e-9 * std::max(1.0, pos)) pos = edge;
    const auto bin = static_cast<std::size_t>(pos) % n_bins;
    counts[bin]++;
  }

  const double expected = static_cast<double>(phases.size()) / static_cast<double>(n_bins);
  ChiSquareResult r;
  for (auto c : counts) {
    const double d = static_cast<double>(c) - expected;
    r.statistic += d * d / expected;
  }
  r.n_bins = n_bins;
  r.n_samples = phases.size();
  r.threshold_p99 = chi_square_quantile(0.99, static_cast<double>(n_bins - 1));
  return r;
}

void export_density_csv(const FockDensityMatrix& rho, std::ostream& out) {
  out << "n,m,re,im\n";
  for (Eigen::Index n = 0; n < rho.entries.rows(); ++n) {
    for (Eigen::Index m = 0; m < rho.entries.cols(); ++m) {
      out << n << ',' << m << ',' << format_double(rho.entries(n, m).real()) << ','
          << format_double(rho.entries(n, m).imag()) << '\n';
    }
  }
}

void export_density_csv(const FockDensityMatrix& rho, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  export_density_csv(rho, out);
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace prqkd
