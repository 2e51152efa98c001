#include "prqkd/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>

#include <CLI11.hpp>

#include "prqkd/config.hpp"
#include "prqkd/experiments.hpp"
#include "prqkd/protocol.hpp"
#include "prqkd/randomizer.hpp"

namespace prqkd {

namespace {

// Output goes to --output when set, otherwise to the command's stdout.
class Sink {
 public:
  Sink(const RunConfig& cfg, std::ostream& fallback) : fallback_(fallback) {
    if (cfg.output) {
      path_ = *cfg.output;
      file_ = std::make_unique<std::ofstream>(path_);
      if (!*file_) throw IoError("cannot open " + path_.string() + " for writing");
    }
  }

  std::ostream& stream() { return file_ ? *file_ : fallback_; }
  bool to_file() const { return file_ != nullptr; }

  void close() {
    if (!file_) return;
    file_->flush();
    if (!*file_) throw IoError("write failed: " + path_.string());
    file_.reset();
  }

 private:
  std::ostream& fallback_;
  std::filesystem::path path_;
  std::unique_ptr<std::ofstream> file_;
};

void print_estimate(std::ostream& out, const QberEstimate& q) {
  out << "qber=" << format_double(q.qber) << " std_error=" << format_double(q.std_error)
      << " n_sifted=" << q.n_sifted << " n_errors=" << q.n_errors << '\n';
}

int cmd_session(const RunConfig& cfg, std::ostream& out) {
  if (cfg.output) {
    const SessionResult result = run_session(cfg.session);
    write_records_csv(*cfg.output, result.records);
    print_estimate(out, estimate_qber(sift(result.records)));
  } else {
    print_estimate(out, session_qber(cfg.session));
  }
  return kExitOk;
}

int cmd_scan(const RunConfig& cfg, std::ostream& out) {
  std::vector<double> delays = scan_delays(cfg.scan_range_ns, cfg.scan_step_ns);
  for (double& d : delays) d += cfg.session.timing.delay_ns;
  const DelayScanResult result = delay_scan(cfg.session, delays, cfg.threads);
  Sink sink(cfg, out);
  export_csv(result, sink.stream());
  sink.close();
  return kExitOk;
}

int cmd_verify_uniformity(const RunConfig& cfg, std::ostream& out) {
  std::vector<double> phases;
  if (cfg.pattern_file) {
    for (const auto& frame : read_patterns(*cfg.pattern_file, cfg.session.frame_len)) {
      for (auto c : frame.codes) phases.push_back(code_to_phase(c));
    }
  } else {
    Rng rng = make_stream(cfg.session.seed, Stream::Pattern);
    phases.reserve(cfg.audit_codes);
    while (phases.size() < cfg.audit_codes) {
      const PhasePattern frame = generate_pattern(rng, cfg.session.frame_len);
      for (auto c : frame.codes) {
        if (phases.size() == cfg.audit_codes) break;
        phases.push_back(code_to_phase(c));
      }
    }
  }

  const ChiSquareResult r = uniformity_chisq(phases, cfg.audit_bins);
  out << "statistic=" << format_double(r.statistic) << " threshold_p99=" << format_double(r.threshold_p99)
      << " bins=" << r.n_bins << " samples=" << r.n_samples << ' ' << (r.rejected() ? "REJECT" : "PASS") << '\n';
  return r.rejected() ? kExitRejected : kExitOk;
}

int cmd_density(const RunConfig& cfg, std::ostream& out) {
  const FockDensityMatrix rho = fock_density_matrix(cfg.session.mean_photon, cfg.phase_dist, cfg.n_max);
  Sink sink(cfg, out);
  export_density_csv(rho, sink.stream());
  const bool to_file = sink.to_file();
  sink.close();
  if (to_file) {
    out << "offdiag_norm=" << format_double(offdiag_norm(rho))
        << " truncation_deficit=" << format_double(rho.truncation_deficit()) << '\n';
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Plug-and-play phase-coding QKD with active phase randomization"};
  app.name("prqkd");
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  app.add_option("--config", config_path, "key = value configuration file");

  std::map<std::string, std::string> flag_values;
  std::vector<std::pair<std::string, CLI::Option*>> flag_options;
  for (const auto& info : setting_keys()) {
    flag_options.emplace_back(info.key, app.add_option(flag_name(info.key), flag_values[info.key], info.help));
  }

  auto* session = app.add_subcommand("session", "run one QKD session and print the QBER estimate");
  auto* scan = app.add_subcommand("scan", "sweep the generator delay and write QBER per delay as CSV");
  auto* uniformity = app.add_subcommand("verify-uniformity", "chi-square audit of the phase pattern codes");
  auto* density = app.add_subcommand("density", "Fock-basis density matrix of the emitted state as CSV");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitValidation;
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) load_config_file(cfg, config_path);
    for (const auto& [key, opt] : flag_options) {
      if (opt->count() > 0) apply_setting(cfg, key, flag_values[key]);
    }
    cfg.validate();

    if (session->parsed()) return cmd_session(cfg, out);
    if (scan->parsed()) return cmd_scan(cfg, out);
    if (uniformity->parsed()) return cmd_verify_uniformity(cfg, out);
    if (density->parsed()) return cmd_density(cfg, out);
    err << app.help();
    return kExitValidation;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
}

}  // namespace prqkd
