#pragma once

// The four batch commands. Each is a pure function of its configuration: it
// writes files under the output directory, a report to `out` and diagnostics
// to `err`, and returns a process exit code.

#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wgmspin/cli/config.hpp"
#include "wgmspin/constants.hpp"
#include "wgmspin/coupling.hpp"
#include "wgmspin/dynamics.hpp"
#include "wgmspin/format.hpp"
#include "wgmspin/io.hpp"
#include "wgmspin/wgm.hpp"

#ifndef WGMSPIN_VERSION
#define WGMSPIN_VERSION "0.1.0"
#endif

namespace wgmspin::cli {

enum ExitCode : int {
  exit_ok = 0,
  exit_empty = 1,
  exit_invalid = 2,
  exit_numerical = 3,
};

struct CommandOptions {
  std::optional<std::string> out_dir;  ///< overrides output.directory
  bool natural_units = false;          ///< stdout only; files stay SI
  bool verbose = false;
};

struct Streams {
  std::ostream& out;
  std::ostream& err;
};

namespace detail {

namespace fs = std::filesystem;

inline fs::path output_dir(const RunConfig& c, const CommandOptions& o) {
  return fs::path(o.out_dir ? *o.out_dir : c.output.directory);
}

inline fs::path prepare_dir(const fs::path& dir) {
  fs::create_directories(dir);
  return dir;
}

inline void write_file(const fs::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << content;
}

inline std::string dump(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

inline std::string show(double v) { return format_double(v); }

// Rate in rad/s shown as Hz (SI) or 1/m (natural units).
inline std::string show_rate_hz(double hz, bool natural) {
  return natural ? show(natural::rate(2.0 * pi * hz)) + " 1/m" : show(hz) + " Hz";
}

inline std::string show_inertia(double I, bool natural) {
  return natural ? show(natural::inertia(I)) + " m" : show(I) + " kg m^2";
}

struct ModeLookup {
  ResonanceSearch search;
  std::optional<ModeRecord> best;  ///< highest-Q pole
};

inline ModeLookup lookup_mode(const RunConfig& c, Polarization pol, bool tabulate) {
  ResonanceSearchOptions opt;
  opt.tabulate_profile = tabulate;
  ModeLookup out;
  out.search = find_resonance(pol, c.mode_search.l,
                              KWindow::from_wavelengths(c.mode_search.lambda_min,
                                                        c.mode_search.lambda_max),
                              c.sphere_params(), opt);
  for (const auto& m : out.search.modes) {
    if (!out.best || m.Q > out.best->Q) out.best = m;
  }
  return out;
}

inline void report_diagnostics(const ResonanceSearch& s, const CommandOptions& o, std::ostream& err) {
  if (!o.verbose) return;
  for (const auto& d : s.diagnostics) err << "wgmspin: " << d << '\n';
}

/// Lambda from the configuration: the explicit coupling.lambda if present,
/// 0 for a uniform sphere, otherwise from the highest-Q TE pole in the window.
/// Empty when no pole exists.
inline std::optional<CouplingConstants> resolve_coupling(const RunConfig& c, const CommandOptions& o,
                                                        std::ostream& err) {
  const SphereParams p = c.sphere_params();
  if (c.coupling.lambda) {
    return CouplingConstants::manual(*c.coupling.lambda, p.I, c.mode_search.l);
  }
  if (p.n == 1.0) return CouplingConstants::manual(0.0, p.I, c.mode_search.l);
  const ModeLookup m = lookup_mode(c, Polarization::TE, true);
  report_diagnostics(m.search, o, err);
  if (!m.best) return std::nullopt;
  return compute_lambda(*m.best, p);
}

inline Vector3d initial_S(const RunConfig& c) {
  if (c.coupling.N == 0.0) return Vector3d::Zero();
  const int l = c.mode_search.l;
  const auto L = angular_momentum_matrices(l);
  Eigen::VectorXcd alpha = single_mode_amplitudes(l, c.coupling.m, c.coupling.N);
  if (c.coupling.tilt != 0.0) alpha = rotate_amplitudes(alpha, L, Vector3d::UnitY(), c.coupling.tilt);
  return optical_S_from_amplitudes(alpha, L).S;
}

template <class Body>
int guarded(Streams io, Body&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    io.err << "wgmspin: invalid configuration: " << e.what() << '\n';
    return exit_invalid;
  } catch (const QuadratureError& e) {
    io.err << "wgmspin: " << e.what() << '\n';
    return exit_numerical;
  } catch (const NumericalFailure& e) {
    io.err << "wgmspin: " << e.what() << '\n';
    return exit_numerical;
  } catch (const std::invalid_argument& e) {
    io.err << "wgmspin: invalid input: " << e.what() << '\n';
    return exit_invalid;
  } catch (const std::domain_error& e) {
    io.err << "wgmspin: invalid input: " << e.what() << '\n';
    return exit_invalid;
  } catch (const std::exception& e) {
    io.err << "wgmspin: numerical failure: " << e.what() << '\n';
    return exit_numerical;
  }
}

}  // namespace detail

inline int cmd_modes(const RunConfig& c, const CommandOptions& o, Streams io) {
  return detail::guarded(io, [&] {
    validate(c);
    const auto m = detail::lookup_mode(c, c.mode_search.polarization, false);
    detail::report_diagnostics(m.search, o, io.err);
    const auto dir = detail::prepare_dir(detail::output_dir(c, o));
    if (c.output.wants("csv")) {
      std::ostringstream csv;
      write_mode_table_csv(csv, m.search.modes);
      detail::write_file(dir / "modes.csv", csv.str());
    }
    if (c.output.wants("json")) {
      detail::write_file(dir / "modes.json", detail::dump(mode_table_json(m.search.modes)));
    }
    if (m.search.modes.empty()) {
      io.err << "wgmspin: no resonance in window\n";
      return int(exit_empty);
    }
    for (const auto& r : m.search.modes) {
      io.out << to_string(r.polarization) << " l=" << r.l << " k0=" << detail::show(r.k0)
             << " 1/m lambda_vac=" << detail::show(r.vacuum_wavelength())
             << " m kappa_c=" << detail::show(r.kappa_c) << " 1/m Q=" << detail::show(r.Q) << '\n';
    }
    return int(exit_ok);
  });
}

inline int cmd_lambda(const RunConfig& c, const CommandOptions& o, Streams io) {
  return detail::guarded(io, [&] {
    validate(c);
    if (c.mode_search.polarization != Polarization::TE) {
      throw ConfigError("mode_search.polarization", "Lambda is defined for TE modes only");
    }
    const SphereParams p = c.sphere_params();
    std::optional<CouplingConstants> k;
    if (p.n == 1.0) {
      k = CouplingConstants::manual(0.0, p.I, c.mode_search.l);
    } else {
      const auto m = detail::lookup_mode(c, Polarization::TE, true);
      detail::report_diagnostics(m.search, o, io.err);
      if (m.best) k = compute_lambda(*m.best, p);
    }
    if (!k) {
      io.err << "wgmspin: no resonance in window\n";
      return int(exit_empty);
    }
    const auto dir = detail::prepare_dir(detail::output_dir(c, o));
    detail::write_file(dir / "coupling.json", detail::dump(coupling_json(*k)));
    io.out << "lambda = " << detail::show(k->lambda) << '\n';
    io.out << "I = " << detail::show_inertia(k->I, o.natural_units) << '\n';
    io.out << "Q = " << (k->mode ? detail::show(k->mode->Q) : std::string("none")) << '\n';
    return int(exit_ok);
  });
}

inline int cmd_simulate(const RunConfig& c, const CommandOptions& o, Streams io) {
  return detail::guarded(io, [&] {
    validate(c);
    if (!c.simulation.dt) throw ConfigError("simulation.dt", "missing");
    if (!c.simulation.n_steps) throw ConfigError("simulation.n_steps", "missing");
    const auto k = detail::resolve_coupling(c, o, io.err);
    if (!k) {
      io.err << "wgmspin: no resonance in window\n";
      return int(exit_empty);
    }
    SpinState s0;
    s0.omega = c.simulation.omega;
    s0.S = detail::initial_S(c);
    if (o.verbose && *c.simulation.dt > recommended_dt(s0, *k)) {
      io.err << "wgmspin: dt exceeds the recommended " << detail::show(recommended_dt(s0, *k))
             << " s; orientation bookkeeping loses accuracy\n";
    }
    SimulationOptions sim;
    sim.drift_tolerance = c.simulation.drift_tolerance;
    const Trajectory tr =
        simulate(s0, *k, *c.simulation.dt, *c.simulation.n_steps, c.simulation.sample_every, sim);
    const Drift d = drift(tr);
    const std::optional<double> measured = measure_precession_hz(tr);
    // S-dominated closed form Lambda (Lambda - 1) hbar |S| / I.
    const double predicted =
        k->lambda * (k->lambda - 1.0) * hbar * s0.S.norm() / k->I / (2.0 * pi);

    nlohmann::ordered_json summary;
    summary["precession_hz_measured"] =
        measured ? nlohmann::ordered_json(*measured) : nlohmann::ordered_json(nullptr);
    summary["precession_hz_predicted"] = predicted;
    summary["precession_hz_flow"] = predicted_precession_hz(s0, *k);
    summary["drift_abs_S"] = d.abs_S;
    summary["drift_abs_omega"] = d.abs_omega;
    summary["drift_K"] = d.K;
    summary["drift_Hr"] = d.H_r;
    summary["lambda"] = k->lambda;
    summary["I"] = k->I;
    summary["samples"] = tr.size();
    summary["version"] = WGMSPIN_VERSION;

    const auto dir = detail::prepare_dir(detail::output_dir(c, o));
    std::ostringstream csv;
    write_trajectory_csv(csv, tr);
    detail::write_file(dir / "trajectory.csv", csv.str());
    detail::write_file(dir / "summary.json", detail::dump(summary));

    io.out << "lambda = " << detail::show(k->lambda) << '\n';
    io.out << "precession measured = "
           << (measured ? detail::show_rate_hz(*measured, o.natural_units) : std::string("null"))
           << '\n';
    io.out << "precession predicted = " << detail::show_rate_hz(predicted, o.natural_units) << '\n';
    io.out << "drift |S| = " << detail::show(d.abs_S) << ", |omega| = " << detail::show(d.abs_omega)
           << ", K = " << detail::show(d.K) << ", H_r = " << detail::show(d.H_r) << '\n';
    return int(exit_ok);
  });
}

inline int cmd_estimate(const RunConfig& c, const CommandOptions& o, Streams io) {
  return detail::guarded(io, [&] {
    validate(c);
    const SphereParams p = c.sphere_params();
    std::optional<ModeRecord> mode;
    std::optional<CouplingConstants> k;
    if (c.coupling.lambda || p.n == 1.0) {
      k = detail::resolve_coupling(c, o, io.err);
    }
    if (p.n > 1.0) {
      const auto m = detail::lookup_mode(c, Polarization::TE, !k);
      detail::report_diagnostics(m.search, o, io.err);
      mode = m.best;
      if (!k && mode) k = compute_lambda(*mode, p);
    }
    if (!k || (!mode && p.n > 1.0)) {
      io.err << "wgmspin: no resonance in window\n";
      return int(exit_empty);
    }
    const int l = c.mode_search.l;
    const PrecessionEstimate est = precession_rate_estimate(p, c.coupling.N, l, k->lambda);

    nlohmann::ordered_json report;
    report["lambda"] = k->lambda;
    report["N"] = c.coupling.N;
    report["l"] = l;
    report["rho"] = p.rho;
    report["precession_hz_exact"] = est.exact_hz;
    report["precession_hz_simplified"] = est.simplified_hz;
    report["Q"] = c.estimate.Q;
    report["k0"] = mode ? nlohmann::ordered_json(mode->k0) : nlohmann::ordered_json(nullptr);
    auto table = nlohmann::ordered_json::array();

    io.out << "precession estimate (exact) = " << detail::show_rate_hz(est.exact_hz, o.natural_units)
           << '\n';
    io.out << "precession estimate (simplified) = "
           << detail::show_rate_hz(est.simplified_hz, o.natural_units) << '\n';
    io.out << "resolvability threshold at Q = " << detail::show(c.estimate.Q) << ":\n";
    for (int m : c.estimate.m_values) {
      std::optional<double> hz;
      if (mode && k->lambda > 0.0) {
        hz = resolvability_threshold(k->lambda, m, c.estimate.Q, mode->k0) / (2.0 * pi);
      }
      table.push_back({{"m", m},
                       {"threshold_hz",
                        hz ? nlohmann::ordered_json(*hz) : nlohmann::ordered_json(nullptr)}});
      io.out << "  m = " << m << ": "
             << (hz ? detail::show_rate_hz(*hz, o.natural_units) : std::string("undefined")) << '\n';
    }
    report["threshold"] = table;

    const auto dir = detail::prepare_dir(detail::output_dir(c, o));
    detail::write_file(dir / "estimates.json", detail::dump(report));
    return int(exit_ok);
  });
}

using Command = int (*)(const RunConfig&, const CommandOptions&, Streams);

/// Runs a command once, or once per sweep value concurrently. Sweep runs
/// write to <out>/run_NNN and their reports are printed in sweep order.
/// The result is the largest exit code of any run.
inline int run(Command cmd, const RunConfig& c, const CommandOptions& o, Streams io) {
  if (!c.sweep) return cmd(c, o, io);
  try {
    validate(c);
  } catch (const ConfigError& e) {
    io.err << "wgmspin: invalid configuration: " << e.what() << '\n';
    return exit_invalid;
  }
  struct Result {
    int code;
    std::string out, err;
  };
  const auto base = detail::output_dir(c, o);
  std::vector<std::future<Result>> jobs;
  for (std::size_t i = 0; i < c.sweep->values.size(); ++i) {
    RunConfig run_cfg = c;
    run_cfg.sweep.reset();
    set_field(run_cfg, c.sweep->key, c.sweep->values[i]);
    std::ostringstream name;
    name << "run_" << std::setw(3) << std::setfill('0') << i;
    CommandOptions run_opt = o;
    run_opt.out_dir = (base / name.str()).string();
    jobs.push_back(std::async(std::launch::async, [cmd, run_cfg, run_opt] {
      std::ostringstream out, err;
      const int code = cmd(run_cfg, run_opt, Streams{out, err});
      if (code != exit_invalid) {
        detail::prepare_dir(*run_opt.out_dir);
        detail::write_file(std::filesystem::path(*run_opt.out_dir) / "config.cfg", to_text(run_cfg));
      }
      return Result{code, out.str(), err.str()};
    }));
  }
  int worst = exit_ok;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const Result r = jobs[i].get();
    io.out << "[" << c.sweep->key << " = " << c.sweep->values[i] << "]\n" << r.out;
    io.err << r.err;
    worst = std::max(worst, r.code);
  }
  return worst;
}

}  // namespace wgmspin::cli
