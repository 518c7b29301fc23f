#pragma once

// Run configuration: an INI file with fixed sections. Parsing rejects unknown
// keys; to_text writes the canonical form (fixed section and key order,
// shortest round-trip numbers), so parse(to_text(c)) reproduces c and its text.

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <istream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "wgmspin/constants.hpp"
#include "wgmspin/format.hpp"
#include "wgmspin/specfun.hpp"
#include "wgmspin/wgm.hpp"

namespace wgmspin::cli {

/// A configuration problem tied to one field, e.g. "sphere.R".
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::invalid_argument(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct RunConfig {
  struct Sphere {
    double R = 0.0;
    double n = 0.0;
    double rho = default_density;
    std::optional<double> I;
  } sphere;

  struct ModeSearch {
    Polarization polarization = Polarization::TE;
    int l = 0;
    double lambda_min = 0.0;
    double lambda_max = 0.0;
  } mode_search;

  struct Coupling {
    double N = 0.0;
    int m = 0;
    double tilt = 0.0;  ///< rotation of the multiplet about y, rad
    std::optional<double> lambda;
  } coupling;

  struct Simulation {
    std::optional<double> dt;
    std::optional<long> n_steps;
    long sample_every = 1;
    Eigen::Vector3d omega = Eigen::Vector3d::Zero();
    double drift_tolerance = 1e-8;
  } simulation;

  struct Estimate {
    double Q = 1e10;
    std::vector<int> m_values{1, 10, 120};
  } estimate;

  struct Output {
    std::string directory = "out";
    std::vector<std::string> formats{"csv", "json"};

    bool wants(std::string_view f) const {
      for (const auto& x : formats)
        if (x == f) return true;
      return false;
    }
  } output;

  struct Sweep {
    std::string key;
    std::vector<std::string> values;
  };
  std::optional<Sweep> sweep;

  SphereParams sphere_params() const {
    SphereParams p = SphereParams::make(sphere.R, sphere.n, sphere.rho);
    return sphere.I ? p.with_inertia(*sphere.I) : p;
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto piece = trim(s.substr(start, comma == std::string_view::npos ? s.npos : comma - start));
    if (!piece.empty()) out.push_back(piece);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline double parse_double(const std::string& field, std::string_view text) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc{} || res.ptr != t.data() + t.size()) {
    throw ConfigError(field, "expected a number, got '" + t + "'");
  }
  if (!std::isfinite(v)) throw ConfigError(field, "must be finite");
  return v;
}

template <class Int>
inline Int parse_int(const std::string& field, std::string_view text) {
  const std::string t = trim(text);
  Int v = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc{} || res.ptr != t.data() + t.size()) {
    throw ConfigError(field, "expected an integer, got '" + t + "'");
  }
  return v;
}

template <class T>
inline std::string join(const std::vector<T>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ", ";
    if constexpr (std::is_same_v<T, std::string>) {
      out += xs[i];
    } else {
      out += std::to_string(xs[i]);
    }
  }
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

inline const std::vector<std::pair<std::string, Setter>>& setters() {
  static const std::vector<std::pair<std::string, Setter>> table = [] {
    std::vector<std::pair<std::string, Setter>> t;
    auto num = [&t](std::string key, auto member) {
      t.emplace_back(key, [key, member](RunConfig& c, const std::string& v) {
        member(c) = parse_double(key, v);
      });
    };
    num("sphere.R", [](RunConfig& c) -> double& { return c.sphere.R; });
    num("sphere.n", [](RunConfig& c) -> double& { return c.sphere.n; });
    num("sphere.rho", [](RunConfig& c) -> double& { return c.sphere.rho; });
    t.emplace_back("sphere.I", [](RunConfig& c, const std::string& v) {
      c.sphere.I = parse_double("sphere.I", v);
    });
    t.emplace_back("mode_search.polarization", [](RunConfig& c, const std::string& v) {
      try {
        c.mode_search.polarization = parse_polarization(trim(v));
      } catch (const std::exception&) {
        throw ConfigError("mode_search.polarization", "expected TE or TM, got '" + trim(v) + "'");
      }
    });
    t.emplace_back("mode_search.l", [](RunConfig& c, const std::string& v) {
      c.mode_search.l = parse_int<int>("mode_search.l", v);
    });
    num("mode_search.lambda_min", [](RunConfig& c) -> double& { return c.mode_search.lambda_min; });
    num("mode_search.lambda_max", [](RunConfig& c) -> double& { return c.mode_search.lambda_max; });
    num("coupling.N", [](RunConfig& c) -> double& { return c.coupling.N; });
    t.emplace_back("coupling.m", [](RunConfig& c, const std::string& v) {
      c.coupling.m = parse_int<int>("coupling.m", v);
    });
    num("coupling.tilt", [](RunConfig& c) -> double& { return c.coupling.tilt; });
    t.emplace_back("coupling.lambda", [](RunConfig& c, const std::string& v) {
      c.coupling.lambda = parse_double("coupling.lambda", v);
    });
    t.emplace_back("simulation.dt", [](RunConfig& c, const std::string& v) {
      c.simulation.dt = parse_double("simulation.dt", v);
    });
    t.emplace_back("simulation.n_steps", [](RunConfig& c, const std::string& v) {
      c.simulation.n_steps = parse_int<long>("simulation.n_steps", v);
    });
    t.emplace_back("simulation.sample_every", [](RunConfig& c, const std::string& v) {
      c.simulation.sample_every = parse_int<long>("simulation.sample_every", v);
    });
    t.emplace_back("simulation.omega", [](RunConfig& c, const std::string& v) {
      const auto parts = split_list(v);
      if (parts.size() != 3) throw ConfigError("simulation.omega", "expected three components");
      for (int i = 0; i < 3; ++i) c.simulation.omega[i] = parse_double("simulation.omega", parts[i]);
    });
    num("simulation.drift_tolerance",
        [](RunConfig& c) -> double& { return c.simulation.drift_tolerance; });
    num("estimate.Q", [](RunConfig& c) -> double& { return c.estimate.Q; });
    t.emplace_back("estimate.m_values", [](RunConfig& c, const std::string& v) {
      c.estimate.m_values.clear();
      for (const auto& p : split_list(v))
        c.estimate.m_values.push_back(parse_int<int>("estimate.m_values", p));
    });
    t.emplace_back("output.directory", [](RunConfig& c, const std::string& v) {
      c.output.directory = trim(v);
    });
    t.emplace_back("output.formats", [](RunConfig& c, const std::string& v) {
      c.output.formats = split_list(v);
    });
    t.emplace_back("sweep.key", [](RunConfig& c, const std::string& v) {
      if (!c.sweep) c.sweep.emplace();
      c.sweep->key = trim(v);
    });
    t.emplace_back("sweep.values", [](RunConfig& c, const std::string& v) {
      if (!c.sweep) c.sweep.emplace();
      c.sweep->values = split_list(v);
    });
    return t;
  }();
  return table;
}

inline const Setter* find_setter(std::string_view key) {
  for (const auto& [name, fn] : setters())
    if (name == key) return &fn;
  return nullptr;
}

}  // namespace detail

/// Sets one field by its dotted name, as a sweep does.
inline void set_field(RunConfig& c, const std::string& key, const std::string& value) {
  const auto* setter = detail::find_setter(key);
  if (!setter) throw ConfigError(key, "unknown key");
  (*setter)(c, value);
}

/// Field-level checks; throws ConfigError naming the first offending field.
inline void validate(const RunConfig& c) {
  auto require = [](bool ok, const char* field, const char* msg) {
    if (!ok) throw ConfigError(field, msg);
  };
  require(c.sphere.R > 0.0, "sphere.R", "must be positive");
  require(c.sphere.n >= 1.0, "sphere.n", "must be at least 1");
  require(c.sphere.rho > 0.0, "sphere.rho", "must be positive");
  require(!c.sphere.I || *c.sphere.I > 0.0, "sphere.I", "must be positive");
  require(c.mode_search.l >= 1 && c.mode_search.l <= max_bessel_order, "mode_search.l",
          "must be in [1, 500]");
  require(c.mode_search.lambda_min > 0.0, "mode_search.lambda_min", "must be positive");
  require(c.mode_search.lambda_max > c.mode_search.lambda_min, "mode_search.lambda_max",
          "must exceed lambda_min");
  require(c.coupling.N >= 0.0, "coupling.N", "must be non-negative");
  require(std::abs(c.coupling.m) <= c.mode_search.l, "coupling.m", "|m| must not exceed l");
  require(!c.coupling.lambda || *c.coupling.lambda >= 0.0, "coupling.lambda",
          "must be non-negative");
  require(!c.simulation.dt || *c.simulation.dt > 0.0, "simulation.dt", "must be positive");
  require(!c.simulation.n_steps || *c.simulation.n_steps >= 1, "simulation.n_steps",
          "must be at least 1");
  require(c.simulation.sample_every >= 1, "simulation.sample_every", "must be at least 1");
  require(c.simulation.drift_tolerance > 0.0, "simulation.drift_tolerance", "must be positive");
  require(c.estimate.Q > 0.0, "estimate.Q", "must be positive");
  for (int m : c.estimate.m_values) {
    require(m != 0, "estimate.m_values", "m = 0 has no Zeeman shift");
    require(std::abs(m) <= c.mode_search.l, "estimate.m_values", "|m| must not exceed l");
  }
  require(!c.output.directory.empty(), "output.directory", "must not be empty");
  require(!c.output.formats.empty(), "output.formats", "must name csv and/or json");
  for (const auto& f : c.output.formats) {
    require(f == "csv" || f == "json", "output.formats", "formats are csv and json");
  }
  if (c.sweep) {
    require(!c.sweep->key.empty(), "sweep.key", "missing");
    require(!c.sweep->values.empty(), "sweep.values", "missing");
    require(c.sweep->key.rfind("sweep.", 0) != 0 && c.sweep->key.rfind("output.", 0) != 0,
            "sweep.key", "cannot sweep sweep or output settings");
    for (const auto& v : c.sweep->values) {
      RunConfig probe = c;
      probe.sweep.reset();
      set_field(probe, c.sweep->key, v);
      validate(probe);
    }
  }
}

inline RunConfig parse_config(std::istream& in) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("config", e.message() + " at line " + std::to_string(e.line()));
  }
  RunConfig c;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ConfigError(section, "key outside any section");
    }
    for (const auto& [key, value] : body) {
      set_field(c, section + "." + key, value.data());
    }
  }
  for (const auto& [section, key] : {std::pair{"sphere", "R"}, {"sphere", "n"}, {"mode_search", "l"},
                                      {"mode_search", "lambda_min"}, {"mode_search", "lambda_max"}}) {
    const auto body = tree.get_child_optional(section);
    if (!body || !body->get_child_optional(key)) {
      throw ConfigError(std::string(section) + "." + key, "missing");
    }
  }
  validate(c);
  return c;
}

inline RunConfig parse_config(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

/// Canonical text form.
inline std::string to_text(const RunConfig& c) {
  std::ostringstream os;
  auto kv = [&os](const char* key, const std::string& value) { os << key << " = " << value << '\n'; };
  auto num = [](double v) { return format_double(v); };

  os << "[sphere]\n";
  kv("R", num(c.sphere.R));
  kv("n", num(c.sphere.n));
  kv("rho", num(c.sphere.rho));
  if (c.sphere.I) kv("I", num(*c.sphere.I));

  os << "\n[mode_search]\n";
  kv("polarization", std::string(to_string(c.mode_search.polarization)));
  kv("l", std::to_string(c.mode_search.l));
  kv("lambda_min", num(c.mode_search.lambda_min));
  kv("lambda_max", num(c.mode_search.lambda_max));

  os << "\n[coupling]\n";
  kv("N", num(c.coupling.N));
  kv("m", std::to_string(c.coupling.m));
  kv("tilt", num(c.coupling.tilt));
  if (c.coupling.lambda) kv("lambda", num(*c.coupling.lambda));

  os << "\n[simulation]\n";
  if (c.simulation.dt) kv("dt", num(*c.simulation.dt));
  if (c.simulation.n_steps) kv("n_steps", std::to_string(*c.simulation.n_steps));
  kv("sample_every", std::to_string(c.simulation.sample_every));
  kv("omega", num(c.simulation.omega.x()) + ", " + num(c.simulation.omega.y()) + ", " +
                  num(c.simulation.omega.z()));
  kv("drift_tolerance", num(c.simulation.drift_tolerance));

  os << "\n[estimate]\n";
  kv("Q", num(c.estimate.Q));
  kv("m_values", detail::join(c.estimate.m_values));

  os << "\n[output]\n";
  kv("directory", c.output.directory);
  kv("formats", detail::join(c.output.formats));

  if (c.sweep) {
    os << "\n[sweep]\n";
    kv("key", c.sweep->key);
    kv("values", detail::join(c.sweep->values));
  }
  return os.str();
}

}  // namespace wgmspin::cli
