#include "cloakopt/app/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace cloakopt::app {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  double x = 0.0;
  const char* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, x);
  if (ec != std::errc() || ptr != end || !std::isfinite(x)) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
  return x;
}

long long to_integer(const std::string& key, const std::string& v) {
  long long x = 0;
  const char* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, x);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  }
  return x;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

// Either "a, b, c" or "log:lo:hi:count".
std::vector<double> to_list(const std::string& key, const std::string& v) {
  if (v.rfind("log:", 0) == 0) {
    const auto parts = split(v.substr(4), ':');
    if (parts.size() != 3) throw ConfigError(key + ": expected log:lo:hi:count");
    const double lo = to_double(key, parts[0]);
    const double hi = to_double(key, parts[1]);
    const long long n = to_integer(key, parts[2]);
    if (!(lo > 0.0 && hi > 0.0) || n < 1) throw ConfigError(key + ": bad log range");
    return logspace(lo, hi, static_cast<int>(n));
  }
  std::vector<double> out;
  for (const auto& item : split(v, ',')) out.push_back(to_double(key, item));
  if (out.empty()) throw ConfigError(key + ": empty list");
  return out;
}

template <std::size_t N>
std::array<double, N> to_tuple(const std::string& key, const std::string& v) {
  const auto parts = split(v, ',');
  if (parts.size() != N) {
    throw ConfigError(key + ": expected " + std::to_string(N) + " comma-separated values");
  }
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) out[i] = to_double(key, parts[i]);
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

const std::vector<std::pair<std::string, Setter>>& setters() {
  using optimizer::Symmetry;
  using optimizer::SweepMode;
  using optimizer::Target;
  static const std::vector<std::pair<std::string, Setter>> table = {
      {"delta_eps", [](RunConfig& c, auto& k, auto& v) { c.design.delta_eps = to_double(k, v); }},
      {"delta_eps_min",
       [](RunConfig& c, auto& k, auto& v) { c.design.delta_eps_min = to_double(k, v); }},
      {"eps_max", [](RunConfig& c, auto& k, auto& v) { c.design.eps_max = to_double(k, v); }},
      {"tol_accept", [](RunConfig& c, auto& k, auto& v) { c.design.tol_accept = to_double(k, v); }},
      {"eta_converge",
       [](RunConfig& c, auto& k, auto& v) { c.design.eta_converge = to_double(k, v); }},
      {"max_iterations",
       [](RunConfig& c, auto& k, auto& v) {
         c.design.max_iterations = static_cast<int>(to_integer(k, v));
       }},
      {"sweep_mode",
       [](RunConfig& c, auto& k, auto& v) {
         if (v == "sequential") c.design.sweep_mode = SweepMode::sequential;
         else if (v == "frozen-reference") c.design.sweep_mode = SweepMode::frozen_reference;
         else throw ConfigError(k + ": expected sequential or frozen-reference");
       }},
      {"bidirectional",
       [](RunConfig& c, auto& k, auto& v) { c.design.bidirectional = to_bool(k, v); }},
      {"exclusion_radius",
       [](RunConfig& c, auto& k, auto& v) { c.design.exclusion_radius = to_double(k, v); }},
      {"symmetry",
       [](RunConfig& c, auto& k, auto& v) {
         if (v == "none") c.design.symmetry = Symmetry::none;
         else if (v == "z-axis-rotation-4fold") c.design.symmetry = Symmetry::z_rotation_4fold;
         else if (v == "mirror-z") c.design.symmetry = Symmetry::mirror_z;
         else throw ConfigError(k + ": expected none, z-axis-rotation-4fold or mirror-z");
       }},
      {"target",
       [](RunConfig& c, auto& k, auto& v) {
         if (v == "concurrence") c.design.target = Target::concurrence;
         else if (v == "negativity") c.design.target = Target::negativity;
         else throw ConfigError(k + ": expected concurrence or negativity");
       }},
      {"pump_ratio", [](RunConfig& c, auto& k, auto& v) { c.design.pump_ratio = to_double(k, v); }},
      {"grid_dims",
       [](RunConfig& c, auto& k, auto& v) {
         const auto parts = split(v, ',');
         if (parts.size() != 3) throw ConfigError(k + ": expected nx, ny, nz");
         for (int i = 0; i < 3; ++i) c.grid_dims[i] = static_cast<int>(to_integer(k, parts[i]));
       }},
      {"grid_spacing", [](RunConfig& c, auto& k, auto& v) { c.grid_spacing = to_double(k, v); }},
      {"grid_origin",
       [](RunConfig& c, auto& k, auto& v) {
         const auto t = to_tuple<3>(k, v);
         c.grid_origin = em::Position(t[0], t[1], t[2]);
       }},
      {"d12", [](RunConfig& c, auto& k, auto& v) { c.d12 = to_double(k, v); }},
      {"sweep_d12", [](RunConfig& c, auto& k, auto& v) { c.sweep_d12 = to_list(k, v); }},
      {"sweep_pump", [](RunConfig& c, auto& k, auto& v) { c.sweep_pump = to_list(k, v); }},
      {"freespace_d12", [](RunConfig& c, auto& k, auto& v) { c.freespace_d12 = to_list(k, v); }},
      {"freespace_pump", [](RunConfig& c, auto& k, auto& v) { c.freespace_pump = to_list(k, v); }},
      {"solver_method",
       [](RunConfig& c, auto& k, auto& v) {
         if (v == "iterative") c.solver.method = vie::SolveMethod::iterative;
         else if (v == "dense") c.solver.method = vie::SolveMethod::dense;
         else throw ConfigError(k + ": expected iterative or dense");
       }},
      {"solver_tolerance",
       [](RunConfig& c, auto& k, auto& v) { c.solver.tolerance = to_double(k, v); }},
      {"solver_max_iterations",
       [](RunConfig& c, auto& k, auto& v) {
         c.solver.max_iterations = static_cast<int>(to_integer(k, v));
       }},
      {"out_dir", [](RunConfig& c, auto&, auto& v) { c.out_dir = v; }},
      {"threads",
       [](RunConfig& c, auto& k, auto& v) { c.threads = static_cast<int>(to_integer(k, v)); }},
      {"seed",
       [](RunConfig& c, auto& k, auto& v) {
         std::uint64_t x = 0;
         const char* end = v.data() + v.size();
         auto [ptr, ec] = std::from_chars(v.data(), end, x);
         if (ec != std::errc() || ptr != end) throw ConfigError(k + ": expected an unsigned integer");
         c.seed = x;
       }},
  };
  return table;
}

}  // namespace

std::vector<double> logspace(double lo, double hi, int count) {
  std::vector<double> out(count);
  if (count == 1) {
    out[0] = lo;
    return out;
  }
  const double a = std::log(lo), b = std::log(hi);
  for (int i = 0; i < count; ++i) out[i] = std::exp(a + (b - a) * i / (count - 1));
  out.front() = lo;
  out.back() = hi;
  return out;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, _] : setters()) k.push_back(name);
    return k;
  }();
  return keys;
}

vie::PermittivityGrid RunConfig::make_grid() const {
  auto g = vie::PermittivityGrid::centered(grid_dims, grid_spacing, design.eps_max);
  if (grid_origin) g.origin = *grid_origin;
  return g;
}

optimizer::Emitters RunConfig::make_emitters(double separation) const {
  em::Position center = em::Position::Zero();
  if (grid_origin) {
    center = *grid_origin + 0.5 * grid_spacing *
                                em::Position(grid_dims[0], grid_dims[1], grid_dims[2]);
  }
  return optimizer::Emitters::on_z_axis(separation, center);
}

void RunConfig::validate() const {
  try {
    design.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  for (int d : grid_dims) {
    if (d < 1) throw ConfigError("grid_dims must be positive");
  }
  if (!(grid_spacing > 0.0)) throw ConfigError("grid_spacing must be positive");
  if (!(d12 > 0.0)) throw ConfigError("d12 must be positive");
  auto positive = [](const std::vector<double>& v, const char* name) {
    if (v.empty()) throw ConfigError(std::string(name) + " must not be empty");
    for (double x : v) {
      if (!(x > 0.0)) throw ConfigError(std::string(name) + " entries must be positive");
    }
  };
  positive(sweep_d12, "sweep_d12");
  positive(sweep_pump, "sweep_pump");
  positive(freespace_d12, "freespace_d12");
  positive(freespace_pump, "freespace_pump");
  if (!(solver.tolerance > 0.0)) throw ConfigError("solver_tolerance must be positive");
  if (solver.max_iterations < 1) throw ConfigError("solver_max_iterations must be positive");
  if (threads < 0) throw ConfigError("threads must be non-negative");
  if (design.symmetry == optimizer::Symmetry::z_rotation_4fold && grid_dims[0] != grid_dims[1]) {
    throw ConfigError("z-axis-rotation-4fold symmetry needs equal nx and ny");
  }
}

RunConfig parse_config_text(const std::string& text) {
  RunConfig c;
  c.freespace_d12 = logspace(0.05, 5.0, 100);
  std::map<std::string, Setter> table(setters().begin(), setters().end());
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = table.find(key);
    if (it == table.end()) {
      throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    if (value.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty value");
    it->second(c, key, value);
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

}  // namespace cloakopt::app
