#pragma once

// Configuration-driven experiment runner behind the gram-recur CLI: flat
// key=value configs, per-kind pipelines, CSV/JSON/SVG emitters and N x tau
// sweeps.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "json.hpp"

#include "gramrecur/classical.hpp"
#include "gramrecur/gram.hpp"
#include "gramrecur/numerics.hpp"
#include "gramrecur/quantum_maps.hpp"
#include "gramrecur/randmat.hpp"
#include "gramrecur/states.hpp"

namespace gramrecur::experiment {

using nlohmann::json;

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error("config field '" + field + "': " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class IoError : public std::runtime_error {
 public:
  IoError(std::filesystem::path path, const std::string& message)
      : std::runtime_error(message + ": " + path.string()), path_(std::move(path)) {}
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// ---------------------------------------------------------------------------
// Formatting helpers

/// Shortest decimal string that round-trips to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline double parse_double(const std::string& field, const std::string& text) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto res = std::from_chars(first, last, v);
  if (text.empty() || res.ec != std::errc() || res.ptr != last || !std::isfinite(v)) {
    throw ConfigError(field, "expected a real number, got '" + text + "'");
  }
  return v;
}

inline std::int64_t parse_int(const std::string& field, const std::string& text) {
  std::int64_t v = 0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw ConfigError(field, "expected an integer, got '" + text + "'");
  }
  return v;
}

inline std::uint64_t parse_u64(const std::string& field, const std::string& text) {
  std::uint64_t v = 0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw ConfigError(field, "expected an unsigned 64-bit integer, got '" + text + "'");
  }
  return v;
}

// ---------------------------------------------------------------------------
// Configuration

enum class Kind { baker_spectrum, top_spectrum, random_spectrum, mp_curve, classical_returns, symbol_demo, compare };

inline constexpr std::pair<Kind, std::string_view> kKindNames[] = {
    {Kind::baker_spectrum, "baker-spectrum"},
    {Kind::top_spectrum, "top-spectrum"},
    {Kind::random_spectrum, "random-spectrum"},
    {Kind::mp_curve, "mp-curve"},
    {Kind::classical_returns, "classical-returns"},
    {Kind::symbol_demo, "symbol-demo"},
    {Kind::compare, "compare"},
};

inline std::string_view to_string(Kind k) {
  for (const auto& [kind, name] : kKindNames) {
    if (kind == k) return name;
  }
  return "unknown";
}

inline Kind parse_kind(std::string_view name) {
  for (const auto& [kind, n] : kKindNames) {
    if (n == name) return kind;
  }
  throw ConfigError("kind", "unknown experiment kind '" + std::string(name) + "'");
}

enum class Model { baker, top };

/// One experiment cell. Every field has a canonical string form, so the
/// echoed key-value map parses back to an equal config.
struct ExperimentConfig {
  Kind kind = Kind::baker_spectrum;
  std::int64_t N = 500;      // Hilbert-space dimension (baker, random)
  int twice_j = 200;         // kicked top: 2j, N = 2j + 1
  double tau = 1.0;          // K / N
  double k = 1.5;            // kicked-top torsion
  double p = 1.0;            // kicked-top rotation
  std::optional<std::int64_t> site_a;  // default N/4
  std::optional<std::int64_t> site_b;  // default N/2
  double theta = 0.5;
  double phi = 0.3;
  std::int64_t bins = 50;
  std::optional<double> upper;     // default (1 + sqrt(tau))^2 + 0.5
  std::optional<double> zero_tol;  // default 1e-8 K
  double delta = 0.1;
  std::uint64_t seed = 1;
  std::string out = "out";
  std::vector<std::string> formats = {"csv", "json"};
  Model model = Model::baker;  // compare
  TopVariant top_variant = TopVariant::printed;
  int cell_bits = 6;                  // Kac cell [0, 2^-bits)
  std::uint64_t steps = 10'000'000;   // Kac orbit length
  int hit_bits = 10;                  // hitting-time cell depth
  std::int64_t trials = 10'000;       // hitting-time trials
  std::uint64_t lyapunov_steps = 1'000'000;
  std::int64_t curve_points = 450;    // mp-curve samples on [0, upper]
  std::vector<std::string> symbols = {"psi1", "psi2", "psi2", "psi1", "psi3", "psi4", "psi1"};

  bool operator==(const ExperimentConfig&) const = default;

  std::int64_t dim() const {
    if (kind == Kind::top_spectrum || (kind == Kind::compare && model == Model::top)) return twice_j + 1;
    return N;
  }
  std::int64_t steps_k() const { return std::max<std::int64_t>(1, std::llround(tau * static_cast<double>(dim()))); }
  double upper_bound() const {
    if (upper) return *upper;
    const double r = std::sqrt(tau);
    return (1.0 + r) * (1.0 + r) + 0.5;
  }
  double zero_threshold() const { return zero_tol ? *zero_tol : default_zero_tol(static_cast<std::size_t>(steps_k())); }
  bool wants(std::string_view format) const {
    return std::find(formats.begin(), formats.end(), format) != formats.end();
  }
};

using KeyValues = std::map<std::string, std::string>;

inline std::string join(const std::vector<std::string>& xs, char sep) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += sep;
    s += xs[i];
  }
  return s;
}

/// Canonical echo: every field, explicit defaults included.
inline KeyValues to_key_values(const ExperimentConfig& c) {
  KeyValues kv;
  kv["kind"] = std::string(to_string(c.kind));
  kv["N"] = std::to_string(c.N);
  kv["j"] = format_double(0.5 * c.twice_j);
  kv["tau"] = format_double(c.tau);
  kv["k"] = format_double(c.k);
  kv["p"] = format_double(c.p);
  if (c.site_a) kv["site-a"] = std::to_string(*c.site_a);
  if (c.site_b) kv["site-b"] = std::to_string(*c.site_b);
  kv["theta"] = format_double(c.theta);
  kv["phi"] = format_double(c.phi);
  kv["bins"] = std::to_string(c.bins);
  if (c.upper) kv["upper"] = format_double(*c.upper);
  if (c.zero_tol) kv["zero-tol"] = format_double(*c.zero_tol);
  kv["delta"] = format_double(c.delta);
  kv["seed"] = std::to_string(c.seed);
  kv["out"] = c.out;
  kv["formats"] = join(c.formats, ',');
  kv["model"] = c.model == Model::baker ? "baker" : "top";
  kv["top-variant"] = std::string(gramrecur::to_string(c.top_variant));
  kv["cell-bits"] = std::to_string(c.cell_bits);
  kv["steps"] = std::to_string(c.steps);
  kv["hit-bits"] = std::to_string(c.hit_bits);
  kv["trials"] = std::to_string(c.trials);
  kv["lyapunov-steps"] = std::to_string(c.lyapunov_steps);
  kv["curve-points"] = std::to_string(c.curve_points);
  kv["symbols"] = join(c.symbols, ',');
  return kv;
}

/// Applies one key to a config. Grid keys must already be single-valued.
inline void apply_key(ExperimentConfig& c, const std::string& key, const std::string& value) {
  if (key == "kind") {
    c.kind = parse_kind(value);
  } else if (key == "N") {
    c.N = parse_int(key, value);
  } else if (key == "j") {
    const double j = parse_double(key, value);
    const double twice = 2.0 * j;
    if (!(twice >= 1.0) || twice != std::round(twice) || twice > 1e6) {
      throw ConfigError(key, "j must be a positive half-integer, got '" + value + "'");
    }
    c.twice_j = static_cast<int>(twice);
  } else if (key == "tau") {
    c.tau = parse_double(key, value);
  } else if (key == "k") {
    c.k = parse_double(key, value);
  } else if (key == "p") {
    c.p = parse_double(key, value);
  } else if (key == "kp") {
    const auto parts = split(value, ':');
    if (parts.size() != 2) throw ConfigError(key, "expected k:p, got '" + value + "'");
    c.k = parse_double(key, parts[0]);
    c.p = parse_double(key, parts[1]);
  } else if (key == "site-a") {
    c.site_a = parse_int(key, value);
  } else if (key == "site-b") {
    c.site_b = parse_int(key, value);
  } else if (key == "theta") {
    c.theta = parse_double(key, value);
  } else if (key == "phi") {
    c.phi = parse_double(key, value);
  } else if (key == "bins") {
    c.bins = parse_int(key, value);
  } else if (key == "upper") {
    c.upper = parse_double(key, value);
  } else if (key == "zero-tol") {
    c.zero_tol = parse_double(key, value);
  } else if (key == "delta") {
    c.delta = parse_double(key, value);
  } else if (key == "seed") {
    c.seed = parse_u64(key, value);
  } else if (key == "out") {
    if (value.empty()) throw ConfigError(key, "output directory must not be empty");
    c.out = value;
  } else if (key == "formats") {
    c.formats.clear();
    for (auto& f : split(value, ',')) {
      if (f != "csv" && f != "json" && f != "svg") throw ConfigError(key, "unknown format '" + f + "'");
      c.formats.push_back(f);
    }
  } else if (key == "model") {
    if (value == "baker") {
      c.model = Model::baker;
    } else if (value == "top") {
      c.model = Model::top;
    } else {
      throw ConfigError(key, "expected baker or top, got '" + value + "'");
    }
  } else if (key == "top-variant") {
    if (value == "printed") {
      c.top_variant = TopVariant::printed;
    } else if (value == "rotation") {
      c.top_variant = TopVariant::rotation;
    } else {
      throw ConfigError(key, "expected printed or rotation, got '" + value + "'");
    }
  } else if (key == "cell-bits") {
    c.cell_bits = static_cast<int>(parse_int(key, value));
  } else if (key == "steps") {
    c.steps = parse_u64(key, value);
  } else if (key == "hit-bits") {
    c.hit_bits = static_cast<int>(parse_int(key, value));
  } else if (key == "trials") {
    c.trials = parse_int(key, value);
  } else if (key == "lyapunov-steps") {
    c.lyapunov_steps = parse_u64(key, value);
  } else if (key == "curve-points") {
    c.curve_points = parse_int(key, value);
  } else if (key == "symbols") {
    c.symbols = split(value, ',');
  } else {
    throw ConfigError(key, "unknown key");
  }
}

/// Checks every precondition the chosen pipeline will need.
inline void validate(const ExperimentConfig& c) {
  const bool uses_top = c.kind == Kind::top_spectrum || (c.kind == Kind::compare && c.model == Model::top);
  const bool uses_baker = c.kind == Kind::baker_spectrum || (c.kind == Kind::compare && c.model == Model::baker);
  if (!(c.tau > 0.0)) throw ConfigError("tau", "must be positive");
  if (uses_baker && (c.N < 2 || c.N % 2 != 0)) throw ConfigError("N", "baker map needs an even N >= 2");
  if ((c.kind == Kind::random_spectrum) && c.N < 1) throw ConfigError("N", "must be positive");
  if (uses_baker) {
    const auto n = c.N;
    if (c.site_a && (*c.site_a < 0 || *c.site_a >= n)) throw ConfigError("site-a", "must lie in [0, N)");
    if (c.site_b && (*c.site_b < 0 || *c.site_b >= n)) throw ConfigError("site-b", "must lie in [0, N)");
  }
  if (uses_top) {
    if (!(c.theta >= 0.0 && c.theta <= std::numbers::pi)) throw ConfigError("theta", "must lie in [0, pi]");
    if (!(c.phi >= 0.0 && c.phi < 2.0 * std::numbers::pi)) throw ConfigError("phi", "must lie in [0, 2 pi)");
  }
  if (c.bins < 1) throw ConfigError("bins", "must be at least 1");
  if (c.upper && !(*c.upper > 0.0)) throw ConfigError("upper", "must be positive");
  if (c.zero_tol && !(*c.zero_tol > 0.0)) throw ConfigError("zero-tol", "must be positive");
  if (!(c.delta > 0.0)) throw ConfigError("delta", "must be positive");
  if (c.kind == Kind::classical_returns) {
    if (c.cell_bits < 0 || c.cell_bits > 40) throw ConfigError("cell-bits", "must lie in [0, 40]");
    if (c.hit_bits < 1 || c.hit_bits > 40) throw ConfigError("hit-bits", "must lie in [1, 40]");
    if (c.steps < 1) throw ConfigError("steps", "must be positive");
    if (c.trials < 1) throw ConfigError("trials", "must be positive");
    if (c.lyapunov_steps < 1) throw ConfigError("lyapunov-steps", "must be positive");
  }
  if (c.kind == Kind::mp_curve && c.curve_points < 1) throw ConfigError("curve-points", "must be positive");
  if (c.kind == Kind::symbol_demo && (c.symbols.empty() || (c.symbols.size() == 1 && c.symbols[0].empty()))) {
    throw ConfigError("symbols", "need at least one symbol");
  }
}

inline ExperimentConfig from_key_values(const KeyValues& kv) {
  ExperimentConfig c;
  // `kind` first so later keys see the right defaults.
  if (auto it = kv.find("kind"); it != kv.end()) apply_key(c, "kind", it->second);
  for (const auto& [key, value] : kv) {
    if (key != "kind") apply_key(c, key, value);
  }
  return c;
}

/// Parses `key = value` lines; '#' starts a comment.
inline KeyValues parse_config_text(std::string_view text) {
  KeyValues kv;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno), "expected key = value, got '" + t + "'");
    }
    kv[trim(std::string_view(t).substr(0, eq))] = trim(std::string_view(t).substr(eq + 1));
  }
  return kv;
}

inline KeyValues read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

/// Parses a `key=value` command-line override.
inline std::pair<std::string, std::string> parse_override(std::string_view text) {
  const auto eq = text.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError(std::string(text), "override must have the form key=value");
  }
  return {trim(text.substr(0, eq)), trim(text.substr(eq + 1))};
}

// Keys whose comma-separated values span a sweep grid.
inline constexpr std::string_view kGridKeys[] = {"N", "j", "kp", "tau"};

/// Cartesian product of the grid keys (order N, j, kp, tau; last varies
/// fastest). Non-grid keys are shared by every cell.
inline std::vector<ExperimentConfig> expand_grid(const KeyValues& kv) {
  std::vector<KeyValues> cells{KeyValues{}};
  for (const auto& [key, value] : kv) {
    if (std::find(std::begin(kGridKeys), std::end(kGridKeys), key) == std::end(kGridKeys)) {
      for (auto& cell : cells) cell[key] = value;
    }
  }
  for (std::string_view gk : kGridKeys) {
    const auto it = kv.find(std::string(gk));
    if (it == kv.end()) continue;
    std::vector<std::string> values;
    for (auto& v : split(it->second, ',')) {
      if (!v.empty()) values.push_back(v);
    }
    if (values.empty()) throw ConfigError(std::string(gk), "empty sweep grid");
    std::vector<KeyValues> next;
    for (const auto& cell : cells) {
      for (const auto& v : values) {
        KeyValues c = cell;
        c[std::string(gk)] = v;
        next.push_back(std::move(c));
      }
    }
    cells = std::move(next);
  }
  std::vector<ExperimentConfig> out;
  out.reserve(cells.size());
  for (const auto& cell : cells) out.push_back(from_key_values(cell));
  return out;
}

inline bool is_sweep(const KeyValues& kv) {
  for (std::string_view gk : kGridKeys) {
    const auto it = kv.find(std::string(gk));
    if (it != kv.end() && it->second.find(',') != std::string::npos) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Output writers

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw IoError(path.parent_path(), "cannot create directory");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path, "cannot open output file");
  out << content;
  out.flush();
  if (!out) throw IoError(path, "write failed");
}

inline std::string spectrum_csv(const SpectrumSample& s) {
  std::string out = "index,eigenvalue\n";
  for (std::size_t i = 0; i < s.size(); ++i) {
    out += std::to_string(i);
    out += ',';
    out += format_double(s[i]);
    out += '\n';
  }
  return out;
}

/// `density_at` gives the reference curve (MP density, or the Exp(1) density
/// for hitting times) at each bin midpoint.
template <class Density>
std::string histogram_csv(const Histogram& h, std::string_view density_column, Density&& density_at) {
  std::string out = "bin_lo,bin_hi,mass,";
  out += density_column;
  out += '\n';
  for (std::size_t i = 0; i < h.bins(); ++i) {
    const double mid = 0.5 * (h.edges[i] + h.edges[i + 1]);
    out += format_double(h.edges[i]) + ',' + format_double(h.edges[i + 1]) + ',' + format_double(h.masses[i]) + ',' +
           format_double(density_at(mid)) + '\n';
  }
  return out;
}

/// Static bar chart of mass / bin width with the reference density as a
/// polyline.
template <class Density>
std::string histogram_svg(const Histogram& h, std::string_view title, Density&& density_at) {
  constexpr double kW = 640, kH = 400, kPad = 40;
  const double lo = h.edges.front();
  const double hi = h.edges.back();
  std::vector<double> heights(h.bins());
  double top = 0.0;
  for (std::size_t i = 0; i < h.bins(); ++i) {
    heights[i] = h.masses[i] / (h.edges[i + 1] - h.edges[i]);
    top = std::max(top, heights[i]);
  }
  constexpr int kCurve = 400;
  std::vector<std::pair<double, double>> curve;
  for (int i = 0; i <= kCurve; ++i) {
    const double t = lo + (hi - lo) * i / kCurve;
    const double d = density_at(t);
    curve.emplace_back(t, d);
  }
  // Cap the scale so an integrable edge singularity does not flatten the bars.
  const double y_max = std::max(top, 1e-12) * 1.2;
  auto sx = [&](double t) { return kPad + (t - lo) / (hi - lo) * (kW - 2 * kPad); };
  auto sy = [&](double y) { return kH - kPad - std::min(y, y_max) / y_max * (kH - 2 * kPad); };
  char buf[256];
  std::string out;
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" viewBox=\"0 0 %.0f %.0f\">\n",
                kW, kH, kW, kH);
  out += buf;
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<text x=\"40\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">" + std::string(title) + "</text>\n";
  for (std::size_t i = 0; i < h.bins(); ++i) {
    const double x0 = sx(h.edges[i]);
    const double x1 = sx(h.edges[i + 1]);
    const double y = sy(heights[i]);
    std::snprintf(buf, sizeof buf,
                  "<rect x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.2f\" fill=\"#9ab\" stroke=\"#567\"/>\n", x0,
                  y, std::max(0.0, x1 - x0), kH - kPad - y);
    out += buf;
  }
  out += "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"1.5\" points=\"";
  for (const auto& [t, d] : curve) {
    std::snprintf(buf, sizeof buf, "%.2f,%.2f ", sx(t), sy(d));
    out += buf;
  }
  out += "\"/>\n";
  std::snprintf(buf, sizeof buf,
                "<line x1=\"%.0f\" y1=\"%.0f\" x2=\"%.0f\" y2=\"%.0f\" stroke=\"black\"/>\n"
                "<text x=\"%.0f\" y=\"%.0f\" font-family=\"sans-serif\" font-size=\"12\">%s</text>\n"
                "<text x=\"%.0f\" y=\"%.0f\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"end\">%s</text>\n",
                kPad, kH - kPad, kW - kPad, kH - kPad, kPad, kH - kPad + 16, format_double(lo).c_str(), kW - kPad,
                kH - kPad + 16, format_double(hi).c_str());
  out += buf;
  out += "</svg>\n";
  return out;
}

// ---------------------------------------------------------------------------
// Running experiments

struct RunReport {
  json report;                        // config, summary, distances, timings, seed, rng_tag
  std::map<std::string, double> timings_ms;
  std::vector<std::string> files;     // written, relative to the output directory
};

namespace detail {

class Stopwatch {
 public:
  void lap(RunReport& r, const std::string& stage) {
    const auto now = std::chrono::steady_clock::now();
    r.timings_ms[stage] = std::chrono::duration<double, std::milli>(now - last_).count();
    last_ = now;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

inline json summary_json(const SpectrumSummary& s, std::size_t k) {
  return json{{"trace", s.trace},          {"min_eig", s.min_eig}, {"zero_count", s.zero_count},
              {"near_one_mass", s.near_one_mass}, {"zero_tol", s.zero_tol}, {"delta", s.delta},
              {"K", k}};
}

inline void emit(const ExperimentConfig& c, RunReport& r, const std::filesystem::path& dir, const std::string& name,
                 const std::string& content) {
  (void)c;
  write_file(dir / name, content);
  r.files.push_back(name);
}

/// Values below zero_tol set to exactly 0. Roundoff leaves the null space of
/// a Gram matrix spread over (0, ~1e-15], which a KS distance against the MP
/// atom at 0 would count as missing atom mass.
inline SpectrumSample snap_zeros(const SpectrumSample& s, double zero_tol) {
  std::vector<double> v = s.values();
  for (double& x : v) {
    if (x < zero_tol) x = 0.0;
  }
  return SpectrumSample(std::move(v));
}

/// Shared tail of every spectrum pipeline: summary, histogram, MP distances
/// and the spectrum/histogram files.
inline void spectrum_outputs(const ExperimentConfig& c, const SpectrumSample& s, std::int64_t n, RunReport& r,
                             const std::filesystem::path& dir, Stopwatch& sw) {
  const auto k = static_cast<std::int64_t>(s.size());
  const double tau = static_cast<double>(k) / static_cast<double>(n);
  const MPLaw law(tau);
  const double zero_tol = c.zero_threshold();
  const SpectrumSummary summary = spectrum_summary(s, zero_tol, c.delta);
  const Histogram hist = empirical_histogram(s, static_cast<std::size_t>(c.bins), c.upper_bound());
  r.report["summary"] = summary_json(summary, static_cast<std::size_t>(k));
  r.report["summary"]["N"] = n;
  r.report["summary"]["tau_effective"] = tau;
  r.report["summary"]["histogram_mass"] = hist.total();
  const SpectrumSample snapped = snap_zeros(s, zero_tol);
  r.report["distances"]["mp"] = {{"tau", tau},
                                 {"ks", distribution_distance(snapped, law, Metric::ks)},
                                 {"w1", distribution_distance(snapped, law, Metric::w1)}};
  sw.lap(r, "distances");
  auto mp_at = [&law](double t) { return law.density(t); };
  if (c.wants("csv")) {
    emit(c, r, dir, "spectrum.csv", spectrum_csv(s));
    emit(c, r, dir, "histogram.csv", histogram_csv(hist, "mp_density_at_midpoint", mp_at));
  }
  if (c.wants("svg")) {
    std::string title = std::string(to_string(c.kind)) + " N=" + std::to_string(n) + " K=" + std::to_string(k);
    emit(c, r, dir, "histogram.svg", histogram_svg(hist, title, mp_at));
  }
}

inline SpectrumSample model_spectrum(const ExperimentConfig& c, Model model, RunReport& r, Stopwatch& sw) {
  const auto k = static_cast<std::size_t>(c.steps_k());
  Operator u = Operator::general(CMatrix::Identity(1, 1));
  std::optional<StateVector> psi;
  if (model == Model::baker) {
    const auto n = c.N;
    const TorusSite site{c.site_a.value_or(n / 4), c.site_b.value_or(n / 2)};
    u = baker_unitary({n});
    sw.lap(r, "build_unitary");
    psi = coherent_state(n, site);
    r.report["initial_state"] = {{"type", "torus-coherent"}, {"site_a", site.a}, {"site_b", site.b}};
  } else {
    const Spin spin = Spin::from_twice(c.twice_j);
    u = kicked_top_unitary({spin, c.k, c.p});
    sw.lap(r, "build_unitary");
    psi = spin_coherent_state(spin, {c.theta, c.phi});
    r.report["initial_state"] = {{"type", "spin-coherent"}, {"theta", c.theta}, {"phi", c.phi}};
  }
  sw.lap(r, "initial_state");
  const std::vector<cplx> corr = evolve_autocorrelations(u, *psi, k);
  sw.lap(r, "autocorrelations");
  const GramMatrix g = gram_from_autocorrelation(corr);
  SpectrumSample s = gram_spectrum(g);
  sw.lap(r, "spectrum");
  return s;
}

inline void run_classical(const ExperimentConfig& c, RunReport& r, const std::filesystem::path& dir, Stopwatch& sw) {
  SeededSampler root(c.seed);
  const DyadicCell kac_cell{c.cell_bits, 0};
  const ReturnSample returns = baker_cell_returns(kac_cell, c.steps, SeededSampler(root.next_u64()));
  sw.lap(r, "kac");
  const DyadicCell hit_cell = aperiodic_cell(c.hit_bits);
  SeededSampler hit_rng(root.next_u64());
  const HittingSample hits = baker_cell_hitting(hit_cell, static_cast<std::size_t>(c.trials), hit_rng);
  sw.lap(r, "hitting");
  const double lyap = lyapunov_baker(BitOrbit::random(SeededSampler(root.next_u64())), c.lyapunov_steps);
  const double slope = float_separation_slope({std::numbers::sqrt2 - 1.0, std::numbers::pi - 3.0}, 1e-12, 20);
  sw.lap(r, "lyapunov");

  SpherePoint pt{std::sin(c.theta) * std::cos(c.phi), std::sin(c.theta) * std::sin(c.phi), std::cos(c.theta)};
  double drift = 0.0;
  for (int i = 0; i < 10'000; ++i) {
    pt = top_classical_step(pt, c.k, c.p, c.top_variant);
    drift = std::max(drift, std::abs(pt.norm() - 1.0));
  }
  sw.lap(r, "top_classical");

  SpectrumSample rescaled(hits.rescaled);
  const ExponentialLaw exp_law;
  double hit_mean = 0.0;
  for (double v : hits.rescaled) hit_mean += v;
  if (!hits.rescaled.empty()) hit_mean /= static_cast<double>(hits.rescaled.size());
  r.report["summary"] = {
      {"kac", {{"cell_bits", c.cell_bits}, {"measure", kac_cell.measure()}, {"steps", c.steps},
               {"returns", returns.times.size()}, {"mean_return_time", returns.mean()},
               {"inverse_measure", 1.0 / kac_cell.measure()}}},
      {"hitting", {{"cell_bits", c.hit_bits}, {"cell_index", hit_cell.index}, {"measure", hit_cell.measure()},
                   {"trials", c.trials}, {"censored", hits.censored}, {"mean_rescaled", hit_mean}}},
      {"lyapunov", {{"bit_orbit_average", lyap}, {"float_separation_slope", slope}, {"log2", std::numbers::ln2}}},
      {"top_classical", {{"k", c.k}, {"p", c.p}, {"variant", gramrecur::to_string(c.top_variant)},
                         {"steps", 10000}, {"max_norm_drift", drift}}},
  };
  if (!rescaled.empty()) {
    r.report["distances"]["exp1"] = {{"ks", distribution_distance(rescaled, exp_law, Metric::ks)},
                                     {"w1", distribution_distance(rescaled, exp_law, Metric::w1)}};
  }
  if (c.wants("csv")) {
    std::string ret = "index,return_time\n";
    for (std::size_t i = 0; i < returns.times.size(); ++i) {
      ret += std::to_string(i) + ',' + std::to_string(returns.times[i]) + '\n';
    }
    emit(c, r, dir, "return_times.csv", ret);
    std::string hit = "index,rescaled_hitting_time\n";
    for (std::size_t i = 0; i < hits.rescaled.size(); ++i) {
      hit += std::to_string(i) + ',' + format_double(hits.rescaled[i]) + '\n';
    }
    emit(c, r, dir, "hitting_times.csv", hit);
  }
  if (!rescaled.empty() && (c.wants("csv") || c.wants("svg"))) {
    const double upper = c.upper.value_or(6.0);
    const Histogram h = empirical_histogram(rescaled, static_cast<std::size_t>(c.bins), upper);
    auto exp_at = [](double t) { return t < 0.0 ? 0.0 : std::exp(-t); };
    if (c.wants("csv")) emit(c, r, dir, "histogram.csv", histogram_csv(h, "exp_density_at_midpoint", exp_at));
    if (c.wants("svg")) emit(c, r, dir, "histogram.svg", histogram_svg(h, "rescaled hitting times", exp_at));
  }
}

}  // namespace detail

/// Runs one experiment cell and writes its files into `dir`.
inline RunReport run_experiment(const ExperimentConfig& c, const std::filesystem::path& dir) {
  validate(c);
  RunReport r;
  detail::Stopwatch sw;
  KeyValues echo = to_key_values(c);
  r.report["config"] = echo;
  r.report["kind"] = std::string(to_string(c.kind));
  r.report["seed"] = c.seed;
  r.report["rng_tag"] = std::string(SeededSampler::algorithm);
  r.report["distances"] = json::object();

  switch (c.kind) {
    case Kind::baker_spectrum: {
      SpectrumSample s = detail::model_spectrum(c, Model::baker, r, sw);
      detail::spectrum_outputs(c, s, c.N, r, dir, sw);
      break;
    }
    case Kind::top_spectrum: {
      SpectrumSample s = detail::model_spectrum(c, Model::top, r, sw);
      detail::spectrum_outputs(c, s, c.twice_j + 1, r, dir, sw);
      break;
    }
    case Kind::random_spectrum: {
      SeededSampler rng(c.seed);
      SpectrumSample s = random_gram_spectrum(c.N, static_cast<std::size_t>(c.steps_k()), rng);
      sw.lap(r, "spectrum");
      detail::spectrum_outputs(c, s, c.N, r, dir, sw);
      break;
    }
    case Kind::compare: {
      const Model model = c.model;
      SpectrumSample s = detail::model_spectrum(c, model, r, sw);
      const std::int64_t n = c.dim();
      detail::spectrum_outputs(c, s, n, r, dir, sw);
      SeededSampler rng(c.seed);
      SpectrumSample rnd = random_gram_spectrum(n, s.size(), rng);
      const SpectrumSample a = detail::snap_zeros(s, c.zero_threshold());
      const SpectrumSample b = detail::snap_zeros(rnd, c.zero_threshold());
      r.report["distances"]["random_vectors"] = {{"ks", distribution_distance(a, b, Metric::ks)},
                                                 {"w1", distribution_distance(a, b, Metric::w1)}};
      r.report["model"] = model == Model::baker ? "baker" : "top";
      sw.lap(r, "random_reference");
      if (c.wants("csv")) detail::emit(c, r, dir, "random_spectrum.csv", spectrum_csv(rnd));
      break;
    }
    case Kind::mp_curve: {
      const MPLaw law(c.tau);
      const double upper = c.upper_bound();
      std::string curve = "t,density,cdf\n";
      for (std::int64_t i = 0; i <= c.curve_points; ++i) {
        const double t = upper * static_cast<double>(i) / static_cast<double>(c.curve_points);
        curve += format_double(t) + ',' + format_double(law.density(t)) + ',' + format_double(law.cdf(t)) + '\n';
      }
      Histogram h;
      const auto bins = static_cast<std::size_t>(c.bins);
      h.edges.resize(bins + 1);
      h.masses.resize(bins);
      for (std::size_t i = 0; i <= bins; ++i) h.edges[i] = upper * static_cast<double>(i) / static_cast<double>(bins);
      double prev = 0.0;
      for (std::size_t i = 0; i < bins; ++i) {
        const double next = i + 1 == bins ? 1.0 : law.cdf(h.edges[i + 1] - 1e-15 * upper);
        h.masses[i] = next - prev;
        prev = next;
      }
      r.report["summary"] = {{"tau", c.tau},
                             {"atom", law.atom()},
                             {"support_lower", law.support_lower()},
                             {"support_upper", law.support_upper()},
                             {"mass", law.moment(0)},
                             {"mean", law.moment(1)},
                             {"second_moment", law.moment(2)}};
      sw.lap(r, "curve");
      auto mp_at = [&law](double t) { return law.density(t); };
      if (c.wants("csv")) {
        detail::emit(c, r, dir, "mp_curve.csv", curve);
        detail::emit(c, r, dir, "histogram.csv", histogram_csv(h, "mp_density_at_midpoint", mp_at));
      }
      if (c.wants("svg")) detail::emit(c, r, dir, "histogram.svg", histogram_svg(h, "MP law", mp_at));
      break;
    }
    case Kind::classical_returns:
      detail::run_classical(c, r, dir, sw);
      break;
    case Kind::symbol_demo: {
      const SpectrumSample direct = symbol_gram_spectrum<std::string>(c.symbols);
      const SpectrumSample solved = gram_spectrum(GramMatrix::from_entries(symbol_gram_matrix<std::string>(c.symbols)));
      double gap = 0.0;
      for (std::size_t i = 0; i < direct.size(); ++i) gap = std::max(gap, std::abs(direct[i] - solved[i]));
      sw.lap(r, "spectrum");
      r.report["spectrum"] = direct.values();
      r.report["distances"]["counts_vs_eigensolver_max_abs"] = gap;
      const auto k = static_cast<std::int64_t>(direct.size());
      const SpectrumSummary summary = spectrum_summary(direct, c.zero_tol.value_or(0.5), c.delta);
      r.report["summary"] = detail::summary_json(summary, static_cast<std::size_t>(k));
      const Histogram hist = empirical_histogram(direct, static_cast<std::size_t>(c.bins),
                                                 c.upper.value_or(std::max(1.0, direct.max() + 1.0)));
      r.report["summary"]["histogram_mass"] = hist.total();
      auto none = [](double) { return 0.0; };
      if (c.wants("csv")) {
        detail::emit(c, r, dir, "spectrum.csv", spectrum_csv(direct));
        detail::emit(c, r, dir, "histogram.csv", histogram_csv(hist, "mp_density_at_midpoint", none));
      }
      if (c.wants("svg")) detail::emit(c, r, dir, "histogram.svg", histogram_svg(hist, "symbol demo", none));
      break;
    }
  }

  r.report["timings"] = {{"file", "timings.json"}, {"unit", "ms"}};
  if (c.wants("json")) {
    detail::emit(c, r, dir, "report.json", r.report.dump(2) + "\n");
    json t(r.timings_ms);
    detail::emit(c, r, dir, "timings.json", t.dump(2) + "\n");
  }
  return r;
}

struct SweepCell {
  std::size_t index = 0;
  ExperimentConfig config;
  std::string dir;
  bool ok = false;
  std::string error_kind;  // config | numerical | io
  std::string error;
  std::optional<RunReport> report;
};

/// Error category used in sweep.json and for CLI exit codes.
inline std::string_view error_kind(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const std::invalid_argument*>(&e)) return "config";
  if (dynamic_cast<const IoError*>(&e)) return "io";
  return "numerical";
}

/// Runs every grid cell (up to `jobs` at once) into out/cell-NNN and writes
/// out/sweep.json. Cell errors are recorded, not thrown.
inline std::vector<SweepCell> sweep(std::vector<ExperimentConfig> grid, const std::filesystem::path& out,
                                   unsigned jobs = 1) {
  if (grid.empty()) throw ConfigError("grid", "empty sweep grid");
  std::vector<SweepCell> cells(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "cell-%03zu", i);
    cells[i].index = i;
    cells[i].dir = name;
    cells[i].config = std::move(grid[i]);
    cells[i].config.seed ^= mix_seed(i);
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      auto& cell = cells[i];
      try {
        cell.report = run_experiment(cell.config, out / cell.dir);
        cell.ok = true;
      } catch (const std::exception& e) {
        cell.error_kind = error_kind(e);
        cell.error = e.what();
      }
    }
  };
  const unsigned n_threads = std::max(1U, std::min<unsigned>(jobs, static_cast<unsigned>(cells.size())));
  std::vector<std::thread> threads;
  for (unsigned t = 1; t < n_threads; ++t) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();

  json index = json::array();
  for (const auto& cell : cells) {
    json e = {{"index", cell.index}, {"dir", cell.dir}, {"status", cell.ok ? "ok" : "error"},
              {"config", to_key_values(cell.config)}};
    if (!cell.ok) e["error"] = {{"kind", cell.error_kind}, {"message", cell.error}};
    if (cell.ok && cell.report->report.contains("distances")) e["distances"] = cell.report->report["distances"];
    index.push_back(std::move(e));
  }
  write_file(out / "sweep.json", index.dump(2) + "\n");
  return cells;
}

}  // namespace gramrecur::experiment
