#include "toda/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "toda/error.hpp"
#include "toda/numeric.hpp"

namespace toda {

namespace {

using V = ValueType;

std::vector<KeySpec> build_schema() {
  const std::vector<std::string> none;
  return {
      {"run.command", V::String, "", {"solve", "classify", "diagnose", "degenerate", "dehn", "plot-data"}, "must match the subcommand when set"},
      {"cross_section.kind", V::String, "torus", {"torus", "surface"}, "flat torus or genus >= 2 surrogate"},
      {"cross_section.nx", V::Int, "32", none, "torus samples along s1"},
      {"cross_section.ny", V::Int, "32", none, "torus samples along s2"},
      {"cross_section.lattice", V::DoubleList, "1, 0, 0, 1", none, "2x2 basis, row-major; normalized to unit area"},
      {"cross_section.genus", V::Int, "2", none, "surrogate genus"},
      {"cross_section.eigenvalues", V::DoubleList, "", none, "surrogate spectrum, starting with 0"},
      {"bvp.id", V::String, "BVP1", {"BVP1", "BVP2", "BVP3", "BVP4"}, "boundary value problem"},
      {"bvp.a", V::Double, "1", none, "BVP2 parameter"},
      {"bvp.phi_const", V::Double, "0", none, "constant part of the boundary data"},
      {"bvp.phi_cos_amp", V::DoubleList, "", none, "amplitudes of cos(2 pi (kx s1 + ky s2))"},
      {"bvp.phi_cos_kx", V::IntList, "", none, ""},
      {"bvp.phi_cos_ky", V::IntList, "", none, ""},
      {"bvp.phi_modes", V::DoubleList, "", none, "surrogate mode coefficients added to the constant"},
      {"grid.length", V::Double, "6", none, "t-length of the solve"},
      {"grid.n_t", V::Int, "240", none, "t-intervals"},
      {"solver.t_order", V::Int, "4", none, "2, 4 or 6"},
      {"solver.tol_newton", V::Double, "1e-10", none, ""},
      {"solver.max_newton", V::Int, "40", none, ""},
      {"solver.continuation_steps", V::Int, "1", none, ""},
      {"solver.schedule", V::DoubleList, "", none, "explicit continuation schedule"},
      {"frame.enabled", V::Bool, "true", none, "assemble the metric and evaluate curvature (torus only)"},
      {"frame.degree", V::Int, "-1", none, "-1 picks 0 for zero flux and 1 otherwise"},
      {"frame.period", V::Double, "1", none, "fiber period when the degree is 0"},
      {"frame.clip", V::Int, "5", none, ""},
      {"frame.t_order", V::Int, "4", none, "4 or 6"},
      {"frame.closure_tol", V::Double, "0.01", none, ""},
      {"classify.family", V::String, "type_i", {"type_i", "type_ii_torus", "type_ii_sigma"}, ""},
      {"classify.a", V::Double, "0", none, ""},
      {"classify.b", V::Double, "1", none, ""},
      {"classify.table", V::Int, "0", none, "0 for a single family, 1 or 2 for the lattice"},
      {"classify.a_list", V::DoubleList, "-2, -1, -0.5, 0, 0.5, 1, 2", none, ""},
      {"classify.b_list", V::DoubleList, "-2, -1, -0.5, 0, 0.5, 1, 2", none, ""},
      {"diagnose.pair_eps", V::Double, "0.1", none, "second solution of the energy pair"},
      {"diagnose.eps_list", V::DoubleList, "0.1, 0.01, 0.001", none, "stability ladder"},
      {"diagnose.direction_kx", V::Int, "1", none, "perturbation cos(2 pi (kx s1 + ky s2))"},
      {"diagnose.direction_ky", V::Int, "0", none, ""},
      {"degenerate.n_list", V::IntList, "2, 4, 6, 8", none, ""},
      {"degenerate.xi_lo", V::Double, "1", none, ""},
      {"degenerate.xi_hi", V::Double, "5", none, ""},
      {"degenerate.n_t", V::Int, "400", none, ""},
      {"degenerate.t_factor", V::Double, "2", none, ""},
      {"degenerate.sample", V::Int, "0", none, "cross-section sample of the base point"},
      {"dehn.r_list", V::DoubleList, "20, 20, 20, 20", none, "paired with l_list"},
      {"dehn.l_list", V::DoubleList, "200000, 400000, 800000, 1600000", none, ""},
      {"dehn.delta", V::Double, "1", none, "weight exponent"},
      {"dehn.margin", V::Double, "0.5", none, ""},
      {"dehn.samples_per_unit", V::Int, "20", none, ""},
      {"plot.input", V::String, "", none, "artifact directory; defaults to the output directory"},
      {"property.seeds", V::IntList, "1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20", none,
       "randomized boundary data for the property suite"},
      {"property.max_mode", V::Int, "2", none, "largest Fourier index of random data"},
      {"property.amplitude", V::Double, "1", none, "sup of random data"},
  };
}

const KeySpec* find_spec(const std::string& name) {
  for (const auto& k : config_schema())
    if (k.name == name) return &k;
  return nullptr;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_long(const std::string& s, long& out) {
  if (s.empty()) return false;
  errno = 0;
  char* end = nullptr;
  out = std::strtol(s.c_str(), &end, 10);
  return errno == 0 && *end == '\0';
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  errno = 0;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return errno == 0 && *end == '\0' && std::isfinite(out);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

// canonical text or an error message prefixed with '!'
std::string canonical(const KeySpec& k, const std::string& raw) {
  const std::string v = trim(raw);
  auto bad = [&](const std::string& what) { return "!" + k.name + ": " + what + " '" + v + "'"; };
  switch (k.type) {
    case V::Int: {
      long x;
      if (!parse_long(v, x)) return bad("expected an integer, got");
      return std::to_string(x);
    }
    case V::Double: {
      double x;
      if (!parse_double(v, x)) return bad("expected a finite number, got");
      return num::format_double(x);
    }
    case V::Bool:
      if (v == "true" || v == "false") return v;
      return bad("expected true or false, got");
    case V::String:
      if (!k.choices.empty() && v != k.fallback && std::find(k.choices.begin(), k.choices.end(), v) == k.choices.end())
        return bad("not an accepted value:");
      return v;
    case V::IntList:
    case V::DoubleList: {
      std::string out;
      for (const auto& item : split_list(v)) {
        std::string c;
        if (k.type == V::IntList) {
          long x;
          if (!parse_long(item, x)) return bad("expected integers, got");
          c = std::to_string(x);
        } else {
          double x;
          if (!parse_double(item, x)) return bad("expected finite numbers, got");
          c = num::format_double(x);
        }
        out += (out.empty() ? "" : ", ") + c;
      }
      return out;
    }
  }
  return v;
}

}  // namespace

const std::vector<KeySpec>& config_schema() {
  static const std::vector<KeySpec> schema = build_schema();
  return schema;
}

void RunConfig::set(const std::string& name, const std::string& value) {
  const KeySpec* k = find_spec(name);
  if (!k) fail(ErrorCode::Config, "unknown key '" + name + "'");
  const std::string c = canonical(*k, value);
  if (!c.empty() && c[0] == '!') fail(ErrorCode::Config, c.substr(1));
  values_[name] = c;
}

bool RunConfig::has(const std::string& name) const { return values_.count(name) > 0; }

RunConfig RunConfig::parse(const std::string& text) {
  RunConfig cfg;
  std::stringstream ss(text);
  std::string line, section;
  int no = 0;
  auto where = [&]() { return "config line " + std::to_string(no) + ": "; };
  while (std::getline(ss, line)) {
    ++no;
    const std::string l = trim(line);
    if (l.empty() || l[0] == '#' || l[0] == ';') continue;
    if (l.front() == '[') {
      if (l.back() != ']') fail(ErrorCode::Config, where() + "malformed section header");
      section = trim(l.substr(1, l.size() - 2));
      const bool known = std::any_of(config_schema().begin(), config_schema().end(),
                                     [&](const KeySpec& k) { return k.name.rfind(section + ".", 0) == 0; });
      if (!known) fail(ErrorCode::Config, where() + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = l.find('=');
    if (eq == std::string::npos) fail(ErrorCode::Config, where() + "expected key = value");
    if (section.empty()) fail(ErrorCode::Config, where() + "key outside a section");
    const std::string name = section + "." + trim(l.substr(0, eq));
    if (!find_spec(name)) fail(ErrorCode::Config, where() + "unknown key '" + name + "'");
    if (cfg.has(name)) fail(ErrorCode::Config, where() + "duplicate key '" + name + "'");
    try {
      cfg.set(name, l.substr(eq + 1));
    } catch (const Error& e) {
      fail(ErrorCode::Config, where() + e.what());
    }
  }
  return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Config, "cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string RunConfig::render(bool with_defaults) const {
  std::string out, section;
  for (const auto& k : config_schema()) {
    const bool set = has(k.name);
    if (!set && !with_defaults) continue;
    const auto dot = k.name.find('.');
    const std::string sec = k.name.substr(0, dot);
    if (sec != section) {
      out += (out.empty() ? "" : "\n") + std::string("[") + sec + "]\n";
      section = sec;
    }
    out += k.name.substr(dot + 1) + " = " + (set ? values_.at(k.name) : canonical(k, k.fallback)) + "\n";
  }
  return out;
}

std::string RunConfig::hash() const { return num::hex64(num::fnv1a64(render(true))); }

std::string RunConfig::text_of(const std::string& name) const {
  const KeySpec* k = find_spec(name);
  if (!k) fail(ErrorCode::Internal, "no config key '" + name + "'");
  auto it = values_.find(name);
  return it != values_.end() ? it->second : canonical(*k, k->fallback);
}

long RunConfig::get_int(const std::string& name) const {
  long x = 0;
  parse_long(text_of(name), x);
  return x;
}

double RunConfig::get_double(const std::string& name) const {
  double x = 0.0;
  parse_double(text_of(name), x);
  return x;
}

bool RunConfig::get_bool(const std::string& name) const { return text_of(name) == "true"; }

std::string RunConfig::get_string(const std::string& name) const { return text_of(name); }

std::vector<long> RunConfig::get_int_list(const std::string& name) const {
  std::vector<long> out;
  for (const auto& s : split_list(text_of(name))) {
    long x = 0;
    parse_long(s, x);
    out.push_back(x);
  }
  return out;
}

std::vector<double> RunConfig::get_double_list(const std::string& name) const {
  std::vector<double> out;
  for (const auto& s : split_list(text_of(name))) {
    double x = 0.0;
    parse_double(s, x);
    out.push_back(x);
  }
  return out;
}

}  // namespace toda
