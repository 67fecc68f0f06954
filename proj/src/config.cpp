#include "dolbeault/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <string_view>
#include <sstream>

#include "dolbeault/errors.hpp"
#include "dolbeault/sparse.hpp"

namespace dolbeault {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

[[noreturn]] void bad(const std::string& key, const std::string& what) {
  throw ValidationError(key + ": " + what);
}

std::string_view unsigned_view(const std::string& text) {
  std::string_view v(text);
  if (v.size() > 1 && v[0] == '+' && v[1] != '-') v.remove_prefix(1);
  return v;
}

long long to_int(const std::string& key, const std::string& text) {
  long long v = 0;
  const auto t = unsigned_view(text);
  const char* end = t.data() + t.size();
  auto [p, ec] = std::from_chars(t.data(), end, v);
  if (ec != std::errc() || p != end || t.empty()) bad(key, "expected an integer, got '" + text + "'");
  return v;
}

int to_i32(const std::string& key, const std::string& text) {
  const auto v = to_int(key, text);
  if (v < -1000000000LL || v > 1000000000LL) bad(key, "value out of range: " + text);
  return static_cast<int>(v);
}

double to_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const auto t = unsigned_view(text);
  const char* end = t.data() + t.size();
  auto [p, ec] = std::from_chars(t.data(), end, v);
  if (ec != std::errc() || p != end || t.empty() || !std::isfinite(v))
    bad(key, "expected a finite number, got '" + text + "'");
  return v;
}

template <class T, class F>
std::vector<T> to_list(const std::string& key, const std::string& text, F convert) {
  std::vector<T> out;
  for (const auto& item : split_list(text)) {
    if (item.empty()) bad(key, "empty list entry in '" + text + "'");
    out.push_back(convert(key, item));
  }
  if (out.empty()) bad(key, "empty list");
  return out;
}

void one_of(const std::string& key, const std::string& value, std::initializer_list<const char*> allowed) {
  for (const char* a : allowed)
    if (value == a) return;
  std::string list;
  for (const char* a : allowed) list += std::string(list.empty() ? "" : ", ") + a;
  bad(key, "'" + value + "' is not one of {" + list + "}");
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

int RunConfig::factor_count() const {
  return static_cast<int>(std::max({degrees.size(), areas.size(), moduli.size()}));
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{
      "command", "degree", "area",  "modulus", "grid",     "grids",  "perturb-profile", "perturb-amplitude",
      "k",       "tol",    "seed",  "max-iter", "quantity", "modes", "kronecker-grid",  "save-connection",
      "load-connection", "out", "format"};
  return keys;
}

KeyValues parse_key_values(const std::string& text, const std::string& origin) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  const auto& keys = config_keys();
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = origin + ":" + std::to_string(lineno);
    if (eq == std::string::npos) throw ValidationError(where + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (std::find(keys.begin(), keys.end(), key) == keys.end())
      throw ValidationError(where + ": unknown key '" + key + "'");
    if (kv.count(key)) throw ValidationError(where + ": key '" + key + "' given twice");
    kv[key] = value;
  }
  return kv;
}

KeyValues read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config: cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_key_values(ss.str(), path);
}

KeyValues merge_key_values(KeyValues base, const KeyValues& top) {
  for (const auto& [k, v] : top) base[k] = v;
  return base;
}

std::complex<double> parse_complex(const std::string& raw) {
  std::string s;
  for (char c : raw)
    if (c != ' ') s.push_back(c);
  if (s.empty()) bad("modulus", "empty value");
  if (s.back() != 'i') return {to_double("modulus", s), 0.0};
  const std::string body = s.substr(0, s.size() - 1);
  // Split at the last sign that is not an exponent sign.
  std::size_t split = std::string::npos;
  for (std::size_t i = 1; i < body.size(); ++i)
    if ((body[i] == '+' || body[i] == '-') && body[i - 1] != 'e' && body[i - 1] != 'E') split = i;
  auto imag_part = [&](const std::string& t) {
    if (t.empty() || t == "+") return 1.0;
    if (t == "-") return -1.0;
    return to_double("modulus", t[0] == '+' ? t.substr(1) : t);
  };
  if (split == std::string::npos) return {0.0, imag_part(body)};
  return {to_double("modulus", body.substr(0, split)), imag_part(body.substr(split))};
}

RunConfig make_run_config(const KeyValues& kv) {
  RunConfig c;
  const auto& keys = config_keys();
  for (const auto& [k, v] : kv)
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) throw ValidationError("unknown key '" + k + "'");
  auto get = [&](const char* key) -> const std::string* {
    auto it = kv.find(key);
    return it == kv.end() ? nullptr : &it->second;
  };

  if (auto v = get("command")) {
    one_of("command", *v, {"spectrum", "verify-bound", "dirac", "product", "convergence"});
    c.command = *v;
  }
  if (auto v = get("degree")) c.degrees = to_list<int>("degree", *v, [](auto& k, auto& t) {
      return to_i32(k, t);
    });
  if (auto v = get("area")) c.areas = to_list<double>("area", *v, to_double);
  if (auto v = get("modulus"))
    c.moduli = to_list<std::complex<double>>("modulus", *v, [](auto&, auto& t) { return parse_complex(t); });
  if (auto v = get("grid")) c.grid = to_i32("grid", *v);
  if (auto v = get("grids")) c.grids = to_list<int>("grids", *v, [](auto& k, auto& t) {
      return to_i32(k, t);
    });
  if (auto v = get("perturb-profile")) {
    one_of("perturb-profile", *v, {"none", "cos", "cosine", "random"});
    c.perturb_profile = *v;
  }
  if (auto v = get("perturb-amplitude")) c.perturb_amplitude = to_double("perturb-amplitude", *v);
  if (auto v = get("k")) c.k = to_i32("k", *v);
  if (auto v = get("tol")) c.tol = to_double("tol", *v);
  if (auto v = get("seed")) {
    const auto s = to_int("seed", *v);
    if (s < 0) bad("seed", "must be non-negative");
    c.seed = static_cast<std::uint64_t>(s);
  }
  if (auto v = get("max-iter")) c.max_iter = to_i32("max-iter", *v);
  if (auto v = get("quantity")) {
    one_of("quantity", *v, {"lambda1", "twistor", "weitzenbock", "dirac"});
    c.quantity = *v;
  }
  if (auto v = get("modes")) c.modes = to_i32("modes", *v);
  if (auto v = get("kronecker-grid")) c.kronecker_grid = to_i32("kronecker-grid", *v);
  if (auto v = get("save-connection")) c.save_connection = *v;
  if (auto v = get("load-connection")) c.load_connection = *v;
  if (auto v = get("out")) c.out = *v;
  if (auto v = get("format")) {
    one_of("format", *v, {"json", "csv"});
    c.format = *v;
  }

  for (double a : c.areas)
    if (!(a > 0.0)) bad("area", "must be positive, got " + format_double(a));
  for (auto m : c.moduli)
    if (!(m.imag() > 0.0)) bad("modulus", "imaginary part must be positive, got " + format_double(m.imag()));
  const int n = c.factor_count();
  for (auto [name, size] : {std::pair{"degree", c.degrees.size()}, std::pair{"area", c.areas.size()},
                            std::pair{"modulus", c.moduli.size()}})
    if (size != 1 && static_cast<int>(size) != n)
      bad(name, "expected 1 or " + std::to_string(n) + " entries, got " + std::to_string(size));
  if (c.command == "product") {
    if (n > 2) bad("degree", "product takes at most 2 factors");
  } else if (n != 1) {
    bad("degree", "command '" + c.command + "' takes a single torus factor");
  }

  if (c.grid < 4) bad("grid", "must be >= 4, got " + std::to_string(c.grid));
  std::sort(c.grids.begin(), c.grids.end());
  for (std::size_t i = 0; i < c.grids.size(); ++i) {
    if (c.grids[i] < 4) bad("grids", "every size must be >= 4, got " + std::to_string(c.grids[i]));
    if (i > 0 && c.grids[i] == c.grids[i - 1]) bad("grids", "sizes must be distinct");
  }
  if (c.command == "convergence" && c.grids.size() < 3)
    bad("grids", "convergence needs at least 3 sizes, got " + std::to_string(c.grids.size()));
  if (c.k < 1) bad("k", "must be >= 1");
  if (!(c.tol > 0.0) || c.tol >= 1.0) bad("tol", "must lie in (0, 1)");
  if (c.max_iter < 1) bad("max-iter", "must be >= 1");
  if (c.modes < 1) bad("modes", "must be >= 1");
  if (c.kronecker_grid != 0 && (c.kronecker_grid < 4 || c.kronecker_grid > 8))
    bad("kronecker-grid", "must be 0 (off) or in [4, 8], got " + std::to_string(c.kronecker_grid));
  if (c.perturb_profile != "none" && c.perturb_amplitude == 0.0) c.perturb_profile = "none";
  if (!c.load_connection.empty() && c.command != "spectrum") bad("load-connection", "only used by the spectrum command");
  if (!c.save_connection.empty() && c.command != "spectrum") bad("save-connection", "only used by the spectrum command");
  return c;
}

std::string canonical_config(const RunConfig& c) {
  auto join = [](const auto& xs, auto fmt) {
    std::string s;
    for (const auto& x : xs) s += (s.empty() ? "" : ",") + fmt(x);
    return s;
  };
  auto fd = [](double x) { return format_double(x); };
  std::map<std::string, std::string> m;
  m["command"] = c.command;
  m["degree"] = join(c.degrees, [](int d) { return std::to_string(d); });
  m["area"] = join(c.areas, fd);
  m["modulus"] = join(c.moduli, [&](std::complex<double> z) { return fd(z.real()) + "+" + fd(z.imag()) + "i"; });
  m["grid"] = std::to_string(c.grid);
  m["grids"] = join(c.grids, [](int g) { return std::to_string(g); });
  m["perturb-profile"] = c.perturb_profile == "cosine" ? "cos" : c.perturb_profile;
  m["perturb-amplitude"] = fd(c.perturb_amplitude);
  m["k"] = std::to_string(c.k);
  m["tol"] = fd(c.tol);
  m["seed"] = std::to_string(c.seed);
  m["max-iter"] = std::to_string(c.max_iter);
  m["quantity"] = c.quantity;
  m["modes"] = std::to_string(c.modes);
  m["kronecker-grid"] = std::to_string(c.kronecker_grid);
  m["save-connection"] = c.save_connection;
  m["load-connection"] = c.load_connection;
  m["format"] = c.format;
  std::string out;
  for (const auto& [k, v] : m) out += k + "=" + v + "\n";
  return out;
}

std::uint64_t config_hash(const RunConfig& c) {
  const auto text = canonical_config(c);
  return fnv1a(text.data(), text.size());
}

}  // namespace dolbeault
