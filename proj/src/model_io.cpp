#include "eaf/model_io.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace eaf {

namespace {

using nlohmann::json;

const std::set<std::string> kKeys = {"name", "dim", "f", "G", "Gamma", "D", "measure", "domain"};

std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) in_string = !in_string;
    if (line[i] == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

int bracket_depth(const std::string& s) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (c == '"' && (i == 0 || s[i - 1] != '\\')) in_string = !in_string;
    if (in_string) continue;
    if (c == '[' || c == '{') ++depth;
    if (c == ']' || c == '}') --depth;
  }
  return depth;
}

std::map<std::string, json> split_entries(std::string_view text) {
  std::map<std::string, json> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string body = trim(strip_comment(line));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("model file line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(body.substr(0, eq));
    std::string value = trim(body.substr(eq + 1));
    while (bracket_depth(value) > 0 && std::getline(in, line)) {
      ++line_no;
      value += " " + trim(strip_comment(line));
    }
    if (!kKeys.contains(key)) throw ConfigError("model file: unknown key '" + key + "'");
    if (out.contains(key)) throw ConfigError("model file: duplicate key '" + key + "'");
    try {
      out[key] = json::parse(value);
    } catch (const json::parse_error&) {
      throw ConfigError("model file: cannot parse value of '" + key + "'");
    }
  }
  return out;
}

double as_number(const json& j, const std::string& what) {
  if (!j.is_number()) throw ConfigError("model file: " + what + " must be a number");
  return j.get<double>();
}

Matrix as_matrix(const json& j, int n, const std::string& key) {
  if (!j.is_array() || j.size() != static_cast<std::size_t>(n * n)) {
    throw ConfigError("model file: '" + key + "' must be a row-major list of dim*dim numbers");
  }
  Matrix m(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) m(r, c) = as_number(j[static_cast<std::size_t>(r * n + c)], key + " entry");
  return m;
}

InvariantMeasure as_measure(const json& j, int n) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "constant") return InvariantMeasure::constant(n);
    if (s == "halfplane") {
      if (n != 2) throw ConfigError("model file: halfplane measure requires dim = 2");
      return InvariantMeasure::half_plane();
    }
    throw ConfigError("model file: unknown measure '" + s + "'");
  }
  if (j.is_object()) {
    for (const auto& [k, _] : j.items()) {
      if (k != "power" && k != "scale") throw ConfigError("model file: unknown measure field '" + k + "'");
    }
    if (!j.contains("power") || !j["power"].is_array() || j["power"].size() != static_cast<std::size_t>(n)) {
      throw ConfigError("model file: power measure needs 'power' with dim exponents");
    }
    std::vector<double> p;
    for (const auto& x : j["power"]) p.push_back(as_number(x, "measure exponent"));
    const double scale = j.contains("scale") ? as_number(j["scale"], "measure scale") : 1.0;
    return InvariantMeasure::power_law(std::move(p), scale);
  }
  throw ConfigError("model file: measure must be a string or an object");
}

double bound(const json& j, double unbounded) {
  if (j.is_null()) return unbounded;
  return as_number(j, "domain bound");
}

Domain as_domain(const json& j, int n) {
  if (!j.is_array() || j.size() != static_cast<std::size_t>(n)) {
    throw ConfigError("model file: 'domain' must list one [min, max] pair per coordinate");
  }
  const double inf = std::numeric_limits<double>::infinity();
  Domain d;
  for (const auto& pair : j) {
    if (!pair.is_array() || pair.size() != 2) throw ConfigError("model file: domain entries must be [min, max]");
    d.push_back(Interval{bound(pair[0], -inf), bound(pair[1], inf)});
  }
  return d;
}

json bound_json(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

}  // namespace

ModelSpec parse_model(std::string_view text) {
  auto entries = split_entries(text);
  if (!entries.contains("dim")) throw ConfigError("model file: missing 'dim'");
  const json& jdim = entries["dim"];
  if (!jdim.is_number_integer() || jdim.get<int>() <= 0) throw ConfigError("model file: 'dim' must be a positive integer");
  const int n = jdim.get<int>();

  if (entries.contains("name") && !entries["name"].is_string()) throw ConfigError("model file: 'name' must be a string");
  const std::string name = entries.contains("name") ? entries["name"].get<std::string>() : std::string("custom");

  std::vector<BracketEntry> brackets;
  if (entries.contains("f")) {
    const json& jf = entries["f"];
    if (!jf.is_array()) throw ConfigError("model file: 'f' must be a list of [a, b, c, value]");
    for (const auto& t : jf) {
      if (!t.is_array() || t.size() != 4 || !t[0].is_number_integer() || !t[1].is_number_integer() ||
          !t[2].is_number_integer()) {
        throw ConfigError("model file: 'f' entries must be [a, b, c, value] with integer indices");
      }
      brackets.push_back({t[0].get<int>(), t[1].get<int>(), t[2].get<int>(), as_number(t[3], "f value")});
    }
  }
  auto algebra = StructureConstants::from_entries(n, brackets);
  const Matrix zero = Matrix::Zero(n, n);
  KineticMetric metric(entries.contains("G") ? as_matrix(entries["G"], n, "G") : Matrix(Matrix::Identity(n, n)));
  DissipationTensor gamma(entries.contains("Gamma") ? as_matrix(entries["Gamma"], n, "Gamma") : zero);
  NoiseCovariance noise(entries.contains("D") ? as_matrix(entries["D"], n, "D") : zero);
  InvariantMeasure measure = entries.contains("measure") ? as_measure(entries["measure"], n) : InvariantMeasure::constant(n);
  Domain domain = entries.contains("domain") ? as_domain(entries["domain"], n) : Domain{};
  return ModelSpec(name, std::move(algebra), std::move(metric), std::move(gamma), std::move(noise), std::move(measure),
                   std::move(domain));
}

ModelSpec read_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open model file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_model(ss.str());
}

ModelSpec load_model(const std::string& ref) {
  if (is_builtin_model(ref)) return builtin_model(ref);
  return read_model_file(ref);
}

void write_model(std::ostream& os, const ModelSpec& model) {
  const int n = model.dim();
  auto matrix_json = [n](const Matrix& m) {
    json arr = json::array();
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) arr.push_back(m(r, c));
    return arr;
  };
  json f = json::array();
  const auto& alg = model.algebra();
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      for (int c = 0; c < n; ++c)
        if (alg(a, b, c) != 0.0) f.push_back({a, b, c, alg(a, b, c)});

  json measure;
  const auto& mu = model.measure();
  switch (mu.kind()) {
    case InvariantMeasure::Kind::Constant:
      measure = "constant";
      break;
    case InvariantMeasure::Kind::HalfPlane:
      measure = "halfplane";
      break;
    case InvariantMeasure::Kind::Custom:
      measure = {{"power", mu.exponents()}, {"scale", mu.scale()}};
      break;
  }
  json domain = json::array();
  for (const auto& iv : model.domain()) domain.push_back({bound_json(iv.lo), bound_json(iv.hi)});

  os << "name = " << json(model.name()).dump() << "\n";
  os << "dim = " << n << "\n";
  os << "f = " << f.dump() << "\n";
  os << "G = " << matrix_json(model.metric().matrix()).dump() << "\n";
  os << "Gamma = " << matrix_json(model.dissipation().matrix()).dump() << "\n";
  os << "D = " << matrix_json(model.noise().matrix()).dump() << "\n";
  os << "measure = " << measure.dump() << "\n";
  os << "domain = " << domain.dump() << "\n";
}

}  // namespace eaf
