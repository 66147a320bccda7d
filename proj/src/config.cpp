#include "regobs/config.hpp"

#include "regobs/errors.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace regobs {

namespace {

struct Entry {
  std::string value;
  int line = 0;
  bool used = false;
};

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(std::string_view s, int line, const std::string& key) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end) {
    throw ParseError(key + ": expected a number, got '" + std::string(s) + "'",
                     line);
  }
  return v;
}

long long to_int(std::string_view s, int line, const std::string& key) {
  long long v = 0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end) {
    throw ParseError(key + ": expected an integer, got '" + std::string(s) + "'",
                     line);
  }
  return v;
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t k = 0;
  while (k < s.size()) {
    while (k < s.size() && (s[k] == ',' || s[k] == ' ' || s[k] == '\t')) ++k;
    const auto b = k;
    while (k < s.size() && s[k] != ',' && s[k] != ' ' && s[k] != '\t') ++k;
    if (k > b) out.push_back(s.substr(b, k - b));
  }
  return out;
}

class Table {
 public:
  void add(std::string key, std::string value, int line) {
    if (entries_.count(key)) throw ParseError("duplicate key " + key, line);
    entries_.emplace(std::move(key), Entry{std::move(value), line});
  }

  const Entry* find(const std::string& key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return nullptr;
    it->second.used = true;
    return &it->second;
  }

  void number(const std::string& key, double& out) {
    if (const auto* e = find(key)) out = to_double(e->value, e->line, key);
  }

  void integer(const std::string& key, int& out) {
    if (const auto* e = find(key)) out = static_cast<int>(to_int(e->value, e->line, key));
  }

  void numbers(const std::string& key, std::vector<double>& out,
               std::size_t expected = 0) {
    const auto* e = find(key);
    if (!e) return;
    out.clear();
    for (auto tok : split_list(e->value)) out.push_back(to_double(tok, e->line, key));
    if (expected && out.size() != expected) {
      throw ParseError(key + ": expected " + std::to_string(expected) + " values",
                       e->line);
    }
  }

  void flag(const std::string& key, bool& out) {
    const auto* e = find(key);
    if (!e) return;
    if (e->value == "true" || e->value == "1" || e->value == "yes") {
      out = true;
    } else if (e->value == "false" || e->value == "0" || e->value == "no") {
      out = false;
    } else {
      throw ParseError(key + ": expected true or false", e->line);
    }
  }

  template <typename T, std::size_t N>
  void choice(const std::string& key, T& out,
              const std::array<std::pair<const char*, T>, N>& options) {
    const auto* e = find(key);
    if (!e) return;
    for (const auto& [name, val] : options) {
      if (e->value == name) {
        out = val;
        return;
      }
    }
    throw ParseError(key + ": unknown value '" + e->value + "'", e->line);
  }

  std::string text(const std::string& key, std::string fallback) {
    const auto* e = find(key);
    return e ? e->value : fallback;
  }

  int line_of(const std::string& key) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? 0 : it->second.line;
  }

  /// Indices k appearing as `prefix.k.*`, sorted.
  std::vector<long long> indices(const std::string& prefix) const {
    std::vector<long long> out;
    for (const auto& [key, e] : entries_) {
      if (key.rfind(prefix + ".", 0) != 0) continue;
      const auto rest = std::string_view(key).substr(prefix.size() + 1);
      const auto dot = rest.find('.');
      if (dot == std::string_view::npos) {
        throw ParseError("malformed key " + key, e.line);
      }
      const auto idx = to_int(rest.substr(0, dot), e.line, key);
      if (idx < 1) throw ParseError(key + ": index must be >= 1", e.line);
      if (std::find(out.begin(), out.end(), idx) == out.end()) out.push_back(idx);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  void reject_unused() const {
    for (const auto& [key, e] : entries_) {
      if (!e.used) throw ParseError("unknown key " + key, e.line);
    }
  }

 private:
  std::map<std::string, Entry> entries_;
};

constexpr std::array<std::pair<const char*, Edge>, 4> kEdges{{
    {"bottom", Edge::Bottom}, {"top", Edge::Top}, {"left", Edge::Left}, {"right", Edge::Right}}};
constexpr std::array<std::pair<const char*, WeightKind>, 3> kWeights{{
    {"uniform", WeightKind::Uniform},
    {"sine", WeightKind::SeparableSine},
    {"tabulated", WeightKind::Tabulated}}};

const char* edge_name(Edge e) {
  for (const auto& [n, v] : kEdges) {
    if (v == e) return n;
  }
  return "bottom";
}

const char* weight_name(WeightKind w) {
  for (const auto& [n, v] : kWeights) {
    if (v == w) return n;
  }
  return "uniform";
}

Rect to_rect(const std::vector<double>& v) { return {v[0], v[1], v[2], v[3]}; }

SensorSpec read_shape(Table& t, const std::string& p, const Domain& d) {
  const std::string kind = t.text(p + ".kind", "pointwise");
  const int line = t.line_of(p + ".kind");
  if (kind == "pointwise") {
    std::vector<double> loc;
    t.numbers(p + ".location", loc, 2);
    if (loc.empty()) throw ValidationError(p + ".location is required");
    return SensorSpec::pointwise({loc[0], loc[1]});
  }
  if (kind == "zone") {
    std::vector<double> sup;
    t.numbers(p + ".support", sup, 4);
    if (sup.empty()) throw ValidationError(p + ".support is required");
    WeightKind w = WeightKind::Uniform;
    t.choice(p + ".weight", w, kWeights);
    TabulatedWeight table;
    if (w == WeightKind::Tabulated) {
      std::vector<double> grid;
      t.numbers(p + ".grid", grid, 2);
      t.numbers(p + ".samples", table.samples);
      if (grid.empty()) throw ValidationError(p + ".grid is required for tabulated weights");
      table.n1 = static_cast<int>(grid[0]);
      table.n2 = static_cast<int>(grid[1]);
    }
    return SensorSpec::zone(to_rect(sup), w, std::move(table));
  }
  if (kind == "boundary_strip") {
    Edge e = Edge::Bottom;
    t.choice(p + ".edge", e, kEdges);
    double from = 0.0, to = 0.0, width = 0.0;
    t.number(p + ".from", from);
    t.number(p + ".to", to);
    t.number(p + ".width", width);
    try {
      return SensorSpec::boundary_strip(d, static_cast<int>(e), from, to, width);
    } catch (const DomainError& err) {
      throw ValidationError(p + ": " + err.what());
    }
  }
  throw ParseError(p + ".kind: unknown value '" + kind + "'", line);
}

void write_shape(std::ostringstream& os, const std::string& p,
                 const SensorSpec& s) {
  if (!s.is_zone()) {
    const auto b = s.as_point().location;
    os << p << ".kind = pointwise\n"
       << p << ".location = " << format_double(b.x1) << ", "
       << format_double(b.x2) << "\n";
    return;
  }
  const auto& z = s.as_zone();
  os << p << ".kind = zone\n"
     << p << ".support = " << format_double(z.support.lo1) << ", "
     << format_double(z.support.hi1) << ", " << format_double(z.support.lo2)
     << ", " << format_double(z.support.hi2) << "\n"
     << p << ".weight = " << weight_name(z.weight) << "\n";
  if (z.weight == WeightKind::Tabulated) {
    os << p << ".grid = " << z.table.n1 << ", " << z.table.n2 << "\n"
       << p << ".samples =";
    for (double v : z.table.samples) os << " " << format_double(v);
    os << "\n";
  }
}

template <typename T>
std::string join(const std::vector<T>& v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k) s += ", ";
    s += format_double(v[k]);
  }
  return s;
}

}  // namespace

std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) return "nan";
  return std::string(buf.data(), p);
}

ExperimentConfig parse_config(std::string_view text) {
  Table t;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos
                                                            : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError("expected 'section.key = value'", line_no);
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty() || key.find('.') == std::string_view::npos) {
      throw ParseError("key must be 'section.key'", line_no);
    }
    t.add(std::string(key), std::string(value), line_no);
  }

  ExperimentConfig c;
  t.number("domain.alpha1", c.domain.alpha1);
  t.number("domain.beta1", c.domain.beta1);
  t.number("domain.alpha2", c.domain.alpha2);
  t.number("domain.beta2", c.domain.beta2);
  t.integer("domain.n_modes", c.n_modes);

  t.number("coefficients.alpha_diff", c.coefficients.alpha_diff);
  t.number("coefficients.gamma_diff", c.coefficients.gamma_diff);
  t.number("coefficients.beta_couple", c.coefficients.beta_couple);

  const std::string region_kind = t.text("region.kind", "boundary");
  if (region_kind == "boundary") {
    BoundarySegment seg = std::get<BoundarySegment>(c.region.kind);
    t.choice("region.edge", seg.edge, kEdges);
    t.number("region.from", seg.from);
    t.number("region.to", seg.to);
    c.region.kind = seg;
  } else if (region_kind == "rectangle") {
    std::vector<double> r;
    t.numbers("region.rect", r, 4);
    if (r.empty()) throw ValidationError("region.rect is required for rectangle regions");
    c.region.kind = InternalRectangle{to_rect(r)};
  } else {
    throw ParseError("region.kind: unknown value '" + region_kind + "'",
                     t.line_of("region.kind"));
  }
  t.number("region.collar_radius", c.region.collar_radius);
  t.integer("region.quadrature", c.region.quadrature_order);

  for (auto k : t.indices("sensor")) {
    c.sensors.push_back(read_shape(t, "sensor." + std::to_string(k), c.domain));
  }
  for (auto k : t.indices("actuator")) {
    const std::string p = "actuator." + std::to_string(k);
    ActuatorSpec a{read_shape(t, p, c.domain)};
    t.integer(p + ".field", a.field);
    t.number(p + ".value", a.value);
    c.actuators.push_back(std::move(a));
  }

  auto& o = c.observer;
  t.number("observer.target_margin", o.target_margin);
  t.number("observer.margin", o.margin);
  t.integer("observer.measured_field", o.measured_field);
  t.choice("observer.estimator", o.estimator,
           std::array<std::pair<const char*, EstimatorKind>, 3>{{
               {"reduced", EstimatorKind::Reduced},
               {"full", EstimatorKind::Full},
               {"both", EstimatorKind::Both}}});
  t.choice("observer.gain_method", o.gain_method,
           std::array<std::pair<const char*, GainMethod>, 2>{{
               {"lyapunov", GainMethod::LyapunovShift},
               {"least_squares", GainMethod::LeastSquares}}});
  t.number("observer.tol_rank", o.tol_rank);
  t.number("observer.tol_group", o.tol_group);
  t.number("observer.tol_rat", o.tol_rat);
  t.number("observer.gramian_horizon", o.gramian_horizon);
  t.integer("observer.gramian_nodes", o.gramian_nodes);

  auto& s = c.simulation;
  t.number("simulation.dt", s.dt);
  t.number("simulation.T", s.horizon);
  if (const auto* e = t.find("simulation.seed")) {
    const auto v = to_int(e->value, e->line, "simulation.seed");
    if (v < 0) throw ValidationError("simulation.seed must be >= 0");
    s.seed = static_cast<std::uint64_t>(v);
  }
  t.numbers("simulation.x0", s.x0);
  t.choice("simulation.estimator_init", s.estimator_init,
           std::array<std::pair<const char*, InitKind>, 2>{{
               {"zero", InitKind::Zero}, {"exact", InitKind::Exact}}});
  std::vector<double> window;
  t.numbers("simulation.fit_window", window, 2);
  if (!window.empty()) {
    s.fit_lo = window[0];
    s.fit_hi = window[1];
  }

  c.output.dir = t.text("output.dir", c.output.dir);
  t.choice("output.norm", c.output.norm,
           std::array<std::pair<const char*, NormKind>, 2>{{
               {"l2", NormKind::L2Surrogate}, {"sobolev", NormKind::SobolevHalfModal}}});
  t.flag("output.plot", c.output.plot);

  t.reject_unused();
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void validate(const ExperimentConfig& c) {
  auto fail = [](const std::string& msg) { throw ValidationError(msg); };
  if (!(c.domain.beta1 > c.domain.alpha1)) fail("domain.beta1 must be > domain.alpha1");
  if (!(c.domain.beta2 > c.domain.alpha2)) fail("domain.beta2 must be > domain.alpha2");
  if (c.n_modes < 1) fail("domain.n_modes must be >= 1");
  if (!(c.coefficients.alpha_diff > 0.0)) fail("coefficients.alpha_diff must be > 0");
  if (!(c.coefficients.gamma_diff > 0.0)) fail("coefficients.gamma_diff must be > 0");
  try {
    c.region.validate(c.domain);
  } catch (const DomainError& e) {
    fail(std::string("region: ") + e.what());
  }
  for (std::size_t k = 0; k < c.sensors.size(); ++k) {
    try {
      c.sensors[k].validate(c.domain);
    } catch (const DomainError& e) {
      fail("sensor." + std::to_string(k + 1) + ": " + e.what());
    }
  }
  for (std::size_t k = 0; k < c.actuators.size(); ++k) {
    const auto p = "actuator." + std::to_string(k + 1);
    try {
      c.actuators[k].shape.validate(c.domain);
    } catch (const DomainError& e) {
      fail(p + ": " + e.what());
    }
    if (c.actuators[k].field != 1 && c.actuators[k].field != 2) {
      fail(p + ".field must be 1 or 2");
    }
  }
  const auto& o = c.observer;
  if (!(o.target_margin > 0.0)) fail("observer.target_margin must be > 0");
  if (!(o.margin >= 0.0)) fail("observer.margin must be >= 0");
  if (o.measured_field != 1 && o.measured_field != 2) {
    fail("observer.measured_field must be 1 or 2");
  }
  if (!(o.tol_rank > 0.0)) fail("observer.tol_rank must be > 0");
  if (!(o.tol_group > 0.0)) fail("observer.tol_group must be > 0");
  if (!(o.tol_rat > 0.0)) fail("observer.tol_rat must be > 0");
  if (!(o.gramian_horizon > 0.0)) fail("observer.gramian_horizon must be > 0");
  if (o.gramian_nodes < 1) fail("observer.gramian_nodes must be >= 1");
  const auto& s = c.simulation;
  if (!(s.dt > 0.0)) fail("simulation.dt must be > 0");
  if (!(s.horizon > s.dt)) fail("simulation.T must be > simulation.dt");
  const auto n = static_cast<std::size_t>(c.n_modes) * c.n_modes;
  if (!s.x0.empty() && s.x0.size() != 2 * n) {
    fail("simulation.x0 must hold 2 * n_modes^2 = " + std::to_string(2 * n) +
         " values");
  }
  if (!(s.fit_hi > s.fit_lo)) fail("simulation.fit_window must satisfy lo < hi");
  if (c.output.dir.empty()) fail("output.dir must not be empty");
}

void require_sensors(const ExperimentConfig& cfg) {
  if (cfg.sensors.empty()) throw ValidationError("observer requires ≥ 1 sensor");
}

std::string to_text(const ExperimentConfig& c) {
  std::ostringstream os;
  const auto f = [](double v) { return format_double(v); };
  os << "domain.alpha1 = " << f(c.domain.alpha1) << "\n"
     << "domain.beta1 = " << f(c.domain.beta1) << "\n"
     << "domain.alpha2 = " << f(c.domain.alpha2) << "\n"
     << "domain.beta2 = " << f(c.domain.beta2) << "\n"
     << "domain.n_modes = " << c.n_modes << "\n"
     << "coefficients.alpha_diff = " << f(c.coefficients.alpha_diff) << "\n"
     << "coefficients.gamma_diff = " << f(c.coefficients.gamma_diff) << "\n"
     << "coefficients.beta_couple = " << f(c.coefficients.beta_couple) << "\n";
  if (const auto* seg = std::get_if<BoundarySegment>(&c.region.kind)) {
    os << "region.kind = boundary\n"
       << "region.edge = " << edge_name(seg->edge) << "\n"
       << "region.from = " << f(seg->from) << "\n"
       << "region.to = " << f(seg->to) << "\n";
  } else {
    const auto& r = std::get<InternalRectangle>(c.region.kind).rect;
    os << "region.kind = rectangle\n"
       << "region.rect = " << f(r.lo1) << ", " << f(r.hi1) << ", " << f(r.lo2)
       << ", " << f(r.hi2) << "\n";
  }
  os << "region.collar_radius = " << f(c.region.collar_radius) << "\n"
     << "region.quadrature = " << c.region.quadrature_order << "\n";
  for (std::size_t k = 0; k < c.sensors.size(); ++k) {
    write_shape(os, "sensor." + std::to_string(k + 1), c.sensors[k]);
  }
  for (std::size_t k = 0; k < c.actuators.size(); ++k) {
    const auto p = "actuator." + std::to_string(k + 1);
    write_shape(os, p, c.actuators[k].shape);
    os << p << ".field = " << c.actuators[k].field << "\n"
       << p << ".value = " << f(c.actuators[k].value) << "\n";
  }
  const auto& o = c.observer;
  const char* est = o.estimator == EstimatorKind::Reduced ? "reduced"
                    : o.estimator == EstimatorKind::Full  ? "full"
                                                          : "both";
  os << "observer.target_margin = " << f(o.target_margin) << "\n"
     << "observer.margin = " << f(o.margin) << "\n"
     << "observer.measured_field = " << o.measured_field << "\n"
     << "observer.estimator = " << est << "\n"
     << "observer.gain_method = "
     << (o.gain_method == GainMethod::LyapunovShift ? "lyapunov" : "least_squares")
     << "\n"
     << "observer.tol_rank = " << f(o.tol_rank) << "\n"
     << "observer.tol_group = " << f(o.tol_group) << "\n"
     << "observer.tol_rat = " << f(o.tol_rat) << "\n"
     << "observer.gramian_horizon = " << f(o.gramian_horizon) << "\n"
     << "observer.gramian_nodes = " << o.gramian_nodes << "\n";
  const auto& s = c.simulation;
  os << "simulation.dt = " << f(s.dt) << "\n"
     << "simulation.T = " << f(s.horizon) << "\n"
     << "simulation.seed = " << s.seed << "\n";
  if (!s.x0.empty()) os << "simulation.x0 = " << join(s.x0) << "\n";
  os << "simulation.estimator_init = "
     << (s.estimator_init == InitKind::Zero ? "zero" : "exact") << "\n"
     << "simulation.fit_window = " << f(s.fit_lo) << ", " << f(s.fit_hi) << "\n"
     << "output.dir = " << c.output.dir << "\n"
     << "output.norm = " << (c.output.norm == NormKind::L2Surrogate ? "l2" : "sobolev")
     << "\n"
     << "output.plot = " << (c.output.plot ? "true" : "false") << "\n";
  return os.str();
}

}  // namespace regobs
