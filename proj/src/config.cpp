#include "kinshape/config.hpp"

#include "kinshape/report.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace kinshape {

using nlohmann::json;

// ---------------------------------------------------------------------------
// TOML subset reader

namespace {

class TomlReader {
 public:
  explicit TomlReader(const std::string& text) : s_(text) {}

  json parse() {
    json root = json::object();
    json* table = &root;
    while (true) {
      skip_blank_lines();
      if (eof()) break;
      if (peek() == '[') {
        table = &open_table(root);
      } else {
        const std::string key = read_key();
        skip_ws();
        expect('=');
        skip_ws();
        if (table->contains(key)) fail("duplicate key '" + key + "'");
        (*table)[key] = read_value();
      }
      end_of_line();
    }
    return root;
  }

 private:
  const std::string& s_;
  std::size_t i_ = 0;
  int line_ = 1;

  bool eof() const { return i_ >= s_.size(); }
  char peek() const { return eof() ? '\0' : s_[i_]; }
  char get() {
    const char c = s_[i_++];
    if (c == '\n') ++line_;
    return c;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError("toml line " + std::to_string(line_) + ": " + msg);
  }

  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    get();
  }

  void skip_ws() {
    while (peek() == ' ' || peek() == '\t') get();
  }

  void skip_comment() {
    if (peek() == '#')
      while (!eof() && peek() != '\n') get();
  }

  void skip_blank_lines() {
    while (!eof()) {
      skip_ws();
      skip_comment();
      if (peek() == '\r') get();
      if (peek() == '\n') {
        get();
        continue;
      }
      break;
    }
  }

  // whitespace, newlines and comments inside arrays
  void skip_array_space() {
    while (!eof()) {
      skip_ws();
      skip_comment();
      if (peek() == '\n' || peek() == '\r') {
        get();
        continue;
      }
      break;
    }
  }

  void end_of_line() {
    skip_ws();
    skip_comment();
    if (peek() == '\r') get();
    if (eof()) return;
    if (peek() != '\n') fail("unexpected trailing characters");
    get();
  }

  static bool bare(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  }

  std::string read_key() {
    std::string key;
    while (bare(peek())) key += get();
    if (key.empty()) fail("expected a key");
    skip_ws();
    if (peek() == '.') fail("dotted keys are not supported");
    return key;
  }

  json& open_table(json& root) {
    expect('[');
    if (peek() == '[') fail("arrays of tables are not supported");
    skip_ws();
    const std::string name = read_key();
    skip_ws();
    expect(']');
    if (root.contains(name)) fail("duplicate table [" + name + "]");
    root[name] = json::object();
    return root[name];
  }

  json read_value() {
    const char c = peek();
    if (c == '"') return read_string();
    if (c == '[') return read_array();
    if (c == 't' || c == 'f') return read_bool();
    if (c == '{') fail("inline tables are not supported");
    return read_number();
  }

  json read_string() {
    expect('"');
    std::string out;
    while (true) {
      if (eof() || peek() == '\n') fail("unterminated string");
      const char c = get();
      if (c == '"') break;
      if (c != '\\') {
        out += c;
        continue;
      }
      const char e = eof() ? '\0' : get();
      switch (e) {
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        default: fail("unsupported escape sequence");
      }
    }
    return out;
  }

  json read_bool() {
    if (s_.compare(i_, 4, "true") == 0) {
      i_ += 4;
      return true;
    }
    if (s_.compare(i_, 5, "false") == 0) {
      i_ += 5;
      return false;
    }
    fail("invalid value");
  }

  json read_number() {
    std::string tok;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) ||
                      peek() == '+' || peek() == '-' || peek() == '.' ||
                      peek() == '_'))
      tok += get();
    if (tok.empty()) fail("expected a value");
    std::string clean;
    for (std::size_t k = 0; k < tok.size(); ++k) {
      if (tok[k] != '_') {
        clean += tok[k];
        continue;
      }
      const bool between = k > 0 && k + 1 < tok.size() &&
                           std::isdigit(static_cast<unsigned char>(tok[k - 1])) &&
                           std::isdigit(static_cast<unsigned char>(tok[k + 1]));
      if (!between) fail("misplaced underscore in '" + tok + "'");
    }
    const bool is_float = clean.find_first_of(".eE") != std::string::npos ||
                          clean.find("inf") != std::string::npos ||
                          clean.find("nan") != std::string::npos;
    try {
      std::size_t used = 0;
      if (is_float) {
        const double v = std::stod(clean, &used);
        if (used == clean.size()) return v;
      } else {
        const long long v = std::stoll(clean, &used, 10);
        if (used == clean.size()) return v;
      }
    } catch (const std::exception&) {
    }
    fail("invalid number '" + tok + "'");
  }

  json read_array() {
    expect('[');
    json arr = json::array();
    skip_array_space();
    while (peek() != ']') {
      arr.push_back(read_value());
      skip_array_space();
      if (peek() == ',') {
        get();
        skip_array_space();
      } else if (peek() != ']') {
        fail("expected ',' or ']' in array");
      }
    }
    expect(']');
    return arr;
  }
};

// ---------------------------------------------------------------------------
// Schema helpers

class Section {
 public:
  Section(const json& doc, std::string name) : name_(std::move(name)) {
    if (doc.contains(name_)) {
      if (!doc.at(name_).is_object())
        throw ConfigError(name_ + ": must be a table");
      table_ = &doc.at(name_);
    }
  }

  bool has(const std::string& key) const {
    return table_ && table_->contains(key);
  }

  std::string path(const std::string& key) const { return name_ + "." + key; }

  const json& at(const std::string& key) {
    used_.insert(key);
    return table_->at(key);
  }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const json& v = at(key);
    if (!v.is_number()) throw ConfigError(path(key) + ": must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(path(key) + ": must be finite");
    return d;
  }

  double positive(const std::string& key, double fallback) {
    const double d = number(key, fallback);
    if (!(d > 0.0)) throw ConfigError(path(key) + ": must be > 0");
    return d;
  }

  long integer(const std::string& key, long fallback, long min) {
    if (!has(key)) return fallback;
    const json& v = at(key);
    if (!v.is_number_integer())
      throw ConfigError(path(key) + ": must be an integer");
    const long x = v.get<long>();
    if (x < min)
      throw ConfigError(path(key) + ": must be >= " + std::to_string(min));
    return x;
  }

  std::string string(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const json& v = at(key);
    if (!v.is_string()) throw ConfigError(path(key) + ": must be a string");
    return v.get<std::string>();
  }

  /// Array of `n` numbers, or a single number broadcast to all entries.
  Vec vector(const std::string& key, const Vec& fallback, Eigen::Index n) {
    if (!has(key)) return fallback;
    const json& v = at(key);
    if (v.is_number()) return Vec::Constant(n, v.get<double>());
    if (!v.is_array() || static_cast<Eigen::Index>(v.size()) != n)
      throw ConfigError(path(key) + ": must be an array of " +
                        std::to_string(n) + " numbers");
    Vec out(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const json& e = v[static_cast<std::size_t>(i)];
      if (!e.is_number()) throw ConfigError(path(key) + ": entries must be numbers");
      out[i] = e.get<double>();
    }
    if (!out.allFinite()) throw ConfigError(path(key) + ": entries must be finite");
    return out;
  }

  /// Number (times identity), array (diagonal) or array of rows.
  Mat matrix(const std::string& key, const Mat& fallback, Eigen::Index rows,
             Eigen::Index cols) {
    if (!has(key)) return fallback;
    const json& v = at(key);
    if (v.is_number() || (v.is_array() && !v.empty() && v[0].is_number())) {
      if (rows != cols)
        throw ConfigError(path(key) + ": must be a " + std::to_string(rows) +
                          "x" + std::to_string(cols) + " array of rows");
      return vector(key, Vec(), rows).asDiagonal();
    }
    if (!v.is_array() || static_cast<Eigen::Index>(v.size()) != rows)
      throw ConfigError(path(key) + ": must have " + std::to_string(rows) +
                        " rows");
    Mat out(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      const json& row = v[static_cast<std::size_t>(i)];
      if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
        throw ConfigError(path(key) + ": row " + std::to_string(i) + " must have " +
                          std::to_string(cols) + " entries");
      for (Eigen::Index j = 0; j < cols; ++j) {
        const json& e = row[static_cast<std::size_t>(j)];
        if (!e.is_number())
          throw ConfigError(path(key) + ": entries must be numbers");
        out(i, j) = e.get<double>();
      }
    }
    if (!out.allFinite()) throw ConfigError(path(key) + ": entries must be finite");
    return out;
  }

  /// Number of rows of a matrix-valued entry, for dimension discovery.
  Eigen::Index rows_of(const std::string& key) const {
    if (!has(key)) throw ConfigError(path(key) + ": required");
    const json& v = table_->at(key);
    if (!v.is_array() || v.empty())
      throw ConfigError(path(key) + ": must be a non-empty array of rows");
    return static_cast<Eigen::Index>(v.size());
  }
  Eigen::Index cols_of(const std::string& key) const {
    const json& v = table_->at(key);
    if (!v[0].is_array() || v[0].empty())
      throw ConfigError(path(key) + ": must be a non-empty array of rows");
    return static_cast<Eigen::Index>(v[0].size());
  }

  void reject_unknown() const {
    if (!table_) return;
    for (const auto& [key, _] : table_->items())
      if (!used_.count(key)) throw ConfigError(path(key) + ": unknown key");
  }

 private:
  std::string name_;
  const json* table_ = nullptr;
  std::set<std::string> used_;
};

Mat symmetric_pd(Section& sec, const std::string& key, const Mat& m) {
  if (!m.isApprox(m.transpose(), 1e-12) ||
      Eigen::LLT<Mat>(m).info() != Eigen::Success)
    throw ConfigError(sec.path(key) + ": must be symmetric positive definite");
  return m;
}

}  // namespace

json parse_toml(const std::string& text) { return TomlReader(text).parse(); }

// ---------------------------------------------------------------------------

ExperimentConfig load_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config: top level must be a table");
  for (const auto& [key, _] : doc.items())
    if (key != "model" && key != "design" && key != "sim" && key != "output" &&
        key != "verify")
      throw ConfigError(key + ": unknown section");

  ExperimentConfig cfg;
  Section model(doc, "model");
  if (!model.has("name")) throw ConfigError("model.name: required");
  cfg.model_name = model.string("name", "");
  Eigen::Index n = 0, m = 0;

  if (cfg.model_name == "pendubot") {
    auto& p = cfg.pendubot;
    p.m1 = model.positive("m1", p.m1);
    p.m2 = model.positive("m2", p.m2);
    p.l1 = model.positive("l1", p.l1);
    p.l2 = model.positive("l2", p.l2);
    p.lc1 = model.positive("lc1", p.lc1);
    p.lc2 = model.positive("lc2", p.lc2);
    p.i1 = model.positive("i1", p.i1);
    p.i2 = model.positive("i2", p.i2);
    p.g = model.positive("g", p.g);
    try {
      p.validate();
    } catch (const ModelError& e) {
      throw ConfigError(std::string("model: ") + e.what());
    }
    n = 2;
    m = 1;
  } else if (cfg.model_name == "touch") {
    auto& t = cfg.touch;
    t.phi1 = model.positive("phi1", t.phi1);
    t.phi2 = model.number("phi2", t.phi2);
    t.phi3 = model.positive("phi3", t.phi3);
    t.phi4 = model.number("phi4", t.phi4);
    t.phi5 = model.number("phi5", t.phi5);
    t.g = model.positive("g", t.g);
    try {
      t.validate();
    } catch (const ModelError& e) {
      throw ConfigError(std::string("model: ") + e.what());
    }
    n = 3;
    m = 3;
  } else if (cfg.model_name == "custom") {
    n = model.rows_of("mass");
    m = model.cols_of("input_map");
    cfg.custom_mass = symmetric_pd(model, "mass", model.matrix("mass", Mat(), n, n));
    cfg.custom_stiffness = model.matrix("stiffness", Mat::Zero(n, n), n, n);
    cfg.custom_input_map = model.matrix("input_map", Mat(), n, m);
    if (m > n) throw ConfigError("model.input_map: more columns than rows");
  } else {
    throw ConfigError("model.name: must be pendubot, touch or custom");
  }
  model.reject_unknown();

  Section design(doc, "design");
  cfg.sim.thresholds.x = design.positive("x_threshold", cfg.sim.thresholds.x);
  cfg.sim.thresholds.p = design.positive("p_threshold", cfg.sim.thresholds.p);
  Vec q_star(n);
  if (cfg.model_name == "pendubot") {
    auto& g = cfg.pendubot_gains;
    g.rho = design.number("rho", g.rho);
    g.k3 = design.number("k3", g.k3);
    g.kp = design.number("kp", g.kp);
    g.kv = design.number("kv", g.kv);
    if (g.k3 == 0.0) throw ConfigError("design.k3: must be nonzero");
    q_star << std::numbers::pi, 0.0;
  } else if (cfg.model_name == "touch") {
    auto& g = cfg.touch_gains;
    g.kappa = design.positive("kappa", g.kappa);
    g.kp = design.vector("kp", g.kp, 3);
    g.kv = design.matrix("kv", g.kv, 3, 3);
    g.q_star = design.vector("q_star", g.q_star, 3);
    q_star = g.q_star;
  } else {
    cfg.custom_mass_d = symmetric_pd(
        design, "mass_d", design.matrix("mass_d", Mat::Identity(n, n), n, n));
    cfg.custom_kp = design.matrix("kp", Mat::Identity(n, n), n, n);
    cfg.custom_kv = design.matrix("kv", Mat::Identity(m, m), m, m);
    cfg.custom_q_star = design.vector("q_star", Vec::Zero(n), n);
    q_star = cfg.custom_q_star;
  }
  design.reject_unknown();

  Section sim(doc, "sim");
  const bool pendubot = cfg.model_name == "pendubot";
  const bool touch = cfg.model_name == "touch";
  Vec q0_default = q_star;
  if (pendubot) q0_default << std::numbers::pi - 0.2, 0.2;
  if (touch) q0_default << 0.0, std::numbers::pi / 15.0, -std::numbers::pi / 2.0;
  const double dt_default = pendubot ? 1e-4 : 1e-3;
  const double tf_default = pendubot ? 30.0 : 60.0;

  cfg.sim.dt = sim.number("dt", dt_default);
  if (!(cfg.sim.dt > 0.0)) throw ConfigError("sim.dt: must be > 0");
  cfg.sim.t_final = sim.number("t_final", tf_default);
  if (!(cfg.sim.t_final >= cfg.sim.dt))
    throw ConfigError("sim.t_final: must be >= sim.dt");
  cfg.sim.substeps = static_cast<int>(sim.integer("substeps", 1, 1));
  cfg.sim.record_stride = static_cast<int>(sim.integer("record_stride", 1, 1));
  cfg.sim.initial_state.q = sim.vector("q0", q0_default, n);
  Vec p0_default = Vec::Zero(n);
  if (pendubot) p0_default[0] = 0.3;
  cfg.sim.initial_state.p = sim.vector("p0", p0_default, n);
  cfg.settle_tol = sim.positive("settle_tol", cfg.settle_tol);
  try {
    cfg.sim.controller = parse_controller(sim.string("controller", "reduced"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("sim.controller: ") + e.what());
  }
  sim.reject_unknown();

  Section output(doc, "output");
  cfg.output_dir = output.string("directory", "out");
  if (output.has("formats")) {
    const json& f = output.at("formats");
    if (!f.is_array()) throw ConfigError("output.formats: must be an array");
    cfg.write_csv = cfg.write_json = false;
    for (const auto& e : f) {
      const std::string s = e.is_string() ? e.get<std::string>() : "";
      if (s == "csv") cfg.write_csv = true;
      else if (s == "json") cfg.write_json = true;
      else throw ConfigError("output.formats: entries must be \"csv\" or \"json\"");
    }
  }
  output.reject_unknown();

  Section verify(doc, "verify");
  cfg.verify_samples = static_cast<int>(verify.integer("samples", 1000, 1));
  cfg.verify_seed = static_cast<std::uint64_t>(verify.integer("seed", 1, 0));
  Vec q_half = Vec::Constant(n, 1.0), p_half = Vec::Constant(n, 1.0);
  if (pendubot) {
    q_half = Vec::Constant(n, 0.4);
    p_half = Vec::Constant(n, 2.0);
  }
  if (touch) {
    q_half << 1.0, 0.6, 0.8;
    p_half = Vec::Constant(n, 0.01);
  }
  Vec q_mid = q_star;
  if (touch) q_mid << 0.0, 0.5, -1.0;
  cfg.verify_box.q_low = verify.vector("q_low", q_mid - q_half, n);
  cfg.verify_box.q_high = verify.vector("q_high", q_mid + q_half, n);
  cfg.verify_box.p_low = verify.vector("p_low", -p_half, n);
  cfg.verify_box.p_high = verify.vector("p_high", p_half, n);
  if (((cfg.verify_box.q_high - cfg.verify_box.q_low).array() < 0.0).any() ||
      ((cfg.verify_box.p_high - cfg.verify_box.p_low).array() < 0.0).any())
    throw ConfigError("verify: box upper bounds must not be below lower bounds");
  verify.reject_unknown();
  return cfg;
}

ExperimentConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open");
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_config(parse_toml(ss.str()));
}

std::unique_ptr<MechanicalModel> ExperimentConfig::make_model() const {
  if (model_name == "pendubot") return std::make_unique<Pendubot>(pendubot);
  if (model_name == "touch") return std::make_unique<Touch>(touch);
  return std::make_unique<QuadraticModel>(custom_mass, custom_stiffness,
                                          custom_input_map);
}

std::unique_ptr<ShapingDesign> ExperimentConfig::make_design(
    const MechanicalModel& model) const {
  if (model_name == "pendubot")
    return std::make_unique<PendubotDesign>(dynamic_cast<const Pendubot&>(model),
                                            pendubot_gains, sim.thresholds.p);
  if (model_name == "touch") return std::make_unique<TouchDesign>(touch_gains);
  return std::make_unique<QuadraticDesign>(custom_mass_d, custom_kp, custom_kv,
                                           custom_q_star);
}


json ExperimentConfig::describe() const {
  json j;
  j["model"]["name"] = model_name;
  if (model_name == "pendubot") {
    const auto& p = pendubot;
    j["model"]["params"] = {{"m1", p.m1}, {"m2", p.m2}, {"l1", p.l1},
                            {"l2", p.l2}, {"lc1", p.lc1}, {"lc2", p.lc2},
                            {"i1", p.i1}, {"i2", p.i2}, {"g", p.g},
                            {"c1", p.c1()}, {"c2", p.c2()}, {"c3", p.c3()},
                            {"c4", p.c4()}, {"c5", p.c5()}};
    const auto& g = pendubot_gains;
    j["design"] = {{"rho", g.rho}, {"k3", g.k3}, {"kp", g.kp}, {"kv", g.kv}};
  } else if (model_name == "touch") {
    const auto& t = touch;
    j["model"]["params"] = {{"phi1", t.phi1}, {"phi2", t.phi2},
                            {"phi3", t.phi3}, {"phi4", t.phi4},
                            {"phi5", t.phi5}, {"g", t.g}};
    const auto& g = touch_gains;
    j["design"] = {{"kappa", g.kappa}, {"kp", to_json(g.kp)},
                   {"kv", to_json(g.kv)}, {"q_star", to_json(g.q_star)}};
  } else {
    j["model"]["params"] = {{"mass", to_json(custom_mass)},
                            {"stiffness", to_json(custom_stiffness)},
                            {"input_map", to_json(custom_input_map)}};
    j["design"] = {{"mass_d", to_json(custom_mass_d)}, {"kp", to_json(custom_kp)},
                   {"kv", to_json(custom_kv)}, {"q_star", to_json(custom_q_star)}};
  }
  j["design"]["x_threshold"] = sim.thresholds.x;
  j["design"]["p_threshold"] = sim.thresholds.p;
  j["sim"] = {{"t_final", sim.t_final},
              {"dt", sim.dt},
              {"substeps", sim.substeps},
              {"record_stride", sim.record_stride},
              {"q0", to_json(sim.initial_state.q)},
              {"p0", to_json(sim.initial_state.p)},
              {"settle_tol", settle_tol}};
  return j;
}

}  // namespace kinshape
