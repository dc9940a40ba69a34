#include "tnop/config.hpp"

#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>
#include <set>

#include "tnop/io.hpp"

namespace tnop {

using nlohmann::json;

std::string problem_name(Problem p) {
  switch (p) {
    case Problem::Lorenz63: return "lorenz63";
    case Problem::Cde: return "cde";
    case Problem::Darcy: return "darcy";
    case Problem::Kolmogorov: return "kolmogorov";
  }
  return "lorenz63";
}

Problem parse_problem(const std::string& name) {
  if (name == "lorenz63") return Problem::Lorenz63;
  if (name == "cde") return Problem::Cde;
  if (name == "darcy") return Problem::Darcy;
  if (name == "kolmogorov") return Problem::Kolmogorov;
  throw ConfigError("unknown problem '" + name + "' (expected lorenz63, cde, darcy or kolmogorov)");
}

namespace {

std::string time_grid_name(TimeGrid g) {
  switch (g) {
    case TimeGrid::Uniform: return "uniform";
    case TimeGrid::IrregularTrain: return "irregular_train";
    case TimeGrid::IrregularTest: return "irregular_test";
  }
  return "uniform";
}

TimeGrid parse_time_grid(const std::string& s) {
  if (s == "uniform") return TimeGrid::Uniform;
  if (s == "irregular_train") return TimeGrid::IrregularTrain;
  if (s == "irregular_test") return TimeGrid::IrregularTest;
  throw ConfigError("unknown time_grid '" + s + "' (expected uniform, irregular_train or irregular_test)");
}

std::string face_name(FaceAverage f) { return f == FaceAverage::Arithmetic ? "arithmetic" : "harmonic"; }

FaceAverage parse_face(const std::string& s) {
  if (s == "arithmetic") return FaceAverage::Arithmetic;
  if (s == "harmonic") return FaceAverage::Harmonic;
  throw ConfigError("unknown face average '" + s + "' (expected arithmetic or harmonic)");
}

// Number of dt steps in T, or -1 when T is not a whole multiple of dt.
long whole_steps(double T, double dt) {
  const double r = T / dt;
  const double n = std::round(r);
  return std::abs(r - n) <= 1e-9 * std::max(1.0, n) && n >= 1 ? static_cast<long>(n) : -1;
}

// One JSON object being read; keys must be consumed or finish() rejects them.
class Block {
 public:
  Block(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError("'" + where() + "' must be a JSON object");
  }

  bool has(const char* key) const { return j_.contains(key); }

  const json& raw(const char* key) {
    used_.insert(key);
    return j_.at(key);
  }

  std::string name(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  void number(const char* key, double& out) {
    if (!has(key)) return;
    const json& v = raw(key);
    if (!v.is_number()) fail(key, "a number");
    out = v.get<double>();
    if (!std::isfinite(out)) fail(key, "a finite number");
  }

  void integer(const char* key, int& out) {
    if (!has(key)) return;
    const json& v = raw(key);
    if (!v.is_number_integer()) fail(key, "an integer");
    const auto x = v.get<std::int64_t>();
    if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) fail(key, "an int");
    out = static_cast<int>(x);
  }

  void count(const char* key, std::size_t& out) {
    if (!has(key)) return;
    const json& v = raw(key);
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0) fail(key, "a non-negative integer");
    out = v.get<std::size_t>();
  }

  void count(const char* key, std::int64_t& out) {
    if (!has(key)) return;
    const json& v = raw(key);
    if (!v.is_number_integer()) fail(key, "an integer");
    out = v.get<std::int64_t>();
  }

  void seed(const char* key, std::optional<std::uint64_t>& out) {
    if (!has(key)) return;
    const json& v = raw(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
      fail(key, "a non-negative integer");
    out = v.get<std::uint64_t>();
  }

  void flag(const char* key, bool& out) {
    if (!has(key)) return;
    const json& v = raw(key);
    if (!v.is_boolean()) fail(key, "true or false");
    out = v.get<bool>();
  }

  void text(const char* key, std::string& out) {
    if (!has(key)) return;
    const json& v = raw(key);
    if (!v.is_string()) fail(key, "a string");
    out = v.get<std::string>();
  }

  template <class E, class Parse>
  void choice(const char* key, E& out, Parse parse) {
    std::string s;
    text(key, s);
    if (s.empty()) return;
    try {
      out = parse(s);
    } catch (const ConfigError& e) {
      throw ConfigError(name(key) + ": " + e.what());
    }
  }

  void integers(const char* key, std::vector<int>& out) {
    if (!has(key)) return;
    const json& v = raw(key);
    if (!v.is_array()) fail(key, "an array of integers");
    out.clear();
    for (const auto& x : v) {
      if (!x.is_number_integer()) fail(key, "an array of integers");
      out.push_back(x.get<int>());
    }
  }

  void numbers(const char* key, std::vector<double>& out) {
    if (!has(key)) return;
    const json& v = raw(key);
    if (!v.is_array()) fail(key, "an array of numbers");
    out.clear();
    for (const auto& x : v) {
      if (!x.is_number()) fail(key, "an array of numbers");
      out.push_back(x.get<double>());
    }
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) throw ConfigError("unknown key '" + name(it.key().c_str()) + "'");
  }

  [[noreturn]] void fail(const char* key, const std::string& what) const {
    throw ConfigError("'" + name(key) + "' must be " + what);
  }

  void require(bool ok, const char* key, const std::string& what) const {
    if (!ok) fail(key, what);
  }

  std::string where() const { return path_.empty() ? "<root>" : path_; }
  const std::string& path() const { return path_; }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

void read_grf(Block& b, GrfSpec& g) {
  b.number("amplitude", g.amplitude);
  b.number("shift", g.shift);
  b.number("exponent", g.exponent);
  b.integer("truncation", g.truncation);
  b.choice("push_forward", g.push_forward, parse_push_forward);
  b.number("hi", g.hi);
  b.number("lo", g.lo);
  b.require(g.amplitude > 0, "amplitude", "positive");
  b.require(g.shift >= 0, "shift", "non-negative");
  b.require(g.exponent > 0, "exponent", "positive");
  b.require(g.truncation >= 0, "truncation", "non-negative (0 selects the grid default)");
  b.finish();
}

GeneratorSpec read_generator(const json& j, const std::string& path) {
  Block b(j, path);
  GeneratorSpec g;
  if (!b.has("problem")) throw ConfigError("'" + b.name("problem") + "' is required");
  b.choice("problem", g.problem, parse_problem);
  b.count("n_samples", g.n_samples);
  b.seed("seed", g.seed);
  switch (g.problem) {
    case Problem::Lorenz63: {
      LorenzSpec& s = g.lorenz;
      b.number("T", s.T);
      b.number("dt", s.dt);
      b.choice("task", s.task, parse_lorenz_task);
      b.number("sigma", s.sigma);
      b.number("rho", s.rho);
      b.number("beta", s.beta);
      b.number("spinup", s.spinup);
      b.number("max_step", s.max_step);
      b.choice("time_grid", g.time_grid, parse_time_grid);
      b.require(s.dt > 0, "dt", "positive");
      b.require(s.max_step > 0, "max_step", "positive");
      b.require(s.spinup >= 0, "spinup", "non-negative");
      b.require(whole_steps(s.T, s.dt) > 0, "T", "a positive whole multiple of dt");
      if (g.time_grid != TimeGrid::Uniform)
        b.require(whole_steps(s.T, s.dt) % 2 == 0, "T", "an even multiple of dt for irregular grids");
      break;
    }
    case Problem::Cde: {
      CdeSpec& s = g.cde;
      b.integer("J", s.J);
      b.number("T", s.T);
      b.number("dt", s.dt);
      b.number("z0", s.z0);
      b.number("max_step", s.max_step);
      b.require(s.J >= 1, "J", "at least 1");
      b.require(s.dt > 0, "dt", "positive");
      b.require(s.max_step > 0, "max_step", "positive");
      b.require(whole_steps(s.T, s.dt) > 0, "T", "a positive whole multiple of dt");
      break;
    }
    case Problem::Darcy: {
      DarcySpec& s = g.darcy;
      b.integer("resolution", s.resolution);
      b.number("tolerance", s.tolerance);
      b.integer("max_iterations", s.max_iterations);
      b.choice("face", s.face, parse_face);
      if (b.has("grf")) {
        Block gb(b.raw("grf"), b.name("grf"));
        read_grf(gb, s.grf);
      }
      b.require(s.resolution >= 3, "resolution", "at least 3");
      b.require(s.tolerance > 0, "tolerance", "positive");
      b.require(s.max_iterations > 0, "max_iterations", "positive");
      break;
    }
    case Problem::Kolmogorov: {
      KolmogorovSpec& s = g.kolmogorov;
      b.integer("resolution", s.resolution);
      b.number("nu", s.nu);
      b.integer("forcing_wavenumber", s.forcing_wavenumber);
      b.flag("forcing", s.forcing);
      b.number("dt", s.dt);
      b.number("T", s.T);
      b.number("snapshot_dt", s.snapshot_dt);
      b.number("ic_amplitude", s.ic_amplitude);
      b.number("ic_shift", s.ic_shift);
      b.number("ic_exponent", s.ic_exponent);
      b.integer("ic_modes", s.ic_modes);
      b.require(s.resolution >= 4 && s.resolution % 2 == 0, "resolution", "an even integer >= 4");
      b.require(s.nu > 0, "nu", "positive");
      b.require(s.dt > 0, "dt", "positive");
      b.require(whole_steps(s.T, s.dt) > 0, "T", "a positive whole multiple of dt");
      b.require(whole_steps(s.snapshot_dt, s.dt) > 0, "snapshot_dt", "a positive whole multiple of dt");
      b.require(s.ic_modes >= 0, "ic_modes", "non-negative");
      break;
    }
  }
  b.require(g.n_samples >= 1, "n_samples", "at least 1");
  b.finish();
  return g;
}

void read_model(const json& j, ModelBlock& m) {
  Block b(j, "model");
  ModelConfig& c = m.model;
  b.choice("variant", c.variant, parse_variant);
  b.integer("d_model", c.d_model);
  b.integer("heads", c.heads);
  b.integer("layers", c.layers);
  b.choice("activation", c.activation, parse_activation);
  b.choice("positions", c.positions, parse_position_mode);
  b.flag("layer_norm", c.layer_norm);
  b.choice("skip1", c.skip1, parse_skip_mode);
  b.choice("skip2", c.skip2, parse_skip_mode);
  b.flag("ic_token", m.ic_token);
  b.integers("patches", c.patches);
  b.integers("lift_modes", c.lift_modes);
  b.integers("head_modes", c.head_modes);
  b.integer("extension_pad", c.extension_pad);
  b.flag("smoothing", c.smoothing);
  b.number("smoothing_epsilon", c.smoothing_params.epsilon);
  b.number("smoothing_alpha", c.smoothing_params.alpha);
  b.number("logit_scale", c.logit_scale);
  b.seed("init_seed", m.init_seed);
  b.require(c.d_model >= 1, "d_model", "positive");
  b.require(c.heads >= 1 && c.d_model % c.heads == 0, "heads", "a positive divisor of d_model");
  b.require(c.layers >= 1, "layers", "positive");
  b.require(c.extension_pad >= 0, "extension_pad", "non-negative");
  b.finish();
}

void read_train(const json& j, TrainConfig& t, bool& seed_given) {
  Block b(j, "train");
  b.number("learning_rate", t.learning_rate);
  b.integer("batch_size", t.batch_size);
  b.integer("epochs", t.epochs);
  b.choice("loss", t.loss, parse_loss);
  std::optional<std::uint64_t> s;
  b.seed("seed", s);
  if (s) t.seed = *s;
  seed_given = s.has_value();
  b.number("beta1", t.adam.beta1);
  b.number("beta2", t.adam.beta2);
  b.number("eps", t.adam.eps);
  b.finish();
  try {
    t.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("train: ") + e.what());
  }
}

void read_data(const json& j, DataConfig& d) {
  Block b(j, "data");
  b.text("train", d.train_path);
  b.text("test", d.test_path);
  if (b.has("generator")) d.generator = read_generator(b.raw("generator"), b.name("generator"));
  b.count("n_train", d.n_train);
  b.count("n_test", d.n_test);
  b.finish();
  if (!d.generator && (d.train_path.empty() || d.test_path.empty()) &&
      !(d.train_path.empty() && d.test_path.empty()))
    throw ConfigError("data: give both 'train' and 'test' containers or a 'generator'");
}

void read_eval(const json& j, EvalConfig& e) {
  Block b(j, "eval");
  b.numbers("resolutions", e.resolutions);
  if (b.has("smoothing")) {
    bool s = false;
    b.flag("smoothing", s);
    e.smoothing = s;
  }
  for (double r : e.resolutions) b.require(r > 0, "resolutions", "positive factors");
  b.finish();
}

void read_verify(const json& j, VerifyConfig& v) {
  Block b(j, "verify");
  b.choice("kind", v.kind, [](const std::string& s) {
    if (s == "self") return VerifyKind::SelfAttention;
    if (s == "cross") return VerifyKind::CrossAttention;
    throw ConfigError("unknown verify kind '" + s + "' (expected self or cross)");
  });
  b.integer("seeds", v.seeds);
  b.integer("n_min", v.n_min);
  b.integer("n_max", v.n_max);
  b.integer("reference_points", v.reference_points);
  b.integer("query_points", v.query_points);
  b.integer("d_k", v.d_k);
  b.integer("d_v", v.d_v);
  std::optional<std::uint64_t> ps;
  b.seed("param_seed", ps);
  if (ps) v.param_seed = *ps;
  b.flag("constant_input", v.constant_input);
  b.require(v.seeds >= 2, "seeds", "at least 2");
  b.require(v.n_min >= 1 && v.n_max >= 2 * v.n_min, "n_max", "at least twice n_min");
  b.require(v.reference_points >= 2, "reference_points", "at least 2");
  b.require(v.query_points >= 1, "query_points", "positive");
  b.require(v.d_k >= 1 && v.d_v >= 1, "d_k", "positive (as is d_v)");
  b.finish();
}

void read_complexity(const json& j, ComplexityBlock& c) {
  Block b(j, "complexity");
  if (b.has("rows")) {
    const json& rows = b.raw("rows");
    if (!rows.is_array()) b.fail("rows", "an array of row names");
    c.rows.clear();
    for (const auto& r : rows) {
      if (!r.is_string()) b.fail("rows", "an array of row names");
      try {
        c.rows.push_back(parse_architecture(r.get<std::string>()));
      } catch (const ConfigError& e) {
        throw ConfigError(b.name("rows") + ": " + e.what());
      }
    }
  }
  ComplexityConfig& h = c.hyper;
  b.integer("d_u", h.d_u);
  b.integer("dim", h.dim);
  b.integer("d_z", h.d_z);
  b.integer("d_model", h.d_model);
  b.integers("cutoffs", h.cutoffs);
  b.count("patches", h.patches);
  b.integer("afno_block", h.afno_block);
  b.integer("d_fno", h.d_fno);
  b.integer("layers", h.layers);
  b.count("n", c.n_points);
  b.require(h.dim >= 1, "dim", "positive");
  b.require(h.patches >= 1, "patches", "positive");
  b.require(c.n_points >= 1, "n", "positive");
  b.finish();
}

}  // namespace

// --- GeneratorSpec -----------------------------------------------------------

Dataset GeneratorSpec::generate(std::size_t n, std::uint64_t s) const {
  Dataset d;
  switch (problem) {
    case Problem::Lorenz63: {
      if (time_grid == TimeGrid::Uniform) {
        d = lorenz63_dataset(n, lorenz, s);
      } else {
        const long steps = whole_steps(lorenz.T, lorenz.dt);
        const GridSpec grid = irregular_time_grid(
            static_cast<int>(steps), lorenz.dt,
            time_grid == TimeGrid::IrregularTrain ? TimeGridKind::Train : TimeGridKind::Test);
        d = lorenz63_dataset(n, lorenz, s, &grid);
      }
      break;
    }
    case Problem::Cde: d = cde_dataset(n, cde, s); break;
    case Problem::Darcy: d = darcy_dataset(n, darcy, s); break;
    case Problem::Kolmogorov: d = kolmogorov_dataset(n, kolmogorov, s); break;
  }
  d.generator = to_json();
  d.seed = s;
  return d;
}

GeneratorSpec GeneratorSpec::at_resolution(double factor) const {
  if (!(factor > 0)) throw ConfigError("resolution factor must be positive");
  GeneratorSpec g = *this;
  auto scaled_dt = [&](double T, double dt) {
    const double fine = dt / factor;
    if (whole_steps(T, fine) < 1) throw ConfigError("factor does not give a whole number of time steps");
    return fine;
  };
  auto scaled_n = [&](int n) {
    const double r = n * factor;
    if (std::abs(r - std::round(r)) > 1e-9 || r < 3) throw ConfigError("factor does not give a whole grid");
    return static_cast<int>(std::round(r));
  };
  switch (problem) {
    case Problem::Lorenz63:
      g.lorenz.dt = scaled_dt(lorenz.T, lorenz.dt);
      if (time_grid != TimeGrid::Uniform && whole_steps(lorenz.T, g.lorenz.dt) % 2 != 0)
        throw ConfigError("irregular grid needs an even step count");
      break;
    case Problem::Cde: g.cde.dt = scaled_dt(cde.T, cde.dt); break;
    case Problem::Darcy:
      // Keep the coefficient law fixed: the default truncation follows the grid.
      if (g.darcy.grf.truncation == 0) g.darcy.grf.truncation = darcy.resolution - 1;
      g.darcy.resolution = scaled_n(darcy.resolution);
      break;
    case Problem::Kolmogorov:
      g.kolmogorov.resolution = scaled_n(kolmogorov.resolution);
      if (g.kolmogorov.resolution % 2 != 0) throw ConfigError("factor gives an odd Kolmogorov grid");
      if (g.kolmogorov.ic_modes == 0) g.kolmogorov.ic_modes = kolmogorov.resolution / 3;
      break;
  }
  return g;
}

std::string GeneratorSpec::to_json() const {
  json j;
  j["problem"] = problem_name(problem);
  switch (problem) {
    case Problem::Lorenz63:
      j["T"] = lorenz.T;
      j["dt"] = lorenz.dt;
      j["task"] = lorenz_task_name(lorenz.task);
      j["sigma"] = lorenz.sigma;
      j["rho"] = lorenz.rho;
      j["beta"] = lorenz.beta;
      j["spinup"] = lorenz.spinup;
      j["max_step"] = lorenz.max_step;
      j["time_grid"] = time_grid_name(time_grid);
      j["initial_law"] = "N(0,I)*(7.5,9,25)+(0,0,24)";
      break;
    case Problem::Cde:
      j["J"] = cde.J;
      j["T"] = cde.T;
      j["dt"] = cde.dt;
      j["z0"] = cde.z0;
      j["max_step"] = cde.max_step;
      break;
    case Problem::Darcy:
      j["resolution"] = darcy.resolution;
      j["tolerance"] = darcy.tolerance;
      j["max_iterations"] = darcy.max_iterations;
      j["face"] = face_name(darcy.face);
      j["grf"] = {{"amplitude", darcy.grf.amplitude},
                  {"shift", darcy.grf.shift},
                  {"exponent", darcy.grf.exponent},
                  {"truncation", darcy.grf.truncation > 0 ? darcy.grf.truncation : darcy.resolution - 1},
                  {"push_forward", push_forward_name(darcy.grf.push_forward)},
                  {"hi", darcy.grf.hi},
                  {"lo", darcy.grf.lo}};
      break;
    case Problem::Kolmogorov:
      j["resolution"] = kolmogorov.resolution;
      j["nu"] = kolmogorov.nu;
      j["forcing_wavenumber"] = kolmogorov.forcing_wavenumber;
      j["forcing"] = kolmogorov.forcing;
      j["dt"] = kolmogorov.dt;
      j["T"] = kolmogorov.T;
      j["snapshot_dt"] = kolmogorov.snapshot_dt;
      j["ic_amplitude"] = kolmogorov.ic_amplitude;
      j["ic_shift"] = kolmogorov.ic_shift;
      j["ic_exponent"] = kolmogorov.ic_exponent;
      j["ic_modes"] = kolmogorov.ic_modes;
      break;
  }
  return j.dump();
}

// --- ExperimentConfig --------------------------------------------------------

void ExperimentConfig::override_seed(std::uint64_t s) {
  seed = s;
  train.seed = s;
  model.init_seed.reset();
  if (data.generator) data.generator->seed.reset();
}

std::uint64_t ExperimentConfig::generator_seed() const {
  return data.generator && data.generator->seed ? *data.generator->seed : seed;
}

std::uint64_t ExperimentConfig::test_seed() const {
  return sample_seed(generator_seed(), std::numeric_limits<std::uint64_t>::max());
}

std::uint64_t ExperimentConfig::init_seed() const { return model.init_seed.value_or(seed); }

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  Block root(j, "");
  std::optional<std::uint64_t> s;
  root.seed("seed", s);
  cfg.seed = s.value_or(0);
  cfg.train.seed = cfg.seed;
  if (root.has("model")) read_model(root.raw("model"), cfg.model);
  if (root.has("data")) read_data(root.raw("data"), cfg.data);
  if (root.has("train")) {
    bool given = false;
    read_train(root.raw("train"), cfg.train, given);
    if (!given) cfg.train.seed = cfg.seed;
  }
  if (root.has("eval")) read_eval(root.raw("eval"), cfg.eval);
  if (root.has("verify")) read_verify(root.raw("verify"), cfg.verify);
  if (root.has("complexity")) read_complexity(root.raw("complexity"), cfg.complexity);
  root.finish();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& file) {
  return parse_config(read_text(file));
}

ModelConfig resolve_model(const ExperimentConfig& cfg, const Dataset& data) {
  ModelConfig c = cfg.model.model;
  c.dim = data.domain.dim();
  c.d_u = data.channels_in;
  c.d_z = data.channels_out;
  c.d_ic = cfg.model.ic_token ? data.d_ic : 0;
  c.validate();
  return c;
}

}  // namespace tnop
