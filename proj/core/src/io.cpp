#include "tnop/io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>

namespace tnop {

static_assert(std::endian::native == std::endian::little,
              "binary payloads are written in native order, which must be little-endian");

namespace fs = std::filesystem;
using nlohmann::json;

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream os(file, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + file.string() + " for writing");
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!os) throw IoError("failed writing " + file.string());
}

std::string read_text(const fs::path& file) {
  std::ifstream is(file, std::ios::binary);
  if (!is) throw IoError("cannot open " + file.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

namespace {

void write_doubles(const fs::path& file, const std::vector<const Matrix*>& blocks) {
  std::ofstream os(file, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + file.string() + " for writing");
  for (const Matrix* m : blocks)
    os.write(reinterpret_cast<const char*>(m->data()),
             static_cast<std::streamsize>(m->size() * sizeof(double)));
  if (!os) throw IoError("failed writing " + file.string());
}

std::vector<double> read_doubles(const fs::path& file, std::size_t expected) {
  std::error_code ec;
  const auto size = fs::file_size(file, ec);
  if (ec) throw IoError("cannot stat " + file.string() + ": " + ec.message());
  if (size != expected * sizeof(double))
    throw IoError(file.string() + " has " + std::to_string(size) + " bytes, expected " +
                  std::to_string(expected * sizeof(double)));
  std::vector<double> v(expected);
  std::ifstream is(file, std::ios::binary);
  if (!is) throw IoError("cannot open " + file.string());
  is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(size));
  if (!is) throw IoError("failed reading " + file.string());
  return v;
}

template <class T>
T get(const json& j, const char* key) {
  if (!j.contains(key)) throw IoError(std::string("meta.json: missing '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw IoError(std::string("meta.json: bad '") + key + "': " + e.what());
  }
}

json meta_of(const Dataset& d) {
  json m;
  m["schema_version"] = kDatasetSchemaVersion;
  m["problem"] = d.problem;
  m["d"] = d.domain.dim();
  json bounds = json::array();
  for (const auto& ax : d.domain.bounds()) bounds.push_back({ax.lo, ax.hi});
  m["domain"] = bounds;
  if (d.grid.is_uniform()) {
    m["grid"] = {{"kind", "uniform"}, {"shape", d.grid.shape()}, {"periodic", d.grid.is_periodic()}};
  } else {
    m["grid"] = {{"kind", "irregular"}, {"points", d.grid.point_count()}, {"coords_file", "coords.bin"}};
  }
  m["channels_in"] = d.channels_in;
  m["channels_out"] = d.channels_out;
  m["d_ic"] = d.d_ic;
  m["n_samples"] = d.size();
  m["dtype"] = "f64";
  m["endianness"] = "little";
  m["generator"] = d.generator.empty() ? json::object() : json::parse(d.generator);
  m["seed"] = d.seed;
  return m;
}

}  // namespace

std::string dataset_meta_json(const Dataset& data) { return meta_of(data).dump(2) + "\n"; }

void write_dataset(const Dataset& data, const fs::path& dir) {
  data.validate();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  write_text(dir / "meta.json", dataset_meta_json(data));
  std::vector<const Matrix*> in, out;
  for (const auto& m : data.inputs) in.push_back(&m);
  for (const auto& m : data.outputs) out.push_back(&m);
  write_doubles(dir / "inputs.bin", in);
  write_doubles(dir / "outputs.bin", out);
  if (data.d_ic > 0) {
    std::vector<Matrix> rows;
    rows.reserve(data.ic.size());
    for (const auto& v : data.ic) rows.emplace_back(v.transpose());
    std::vector<const Matrix*> ptrs;
    for (const auto& r : rows) ptrs.push_back(&r);
    write_doubles(dir / "ic.bin", ptrs);
  }
  if (!data.grid.is_uniform()) {
    const auto& c = data.grid.as_irregular().coords;
    Matrix coords = Eigen::Map<const Matrix>(c.data(), static_cast<Eigen::Index>(c.size()), 1);
    write_doubles(dir / "coords.bin", {&coords});
  }
}

Dataset read_dataset(const fs::path& dir) {
  json m;
  try {
    m = json::parse(read_text(dir / "meta.json"));
  } catch (const json::exception& e) {
    throw IoError("meta.json in " + dir.string() + " is not valid JSON: " + e.what());
  }
  if (get<int>(m, "schema_version") != kDatasetSchemaVersion)
    throw IoError("unsupported dataset schema version");
  if (get<std::string>(m, "dtype") != "f64" || get<std::string>(m, "endianness") != "little")
    throw IoError("only little-endian f64 payloads are supported");
  Dataset d;
  d.problem = get<std::string>(m, "problem");
  std::vector<Interval> bounds;
  for (const auto& b : get<json>(m, "domain")) bounds.push_back({b.at(0).get<double>(), b.at(1).get<double>()});
  d.domain = Domain(std::move(bounds));
  if (get<int>(m, "d") != d.domain.dim()) throw IoError("meta.json: d does not match domain");
  const json g = get<json>(m, "grid");
  const auto kind = get<std::string>(g, "kind");
  if (kind == "uniform") {
    d.grid = GridSpec::uniform(get<std::vector<int>>(g, "shape"), get<bool>(g, "periodic"));
  } else if (kind == "irregular") {
    const auto n = get<std::size_t>(g, "points");
    d.grid = GridSpec::irregular(read_doubles(dir / get<std::string>(g, "coords_file"), n));
  } else {
    throw IoError("meta.json: unknown grid kind '" + kind + "'");
  }
  d.channels_in = get<int>(m, "channels_in");
  d.channels_out = get<int>(m, "channels_out");
  d.d_ic = get<int>(m, "d_ic");
  const auto n_samples = get<std::size_t>(m, "n_samples");
  const json gen = get<json>(m, "generator");
  d.generator = gen.empty() ? std::string() : gen.dump();
  d.seed = get<std::uint64_t>(m, "seed");

  const std::size_t N = d.grid.point_count();
  const auto in = read_doubles(dir / "inputs.bin", n_samples * N * d.channels_in);
  const auto out = read_doubles(dir / "outputs.bin", n_samples * N * d.channels_out);
  const auto rows = static_cast<Eigen::Index>(N);
  for (std::size_t i = 0; i < n_samples; ++i) {
    d.inputs.emplace_back(Eigen::Map<const Matrix>(in.data() + i * N * d.channels_in, rows, d.channels_in));
    d.outputs.emplace_back(Eigen::Map<const Matrix>(out.data() + i * N * d.channels_out, rows, d.channels_out));
  }
  if (d.d_ic > 0) {
    const auto ic = read_doubles(dir / "ic.bin", n_samples * d.d_ic);
    for (std::size_t i = 0; i < n_samples; ++i)
      d.ic.emplace_back(Eigen::Map<const Vector>(ic.data() + i * d.d_ic, d.d_ic));
  }
  try {
    d.validate();
  } catch (const std::invalid_argument& e) {
    throw IoError(dir.string() + ": " + e.what());
  }
  return d;
}

// --- checkpoints -------------------------------------------------------------

namespace {

constexpr const char* kMagic = "TNOP-CHECKPOINT v1";

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::string join(const Vector& v) {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v[i]);
  return s;
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  if (s.empty()) return out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

std::vector<int> ints(const std::string& s) {
  std::vector<int> v;
  for (const auto& t : split(s)) v.push_back(std::stoi(t));
  return v;
}

Vector doubles(const std::string& s) {
  const auto parts = split(s);
  Vector v(static_cast<Eigen::Index>(parts.size()));
  for (std::size_t i = 0; i < parts.size(); ++i) v[static_cast<Eigen::Index>(i)] = std::stod(parts[i]);
  return v;
}

}  // namespace

std::string checkpoint_header(const Model& model) {
  const ModelConfig& c = model.params.config;
  const Normalizer& n = model.normalizer;
  std::ostringstream h;
  h << "variant=" << variant_name(c.variant) << "\n"
    << "dim=" << c.dim << "\n"
    << "d_u=" << c.d_u << "\n"
    << "d_z=" << c.d_z << "\n"
    << "d_model=" << c.d_model << "\n"
    << "heads=" << c.heads << "\n"
    << "layers=" << c.layers << "\n"
    << "activation=" << activation_name(c.activation) << "\n"
    << "positions=" << position_mode_name(c.positions) << "\n"
    << "layer_norm=" << (c.layer_norm ? 1 : 0) << "\n"
    << "skip1=" << skip_mode_name(c.skip1) << "\n"
    << "skip2=" << skip_mode_name(c.skip2) << "\n"
    << "d_ic=" << c.d_ic << "\n"
    << "patches=" << join(c.patches) << "\n"
    << "lift_modes=" << join(c.lift_modes) << "\n"
    << "head_modes=" << join(c.head_modes) << "\n"
    << "extension_pad=" << c.extension_pad << "\n"
    << "smoothing=" << (c.smoothing ? 1 : 0) << "\n"
    << "smoothing_epsilon=" << fmt(c.smoothing_params.epsilon) << "\n"
    << "smoothing_alpha=" << fmt(c.smoothing_params.alpha) << "\n"
    << "logit_scale=" << fmt(c.logit_scale) << "\n"
    << "in_mean=" << join(n.in_mean) << "\n"
    << "in_std=" << join(n.in_std) << "\n"
    << "ic_mean=" << join(n.ic_mean) << "\n"
    << "ic_std=" << join(n.ic_std) << "\n"
    << "out_mean=" << join(n.out_mean) << "\n"
    << "out_std=" << join(n.out_std) << "\n"
    << "param_order=depth-first\n"
    << "param_count=" << parameter_size(model.params) << "\n";
  return h.str();
}

void write_checkpoint(const Model& model, const fs::path& file) {
  const std::string header = checkpoint_header(model);
  const Vector theta = flatten(model.params);
  std::ofstream os(file, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + file.string() + " for writing");
  os << kMagic << "\n" << "header_bytes=" << header.size() << "\n" << header;
  os.write(reinterpret_cast<const char*>(theta.data()),
           static_cast<std::streamsize>(theta.size() * sizeof(double)));
  if (!os) throw IoError("failed writing " + file.string());
}

Model read_checkpoint(const fs::path& file) {
  const std::string bytes = read_text(file);
  const std::string bad = file.string() + ": not a valid checkpoint";
  const auto l1 = bytes.find('\n');
  if (l1 == std::string::npos || bytes.substr(0, l1) != kMagic) throw IoError(bad + " (magic)");
  const auto l2 = bytes.find('\n', l1 + 1);
  const std::string len_line = bytes.substr(l1 + 1, l2 - l1 - 1);
  if (l2 == std::string::npos || len_line.rfind("header_bytes=", 0) != 0)
    throw IoError(bad + " (header length)");
  std::size_t header_bytes = 0;
  try {
    header_bytes = std::stoull(len_line.substr(13));
  } catch (const std::exception&) {
    throw IoError(bad + " (header length)");
  }
  if (l2 + 1 + header_bytes > bytes.size()) throw IoError(bad + " (truncated header)");
  const std::string header = bytes.substr(l2 + 1, header_bytes);
  std::map<std::string, std::string> kv;
  std::stringstream hs(header);
  std::string line;
  while (std::getline(hs, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw IoError(bad + " (header line '" + line + "')");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto at = [&](const std::string& k) {
    auto it = kv.find(k);
    if (it == kv.end()) throw IoError(bad + " (missing " + k + ")");
    return it->second;
  };
  Model model;
  ModelConfig& c = model.params.config;
  try {
    c.variant = parse_variant(at("variant"));
    c.dim = std::stoi(at("dim"));
    c.d_u = std::stoi(at("d_u"));
    c.d_z = std::stoi(at("d_z"));
    c.d_model = std::stoi(at("d_model"));
    c.heads = std::stoi(at("heads"));
    c.layers = std::stoi(at("layers"));
    c.activation = parse_activation(at("activation"));
    c.positions = parse_position_mode(at("positions"));
    c.layer_norm = at("layer_norm") == "1";
    c.skip1 = parse_skip_mode(at("skip1"));
    c.skip2 = parse_skip_mode(at("skip2"));
    c.d_ic = std::stoi(at("d_ic"));
    c.patches = ints(at("patches"));
    c.lift_modes = ints(at("lift_modes"));
    c.head_modes = ints(at("head_modes"));
    c.extension_pad = std::stoi(at("extension_pad"));
    c.smoothing = at("smoothing") == "1";
    c.smoothing_params.epsilon = std::stod(at("smoothing_epsilon"));
    c.smoothing_params.alpha = std::stod(at("smoothing_alpha"));
    c.logit_scale = std::stod(at("logit_scale"));
    Normalizer& n = model.normalizer;
    n.in_mean = doubles(at("in_mean"));
    n.in_std = doubles(at("in_std"));
    n.ic_mean = doubles(at("ic_mean"));
    n.ic_std = doubles(at("ic_std"));
    n.out_mean = doubles(at("out_mean"));
    n.out_std = doubles(at("out_std"));
  } catch (const IoError&) {
    throw;
  } catch (const std::exception& e) {
    throw IoError(bad + " (" + e.what() + ")");
  }
  try {
    model.params = init_parameters(c, 0);
  } catch (const std::exception& e) {
    throw IoError(bad + " (" + e.what() + ")");
  }
  const std::size_t count = std::stoull(at("param_count"));
  if (count != parameter_size(model.params))
    throw IoError(bad + " (param_count " + std::to_string(count) + " does not match the configuration)");
  const std::size_t payload = l2 + 1 + header_bytes;
  if (bytes.size() - payload != count * sizeof(double))
    throw IoError(bad + " (payload has " + std::to_string(bytes.size() - payload) + " bytes, expected " +
                  std::to_string(count * sizeof(double)) + ")");
  Vector theta(static_cast<Eigen::Index>(count));
  std::memcpy(theta.data(), bytes.data() + payload, count * sizeof(double));
  unflatten(theta, model.params);
  return model;
}

}  // namespace tnop
