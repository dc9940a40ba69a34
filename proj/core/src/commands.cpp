#include "tnop/commands.hpp"

#include <cstdio>
#include <iomanip>
#include <nlohmann/json.hpp>
#include <ostream>
#include <sstream>

#include "tnop/io.hpp"

namespace tnop {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

const GeneratorSpec& need_generator(const ExperimentConfig& cfg, const char* what) {
  if (!cfg.data.generator) throw ConfigError(std::string(what) + " needs data.generator");
  return *cfg.data.generator;
}

std::size_t train_count(const ExperimentConfig& cfg) {
  return cfg.data.n_train > 0 ? cfg.data.n_train : cfg.data.generator->n_samples;
}

std::size_t test_count(const ExperimentConfig& cfg) {
  return cfg.data.n_test > 0 ? cfg.data.n_test : std::max<std::size_t>(1, train_count(cfg) / 10);
}

Model load_model(const ExperimentConfig& cfg, const fs::path& checkpoint) {
  Model m = read_checkpoint(checkpoint);
  if (cfg.eval.smoothing) m.params.config.smoothing = *cfg.eval.smoothing;
  return m;
}

}  // namespace

int run_guarded(const std::function<void()>& body, std::ostream& err) {
  try {
    body();
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const IoError& e) {
    err << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    // Shape or setting mismatches found while computing are configuration problems.
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitOther;
  }
}

Dataset load_train_set(const ExperimentConfig& cfg) {
  if (!cfg.data.train_path.empty()) return read_dataset(cfg.data.train_path);
  return need_generator(cfg, "training").generate(train_count(cfg), cfg.generator_seed());
}

Dataset load_test_set(const ExperimentConfig& cfg) {
  if (!cfg.data.test_path.empty()) return read_dataset(cfg.data.test_path);
  return need_generator(cfg, "evaluation").generate(test_count(cfg), cfg.test_seed());
}

Dataset cmd_datagen(const ExperimentConfig& cfg, const fs::path& out_dir) {
  const GeneratorSpec& g = need_generator(cfg, "datagen");
  Dataset d = g.generate(g.n_samples, cfg.generator_seed());
  write_dataset(d, out_dir);
  return d;
}

TrainOutcome cmd_train(const ExperimentConfig& cfg, const fs::path& out_dir, std::ostream& log) {
  const Dataset train_set = load_train_set(cfg);
  const Dataset test_set = load_test_set(cfg);
  ensure_dir(out_dir);
  TrainOutcome out;
  out.model.params = init_parameters(resolve_model(cfg, train_set), cfg.init_seed());
  out.model.normalizer = fit_normalizer(train_set);
  log << "training " << variant_name(out.model.params.config.variant) << " with "
      << count_params(out.model.params) << " parameters on " << train_set.size() << " samples\n";
  out.result = train(out.model, train_set, &test_set, cfg.train, [&](const EpochRecord& r) {
    log << "epoch " << r.epoch << " loss " << r.train_loss << " val median " << r.val_median_rel_l2
        << " (" << std::fixed << std::setprecision(1) << r.wall_seconds << "s)\n"
        << std::defaultfloat << std::setprecision(6) << std::flush;
  });
  write_text(out_dir / "history.csv", history_csv(out.result.history));
  if (out.result.aborted) throw NumericError("train", out.result.abort_reason);
  write_checkpoint(out.model, out_dir / "checkpoint.bin");
  return out;
}

std::string metrics_json(const Metrics& m) {
  json j;
  j["n_samples"] = m.errors.size();
  j["errors"] = m.errors;
  j["median"] = m.median;
  j["mean"] = m.mean;
  j["max"] = m.max;
  j["median_index"] = m.median_index;
  j["worst_index"] = m.worst_index;
  return j.dump(2) + "\n";
}

Metrics cmd_eval(const ExperimentConfig& cfg, const fs::path& checkpoint, const fs::path& out_dir) {
  const Model model = load_model(cfg, checkpoint);
  const Dataset test_set = load_test_set(cfg);
  const Metrics m = evaluate(model, test_set);
  ensure_dir(out_dir);
  write_text(out_dir / "metrics.json", metrics_json(m));
  return m;
}

std::vector<SweepRow> cmd_sweep(const ExperimentConfig& cfg, const fs::path& checkpoint,
                                const fs::path& out_dir, std::ostream& log) {
  const GeneratorSpec& base = need_generator(cfg, "sweep");
  const Model model = load_model(cfg, checkpoint);
  std::vector<SweepRow> rows;
  for (double f : cfg.eval.resolutions) {
    try {
      const GeneratorSpec g = base.at_resolution(f);
      const Dataset test_set = g.generate(test_count(cfg), cfg.test_seed());
      rows.push_back({f, test_set.points(), evaluate(model, test_set).median});
    } catch (const ConfigError& e) {
      log << "resolution " << f << " skipped: " << e.what() << "\n";
    } catch (const std::invalid_argument& e) {
      log << "resolution " << f << " skipped: " << e.what() << "\n";
    }
  }
  std::ostringstream csv;
  csv << "resolution_factor,grid_points,median_rel_l2\n";
  for (const auto& r : rows) csv << g17(r.factor) << "," << r.points << "," << g17(r.median) << "\n";
  ensure_dir(out_dir);
  write_text(out_dir / "sweep.csv", csv.str());
  return rows;
}

std::vector<ComplexityRow> cmd_complexity(const ExperimentConfig& cfg, const fs::path& out_dir,
                                          std::ostream& out) {
  const ComplexityBlock& c = cfg.complexity;
  std::vector<ComplexityRow> rows;
  for (Architecture a : c.rows) {
    ComplexityRow r;
    r.arch = a;
    r.params = formula_param_count(a, c.hyper, c.n_points);
    r.flops = estimate_flops(a, c.hyper, c.n_points);
    if ((a == Architecture::TNO || a == Architecture::ViTNO || a == Architecture::FANO) &&
        r.params <= c.instantiate_limit) {
      r.constructed = count_params(init_parameters(model_config_for(a, c.hyper), 0));
      if (*r.constructed != r.params)
        throw NumericError("complexity", architecture_name(a) + ": constructed model has " +
                                             std::to_string(*r.constructed) + " parameters, formula gives " +
                                             std::to_string(r.params));
    }
    rows.push_back(r);
  }
  std::ostringstream csv;
  csv << "architecture,params,params_constructed,flops,n_points\n";
  out << std::left << std::setw(8) << "arch" << std::right << std::setw(16) << "params" << std::setw(16)
      << "constructed" << std::setw(20) << "flops (N=" + std::to_string(c.n_points) + ")" << "\n";
  for (const auto& r : rows) {
    const std::string built = r.constructed ? std::to_string(*r.constructed) : "-";
    out << std::left << std::setw(8) << architecture_name(r.arch) << std::right << std::setw(16) << r.params
        << std::setw(16) << built << std::setw(20) << r.flops << "\n";
    csv << architecture_name(r.arch) << "," << r.params << "," << (r.constructed ? built : "") << ","
        << r.flops << "," << c.n_points << "\n";
  }
  ensure_dir(out_dir);
  write_text(out_dir / "complexity.csv", csv.str());
  return rows;
}

}  // namespace tnop
