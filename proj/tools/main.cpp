#include <CLI11.hpp>
#include <iostream>

#include "tnop/commands.hpp"
#include "tnop/config.hpp"

namespace {

struct Options {
  std::string config;
  std::string out = ".";
  std::string checkpoint;
  std::optional<std::uint64_t> seed;
  std::string kind;
};

tnop::ExperimentConfig load(const Options& o) {
  tnop::ExperimentConfig cfg = o.config.empty() ? tnop::ExperimentConfig{} : tnop::load_config(o.config);
  if (o.seed) cfg.override_seed(*o.seed);
  return cfg;
}

std::string need_checkpoint(const Options& o) {
  if (o.checkpoint.empty()) throw tnop::ConfigError("--checkpoint is required");
  return o.checkpoint;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transformer neural operators: data generation, training and verification"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* c = sub->add_option("--config", o.config, "experiment configuration (JSON)");
    if (config_required) c->required();
    sub->add_option("--out", o.out, "output directory")->capture_default_str();
    sub->add_option("--seed", o.seed, "seed overriding the configuration");
  };

  auto* datagen = app.add_subcommand("datagen", "generate a dataset container");
  add_common(datagen, true);
  auto* train = app.add_subcommand("train", "train a model; writes checkpoint.bin and history.csv");
  add_common(train, true);
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint; writes metrics.json");
  add_common(eval, true);
  eval->add_option("--checkpoint", o.checkpoint, "checkpoint file")->required();
  auto* sweep = app.add_subcommand("sweep", "zero-shot resolution sweep; writes sweep.csv");
  add_common(sweep, true);
  sweep->add_option("--checkpoint", o.checkpoint, "checkpoint file")->required();
  auto* complexity = app.add_subcommand("complexity", "parameter and FLOP closed forms; writes complexity.csv");
  add_common(complexity, false);
  auto* verify = app.add_subcommand("verify", "Monte-Carlo convergence of attention; writes verify_<kind>.json");
  add_common(verify, false);
  verify->add_option("--kind", o.kind, "self or cross (overrides the configuration)")
      ->check(CLI::IsMember({"self", "cross"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : tnop::kExitConfig;
  }

  bool verify_failed = false;
  const int code = tnop::run_guarded(
      [&] {
        tnop::ExperimentConfig cfg = load(o);
        if (*datagen) {
          const auto d = tnop::cmd_datagen(cfg, o.out);
          std::cout << "wrote " << d.size() << " samples to " << o.out << "\n";
        } else if (*train) {
          const auto r = tnop::cmd_train(cfg, o.out, std::cout);
          std::cout << "wrote " << o.out << "/checkpoint.bin after " << r.result.history.size() << " epochs\n";
        } else if (*eval) {
          const auto m = tnop::cmd_eval(cfg, need_checkpoint(o), o.out);
          std::cout << "median " << m.median << " mean " << m.mean << " max " << m.max << " (worst sample "
                    << m.worst_index << ")\n";
        } else if (*sweep) {
          for (const auto& r : tnop::cmd_sweep(cfg, need_checkpoint(o), o.out, std::cerr))
            std::cout << "factor " << r.factor << " points " << r.points << " median " << r.median << "\n";
        } else if (*complexity) {
          tnop::cmd_complexity(cfg, o.out, std::cout);
        } else if (*verify) {
          if (!o.kind.empty())
            cfg.verify.kind = o.kind == "self" ? tnop::VerifyKind::SelfAttention : tnop::VerifyKind::CrossAttention;
          const auto r = tnop::cmd_verify(cfg, o.out);
          std::cout << "slope " << r.slope << " inversions " << r.inversions << " -> "
                    << (r.passed ? "PASS" : "FAIL") << "\n";
          verify_failed = !r.passed;
        }
      },
      std::cerr);
  if (code == tnop::kExitOk && verify_failed) return tnop::kExitNumeric;
  return code;
}
