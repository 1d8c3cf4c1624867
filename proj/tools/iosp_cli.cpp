#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "iosp/cli/commands.hpp"
#include "iosp/datasets/binary_io.hpp"
#include "iosp/errors.hpp"

namespace {

using namespace iosp;

int run_cli(int argc, char** argv) {
  CLI::App app{"Image-object-specific prompt learning for few-shot class-incremental runs"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string resume_path;
  std::optional<std::uint64_t> seed;

  auto* gen = app.add_subcommand("gen-synthetic", "write a synthetic IOSF-EMB train/test pair");
  data::SyntheticSpec spec;
  gen->add_option("--out", out_dir, "output directory")->required();
  gen->add_option("--classes", spec.classes);
  gen->add_option("--train-per-class", spec.train_per_class);
  gen->add_option("--test-per-class", spec.test_per_class);
  gen->add_option("--dim", spec.dim);
  gen->add_option("--sigma", spec.sigma);
  gen->add_option("--seed", seed);

  auto* run = app.add_subcommand("run", "train every session and write reports and checkpoints");
  run->add_option("--config", config_path)->required();
  run->add_option("--out", out_dir)->required();
  run->add_option("--seed", seed);

  auto* resume = app.add_subcommand("resume", "continue a run from a checkpoint");
  resume->add_option("--resume", resume_path, "checkpoint file")->required();
  resume->add_option("--out", out_dir)->required();

  auto* eval = app.add_subcommand("eval", "re-evaluate the last session of a checkpoint");
  eval->add_option("--resume,--checkpoint", resume_path, "checkpoint file")->required();
  eval->add_option("--out", out_dir)->required();

  auto* scope = app.add_subcommand("ablate-scope", "compare the three update scopes");
  scope->add_option("--config", config_path)->required();
  scope->add_option("--out", out_dir)->required();
  scope->add_option("--seed", seed);

  auto* hparam = app.add_subcommand("ablate-hparam", "sweep top-K or pair counts");
  std::string topk_list;
  std::string pairs_list;
  hparam->add_option("--config", config_path)->required();
  hparam->add_option("--out", out_dir)->required();
  hparam->add_option("--seed", seed);
  hparam->add_option("--topk", topk_list, "comma-separated K_pr values");
  hparam->add_option("--pairs", pairs_list, "comma-separated N1:Nt pairs");

  auto* report = app.add_subcommand("report", "render the report history of a checkpoint");
  std::string format = "json";
  report->add_option("--resume,--checkpoint", resume_path, "checkpoint file")->required();
  report->add_option("--format", format)->check(CLI::IsMember({"json", "csv", "plotdata"}));
  report->add_option("--out", out_dir, "output file; stdout when absent");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_code(ErrorCategory::config);
  }

  const auto load = [&] {
    train::RunConfig c = cli::parse_config(config_path);
    cli::apply_seed_override(c, seed);
    train::validate(c);
    return c;
  };

  if (gen->parsed()) {
    if (!seed) {
      train::RunConfig c;
      cli::apply_seed_override(c, std::nullopt);
      seed = c.seed;
    }
    spec.seed = *seed;
    cli::gen_synthetic(spec, out_dir);
  } else if (run->parsed()) {
    cli::run(load(), out_dir);
  } else if (resume->parsed()) {
    cli::resume(resume_path, out_dir);
  } else if (eval->parsed()) {
    cli::eval(resume_path, out_dir);
  } else if (scope->parsed()) {
    std::cout << cli::ablate_scope(load(), out_dir);
  } else if (hparam->parsed()) {
    const train::RunConfig c = load();
    cli::HparamSweep sweep;
    if (!topk_list.empty()) sweep.top_k = cli::parse_size_list(topk_list, "--topk");
    if (!pairs_list.empty()) sweep.pair_counts = cli::parse_pair_list(pairs_list, "--pairs");
    std::cout << cli::ablate_hparam(c, sweep, out_dir);
  } else if (report->parsed()) {
    const std::string text = cli::report(resume_path, metrics::report_format_from_string(format));
    if (out_dir.empty()) {
      std::cout << text;
    } else {
      data::write_text_file(out_dir, text);
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const iosp::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return iosp::exit_code(e.category());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return iosp::exit_code(iosp::ErrorCategory::internal);
  }
}
