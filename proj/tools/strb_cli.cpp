// strb: pipeline driver.
//
// Exit codes: 0 ok, 2 configuration error, 3 numerical failure or missing
// stage input, 4 I/O error, 1 anything else.

#include <CLI11.hpp>

#include "strb/pipeline.hpp"

#include <cstdlib>
#include <iostream>

namespace {

enum Exit { Ok = 0, Other = 1, Config = 2, Numerical = 3, Io = 4 };

strb::StageContext context(const std::string& config_path, int jobs, bool verbose) {
  strb::StageContext ctx;
  ctx.cfg = config_path.empty() ? strb::parse_config(strb::default_config_text()) : strb::load_config(config_path);
  if (const char* env = std::getenv("STRB_OUTPUT_DIR"); env && *env) {
    ctx.cfg.output = env;
    ctx.cfg.validate();
  }
  if (jobs < 1) throw strb::ConfigError("--jobs must be positive");
  ctx.cfg.campaign.jobs = jobs;
  ctx.ws.root = ctx.cfg.output;
  if (verbose) ctx.log = [](const std::string& m) { std::cerr << "[strb] " << m << '\n'; };
  return ctx;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Space-time reduced basis pipeline"};
  app.require_subcommand(1, 0);  // several stages may be chained; they run in pipeline order
  std::string config;
  int jobs = 1;
  bool verbose = false;
  app.add_option("--config", config, "INI configuration file")->check(CLI::ExistingFile);
  app.add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--verbose", verbose, "progress on stderr");

  auto* gen = app.add_subcommand("generate", "write the full-order operators");
  auto* fom = app.add_subcommand("fom", "solve the training and test FOM runs");
  auto* off = app.add_subcommand("offline", "build bases, reduced model and warm-start store");
  auto* onl = app.add_subcommand("online", "reduced solves for the test parameters");
  auto* bench = app.add_subcommand("bench", "error and timing table");
  auto* val = app.add_subcommand("validate", "invariant suite");
  auto* tmpl = app.add_subcommand("print-config", "print the default configuration");
  for (auto* s : {gen, fom, off, onl, bench, val}) s->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? Ok : Config;
  }

  try {
    if (tmpl->parsed()) {
      std::cout << strb::default_config_text();
      return Ok;
    }
    const auto ctx = context(config, jobs, verbose);
    if (gen->parsed()) strb::cmd_generate(ctx);
    if (fom->parsed()) strb::cmd_fom(ctx);
    if (off->parsed()) strb::cmd_offline(ctx);
    if (onl->parsed() && !strb::cmd_online(ctx)) {
      std::cerr << "strb: some online solves did not converge\n";
      return Numerical;
    }
    if (bench->parsed()) {
      strb::cmd_bench(ctx);
      std::cout << (ctx.ws.bench() / "bench.csv").string() << '\n';
    }
    if (val->parsed()) {
      bool ok = true;
      for (const auto& r : strb::cmd_validate(ctx)) {
        std::cout << (r.ok ? "ok    " : "FAIL  ") << r.name << (r.detail.empty() ? "" : "  " + r.detail) << '\n';
        ok = ok && r.ok;
      }
      return ok ? Ok : Numerical;
    }
    return Ok;
  } catch (const strb::ConfigError& e) {
    std::cerr << "strb: configuration error: " << e.what() << '\n';
    return Config;
  } catch (const strb::MissingInputError& e) {
    std::cerr << "strb: " << e.what() << '\n';
    return Numerical;
  } catch (const strb::NumericalError& e) {
    std::cerr << "strb: numerical failure: " << e.what() << '\n';
    return Numerical;
  } catch (const strb::IoError& e) {
    std::cerr << "strb: I/O error: " << e.what() << '\n';
    return Io;
  } catch (const std::exception& e) {
    std::cerr << "strb: " << e.what() << '\n';
    return Other;
  }
}
