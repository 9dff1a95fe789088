// cqt: run experiment configs and plot their results.
//
//   cqt run <config> [--seed U64] [--out DIR] [--format csv|json]
//   cqt plot <result> --kind convergence|scan|residuals
//
// Exit codes: 0 success, 2 configuration error, 3 resource cap, 4 numerical failure,
// 1 anything else (I/O, malformed result files).

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "cqt/experiment.hpp"

namespace {

enum Exit : int { ok = 0, other = 1, config = 2, resource = 3, numerical = 4 };

int run_command(const std::string& config_path, const cqt::experiment::RunOverrides& overrides) {
  const auto cfg = cqt::experiment::ExperimentConfig::load(config_path);
  const auto manifest = cqt::experiment::run(cfg, overrides);
  for (const auto& f : manifest.files) std::cout << (manifest.output_dir / f.name).string() << "  " << f.sha256 << "\n";
  std::cout << manifest.manifest_path.string() << "\n";
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-dimensional quantum constructions: experiments and plots", "cqt"};
  app.set_version_flag("--version", CQT_VERSION);
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::string> format;
  auto* run = app.add_subcommand("run", "Run the experiment described by a config file");
  run->add_option("config", config_path, "Config file (key = value lines)")->required();
  run->add_option("--seed", seed, "Override the config seed");
  run->add_option("--out", out_dir, "Override the output directory");
  run->add_option("--format", format, "Override the output format")->check(CLI::IsMember({"csv", "json"}));

  std::string result_path;
  std::string kind;
  auto* plot = app.add_subcommand("plot", "Render an SVG plot from a result file");
  plot->add_option("result", result_path, "Result file (CSV or JSON)")->required();
  plot->add_option("--kind", kind, "Plot kind")->required()->check(CLI::IsMember({"convergence", "scan", "residuals"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return config;
  }

  try {
    if (*run) {
      cqt::experiment::RunOverrides o;
      o.seed = seed;
      o.output_dir = out_dir;
      if (format) o.format = *format == "csv" ? cqt::experiment::OutputFormat::csv : cqt::experiment::OutputFormat::json;
      return run_command(config_path, o);
    }
    const auto svg = cqt::experiment::plot(result_path, cqt::experiment::parse_plot_kind(kind));
    std::cout << svg.string() << "\n";
    return ok;
  } catch (const cqt::experiment::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return config;
  } catch (const cqt::InvalidArgument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return config;
  } catch (const cqt::DimensionMismatch& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return config;
  } catch (const cqt::ResourceCapExceeded& e) {
    std::cerr << "resource cap: " << e.what() << "\n";
    return resource;
  } catch (const cqt::NumericalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return numerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return other;
  }
}
