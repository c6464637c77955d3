#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "epifilm/errors.hpp"
#include "epifilm/experiment.hpp"

namespace {

constexpr int kNumericFailure = 1;
constexpr int kConfigError = 2;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Strained epitaxial film with dislocations: solver and experiment driver"};
  std::string mode;
  std::string config;
  std::string out_dir = "out";
  std::optional<int> refine;
  app.add_option("mode", mode, "solve | minimize | nucleate | sink-study | gamma-sweep | corner | validate")
      ->required()
      ->check(CLI::IsMember(epifilm::experiment_modes()));
  app.add_option("--config", config, "Configuration file (section.key = value)")->required();
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--refine", refine, "Mesh refinement (overrides mesh.refine)")
      ->check(CLI::Range(2, 4096));
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  epifilm::ExperimentSpec spec;
  try {
    spec = epifilm::load_spec(epifilm::ConfigFile::load(config), mode, refine, out_dir);
  } catch (const epifilm::Error& e) {
    std::cerr << "epifilm: config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "epifilm: config error: " << e.what() << "\n";
    return kConfigError;
  }

  try {
    const auto outcome = epifilm::run(spec);
    std::cout << mode << ": " << outcome.message << "\n";
    for (const auto& f : outcome.files) std::cout << "  wrote " << f.string() << "\n";
    return outcome.status;
  } catch (const epifilm::InvalidInput& e) {
    std::cerr << "epifilm: " << mode << ": invalid input: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "epifilm: " << mode << ": " << e.what() << "\n";
    return kNumericFailure;
  }
}
