#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "mmrac/scenario.hpp"
#include "mmrac/scenario_io.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

std::string joined(const std::filesystem::path& dir, const std::string& file) {
  return (dir / file).string();
}

void print_metrics(const std::string& label, const mmrac::MetricsReport& report) {
  auto fmt = [](const std::optional<double>& t) {
    return t ? std::to_string(*t) + " s" : std::string("not converged");
  };
  std::cout << label << "\n";
  std::cout << "  tracking convergence:  " << fmt(report.tracking_convergence_time) << "\n";
  std::cout << "  parameter convergence: " << fmt(report.parameter_convergence_time) << "\n";
  std::cout << "  final parameter error: " << report.final_parameter_error << "\n";
  std::cout << "  mean tracking error:   " << report.mean_abs_tracking_error << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Companion-form plant simulator for first- and second-level "
               "model-reference adaptive control"};
  app.require_subcommand(1);

  std::string scenario_path, builtin_name, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<double> step, t_end;
  bool gnuplot = false;

  auto* simulate = app.add_subcommand("simulate", "Run one scenario and export CSV + metrics");
  auto* opt_scn = simulate->add_option("--scenario", scenario_path, "Scenario JSON file");
  auto* opt_blt = simulate->add_option("--builtin", builtin_name, "Built-in scenario name");
  opt_scn->excludes(opt_blt);
  simulate->add_option("--out", out_dir, "Output directory")->required();
  simulate->add_option("--seed", seed, "Override the noise seed");
  simulate->add_option("--step", step, "Override the integration step [s]");
  simulate->add_option("--t-end", t_end, "Override the horizon [s]");
  simulate->add_flag("--gnuplot", gnuplot, "Also write a gnuplot script");

  std::string cmp_builtin, cmp_out;
  auto* compare = app.add_subcommand(
      "compare", "Run first- and second-level control on the same plant and report both");
  compare->add_option("--builtin", cmp_builtin, "Built-in scenario name")->required();
  compare->add_option("--out", cmp_out, "Output directory")->required();

  auto* list = app.add_subcommand("list-builtins", "List built-in scenario names");

  CLI11_PARSE(app, argc, argv);

  try {
    if (list->parsed()) {
      for (const auto& name : mmrac::builtin_names()) std::cout << name << "\n";
      return kExitOk;
    }

    if (simulate->parsed()) {
      if (scenario_path.empty() == builtin_name.empty())
        throw mmrac::ConfigError("simulate needs exactly one of --scenario or --builtin");
      mmrac::ScenarioConfig config = scenario_path.empty()
                                         ? mmrac::builtin(builtin_name)
                                         : mmrac::load_scenario(scenario_path);
      if (seed) config.noise.seed = *seed;
      if (step) config.step = *step;
      if (t_end) config.t_end = *t_end;

      std::filesystem::path dir(out_dir);
      std::filesystem::create_directories(dir);

      const mmrac::Trajectory traj = mmrac::run_scenario(config);
      const std::string csv = joined(dir, config.name + ".csv");
      mmrac::export_csv(traj, csv);
      mmrac::write_metrics_report(mmrac::compute_metrics(traj),
                                  joined(dir, config.name + "_metrics.txt"));
      if (gnuplot) mmrac::write_gnuplot_script(traj, csv, joined(dir, config.name + ".gp"));

      std::cout << "wrote " << csv << " (" << traj.times.size() << " samples)\n";
      print_metrics("metrics (" + config.name + ")", mmrac::compute_metrics(traj));
      return kExitOk;
    }

    if (compare->parsed()) {
      const mmrac::ScenarioConfig base = mmrac::builtin(cmp_builtin);
      std::filesystem::path dir(cmp_out);
      std::filesystem::create_directories(dir);

      const mmrac::LevelComparison cmp = mmrac::compare_levels(base);
      mmrac::export_csv(cmp.first, joined(dir, cmp.first_config.name + ".csv"));
      mmrac::export_csv(cmp.second, joined(dir, cmp.second_config.name + ".csv"));
      mmrac::write_metrics_report(cmp.first_metrics,
                                  joined(dir, cmp.first_config.name + "_metrics.txt"));
      mmrac::write_metrics_report(cmp.second_metrics,
                                  joined(dir, cmp.second_config.name + "_metrics.txt"));

      print_metrics("first level (indirect)", cmp.first_metrics);
      print_metrics("second level (ode estimator)", cmp.second_metrics);
      return kExitOk;
    }
  } catch (const mmrac::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const mmrac::UnknownScenarioError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const mmrac::SingularMatrixError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const mmrac::NotStableError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const mmrac::NonFiniteStateError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
