#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "shiftlab/experiments.hpp"

// shiftlab <experiment> [--config file.json] [--out dir] [--seed n] [--threads n]
// plus `plotdata` for reshaping result CSVs.

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CLI::ValidationError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"shiftlab: dyadic shift / weighted inequality workbench"};
  app.require_subcommand(1);

  shiftlab::ExperimentConfig cfg;
  std::string config_path;
  std::string gamma_spec;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config (overrides flags)");
    sub->add_option("--out", cfg.out_dir, "output directory");
    sub->add_option("--seed", cfg.seed, "base seed");
    sub->add_option("--threads", cfg.threads, "worker threads");
    sub->add_option("--dim", cfg.grid.dim, "dimension N");
    sub->add_option("--k-min", cfg.grid.k_min, "coarsest level");
    sub->add_option("--k-max", cfg.grid.k_max, "finest level");
    sub->add_option("--r", cfg.grid.r, "goodness scale gap");
    sub->add_option("--gamma", gamma_spec, "goodness exponent, e.g. 1/4");
    sub->add_option("--mode", cfg.mode, "exhaustive | monte_carlo");
    sub->add_option("--samples", cfg.samples, "monte carlo samples");
    sub->add_option("--kernel", cfg.kernel,
                    "hilbert | smooth_odd | custom:<path>");
    sub->add_option("--weight-family", cfg.weight_family, "power | step");
    sub->add_option("--power-exponents", cfg.power_exponents,
                    "power weight exponents");
    sub->add_option("--u-list", cfg.u_list, "u sweep / u_max list");
    sub->add_option("--v", cfg.v, "shift parameter v");
    sub->add_option("--trials", cfg.trials, "trial count");
  };

  for (const char* name :
       {"pibad", "goodmds", "represent", "weaktype", "a2scan", "corona",
        "jntail"}) {
    auto* sub = app.add_subcommand(name, std::string("run the ") + name +
                                             " experiment");
    add_common(sub);
    sub->callback([&cfg, name] { cfg.experiment = name; });
  }

  std::string plot_in, plot_out, plot_x, plot_y;
  auto* plot = app.add_subcommand("plotdata", "reshape a results CSV");
  plot->add_option("--in", plot_in, "input results CSV")->required();
  plot->add_option("--out", plot_out, "output CSV")->required();
  plot->add_option("--x", plot_x, "x column")->required();
  plot->add_option("--y", plot_y, "y column")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (plot->parsed()) {
      std::string reshaped =
          shiftlab::emit_plotdata(read_file(plot_in), plot_x, plot_y);
      std::ofstream out(plot_out, std::ios::binary);
      out << reshaped;
      return 0;
    }
    if (!config_path.empty()) {
      std::string exp = cfg.experiment;
      cfg = shiftlab::ExperimentConfig::from_json_text(read_file(config_path));
      if (cfg.experiment.empty()) cfg.experiment = exp;
    }
    if (!gamma_spec.empty()) {
      auto slash = gamma_spec.find('/');
      if (slash == std::string::npos) {
        std::cerr << "gamma must be a fraction num/den\n";
        return 2;
      }
      cfg.grid.gamma.num = std::stoll(gamma_spec.substr(0, slash));
      cfg.grid.gamma.den = std::stoll(gamma_spec.substr(slash + 1));
    }
    int status = shiftlab::run_experiment(cfg);
    if (status == 0)
      std::cout << cfg.out_dir << "/" << cfg.experiment << ".csv\n";
    return status;
  } catch (const shiftlab::resource_error& e) {
    std::cerr << "resource limit: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
