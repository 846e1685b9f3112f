#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "shiftlab/dyadic.hpp"

// Batch experiment driver: every run is fully determined by its config and
// emits a results CSV plus a JSON provenance sidecar.

namespace shiftlab {

struct ExperimentConfig {
  std::string experiment;  // pibad|goodmds|represent|weaktype|a2scan|corona|jntail
  GridParams grid;
  std::string kernel = "hilbert";  // hilbert | smooth_odd | custom:<path>
  std::string weight_family = "power";
  std::vector<double> power_exponents = {0.0, -0.5, -0.9, -0.99, -0.995};
  std::string mode = "exhaustive";  // exhaustive | monte_carlo
  long long samples = 200;
  std::uint64_t seed = 1;
  int threads = 1;
  std::string out_dir = ".";
  std::vector<int> u_list;  // weaktype u sweep / represent u_max list
  int v = 1;
  int trials = 20;

  static ExperimentConfig from_json_text(const std::string& text);
  std::string to_canonical_json() const;
  std::uint64_t config_hash() const;
  // deterministic per-task seed
  std::uint64_t task_seed(std::uint64_t task_index) const;
};

// exit 0 on success, 2 on invalid config, 3 on resource limits
int run_experiment(const ExperimentConfig& cfg);

// reshape a results CSV into (x, y, series) rows; series carries the
// remaining columns joined with ';' so the transform is invertible
std::string emit_plotdata(const std::string& results_csv, const std::string& x_col,
                          const std::string& y_col);
// inverse of emit_plotdata (column order from the provided header)
std::string unpivot_plotdata(const std::string& plot_csv,
                             const std::string& original_header);

std::string format_double(double v);  // %.17g, deterministic

}  // namespace shiftlab
