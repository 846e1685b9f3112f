#include "shiftlab/experiments.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "shiftlab/grid_function.hpp"
#include "shiftlab/haar.hpp"
#include "shiftlab/kernels.hpp"
#include "shiftlab/representation.hpp"
#include "shiftlab/shifts.hpp"
#include "shiftlab/weighted.hpp"

namespace shiftlab {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  auto j = nlohmann::json::parse(text);
  ExperimentConfig c;
  c.experiment = j.value("experiment", "");
  if (j.contains("grid")) {
    const auto& g = j["grid"];
    c.grid.dim = g.value("dim", 1);
    c.grid.k_min = g.value("k_min", 0);
    c.grid.k_max = g.value("k_max", 6);
    c.grid.r = g.value("r", 2);
    c.grid.gamma.num = g.value("gamma_num", 1ll);
    c.grid.gamma.den = g.value("gamma_den", 4ll);
  }
  c.kernel = j.value("kernel", c.kernel);
  c.weight_family = j.value("weight_family", c.weight_family);
  if (j.contains("power_exponents"))
    c.power_exponents = j["power_exponents"].get<std::vector<double>>();
  c.mode = j.value("mode", c.mode);
  c.samples = j.value("samples", c.samples);
  c.seed = j.value("seed", c.seed);
  c.threads = j.value("threads", c.threads);
  c.out_dir = j.value("out_dir", c.out_dir);
  if (j.contains("u_list")) c.u_list = j["u_list"].get<std::vector<int>>();
  c.v = j.value("v", c.v);
  c.trials = j.value("trials", c.trials);
  return c;
}

std::string ExperimentConfig::to_canonical_json() const {
  nlohmann::json j;  // std::map-backed: keys serialize sorted
  j["experiment"] = experiment;
  j["grid"] = {{"dim", grid.dim},     {"k_min", grid.k_min},
               {"k_max", grid.k_max}, {"r", grid.r},
               {"gamma_num", grid.gamma.num}, {"gamma_den", grid.gamma.den}};
  j["kernel"] = kernel;
  j["weight_family"] = weight_family;
  j["power_exponents"] = power_exponents;
  j["mode"] = mode;
  j["samples"] = samples;
  j["seed"] = seed;
  j["threads"] = threads;
  j["u_list"] = u_list;
  j["v"] = v;
  j["trials"] = trials;
  return j.dump();
}

std::uint64_t ExperimentConfig::config_hash() const {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (unsigned char ch : to_canonical_json()) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t ExperimentConfig::task_seed(std::uint64_t task_index) const {
  std::uint64_t x = config_hash() ^ (seed + 0x9e3779b97f4a7c15ull) ^
                    (task_index * 0xbf58476d1ce4e5b9ull);
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ull;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebull;
  x ^= x >> 31;
  return x;
}

namespace {

struct CsvBuilder {
  std::string text;
  explicit CsvBuilder(std::uint64_t hash, const std::string& header) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "# config_hash=%016llx\n",
                  static_cast<unsigned long long>(hash));
    text = buf;
    text += header;
    text += '\n';
  }
  void row(const std::vector<std::string>& cols) {
    for (std::size_t i = 0; i < cols.size(); ++i) {
      if (i) text += ',';
      text += cols[i];
    }
    text += '\n';
  }
};

CZKernel kernel_from_spec(const std::string& spec, const GridParams& p) {
  if (spec == "hilbert") return hilbert_kernel();
  if (spec == "smooth_odd")
    return smooth_odd_kernel(std::ldexp(1.0, -p.k_max));
  throw std::invalid_argument("unknown kernel: " + spec);
}

OperatorMatrix matrix_from_spec(const std::string& spec, const GridParams& p,
                                const Window& win) {
  if (spec.rfind("custom:", 0) == 0) {
    std::ifstream in(spec.substr(7), std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open custom kernel dump");
    return OperatorMatrix::load_binary(in);
  }
  return kernel_matrix(kernel_from_spec(spec, p), p, win);
}

int run_pibad(const ExperimentConfig& cfg, CsvBuilder& csv) {
  for (int level = cfg.grid.k_min; level < cfg.grid.k_max; ++level) {
    DyadicCube ref;
    ref.level = level;
    GoodnessReport rep;
    if (cfg.mode == "exhaustive") {
      rep = estimate_pi_bad(cfg.grid, ref, ProbabilityMode::exhaustive);
    } else {
      rep = estimate_pi_bad(cfg.grid, ref, ProbabilityMode::monte_carlo,
                            cfg.samples, cfg.task_seed(level));
    }
    csv.row({std::to_string(level), format_double(rep.pi_bad_estimate),
             format_double(rep.ci_halfwidth), std::to_string(rep.trials),
             cfg.mode});
  }
  return 0;
}

int run_goodmds(const ExperimentConfig& cfg, CsvBuilder& csv) {
  const auto& p = cfg.grid;
  Window win = Window::full(p);
  GoodnessTable table = goodness_table(p);
  double pi_ref = table.pi_ref();
  for (int trial = 0; trial < cfg.trials; ++trial) {
    std::mt19937_64 rng(cfg.task_seed(trial));
    OperatorMatrix m(p.dim, p.k_max, win);
    for (auto& x : m.data())
      x = 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0;
    GridFunction f = random_function(p.dim, p.k_max, win, rng());
    GridFunction g = random_function(p.dim, p.k_max, win, rng());
    double direct = bilinear(m, g, f);
    auto avg = average_over_beta(
        [&](const DyadicSystem& sys) {
          return good_mds_value(m, f, g, sys, table);
        },
        p, ProbabilityMode::exhaustive);
    double expected = pi_ref * pi_ref * direct;
    double scale = std::max(std::fabs(expected), 1e-300);
    double residual = std::fabs(avg.estimate - expected) / scale;
    csv.row({std::to_string(trial), format_double(direct),
             format_double(avg.estimate), format_double(pi_ref),
             format_double(residual)});
  }
  return 0;
}

int run_represent(const ExperimentConfig& cfg, CsvBuilder& csv) {
  const auto& p = cfg.grid;
  Window win = Window::full(p);
  OperatorMatrix m = matrix_from_spec(cfg.kernel, p, win);
  GridFunction f = random_function(p.dim, p.k_max, win, cfg.task_seed(1));
  GridFunction g = random_function(p.dim, p.k_max, win, cfg.task_seed(2));
  std::vector<int> u_max = cfg.u_list;
  if (u_max.empty()) u_max = {4, 6, 8, -1};
  auto mode = cfg.mode == "exhaustive" ? ProbabilityMode::exhaustive
                                       : ProbabilityMode::monte_carlo;
  auto rep = verify_representation(m, p, f, g, u_max, mode, cfg.samples,
                                   cfg.task_seed(3));
  for (const auto& e : rep.series) {
    csv.row({std::to_string(e.u_max), format_double(rep.direct),
             format_double(e.reconstructed), format_double(e.ci_halfwidth),
             format_double(e.relative_error)});
  }
  return 0;
}

int run_weaktype(const ExperimentConfig& cfg, CsvBuilder& csv) {
  const auto& p = cfg.grid;
  Window win = Window::full(p);
  std::vector<int> us = cfg.u_list;
  if (us.empty()) us = {1, 2, 3, 4, 5, 6, 7, 8};
  for (std::size_t i = 0; i < us.size(); ++i) {
    int u = us[i];
    DyadicSystem sys = DyadicSystem::standard(p);
    RandomShiftOptions opt;
    opt.u = u;
    opt.v = cfg.v;
    opt.block_density = 1.0;
    opt.records_per_block = 2;
    auto shift = random_good_shift(sys, win, opt, cfg.task_seed(100 + i));
    if (!shift) return 3;
    double measured = measure_weak_l1_family(*shift, win);
    csv.row({std::to_string(u), std::to_string(cfg.v), format_double(measured),
             format_double(measured / u)});
  }
  return 0;
}

// unified sweep rows: (experiment,u,v,a,a2,measured_ratio,band).
// Maximal-function rows always; testing-ratio rows when u_list is given.
int run_a2scan(const ExperimentConfig& cfg, CsvBuilder& csv) {
  const auto& p = cfg.grid;
  Window win = Window::full(p);
  DyadicSystem sys = DyadicSystem::standard(p);
  for (std::size_t i = 0; i < cfg.power_exponents.size(); ++i) {
    double a = cfg.power_exponents[i];
    Weight w = power_weight(p, win, a, 0.0);
    double dy = a2_characteristic(w, sys, CubeFamily::dyadic);
    GridFunction f(p.dim, p.k_max, win);
    for (std::int64_t c = 0; c < f.size() / 4; ++c) f.values()[c] = 1.0;
    double br = buckley_ratio(f, w, sys);
    csv.row({"buckley", "0", "0", format_double(a), format_double(dy),
             format_double(br), format_double(br)});
    for (std::size_t j = 0; j < cfg.u_list.size(); ++j) {
      int u = cfg.u_list[j];
      RandomShiftOptions opt;
      opt.u = u;
      opt.v = cfg.v;
      opt.records_per_block = 2;
      auto s = random_good_shift(sys, win, opt, cfg.task_seed(300 + j));
      if (!s) continue;
      TickBox Q = sys.realize(DyadicCube{p.k_min + 1, {0}});
      auto rep = testing_ratio(*s, w, Q);
      csv.row({"testing", std::to_string(u), std::to_string(cfg.v),
               format_double(a), format_double(dy), format_double(rep.ratio),
               format_double(rep.ratio / (u * cfg.v))});
    }
  }
  return 0;
}

int run_corona(const ExperimentConfig& cfg, CsvBuilder& csv) {
  const auto& p = cfg.grid;
  Window win = Window::full(p);
  DyadicSystem sys = DyadicSystem::standard(p);
  Weight w = cfg.weight_family == "step"
                 ? step_weight(p, win, 5.0, 1.0, win.extent(0) / 4)
                 : power_weight(p, win,
                                cfg.power_exponents.empty()
                                    ? 0.9
                                    : cfg.power_exponents.back(),
                                0.0);
  RandomShiftOptions opt;
  opt.u = cfg.u_list.empty() ? 2 : cfg.u_list[0];
  opt.v = cfg.v;
  auto shift = random_good_shift(sys, win, opt, cfg.task_seed(7));
  if (!shift) return 3;
  TickBox Q = win.box();
  auto filtered = khat_filter(*shift, Q);
  std::vector<DyadicCube> collection;
  for (const auto& b : filtered.blocks) collection.push_back(b.K);
  auto corona = corona_decompose(collection, w, Q, opt.v, sys);
  auto packing = packing_check(corona, sys);
  auto stopping = stopping_sum_check(corona, w, Q, opt.u, opt.v, sys);
  int stopping_count = 0, bucket_count = 0;
  for (const auto& cls : corona.classes) {
    bucket_count += static_cast<int>(cls.buckets.size());
    for (const auto& b : cls.buckets)
      stopping_count += static_cast<int>(b.stopping.size());
  }
  csv.row({std::to_string(corona.classes.size()), std::to_string(bucket_count),
           std::to_string(stopping_count),
           format_double(packing.max_first_generation_ratio),
           format_double(packing.geometric_sum_ratio),
           std::to_string(stopping.chain_ratios_ok ? 1 : 0),
           format_double(stopping.ratio),
           format_double(stopping.max_domination_defect)});
  std::ofstream forest(cfg.out_dir + "/corona_forest.json");
  forest << corona.to_json(sys) << '\n';
  return 0;
}

int run_jntail(const ExperimentConfig& cfg, CsvBuilder& csv) {
  const auto& p = cfg.grid;
  Window win = Window::full(p);
  DyadicSystem sys = DyadicSystem::standard(p);
  // a power weight varies at every scale; a dyadic step would pair to zero
  // against all finer Haar inputs
  Weight w = power_weight(
      p, win, cfg.power_exponents.empty() ? -0.9 : cfg.power_exponents.back(),
      0.0);
  RandomShiftOptions opt;
  opt.u = cfg.u_list.empty() ? 2 : cfg.u_list[0];
  opt.v = cfg.v;
  auto shift = random_good_shift(sys, win, opt, cfg.task_seed(11));
  if (!shift) return 3;
  TickBox Q = win.box();
  auto filtered = khat_filter(*shift, Q);
  std::vector<DyadicCube> collection;
  for (const auto& b : filtered.blocks) collection.push_back(b.K);
  auto corona = corona_decompose(collection, w, Q, opt.v, sys);
  // emit the sub-bucket whose tail curve has the longest visible support
  // (constant stretches of the weight pair to zero against most inputs)
  TailCurve best;
  int best_support = -1;
  for (const auto& cls : corona.classes) {
    for (const auto& bucket : cls.buckets) {
      for (const auto& [key, members] : bucket.sub_buckets) {
        if (members.empty()) continue;
        const auto& S = bucket.stopping[key.first].cube;
        std::vector<DyadicCube> keep;
        for (int idx : members) keep.push_back(bucket.cubes[idx]);
        auto restricted = restrict_shift(filtered, [&](const DyadicCube& K) {
          for (const auto& c : keep)
            if (c == K) return true;
          return false;
        });
        TickBox sbox = sys.realize(S);
        TickBox cap = sbox;
        for (int c = 0; c < p.dim; ++c) {
          cap.lo[c] = std::max(sbox.lo[c], Q.lo[c]);
          cap.hi[c] = std::min(sbox.hi[c], Q.hi[c]);
        }
        double dens = w.w_measure(cap) / std::ldexp(1.0, -p.dim * S.level);
        std::vector<double> grid;
        for (double t = 0.0; t <= 32.0; t += 0.5) grid.push_back(t);
        auto curve = jn_tail(restricted, w, Q, S, opt.u, key.second, dens, grid,
                             sys);
        int support = 0;
        for (double tail : curve.lebesgue_tail)
          if (tail > 0.0) ++support;
        if (support > best_support) {
          best_support = support;
          best = curve;
        }
      }
    }
  }
  for (std::size_t i = 0; i < best.t.size(); ++i)
    csv.row({format_double(best.t[i]), format_double(best.lebesgue_tail[i]),
             format_double(best.sigma_tail[i])});
  return 0;
}

}  // namespace

int run_experiment(const ExperimentConfig& cfg) {
  auto started = std::chrono::steady_clock::now();
  std::string header;
  if (cfg.experiment == "pibad")
    header = "level,pi_bad,ci,trials,mode";
  else if (cfg.experiment == "goodmds")
    header = "trial,direct,beta_avg,pi_ref,residual";
  else if (cfg.experiment == "represent")
    header = "u_max,direct,reconstructed,ci,relative_error";
  else if (cfg.experiment == "weaktype")
    header = "u,v,measured,measured_over_u";
  else if (cfg.experiment == "a2scan")
    header = "experiment,u,v,a,a2,measured_ratio,band";
  else if (cfg.experiment == "corona")
    header =
        "classes,buckets,stopping,packing_ratio,geometric_ratio,chain_ok,"
        "sum_ratio,domination";
  else if (cfg.experiment == "jntail")
    header = "t,lebesgue_tail,sigma_tail";
  else
    return 2;

  CsvBuilder csv(cfg.config_hash(), header);
  int status;
  try {
    cfg.grid.validate();
    if (cfg.experiment == "pibad")
      status = run_pibad(cfg, csv);
    else if (cfg.experiment == "goodmds")
      status = run_goodmds(cfg, csv);
    else if (cfg.experiment == "represent")
      status = run_represent(cfg, csv);
    else if (cfg.experiment == "weaktype")
      status = run_weaktype(cfg, csv);
    else if (cfg.experiment == "a2scan")
      status = run_a2scan(cfg, csv);
    else if (cfg.experiment == "corona")
      status = run_corona(cfg, csv);
    else
      status = run_jntail(cfg, csv);
  } catch (const resource_error& e) {
    std::ofstream err(cfg.out_dir + "/" + cfg.experiment + ".error.json");
    err << nlohmann::json{{"error", e.what()}, {"kind", "resource"}}.dump()
        << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::ofstream err(cfg.out_dir + "/" + cfg.experiment + ".error.json");
    err << nlohmann::json{{"error", e.what()}, {"kind", "usage"}}.dump() << '\n';
    return 2;
  }
  if (status != 0) return status;

  std::string csv_path = cfg.out_dir + "/" + cfg.experiment + ".csv";
  std::ofstream out(csv_path, std::ios::binary);
  out << csv.text;
  out.close();

  auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                     std::chrono::steady_clock::now() - started)
                     .count();
  char hash_buf[32];
  std::snprintf(hash_buf, sizeof hash_buf, "%016llx",
                static_cast<unsigned long long>(cfg.config_hash()));
  nlohmann::json prov;
  prov["config"] = nlohmann::json::parse(cfg.to_canonical_json());
  prov["config_hash"] = hash_buf;
  prov["version"] = "shiftlab 0.1.0";
  prov["wall_ms"] = elapsed;
  std::ofstream prov_out(csv_path + ".provenance.json");
  prov_out << prov.dump(2) << '\n';
  return 0;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::string emit_plotdata(const std::string& results_csv, const std::string& x_col,
                          const std::string& y_col) {
  std::istringstream in(results_csv);
  std::string line;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header.empty()) {
      header = split_csv_line(line);
    } else {
      rows.push_back(split_csv_line(line));
    }
  }
  std::string out = "x,y,series\n";
  if (header.empty()) return out;
  std::int64_t xi = -1, yi = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == x_col) xi = static_cast<std::int64_t>(i);
    if (header[i] == y_col) yi = static_cast<std::int64_t>(i);
  }
  if (xi < 0 || yi < 0)
    throw std::invalid_argument("plotdata: missing column " + x_col + " or " +
                                y_col);
  std::stable_sort(rows.begin(), rows.end(),
                   [&](const auto& a, const auto& b) {
                     return std::stod(a[xi]) < std::stod(b[xi]);
                   });
  for (const auto& r : rows) {
    std::string series;
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (static_cast<std::int64_t>(i) == xi ||
          static_cast<std::int64_t>(i) == yi)
        continue;
      if (!series.empty()) series += ';';
      series += header[i] + "=" + r[i];
    }
    out += r[xi] + "," + r[yi] + "," + series + "\n";
  }
  return out;
}

std::string unpivot_plotdata(const std::string& plot_csv,
                             const std::string& original_header) {
  std::istringstream in(plot_csv);
  std::string line;
  std::getline(in, line);  // x,y,series
  auto header_cols = split_csv_line(original_header);
  std::string out = original_header + "\n";
  // reconstructed column values keyed by name
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto parts = split_csv_line(line);
    // parts: x, y, series (series itself contains no commas)
    std::vector<std::pair<std::string, std::string>> kv;
    std::string item;
    std::istringstream ss(parts.size() > 2 ? parts[2] : "");
    while (std::getline(ss, item, ';')) {
      auto eq = item.find('=');
      if (eq != std::string::npos)
        kv.emplace_back(item.substr(0, eq), item.substr(eq + 1));
    }
    std::vector<std::string> row;
    std::size_t used = 0;
    for (const auto& name : header_cols) {
      bool found = false;
      for (const auto& [k, v] : kv)
        if (k == name) {
          row.push_back(v);
          found = true;
          break;
        }
      if (!found) {
        row.push_back(used == 0 ? parts[0] : parts[1]);
        ++used;
      }
    }
    for (std::size_t i = 0; i < row.size(); ++i)
      out += (i ? "," : "") + row[i];
    out += "\n";
  }
  return out;
}

}  // namespace shiftlab
