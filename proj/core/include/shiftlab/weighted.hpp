#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "shiftlab/dyadic.hpp"
#include "shiftlab/grid_function.hpp"
#include "shiftlab/shifts.hpp"

// A2 weights, dyadic maximal function, the testing condition, and the corona
// (stopping-cube) machinery with its packing / John-Nirenberg measurements.

namespace shiftlab {

class Weight {
 public:
  explicit Weight(GridFunction w);
  const GridFunction& w() const { return w_; }
  const GridFunction& sigma() const { return sigma_; }  // pointwise 1/w
  // w-measure of box ∩ window
  double w_measure(const TickBox& box) const { return w_.integral_over(box); }
  double sigma_measure(const TickBox& box) const { return sigma_.integral_over(box); }

 private:
  GridFunction w_;
  GridFunction sigma_;
};

enum class CubeFamily { dyadic, grid_aligned };

// sup over the family of (avg w)(avg 1/w); exact scan
double a2_characteristic(const Weight& weight, const DyadicSystem& sys,
                         CubeFamily family);

// pointwise sup over containing dyadic cubes of |f|-averages
GridFunction dyadic_maximal(const GridFunction& f, const DyadicSystem& sys);

// ||Mf||_{L2(w)} / (||w||_A2 ||f||_{L2(w)}), dyadic A2
double buckley_ratio(const GridFunction& f, const Weight& weight,
                     const DyadicSystem& sys);

double weighted_l2_norm(const GridFunction& f, const GridFunction& weight);

struct TestingRatioReport {
  double ratio = 0.0;        // ||S(w 1_Q)||_{L2(sigma)} / (||w||_A2 w(Q)^{1/2})
  double large_scale = 0.0;  // same normalization, blocks l(K) >= l(Q)
  double small_scale = 0.0;  // blocks l(K) < l(Q)
  double a2 = 0.0;
  double wq = 0.0;
};

TestingRatioReport testing_ratio(const DyadicShift& shift, const Weight& weight,
                                 const TickBox& Q);

// restriction of the shift to {K : Khat ∩ Q != empty, l(K) < l(Q)} where
// Khat = {x in K : dist(x, dK) >= 2^{-max(u,v) gamma} l(K)}
DyadicShift khat_filter(const DyadicShift& shift, const TickBox& Q);

struct StoppingNode {
  DyadicCube cube;
  int generation = 0;
  int parent = -1;  // index into the stopping vector, -1 for roots
};

struct CoronaBucket {
  int a = 0;                       // local A2 bucket: 2^a < (.)(.) <= 2^{a+1}
  std::vector<DyadicCube> cubes;   // K^a
  std::vector<StoppingNode> stopping;              // S^a, all generations
  std::vector<int> assignment;     // cubes[i] -> index of minimal stopping cube
  // (stopping index, b) -> member cube indices; b >= 1 per the printed bands
  std::map<std::pair<int, int>, std::vector<int>> sub_buckets;
  std::map<std::pair<int, int>, double> tau;  // comparability ratio
};

struct CoronaClass {
  int mod_value = 0;  // log2 l(K) mod (v+1)
  std::vector<CoronaBucket> buckets;
};

struct CoronaDecomposition {
  int v = 0;
  TickBox Q{};
  std::vector<CoronaClass> classes;
  std::string to_json(const DyadicSystem& sys) const;
};

// steps (1)-(4): mod-class split, local-A2 buckets, stopping cubes by the
// density rule (> 4x), sub-buckets by the density band
CoronaDecomposition corona_decompose(const std::vector<DyadicCube>& collection,
                                     const Weight& weight, const TickBox& Q,
                                     int v, const DyadicSystem& sys);

struct PackingReport {
  bool ok = true;
  double max_first_generation_ratio = 0.0;  // sum |S'| / |S| over children
  double geometric_sum_ratio = 0.0;  // all generations vs (4/3) first level
};

PackingReport packing_check(const CoronaDecomposition& corona,
                            const DyadicSystem& sys);

struct TailCurve {
  std::vector<double> t;
  std::vector<double> lebesgue_tail;  // nu({|.| > scale * t}) / nu(S)
  std::vector<double> sigma_tail;
  double scale = 0.0;  // u 2^{-b} w(S∩Q)/|S|
};

// tail of |S_{K^a_b(S)}(w 1_Q)| at heights scale * t, both measures
TailCurve jn_tail(const DyadicShift& restricted, const Weight& weight,
                  const TickBox& Q, const DyadicCube& S, int u, int b,
                  double w_density, const std::vector<double>& t_grid,
                  const DyadicSystem& sys);

struct StoppingSumReport {
  double sum_w_s_cap_q = 0.0;   // total over every class and bucket
  double bound_rhs = 0.0;       // 2^{max(u,v) gamma N} ||w||_A2 w(Q)
  double ratio = 0.0;           // max per-class sum / bound (the lemma is
                                // stated for one fixed subcollection)
  bool chain_ratios_ok = true;  // nested stopping density ratios all > 4
  double max_domination_defect = 0.0;  // max over cells of
                                       // sum_S (w(S∩Q)/|S|) 1_S / M(w 1_Q)
};

StoppingSumReport stopping_sum_check(const CoronaDecomposition& corona,
                                     const Weight& weight, const TickBox& Q,
                                     int u, int v, const DyadicSystem& sys);

// power weight |x - x0|^a via exact cell averages; a in (-1, 1)
Weight power_weight(const GridParams& params, const Window& win, double exponent,
                    double x0);
// two-valued step weight: value left on cells below split, right above
Weight step_weight(const GridParams& params, const Window& win, double left,
                   double right, std::int64_t split_cell);

}  // namespace shiftlab
