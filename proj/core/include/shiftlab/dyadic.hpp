#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

// Truncated shifted dyadic systems: cube geometry, ancestry, good/bad
// predicates and goodness probabilities. All coordinates are integer
// multiples of the finest cell side 2^-k_max ("ticks"), so every geometric
// predicate is exact.

namespace shiftlab {

inline constexpr int kMaxDim = 4;

struct resource_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Exact rational in (0,1), small denominator. Used for the goodness
// exponent gamma.
struct Rational {
  long long num = 1;
  long long den = 4;
  bool operator==(const Rational&) const = default;
};

// gamma = alpha / (2 (N + alpha)) with alpha = a_num/a_den.
Rational default_gamma(int dim, Rational alpha = {1, 1});

struct GridParams {
  int dim = 1;     // N
  int k_min = 0;   // coarsest level (side 2^-k_min)
  int k_max = 6;   // finest level
  int r = 2;       // goodness scale gap
  Rational gamma{1, 4};

  int levels() const { return k_max - k_min; }
  int beta_bit_count() const { return dim * levels(); }
  void validate() const;  // throws std::invalid_argument
  bool operator==(const GridParams&) const = default;
};

using Index = std::array<std::int64_t, kMaxDim>;

struct DyadicCube {
  int level = 0;
  Index index{};
  bool operator==(const DyadicCube&) const = default;
};

// Deterministic ordering for maps / stable iteration.
bool cube_less(const DyadicCube& a, const DyadicCube& b);

// Half-open axis-parallel box in ticks.
struct TickBox {
  int dim = 1;
  Index lo{};
  Index hi{};
  bool empty() const;
  std::int64_t volume_ticks() const;
};

// Finite index box of finest-level cells.
struct Window {
  int dim = 1;
  Index lo{};
  Index hi{};

  static Window full(const GridParams& p);  // [0, 2^levels)^N
  std::int64_t extent(int c) const { return hi[c] - lo[c]; }
  std::int64_t cell_count() const;
  // row-major flattening of a global cell coordinate
  std::int64_t flatten(const Index& cell) const;
  TickBox box() const { return TickBox{dim, lo, hi}; }
};

class DyadicSystem {
 public:
  // bits laid out level-major: bit for level j (k_min < j <= k_max),
  // coordinate c sits at (j - k_min - 1)*dim + c.
  DyadicSystem(GridParams params, std::vector<std::uint8_t> bits);

  static DyadicSystem standard(const GridParams& p);  // all bits zero
  static DyadicSystem sample(const GridParams& p, std::uint64_t seed);
  // config enumerates bit patterns 0 .. 2^bit_count - 1, LSB = first bit
  static DyadicSystem from_config(const GridParams& p, std::uint64_t config);

  const GridParams& params() const { return params_; }
  const std::vector<std::uint8_t>& bits() const { return bits_; }
  std::uint8_t bit(int level_j, int c) const;

  // sum_{j > k, in range} beta_j[c] 2^{k_max - j}
  std::int64_t offset_ticks(int level, int c) const;
  std::int64_t side_ticks(int level) const;
  TickBox realize(const DyadicCube& cube) const;

  bool operator==(const DyadicSystem& o) const {
    return params_ == o.params_ && bits_ == o.bits_;
  }

 private:
  GridParams params_;
  std::vector<std::uint8_t> bits_;
  std::vector<std::int64_t> offsets_;  // (level - k_min)*dim + c
};

// --- navigation ---------------------------------------------------------

std::vector<DyadicCube> children(const DyadicSystem& sys, const DyadicCube& cube);
DyadicCube parent(const DyadicSystem& sys, const DyadicCube& cube);
// unique ancestor at level `level` (<= cube.level)
DyadicCube ancestor(const DyadicSystem& sys, const DyadicCube& cube, int level);
// cube of the system containing a finest cell
DyadicCube cube_containing_cell(const DyadicSystem& sys, const Index& cell, int level);
// all level-k cubes meeting the window, sorted by index
std::vector<DyadicCube> cubes_meeting_window(const DyadicSystem& sys, int level,
                                             const Window& win);

// --- exact distances ----------------------------------------------------

// l-infinity distance between closed boxes, in ticks
std::int64_t linf_distance_ticks(const TickBox& a, const TickBox& b);
// l-infinity distance from closure(small) to the boundary of big, in ticks
std::int64_t boundary_distance_ticks(const TickBox& small, const TickBox& big);
std::int64_t boundary_distance_ticks(const DyadicSystem& sys,
                                     const DyadicCube& small,
                                     const DyadicCube& big);

namespace detail {
// sign of s^e - 2^m  (s >= 0, e >= 1). Exact.
int pow_cmp(std::uint64_t s, int e, long long m);
}  // namespace detail

// sign of dist - l(I)^g l(J)^(1-g), exact; dist in ticks, levels cube levels.
// half_factor: threshold halved (the good-shift distance).
int compare_dist_threshold(const GridParams& p, std::int64_t dist_ticks,
                           int level_small, int level_big,
                           bool half_factor = false);

inline bool dist_leq_goodness_threshold(const GridParams& p,
                                        std::int64_t dist_ticks,
                                        int level_small, int level_big,
                                        bool half_factor = false) {
  return compare_dist_threshold(p, dist_ticks, level_small, level_big,
                                half_factor) <= 0;
}

// --- goodness -----------------------------------------------------------

// bad iff some J in the truncated system with l(J) >= 2^r l(I) has
// dist(I, dJ) <= l(I)^g l(J)^(1-g)   (non-strict, as printed)
bool is_bad(const DyadicSystem& sys, const DyadicCube& cube);

// pair (small, big): dist(small, dK) > l(small)^g l(K)^(1-g) for all K with
// 2^r l(small) <= l(K) <= l(big). Trivially true if l(big) < 2^r l(small).
bool is_good_pair(const DyadicSystem& sys, const DyadicCube& small,
                  const DyadicCube& big);

enum class ProbabilityMode { exhaustive, monte_carlo };

struct GoodnessReport {
  double pi_bad_estimate = 0.0;
  double ci_halfwidth = 0.0;
  long long trials = 0;
  ProbabilityMode mode = ProbabilityMode::exhaustive;
  GridParams params;
  int reference_level = 0;
  std::string to_json() const;
};

GoodnessReport estimate_pi_bad(const GridParams& params,
                               const DyadicCube& reference_cube,
                               ProbabilityMode mode, long long trials = 0,
                               std::uint64_t seed = 0);

// P[cube good | bits at levels > coarse_level fixed to sys's values].
// Exact dyadic rational: enumerates the free bits (k_min, coarse_level].
double conditional_goodness(const DyadicSystem& sys, const DyadicCube& cube,
                            int coarse_level);

// Per-level full goodness probabilities pi_good(k), k in [k_min, k_max-1],
// plus the reference value at the finest D-level (the minimum).
struct GoodnessTable {
  GridParams params;
  std::vector<double> pi_good;  // index: level - k_min
  double pi_good_at(int level) const { return pi_good.at(level - params.k_min); }
  double pi_ref() const { return pi_good.back(); }
};

GoodnessTable goodness_table(const GridParams& params);

// --- beta averaging -----------------------------------------------------

struct BetaAverage {
  double estimate = 0.0;
  double ci_halfwidth = 0.0;  // 2 sigma; 0 in exhaustive mode
  long long samples = 0;
};

BetaAverage average_over_beta(const std::function<double(const DyadicSystem&)>& fn,
                              const GridParams& params, ProbabilityMode mode,
                              long long samples = 0, std::uint64_t seed = 0);

}  // namespace shiftlab
