#include "shiftlab/dyadic.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>

#include "json.hpp"

namespace shiftlab {

Rational default_gamma(int dim, Rational alpha) {
  // alpha/(2(N+alpha)) = a_num / (2 (N a_den + a_num))
  Rational g{alpha.num, 2 * (dim * alpha.den + alpha.num)};
  long long d = std::__gcd(g.num, g.den);
  return Rational{g.num / d, g.den / d};
}

void GridParams::validate() const {
  if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("dim out of range");
  if (k_min >= k_max) throw std::invalid_argument("k_min must be < k_max");
  if (r < 1) throw std::invalid_argument("r must be >= 1");
  if (gamma.num <= 0 || gamma.den <= 0 || 2 * gamma.num >= gamma.den)
    throw std::invalid_argument("gamma must lie in (0, 1/2)");
  if (gamma.den > 64) throw std::invalid_argument("gamma denominator too large");
  if (levels() > 30) throw std::invalid_argument("too many levels");
}

bool cube_less(const DyadicCube& a, const DyadicCube& b) {
  if (a.level != b.level) return a.level < b.level;
  return a.index < b.index;
}

bool TickBox::empty() const {
  for (int c = 0; c < dim; ++c)
    if (lo[c] >= hi[c]) return true;
  return false;
}

std::int64_t TickBox::volume_ticks() const {
  std::int64_t v = 1;
  for (int c = 0; c < dim; ++c) v *= std::max<std::int64_t>(0, hi[c] - lo[c]);
  return v;
}

Window Window::full(const GridParams& p) {
  Window w;
  w.dim = p.dim;
  for (int c = 0; c < p.dim; ++c) {
    w.lo[c] = 0;
    w.hi[c] = std::int64_t{1} << p.levels();
  }
  return w;
}

std::int64_t Window::cell_count() const {
  std::int64_t n = 1;
  for (int c = 0; c < dim; ++c) n *= extent(c);
  return n;
}

std::int64_t Window::flatten(const Index& cell) const {
  std::int64_t k = 0;
  for (int c = 0; c < dim; ++c) k = k * extent(c) + (cell[c] - lo[c]);
  return k;
}

DyadicSystem::DyadicSystem(GridParams params, std::vector<std::uint8_t> bits)
    : params_(params), bits_(std::move(bits)) {
  params_.validate();
  if (static_cast<int>(bits_.size()) != params_.beta_bit_count())
    throw std::invalid_argument("beta bit count mismatch");
  for (auto b : bits_)
    if (b > 1) throw std::invalid_argument("beta bits must be 0 or 1");
  // offset(k, c) = sum_{j>k} beta_j[c] 2^{k_max-j}, accumulated fine-to-coarse
  offsets_.assign(static_cast<std::size_t>(params_.levels() + 1) * params_.dim, 0);
  for (int k = params_.k_max - 1; k >= params_.k_min; --k) {
    for (int c = 0; c < params_.dim; ++c) {
      std::int64_t finer = offsets_[(k + 1 - params_.k_min) * params_.dim + c];
      std::int64_t b = bit(k + 1, c);
      offsets_[(k - params_.k_min) * params_.dim + c] =
          finer + (b << (params_.k_max - (k + 1)));
    }
  }
}

DyadicSystem DyadicSystem::standard(const GridParams& p) {
  return DyadicSystem(p, std::vector<std::uint8_t>(p.beta_bit_count(), 0));
}

DyadicSystem DyadicSystem::sample(const GridParams& p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::uint8_t> bits(p.beta_bit_count());
  for (auto& b : bits) b = static_cast<std::uint8_t>(rng() >> 63);
  return DyadicSystem(p, std::move(bits));
}

DyadicSystem DyadicSystem::from_config(const GridParams& p, std::uint64_t config) {
  int n = p.beta_bit_count();
  if (n > 63) throw resource_error("bit budget exceeded for config enumeration");
  std::vector<std::uint8_t> bits(n);
  for (int i = 0; i < n; ++i) bits[i] = (config >> i) & 1;
  return DyadicSystem(p, std::move(bits));
}

std::uint8_t DyadicSystem::bit(int level_j, int c) const {
  if (level_j <= params_.k_min || level_j > params_.k_max) return 0;
  return bits_[(level_j - params_.k_min - 1) * params_.dim + c];
}

std::int64_t DyadicSystem::offset_ticks(int level, int c) const {
  if (level >= params_.k_max) return 0;
  if (level < params_.k_min) throw std::out_of_range("level below k_min");
  return offsets_[(level - params_.k_min) * params_.dim + c];
}

std::int64_t DyadicSystem::side_ticks(int level) const {
  return std::int64_t{1} << (params_.k_max - level);
}

TickBox DyadicSystem::realize(const DyadicCube& cube) const {
  if (cube.level < params_.k_min || cube.level > params_.k_max)
    throw std::out_of_range("cube level out of range");
  TickBox b;
  b.dim = params_.dim;
  std::int64_t s = side_ticks(cube.level);
  for (int c = 0; c < params_.dim; ++c) {
    b.lo[c] = cube.index[c] * s + offset_ticks(cube.level, c);
    b.hi[c] = b.lo[c] + s;
  }
  return b;
}

std::vector<DyadicCube> children(const DyadicSystem& sys, const DyadicCube& cube) {
  const auto& p = sys.params();
  if (cube.level >= p.k_max) throw std::out_of_range("no children below k_max");
  std::vector<DyadicCube> out;
  out.reserve(std::size_t{1} << p.dim);
  for (unsigned eta = 0; eta < (1u << p.dim); ++eta) {
    DyadicCube ch;
    ch.level = cube.level + 1;
    for (int c = 0; c < p.dim; ++c)
      ch.index[c] = 2 * cube.index[c] + sys.bit(cube.level + 1, c) + ((eta >> c) & 1);
    out.push_back(ch);
  }
  return out;
}

static std::int64_t floordiv2(std::int64_t x) { return x >> 1; }

DyadicCube parent(const DyadicSystem& sys, const DyadicCube& cube) {
  const auto& p = sys.params();
  if (cube.level <= p.k_min) throw std::out_of_range("no parent above k_min");
  DyadicCube pa;
  pa.level = cube.level - 1;
  for (int c = 0; c < p.dim; ++c)
    pa.index[c] = floordiv2(cube.index[c] - sys.bit(cube.level, c));
  return pa;
}

DyadicCube ancestor(const DyadicSystem& sys, const DyadicCube& cube, int level) {
  if (level > cube.level) throw std::out_of_range("ancestor must be coarser");
  DyadicCube a = cube;
  while (a.level > level) a = parent(sys, a);
  return a;
}

DyadicCube cube_containing_cell(const DyadicSystem& sys, const Index& cell, int level) {
  const auto& p = sys.params();
  if (level < p.k_min || level > p.k_max) throw std::out_of_range("level out of range");
  DyadicCube cu;
  cu.level = level;
  std::int64_t s = sys.side_ticks(level);
  for (int c = 0; c < p.dim; ++c) {
    std::int64_t x = cell[c] - sys.offset_ticks(level, c);
    std::int64_t q = x >= 0 ? x / s : -((-x + s - 1) / s);
    cu.index[c] = q;
  }
  return cu;
}

std::vector<DyadicCube> cubes_meeting_window(const DyadicSystem& sys, int level,
                                             const Window& win) {
  const auto& p = sys.params();
  if (level < p.k_min || level > p.k_max) throw std::out_of_range("level out of range");
  std::int64_t s = sys.side_ticks(level);
  Index mlo{}, mhi{};
  for (int c = 0; c < p.dim; ++c) {
    std::int64_t off = sys.offset_ticks(level, c);
    // smallest m with (m+1)s + off > win.lo, largest with m s + off < win.hi
    std::int64_t a = win.lo[c] - off;
    std::int64_t lo = a >= 0 ? a / s : -((-a + s - 1) / s);
    if ((lo + 1) * s + off <= win.lo[c]) ++lo;
    std::int64_t b = win.hi[c] - 1 - off;
    std::int64_t hi = b >= 0 ? b / s : -((-b + s - 1) / s);
    mlo[c] = lo;
    mhi[c] = hi;
    if (lo > hi) return {};
  }
  std::vector<DyadicCube> out;
  Index idx = mlo;
  for (;;) {
    DyadicCube cu;
    cu.level = level;
    cu.index = idx;
    out.push_back(cu);
    int c = p.dim - 1;
    while (c >= 0) {
      if (++idx[c] <= mhi[c]) break;
      idx[c] = mlo[c];
      --c;
    }
    if (c < 0) break;
  }
  return out;
}

std::int64_t linf_distance_ticks(const TickBox& a, const TickBox& b) {
  std::int64_t d = 0;
  for (int c = 0; c < a.dim; ++c) {
    std::int64_t gap = std::max<std::int64_t>(
        0, std::max(b.lo[c] - a.hi[c], a.lo[c] - b.hi[c]));
    d = std::max(d, gap);
  }
  return d;
}

std::int64_t boundary_distance_ticks(const TickBox& small, const TickBox& big) {
  // closure(small) intersects the boundary of big -> 0;
  // fully inside -> min over faces; fully outside -> distance to big.
  bool inside = true, outside = false;
  for (int c = 0; c < small.dim; ++c) {
    if (small.lo[c] < big.lo[c] || small.hi[c] > big.hi[c]) inside = false;
    if (small.hi[c] < big.lo[c] || small.lo[c] > big.hi[c]) outside = true;
  }
  if (inside) {
    std::int64_t d = INT64_MAX;
    for (int c = 0; c < small.dim; ++c)
      d = std::min({d, small.lo[c] - big.lo[c], big.hi[c] - small.hi[c]});
    return d;
  }
  if (outside) return linf_distance_ticks(small, big);
  return 0;  // straddles the boundary
}

std::int64_t boundary_distance_ticks(const DyadicSystem& sys,
                                     const DyadicCube& small,
                                     const DyadicCube& big) {
  return boundary_distance_ticks(sys.realize(small), sys.realize(big));
}

namespace detail {

int pow_cmp(std::uint64_t s, int e, long long m) {
  if (s == 0) return -1;  // 0 < 2^m
  while ((s & 1) == 0) {
    s >>= 1;
    m -= e;
  }
  if (s == 1) return m > 0 ? -1 : (m == 0 ? 0 : 1);
  // s odd >= 3: s^e is never a power of two
  if (m <= 0) return 1;
  int bl = std::bit_width(s);
  if (static_cast<long long>(bl - 1) * e >= m) return 1;
  if (static_cast<long long>(bl) * e <= m) return -1;
  // ambiguous: exact multiword power
  std::vector<std::uint64_t> v{1};
  for (int i = 0; i < e; ++i) {
    std::uint64_t carry = 0;
    for (auto& w : v) {
      unsigned __int128 prod = (unsigned __int128)w * s + carry;
      w = static_cast<std::uint64_t>(prod);
      carry = static_cast<std::uint64_t>(prod >> 64);
    }
    if (carry) v.push_back(carry);
  }
  long long bits = (static_cast<long long>(v.size()) - 1) * 64 +
                   std::bit_width(v.back());
  if (bits - 1 > m) return 1;   // s^e >= 2^{bits-1} > 2^m
  if (bits - 1 < m) return -1;  // s^e < 2^{bits} <= 2^m
  return 1;                     // same leading bit, s^e odd-tailed > 2^m
}

}  // namespace detail

int compare_dist_threshold(const GridParams& p, std::int64_t dist_ticks,
                           int level_small, int level_big, bool half_factor) {
  // dist * 2^-k_max  vs  2^{-(k_s*gn + k_b*(gd-gn))/gd}, optionally halved.
  long long gn = p.gamma.num, gd = p.gamma.den;
  long long m = gd * p.k_max - gn * level_small - (gd - gn) * level_big;
  if (half_factor) m -= gd;
  return detail::pow_cmp(static_cast<std::uint64_t>(dist_ticks),
                         static_cast<int>(gd), m);
}

// minimal per-coordinate distance from cube to the level-q lattice planes
static std::int64_t dist_to_level_lattice(const DyadicSystem& sys,
                                          const DyadicCube& cube, int q) {
  TickBox b = sys.realize(cube);
  std::int64_t sq = sys.side_ticks(q);
  std::int64_t best = INT64_MAX;
  for (int c = 0; c < b.dim; ++c) {
    std::int64_t x = b.lo[c] - sys.offset_ticks(q, c);
    std::int64_t pos = ((x % sq) + sq) % sq;
    std::int64_t left = pos;
    std::int64_t right = sq - (pos + (b.hi[c] - b.lo[c]));
    best = std::min({best, left, right});
  }
  return best;
}

bool is_bad(const DyadicSystem& sys, const DyadicCube& cube) {
  const auto& p = sys.params();
  for (int q = p.k_min; q <= cube.level - p.r; ++q) {
    std::int64_t d = dist_to_level_lattice(sys, cube, q);
    if (dist_leq_goodness_threshold(p, d, cube.level, q)) return true;
  }
  return false;
}

bool is_good_pair(const DyadicSystem& sys, const DyadicCube& small,
                  const DyadicCube& big) {
  const auto& p = sys.params();
  if (small.level < big.level)
    throw std::invalid_argument("is_good_pair: small must not be coarser than big");
  for (int q = std::max(p.k_min, big.level); q <= small.level - p.r; ++q) {
    std::int64_t d = dist_to_level_lattice(sys, small, q);
    if (dist_leq_goodness_threshold(p, d, small.level, q)) return false;
  }
  return true;
}

GoodnessReport estimate_pi_bad(const GridParams& params,
                               const DyadicCube& reference_cube,
                               ProbabilityMode mode, long long trials,
                               std::uint64_t seed) {
  params.validate();
  GoodnessReport rep;
  rep.params = params;
  rep.reference_level = reference_cube.level;
  rep.mode = mode;
  if (mode == ProbabilityMode::exhaustive) {
    if (params.beta_bit_count() > 24)
      throw resource_error("exhaustive pi_bad limited to 24 beta bits");
    // goodness depends only on bits at levels <= reference level
    int nb = params.dim * (reference_cube.level - params.k_min);
    nb = std::max(nb, 0);
    long long total = 1ll << nb;
    long long bad = 0;
    std::vector<std::uint8_t> bits(params.beta_bit_count(), 0);
    for (long long cfg = 0; cfg < total; ++cfg) {
      for (int i = 0; i < nb; ++i) bits[i] = (cfg >> i) & 1;
      DyadicSystem sys(params, bits);
      if (is_bad(sys, reference_cube)) ++bad;
    }
    rep.pi_bad_estimate = static_cast<double>(bad) / static_cast<double>(total);
    rep.ci_halfwidth = 0.0;
    rep.trials = total;
  } else {
    if (trials < 1) throw std::invalid_argument("monte_carlo needs trials >= 1");
    std::mt19937_64 rng(seed);
    long long bad = 0;
    for (long long t = 0; t < trials; ++t) {
      DyadicSystem sys = DyadicSystem::sample(params, rng());
      if (is_bad(sys, reference_cube)) ++bad;
    }
    double p = static_cast<double>(bad) / static_cast<double>(trials);
    rep.pi_bad_estimate = p;
    rep.ci_halfwidth = 2.0 * std::sqrt(std::max(p * (1 - p), 1e-12) /
                                       static_cast<double>(trials));
    rep.trials = trials;
  }
  return rep;
}

double conditional_goodness(const DyadicSystem& sys, const DyadicCube& cube,
                            int coarse_level) {
  const auto& p = sys.params();
  if (coarse_level < p.k_min || coarse_level > cube.level)
    throw std::invalid_argument("conditional_goodness: bad fixed-bit index set");
  // free bits: levels (k_min, coarse_level]; fixed: levels > coarse_level
  int nfree = p.dim * (coarse_level - p.k_min);
  long long total = 1ll << nfree;
  long long good = 0;
  std::vector<std::uint8_t> bits = sys.bits();
  for (long long cfg = 0; cfg < total; ++cfg) {
    for (int i = 0; i < nfree; ++i) bits[i] = (cfg >> i) & 1;
    DyadicSystem s(p, bits);
    if (!is_bad(s, cube)) ++good;
  }
  return static_cast<double>(good) / static_cast<double>(total);
}

GoodnessTable goodness_table(const GridParams& params) {
  GoodnessTable t;
  t.params = params;
  DyadicCube ref;
  for (int k = params.k_min; k < params.k_max; ++k) {
    ref.level = k;
    ref.index = {};
    auto rep = estimate_pi_bad(params, ref, ProbabilityMode::exhaustive);
    t.pi_good.push_back(1.0 - rep.pi_bad_estimate);
  }
  return t;
}

BetaAverage average_over_beta(const std::function<double(const DyadicSystem&)>& fn,
                              const GridParams& params, ProbabilityMode mode,
                              long long samples, std::uint64_t seed) {
  BetaAverage out;
  if (mode == ProbabilityMode::exhaustive) {
    int nb = params.beta_bit_count();
    if (nb > 24) throw resource_error("exhaustive beta average limited to 24 bits");
    long long total = 1ll << nb;
    double sum = 0.0;
    for (long long cfg = 0; cfg < total; ++cfg)
      sum += fn(DyadicSystem::from_config(params, cfg));
    out.estimate = sum / static_cast<double>(total);
    out.ci_halfwidth = 0.0;
    out.samples = total;
  } else {
    if (samples < 1) throw std::invalid_argument("monte_carlo needs samples >= 1");
    std::mt19937_64 rng(seed);
    double sum = 0.0, sumsq = 0.0;
    for (long long i = 0; i < samples; ++i) {
      double v = fn(DyadicSystem::sample(params, rng()));
      sum += v;
      sumsq += v * v;
    }
    double mean = sum / static_cast<double>(samples);
    double var = std::max(0.0, sumsq / static_cast<double>(samples) - mean * mean);
    out.estimate = mean;
    out.ci_halfwidth = 2.0 * std::sqrt(var / static_cast<double>(samples));
    out.samples = samples;
  }
  return out;
}

std::string GoodnessReport::to_json() const {
  nlohmann::json j;
  j["pi_bad"] = pi_bad_estimate;
  j["ci"] = ci_halfwidth;
  j["trials"] = trials;
  j["mode"] = mode == ProbabilityMode::exhaustive ? "exhaustive" : "monte_carlo";
  j["params"] = {{"dim", params.dim},       {"k_min", params.k_min},
                 {"k_max", params.k_max},   {"r", params.r},
                 {"gamma_num", params.gamma.num}, {"gamma_den", params.gamma.den},
                 {"reference_level", reference_level}};
  return j.dump();
}

}  // namespace shiftlab
