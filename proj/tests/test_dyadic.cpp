#include <cmath>
#include <map>

#include "doctest.h"
#include "shiftlab/dyadic.hpp"

using namespace shiftlab;

namespace {

GridParams params_1d(int k_max, int r, Rational gamma = {1, 4}) {
  GridParams p;
  p.dim = 1;
  p.k_min = 0;
  p.k_max = k_max;
  p.r = r;
  p.gamma = gamma;
  return p;
}

// independent badness oracle for small 1D grids: exact __int128 power compare
// against a direct scan of nearby bigger cubes
bool oracle_is_bad_1d(const DyadicSystem& sys, const DyadicCube& cube) {
  const auto& p = sys.params();
  TickBox bi = sys.realize(cube);
  for (int q = p.k_min; q <= cube.level - p.r; ++q) {
    std::int64_t sq = sys.side_ticks(q);
    std::int64_t base = bi.lo[0] - sys.offset_ticks(q, 0);
    std::int64_t center = base >= 0 ? base / sq : -((-base + sq - 1) / sq);
    for (std::int64_t m = center - 2; m <= center + 2; ++m) {
      DyadicCube J;
      J.level = q;
      J.index[0] = m;
      std::int64_t d = boundary_distance_ticks(sys, cube, J);
      long long gn = p.gamma.num, gd = p.gamma.den;
      long long m2 = gd * p.k_max - gn * cube.level - (gd - gn) * q;
      REQUIRE(m2 >= 0);
      REQUIRE(m2 < 120);
      unsigned __int128 lhs = 1;
      for (long long e = 0; e < gd; ++e) lhs *= static_cast<unsigned __int128>(d);
      unsigned __int128 rhs = static_cast<unsigned __int128>(1) << m2;
      if (lhs <= rhs) return true;
    }
  }
  return false;
}

}  // namespace

TEST_CASE("make_system: zero bits give the standard system") {
  auto p = params_1d(3, 2);
  auto sys = DyadicSystem::standard(p);
  for (int k = 0; k <= 3; ++k) CHECK(sys.offset_ticks(k, 0) == 0);
  DyadicCube cu{1, {1}};
  auto box = sys.realize(cu);
  CHECK(box.lo[0] == 4);  // [1/2, 1) in ticks of 2^-3
  CHECK(box.hi[0] == 8);
}

TEST_CASE("make_system: offsets follow the summation formula") {
  // N=1, levels 0..3, beta = (1,0,0): offset(0) = 1/2, offset(1) = offset(2) = 0
  auto p = params_1d(3, 2);
  DyadicSystem sys(p, {1, 0, 0});
  CHECK(sys.offset_ticks(0, 0) == 4);  // 1/2 = 4 ticks of 2^-3
  CHECK(sys.offset_ticks(1, 0) == 0);
  CHECK(sys.offset_ticks(2, 0) == 0);
}

TEST_CASE("make_system: wrong bit count rejected") {
  auto p = params_1d(3, 2);
  CHECK_THROWS_AS(DyadicSystem(p, {1, 0}), std::invalid_argument);
  CHECK_THROWS_AS(DyadicSystem(p, {1, 0, 1, 1}), std::invalid_argument);
}

TEST_CASE("sample_system: deterministic and fair") {
  auto p = params_1d(5, 2);
  auto a = DyadicSystem::sample(p, 42);
  auto b = DyadicSystem::sample(p, 42);
  CHECK(a == b);

  // empirical bit means within 0.5 +- 0.02 over 10^4 samples
  std::vector<double> mean(p.beta_bit_count(), 0.0);
  const int n = 10000;
  for (int s = 0; s < n; ++s) {
    auto sys = DyadicSystem::sample(p, 1000 + s);
    for (int i = 0; i < p.beta_bit_count(); ++i) mean[i] += sys.bits()[i];
  }
  for (double m : mean) CHECK(std::fabs(m / n - 0.5) < 0.02);

  // distinct seeds differ somewhere across 100 pairs
  int differing = 0;
  for (int s = 0; s < 100; ++s) {
    if (!(DyadicSystem::sample(p, 2 * s) == DyadicSystem::sample(p, 2 * s + 1)))
      ++differing;
  }
  CHECK(differing >= 1);
}

TEST_CASE("navigate: children partition the parent") {
  auto p = params_1d(3, 2);
  DyadicSystem sys(p, {1, 1, 0});
  DyadicCube cu{1, {0}};
  auto kids = children(sys, cu);
  REQUIRE(kids.size() == 2);
  auto box = sys.realize(cu);
  auto b0 = sys.realize(kids[0]);
  auto b1 = sys.realize(kids[1]);
  CHECK(std::min(b0.lo[0], b1.lo[0]) == box.lo[0]);
  CHECK(std::max(b0.hi[0], b1.hi[0]) == box.hi[0]);
  CHECK(b0.hi[0] == b1.lo[0]);
  for (const auto& ch : kids) CHECK(parent(sys, ch) == cu);
}

TEST_CASE("navigate: 2D children are 4 disjoint cubes covering the parent") {
  GridParams p;
  p.dim = 2;
  p.k_min = 0;
  p.k_max = 3;
  p.r = 1;
  auto sys = DyadicSystem::sample(p, 7);
  DyadicCube cu{1, {0, -1}};
  auto kids = children(sys, cu);
  REQUIRE(kids.size() == 4);
  double vol = 0;
  for (const auto& ch : kids) {
    CHECK(ancestor(sys, ch, 1) == cu);
    vol += static_cast<double>(sys.realize(ch).volume_ticks());
  }
  CHECK(vol == static_cast<double>(sys.realize(cu).volume_ticks()));
}

TEST_CASE("navigate: ancestor relations") {
  auto p = params_1d(4, 2);
  auto sys = DyadicSystem::sample(p, 3);
  DyadicCube cu{4, {9}};
  CHECK(ancestor(sys, cu, 3) == parent(sys, cu));
  for (int k = 0; k <= 4; ++k) {
    auto a = sys.realize(ancestor(sys, cu, k));
    auto b = sys.realize(cu);
    CHECK(a.lo[0] <= b.lo[0]);
    CHECK(a.hi[0] >= b.hi[0]);
  }
  CHECK_THROWS_AS(ancestor(sys, cu, 5), std::out_of_range);
  CHECK_THROWS_AS(children(sys, DyadicCube{4, {0}}), std::out_of_range);
}

TEST_CASE("boundary_distance: hand geometry") {
  auto p = params_1d(3, 2);
  auto sys = DyadicSystem::standard(p);
  // I = [0, 1/4) at level 2, J = [0,1) at level 0: touches the boundary
  CHECK(boundary_distance_ticks(sys, DyadicCube{2, {0}}, DyadicCube{0, {0}}) == 0);
  // I = [1/4, 1/2): distance 1/4 = 2 ticks
  CHECK(boundary_distance_ticks(sys, DyadicCube{2, {1}}, DyadicCube{0, {0}}) == 2);

  GridParams p2;
  p2.dim = 2;
  p2.k_min = 0;
  p2.k_max = 2;
  p2.r = 1;
  auto sys2 = DyadicSystem::standard(p2);
  // I = [1/4,1/2)^2, J = [0,1)^2 -> 1/4 = 1 tick of 2^-2
  CHECK(boundary_distance_ticks(sys2, DyadicCube{2, {1, 1}},
                                DyadicCube{0, {0, 0}}) == 1);
}

TEST_CASE("is_bad: vacuous goodness above the scale gap") {
  auto p = params_1d(6, 2);
  auto sys = DyadicSystem::sample(p, 5);
  CHECK(!is_bad(sys, DyadicCube{0, {0}}));
  CHECK(!is_bad(sys, DyadicCube{1, {1}}));
}

TEST_CASE("is_bad: hand example at r=2, gamma=1/4") {
  auto p = params_1d(6, 2);
  auto sys = DyadicSystem::standard(p);
  // I = [0, 1/8): dist to the boundary of [0,1) is 0 <= (1/8)^{1/4}
  CHECK(is_bad(sys, DyadicCube{3, {0}}));
}

TEST_CASE("is_bad: matches brute-force oracle over all 64 configurations") {
  auto p = params_1d(6, 2);
  for (std::uint64_t cfg = 0; cfg < 64; ++cfg) {
    auto sys = DyadicSystem::from_config(p, cfg);
    for (int level = 2; level < 6; ++level) {
      for (std::int64_t idx = 0; idx < (1ll << level); ++idx) {
        DyadicCube cu{level, {idx}};
        CHECK(is_bad(sys, cu) == oracle_is_bad_1d(sys, cu));
      }
    }
  }
}

TEST_CASE("is_good_pair: trivially true below the scale gap") {
  auto p = params_1d(6, 3);
  auto sys = DyadicSystem::sample(p, 11);
  // l(big) < 2^r l(small): levels differ by less than r
  CHECK(is_good_pair(sys, DyadicCube{5, {3}}, DyadicCube{3, {0}}));
}

TEST_CASE("is_good_pair: weaker than full goodness") {
  auto p = params_1d(6, 2);
  for (std::uint64_t cfg = 0; cfg < 64; ++cfg) {
    auto sys = DyadicSystem::from_config(p, cfg);
    for (std::int64_t idx = 0; idx < 32; ++idx) {
      DyadicCube cu{5, {idx}};
      if (!is_bad(sys, cu))
        CHECK(is_good_pair(sys, cu, DyadicCube{0, {0}}));
    }
  }
}

TEST_CASE("is_good_pair: agrees with a direct loop over intermediate levels") {
  auto p = params_1d(6, 2);
  for (std::uint64_t cfg = 0; cfg < 64; cfg += 7) {
    auto sys = DyadicSystem::from_config(p, cfg);
    for (std::int64_t idx = 0; idx < 16; ++idx) {
      DyadicCube small{4, {idx}};
      DyadicCube big{1, {0}};
      bool expected = true;
      for (int q = 1; q <= 4 - p.r; ++q) {
        // direct scan of level-q cubes near the small cube
        std::int64_t best = INT64_MAX;
        for (std::int64_t m = -2; m <= (1ll << q) + 2; ++m) {
          best = std::min(best, boundary_distance_ticks(sys, small,
                                                        DyadicCube{q, {m}}));
        }
        long long gn = p.gamma.num, gd = p.gamma.den;
        long long m2 = gd * p.k_max - gn * small.level - (gd - gn) * q;
        unsigned __int128 lhs = 1;
        for (long long e = 0; e < gd; ++e)
          lhs *= static_cast<unsigned __int128>(best);
        if (!(lhs > (static_cast<unsigned __int128>(1) << m2)))
          expected = false;
      }
      CHECK(is_good_pair(sys, small, big) == expected);
    }
  }
}

TEST_CASE("estimate_pi_bad: vacuous level has probability zero") {
  auto p = params_1d(6, 3);
  auto rep = estimate_pi_bad(p, DyadicCube{2, {0}}, ProbabilityMode::exhaustive);
  CHECK(rep.pi_bad_estimate == 0.0);
  CHECK(rep.ci_halfwidth == 0.0);
}

TEST_CASE("estimate_pi_bad: exhaustive and monte carlo agree within 4 sigma") {
  auto p = params_1d(6, 5);  // alive at level 5 for gamma = 1/4
  DyadicCube ref{5, {0}};
  auto ex = estimate_pi_bad(p, ref, ProbabilityMode::exhaustive);
  auto mc = estimate_pi_bad(p, ref, ProbabilityMode::monte_carlo, 100000, 99);
  double sigma = std::sqrt(ex.pi_bad_estimate * (1 - ex.pi_bad_estimate) /
                           100000.0);
  CHECK(std::fabs(mc.pi_bad_estimate - ex.pi_bad_estimate) <= 4 * sigma + 1e-12);
}

TEST_CASE("estimate_pi_bad: translation symmetry in the index") {
  auto p = params_1d(6, 4, {3, 8});
  for (int level = 4; level < 6; ++level) {
    auto a = estimate_pi_bad(p, DyadicCube{level, {0}},
                             ProbabilityMode::exhaustive);
    auto b = estimate_pi_bad(p, DyadicCube{level, {7}},
                             ProbabilityMode::exhaustive);
    auto c = estimate_pi_bad(p, DyadicCube{level, {-5}},
                             ProbabilityMode::exhaustive);
    CHECK(a.pi_bad_estimate == b.pi_bad_estimate);
    CHECK(a.pi_bad_estimate == c.pi_bad_estimate);
  }
}

TEST_CASE("estimate_pi_bad: exhaustive values are dyadic rationals") {
  auto p = params_1d(6, 4, {3, 8});
  auto rep = estimate_pi_bad(p, DyadicCube{5, {0}}, ProbabilityMode::exhaustive);
  double scaled = rep.pi_bad_estimate * (1ll << p.beta_bit_count());
  CHECK(scaled == std::floor(scaled));
  // empirical ceiling bound pi_bad <= C 2^{-r gamma}: record-style check
  double bound = std::pow(2.0, -p.r * (3.0 / 8.0));
  CHECK(rep.pi_bad_estimate <= 8.0 * bound);
}

TEST_CASE("estimate_pi_bad: exhaustive bit budget enforced") {
  GridParams p;
  p.dim = 2;
  p.k_min = 0;
  p.k_max = 14;
  p.r = 2;
  CHECK_THROWS_AS(
      estimate_pi_bad(p, DyadicCube{13, {0, 0}}, ProbabilityMode::exhaustive),
      resource_error);
}

TEST_CASE("conditional_goodness: vacuously good cube gives 1") {
  auto p = params_1d(6, 3);
  auto sys = DyadicSystem::sample(p, 13);
  CHECK(conditional_goodness(sys, DyadicCube{2, {1}}, 1) == 1.0);
}

TEST_CASE("conditional_goodness: zero when already bad given fixed bits") {
  auto p = params_1d(6, 2);
  auto sys = DyadicSystem::standard(p);
  // [0, 1/8) is bad w.r.t. [0, 1/2) (level 1, within the fixed coarse bits of
  // conditioning level 1? fixed bits are j > 1, which determine position vs
  // level-1 lattice? position of I relative to J at level 1 depends on bits
  // 2..3 which are fixed) -> conditional probability 0
  DyadicCube cu{3, {0}};
  CHECK(is_bad(sys, cu));
  CHECK(conditional_goodness(sys, cu, 1) == 0.0);
}

TEST_CASE("conditional_goodness: averages to the exhaustive pi_good") {
  auto p = params_1d(6, 4, {3, 8});
  DyadicCube cu{5, {3}};
  int coarse = 2;
  // law of total probability over the free bits (k_min, coarse]
  int nfixed = p.k_max - coarse;  // bits at levels (coarse, k_max]
  double total = 0.0;
  int count = 0;
  for (std::uint64_t fixed_cfg = 0; fixed_cfg < (1ull << nfixed); ++fixed_cfg) {
    std::vector<std::uint8_t> bits(p.beta_bit_count(), 0);
    for (int i = 0; i < nfixed; ++i)
      bits[coarse - p.k_min + i] = (fixed_cfg >> i) & 1;
    DyadicSystem sys(p, bits);
    total += conditional_goodness(sys, cu, coarse);
    ++count;
  }
  auto rep = estimate_pi_bad(p, cu, ProbabilityMode::exhaustive);
  CHECK(std::fabs(total / count - (1.0 - rep.pi_bad_estimate)) < 1e-15);
}

TEST_CASE("conditional_goodness: wrong fixed-bit index set rejected") {
  auto p = params_1d(6, 2);
  auto sys = DyadicSystem::standard(p);
  CHECK_THROWS_AS(conditional_goodness(sys, DyadicCube{3, {0}}, 4),
                  std::invalid_argument);
  CHECK_THROWS_AS(conditional_goodness(sys, DyadicCube{3, {0}}, -1),
                  std::invalid_argument);
}

TEST_CASE("partition and nesting invariants") {
  GridParams p;
  p.dim = 2;
  p.k_min = 0;
  p.k_max = 3;
  p.r = 1;
  auto sys = DyadicSystem::sample(p, 17);
  Window win = Window::full(p);
  for (int k = 0; k <= 3; ++k) {
    auto cubes = cubes_meeting_window(sys, k, win);
    // tiles: total covered volume inside the window equals the window volume
    std::int64_t covered = 0;
    for (const auto& cu : cubes) {
      TickBox b = sys.realize(cu);
      std::int64_t v = 1;
      for (int c = 0; c < p.dim; ++c)
        v *= std::max<std::int64_t>(
            0, std::min(b.hi[c], win.hi[c]) - std::max(b.lo[c], win.lo[c]));
      covered += v;
    }
    CHECK(covered == win.cell_count());
    // disjoint: pairwise realized boxes do not overlap
    for (std::size_t i = 0; i < cubes.size(); ++i)
      for (std::size_t j = i + 1; j < cubes.size(); ++j) {
        TickBox a = sys.realize(cubes[i]);
        TickBox b = sys.realize(cubes[j]);
        bool overlap = true;
        for (int c = 0; c < p.dim; ++c)
          if (a.hi[c] <= b.lo[c] || b.hi[c] <= a.lo[c]) overlap = false;
        CHECK(!overlap);
      }
    // nesting
    if (k > 0)
      for (const auto& cu : cubes) {
        auto pa = parent(sys, cu);
        TickBox a = sys.realize(cu);
        TickBox b = sys.realize(pa);
        for (int c = 0; c < p.dim; ++c) {
          CHECK(a.lo[c] >= b.lo[c]);
          CHECK(a.hi[c] <= b.hi[c]);
        }
      }
  }
}

TEST_CASE("position and goodness factorize over disjoint bit sets") {
  // joint counts of (offset at level k, goodness) over all configurations
  auto p = params_1d(5, 3);
  DyadicCube cu{4, {2}};
  int nb = p.beta_bit_count();
  std::map<std::pair<std::int64_t, bool>, int> joint;
  std::map<std::int64_t, int> pos_count;
  std::map<bool, int> good_count;
  long long total = 1ll << nb;
  for (long long cfg = 0; cfg < total; ++cfg) {
    auto sys = DyadicSystem::from_config(p, cfg);
    std::int64_t off = sys.offset_ticks(cu.level, 0);
    bool good = !is_bad(sys, cu);
    joint[{off, good}]++;
    pos_count[off]++;
    good_count[good]++;
  }
  for (const auto& [key, cnt] : joint) {
    // exact factorization: joint * total == marginal product
    CHECK(static_cast<long long>(cnt) * total ==
          static_cast<long long>(pos_count[key.first]) * good_count[key.second]);
  }
}

TEST_CASE("goodness table is level-monotone with reference at the finest level") {
  auto p = params_1d(6, 4, {3, 8});
  auto table = goodness_table(p);
  REQUIRE(table.pi_good.size() == 6);
  for (std::size_t i = 1; i < table.pi_good.size(); ++i)
    CHECK(table.pi_good[i] <= table.pi_good[i - 1] + 1e-15);
  CHECK(table.pi_ref() == table.pi_good.back());
  CHECK(table.pi_good[0] == 1.0);
  CHECK(table.pi_ref() > 0.0);
}

TEST_CASE("average_over_beta: constants and goodness indicators") {
  auto p = params_1d(5, 3);
  auto avg = average_over_beta([](const DyadicSystem&) { return 3.5; }, p,
                               ProbabilityMode::exhaustive);
  CHECK(avg.estimate == 3.5);
  CHECK(avg.ci_halfwidth == 0.0);

  DyadicCube cu{4, {1}};
  auto good_avg = average_over_beta(
      [&](const DyadicSystem& sys) { return is_bad(sys, cu) ? 0.0 : 1.0; }, p,
      ProbabilityMode::exhaustive);
  auto rep = estimate_pi_bad(p, cu, ProbabilityMode::exhaustive);
  CHECK(good_avg.estimate == doctest::Approx(1.0 - rep.pi_bad_estimate).epsilon(1e-15));

  auto mc = average_over_beta(
      [&](const DyadicSystem& sys) { return is_bad(sys, cu) ? 0.0 : 1.0; }, p,
      ProbabilityMode::monte_carlo, 10000, 4);
  double sigma = std::sqrt(good_avg.estimate * (1 - good_avg.estimate) / 10000.0);
  CHECK(std::fabs(mc.estimate - good_avg.estimate) <= 4 * sigma + 1e-12);
}

TEST_CASE("goodness report serializes to json") {
  auto p = params_1d(5, 2);
  auto rep = estimate_pi_bad(p, DyadicCube{4, {0}}, ProbabilityMode::exhaustive);
  auto text = rep.to_json();
  CHECK(text.find("pi_bad") != std::string::npos);
  CHECK(text.find("exhaustive") != std::string::npos);
}
