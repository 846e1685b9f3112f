#include "shiftlab/representation.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "json.hpp"
#include "shiftlab/haar.hpp"

namespace shiftlab {

namespace {

struct CubeKeyLess {
  bool operator()(const DyadicCube& a, const DyadicCube& b) const {
    return cube_less(a, b);
  }
};

// per-system caches of the goodness data entering pi_IJ
struct PiContext {
  const DyadicSystem& sys;
  const GoodnessTable& table;
  std::map<DyadicCube, bool, CubeKeyLess> bad_cache;
  std::map<std::pair<DyadicCube, int>, double,
           bool (*)(const std::pair<DyadicCube, int>&,
                    const std::pair<DyadicCube, int>&)>
      cond_cache;

  explicit PiContext(const DyadicSystem& s, const GoodnessTable& t)
      : sys(s), table(t),
        cond_cache([](const std::pair<DyadicCube, int>& a,
                      const std::pair<DyadicCube, int>& b) {
          if (a.second != b.second) return a.second < b.second;
          return cube_less(a.first, b.first);
        }) {}

  bool bad(const DyadicCube& cu) {
    auto it = bad_cache.find(cu);
    if (it != bad_cache.end()) return it->second;
    bool b = is_bad(sys, cu);
    bad_cache.emplace(cu, b);
    return b;
  }

  double cond(const DyadicCube& cu, int coarse_level) {
    auto key = std::make_pair(cu, coarse_level);
    auto it = cond_cache.find(key);
    if (it != cond_cache.end()) return it->second;
    double v = conditional_goodness(sys, cu, coarse_level);
    cond_cache.emplace(key, v);
    return v;
  }

  // smaller carries the conditional factor, bigger the plain indicator
  double pi(const DyadicCube& smaller, const DyadicCube& bigger) {
    double pg_s = table.pi_good_at(smaller.level);
    double pg_b = table.pi_good_at(bigger.level);
    if (pg_s <= 0.0 || pg_b <= 0.0) return 0.0;
    if (bad(bigger)) return 0.0;
    double c = cond(smaller, bigger.level);
    if (c == 0.0) return 0.0;
    double ref = table.pi_ref();
    return c * ref * ref / (pg_s * pg_b);
  }
};

std::vector<DyadicCube> d_candidates(const DyadicSystem& sys, const Window& win) {
  const auto& p = sys.params();
  std::vector<DyadicCube> out;
  for (int k = p.k_min; k < p.k_max; ++k)
    for (const auto& cu : cubes_meeting_window(sys, k, win)) out.push_back(cu);
  return out;
}

// martingale-difference / image caches shared by the evaluators
struct MdCache {
  const OperatorMatrix& m;
  const DyadicSystem& sys;
  const GridFunction &f, &g;
  std::map<DyadicCube, GridFunction, CubeKeyLess> df, tdf, dg;

  MdCache(const OperatorMatrix& m_, const DyadicSystem& s, const GridFunction& f_,
          const GridFunction& g_)
      : m(m_), sys(s), f(f_), g(g_) {}

  const GridFunction& Df(const DyadicCube& I) {
    auto it = df.find(I);
    if (it != df.end()) return it->second;
    return df.emplace(I, martingale_diff(sys, f, I)).first->second;
  }
  const GridFunction& TDf(const DyadicCube& I) {
    auto it = tdf.find(I);
    if (it != tdf.end()) return it->second;
    return tdf.emplace(I, m.apply(Df(I))).first->second;
  }
  const GridFunction& Dg(const DyadicCube& J) {
    auto it = dg.find(J);
    if (it != dg.end()) return it->second;
    return dg.emplace(J, martingale_diff(sys, g, J)).first->second;
  }
};

double average_over_cube(const GridFunction& h, const DyadicSystem& sys,
                         const DyadicCube& cu) {
  return h.integral_over(sys.realize(cu)) *
         std::ldexp(1.0, sys.params().dim * cu.level);
}

// constant value of D_J g on the child of J containing I (I strictly inside J;
// guaranteed whenever the pair probability is nonzero). Full-cube averages of
// the zero-extended g, with the coarsest-level redefinition.
double dj_value_at(const DyadicSystem& sys, const GridFunction& g,
                   const DyadicCube& J, const DyadicCube& I) {
  DyadicCube child = ancestor(sys, I, J.level + 1);
  double avg_child = average_over_cube(g, sys, child);
  if (J.level == sys.params().k_min) return avg_child;  // D + E at the top
  return avg_child - average_over_cube(g, sys, J);
}

double prefactor(double alpha, int u, int v) {
  return std::pow(2.0, -0.5 * alpha * std::max(u, v));
}

double inv_prefactor(double alpha, int u, int v) {
  return std::pow(2.0, 0.5 * alpha * std::max(u, v));
}

// inside-pair value minus its paraproduct part (the shift-route part)
double inside_shift_part(MdCache& c, const PairInfo& pr) {
  double t_ji = inner(c.Dg(pr.J), c.TDf(pr.I));
  double para = c.TDf(pr.I).integral() * dj_value_at(c.sys, c.g, pr.J, pr.I);
  return (t_ji - para) * pr.pi;
}

double residual_pair_value(MdCache& c, PairFamily family, const PairInfo& pr) {
  if (family == PairFamily::inside) return inside_shift_part(c, pr);
  return inner(c.Dg(pr.J), c.TDf(pr.I)) * pr.pi;
}

}  // namespace

int theta_of(const GridParams& p, int j) {
  long long gn = p.gamma.num, gd = p.gamma.den;
  long long num = j * gn + static_cast<long long>(p.r) * gd;
  long long den = gd - gn;
  return static_cast<int>((num + den - 1) / den);
}

std::vector<PairBucket> classify_pairs(const DyadicSystem& sys, const Window& win,
                                       const GoodnessTable& table,
                                       bool include_equal_sizes) {
  const auto& p = sys.params();
  PiContext ctx(sys, table);
  auto cubes = d_candidates(sys, win);
  std::map<std::tuple<int, int, int>, PairBucket> buckets;  // (family, i, j)
  for (const auto& J : cubes) {
    for (const auto& I : cubes) {
      if (I.level < J.level) continue;  // need l(I) <= l(J)
      if (!include_equal_sizes && I.level == J.level) continue;
      PairInfo pr;
      pr.I = I;
      pr.J = J;
      pr.i = I.level - J.level;
      std::int64_t side_i = sys.side_ticks(I.level);
      std::int64_t side_j = sys.side_ticks(J.level);
      std::int64_t dist = linf_distance_ticks(sys.realize(I), sys.realize(J));
      PairFamily family;
      int depth;  // generations from I (or J for inside) up to K
      if (dist >= side_i) {
        family = PairFamily::out;
        std::int64_t D = side_i + dist + side_j;
        int j = 0;
        while (D > (side_j << (j + 1))) ++j;
        pr.j = j;
        depth = pr.i + j + theta_of(p, j);
        pr.u = depth;
        pr.v = j + theta_of(p, j);
        pr.k_in_range = I.level - depth >= p.k_min;
        if (pr.k_in_range) pr.K = ancestor(sys, I, I.level - depth);
      } else if (pr.i > p.r) {
        family = PairFamily::inside;
        pr.u = pr.i + p.r;
        pr.v = p.r;
        pr.k_in_range = J.level - p.r >= p.k_min;
        if (pr.k_in_range) pr.K = ancestor(sys, J, J.level - p.r);
      } else {
        family = PairFamily::near_diag;
        depth = p.r + pr.i;
        pr.u = depth;
        pr.v = p.r;
        pr.k_in_range = I.level - depth >= p.k_min;
        if (pr.k_in_range) pr.K = ancestor(sys, I, I.level - depth);
      }
      pr.pi = ctx.pi(I, J);
      auto key = std::make_tuple(static_cast<int>(family), pr.i,
                                 family == PairFamily::out ? pr.j : 0);
      auto& bucket = buckets[key];
      bucket.family = family;
      bucket.i = pr.i;
      bucket.j = family == PairFamily::out ? pr.j : 0;
      bucket.pairs.push_back(pr);
    }
  }
  std::vector<PairBucket> out;
  out.reserve(buckets.size());
  for (auto& [k, b] : buckets) out.push_back(std::move(b));
  return out;
}

double good_mds_value(const OperatorMatrix& m, const GridFunction& f,
                      const GridFunction& g, const DyadicSystem& sys,
                      const GoodnessTable& table) {
  PiContext ctx(sys, table);
  MdCache cache(m, sys, f, g);
  auto cubes = d_candidates(sys, f.window());
  double total = 0.0;
  for (const auto& J : cubes) {
    for (const auto& I : cubes) {
      double pi;
      if (J.level <= I.level)
        pi = ctx.pi(I, J);  // l(J) >= l(I), ties here
      else
        pi = ctx.pi(J, I);  // mirrored half
      if (pi == 0.0) continue;
      total += inner(cache.Dg(J), cache.TDf(I)) * pi;
    }
  }
  return total;
}

ShiftAssembly build_shifts(const OperatorMatrix& m, const DyadicSystem& sys,
                           const std::vector<PairBucket>& buckets,
                           const GoodnessTable& table) {
  const auto& p = sys.params();
  ShiftAssembly a;
  a.alpha = m.alpha;
  unsigned nsig = 1u << p.dim;
  const Window& win = m.window();

  // cache T h^eta_I images
  std::map<std::pair<DyadicCube, unsigned>, GridFunction,
           bool (*)(const std::pair<DyadicCube, unsigned>&,
                    const std::pair<DyadicCube, unsigned>&)>
      th_cache([](const std::pair<DyadicCube, unsigned>& x,
                  const std::pair<DyadicCube, unsigned>& y) {
        if (x.second != y.second) return x.second < y.second;
        return cube_less(x.first, y.first);
      });
  auto th = [&](const DyadicCube& I, unsigned eta) -> const GridFunction& {
    auto key = std::make_pair(I, eta);
    auto it = th_cache.find(key);
    if (it != th_cache.end()) return it->second;
    return th_cache.emplace(key, m.apply(haar_function(sys, I, eta, win)))
        .first->second;
  };

  std::map<std::pair<int, int>,
           std::map<DyadicCube, ShiftBlock, CubeKeyLess>>
      block_maps;

  auto emit = [&](int u, int v, const DyadicCube& K, ShiftRecord rec) {
    auto& blocks = block_maps[{u, v}];
    auto it = blocks.find(K);
    if (it == blocks.end()) {
      ShiftBlock b;
      b.K = K;
      it = blocks.emplace(K, std::move(b)).first;
    }
    it->second.records.push_back(rec);
  };

  for (const auto& bucket : buckets) {
    for (const auto& pr : bucket.pairs) {
      if (bucket.family == PairFamily::inside) a.inside_pairs.push_back(pr);
      if (pr.pi == 0.0) continue;
      if (!pr.k_in_range) {
        a.residual[{pr.u, pr.v}].push_back({bucket.family, pr});
        continue;
      }
      double scale = inv_prefactor(m.alpha, pr.u, pr.v) * pr.pi;
      if (bucket.family == PairFamily::out ||
          bucket.family == PairFamily::near_diag) {
        for (unsigned eta = 1; eta < nsig; ++eta) {
          GridFunction thi = th(pr.I, eta);
          for (unsigned theta = 1; theta < nsig; ++theta) {
            double pairing = inner(haar_function(sys, pr.J, theta, win), thi);
            if (pairing == 0.0) continue;
            emit(pr.u, pr.v, pr.K, {pr.I, pr.J, eta, theta, pairing * scale});
          }
        }
      } else {
        // inside: modified pairing against 1_{(J')^c}(h - <h>_{J'})
        DyadicCube jchild = ancestor(sys, pr.I, pr.J.level + 1);
        TickBox jc_box = sys.realize(jchild);
        TickBox j_box = sys.realize(pr.J);
        for (unsigned theta = 1; theta < nsig; ++theta) {
          // value of h^theta_J on the child containing I
          double c0 = std::sqrt(std::ldexp(1.0, p.dim * pr.J.level));
          for (int c = 0; c < p.dim; ++c)
            if ((theta >> c) & 1)
              c0 *= (jc_box.lo[c] == j_box.lo[c]) ? -1.0 : 1.0;
          GridFunction psi = haar_function(sys, pr.J, theta, win);
          for (auto& x : psi.values()) x -= c0;
          // zero out J' (window part)
          Index lo{}, hi{};
          bool nonempty = true;
          for (int c = 0; c < p.dim; ++c) {
            lo[c] = std::max(jc_box.lo[c], win.lo[c]);
            hi[c] = std::min(jc_box.hi[c], win.hi[c]);
            if (lo[c] >= hi[c]) nonempty = false;
          }
          if (nonempty) {
            Index cell = lo;
            for (;;) {
              psi.values()[win.flatten(cell)] = 0.0;
              int c = p.dim - 1;
              while (c >= 0) {
                if (++cell[c] < hi[c]) break;
                cell[c] = lo[c];
                --c;
              }
              if (c < 0) break;
            }
          }
          for (unsigned eta = 1; eta < nsig; ++eta) {
            double pairing = inner(psi, th(pr.I, eta));
            if (pairing == 0.0) continue;
            emit(pr.u, pr.v, pr.K, {pr.I, pr.J, eta, theta, pairing * scale});
          }
        }
      }
    }
  }

  for (auto& [key, blocks] : block_maps) {
    DyadicShift s{sys, key.first, key.second, true, 0.0, {}};
    for (auto& [K, b] : blocks) s.blocks.push_back(std::move(b));
    canonicalize(s);
    auto val = validate_shift(s);
    if (!val.ok)
      throw std::runtime_error("build_shifts: constructed shift fails validation");
    s.norm_const = val.norm_const;
    a.shifts.emplace(key, std::move(s));
  }

  // collapsed dual paraproduct: pairs (I, I^{(r)}), parameters (2r, r)
  {
    PiContext ctx(sys, table);
    DyadicShift pp{sys, 2 * p.r, p.r, true, 0.0, {}};
    std::map<DyadicCube, ShiftBlock, CubeKeyLess> pp_blocks;
    for (int k = p.k_min + p.r + 1; k < p.k_max; ++k) {
      for (const auto& I : cubes_meeting_window(sys, k, win)) {
        DyadicCube jc = ancestor(sys, I, k - p.r);
        double pi = ctx.pi(I, jc);
        if (pi == 0.0) continue;
        PairInfo pr;
        pr.I = I;
        pr.J = jc;
        pr.pi = pi;
        pr.u = 2 * p.r;
        pr.v = p.r;
        pr.k_in_range = k - 2 * p.r >= p.k_min;
        if (!pr.k_in_range) {
          a.paraproduct_residual.push_back(pr);
          continue;
        }
        pr.K = ancestor(sys, I, k - 2 * p.r);
        double invj = std::sqrt(std::ldexp(1.0, p.dim * jc.level));  // |J|^{-1/2}
        double scale = inv_prefactor(m.alpha, pr.u, pr.v) * pi * invj;
        for (unsigned eta = 1; eta < nsig; ++eta) {
          double tso = th(I, eta).integral();  // <1_W, T h^eta_I>
          if (tso == 0.0) continue;
          auto it = pp_blocks.find(pr.K);
          if (it == pp_blocks.end()) {
            ShiftBlock b;
            b.K = pr.K;
            it = pp_blocks.emplace(pr.K, std::move(b)).first;
          }
          it->second.records.push_back({I, jc, eta, 0u, tso * scale});
        }
      }
    }
    for (auto& [K, b] : pp_blocks) pp.blocks.push_back(std::move(b));
    canonicalize(pp);
    if (!pp.blocks.empty()) {
      auto val = validate_shift(pp);
      if (!val.ok)
        throw std::runtime_error("build_shifts: paraproduct fails validation");
      pp.norm_const = val.norm_const;
      a.paraproduct = std::move(pp);
    }
  }
  return a;
}

std::map<std::pair<int, int>, DyadicShift> merged_shifts(const ShiftAssembly& a) {
  auto out = a.shifts;
  if (a.paraproduct) {
    auto key = std::make_pair(a.paraproduct->u, a.paraproduct->v);
    auto it = out.find(key);
    if (it == out.end()) {
      out.emplace(key, *a.paraproduct);
    } else {
      for (const auto& b : a.paraproduct->blocks) {
        auto bit = std::find_if(it->second.blocks.begin(), it->second.blocks.end(),
                                [&](const ShiftBlock& x) { return x.K == b.K; });
        if (bit == it->second.blocks.end())
          it->second.blocks.push_back(b);
        else
          bit->records.insert(bit->records.end(), b.records.begin(),
                              b.records.end());
      }
      canonicalize(it->second);
    }
  }
  return out;
}

double direct_half_sum(const OperatorMatrix& m, const DyadicSystem& sys,
                       const std::vector<PairBucket>& buckets,
                       const GridFunction& f, const GridFunction& g) {
  MdCache cache(m, sys, f, g);
  double total = 0.0;
  for (const auto& bucket : buckets)
    for (const auto& pr : bucket.pairs) {
      if (pr.pi == 0.0) continue;
      total += inner(cache.Dg(pr.J), cache.TDf(pr.I)) * pr.pi;
    }
  return total;
}

double paraproduct_leftover(const OperatorMatrix& m, const DyadicSystem& sys,
                            const std::vector<PairInfo>& inside_pairs,
                            const GridFunction& f, const GridFunction& g) {
  MdCache cache(m, sys, f, g);
  double total = 0.0;
  for (const auto& pr : inside_pairs) {
    if (pr.pi == 0.0) continue;
    total += cache.TDf(pr.I).integral() * dj_value_at(sys, g, pr.J, pr.I) * pr.pi;
  }
  return total;
}

double collapsed_paraproduct_value(const OperatorMatrix& m,
                                   const DyadicSystem& sys,
                                   const GoodnessTable& table,
                                   const GridFunction& f, const GridFunction& g) {
  const auto& p = sys.params();
  PiContext ctx(sys, table);
  MdCache cache(m, sys, f, g);
  double total = 0.0;
  for (int k = p.k_min + p.r + 1; k < p.k_max; ++k) {
    for (const auto& I : cubes_meeting_window(sys, k, f.window())) {
      DyadicCube jc = ancestor(sys, I, k - p.r);
      double pi = ctx.pi(I, jc);
      if (pi == 0.0) continue;
      double avg_g = average_over_cube(g, sys, jc);
      total += avg_g * cache.TDf(I).integral() * pi;
    }
  }
  return total;
}

double series_value(const ShiftAssembly& a, const OperatorMatrix& m,
                    const DyadicSystem& sys, const GridFunction& f,
                    const GridFunction& g, int u_max) {
  auto gate = [&](int u, int v) {
    return u_max < 0 || std::max(u, v) <= u_max;
  };
  double total = 0.0;
  for (const auto& [key, shift] : a.shifts) {
    if (!gate(key.first, key.second)) continue;
    total += prefactor(a.alpha, key.first, key.second) *
             inner(g, apply_shift(shift, f));
  }
  MdCache cache(m, sys, f, g);
  for (const auto& [key, pairs] : a.residual) {
    if (!gate(key.first, key.second)) continue;
    for (const auto& [family, pr] : pairs)
      total += residual_pair_value(cache, family, pr);
  }
  int r = sys.params().r;
  if (gate(2 * r, r))
    total += paraproduct_leftover(m, sys, a.inside_pairs, f, g);
  return total;
}

double half_representation_value(const OperatorMatrix& m, const DyadicSystem& sys,
                                 const GoodnessTable& table, const GridFunction& f,
                                 const GridFunction& g, int u_max,
                                 bool include_equal_sizes) {
  auto buckets = classify_pairs(sys, f.window(), table, include_equal_sizes);
  auto assembly = build_shifts(m, sys, buckets, table);
  return series_value(assembly, m, sys, f, g, u_max);
}

double representation_value(const OperatorMatrix& m, const DyadicSystem& sys,
                            const GoodnessTable& table, const GridFunction& f,
                            const GridFunction& g, int u_max) {
  OperatorMatrix mt = m.transpose();
  return half_representation_value(m, sys, table, f, g, u_max, true) +
         half_representation_value(mt, sys, table, g, f, u_max, false);
}

RepresentationReport verify_representation(const OperatorMatrix& m,
                                           const GridParams& params,
                                           const GridFunction& f,
                                           const GridFunction& g,
                                           const std::vector<int>& u_max_list,
                                           ProbabilityMode mode,
                                           long long samples,
                                           std::uint64_t seed) {
  params.validate();
  const Window& win = f.window();
  std::int64_t coarsest = std::int64_t{1} << params.levels();
  for (int c = 0; c < params.dim; ++c)
    if (win.extent(c) > coarsest)
      throw std::invalid_argument(
          "window wider than one coarsest cube per axis");

  RepresentationReport rep;
  rep.mode = mode;
  rep.direct = bilinear(m, g, f);
  GoodnessTable table = goodness_table(params);
  rep.pi_ref = table.pi_ref();
  OperatorMatrix mt = m.transpose();

  std::size_t nu = u_max_list.size();
  std::vector<double> sum(nu, 0.0), sumsq(nu, 0.0);
  double gmds_sum = 0.0;
  long long count = 0;

  auto accumulate = [&](const DyadicSystem& sys) {
    auto buckets_p = classify_pairs(sys, win, table, true);
    auto asm_p = build_shifts(m, sys, buckets_p, table);
    auto buckets_a = classify_pairs(sys, win, table, false);
    auto asm_a = build_shifts(mt, sys, buckets_a, table);
    for (std::size_t i = 0; i < nu; ++i) {
      double v = series_value(asm_p, m, sys, f, g, u_max_list[i]) +
                 series_value(asm_a, mt, sys, g, f, u_max_list[i]);
      sum[i] += v;
      sumsq[i] += v * v;
    }
    if (mode == ProbabilityMode::exhaustive)
      gmds_sum += good_mds_value(m, f, g, sys, table);
    ++count;
  };

  if (mode == ProbabilityMode::exhaustive) {
    int nb = params.beta_bit_count();
    if (nb > 24) throw resource_error("exhaustive mode limited to 24 beta bits");
    long long total = 1ll << nb;
    for (long long cfg = 0; cfg < total; ++cfg)
      accumulate(DyadicSystem::from_config(params, cfg));
  } else {
    if (samples < 1) throw std::invalid_argument("samples >= 1 required");
    std::mt19937_64 rng(seed);
    for (long long s = 0; s < samples; ++s)
      accumulate(DyadicSystem::sample(params, rng()));
  }

  double denom = rep.pi_ref * rep.pi_ref;
  for (std::size_t i = 0; i < nu; ++i) {
    RepresentationReport::Entry e;
    e.u_max = u_max_list[i];
    double mean = sum[i] / static_cast<double>(count);
    double var = std::max(0.0, sumsq[i] / static_cast<double>(count) - mean * mean);
    double ci = mode == ProbabilityMode::exhaustive
                    ? 0.0
                    : 2.0 * std::sqrt(var / static_cast<double>(count));
    e.reconstructed = denom > 0.0 ? mean / denom : 0.0;
    e.ci_halfwidth = denom > 0.0 ? ci / denom : 0.0;
    double scale = std::fabs(rep.direct);
    e.relative_error =
        scale > 0.0 ? std::fabs(e.reconstructed - rep.direct) / scale
                    : std::fabs(e.reconstructed - rep.direct);
    rep.series.push_back(e);
  }
  rep.samples = count;
  if (mode == ProbabilityMode::exhaustive) {
    rep.identity_checked = true;
    rep.identity_lhs = gmds_sum / static_cast<double>(count);
    rep.identity_rhs = denom * rep.direct;
    double scale = std::fabs(rep.identity_rhs);
    rep.identity_rel_error =
        scale > 0.0 ? std::fabs(rep.identity_lhs - rep.identity_rhs) / scale
                    : std::fabs(rep.identity_lhs - rep.identity_rhs);
  }
  return rep;
}

std::string RepresentationReport::to_json() const {
  nlohmann::json j;
  j["direct"] = direct;
  j["pi_ref"] = pi_ref;
  j["mode"] = mode == ProbabilityMode::exhaustive ? "exhaustive" : "monte_carlo";
  j["samples"] = samples;
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : series)
    entries.push_back({{"u_max", e.u_max},
                       {"reconstructed", e.reconstructed},
                       {"ci", e.ci_halfwidth},
                       {"relative_error", e.relative_error}});
  j["series"] = entries;
  if (identity_checked) {
    j["identity"] = {{"lhs", identity_lhs},
                     {"rhs", identity_rhs},
                     {"relative_error", identity_rel_error}};
  }
  return j.dump();
}

}  // namespace shiftlab
