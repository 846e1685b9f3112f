#include "shiftlab/weighted.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

namespace shiftlab {

namespace {

bool contains(const TickBox& outer, const TickBox& inner) {
  for (int c = 0; c < outer.dim; ++c)
    if (inner.lo[c] < outer.lo[c] || inner.hi[c] > outer.hi[c]) return false;
  return true;
}

bool cube_subset(const DyadicSystem& sys, const DyadicCube& inner,
                 const DyadicCube& outer) {
  if (inner.level < outer.level) return false;
  return ancestor(sys, inner, outer.level) == outer;
}

double cube_volume(const GridParams& p, int level) {
  return std::ldexp(1.0, -p.dim * level);
}

}  // namespace

Weight::Weight(GridFunction w) : w_(std::move(w)), sigma_(w_) {
  for (auto& x : sigma_.values()) {
    if (!(x > 0.0)) throw std::invalid_argument("weight must be positive");
    x = 1.0 / x;
  }
}

double a2_characteristic(const Weight& weight, const DyadicSystem& sys,
                         CubeFamily family) {
  const auto& p = sys.params();
  const Window& win = weight.w().window();
  double best = 0.0;
  if (family == CubeFamily::dyadic) {
    for (int k = p.k_min; k <= p.k_max; ++k) {
      double inv_vol = std::ldexp(1.0, p.dim * k);
      for (const auto& cu : cubes_meeting_window(sys, k, win)) {
        TickBox box = sys.realize(cu);
        if (!contains(win.box(), box)) continue;
        double aw = weight.w_measure(box) * inv_vol;
        double as = weight.sigma_measure(box) * inv_vol;
        best = std::max(best, aw * as);
      }
    }
    return best;
  }
  // grid-aligned cubes: equal side s cells, corners on the finest grid
  std::int64_t min_extent = win.extent(0);
  for (int c = 1; c < p.dim; ++c) min_extent = std::min(min_extent, win.extent(c));
  double cellvol = weight.w().cell_volume();
  for (std::int64_t s = 1; s <= min_extent; ++s) {
    double vol = static_cast<double>([&] {
      std::int64_t v = 1;
      for (int c = 0; c < p.dim; ++c) v *= s;
      return v;
    }()) * cellvol;
    Index pos{};
    for (int c = 0; c < p.dim; ++c) pos[c] = win.lo[c];
    for (;;) {
      TickBox box;
      box.dim = p.dim;
      bool fits = true;
      for (int c = 0; c < p.dim; ++c) {
        box.lo[c] = pos[c];
        box.hi[c] = pos[c] + s;
        if (box.hi[c] > win.hi[c]) fits = false;
      }
      if (fits) {
        double aw = weight.w_measure(box) / vol;
        double as = weight.sigma_measure(box) / vol;
        best = std::max(best, aw * as);
      }
      int c = p.dim - 1;
      while (c >= 0) {
        if (++pos[c] + s <= win.hi[c]) break;
        pos[c] = win.lo[c];
        --c;
      }
      if (c < 0) break;
    }
  }
  return best;
}

GridFunction dyadic_maximal(const GridFunction& f, const DyadicSystem& sys) {
  const auto& p = sys.params();
  const Window& win = f.window();
  GridFunction absf = f;
  for (auto& x : absf.values()) x = std::fabs(x);
  GridFunction out(p.dim, p.k_max, win);
  for (int k = p.k_min; k <= p.k_max; ++k) {
    double inv_vol = std::ldexp(1.0, p.dim * k);
    for (const auto& cu : cubes_meeting_window(sys, k, win)) {
      TickBox box = sys.realize(cu);
      double avg = absf.integral_over(box) * inv_vol;
      Index lo{}, hi{};
      bool nonempty = true;
      for (int c = 0; c < p.dim; ++c) {
        lo[c] = std::max(box.lo[c], win.lo[c]);
        hi[c] = std::min(box.hi[c], win.hi[c]);
        if (lo[c] >= hi[c]) nonempty = false;
      }
      if (!nonempty) continue;
      Index cell = lo;
      for (;;) {
        auto idx = win.flatten(cell);
        out.values()[idx] = std::max(out.values()[idx], avg);
        int c = p.dim - 1;
        while (c >= 0) {
          if (++cell[c] < hi[c]) break;
          cell[c] = lo[c];
          --c;
        }
        if (c < 0) break;
      }
    }
  }
  return out;
}

double weighted_l2_norm(const GridFunction& f, const GridFunction& weight) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.values().size(); ++i)
    s += f.values()[i] * f.values()[i] * weight.values()[i];
  return std::sqrt(s * f.cell_volume());
}

double buckley_ratio(const GridFunction& f, const Weight& weight,
                     const DyadicSystem& sys) {
  double denom = weighted_l2_norm(f, weight.w());
  if (denom == 0.0) throw std::invalid_argument("buckley_ratio: zero f");
  GridFunction mf = dyadic_maximal(f, sys);
  double a2 = a2_characteristic(weight, sys, CubeFamily::dyadic);
  return weighted_l2_norm(mf, weight.w()) / (a2 * denom);
}

TestingRatioReport testing_ratio(const DyadicShift& shift, const Weight& weight,
                                 const TickBox& Q) {
  const auto& sys = shift.system;
  const Window& win = weight.w().window();
  if (!contains(win.box(), Q))
    throw std::out_of_range("testing cube outside window");
  TestingRatioReport rep;
  rep.a2 = a2_characteristic(weight, sys, CubeFamily::dyadic);
  rep.wq = weight.w_measure(Q);

  GridFunction f(weight.w().dim(), weight.w().k_max(), win);
  Index lo{}, hi{};
  for (int c = 0; c < win.dim; ++c) {
    lo[c] = std::max(Q.lo[c], win.lo[c]);
    hi[c] = std::min(Q.hi[c], win.hi[c]);
  }
  Index cell = lo;
  for (;;) {
    auto idx = win.flatten(cell);
    f.values()[idx] = weight.w().values()[idx];
    int c = win.dim - 1;
    while (c >= 0) {
      if (++cell[c] < hi[c]) break;
      cell[c] = lo[c];
      --c;
    }
    if (c < 0) break;
  }

  std::int64_t q_side = Q.hi[0] - Q.lo[0];
  auto large = restrict_shift(shift, [&](const DyadicCube& K) {
    return shift.system.side_ticks(K.level) >= q_side;
  });
  auto small = restrict_shift(shift, [&](const DyadicCube& K) {
    return shift.system.side_ticks(K.level) < q_side;
  });
  double denom = rep.a2 * std::sqrt(rep.wq);
  if (denom == 0.0) throw std::invalid_argument("degenerate testing cube");
  rep.ratio = weighted_l2_norm(apply_shift(shift, f), weight.sigma()) / denom;
  rep.large_scale =
      weighted_l2_norm(apply_shift(large, f), weight.sigma()) / denom;
  rep.small_scale =
      weighted_l2_norm(apply_shift(small, f), weight.sigma()) / denom;
  return rep;
}

DyadicShift khat_filter(const DyadicShift& shift, const TickBox& Q) {
  const auto& sys = shift.system;
  const auto& p = sys.params();
  int M = std::max(shift.u, shift.v);
  long long gn = p.gamma.num, gd = p.gamma.den;
  std::int64_t q_side = Q.hi[0] - Q.lo[0];
  return restrict_shift(shift, [&, M, gn, gd, q_side](const DyadicCube& K) {
    if (sys.side_ticks(K.level) >= q_side) return false;
    TickBox bk = sys.realize(K);
    // delta = 2^{-M gamma} l(K) in ticks: delta^gd = 2^m,
    // m = gd (k_max - lev) - M gn
    long long m = gd * (p.k_max - K.level) - M * gn;
    // Khat nonempty: side >= 2 delta
    if (detail::pow_cmp(static_cast<std::uint64_t>(sys.side_ticks(K.level)),
                        static_cast<int>(gd), m + gd) < 0)
      return false;
    for (int c = 0; c < p.dim; ++c) {
      // [lo+delta, hi-delta] and [qlo, qhi) intersect
      std::int64_t t1 = Q.hi[c] - bk.lo[c];  // need > delta
      std::int64_t t2 = bk.hi[c] - Q.lo[c];  // need >= delta
      if (t1 <= 0 || t2 <= 0) return false;
      if (detail::pow_cmp(static_cast<std::uint64_t>(t1), static_cast<int>(gd),
                          m) <= 0)
        return false;
      if (detail::pow_cmp(static_cast<std::uint64_t>(t2), static_cast<int>(gd),
                          m) < 0)
        return false;
    }
    return true;
  });
}

CoronaDecomposition corona_decompose(const std::vector<DyadicCube>& collection,
                                     const Weight& weight, const TickBox& Q,
                                     int v, const DyadicSystem& sys) {
  const auto& p = sys.params();
  CoronaDecomposition out;
  out.v = v;
  out.Q = Q;
  if (collection.empty()) return out;

  auto density_w = [&](const DyadicCube& K) {
    TickBox box = sys.realize(K);
    TickBox cap = box;
    for (int c = 0; c < p.dim; ++c) {
      cap.lo[c] = std::max(box.lo[c], Q.lo[c]);
      cap.hi[c] = std::min(box.hi[c], Q.hi[c]);
    }
    double w = cap.empty() ? 0.0 : weight.w_measure(cap);
    return w / cube_volume(p, K.level);
  };
  auto density_sigma = [&](const DyadicCube& K) {
    return weight.sigma_measure(sys.realize(K)) / cube_volume(p, K.level);
  };

  int nclasses = v + 1;
  for (int mod = 0; mod < nclasses; ++mod) {
    std::vector<DyadicCube> members;
    for (const auto& K : collection)
      if (((K.level % nclasses) + nclasses) % nclasses == mod)
        members.push_back(K);
    if (members.empty()) continue;
    CoronaClass cls;
    cls.mod_value = mod;
    // bucket by the local A2 product
    std::map<int, std::vector<DyadicCube>> by_a;
    for (const auto& K : members) {
      double local = density_w(K) * density_sigma(K);
      if (!(local > 0.0))
        throw std::invalid_argument("corona: cube with vanishing local product");
      int a = static_cast<int>(std::floor(std::log2(local)));
      while (local <= std::ldexp(1.0, a)) --a;
      while (local > std::ldexp(1.0, a + 1)) ++a;
      by_a[a].push_back(K);
    }
    for (auto& [a, cubes] : by_a) {
      CoronaBucket bucket;
      bucket.a = a;
      std::sort(cubes.begin(), cubes.end(), cube_less);  // coarse first
      bucket.cubes = cubes;
      // generation 0: maximal cubes of the bucket
      std::vector<int> gen_of(cubes.size(), -1);
      std::vector<int> node_of(cubes.size(), -1);
      auto contained_in = [&](std::size_t i, std::size_t j) {
        return cube_subset(sys, cubes[i], cubes[j]);
      };
      for (std::size_t i = 0; i < cubes.size(); ++i) {
        bool maximal = true;
        for (std::size_t j = 0; j < cubes.size(); ++j)
          if (j != i && contained_in(i, j)) maximal = false;
        if (maximal) {
          gen_of[i] = 0;
          StoppingNode node;
          node.cube = cubes[i];
          node.generation = 0;
          node.parent = -1;
          node_of[i] = static_cast<int>(bucket.stopping.size());
          bucket.stopping.push_back(node);
        }
      }
      // deeper generations
      for (int gen = 0;; ++gen) {
        std::vector<std::size_t> candidates;
        for (std::size_t i = 0; i < cubes.size(); ++i) {
          if (gen_of[i] >= 0) continue;
          for (const auto& node : bucket.stopping) {
            if (node.generation != gen) continue;
            if (cube_subset(sys, cubes[i], node.cube) &&
                !(cubes[i] == node.cube) &&
                density_w(cubes[i]) > 4.0 * density_w(node.cube)) {
              candidates.push_back(i);
              break;
            }
          }
        }
        if (candidates.empty()) break;
        for (std::size_t i : candidates) {
          bool maximal = true;
          for (std::size_t j : candidates)
            if (j != i && contained_in(i, j)) maximal = false;
          if (!maximal) continue;
          gen_of[i] = gen + 1;
          StoppingNode node;
          node.cube = cubes[i];
          node.generation = gen + 1;
          node.parent = -1;
          for (std::size_t s = 0; s < bucket.stopping.size(); ++s)
            if (bucket.stopping[s].generation == gen &&
                cube_subset(sys, cubes[i], bucket.stopping[s].cube))
              node.parent = static_cast<int>(s);
          node_of[i] = static_cast<int>(bucket.stopping.size());
          bucket.stopping.push_back(node);
        }
      }
      // assignment to minimal containing stopping cube + sub-buckets
      bucket.assignment.assign(cubes.size(), -1);
      for (std::size_t i = 0; i < cubes.size(); ++i) {
        int best = -1;
        for (std::size_t s = 0; s < bucket.stopping.size(); ++s) {
          if (!cube_subset(sys, cubes[i], bucket.stopping[s].cube)) continue;
          if (best < 0 || bucket.stopping[s].cube.level >
                              bucket.stopping[best].cube.level)
            best = static_cast<int>(s);
        }
        bucket.assignment[i] = best;
        double ratio =
            density_w(cubes[i]) / density_w(bucket.stopping[best].cube);
        int b = 0;
        while (ratio <= std::ldexp(1.0, 1 - b)) ++b;
        while (ratio > std::ldexp(1.0, 2 - b)) --b;
        bucket.sub_buckets[{best, b}].push_back(static_cast<int>(i));
        bucket.tau[{best, b}] =
            std::ldexp(1.0, a + b) / density_w(bucket.stopping[best].cube);
      }
      cls.buckets.push_back(std::move(bucket));
    }
    out.classes.push_back(std::move(cls));
  }
  return out;
}

PackingReport packing_check(const CoronaDecomposition& corona,
                            const DyadicSystem& sys) {
  const auto& p = sys.params();
  PackingReport rep;
  for (const auto& cls : corona.classes) {
    for (const auto& bucket : cls.buckets) {
      double roots_vol = 0.0, total_vol = 0.0;
      for (std::size_t s = 0; s < bucket.stopping.size(); ++s) {
        const auto& node = bucket.stopping[s];
        double vol = cube_volume(p, node.cube.level);
        total_vol += vol;
        if (node.generation == 0) roots_vol += vol;
        // first-generation children of this node
        double child_vol = 0.0;
        for (const auto& other : bucket.stopping)
          if (other.parent == static_cast<int>(s)) {
            child_vol += cube_volume(p, other.cube.level);
            // children disjoint by maximality; verified via pair scan below
          }
        if (child_vol > 0.0) {
          double ratio = child_vol / vol;
          rep.max_first_generation_ratio =
              std::max(rep.max_first_generation_ratio, ratio);
          if (ratio > 0.25 + 1e-12) rep.ok = false;
        }
        // disjointness of the children
        std::vector<const StoppingNode*> kids;
        for (const auto& other : bucket.stopping)
          if (other.parent == static_cast<int>(s)) kids.push_back(&other);
        for (std::size_t x = 0; x < kids.size(); ++x)
          for (std::size_t y = x + 1; y < kids.size(); ++y) {
            if (cube_subset(sys, kids[x]->cube, kids[y]->cube) ||
                cube_subset(sys, kids[y]->cube, kids[x]->cube))
              rep.ok = false;
          }
      }
      if (roots_vol > 0.0)
        rep.geometric_sum_ratio = std::max(
            rep.geometric_sum_ratio, total_vol / ((4.0 / 3.0) * roots_vol));
    }
  }
  return rep;
}

TailCurve jn_tail(const DyadicShift& restricted, const Weight& weight,
                  const TickBox& Q, const DyadicCube& S, int u, int b,
                  double w_density, const std::vector<double>& t_grid,
                  const DyadicSystem& sys) {
  const Window& win = weight.w().window();
  GridFunction f(weight.w().dim(), weight.w().k_max(), win);
  Index lo{}, hi{};
  for (int c = 0; c < win.dim; ++c) {
    lo[c] = std::max(Q.lo[c], win.lo[c]);
    hi[c] = std::min(Q.hi[c], win.hi[c]);
    if (lo[c] >= hi[c]) return {};
  }
  Index cell = lo;
  for (;;) {
    auto idx = win.flatten(cell);
    f.values()[idx] = weight.w().values()[idx];
    int c = win.dim - 1;
    while (c >= 0) {
      if (++cell[c] < hi[c]) break;
      cell[c] = lo[c];
      --c;
    }
    if (c < 0) break;
  }
  GridFunction sf = apply_shift(restricted, f);
  TailCurve curve;
  curve.scale = u * std::ldexp(1.0, -b) * w_density;
  TickBox sbox = sys.realize(S);
  double leb_s = 0.0, sig_s = 0.0;
  {
    GridFunction ones(f.dim(), f.k_max(), win);
    std::fill(ones.values().begin(), ones.values().end(), 1.0);
    leb_s = ones.integral_over(sbox);
    sig_s = weight.sigma_measure(sbox);
  }
  double cellvol = f.cell_volume();
  for (double t : t_grid) {
    double thresh = curve.scale * t;
    double leb = 0.0, sig = 0.0;
    for (std::int64_t i = 0; i < sf.size(); ++i) {
      if (std::fabs(sf.values()[i]) > thresh) {
        leb += cellvol;
        sig += weight.sigma().values()[i] * cellvol;
      }
    }
    curve.t.push_back(t);
    curve.lebesgue_tail.push_back(leb_s > 0 ? leb / leb_s : 0.0);
    curve.sigma_tail.push_back(sig_s > 0 ? sig / sig_s : 0.0);
  }
  return curve;
}

StoppingSumReport stopping_sum_check(const CoronaDecomposition& corona,
                                     const Weight& weight, const TickBox& Q,
                                     int u, int v, const DyadicSystem& sys) {
  const auto& p = sys.params();
  StoppingSumReport rep;
  auto density_w = [&](const DyadicCube& K) {
    TickBox box = sys.realize(K);
    TickBox cap = box;
    for (int c = 0; c < p.dim; ++c) {
      cap.lo[c] = std::max(box.lo[c], Q.lo[c]);
      cap.hi[c] = std::min(box.hi[c], Q.hi[c]);
    }
    double w = cap.empty() ? 0.0 : weight.w_measure(cap);
    return w / cube_volume(p, K.level);
  };

  double sum = 0.0, max_class_sum = 0.0;
  for (const auto& cls : corona.classes) {
    double class_sum = 0.0;
    for (const auto& bucket : cls.buckets)
      for (const auto& node : bucket.stopping) {
        TickBox box = sys.realize(node.cube);
        TickBox cap = box;
        for (int c = 0; c < p.dim; ++c) {
          cap.lo[c] = std::max(box.lo[c], Q.lo[c]);
          cap.hi[c] = std::min(box.hi[c], Q.hi[c]);
        }
        if (!cap.empty()) class_sum += weight.w_measure(cap);
        if (node.parent >= 0) {
          double child = density_w(node.cube);
          double parent = density_w(bucket.stopping[node.parent].cube);
          if (!(child > 4.0 * parent)) rep.chain_ratios_ok = false;
        }
      }
    sum += class_sum;
    max_class_sum = std::max(max_class_sum, class_sum);
  }
  rep.sum_w_s_cap_q = sum;
  double a2 = a2_characteristic(weight, sys, CubeFamily::dyadic);
  double gamma = static_cast<double>(p.gamma.num) / p.gamma.den;
  rep.bound_rhs = std::pow(2.0, std::max(u, v) * gamma * p.dim) * a2 *
                  weight.w_measure(Q);
  rep.ratio = rep.bound_rhs > 0 ? max_class_sum / rep.bound_rhs : 0.0;

  // per-(class, a) pointwise domination by M(w 1_Q), geometric-sum form
  const Window& win = weight.w().window();
  GridFunction w1q(weight.w().dim(), weight.w().k_max(), win);
  {
    Index lo{}, hi{};
    for (int c = 0; c < win.dim; ++c) {
      lo[c] = std::max(Q.lo[c], win.lo[c]);
      hi[c] = std::min(Q.hi[c], win.hi[c]);
    }
    Index cell = lo;
    for (;;) {
      auto idx = win.flatten(cell);
      w1q.values()[idx] = weight.w().values()[idx];
      int c = win.dim - 1;
      while (c >= 0) {
        if (++cell[c] < hi[c]) break;
        cell[c] = lo[c];
        --c;
      }
      if (c < 0) break;
    }
  }
  GridFunction mw = dyadic_maximal(w1q, sys);
  for (const auto& cls : corona.classes) {
    for (const auto& bucket : cls.buckets) {
      GridFunction dom(w1q.dim(), w1q.k_max(), win);
      for (const auto& node : bucket.stopping) {
        double dens = density_w(node.cube);
        TickBox box = sys.realize(node.cube);
        Index lo{}, hi{};
        bool nonempty = true;
        for (int c = 0; c < p.dim; ++c) {
          lo[c] = std::max(box.lo[c], win.lo[c]);
          hi[c] = std::min(box.hi[c], win.hi[c]);
          if (lo[c] >= hi[c]) nonempty = false;
        }
        if (!nonempty) continue;
        Index cell = lo;
        for (;;) {
          dom.values()[win.flatten(cell)] += dens;
          int c = p.dim - 1;
          while (c >= 0) {
            if (++cell[c] < hi[c]) break;
            cell[c] = lo[c];
            --c;
          }
          if (c < 0) break;
        }
      }
      for (std::int64_t i = 0; i < dom.size(); ++i) {
        if (dom.values()[i] == 0.0) continue;
        double m = mw.values()[i];
        if (m > 0.0)
          rep.max_domination_defect =
              std::max(rep.max_domination_defect, dom.values()[i] / m);
      }
    }
  }
  return rep;
}

Weight power_weight(const GridParams& params, const Window& win, double exponent,
                    double x0) {
  if (params.dim != 1)
    throw std::invalid_argument("power_weight implemented for dim 1");
  if (!(exponent > -1.0 && exponent < 1.0))
    throw std::invalid_argument("power exponent must lie in (-1, 1)");
  GridFunction w(1, params.k_max, win);
  double h = std::ldexp(1.0, -params.k_max);
  double ap1 = exponent + 1.0;
  auto F = [&](double t) {  // antiderivative of |t|^a
    return std::copysign(std::pow(std::fabs(t), ap1) / ap1, t);
  };
  for (std::int64_t i = 0; i < w.size(); ++i) {
    double lo = (win.lo[0] + i) * h - x0;
    double hi = lo + h;
    double avg = (F(hi) - F(lo)) / h;
    w.values()[i] = std::max(avg, 1e-300);
  }
  return Weight(std::move(w));
}

Weight step_weight(const GridParams& params, const Window& win, double left,
                   double right, std::int64_t split_cell) {
  GridFunction w(params.dim, params.k_max, win);
  Index cell = win.lo;
  for (;;) {
    w.values()[win.flatten(cell)] = cell[0] < split_cell ? left : right;
    int c = params.dim - 1;
    while (c >= 0) {
      if (++cell[c] < win.hi[c]) break;
      cell[c] = win.lo[c];
      --c;
    }
    if (c < 0) break;
  }
  return Weight(std::move(w));
}

std::string CoronaDecomposition::to_json(const DyadicSystem& sys) const {
  const auto& p = sys.params();
  nlohmann::json j;
  j["v"] = v;
  auto cube_json = [&](const DyadicCube& cu) {
    return nlohmann::json{
        {"level", cu.level},
        {"index", std::vector<std::int64_t>(cu.index.begin(),
                                            cu.index.begin() + p.dim)}};
  };
  nlohmann::json classes_j = nlohmann::json::array();
  for (const auto& cls : classes) {
    nlohmann::json cj;
    cj["mod"] = cls.mod_value;
    nlohmann::json buckets_j = nlohmann::json::array();
    for (const auto& b : cls.buckets) {
      nlohmann::json bj;
      bj["a"] = b.a;
      nlohmann::json cubes_j = nlohmann::json::array();
      for (const auto& cu : b.cubes) cubes_j.push_back(cube_json(cu));
      bj["cubes"] = cubes_j;
      nlohmann::json stop_j = nlohmann::json::array();
      for (const auto& s : b.stopping)
        stop_j.push_back({{"cube", cube_json(s.cube)},
                          {"generation", s.generation},
                          {"parent", s.parent}});
      bj["stopping"] = stop_j;
      bj["assignment"] = b.assignment;
      nlohmann::json sub_j = nlohmann::json::array();
      for (const auto& [key, members] : b.sub_buckets)
        sub_j.push_back({{"stopping_index", key.first},
                         {"b", key.second},
                         {"members", members},
                         {"tau", b.tau.at(key)}});
      bj["sub_buckets"] = sub_j;
      buckets_j.push_back(bj);
    }
    cj["buckets"] = buckets_j;
    classes_j.push_back(cj);
  }
  j["classes"] = classes_j;
  return j.dump();
}

}  // namespace shiftlab
