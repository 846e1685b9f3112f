#include "shiftlab/shifts.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "json.hpp"
#include "shiftlab/haar.hpp"

namespace shiftlab {

namespace {

bool record_less(const ShiftRecord& a, const ShiftRecord& b) {
  if (!(a.I == b.I)) return cube_less(a.I, b.I);
  if (!(a.J == b.J)) return cube_less(a.J, b.J);
  if (a.eta != b.eta) return a.eta < b.eta;
  return a.theta < b.theta;
}

}  // namespace

void canonicalize(DyadicShift& shift) {
  for (auto& b : shift.blocks)
    std::sort(b.records.begin(), b.records.end(), record_less);
  std::sort(shift.blocks.begin(), shift.blocks.end(),
            [](const ShiftBlock& a, const ShiftBlock& b) {
              return cube_less(a.K, b.K);
            });
}

ShiftValidation validate_shift(const DyadicShift& shift) {
  ShiftValidation val;
  const auto& sys = shift.system;
  const auto& p = sys.params();
  for (const auto& block : shift.blocks) {
    TickBox bk = sys.realize(block.K);
    bool block_structure_ok = true;
    for (const auto& rec : block.records) {
      if (rec.I.level != block.K.level + shift.u ||
          rec.J.level != block.K.level + shift.v) {
        val.structure_ok = false;
        block_structure_ok = false;
        val.messages.push_back("level constraint violated");
        continue;
      }
      for (const DyadicCube* cu : {&rec.I, &rec.J}) {
        TickBox b = sys.realize(*cu);
        for (int c = 0; c < p.dim; ++c)
          if (b.lo[c] < bk.lo[c] || b.hi[c] > bk.hi[c]) {
            val.structure_ok = false;
            block_structure_ok = false;
            val.messages.push_back("cube not contained in K");
          }
      }
      if (shift.good_flag && rec.coeff != 0.0) {
        for (const DyadicCube* cu : {&rec.I, &rec.J}) {
          std::int64_t d = boundary_distance_ticks(sys, *cu, block.K);
          if (compare_dist_threshold(p, d, cu->level, block.K.level, true) < 0) {
            val.goodness_ok = false;
            val.messages.push_back("goodness distance violated");
          }
        }
      }
    }
    if (!block_structure_ok) continue;
    // sup of |K| |sum coeff h_J(x) h_I(y)| on the natural constant mesh
    double vol_k = std::ldexp(1.0, -p.dim * block.K.level);
    int mesh_level =
        std::min(p.k_max, block.K.level + std::max(shift.u, shift.v) + 1);
    std::int64_t cells_per_side = std::int64_t{1} << (mesh_level - block.K.level);
    std::int64_t step = sys.side_ticks(mesh_level);
    std::vector<Index> pts;
    {
      Index ix{};
      for (;;) {
        Index cell{};
        for (int c = 0; c < p.dim; ++c) cell[c] = bk.lo[c] + ix[c] * step;
        pts.push_back(cell);
        int c = p.dim - 1;
        while (c >= 0) {
          if (++ix[c] < cells_per_side) break;
          ix[c] = 0;
          --c;
        }
        if (c < 0) break;
      }
    }
    auto haar_value = [&](const DyadicCube& cu, unsigned sig, const Index& cell) {
      TickBox b = sys.realize(cu);
      for (int c = 0; c < p.dim; ++c)
        if (cell[c] < b.lo[c] || cell[c] >= b.hi[c]) return 0.0;
      std::int64_t half = sys.side_ticks(cu.level) / 2;
      int s = 1;
      for (int c = 0; c < p.dim; ++c)
        if ((sig >> c) & 1) s *= (cell[c] - b.lo[c] < half) ? -1 : 1;
      return s * std::sqrt(std::ldexp(1.0, p.dim * cu.level));
    };
    double block_sup = 0.0;
    for (const auto& px : pts) {
      for (const auto& py : pts) {
        double a = 0.0;
        for (const auto& rec : block.records)
          a += rec.coeff * haar_value(rec.J, rec.theta, px) *
               haar_value(rec.I, rec.eta, py);
        block_sup = std::max(block_sup, std::fabs(a));
      }
    }
    // a_K = |K| sum coeff h_J ⊗ h_I
    val.norm_const = std::max(val.norm_const, block_sup * vol_k);
  }
  val.ok = val.structure_ok && val.goodness_ok;
  return val;
}

GridFunction apply_shift(const DyadicShift& shift, const GridFunction& f) {
  if (!(shift.system.params().dim == f.dim() &&
        shift.system.params().k_max == f.k_max()))
    throw std::invalid_argument("apply_shift: system mismatch");
  GridFunction out(f.dim(), f.k_max(), f.window());
  for (const auto& block : shift.blocks) {
    for (const auto& rec : block.records) {
      if (rec.coeff == 0.0) continue;
      double c = haar_coefficient(shift.system, rec.I, rec.eta, f);
      if (c == 0.0) continue;
      add_haar(shift.system, rec.J, rec.theta, rec.coeff * c, out);
    }
  }
  return out;
}

DyadicShift adjoint(const DyadicShift& shift) {
  DyadicShift adj = shift;
  std::swap(adj.u, adj.v);
  for (auto& block : adj.blocks)
    for (auto& rec : block.records) {
      std::swap(rec.I, rec.J);
      std::swap(rec.eta, rec.theta);
    }
  canonicalize(adj);
  return adj;
}

DyadicShift restrict_shift(const DyadicShift& shift,
                           const std::function<bool(const DyadicCube&)>& keep) {
  DyadicShift out = shift;
  out.blocks.clear();
  for (const auto& block : shift.blocks)
    if (keep(block.K)) out.blocks.push_back(block);
  return out;
}

CZDecomposition cz_decompose(const DyadicSystem& sys, const GridFunction& f,
                             double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  const auto& p = sys.params();
  CZDecomposition dec;
  dec.lambda = lambda;
  dec.good_part = f;
  GridFunction absf = f;
  for (auto& x : absf.values()) x = std::fabs(x);
  std::vector<DyadicCube> stack = cubes_meeting_window(sys, p.k_min, f.window());
  while (!stack.empty()) {
    DyadicCube cu = stack.back();
    stack.pop_back();
    TickBox box = sys.realize(cu);
    double avg = absf.integral_over(box) * std::ldexp(1.0, p.dim * cu.level);
    if (avg > lambda) {
      dec.bad_cubes.push_back(cu);
    } else if (cu.level < p.k_max) {
      for (const auto& ch : children(sys, cu)) {
        TickBox cb = sys.realize(ch);
        bool meets = true;
        for (int c = 0; c < p.dim; ++c)
          if (cb.hi[c] <= f.window().lo[c] || cb.lo[c] >= f.window().hi[c])
            meets = false;
        if (meets) stack.push_back(ch);
      }
    }
  }
  std::sort(dec.bad_cubes.begin(), dec.bad_cubes.end(), cube_less);
  for (const auto& cu : dec.bad_cubes) {
    TickBox box = sys.realize(cu);
    double mean = f.integral_over(box) * std::ldexp(1.0, p.dim * cu.level);
    GridFunction b(f.dim(), f.k_max(), f.window());
    Index lo{}, hi{};
    bool nonempty = true;
    for (int c = 0; c < p.dim; ++c) {
      lo[c] = std::max(box.lo[c], f.window().lo[c]);
      hi[c] = std::min(box.hi[c], f.window().hi[c]);
      if (lo[c] >= hi[c]) nonempty = false;
    }
    if (nonempty) {
      Index cell = lo;
      for (;;) {
        auto idx = f.window().flatten(cell);
        b.values()[idx] = f.values()[idx] - mean;
        dec.good_part.values()[idx] = mean;
        int c = p.dim - 1;
        while (c >= 0) {
          if (++cell[c] < hi[c]) break;
          cell[c] = lo[c];
          --c;
        }
        if (c < 0) break;
      }
    }
    dec.bad_parts.push_back(std::move(b));
  }
  return dec;
}

double measure_weak_l1(const DyadicShift& shift, const GridFunction& f,
                       const std::vector<double>& lambda_grid) {
  double l1 = f.l1_norm();
  if (l1 == 0.0) throw std::invalid_argument("measure_weak_l1: zero f");
  GridFunction sf = apply_shift(shift, f);
  double cellvol = f.cell_volume();
  std::vector<double> grid = lambda_grid;
  if (grid.empty()) {
    double lo = 0.0, hi = 0.0;
    for (double x : sf.values()) {
      double a = std::fabs(x);
      if (a > 0.0 && (lo == 0.0 || a < lo)) lo = a;
      hi = std::max(hi, a);
    }
    if (hi == 0.0) return 0.0;
    for (double l = lo * 0.5; l <= hi * 1.0000001; l *= 2.0) grid.push_back(l);
  }
  double best = 0.0;
  for (double lambda : grid) {
    std::int64_t count = 0;
    for (double x : sf.values())
      if (std::fabs(x) > lambda) ++count;
    best = std::max(best, lambda * static_cast<double>(count) * cellvol / l1);
  }
  return best;
}

double measure_weak_l1_family(const DyadicShift& shift, const Window& win) {
  const auto& p = shift.system.params();
  double measured = 0.0;
  std::int64_t probes = 0;
  for (const auto& block : shift.blocks) {
    for (const auto& rec : block.records) {
      if (++probes > 12) break;
      TickBox bi = shift.system.realize(rec.I);
      std::int64_t cell = std::clamp<std::int64_t>(
          (bi.lo[0] + bi.hi[0]) / 2, win.lo[0], win.hi[0] - 2);
      GridFunction spike(p.dim, p.k_max, win);
      spike.values()[cell - win.lo[0]] = 1.0;
      measured = std::max(measured, measure_weak_l1(shift, spike));
      GridFunction dip(p.dim, p.k_max, win);
      dip.values()[cell - win.lo[0]] = 1.0;
      dip.values()[cell - win.lo[0] + 1] = -1.0;
      measured = std::max(measured, measure_weak_l1(shift, dip));
      auto h = haar_function(shift.system, rec.I, rec.eta, win);
      if (h.l1_norm() > 0)
        measured = std::max(measured, measure_weak_l1(shift, h));
    }
    if (probes > 12) break;
  }
  GridFunction ladder(p.dim, p.k_max, win);
  std::int64_t n = win.extent(0);
  for (std::int64_t blk = 2; blk <= n; blk *= 2)
    for (std::int64_t start = 0; start + blk <= n; start += 2 * blk) {
      ladder.values()[start + blk / 2 - 1] += 1.0;
      ladder.values()[start + blk / 2] -= 1.0;
    }
  if (ladder.l1_norm() > 0)
    measured = std::max(measured, measure_weak_l1(shift, ladder));
  return measured;
}

double estimate_l2_norm(const DyadicShift& shift, int iterations,
                        std::uint64_t seed) {
  if (iterations < 1) throw std::invalid_argument("iterations >= 1 required");
  bool empty = true;
  for (const auto& b : shift.blocks)
    if (!b.records.empty()) empty = false;
  if (empty) return 0.0;
  const auto& p = shift.system.params();
  Window win = Window::full(p);
  GridFunction v = random_function(p.dim, p.k_max, win, seed);
  double nv = v.l2_norm();
  if (nv == 0.0) return 0.0;
  v *= 1.0 / nv;
  DyadicShift adj = adjoint(shift);
  double norm = 0.0;
  for (int it = 0; it < iterations; ++it) {
    GridFunction sv = apply_shift(shift, v);
    norm = sv.l2_norm();  // ||v|| == 1 throughout
    GridFunction w = apply_shift(adj, sv);
    double nw = w.l2_norm();
    if (nw == 0.0) break;
    w *= 1.0 / nw;
    v = std::move(w);
  }
  return norm;
}

std::vector<double> dense_matrix(const DyadicShift& shift, const Window& win) {
  const auto& p = shift.system.params();
  std::int64_t n = win.cell_count();
  std::vector<double> a(static_cast<std::size_t>(n) * n, 0.0);
  GridFunction e(p.dim, p.k_max, win);
  for (std::int64_t q = 0; q < n; ++q) {
    std::fill(e.values().begin(), e.values().end(), 0.0);
    e.values()[q] = 1.0;
    GridFunction col = apply_shift(shift, e);
    for (std::int64_t r = 0; r < n; ++r) a[r * n + q] = col.values()[r];
  }
  return a;
}

namespace {

// Householder tridiagonalization of a symmetric matrix, eigenvalues only.
void tridiagonalize(std::vector<double>& a, std::int64_t n,
                    std::vector<double>& d, std::vector<double>& e) {
  d.assign(n, 0.0);
  e.assign(n, 0.0);
  for (std::int64_t i = n - 1; i >= 1; --i) {
    std::int64_t l = i - 1;
    double h = 0.0, scale = 0.0;
    if (l > 0) {
      for (std::int64_t k = 0; k <= l; ++k) scale += std::fabs(a[i * n + k]);
      if (scale == 0.0) {
        e[i] = a[i * n + l];
      } else {
        for (std::int64_t k = 0; k <= l; ++k) {
          a[i * n + k] /= scale;
          h += a[i * n + k] * a[i * n + k];
        }
        double f = a[i * n + l];
        double g = f >= 0.0 ? -std::sqrt(h) : std::sqrt(h);
        e[i] = scale * g;
        h -= f * g;
        a[i * n + l] = f - g;
        f = 0.0;
        for (std::int64_t j = 0; j <= l; ++j) {
          g = 0.0;
          for (std::int64_t k = 0; k <= j; ++k) g += a[j * n + k] * a[i * n + k];
          for (std::int64_t k = j + 1; k <= l; ++k)
            g += a[k * n + j] * a[i * n + k];
          e[j] = g / h;
          f += e[j] * a[i * n + j];
        }
        double hh = f / (h + h);
        for (std::int64_t j = 0; j <= l; ++j) {
          f = a[i * n + j];
          double gg = e[j] - hh * f;
          e[j] = gg;
          for (std::int64_t k = 0; k <= j; ++k)
            a[j * n + k] -= f * e[k] + gg * a[i * n + k];
        }
      }
    } else {
      e[i] = a[i * n + l];
    }
  }
  for (std::int64_t i = 0; i < n; ++i) d[i] = a[i * n + i];
}

// # eigenvalues < x of the tridiagonal (d, e), e[i] couples i-1 and i
std::int64_t sturm_count(const std::vector<double>& d,
                         const std::vector<double>& e, double x) {
  std::int64_t n = static_cast<std::int64_t>(d.size());
  std::int64_t cnt = 0;
  double q = d[0] - x;
  if (q < 0) ++cnt;
  for (std::int64_t i = 1; i < n; ++i) {
    double denom = q;
    if (std::fabs(denom) < 1e-300) denom = denom < 0 ? -1e-300 : 1e-300;
    q = d[i] - x - e[i] * e[i] / denom;
    if (q < 0) ++cnt;
  }
  return cnt;
}

double largest_eigenvalue_sym(std::vector<double> a, std::int64_t n) {
  if (n == 1) return a[0];
  std::vector<double> d, e;
  tridiagonalize(a, n, d, e);
  double hi = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    double rad = std::fabs(e[i]) + (i + 1 < n ? std::fabs(e[i + 1]) : 0.0);
    hi = std::max(hi, d[i] + rad);
  }
  double lo = -hi - 1.0;
  hi += 1.0;
  for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, std::fabs(hi));
       ++it) {
    double mid = 0.5 * (lo + hi);
    if (sturm_count(d, e, mid) >= n)
      hi = mid;  // all eigenvalues below mid
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double dense_operator_norm(const std::vector<double>& a, std::int64_t n) {
  std::vector<double> ata(static_cast<std::size_t>(n) * n, 0.0);
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = 0; j <= i; ++j) {
      double s = 0.0;
      for (std::int64_t k = 0; k < n; ++k) s += a[k * n + i] * a[k * n + j];
      ata[i * n + j] = ata[j * n + i] = s;
    }
  double lam = largest_eigenvalue_sym(std::move(ata), n);
  return std::sqrt(std::max(0.0, lam));
}

std::optional<DyadicShift> random_good_shift(const DyadicSystem& sys,
                                             const Window& win,
                                             const RandomShiftOptions& opt,
                                             std::uint64_t seed) {
  const auto& p = sys.params();
  int depth = std::max(opt.u, opt.v);
  if (p.k_max - depth < p.k_min) return std::nullopt;
  std::mt19937_64 rng(seed);
  auto u01 = [&rng]() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };

  // smallest admissible slot at the given depth: slot*side_sub >= threshold
  auto min_slot = [&](int lev_sub, int lev_k) -> std::int64_t {
    std::int64_t side_sub = sys.side_ticks(lev_sub);
    std::int64_t nslots = std::int64_t{1} << (lev_sub - lev_k);
    std::int64_t lo = 0, hi = nslots;
    while (lo < hi) {
      std::int64_t mid = (lo + hi) / 2;
      if (compare_dist_threshold(p, mid * side_sub, lev_sub, lev_k, true) >= 0)
        hi = mid;
      else
        lo = mid + 1;
    }
    return lo;
  };

  // slot thresholds are scale-free: probe at the coarsest level
  std::int64_t smin_i0 = min_slot(p.k_min + opt.u, p.k_min);
  std::int64_t smax_i0 = (std::int64_t{1} << opt.u) - 1 - smin_i0;
  std::int64_t smin_j0 = min_slot(p.k_min + opt.v, p.k_min);
  std::int64_t smax_j0 = (std::int64_t{1} << opt.v) - 1 - smin_j0;
  bool good_possible = smin_i0 <= smax_i0 && smin_j0 <= smax_j0;
  if (!good_possible && opt.require_good) return std::nullopt;

  DyadicShift shift{sys, opt.u, opt.v, good_possible, 0.0, {}};
  // cancellative records need children below them
  for (int kl = p.k_min; kl + depth <= p.k_max - 1; ++kl) {
    std::int64_t smin_i = good_possible ? min_slot(kl + opt.u, kl) : 0;
    std::int64_t smax_i = (std::int64_t{1} << opt.u) - 1 -
                          (good_possible ? smin_i : 0);
    std::int64_t smin_j = good_possible ? min_slot(kl + opt.v, kl) : 0;
    std::int64_t smax_j = (std::int64_t{1} << opt.v) - 1 -
                          (good_possible ? smin_j : 0);
    if (smin_i > smax_i || smin_j > smax_j) continue;
    for (const auto& K : cubes_meeting_window(sys, kl, win)) {
      if (u01() > opt.block_density) continue;
      TickBox bk = sys.realize(K);
      ShiftBlock block;
      block.K = K;
      for (int t = 0; t < opt.records_per_block; ++t) {
        ShiftRecord rec;
        rec.I.level = kl + opt.u;
        rec.J.level = kl + opt.v;
        for (int c = 0; c < p.dim; ++c) {
          std::int64_t span_i = smax_i - smin_i + 1;
          std::int64_t slot_i =
              smin_i + std::min<std::int64_t>(span_i - 1,
                                              static_cast<std::int64_t>(u01() * span_i));
          std::int64_t span_j = smax_j - smin_j + 1;
          std::int64_t slot_j =
              smin_j + std::min<std::int64_t>(span_j - 1,
                                              static_cast<std::int64_t>(u01() * span_j));
          std::int64_t start_i = bk.lo[c] + slot_i * sys.side_ticks(rec.I.level);
          std::int64_t start_j = bk.lo[c] + slot_j * sys.side_ticks(rec.J.level);
          rec.I.index[c] = (start_i - sys.offset_ticks(rec.I.level, c)) /
                           sys.side_ticks(rec.I.level);
          rec.J.index[c] = (start_j - sys.offset_ticks(rec.J.level, c)) /
                           sys.side_ticks(rec.J.level);
        }
        unsigned nsig = 1u << p.dim;
        rec.eta = opt.cancellative_only ? 1 + rng() % (nsig - 1) : rng() % nsig;
        rec.theta = opt.cancellative_only ? 1 + rng() % (nsig - 1) : rng() % nsig;
        double mag = std::sqrt(std::ldexp(1.0, -p.dim * rec.I.level)) *
                     std::sqrt(std::ldexp(1.0, -p.dim * rec.J.level)) *
                     std::ldexp(1.0, p.dim * kl);
        rec.coeff = (rng() & 1 ? 1.0 : -1.0) * mag /
                    static_cast<double>(opt.records_per_block);
        block.records.push_back(rec);
      }
      shift.blocks.push_back(std::move(block));
    }
  }
  canonicalize(shift);
  return shift;
}

std::string DyadicShift::to_json() const {
  nlohmann::json j;
  const auto& p = system.params();
  j["u"] = u;
  j["v"] = v;
  j["good"] = good_flag;
  j["params"] = {{"dim", p.dim},     {"k_min", p.k_min},
                 {"k_max", p.k_max}, {"r", p.r},
                 {"gamma_num", p.gamma.num}, {"gamma_den", p.gamma.den}};
  j["beta_bits"] = system.bits();
  auto cube_json = [&](const DyadicCube& cu) {
    nlohmann::json c;
    c["level"] = cu.level;
    c["index"] = std::vector<std::int64_t>(cu.index.begin(),
                                           cu.index.begin() + p.dim);
    return c;
  };
  nlohmann::json blocks_j = nlohmann::json::array();
  for (const auto& b : blocks) {
    nlohmann::json bj;
    bj["K"] = cube_json(b.K);
    nlohmann::json recs = nlohmann::json::array();
    for (const auto& r : b.records) {
      recs.push_back({{"I", cube_json(r.I)},
                      {"J", cube_json(r.J)},
                      {"eta", r.eta},
                      {"theta", r.theta},
                      {"coeff", r.coeff}});
    }
    bj["records"] = recs;
    blocks_j.push_back(bj);
  }
  j["blocks"] = blocks_j;
  return j.dump();
}

DyadicShift DyadicShift::from_json(const std::string& text) {
  auto j = nlohmann::json::parse(text);
  GridParams p;
  p.dim = j["params"]["dim"].get<int>();
  p.k_min = j["params"]["k_min"].get<int>();
  p.k_max = j["params"]["k_max"].get<int>();
  p.r = j["params"]["r"].get<int>();
  p.gamma.num = j["params"]["gamma_num"].get<long long>();
  p.gamma.den = j["params"]["gamma_den"].get<long long>();
  DyadicSystem sys(p, j["beta_bits"].get<std::vector<std::uint8_t>>());
  DyadicShift s{std::move(sys), j["u"].get<int>(), j["v"].get<int>(),
                j["good"].get<bool>(), 0.0, {}};
  auto cube_from = [&](const nlohmann::json& c) {
    DyadicCube cu;
    cu.level = c["level"].get<int>();
    auto idx = c["index"].get<std::vector<std::int64_t>>();
    for (std::size_t i = 0; i < idx.size(); ++i) cu.index[i] = idx[i];
    return cu;
  };
  for (const auto& bj : j["blocks"]) {
    ShiftBlock b;
    b.K = cube_from(bj["K"]);
    for (const auto& rj : bj["records"]) {
      ShiftRecord r;
      r.I = cube_from(rj["I"]);
      r.J = cube_from(rj["J"]);
      r.eta = rj["eta"].get<unsigned>();
      r.theta = rj["theta"].get<unsigned>();
      r.coeff = rj["coeff"].get<double>();
      b.records.push_back(r);
    }
    s.blocks.push_back(std::move(b));
  }
  return s;
}

}  // namespace shiftlab
