#include "shiftlab/haar.hpp"

#include <algorithm>
#include <cmath>

namespace shiftlab {

namespace {

// iterate cells of box ∩ window
template <typename Fn>
void for_cells(const Window& win, const TickBox& box, Fn&& fn) {
  Index lo{}, hi{};
  for (int c = 0; c < win.dim; ++c) {
    lo[c] = std::max(win.lo[c], box.lo[c]);
    hi[c] = std::min(win.hi[c], box.hi[c]);
    if (lo[c] >= hi[c]) return;
  }
  Index cell = lo;
  for (;;) {
    fn(cell);
    int c = win.dim - 1;
    while (c >= 0) {
      if (++cell[c] < hi[c]) break;
      cell[c] = lo[c];
      --c;
    }
    if (c < 0) break;
  }
}

// sign of h^eta_I at a cell: product over set coordinates of (-1 left / +1 right)
inline int haar_sign(const TickBox& box, std::int64_t half, unsigned eta,
                     const Index& cell, int dim) {
  int s = 1;
  for (int c = 0; c < dim; ++c)
    if ((eta >> c) & 1) s *= (cell[c] - box.lo[c] < half) ? -1 : 1;
  return s;
}

}  // namespace

GridFunction haar_function(const DyadicSystem& sys, const DyadicCube& cube,
                           unsigned eta, const Window& win) {
  const auto& p = sys.params();
  if (eta != 0 && cube.level >= p.k_max)
    throw std::out_of_range("cancellative Haar function needs children");
  GridFunction h(p.dim, p.k_max, win);
  TickBox box = sys.realize(cube);
  std::int64_t half = sys.side_ticks(cube.level) / 2;
  double scale = std::sqrt(std::ldexp(1.0, p.dim * cube.level));  // |I|^{-1/2}
  for_cells(win, box, [&](const Index& cell) {
    h.values()[win.flatten(cell)] =
        scale * haar_sign(box, half, eta, cell, p.dim);
  });
  return h;
}

double haar_coefficient(const DyadicSystem& sys, const DyadicCube& cube,
                        unsigned eta, const GridFunction& f) {
  const auto& p = sys.params();
  if (eta != 0 && cube.level >= p.k_max)
    throw std::out_of_range("cancellative Haar function needs children");
  TickBox box = sys.realize(cube);
  std::int64_t half = sys.side_ticks(cube.level) / 2;
  double s = 0.0;
  const Window& win = f.window();
  for_cells(win, box, [&](const Index& cell) {
    s += haar_sign(box, half, eta, cell, p.dim) * f.values()[win.flatten(cell)];
  });
  double scale = std::sqrt(std::ldexp(1.0, p.dim * cube.level));
  return s * scale * f.cell_volume();
}

void add_haar(const DyadicSystem& sys, const DyadicCube& cube, unsigned eta,
              double coeff, GridFunction& out) {
  if (coeff == 0.0) return;
  const auto& p = sys.params();
  TickBox box = sys.realize(cube);
  std::int64_t half = sys.side_ticks(cube.level) / 2;
  double scale = std::sqrt(std::ldexp(1.0, p.dim * cube.level)) * coeff;
  const Window& win = out.window();
  for_cells(win, box, [&](const Index& cell) {
    out.values()[win.flatten(cell)] +=
        scale * haar_sign(box, half, eta, cell, p.dim);
  });
}

GridFunction expectation_at_level(const DyadicSystem& sys, const GridFunction& f,
                                  int k) {
  const auto& p = sys.params();
  if (k < p.k_min || k > p.k_max) throw std::out_of_range("level out of range");
  GridFunction out(p.dim, p.k_max, f.window());
  double inv_vol = std::ldexp(1.0, p.dim * k);  // 1/|I|
  for (const auto& cu : cubes_meeting_window(sys, k, f.window())) {
    TickBox box = sys.realize(cu);
    double mean = f.integral_over(box) * inv_vol;
    if (mean == 0.0) continue;
    for_cells(f.window(), box, [&](const Index& cell) {
      out.values()[f.window().flatten(cell)] = mean;
    });
  }
  return out;
}

GridFunction martingale_diff(const DyadicSystem& sys, const GridFunction& f,
                             const DyadicCube& cube) {
  const auto& p = sys.params();
  if (cube.level < p.k_min || cube.level >= p.k_max)
    throw std::out_of_range("martingale_diff level out of range");
  GridFunction out(p.dim, p.k_max, f.window());
  const Window& win = f.window();
  for (const auto& ch : children(sys, cube)) {
    TickBox box = sys.realize(ch);
    double mean = f.integral_over(box) * std::ldexp(1.0, p.dim * ch.level);
    if (mean == 0.0) continue;
    for_cells(win, box, [&](const Index& cell) {
      out.values()[win.flatten(cell)] = mean;
    });
  }
  if (cube.level != p.k_min) {  // coarsest level keeps E_I (redefined D+E)
    TickBox box = sys.realize(cube);
    double mean = f.integral_over(box) * std::ldexp(1.0, p.dim * cube.level);
    for_cells(win, box, [&](const Index& cell) {
      out.values()[win.flatten(cell)] -= mean;
    });
  }
  return out;
}

HaarExpansion analyze(const DyadicSystem& sys, const GridFunction& f) {
  const auto& p = sys.params();
  HaarExpansion e;
  e.coarsest_level = p.k_min;
  for (int k = p.k_min; k < p.k_max; ++k) {
    for (const auto& cu : cubes_meeting_window(sys, k, f.window())) {
      unsigned eta0 = (k == p.k_min) ? 0u : 1u;
      for (unsigned eta = eta0; eta < (1u << p.dim); ++eta) {
        double c = haar_coefficient(sys, cu, eta, f);
        e.coefficients.push_back({cu, eta, c});
      }
    }
  }
  return e;
}

GridFunction synthesize(const DyadicSystem& sys, const HaarExpansion& e,
                        const Window& win, int k_max) {
  GridFunction out(sys.params().dim, k_max, win);
  for (const auto& c : e.coefficients) add_haar(sys, c.cube, c.eta, c.value, out);
  return out;
}

double HaarExpansion::sum_of_squares() const {
  double s = 0.0;
  for (const auto& c : coefficients) s += c.value * c.value;
  return s;
}

}  // namespace shiftlab
