#include "shiftlab/kernels.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <random>

#include "json.hpp"
#include "shiftlab/haar.hpp"

namespace shiftlab {

namespace {

// Gauss-Legendre nodes/weights on [-1,1], order 8
constexpr double kGLNode[8] = {
    -0.9602898564975362, -0.7966664774136267, -0.5255324099163290,
    -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
    0.7966664774136267,  0.9602898564975362};
constexpr double kGLWeight[8] = {
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
    0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
    0.2223810344533745, 0.1012285362903763};

double t_log_t(double t) {  // antiderivative of log|x|: t log|t| - t
  if (t == 0.0) return 0.0;
  return t * std::log(std::fabs(t)) - t;
}

// exact double integral of 1/(x-y) over [a,b] x [c,d]
double hilbert_rect(double a, double b, double c, double d) {
  return t_log_t(b - c) - t_log_t(a - c) - t_log_t(b - d) + t_log_t(a - d);
}

struct PairBoxes {
  double lo1[kMaxDim], hi1[kMaxDim], lo2[kMaxDim], hi2[kMaxDim];
};

double gl_tensor(const CZKernel& k, int dim, const PairBoxes& b) {
  // tensor Gauss-Legendre over box1 x box2
  int total_axes = 2 * dim;
  std::array<int, 2 * kMaxDim> ix{};
  double sum = 0.0;
  for (;;) {
    double x[kMaxDim], y[kMaxDim], w = 1.0;
    for (int c = 0; c < dim; ++c) {
      double mid = 0.5 * (b.lo1[c] + b.hi1[c]), half = 0.5 * (b.hi1[c] - b.lo1[c]);
      x[c] = mid + half * kGLNode[ix[c]];
      w *= half * kGLWeight[ix[c]];
      double mid2 = 0.5 * (b.lo2[c] + b.hi2[c]), half2 = 0.5 * (b.hi2[c] - b.lo2[c]);
      y[c] = mid2 + half2 * kGLNode[ix[dim + c]];
      w *= half2 * kGLWeight[ix[dim + c]];
    }
    sum += w * k.evaluate(x, y, dim);
    int a = total_axes - 1;
    while (a >= 0) {
      if (++ix[a] < 8) break;
      ix[a] = 0;
      --a;
    }
    if (a < 0) break;
  }
  return sum;
}

double separation(int dim, const PairBoxes& b) {
  double d = 0.0;
  for (int c = 0; c < dim; ++c) {
    double gap = std::max(0.0, std::max(b.lo2[c] - b.hi1[c], b.lo1[c] - b.hi2[c]));
    d = std::max(d, gap);
  }
  return d;
}

double integrate_pair(const CZKernel& k, int dim, const PairBoxes& b, int depth,
                      const QuadratureOptions& opt) {
  double width = 0.0;
  for (int c = 0; c < dim; ++c) width = std::max(width, b.hi1[c] - b.lo1[c]);
  if (separation(dim, b) >= opt.threshold_cells * width ||
      depth >= opt.max_subdivision_depth)
    return gl_tensor(k, dim, b);
  double sum = 0.0;
  unsigned parts = 1u << dim;
  for (unsigned s1 = 0; s1 < parts; ++s1) {
    for (unsigned s2 = 0; s2 < parts; ++s2) {
      PairBoxes sub;
      for (int c = 0; c < dim; ++c) {
        double m1 = 0.5 * (b.lo1[c] + b.hi1[c]);
        double m2 = 0.5 * (b.lo2[c] + b.hi2[c]);
        sub.lo1[c] = ((s1 >> c) & 1) ? m1 : b.lo1[c];
        sub.hi1[c] = ((s1 >> c) & 1) ? b.hi1[c] : m1;
        sub.lo2[c] = ((s2 >> c) & 1) ? m2 : b.lo2[c];
        sub.hi2[c] = ((s2 >> c) & 1) ? b.hi2[c] : m2;
      }
      sum += integrate_pair(k, dim, sub, depth + 1, opt);
    }
  }
  return sum;
}

}  // namespace

CZKernel hilbert_kernel() {
  CZKernel k;
  k.evaluate = [](const double* x, const double* y, int) {
    return 1.0 / (x[0] - y[0]);
  };
  k.alpha = 1.0;
  k.size_const = 1.0;
  k.odd = true;
  k.kind = "hilbert";
  return k;
}

CZKernel smooth_odd_kernel(double reg_width) {
  CZKernel k;
  double w2 = reg_width * reg_width;
  k.evaluate = [w2](const double* x, const double* y, int) {
    double u = x[0] - y[0];
    return u / (u * u + w2);
  };
  k.alpha = 1.0;
  k.size_const = 1.0;
  k.odd = true;
  k.kind = "smooth_odd";
  return k;
}

OperatorMatrix::OperatorMatrix(int dim, int k_max, Window win)
    : dim_(dim), k_max_(k_max), win_(win), n_(win.cell_count()),
      a_(static_cast<std::size_t>(n_) * n_, 0.0) {}

GridFunction OperatorMatrix::apply(const GridFunction& f) const {
  GridFunction out(dim_, k_max_, win_);
  for (std::int64_t p = 0; p < n_; ++p) {
    double s = 0.0;
    const double* row = a_.data() + p * n_;
    for (std::int64_t q = 0; q < n_; ++q) s += row[q] * f.values()[q];
    out.values()[p] = s;
  }
  return out;
}

OperatorMatrix OperatorMatrix::transpose() const {
  OperatorMatrix t(dim_, k_max_, win_);
  t.kind = kind;
  t.alpha = alpha;
  for (std::int64_t p = 0; p < n_; ++p)
    for (std::int64_t q = 0; q < n_; ++q) t.at(q, p) = at(p, q);
  return t;
}

double OperatorMatrix::antisymmetry_defect() const {
  double m = 0.0;
  for (std::int64_t p = 0; p < n_; ++p)
    for (std::int64_t q = 0; q < n_; ++q)
      m = std::max(m, std::fabs(at(p, q) + at(q, p)));
  return m;
}

OperatorMatrix kernel_matrix(const CZKernel& kernel, const GridParams& params,
                             const Window& win, QuadratureOptions opt) {
  params.validate();
  OperatorMatrix m(params.dim, params.k_max, win);
  m.kind = kernel.kind;
  m.alpha = kernel.alpha;
  double cell = std::ldexp(1.0, -params.k_max);
  double inv_vol = std::ldexp(1.0, params.dim * params.k_max);
  std::int64_t n = m.n();
  // enumerate cells by global coordinates
  std::vector<Index> cells;
  cells.reserve(n);
  {
    Index c = win.lo;
    for (;;) {
      cells.push_back(c);
      int a = win.dim - 1;
      while (a >= 0) {
        if (++c[a] < win.hi[a]) break;
        c[a] = win.lo[a];
        --a;
      }
      if (a < 0) break;
    }
  }
  bool hilbert_1d = (kernel.kind == "hilbert" && params.dim == 1);
  for (std::int64_t p = 0; p < n; ++p) {
    for (std::int64_t q = 0; q < n; ++q) {
      if (p == q) {
        if (!kernel.odd)
          throw unsupported_kernel(
              "diagonal singularity without principal-value symmetry");
        continue;  // principal value by symmetry
      }
      double v;
      if (hilbert_1d) {
        double a = cells[p][0] * cell, b = a + cell;
        double c0 = cells[q][0] * cell, d = c0 + cell;
        v = hilbert_rect(a, b, c0, d);
      } else {
        PairBoxes b;
        for (int c = 0; c < params.dim; ++c) {
          b.lo1[c] = cells[p][c] * cell;
          b.hi1[c] = b.lo1[c] + cell;
          b.lo2[c] = cells[q][c] * cell;
          b.hi2[c] = b.lo2[c] + cell;
        }
        v = integrate_pair(kernel, params.dim, b, 0, opt);
      }
      m.at(p, q) = v * inv_vol;
    }
  }
  return m;
}

double bilinear(const OperatorMatrix& m, const GridFunction& g,
                const GridFunction& f) {
  return inner(g, m.apply(f));
}

double haar_pairing(const OperatorMatrix& m, const DyadicSystem& sys,
                    const DyadicCube& J, unsigned theta, const DyadicCube& I,
                    unsigned eta) {
  const Window& win = m.window();
  for (const DyadicCube* cu : {&I, &J}) {
    TickBox b = sys.realize(*cu);
    for (int c = 0; c < win.dim; ++c)
      if (b.hi[c] <= win.lo[c] || b.lo[c] >= win.hi[c])
        throw std::out_of_range("cube outside window");
  }
  GridFunction hi = haar_function(sys, I, eta, win);
  GridFunction hj = haar_function(sys, J, theta, win);
  return bilinear(m, hj, hi);
}

double t_star_one(const OperatorMatrix& m, const DyadicSystem& sys,
                  const DyadicCube& I, unsigned eta) {
  GridFunction hi = haar_function(sys, I, eta, m.window());
  GridFunction th = m.apply(hi);
  return th.integral();
}

StandardEstimateReport verify_standard_estimates(const CZKernel& kernel, int dim,
                                                 long long sample_count,
                                                 std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto u01 = [&rng]() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  StandardEstimateReport rep;
  rep.samples = sample_count;
  for (long long s = 0; s < sample_count; ++s) {
    double x[kMaxDim], y[kMaxDim], xh[kMaxDim], yh[kMaxDim], h[kMaxDim];
    double d2 = 0.0;
    for (int c = 0; c < dim; ++c) {
      x[c] = u01();
      y[c] = u01();
      d2 += (x[c] - y[c]) * (x[c] - y[c]);
    }
    double dist = std::sqrt(d2);
    if (dist < 1e-9) continue;
    double hnorm = (0.499 * u01() + 1e-6) * dist;  // |x-y| > 2|h| > 0
    double hd2 = 0.0;
    for (int c = 0; c < dim; ++c) {
      h[c] = u01() - 0.5;
      hd2 += h[c] * h[c];
    }
    double hscale = hnorm / std::sqrt(hd2);
    for (int c = 0; c < dim; ++c) {
      h[c] *= hscale;
      xh[c] = x[c] + h[c];
      yh[c] = y[c] + h[c];
    }
    double K = kernel.evaluate(x, y, dim);
    double size_ratio =
        std::fabs(K) * std::pow(dist, dim) / kernel.size_const;
    double diff = std::fabs(kernel.evaluate(xh, y, dim) - K) +
                  std::fabs(kernel.evaluate(x, yh, dim) - K);
    double smooth_ratio = diff * std::pow(dist, dim + kernel.alpha) /
                          (kernel.size_const * std::pow(hnorm, kernel.alpha));
    rep.max_size_ratio = std::max(rep.max_size_ratio, size_ratio);
    rep.max_smoothness_ratio = std::max(rep.max_smoothness_ratio, smooth_ratio);
  }
  return rep;
}

void OperatorMatrix::dump_binary(std::ostream& out) const {
  nlohmann::json j;
  j["kernel_kind"] = kind;
  j["alpha"] = alpha;
  j["k_max"] = k_max_;
  j["dim"] = dim_;
  j["window"] = {{"lo", std::vector<std::int64_t>(win_.lo.begin(), win_.lo.begin() + dim_)},
                 {"hi", std::vector<std::int64_t>(win_.hi.begin(), win_.hi.begin() + dim_)}};
  out << j.dump() << '\n';
  out.write(reinterpret_cast<const char*>(a_.data()),
            static_cast<std::streamsize>(a_.size() * sizeof(double)));
}

OperatorMatrix OperatorMatrix::load_binary(std::istream& in) {
  std::string header;
  std::getline(in, header);
  auto j = nlohmann::json::parse(header);
  Window w;
  w.dim = j["dim"].get<int>();
  auto lo = j["window"]["lo"].get<std::vector<std::int64_t>>();
  auto hi = j["window"]["hi"].get<std::vector<std::int64_t>>();
  for (int c = 0; c < w.dim; ++c) {
    w.lo[c] = lo[c];
    w.hi[c] = hi[c];
  }
  OperatorMatrix m(w.dim, j["k_max"].get<int>(), w);
  m.kind = j["kernel_kind"].get<std::string>();
  m.alpha = j["alpha"].get<double>();
  in.read(reinterpret_cast<char*>(m.data().data()),
          static_cast<std::streamsize>(m.data().size() * sizeof(double)));
  return m;
}

}  // namespace shiftlab
