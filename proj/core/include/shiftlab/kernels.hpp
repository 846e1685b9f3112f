#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "shiftlab/dyadic.hpp"
#include "shiftlab/grid_function.hpp"

// Discretized Calderon-Zygmund operators on the window: kernel definitions,
// standard-estimate checks, and matrix elements against Haar functions.

namespace shiftlab {

struct unsupported_kernel : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct CZKernel {
  // evaluate(x, y) for x != y; coordinates in continuous units
  std::function<double(const double*, const double*, int dim)> evaluate;
  double alpha = 1.0;       // Holder exponent in (0,1]
  double size_const = 1.0;  // C in |K| <= C |x-y|^-N
  bool odd = false;         // K(x,y) = -K(y,x); diagonal handled by symmetry
  std::string kind = "custom";
};

CZKernel hilbert_kernel();                       // 1/(x-y), N=1
CZKernel smooth_odd_kernel(double reg_width);    // (x-y)/((x-y)^2 + w^2), N=1

// Dense matrix over finest cells: entry(p,q) = (1/cellvol) int over
// cell_p x cell_q of K, so that matrix * cell-values = discretized Tf.
class OperatorMatrix {
 public:
  OperatorMatrix() = default;
  OperatorMatrix(int dim, int k_max, Window win);

  int dim() const { return dim_; }
  int k_max() const { return k_max_; }
  const Window& window() const { return win_; }
  std::int64_t n() const { return n_; }

  double& at(std::int64_t p, std::int64_t q) { return a_[p * n_ + q]; }
  double at(std::int64_t p, std::int64_t q) const { return a_[p * n_ + q]; }
  std::vector<double>& data() { return a_; }
  const std::vector<double>& data() const { return a_; }

  GridFunction apply(const GridFunction& f) const;
  OperatorMatrix transpose() const;
  double antisymmetry_defect() const;  // max |A + A^T|

  std::string kind = "custom";
  double alpha = 1.0;

  void dump_binary(std::ostream& out) const;
  static OperatorMatrix load_binary(std::istream& in);

 private:
  int dim_ = 1;
  int k_max_ = 0;
  Window win_{};
  std::int64_t n_ = 0;
  std::vector<double> a_;
};

struct QuadratureOptions {
  int gauss_order = 8;
  int max_subdivision_depth = 12;
  // subdivide cell pairs whose separation is below `threshold_cells` times
  // the current cell width
  double threshold_cells = 1.0;
};

OperatorMatrix kernel_matrix(const CZKernel& kernel, const GridParams& params,
                             const Window& win, QuadratureOptions opt = {});

// <g, Tf> for the discretized operator
double bilinear(const OperatorMatrix& m, const GridFunction& g,
                const GridFunction& f);

// <h^theta_J, T h^eta_I>
double haar_pairing(const OperatorMatrix& m, const DyadicSystem& sys,
                    const DyadicCube& J, unsigned theta, const DyadicCube& I,
                    unsigned eta);

// <1_W, T h^eta_I>  (window-truncated T*1 pairing)
double t_star_one(const OperatorMatrix& m, const DyadicSystem& sys,
                  const DyadicCube& I, unsigned eta);

struct StandardEstimateReport {
  double max_size_ratio = 0.0;
  double max_smoothness_ratio = 0.0;
  long long samples = 0;
};

StandardEstimateReport verify_standard_estimates(const CZKernel& kernel, int dim,
                                                 long long sample_count,
                                                 std::uint64_t seed);

}  // namespace shiftlab
