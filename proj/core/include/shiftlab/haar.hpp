#pragma once

#include <cstdint>
#include <vector>

#include "shiftlab/dyadic.hpp"
#include "shiftlab/grid_function.hpp"

// Tensor Haar functions, conditional expectations E_I, martingale differences
// D_I, and the expansion/reconstruction transforms. Sign convention per
// coordinate: -1 on the left half, +1 on the right; h^0_I = |I|^{-1/2} 1_I.

namespace shiftlab {

// eta is a bitmask over coordinates; eta == 0 is the noncancellative factor.
// Pre: cube.level < k_max unless eta == 0.
GridFunction haar_function(const DyadicSystem& sys, const DyadicCube& cube,
                           unsigned eta, const Window& win);

// <h^eta_I, f> without materializing the Haar vector
double haar_coefficient(const DyadicSystem& sys, const DyadicCube& cube,
                        unsigned eta, const GridFunction& f);

// adds coeff * h^eta_I to out
void add_haar(const DyadicSystem& sys, const DyadicCube& cube, unsigned eta,
              double coeff, GridFunction& out);

// E_k f: replace f by its mean on every level-k cube meeting the window.
// Means are full-cube averages of the zero-extended function.
GridFunction expectation_at_level(const DyadicSystem& sys, const GridFunction& f,
                                  int k);

// D_I f = sum_{children} E_{I'} f - E_I f; at the coarsest level the operator
// is redefined as D_I + E_I.
GridFunction martingale_diff(const DyadicSystem& sys, const GridFunction& f,
                             const DyadicCube& cube);

struct HaarCoefficient {
  DyadicCube cube;
  unsigned eta = 0;
  double value = 0.0;
};

struct HaarExpansion {
  int coarsest_level = 0;  // noncancellative signatures live here only
  std::vector<HaarCoefficient> coefficients;  // sorted by (cube, eta)
  double sum_of_squares() const;
};

HaarExpansion analyze(const DyadicSystem& sys, const GridFunction& f);
GridFunction synthesize(const DyadicSystem& sys, const HaarExpansion& e,
                        const Window& win, int k_max);

}  // namespace shiftlab
