#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "shiftlab/dyadic.hpp"
#include "shiftlab/grid_function.hpp"

// Dyadic shift operators: sum over K of averaging blocks A_K built from
// per-cube coefficient tables. Coefficients are stored so that
//   A_K f = sum a^{eta theta}_{IJK} <h^eta_I, f> h^theta_J,
// which matches the averaging form A_K f = avg_K a_K(x,y) f(y) dy with
// a_K = |K| sum a^{eta theta} h^theta_J(x) h^eta_I(y).

namespace shiftlab {

struct ShiftRecord {
  DyadicCube I;
  DyadicCube J;
  unsigned eta = 0;
  unsigned theta = 0;
  double coeff = 0.0;
};

struct ShiftBlock {
  DyadicCube K;
  std::vector<ShiftRecord> records;
};

struct DyadicShift {
  DyadicSystem system;
  int u = 0;
  int v = 0;
  bool good_flag = false;
  double norm_const = 0.0;  // measured sup_K ||a_K||_inf, set by validate
  std::vector<ShiftBlock> blocks;  // sorted by (level, index) of K

  std::string to_json() const;
  static DyadicShift from_json(const std::string& text);
};

struct ShiftValidation {
  bool ok = true;
  bool structure_ok = true;
  bool goodness_ok = true;
  double norm_const = 0.0;
  std::vector<std::string> messages;
};

// Reconstructs each a_K on the grid, measures sup ||a_K||_inf, verifies the
// level constraints, and (when good_flag) the half-threshold distances of
// every cube carrying a nonzero coefficient.
ShiftValidation validate_shift(const DyadicShift& shift);

GridFunction apply_shift(const DyadicShift& shift, const GridFunction& f);

DyadicShift adjoint(const DyadicShift& shift);

DyadicShift restrict_shift(const DyadicShift& shift,
                           const std::function<bool(const DyadicCube&)>& keep);

// sorts blocks and records into canonical order (stable application order)
void canonicalize(DyadicShift& shift);

// --- Calderon-Zygmund decomposition --------------------------------------

struct CZDecomposition {
  GridFunction good_part;
  std::vector<DyadicCube> bad_cubes;          // maximal, pairwise disjoint
  std::vector<GridFunction> bad_parts;        // aligned with bad_cubes
  double lambda = 0.0;
};

// f = g + sum b_L with b_L = 1_L (f - <f>_L), L the maximal dyadic cubes of
// the system with avg |f| > lambda.
CZDecomposition cz_decompose(const DyadicSystem& sys, const GridFunction& f,
                             double lambda);

// --- measurements ---------------------------------------------------------

// max over the lambda grid of lambda |{|Sf| > lambda}| / ||f||_1.
// Empty grid -> dyadic grid spanning the nonzero range of |Sf|.
double measure_weak_l1(const DyadicShift& shift, const GridFunction& f,
                       const std::vector<double>& lambda_grid = {});

// max of measure_weak_l1 over an adversarial input family: spikes and
// adjacent dipoles inside the shift's own input cubes, the shift's Haar
// atoms, and a multiscale dipole ladder
double measure_weak_l1_family(const DyadicShift& shift, const Window& win);

// power iteration on S*S; lower-bounds the L2 -> L2 norm
double estimate_l2_norm(const DyadicShift& shift, int iterations,
                        std::uint64_t seed);

// dense matrix of the shift (applies to basis vectors); oracle helper
std::vector<double> dense_matrix(const DyadicShift& shift, const Window& win);

// largest singular value of a dense matrix via symmetric eigensolve on A^T A
double dense_operator_norm(const std::vector<double>& a, std::int64_t n);

// --- random good shifts ----------------------------------------------------

struct RandomShiftOptions {
  int u = 1;
  int v = 1;
  double block_density = 1.0;   // probability a candidate K gets a block
  int records_per_block = 1;
  bool cancellative_only = true;
  // Depths 1 and 2 admit no good positions at all (a child always touches
  // its parent's boundary), so such shifts would be empty. When require_good
  // is false the generator falls back to unconstrained placement and clears
  // good_flag; when true it returns nullopt instead.
  bool require_good = false;
};

// Generates a shift with coefficients +-|I|^{1/2}|J|^{1/2}/|K|. When the
// depths admit good positions, every I, J keeps the half-threshold distance
// from dK and good_flag is set.
std::optional<DyadicShift> random_good_shift(const DyadicSystem& sys,
                                             const Window& win,
                                             const RandomShiftOptions& opt,
                                             std::uint64_t seed);

}  // namespace shiftlab
