#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "shiftlab/dyadic.hpp"
#include "shiftlab/grid_function.hpp"
#include "shiftlab/kernels.hpp"
#include "shiftlab/shifts.hpp"

// The good martingale representation and the decomposition of a discretized
// CZ operator into good dyadic shifts (out / inside / paraproduct / near
// families), with exact per-pair probabilities.
//
// Operational pi_IJ: with cond = P[smaller good | coarse bits fixed],
// g_big = goodness indicator of the bigger cube, and per-level full goodness
// probabilities pi(k),
//   pi_IJ = cond * g_big * pi_ref^2 / (pi(lev I) pi(lev J)),  pi_ref = pi(finest).
// On a scale-invariant lattice all pi(k) coincide and this is the classical
// conditional probability; on the truncated grid it is the unique
// level-corrected form for which the representation identity
//   E_beta[ good_mds_value ] = pi_ref^2 <g, Tf>
// holds exactly for every bounded matrix T.

namespace shiftlab {

// theta(j) = ceil((j gamma + r) / (1 - gamma))
int theta_of(const GridParams& p, int j);

enum class PairFamily { out, inside, near_diag };

struct PairInfo {
  DyadicCube I;  // f-side cube (the smaller one, l(I) <= l(J))
  DyadicCube J;  // g-side cube
  double pi = 0.0;
  DyadicCube K{};          // canonical block cube
  bool k_in_range = false;
  int i = 0, j = 0;        // family indices
  int u = 0, v = 0;        // canonical shift parameters
};

struct PairBucket {
  PairFamily family = PairFamily::out;
  int i = 0, j = 0;
  std::vector<PairInfo> pairs;
};

// Ordered pairs (I, J) of D-candidate cubes meeting the window with
// l(I) <= l(J) (strictly, when include_equal_sizes is false), classified by
// the out / inside / near trichotomy, with pi attached.
std::vector<PairBucket> classify_pairs(const DyadicSystem& sys, const Window& win,
                                       const GoodnessTable& table,
                                       bool include_equal_sizes = true);

// The beta-indexed inner double sum of the good martingale representation,
// both halves (l(J) >= l(I) and the mirrored strict half).
double good_mds_value(const OperatorMatrix& m, const GridFunction& f,
                      const GridFunction& g, const DyadicSystem& sys,
                      const GoodnessTable& table);

struct ShiftAssembly {
  // good finite shifts keyed by (u,v); near(r) shares (2r, r) with nothing
  // else here (the collapsed paraproduct is kept separate)
  std::map<std::pair<int, int>, DyadicShift> shifts;
  // collapsed dual paraproduct, parameters (2r, r); in-range blocks only
  std::optional<DyadicShift> paraproduct;
  // pairs whose canonical K lies below the coarsest level, keyed by the
  // would-be (u,v); evaluated directly in the series
  std::map<std::pair<int, int>, std::vector<std::pair<PairFamily, PairInfo>>>
      residual;
  // all inside pairs (for the uncollapsed paraproduct leftover)
  std::vector<PairInfo> inside_pairs;
  // collapsed-paraproduct entries whose K = I^{(2r)} is out of range
  std::vector<PairInfo> paraproduct_residual;
  double alpha = 1.0;
};

// Builds the shift family from a discretized operator. Every emitted shift
// passes validate_shift including goodness; a violation throws.
ShiftAssembly build_shifts(const OperatorMatrix& m, const DyadicSystem& sys,
                           const std::vector<PairBucket>& buckets,
                           const GoodnessTable& table);

// spec surface: merged (u,v) -> shift map with the paraproduct folded into
// its (2r, r) slot
std::map<std::pair<int, int>, DyadicShift> merged_shifts(const ShiftAssembly& a);

// sum over classified pairs of T_JI * pi (one half of good_mds_value)
double direct_half_sum(const OperatorMatrix& m, const DyadicSystem& sys,
                       const std::vector<PairBucket>& buckets,
                       const GridFunction& f, const GridFunction& g);

// paraproduct leftover: sum over inside pairs of <T*1, D_I f> <D_J g>_I pi
double paraproduct_leftover(const OperatorMatrix& m, const DyadicSystem& sys,
                            const std::vector<PairInfo>& inside_pairs,
                            const GridFunction& f, const GridFunction& g);

// collapsed paraproduct sum over (I, I^{(r)}) pairs (shift + residual routes)
double collapsed_paraproduct_value(const OperatorMatrix& m,
                                   const DyadicSystem& sys,
                                   const GoodnessTable& table,
                                   const GridFunction& f, const GridFunction& g);

// series value Sum_{max(u,v) <= u_max} 2^{-max(u,v) alpha/2} <g, S^{uv} f>
// + gated residual + gated paraproduct leftover. u_max < 0 means full.
double series_value(const ShiftAssembly& a, const OperatorMatrix& m,
                    const DyadicSystem& sys, const GridFunction& f,
                    const GridFunction& g, int u_max = -1);

// one half of the representation for one system: classify + build + series
double half_representation_value(const OperatorMatrix& m, const DyadicSystem& sys,
                                 const GoodnessTable& table, const GridFunction& f,
                                 const GridFunction& g, int u_max,
                                 bool include_equal_sizes);

// both halves: primal on (T, f, g), mirrored on (T^t, g, f) strict
double representation_value(const OperatorMatrix& m, const DyadicSystem& sys,
                            const GoodnessTable& table, const GridFunction& f,
                            const GridFunction& g, int u_max = -1);

struct RepresentationReport {
  double direct = 0.0;  // <g, Tf>
  double pi_ref = 0.0;
  ProbabilityMode mode = ProbabilityMode::exhaustive;
  long long samples = 0;
  struct Entry {
    int u_max = -1;
    double reconstructed = 0.0;  // beta-average / pi_ref^2
    double ci_halfwidth = 0.0;
    double relative_error = 0.0;
  };
  std::vector<Entry> series;
  // exhaustive mode: the exact identity sub-check
  bool identity_checked = false;
  double identity_lhs = 0.0;  // E_beta[good_mds_value]
  double identity_rhs = 0.0;  // pi_ref^2 <g, Tf>
  double identity_rel_error = 0.0;
  std::string to_json() const;
};

// pre: at most 2^N coarsest cubes meet the window (window no wider than one
// coarsest cube per axis)
RepresentationReport verify_representation(const OperatorMatrix& m,
                                           const GridParams& params,
                                           const GridFunction& f,
                                           const GridFunction& g,
                                           const std::vector<int>& u_max_list,
                                           ProbabilityMode mode,
                                           long long samples = 0,
                                           std::uint64_t seed = 0);

}  // namespace shiftlab
