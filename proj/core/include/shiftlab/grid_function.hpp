#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "shiftlab/dyadic.hpp"

// Piecewise-constant functions on finest-level cells of a window. The finest
// level is common to every system with the same params (shifts act only at
// strictly finer indices), so a GridFunction can be shared across all beta.

namespace shiftlab {

class GridFunction {
 public:
  GridFunction() = default;
  GridFunction(int dim, int k_max, Window win);

  int dim() const { return dim_; }
  int k_max() const { return k_max_; }
  const Window& window() const { return win_; }
  double cell_volume() const;  // 2^{-N k_max}

  double& at_flat(std::int64_t i) { return v_[i]; }
  double at_flat(std::int64_t i) const { return v_[i]; }
  // global finest-cell coordinate; cells outside the window read as 0
  double at_cell(const Index& cell) const;
  void set_cell(const Index& cell, double value);

  std::vector<double>& values() { return v_; }
  const std::vector<double>& values() const { return v_; }
  std::int64_t size() const { return static_cast<std::int64_t>(v_.size()); }

  GridFunction& operator+=(const GridFunction& o);
  GridFunction& operator-=(const GridFunction& o);
  GridFunction& operator*=(double s);

  // integral over the cube (cube extends with zeros outside the window)
  double integral_over(const TickBox& box) const;
  double integral() const;
  double sup_norm() const;
  double l1_norm() const;  // integral of |f|
  double l2_norm() const;

  std::string to_csv() const;
  static GridFunction from_csv(std::istream& in, int dim, int k_max, Window win);
  // dense row-major binary dump; header is a JSON line {dim, k_max, window}
  void dump_binary(std::ostream& out) const;
  static GridFunction load_binary(std::istream& in);

 private:
  int dim_ = 1;
  int k_max_ = 0;
  Window win_{};
  std::vector<double> v_;
};

// Lebesgue pairing: sum of cell products times cell volume.
double inner(const GridFunction& f, const GridFunction& g);

GridFunction random_function(int dim, int k_max, Window win, std::uint64_t seed,
                             double lo = -1.0, double hi = 1.0);

}  // namespace shiftlab
