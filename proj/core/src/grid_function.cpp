#include "shiftlab/grid_function.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "json.hpp"

namespace shiftlab {

GridFunction::GridFunction(int dim, int k_max, Window win)
    : dim_(dim), k_max_(k_max), win_(win), v_(win.cell_count(), 0.0) {}

double GridFunction::cell_volume() const {
  return std::ldexp(1.0, -dim_ * k_max_);
}

double GridFunction::at_cell(const Index& cell) const {
  for (int c = 0; c < dim_; ++c)
    if (cell[c] < win_.lo[c] || cell[c] >= win_.hi[c]) return 0.0;
  return v_[win_.flatten(cell)];
}

void GridFunction::set_cell(const Index& cell, double value) {
  for (int c = 0; c < dim_; ++c)
    if (cell[c] < win_.lo[c] || cell[c] >= win_.hi[c])
      throw std::out_of_range("cell outside window");
  v_[win_.flatten(cell)] = value;
}

GridFunction& GridFunction::operator+=(const GridFunction& o) {
  for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += o.v_[i];
  return *this;
}
GridFunction& GridFunction::operator-=(const GridFunction& o) {
  for (std::size_t i = 0; i < v_.size(); ++i) v_[i] -= o.v_[i];
  return *this;
}
GridFunction& GridFunction::operator*=(double s) {
  for (auto& x : v_) x *= s;
  return *this;
}

// iterate cells of box∩window, calling fn(flat_index)
template <typename Fn>
static void for_cells_in(const Window& win, const TickBox& box, Fn&& fn) {
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

double GridFunction::integral_over(const TickBox& box) const {
  double s = 0.0;
  for_cells_in(win_, box, [&](const Index& cell) { s += v_[win_.flatten(cell)]; });
  return s * cell_volume();
}

double GridFunction::integral() const {
  double s = 0.0;
  for (double x : v_) s += x;
  return s * cell_volume();
}

double GridFunction::sup_norm() const {
  double m = 0.0;
  for (double x : v_) m = std::max(m, std::fabs(x));
  return m;
}

double GridFunction::l1_norm() const {
  double s = 0.0;
  for (double x : v_) s += std::fabs(x);
  return s * cell_volume();
}

double GridFunction::l2_norm() const {
  double s = 0.0;
  for (double x : v_) s += x * x;
  return std::sqrt(s * cell_volume());
}

double inner(const GridFunction& f, const GridFunction& g) {
  double s = 0.0;
  const auto& a = f.values();
  const auto& b = g.values();
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s * f.cell_volume();
}

std::string GridFunction::to_csv() const {
  std::string out = "cell,value\n";
  char buf[64];
  for (std::int64_t i = 0; i < size(); ++i) {
    std::snprintf(buf, sizeof buf, "%lld,%.17g\n", static_cast<long long>(i), v_[i]);
    out += buf;
  }
  return out;
}

GridFunction GridFunction::from_csv(std::istream& in, int dim, int k_max, Window win) {
  GridFunction f(dim, k_max, win);
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto comma = line.find(',');
    long long idx = std::stoll(line.substr(0, comma));
    f.at_flat(idx) = std::stod(line.substr(comma + 1));
  }
  return f;
}

void GridFunction::dump_binary(std::ostream& out) const {
  nlohmann::json j;
  j["dim"] = dim_;
  j["k_max"] = k_max_;
  j["window"] = {{"lo", std::vector<std::int64_t>(win_.lo.begin(), win_.lo.begin() + dim_)},
                 {"hi", std::vector<std::int64_t>(win_.hi.begin(), win_.hi.begin() + dim_)}};
  std::string header = j.dump();
  out << header << '\n';
  out.write(reinterpret_cast<const char*>(v_.data()),
            static_cast<std::streamsize>(v_.size() * sizeof(double)));
}

GridFunction GridFunction::load_binary(std::istream& in) {
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
  GridFunction f(w.dim, j["k_max"].get<int>(), w);
  in.read(reinterpret_cast<char*>(f.values().data()),
          static_cast<std::streamsize>(f.values().size() * sizeof(double)));
  return f;
}

GridFunction random_function(int dim, int k_max, Window win, std::uint64_t seed,
                             double lo, double hi) {
  GridFunction f(dim, k_max, win);
  std::mt19937_64 rng(seed);
  for (auto& x : f.values()) {
    double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    x = lo + (hi - lo) * u;
  }
  return f;
}

}  // namespace shiftlab
