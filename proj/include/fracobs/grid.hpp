#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>
#include <string>
#include <utility>

#include "fracobs/weights.hpp"

namespace fracobs {

template <typename Scalar>
struct GridSpec {
  Scalar rx{1};
  Scalar ry{1};
  int nx{129};
  int ny{65};
  WeightParams<Scalar> params{};

  void validate() const {
    if (nx < 9 || nx % 2 == 0) throw DomainError("grid nx must be odd and at least 9");
    if (ny < 5) throw DomainError("grid ny must be at least 5");
    if (!(rx > 0) || !(ry > 0)) throw DomainError("grid extents must be positive");
    s_from_a(params.a);
    if (params.n != 1) throw DomainError("only n = 1 grids are implemented");
  }
};

/// Uniform node grid on [-rx, rx] x [0, ry]; row j = 0 is the thin space {y = 0}.
/// Samples represent functions even in y; only y >= 0 is stored.
template <typename Scalar>
class Grid {
 public:
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  explicit Grid(const GridSpec<Scalar>& spec) : spec_(spec) {
    spec_.validate();
    hx_ = Scalar(2) * spec_.rx / Scalar(spec_.nx - 1);
    hy_ = spec_.ry / Scalar(spec_.ny - 1);
    const Scalar a = spec_.params.a;

    x_.resize(spec_.nx);
    for (int i = 0; i < spec_.nx; ++i) x_[i] = -spec_.rx + Scalar(i) * hx_;
    y_.resize(spec_.ny);
    for (int j = 0; j < spec_.ny; ++j) y_[j] = Scalar(j) * hy_;

    x_edge_weight_.resize(spec_.ny);
    x_edge_weight_[0] = edge_weight(Scalar(0), hy_ / Scalar(2), a);
    for (int j = 1; j < spec_.ny; ++j) x_edge_weight_[j] = a == Scalar(0) ? Scalar(1) : std::pow(y_[j], a);

    y_edge_weight_.resize(spec_.ny - 1);
    for (int j = 0; j + 1 < spec_.ny; ++j) y_edge_weight_[j] = edge_weight(y_[j], y_[j + 1], a);
  }

  const GridSpec<Scalar>& spec() const { return spec_; }
  const WeightParams<Scalar>& params() const { return spec_.params; }
  int nx() const { return spec_.nx; }
  int ny() const { return spec_.ny; }
  Scalar hx() const { return hx_; }
  Scalar hy() const { return hy_; }
  Scalar x(int i) const { return x_[i]; }
  Scalar y(int j) const { return y_[j]; }
  const Array& xs() const { return x_; }
  const Array& ys() const { return y_; }

  /// Weight on x-directed edges of row j (|y_j|^a, half-cell average on j = 0).
  Scalar x_edge_weight(int j) const { return x_edge_weight_[j]; }
  /// Weight on the y-directed edge between rows j and j + 1.
  Scalar y_edge_weight(int j) const { return y_edge_weight_[j]; }

  bool contains(Scalar px, Scalar py, Scalar slack = Scalar(0)) const {
    const Scalar ay = std::abs(py);
    return px >= -spec_.rx - slack && px <= spec_.rx + slack && ay <= spec_.ry + slack;
  }

  /// True when the closed ball B_r(cx, cy) (reflected into y >= 0) lies inside the grid.
  bool contains_ball(Scalar cx, Scalar cy, Scalar r) const {
    const Scalar tol = Scalar(1e-12) * (spec_.rx + spec_.ry);
    return cx - r >= -spec_.rx - tol && cx + r <= spec_.rx + tol && std::abs(cy) + r <= spec_.ry + tol;
  }

  /// Index of the node nearest to x on the thin row.
  int nearest_x_index(Scalar px) const {
    const int i = static_cast<int>(std::lround((px + spec_.rx) / hx_));
    return std::clamp(i, 0, spec_.nx - 1);
  }

 private:
  GridSpec<Scalar> spec_;
  Scalar hx_{};
  Scalar hy_{};
  Array x_;
  Array y_;
  Array x_edge_weight_;
  Array y_edge_weight_;
};

template <typename Scalar>
using GridPtr = std::shared_ptr<const Grid<Scalar>>;

template <typename Scalar>
GridPtr<Scalar> build_grid(const GridSpec<Scalar>& spec) {
  return std::make_shared<const Grid<Scalar>>(spec);
}

/// Node samples on a Grid, stored nx x ny (x index first).
template <typename Scalar>
class Field {
 public:
  using Values = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Field() = default;
  explicit Field(GridPtr<Scalar> grid) : grid_(std::move(grid)), values_(Values::Zero(grid_->nx(), grid_->ny())) {}
  Field(GridPtr<Scalar> grid, Values values) : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.rows() != grid_->nx() || values_.cols() != grid_->ny()) {
      throw DomainError("field values do not match grid dimensions");
    }
  }

  const Grid<Scalar>& grid() const { return *grid_; }
  const GridPtr<Scalar>& grid_ptr() const { return grid_; }
  const Values& values() const { return values_; }
  Values& values() { return values_; }

  Scalar operator()(int i, int j) const { return values_(i, j); }
  Scalar& operator()(int i, int j) { return values_(i, j); }

 private:
  GridPtr<Scalar> grid_;
  Values values_;
};

/// values[i, j] = f(x_i, y_j); rejects non-finite samples.
template <typename Scalar, typename F>
Field<Scalar> sample_field(F&& f, const GridPtr<Scalar>& grid) {
  Field<Scalar> field(grid);
  for (int j = 0; j < grid->ny(); ++j) {
    for (int i = 0; i < grid->nx(); ++i) {
      const Scalar v = f(grid->x(i), grid->y(j));
      if (!std::isfinite(v)) {
        std::ostringstream msg;
        msg << "non-finite sample at node (" << i << ", " << j << ") = (" << grid->x(i) << ", " << grid->y(j) << ")";
        throw DomainError(msg.str());
      }
      field(i, j) = v;
    }
  }
  return field;
}

/// Bilinear interpolation after reflecting y to |y|.
template <typename Scalar>
Scalar interpolate(const Field<Scalar>& field, Scalar px, Scalar py) {
  const Grid<Scalar>& g = field.grid();
  const Scalar slack = Scalar(1e-12) * (g.spec().rx + g.spec().ry);
  py = std::abs(py);
  if (!g.contains(px, py, slack)) {
    std::ostringstream msg;
    msg << "interpolation point (" << px << ", " << py << ") outside grid";
    throw DomainError(msg.str());
  }
  const Scalar fx = (px + g.spec().rx) / g.hx();
  const Scalar fy = py / g.hy();
  const int i = std::clamp(static_cast<int>(std::floor(fx)), 0, g.nx() - 2);
  const int j = std::clamp(static_cast<int>(std::floor(fy)), 0, g.ny() - 2);
  const Scalar tx = fx - Scalar(i);
  const Scalar ty = fy - Scalar(j);
  const auto& v = field.values();
  return (Scalar(1) - tx) * (Scalar(1) - ty) * v(i, j) + tx * (Scalar(1) - ty) * v(i + 1, j) +
         (Scalar(1) - tx) * ty * v(i, j + 1) + tx * ty * v(i + 1, j + 1);
}

/// Node gradient: centred differences inside, second-order one-sided at the
/// lateral and top boundaries, zero y-derivative on j = 0 by even reflection.
template <typename Scalar>
std::pair<Field<Scalar>, Field<Scalar>> gradient(const Field<Scalar>& field) {
  const Grid<Scalar>& g = field.grid();
  const int nx = g.nx();
  const int ny = g.ny();
  const auto& u = field.values();
  Field<Scalar> gx(field.grid_ptr());
  Field<Scalar> gy(field.grid_ptr());
  const Scalar ihx = Scalar(1) / g.hx();
  const Scalar ihy = Scalar(1) / g.hy();

  for (int j = 0; j < ny; ++j) {
    gx(0, j) = (Scalar(-3) * u(0, j) + Scalar(4) * u(1, j) - u(2, j)) * Scalar(0.5) * ihx;
    gx(nx - 1, j) = (Scalar(3) * u(nx - 1, j) - Scalar(4) * u(nx - 2, j) + u(nx - 3, j)) * Scalar(0.5) * ihx;
    for (int i = 1; i + 1 < nx; ++i) gx(i, j) = (u(i + 1, j) - u(i - 1, j)) * Scalar(0.5) * ihx;
  }
  for (int i = 0; i < nx; ++i) {
    gy(i, 0) = Scalar(0);
    for (int j = 1; j + 1 < ny; ++j) gy(i, j) = (u(i, j + 1) - u(i, j - 1)) * Scalar(0.5) * ihy;
    gy(i, ny - 1) = (Scalar(3) * u(i, ny - 1) - Scalar(4) * u(i, ny - 2) + u(i, ny - 3)) * Scalar(0.5) * ihy;
  }
  return {std::move(gx), std::move(gy)};
}

/// Interpolated gradient at an arbitrary point; the y-component flips sign below the thin space.
template <typename Scalar>
std::pair<Scalar, Scalar> interpolate_gradient(const Field<Scalar>& gx, const Field<Scalar>& gy, Scalar px, Scalar py) {
  const Scalar vx = interpolate(gx, px, py);
  const Scalar vy = interpolate(gy, px, py);
  return {vx, py < Scalar(0) ? -vy : vy};
}

/// CSV dump "x,y,value", rows ordered by x then y.
template <typename Scalar>
void write_field_csv(const Field<Scalar>& field, std::ostream& os) {
  const Grid<Scalar>& g = field.grid();
  os << "x,y,value\n";
  os << std::setprecision(17);
  for (int i = 0; i < g.nx(); ++i) {
    for (int j = 0; j < g.ny(); ++j) os << g.x(i) << ',' << g.y(j) << ',' << field(i, j) << '\n';
  }
}

template <typename Scalar>
void write_field_csv(const Field<Scalar>& field, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_field_csv(field, os);
}

/// Reads a field CSV written by write_field_csv onto the given grid. Node
/// coordinates must match the grid to within a tenth of a cell.
template <typename Scalar>
Field<Scalar> read_field_csv(std::istream& is, const GridPtr<Scalar>& grid) {
  Field<Scalar> field(grid);
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> seen =
      Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(grid->nx(), grid->ny(), false);
  std::string line;
  if (!std::getline(is, line) || line.rfind("x,y,value", 0) != 0) {
    throw DomainError("field CSV must start with the header x,y,value");
  }
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream row(line);
    Scalar x{}, y{}, v{};
    char c1{}, c2{};
    if (!(row >> x >> c1 >> y >> c2 >> v) || c1 != ',' || c2 != ',') {
      throw DomainError("malformed field CSV row at line " + std::to_string(lineno));
    }
    const Scalar fi = (x + grid->spec().rx) / grid->hx();
    const Scalar fj = y / grid->hy();
    const int i = static_cast<int>(std::lround(fi));
    const int j = static_cast<int>(std::lround(fj));
    if (i < 0 || i >= grid->nx() || j < 0 || j >= grid->ny() || std::abs(fi - i) > 0.1 || std::abs(fj - j) > 0.1) {
      throw DomainError("field CSV node off grid at line " + std::to_string(lineno));
    }
    field(i, j) = v;
    seen(i, j) = true;
  }
  if (!seen.all()) throw DomainError("field CSV does not cover every grid node");
  return field;
}

}  // namespace fracobs
