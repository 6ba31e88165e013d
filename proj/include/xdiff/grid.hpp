#pragma once

// Cell-centered box grids in 1D/2D and two-point finite-volume operators with
// zero-flux (homogeneous Neumann) boundaries.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

namespace xdiff {

/// Geometry of the box [-L_0/2, L_0/2] x [-L_1/2, L_1/2] split into
/// `cells(a)` equal cells per axis. Cell data is stored row-major, axis 0
/// slowest.
class GridSpec {
 public:
  GridSpec() = default;

  GridSpec(std::vector<double> lengths, std::vector<std::size_t> cells) {
    if (lengths.empty() || lengths.size() > 2 || lengths.size() != cells.size())
      throw std::invalid_argument("GridSpec: need 1 or 2 axes with matching lengths/cells");
    dim_ = static_cast<int>(lengths.size());
    for (int a = 0; a < dim_; ++a) {
      if (!(lengths[a] > 0.0) || !std::isfinite(lengths[a]))
        throw std::invalid_argument("GridSpec: lengths must be positive");
      if (cells[a] < 3)
        throw std::invalid_argument("GridSpec: at least 3 cells per axis required");
      lengths_[a] = lengths[a];
      cells_[a] = cells[a];
      spacing_[a] = lengths[a] / static_cast<double>(cells[a]);
    }
  }

  static GridSpec line(double length, std::size_t cells) { return GridSpec({length}, {cells}); }
  static GridSpec box(double lx, double ly, std::size_t nx, std::size_t ny) {
    return GridSpec({lx, ly}, {nx, ny});
  }

  int dim() const noexcept { return dim_; }
  double length(int axis) const { return lengths_.at(check(axis)); }
  std::size_t cells(int axis) const { return cells_.at(check(axis)); }
  double spacing(int axis) const { return spacing_.at(check(axis)); }
  double min_spacing() const noexcept {
    return dim_ == 1 ? spacing_[0] : std::min(spacing_[0], spacing_[1]);
  }

  std::size_t cell_count() const noexcept { return dim_ == 1 ? cells_[0] : cells_[0] * cells_[1]; }
  double cell_volume() const noexcept { return dim_ == 1 ? spacing_[0] : spacing_[0] * spacing_[1]; }
  double volume() const noexcept { return dim_ == 1 ? lengths_[0] : lengths_[0] * lengths_[1]; }

  /// Distance in the flat index between neighbours along `axis`.
  std::size_t stride(int axis) const {
    check(axis);
    return (dim_ == 2 && axis == 0) ? cells_[1] : 1;
  }

  /// Per-axis index of a flat cell index.
  std::size_t index_along(std::size_t cell, int axis) const {
    check(axis);
    if (dim_ == 1) return cell;
    return axis == 0 ? cell / cells_[1] : cell % cells_[1];
  }

  /// Cell-center coordinate along `axis` for per-axis index `i`.
  double center(int axis, std::size_t i) const {
    check(axis);
    return -0.5 * lengths_[axis] + (static_cast<double>(i) + 0.5) * spacing_[axis];
  }

  /// Number of interior faces normal to `axis`.
  std::size_t face_count(int axis) const {
    check(axis);
    if (dim_ == 1) return cells_[0] - 1;
    return axis == 0 ? (cells_[0] - 1) * cells_[1] : cells_[0] * (cells_[1] - 1);
  }

  friend bool operator==(const GridSpec& a, const GridSpec& b) noexcept {
    if (a.dim_ != b.dim_) return false;
    for (int i = 0; i < a.dim_; ++i)
      if (a.lengths_[i] != b.lengths_[i] || a.cells_[i] != b.cells_[i]) return false;
    return true;
  }

 private:
  int check(int axis) const {
    if (axis < 0 || axis >= dim_)
      throw std::out_of_range("GridSpec: axis " + std::to_string(axis) + " out of range");
    return axis;
  }

  int dim_ = 0;
  std::array<double, 2> lengths_{};
  std::array<std::size_t, 2> cells_{};
  std::array<double, 2> spacing_{};
};

/// Visits every interior face normal to `axis` in face-index order, passing
/// (face, left cell, right cell).
template <class Fn>
void for_each_face(const GridSpec& grid, int axis, Fn&& fn) {
  const std::size_t stride = grid.stride(axis);
  if (grid.dim() == 1) {
    for (std::size_t f = 0; f + 1 < grid.cells(0); ++f) fn(f, f, f + 1);
    return;
  }
  const std::size_t n0 = grid.cells(0), n1 = grid.cells(1);
  std::size_t f = 0;
  if (axis == 0) {
    for (std::size_t i = 0; i + 1 < n0; ++i)
      for (std::size_t j = 0; j < n1; ++j, ++f) fn(f, i * n1 + j, i * n1 + j + stride);
  } else {
    for (std::size_t i = 0; i < n0; ++i)
      for (std::size_t j = 0; j + 1 < n1; ++j, ++f) fn(f, i * n1 + j, i * n1 + j + stride);
  }
}

/// One value per cell.
class Field {
 public:
  Field() = default;

  Field(GridSpec grid, double value) : grid_(std::move(grid)), values_(grid_.cell_count(), value) {
    if (!std::isfinite(value)) throw std::invalid_argument("Field: non-finite value");
  }

  Field(GridSpec grid, std::vector<double> values) : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != grid_.cell_count())
      throw std::invalid_argument("Field: value count does not match grid");
    for (double v : values_)
      if (!std::isfinite(v)) throw std::invalid_argument("Field: non-finite value");
  }

  /// Samples f(x) (1D) or f(x, y) (2D) at cell centers.
  template <class Fn>
  static Field sample(const GridSpec& grid, Fn&& f) {
    std::vector<double> v(grid.cell_count());
    if constexpr (std::is_invocable_v<Fn&, double>) {
      if (grid.dim() != 1) throw std::invalid_argument("Field::sample: 1D function on a 2D grid");
      for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(grid.center(0, i));
    } else {
      if (grid.dim() != 2) throw std::invalid_argument("Field::sample: 2D function on a 1D grid");
      for (std::size_t i = 0; i < grid.cells(0); ++i)
        for (std::size_t j = 0; j < grid.cells(1); ++j)
          v[i * grid.cells(1) + j] = f(grid.center(0, i), grid.center(1, j));
    }
    return Field(grid, std::move(v));
  }

  /// Wraps values without the finiteness scan. Callers that can produce
  /// NaN/Inf (the steppers) check explicitly and report a SolverError.
  static Field unchecked(GridSpec grid, std::vector<double> values) {
    Field f;
    f.grid_ = std::move(grid);
    f.values_ = std::move(values);
    return f;
  }

  const GridSpec& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  double max() const { return *std::max_element(values_.begin(), values_.end()); }
  double min() const { return *std::min_element(values_.begin(), values_.end()); }

  friend bool operator==(const Field& a, const Field& b) noexcept {
    return a.grid_ == b.grid_ && a.values_ == b.values_;
  }

 private:
  GridSpec grid_;
  std::vector<double> values_;
};

/// Values on interior faces, one array per axis. Boundary faces are not
/// stored and are identically zero.
class FaceField {
 public:
  FaceField() = default;
  explicit FaceField(GridSpec grid) : grid_(std::move(grid)) {
    for (int a = 0; a < grid_.dim(); ++a) faces_[a].assign(grid_.face_count(a), 0.0);
  }

  const GridSpec& grid() const noexcept { return grid_; }
  std::span<const double> axis(int a) const { return faces_.at(check(a)); }
  std::span<double> axis(int a) { return faces_.at(check(a)); }

 private:
  int check(int a) const {
    if (a < 0 || a >= grid_.dim()) throw std::out_of_range("FaceField: axis out of range");
    return a;
  }
  GridSpec grid_;
  std::array<std::vector<double>, 2> faces_;
};

using FaceFluxes = FaceField;

inline void require_same_grid(const Field& a, const Field& b, const char* who) {
  if (!(a.grid() == b.grid())) throw std::invalid_argument(std::string(who) + ": grid mismatch");
}

/// (u_right - u_left) / h on every interior face normal to `axis`.
inline std::vector<double> face_gradient(const Field& u, int axis) {
  const GridSpec& g = u.grid();
  const double h = g.spacing(axis);
  std::vector<double> out(g.face_count(axis));
  for_each_face(g, axis, [&](std::size_t f, std::size_t l, std::size_t r) { out[f] = (u[r] - u[l]) / h; });
  return out;
}

/// Face gradients along every axis.
inline FaceField gradient(const Field& u) {
  FaceField out(u.grid());
  for (int a = 0; a < u.grid().dim(); ++a) {
    auto g = face_gradient(u, a);
    std::copy(g.begin(), g.end(), out.axis(a).begin());
  }
  return out;
}

/// Cell value = sum over axes of (F_right - F_left) / h, zero boundary faces.
inline Field divergence(const FaceFluxes& flux) {
  const GridSpec& g = flux.grid();
  std::vector<double> out(g.cell_count(), 0.0);
  for (int a = 0; a < g.dim(); ++a) {
    const double h = g.spacing(a);
    const std::size_t n = g.cells(a);
    const auto faces = flux.axis(a);
    // Index of the face on the right of `cell`; only valid when the cell is
    // not the last one along the axis.
    auto right_face = [&](std::size_t cell) -> std::size_t {
      if (g.dim() == 2 && a == 1) return (cell / g.cells(1)) * (g.cells(1) - 1) + cell % g.cells(1);
      return cell;
    };
    for (std::size_t c = 0; c < out.size(); ++c) {
      const std::size_t i = g.index_along(c, a);
      const double fr = (i + 1 < n) ? faces[right_face(c)] : 0.0;
      const double fl = (i > 0) ? faces[right_face(c - g.stride(a))] : 0.0;
      out[c] += (fr - fl) / h;
    }
  }
  return Field::unchecked(g, std::move(out));
}

inline Field laplacian_neumann(const Field& u) { return divergence(gradient(u)); }

/// Midpoint quadrature: (sum of cell values in index order) x cell volume.
inline double integrate_cells(std::span<const double> values, const GridSpec& grid) {
  double s = 0.0;
  for (double v : values) s += v;
  return s * grid.cell_volume();
}

inline double integrate_cells(const Field& u) { return integrate_cells(u.values(), u.grid()); }

/// Sum over interior faces of `values` x cell volume, all axes, fixed order.
inline double integrate_faces(const FaceField& values) {
  double s = 0.0;
  for (int a = 0; a < values.grid().dim(); ++a)
    for (double v : values.axis(a)) s += v;
  return s * values.grid().cell_volume();
}

}  // namespace xdiff
