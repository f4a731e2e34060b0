#pragma once

#include <compare>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace lossres {

/// (origin year i, development year j) with 0 <= i, j <= n.
struct CellIndex {
  int origin = 0;
  int dev = 0;

  friend constexpr auto operator<=>(const CellIndex&, const CellIndex&) = default;
};

enum class TriangleKind { incremental, cumulative };

enum class CsvFormat { long_csv, wide_csv };

/// Square run-off triangle. Only the cells with origin + dev <= n carry a
/// value; they are stored packed row by row (origin-major, then dev).
///
/// Values are immutable once constructed, so a Triangle can be shared freely
/// between threads.
class Triangle {
 public:
  /// `rows[i]` must hold exactly n + 1 - i values, where n + 1 = rows.size().
  static Triangle from_rows(const std::vector<std::vector<double>>& rows,
                            TriangleKind kind = TriangleKind::incremental);

  /// `observed` is in `observed_cells()` order.
  static Triangle from_observed(int horizon, std::vector<double> observed,
                                TriangleKind kind = TriangleKind::incremental);

  /// n, the largest origin / development index.
  int horizon() const noexcept { return horizon_; }
  int side() const noexcept { return horizon_ + 1; }
  TriangleKind kind() const noexcept { return kind_; }

  static constexpr bool is_observed(CellIndex c, int horizon) noexcept {
    return c.origin + c.dev <= horizon;
  }
  bool is_observed(CellIndex c) const noexcept { return is_observed(c, horizon_); }

  /// Throws DomainError for a future or out-of-range cell.
  double at(CellIndex c) const;
  double operator()(int origin, int dev) const { return at({origin, dev}); }

  std::size_t observed_count() const noexcept { return values_.size(); }
  std::span<const double> observed_values() const noexcept { return values_; }

  /// Position of an observed cell in the packed storage.
  std::size_t offset(CellIndex c) const noexcept;

  std::vector<CellIndex> observed_cells() const;

  double row_sum(int origin) const;
  double column_sum(int dev) const;

  /// Same shape and kind, new observed values in `observed_cells()` order.
  Triangle with_values(std::vector<double> observed) const;

  Triangle scaled(double factor) const;

  friend bool operator==(const Triangle&, const Triangle&) = default;

 private:
  Triangle(int horizon, std::vector<double> values, TriangleKind kind)
      : horizon_(horizon), values_(std::move(values)), kind_(kind) {}

  int horizon_ = 0;
  std::vector<double> values_;
  TriangleKind kind_ = TriangleKind::incremental;
};

/// Number of cells with origin + dev <= n.
constexpr std::size_t observed_cell_count(int horizon) noexcept {
  auto side = static_cast<std::size_t>(horizon) + 1;
  return side * (side + 1) / 2;
}

/// Cells with origin + dev > n, ordered by origin then dev.
std::vector<CellIndex> future_cells(int horizon);
inline std::vector<CellIndex> future_cells(const Triangle& t) { return future_cells(t.horizon()); }

Triangle to_cumulative(const Triangle& t);
Triangle to_incremental(const Triangle& t);

/// Reads an incremental triangle. Throws ParseError, DuplicateCell,
/// IncompleteTriangle or FutureCellPresent.
Triangle parse_triangle(std::istream& in, CsvFormat format);

/// Picks the format from the header line (`origin,dev,value` or `origin,d0,...`).
Triangle parse_triangle(std::istream& in);

/// Reads a triangle file; IoError names the path when it cannot be opened.
Triangle read_triangle_file(const std::string& path);

/// Canonical long CSV: header `origin,dev,value`, one row per observed cell in
/// origin-then-dev order, shortest round-trip decimal representation.
void write_long_csv(std::ostream& out, const Triangle& t);

}  // namespace lossres
