#include "lossres/triangle.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string_view>

#include "lossres/error.hpp"

namespace lossres {

namespace {

std::string cell_name(CellIndex c) {
  return "(" + std::to_string(c.origin) + "," + std::to_string(c.dev) + ")";
}

std::string_view trim(std::string_view s) {
  constexpr std::string_view ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_real(std::string_view token, std::size_t line_no) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (token.empty() || ec != std::errc() || ptr != token.data() + token.size()) {
    throw Error(Errc::ParseError,
                "line " + std::to_string(line_no) + ": not a number: '" + std::string(token) + "'");
  }
  return value;
}

int parse_index(std::string_view token, std::size_t line_no) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (token.empty() || ec != std::errc() || ptr != token.data() + token.size() || value < 0) {
    throw Error(Errc::ParseError,
                "line " + std::to_string(line_no) + ": bad index '" + std::string(token) + "'");
  }
  return value;
}

bool next_line(std::istream& in, std::string& line, std::size_t& line_no) {
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) return true;
  }
  return false;
}

// Shared tail of both readers: turns a sparse cell map into a square triangle.
Triangle assemble(const std::map<CellIndex, double>& cells) {
  if (cells.empty()) throw Error(Errc::IncompleteTriangle, "no cells");
  int horizon = 0;
  for (const auto& [c, v] : cells) horizon = std::max({horizon, c.origin, c.dev});
  std::vector<double> values;
  values.reserve(observed_cell_count(horizon));
  for (int i = 0; i <= horizon; ++i) {
    for (int j = 0; j <= horizon; ++j) {
      CellIndex c{i, j};
      auto it = cells.find(c);
      if (Triangle::is_observed(c, horizon)) {
        if (it == cells.end()) throw Error(Errc::IncompleteTriangle, "missing cell " + cell_name(c));
        values.push_back(it->second);
      } else if (it != cells.end()) {
        throw Error(Errc::FutureCellPresent, "value given for future cell " + cell_name(c));
      }
    }
  }
  return Triangle::from_observed(horizon, std::move(values));
}

Triangle parse_long(std::istream& in, std::size_t line_no) {
  std::map<CellIndex, double> cells;
  std::string line;
  while (next_line(in, line, line_no)) {
    auto f = split_fields(line);
    if (f.size() != 3) {
      throw Error(Errc::ParseError, "line " + std::to_string(line_no) + ": expected 3 fields");
    }
    CellIndex c{parse_index(f[0], line_no), parse_index(f[1], line_no)};
    double v = parse_real(f[2], line_no);
    if (!cells.emplace(c, v).second) {
      throw Error(Errc::DuplicateCell, "cell " + cell_name(c) + " repeated at line " + std::to_string(line_no));
    }
  }
  return assemble(cells);
}

Triangle parse_wide(std::istream& in, std::size_t line_no, std::size_t columns) {
  std::map<CellIndex, double> cells;
  std::string line;
  while (next_line(in, line, line_no)) {
    auto f = split_fields(line);
    if (f.size() > columns + 1) {
      throw Error(Errc::ParseError, "line " + std::to_string(line_no) + ": too many fields");
    }
    int origin = parse_index(f[0], line_no);
    for (std::size_t k = 1; k < f.size(); ++k) {
      if (f[k].empty()) continue;
      CellIndex c{origin, static_cast<int>(k - 1)};
      if (!cells.emplace(c, parse_real(f[k], line_no)).second) {
        throw Error(Errc::DuplicateCell, "cell " + cell_name(c) + " repeated at line " + std::to_string(line_no));
      }
    }
  }
  // A wide file fixes n through its header even if trailing rows are absent.
  if (columns > 0) {
    int horizon = static_cast<int>(columns) - 1;
    for (int i = 0; i <= horizon; ++i) {
      CellIndex c{i, horizon - i};
      if (!cells.contains(c)) throw Error(Errc::IncompleteTriangle, "missing cell " + cell_name(c));
    }
  }
  return assemble(cells);
}

}  // namespace

Triangle Triangle::from_rows(const std::vector<std::vector<double>>& rows, TriangleKind kind) {
  if (rows.empty()) throw Error(Errc::IncompleteTriangle, "no rows");
  const int horizon = static_cast<int>(rows.size()) - 1;
  std::vector<double> values;
  values.reserve(observed_cell_count(horizon));
  for (int i = 0; i <= horizon; ++i) {
    const auto expected = static_cast<std::size_t>(horizon + 1 - i);
    if (rows[i].size() < expected) {
      throw Error(Errc::IncompleteTriangle, "row " + std::to_string(i) + " has " +
                                                std::to_string(rows[i].size()) + " values, expected " +
                                                std::to_string(expected));
    }
    if (rows[i].size() > expected) {
      throw Error(Errc::FutureCellPresent, "row " + std::to_string(i) + " extends past the diagonal");
    }
    values.insert(values.end(), rows[i].begin(), rows[i].end());
  }
  return Triangle(horizon, std::move(values), kind);
}

Triangle Triangle::from_observed(int horizon, std::vector<double> observed, TriangleKind kind) {
  if (horizon < 0) throw Error(Errc::InvalidArgument, "negative horizon");
  if (observed.size() != observed_cell_count(horizon)) {
    throw Error(Errc::IncompleteTriangle, "expected " + std::to_string(observed_cell_count(horizon)) +
                                              " observed values, got " + std::to_string(observed.size()));
  }
  return Triangle(horizon, std::move(observed), kind);
}

std::size_t Triangle::offset(CellIndex c) const noexcept {
  // rows 0..i-1 hold (n+1) + n + ... + (n+2-i) cells
  const auto i = static_cast<std::size_t>(c.origin);
  const auto side = static_cast<std::size_t>(horizon_) + 1;
  return i * side - i * (i - 1) / 2 + static_cast<std::size_t>(c.dev);
}

double Triangle::at(CellIndex c) const {
  if (c.origin < 0 || c.dev < 0 || c.origin > horizon_ || c.dev > horizon_ || !is_observed(c)) {
    throw Error(Errc::DomainError, "cell " + cell_name(c) + " is not observed");
  }
  return values_[offset(c)];
}

std::vector<CellIndex> Triangle::observed_cells() const {
  std::vector<CellIndex> out;
  out.reserve(values_.size());
  for (int i = 0; i <= horizon_; ++i)
    for (int j = 0; i + j <= horizon_; ++j) out.push_back({i, j});
  return out;
}

double Triangle::row_sum(int origin) const {
  double s = 0.0;
  for (int j = 0; origin + j <= horizon_; ++j) s += at({origin, j});
  return s;
}

double Triangle::column_sum(int dev) const {
  double s = 0.0;
  for (int i = 0; i + dev <= horizon_; ++i) s += at({i, dev});
  return s;
}

Triangle Triangle::with_values(std::vector<double> observed) const {
  return from_observed(horizon_, std::move(observed), kind_);
}

Triangle Triangle::scaled(double factor) const {
  auto v = values_;
  for (auto& x : v) x *= factor;
  return Triangle(horizon_, std::move(v), kind_);
}

std::vector<CellIndex> future_cells(int horizon) {
  std::vector<CellIndex> out;
  out.reserve(static_cast<std::size_t>(horizon) * static_cast<std::size_t>(horizon + 1) / 2);
  for (int i = 0; i <= horizon; ++i)
    for (int j = horizon - i + 1; j <= horizon; ++j) out.push_back({i, j});
  return out;
}

Triangle to_cumulative(const Triangle& t) {
  if (t.kind() != TriangleKind::incremental) throw Error(Errc::KindMismatch, "triangle is already cumulative");
  std::vector<double> v(t.observed_values().begin(), t.observed_values().end());
  const int n = t.horizon();
  for (int i = 0; i <= n; ++i) {
    const auto row = t.offset({i, 0});
    for (int j = 1; i + j <= n; ++j) v[row + j] += v[row + j - 1];
  }
  return Triangle::from_observed(n, std::move(v), TriangleKind::cumulative);
}

Triangle to_incremental(const Triangle& t) {
  if (t.kind() != TriangleKind::cumulative) throw Error(Errc::KindMismatch, "triangle is already incremental");
  std::vector<double> v(t.observed_values().begin(), t.observed_values().end());
  const int n = t.horizon();
  for (int i = 0; i <= n; ++i) {
    const auto row = t.offset({i, 0});
    for (int j = n - i; j >= 1; --j) v[row + j] -= v[row + j - 1];
  }
  return Triangle::from_observed(n, std::move(v), TriangleKind::incremental);
}

Triangle parse_triangle(std::istream& in, CsvFormat format) {
  std::string header;
  std::size_t line_no = 0;
  if (!next_line(in, header, line_no)) throw Error(Errc::ParseError, "empty input");
  auto f = split_fields(header);
  if (format == CsvFormat::long_csv) {
    if (f.size() != 3 || f[0] != "origin" || f[1] != "dev" || f[2] != "value") {
      throw Error(Errc::ParseError, "long CSV header must be 'origin,dev,value'");
    }
    return parse_long(in, line_no);
  }
  if (f.size() < 2 || f[0] != "origin") throw Error(Errc::ParseError, "wide CSV header must be 'origin,d0,...'");
  for (std::size_t k = 1; k < f.size(); ++k) {
    if (f[k] != "d" + std::to_string(k - 1)) {
      throw Error(Errc::ParseError, "wide CSV header column " + std::to_string(k) + " must be 'd" +
                                        std::to_string(k - 1) + "'");
    }
  }
  return parse_wide(in, line_no, f.size() - 1);
}

Triangle parse_triangle(std::istream& in) {
  std::string first;
  std::size_t line_no = 0;
  if (!next_line(in, first, line_no)) throw Error(Errc::ParseError, "empty input");
  auto f = split_fields(first);
  std::stringstream rest;
  rest << first << '\n' << in.rdbuf();
  const bool is_long = f.size() == 3 && f[1] == "dev";
  return parse_triangle(rest, is_long ? CsvFormat::long_csv : CsvFormat::wide_csv);
}

Triangle read_triangle_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open '" + path + "'");
  return parse_triangle(in);
}

void write_long_csv(std::ostream& out, const Triangle& t) {
  out << "origin,dev,value\n";
  char buf[64];
  for (const auto& c : t.observed_cells()) {
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, t.at(c));
    out << c.origin << ',' << c.dev << ',' << std::string_view(buf, static_cast<std::size_t>(end - buf)) << '\n';
  }
}

}  // namespace lossres
