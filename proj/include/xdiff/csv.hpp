#pragma once

// CSV emission of energy time series and snapshots, snapshot parsing, and
// atomic file writes.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "xdiff/energetics.hpp"
#include "xdiff/errors.hpp"
#include "xdiff/integrate.hpp"

namespace xdiff {

inline constexpr std::string_view timeseries_header =
    "t,mass_a,mass_b,energy_h,energy_mb,diss_h,diss_mb,rel_entropy,supercrit_frac,prod_l32,linf_to_ss";

/// Shortest decimal representation that round-trips to the same double.
inline std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string timeseries_row(const EnergyReport& r) {
  std::string s;
  for (double v : {r.t, r.mass_a, r.mass_b, r.energy_h, r.energy_mb, r.diss_h, r.diss_mb, r.rel_entropy,
                   r.supercritical_fraction, r.prod_l32, r.linf_to_ss}) {
    if (!s.empty()) s += ',';
    s += format_number(v);
  }
  return s;
}

inline std::string timeseries_csv(const std::vector<EnergyReport>& rows) {
  std::string out(timeseries_header);
  out += '\n';
  for (const auto& r : rows) out += timeseries_row(r) + '\n';
  return out;
}

inline std::string snapshot_filename(double t) { return "snapshot_t" + format_number(t) + ".csv"; }

/// Snapshot CSV: one row per cell in storage order, then a trailing
/// "# grid dim=.. cells=.. lengths=.. t=.." line describing the geometry.
inline std::string snapshot_csv(const Snapshot& s) {
  const GridSpec& g = s.rho_a.grid();
  const bool markings = s.g_a.has_value() && s.g_b.has_value();
  std::string out = g.dim() == 1 ? "x" : "x,y";
  out += ",rho_a,rho_b";
  if (markings) out += ",g_a,g_b";
  out += '\n';
  for (std::size_t c = 0; c < s.rho_a.size(); ++c) {
    out += format_number(g.center(0, g.index_along(c, 0)));
    if (g.dim() == 2) out += ',' + format_number(g.center(1, g.index_along(c, 1)));
    out += ',' + format_number(s.rho_a[c]) + ',' + format_number(s.rho_b[c]);
    if (markings) out += ',' + format_number((*s.g_a)[c]) + ',' + format_number((*s.g_b)[c]);
    out += '\n';
  }
  auto join = [&](auto get) {
    std::string v;
    for (int a = 0; a < g.dim(); ++a) v += (a ? "x" : "") + get(a);
    return v;
  };
  out += "# grid dim=" + std::to_string(g.dim()) +
         " cells=" + join([&](int a) { return std::to_string(g.cells(a)); }) +
         " lengths=" + join([&](int a) { return format_number(g.length(a)); }) + " t=" + format_number(s.t) + '\n';
  return out;
}

/// Error while reading a snapshot; `line` is 1-based (0 when not tied to a line).
class SnapshotError : public Error {
 public:
  SnapshotError(const std::string& file, std::size_t line, const std::string& what)
      : Error(file + (line ? ":" + std::to_string(line) : std::string()) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

namespace detail {

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t p = s.find(sep, start);
    out.push_back(s.substr(start, p == std::string_view::npos ? std::string_view::npos : p - start));
    if (p == std::string_view::npos) break;
    start = p + 1;
  }
  return out;
}

inline bool parse_double(std::string_view s, double& v) {
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

}  // namespace detail

inline Snapshot parse_snapshot(std::istream& in, const std::string& name = "<snapshot>") {
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw SnapshotError(name, 1, "empty file");
  ++lineno;
  const auto header = detail::split(line, ',');
  std::size_t ncoord = 0;
  if (!header.empty() && header[0] == "x") ncoord = (header.size() > 1 && header[1] == "y") ? 2 : 1;
  const std::size_t nfields = header.size() - ncoord;
  if (ncoord == 0 || (nfields != 2 && nfields != 4) || header[ncoord] != "rho_a" || header[ncoord + 1] != "rho_b" ||
      (nfields == 4 && (header[ncoord + 2] != "g_a" || header[ncoord + 3] != "g_b")))
    throw SnapshotError(name, 1, "unexpected header '" + line + "'");

  std::vector<std::vector<double>> cols(nfields);
  std::string meta;
  std::size_t meta_line = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.rfind("# grid ", 0) == 0) {
        meta = line;
        meta_line = lineno;
      }
      continue;
    }
    if (!meta.empty()) throw SnapshotError(name, lineno, "data row after trailing metadata");
    const auto parts = detail::split(line, ',');
    if (parts.size() != header.size())
      throw SnapshotError(name, lineno, "expected " + std::to_string(header.size()) + " columns");
    for (std::size_t k = 0; k < nfields; ++k) {
      double v = 0.0;
      if (!detail::parse_double(parts[ncoord + k], v)) throw SnapshotError(name, lineno, "malformed number");
      cols[k].push_back(v);
    }
  }
  if (meta.empty()) throw SnapshotError(name, lineno + 1, "missing '# grid' metadata line (truncated file?)");

  int dim = 0;
  std::vector<std::size_t> cells;
  std::vector<double> lengths;
  double t = 0.0;
  bool have_t = false;
  for (auto tok : detail::split(std::string_view(meta).substr(7), ' ')) {
    const auto eq = tok.find('=');
    if (eq == std::string_view::npos) continue;
    const auto key = tok.substr(0, eq);
    const auto val = tok.substr(eq + 1);
    if (key == "dim") {
      dim = val == "2" ? 2 : (val == "1" ? 1 : 0);
    } else if (key == "cells") {
      for (auto p : detail::split(val, 'x')) {
        std::size_t n = 0;
        auto res = std::from_chars(p.data(), p.data() + p.size(), n);
        if (res.ec != std::errc()) throw SnapshotError(name, meta_line, "bad cells");
        cells.push_back(n);
      }
    } else if (key == "lengths") {
      for (auto p : detail::split(val, 'x')) {
        double v = 0.0;
        if (!detail::parse_double(p, v)) throw SnapshotError(name, meta_line, "bad lengths");
        lengths.push_back(v);
      }
    } else if (key == "t") {
      have_t = detail::parse_double(val, t);
    }
  }
  if (dim == 0 || cells.size() != static_cast<std::size_t>(dim) || lengths.size() != cells.size() || !have_t ||
      static_cast<std::size_t>(dim) != ncoord)
    throw SnapshotError(name, meta_line, "inconsistent grid metadata");
  GridSpec grid;
  try {
    grid = GridSpec(lengths, cells);
  } catch (const std::invalid_argument& e) {
    throw SnapshotError(name, meta_line, e.what());
  }
  if (cols[0].size() != grid.cell_count())
    throw SnapshotError(name, meta_line,
                        "expected " + std::to_string(grid.cell_count()) + " data rows, found " +
                            std::to_string(cols[0].size()));
  try {
    Snapshot s{t, Field(grid, cols[0]), Field(grid, cols[1]), std::nullopt, std::nullopt};
    if (nfields == 4) {
      s.g_a = Field(grid, cols[2]);
      s.g_b = Field(grid, cols[3]);
    }
    return s;
  } catch (const std::invalid_argument& e) {
    throw SnapshotError(name, 0, e.what());
  }
}

inline Snapshot read_snapshot(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SnapshotError(path, 0, "cannot open snapshot");
  return parse_snapshot(in, path);
}

/// Writes via a temporary file in the same directory and renames it into place.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  const std::filesystem::path tmp = path.parent_path() / ("." + path.filename().string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace xdiff
