#include "sbm/io.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace sbm {

namespace {

constexpr const char* kMagic = "SBMF1";
constexpr const char* kOrder = "row-major, last axis fastest";

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T>
void append_le(std::string& out, const T* data, std::size_t n) {
  const std::size_t start = out.size();
  out.resize(start + n * sizeof(T));
  std::memcpy(out.data() + start, data, n * sizeof(T));
  if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
    for (std::size_t i = 0; i < n; ++i) {
      char* p = out.data() + start + i * sizeof(T);
      std::reverse(p, p + sizeof(T));
    }
  }
}

template <typename T>
void read_le(const std::string& in, std::size_t offset, T* data, std::size_t n) {
  std::memcpy(data, in.data() + offset, n * sizeof(T));
  if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
    char* bytes = reinterpret_cast<char*>(data);
    for (std::size_t i = 0; i < n; ++i) std::reverse(bytes + i * sizeof(T), bytes + (i + 1) * sizeof(T));
  }
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_bytes(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.close();
  if (!out) throw IoError("write to '" + path + "' failed");
}

std::vector<double> parse_numbers(const std::string& text, std::size_t offset,
                                  const std::string& key) {
  std::istringstream ss(text);
  std::vector<double> v;
  std::string tok;
  while (ss >> tok) {
    char* end = nullptr;
    const double d = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0')
      throw IoError("header line at byte " + std::to_string(offset) + ": bad number '" + tok +
                    "' in " + key);
    v.push_back(d);
  }
  return v;
}

ArrayFile parse_header(const std::string& bytes, std::size_t& payload_offset) {
  std::size_t pos = 0;
  auto next_line = [&](std::size_t& line_start) -> std::string {
    line_start = pos;
    const std::size_t nl = bytes.find('\n', pos);
    if (nl == std::string::npos)
      throw IoError("header line at byte " + std::to_string(pos) + ": missing end_header");
    std::string line = bytes.substr(pos, nl - pos);
    pos = nl + 1;
    return line;
  };
  std::size_t at = 0;
  if (bytes.compare(0, 6, std::string(kMagic) + "\n") != 0)
    throw IoError("byte 0: bad magic, expected SBMF1");
  next_line(at);

  std::vector<double> dims, spacing, origin;
  std::string coords, kind, order, endian;
  for (;;) {
    const std::string line = next_line(at);
    if (line == "end_header") break;
    const std::size_t sp = line.find(' ');
    const std::string key = line.substr(0, sp);
    const std::string value = sp == std::string::npos ? "" : line.substr(sp + 1);
    if (key == "dims") dims = parse_numbers(value, at, key);
    else if (key == "spacing") spacing = parse_numbers(value, at, key);
    else if (key == "origin") origin = parse_numbers(value, at, key);
    else if (key == "coord_system") coords = value;
    else if (key == "value_kind") kind = value;
    else if (key == "order") order = value;
    else if (key == "endianness") endian = value;
    else throw IoError("header line at byte " + std::to_string(at) + ": unknown key '" + key + "'");
  }
  payload_offset = pos;
  const std::string where = "header ending at byte " + std::to_string(pos) + ": ";
  if (dims.empty() || dims.size() > 3 || spacing.size() != dims.size() ||
      origin.size() != dims.size())
    throw IoError(where + "dims, spacing and origin need 1 to 3 matching entries");
  if (order != kOrder) throw IoError(where + "order must be '" + std::string(kOrder) + "'");
  if (endian != "little") throw IoError(where + "endianness must be little");
  ArrayFile f;
  try {
    f.kind = value_kind_from_string(kind);
    std::vector<int> idims;
    for (double d : dims) {
      if (d < 1 || d != static_cast<int>(d)) throw InvalidArgument("dims must be positive integers");
      idims.push_back(static_cast<int>(d));
    }
    f.grid = Grid(idims, spacing, origin, coord_system_from_string(coords));
  } catch (const InvalidArgument& ex) {
    throw IoError(where + ex.what());
  }
  const std::size_t expected = static_cast<std::size_t>(f.grid.size()) * value_size(f.kind);
  const std::size_t actual = bytes.size() - payload_offset;
  if (actual != expected)
    throw IoError("payload at byte " + std::to_string(payload_offset) + ": expected " +
                  std::to_string(expected) + " bytes, got " + std::to_string(actual));
  return f;
}

std::vector<std::string> axis_names(const Grid& g) {
  if (g.axisymmetric()) return {"r", "z"};
  const std::vector<std::string> all = {"x", "y", "z"};
  return {all.begin(), all.begin() + g.ndim()};
}

void require_finite(const Eigen::ArrayXd& v) {
  require(v.isFinite().all(), "cannot export a field with non-finite values");
}

std::string csv_points(const Grid& g, const std::vector<std::string>& names,
                       const std::vector<const Eigen::ArrayXd*>& columns) {
  std::string out;
  for (const auto& a : axis_names(g)) out += a + ",";
  for (std::size_t c = 0; c < names.size(); ++c) out += names[c] + (c + 1 < names.size() ? "," : "\n");
  for (Index p = 0; p < g.size(); ++p) {
    const auto x = g.position(p);
    for (int a = 0; a < g.ndim(); ++a) out += g17(x[a]) + ",";
    for (std::size_t c = 0; c < columns.size(); ++c)
      out += g17((*columns[c])[p]) + (c + 1 < columns.size() ? "," : "\n");
  }
  return out;
}

std::string vtk_points(const Grid& g, const std::vector<std::string>& names,
                       const std::vector<const Eigen::ArrayXd*>& columns) {
  std::ostringstream os;
  int n[3] = {1, 1, 1};
  double h[3] = {1.0, 1.0, 1.0}, o[3] = {0.0, 0.0, 0.0};
  for (int a = 0; a < g.ndim(); ++a) {
    n[a] = g.dim(a);
    h[a] = g.spacing(a);
    o[a] = g.origin(a);
  }
  os << "# vtk DataFile Version 3.0\nsbm field (" << to_string(g.coords()) << ")\nASCII\n"
     << "DATASET STRUCTURED_POINTS\n"
     << "DIMENSIONS " << n[0] << " " << n[1] << " " << n[2] << "\n"
     << "ORIGIN " << g17(o[0]) << " " << g17(o[1]) << " " << g17(o[2]) << "\n"
     << "SPACING " << g17(h[0]) << " " << g17(h[1]) << " " << g17(h[2]) << "\n"
     << "POINT_DATA " << g.size() << "\n";
  for (std::size_t c = 0; c < columns.size(); ++c) {
    os << "SCALARS " << names[c] << " double 1\nLOOKUP_TABLE default\n";
    for (int k = 0; k < n[2]; ++k)
      for (int j = 0; j < n[1]; ++j)
        for (int i = 0; i < n[0]; ++i) os << g17((*columns[c])[g.ravel({i, j, k})]) << "\n";
  }
  return os.str();
}

}  // namespace

const char* to_string(ValueKind k) {
  switch (k) {
    case ValueKind::real64: return "real64";
    case ValueKind::complex128: return "complex128";
    case ValueKind::label8: return "label8";
  }
  return "real64";
}

ValueKind value_kind_from_string(const std::string& s) {
  if (s == "real64") return ValueKind::real64;
  if (s == "complex128") return ValueKind::complex128;
  if (s == "label8") return ValueKind::label8;
  throw InvalidArgument("unknown value_kind '" + s + "'");
}

std::size_t value_size(ValueKind k) {
  return k == ValueKind::real64 ? 8 : k == ValueKind::complex128 ? 16 : 1;
}

ArrayFile ArrayFile::from(const ScalarField& f) {
  ArrayFile a;
  a.grid = f.grid();
  a.real = f.values();
  return a;
}

ArrayFile ArrayFile::from(const ComplexScalarField& f) {
  ArrayFile a;
  a.grid = f.grid();
  a.kind = ValueKind::complex128;
  a.real = f.values().real();
  a.imag = f.values().imag();
  return a;
}

ArrayFile ArrayFile::from_labels(const Grid& grid, std::vector<std::uint8_t> labels) {
  require(static_cast<Index>(labels.size()) == grid.size(), "label count must match grid size");
  ArrayFile a;
  a.grid = grid;
  a.kind = ValueKind::label8;
  a.labels = std::move(labels);
  return a;
}

ScalarField ArrayFile::real_field() const {
  if (kind == ValueKind::label8) {
    ScalarField f(grid);
    for (Index p = 0; p < grid.size(); ++p) f[p] = labels[p];
    return f;
  }
  return ScalarField(grid, real);
}

ComplexScalarField ArrayFile::complex_field() const {
  ComplexScalarField f(grid);
  f.values().real() = real;
  if (kind == ValueKind::complex128) f.values().imag() = imag;
  return f;
}

void write_sbmf(const std::string& path, const ArrayFile& f) {
  const std::size_t n = static_cast<std::size_t>(f.grid.size());
  const bool sizes_ok = f.kind == ValueKind::label8
                            ? f.labels.size() == n
                            : static_cast<std::size_t>(f.real.size()) == n &&
                                  (f.kind != ValueKind::complex128 ||
                                   static_cast<std::size_t>(f.imag.size()) == n);
  require(sizes_ok, "array file payload does not match its grid");
  std::string out = std::string(kMagic) + "\n";
  std::string dims = "dims", spacing = "spacing", origin = "origin";
  for (int a = 0; a < f.grid.ndim(); ++a) {
    dims += " " + std::to_string(f.grid.dim(a));
    spacing += " " + g17(f.grid.spacing(a));
    origin += " " + g17(f.grid.origin(a));
  }
  out += dims + "\n" + spacing + "\n" + origin + "\n";
  out += "coord_system " + to_string(f.grid.coords()) + "\n";
  out += std::string("value_kind ") + to_string(f.kind) + "\n";
  out += std::string("order ") + kOrder + "\nendianness little\nend_header\n";
  switch (f.kind) {
    case ValueKind::real64: append_le(out, f.real.data(), n); break;
    case ValueKind::complex128:
      append_le(out, f.real.data(), n);
      append_le(out, f.imag.data(), n);
      break;
    case ValueKind::label8: append_le(out, f.labels.data(), n); break;
  }
  write_bytes(path, out);
}

ArrayFile read_sbmf_header(const std::string& path, std::size_t* payload_offset) {
  const std::string bytes = slurp(path);
  std::size_t off = 0;
  ArrayFile f = parse_header(bytes, off);
  if (payload_offset) *payload_offset = off;
  return f;
}

ArrayFile read_sbmf(const std::string& path) {
  const std::string bytes = slurp(path);
  std::size_t off = 0;
  ArrayFile f = parse_header(bytes, off);
  const std::size_t n = static_cast<std::size_t>(f.grid.size());
  switch (f.kind) {
    case ValueKind::real64:
      f.real.resize(static_cast<Index>(n));
      read_le(bytes, off, f.real.data(), n);
      break;
    case ValueKind::complex128:
      f.real.resize(static_cast<Index>(n));
      f.imag.resize(static_cast<Index>(n));
      read_le(bytes, off, f.real.data(), n);
      read_le(bytes, off + 8 * n, f.imag.data(), n);
      break;
    case ValueKind::label8:
      f.labels.resize(n);
      read_le(bytes, off, f.labels.data(), n);
      break;
  }
  return f;
}

ScalarField load_voxels(const std::string& path) {
  const ArrayFile f = read_sbmf(path);
  if (f.kind != ValueKind::label8)
    throw IoError("'" + path + "': voxel files need value_kind label8, got " + to_string(f.kind));
  return f.real_field();
}

const char* to_string(ExportFormat f) {
  switch (f) {
    case ExportFormat::sbmf: return "sbmf";
    case ExportFormat::csv_points: return "csv_points";
    case ExportFormat::vtk_structured: return "vtk_structured";
  }
  return "sbmf";
}

ExportFormat export_format_from_string(const std::string& s) {
  if (s == "sbmf") return ExportFormat::sbmf;
  if (s == "csv_points") return ExportFormat::csv_points;
  if (s == "vtk_structured") return ExportFormat::vtk_structured;
  throw InvalidArgument("unknown export format '" + s + "' (sbmf, csv_points, vtk_structured)");
}

const char* extension(ExportFormat f) {
  switch (f) {
    case ExportFormat::sbmf: return ".sbmf";
    case ExportFormat::csv_points: return ".csv";
    case ExportFormat::vtk_structured: return ".vtk";
  }
  return ".sbmf";
}

void export_field(const ScalarField& f, const std::string& path, ExportFormat format,
                  const std::string& name) {
  require_finite(f.values());
  const Eigen::ArrayXd& v = f.values();
  switch (format) {
    case ExportFormat::sbmf: write_sbmf(path, ArrayFile::from(f)); break;
    case ExportFormat::csv_points: write_bytes(path, csv_points(f.grid(), {name}, {&v})); break;
    case ExportFormat::vtk_structured: write_bytes(path, vtk_points(f.grid(), {name}, {&v})); break;
  }
}

void export_field(const ComplexScalarField& f, const std::string& path, ExportFormat format) {
  const Eigen::ArrayXd re = f.values().real(), im = f.values().imag();
  require_finite(re);
  require_finite(im);
  switch (format) {
    case ExportFormat::sbmf: write_sbmf(path, ArrayFile::from(f)); break;
    case ExportFormat::csv_points:
      write_bytes(path, csv_points(f.grid(), {"re", "im"}, {&re, &im}));
      break;
    case ExportFormat::vtk_structured:
      write_bytes(path, vtk_points(f.grid(), {"re", "im"}, {&re, &im}));
      break;
  }
}

void write_text(const std::string& path, const std::string& text) { write_bytes(path, text); }

}  // namespace sbm
