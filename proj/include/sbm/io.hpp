#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sbm/field.hpp"

namespace sbm {

// SBMF1 array file. A text header of "key value" lines:
//   SBMF1
//   dims 321 176 297
//   spacing 0.06285 0.06285 0.06285
//   origin 0 0 0
//   coord_system cartesian
//   value_kind real64
//   order row-major, last axis fastest
//   endianness little
//   end_header
// followed by the raw little-endian payload. complex128 stores the real
// plane, then the imaginary plane. Doubles in the header use 17 significant
// digits, so the grid round-trips bit-exactly.
enum class ValueKind { real64, complex128, label8 };
const char* to_string(ValueKind k);
ValueKind value_kind_from_string(const std::string& s);
std::size_t value_size(ValueKind k);

struct ArrayFile {
  Grid grid;
  ValueKind kind = ValueKind::real64;
  Eigen::ArrayXd real;              // real64, and the real plane of complex128
  Eigen::ArrayXd imag;              // complex128 only
  std::vector<std::uint8_t> labels; // label8 only

  static ArrayFile from(const ScalarField& f);
  static ArrayFile from(const ComplexScalarField& f);
  static ArrayFile from_labels(const Grid& grid, std::vector<std::uint8_t> labels);
  ScalarField real_field() const;  // labels are widened to doubles
  ComplexScalarField complex_field() const;
};

// Throws IoError naming the byte offset of a malformed header line, or the
// expected and actual payload byte counts.
void write_sbmf(const std::string& path, const ArrayFile& file);
ArrayFile read_sbmf(const std::string& path);
// Header only, with the payload length checked.
ArrayFile read_sbmf_header(const std::string& path, std::size_t* payload_offset = nullptr);

// label8 file to a field of label values.
ScalarField load_voxels(const std::string& path);

enum class ExportFormat { sbmf, csv_points, vtk_structured };
const char* to_string(ExportFormat f);
ExportFormat export_format_from_string(const std::string& s);
const char* extension(ExportFormat f);

// csv_points: header "x[,y[,z]],<name>" (r,z on axisymmetric grids) and one
// line per node, 17 significant digits. vtk_structured: legacy ASCII
// STRUCTURED_POINTS with x varying fastest. Complex fields carry two arrays
// named re and im. Throws InvalidArgument on non-finite values and IoError
// when the path cannot be written.
void export_field(const ScalarField& f, const std::string& path, ExportFormat format,
                  const std::string& name = "value");
void export_field(const ComplexScalarField& f, const std::string& path, ExportFormat format);

// Plain-text file write that throws IoError on failure.
void write_text(const std::string& path, const std::string& text);

}  // namespace sbm
