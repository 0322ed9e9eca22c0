#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "xcov/cleaner.hpp"

// Matrix file formats:
//  - CSV, row-major: a "rows,cols" header line, a dimension line, then one
//    line per row with comma-separated values.
//  - raw binary, 16-byte header: magic "XCOV", u32 rows, u32 cols, 4 reserved
//    bytes, then row-major little-endian f64 payload. Round-trips bit-exact.
namespace xcov {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void write_matrix_csv(const Eigen::MatrixXd& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "rows,cols\n" << m.rows() << "," << m.cols() << "\n";
  out << std::setprecision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ",";
      out << m(i, j);
    }
    out << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

inline Eigen::MatrixXd read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("rows,cols", 0) != 0)
    throw IoError(path + ":1: expected \"rows,cols\" header");
  if (!std::getline(in, line)) throw IoError(path + ":2: missing dimensions");
  Eigen::Index rows = 0, cols = 0;
  {
    std::istringstream ss(line);
    char comma = 0;
    if (!(ss >> rows >> comma >> cols) || comma != ',' || rows < 0 || cols < 0)
      throw IoError(path + ":2: malformed dimension line \"" + line + "\"");
  }
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (!std::getline(in, line))
      throw IoError(path + ": truncated at data row " + std::to_string(i + 1));
    std::istringstream ss(line);
    std::string cell;
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (!std::getline(ss, cell, ','))
        throw IoError(path + ":" + std::to_string(i + 3) + ": column " +
                      std::to_string(j + 1) + " missing");
      try {
        m(i, j) = std::stod(cell);
      } catch (const std::exception&) {
        throw IoError(path + ":" + std::to_string(i + 3) + ": column " +
                      std::to_string(j + 1) + ": bad number \"" + cell + "\"");
      }
    }
  }
  return m;
}

inline void write_matrix_binary(const Eigen::MatrixXd& m,
                                const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  char header[16] = {'X', 'C', 'O', 'V'};
  const std::uint32_t rows = static_cast<std::uint32_t>(m.rows());
  const std::uint32_t cols = static_cast<std::uint32_t>(m.cols());
  std::memcpy(header + 4, &rows, 4);
  std::memcpy(header + 8, &cols, 4);
  out.write(header, 16);
  std::vector<double> row(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      row[static_cast<std::size_t>(j)] = m(i, j);
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(double)));
  }
  if (!out) throw IoError("write failed: " + path);
}

inline Eigen::MatrixXd read_matrix_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  char header[16];
  in.read(header, 16);
  if (!in || std::memcmp(header, "XCOV", 4) != 0)
    throw IoError(path + ": bad magic, expected XCOV");
  std::uint32_t rows = 0, cols = 0;
  std::memcpy(&rows, header + 4, 4);
  std::memcpy(&cols, header + 8, 4);
  Eigen::MatrixXd m(rows, cols);
  std::vector<double> row(cols);
  for (std::uint32_t i = 0; i < rows; ++i) {
    in.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(cols * sizeof(double)));
    if (!in) throw IoError(path + ": truncated payload at row " +
                           std::to_string(i + 1));
    for (std::uint32_t j = 0; j < cols; ++j) m(i, j) = row[j];
  }
  return m;
}

inline Eigen::MatrixXd read_matrix_auto(const std::string& path) {
  if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".bin") == 0)
    return read_matrix_binary(path);
  return read_matrix_csv(path);
}

// Cleaned spectrum CSV with columns (k, s_empirical, s_cleaned, ratio, flags).
inline void write_spectrum_csv(const CleaningResult& r,
                               const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "k,s_empirical,s_cleaned,ratio,flags\n" << std::setprecision(17);
  for (Eigen::Index k = 0; k < r.s_empirical.size(); ++k) {
    const bool flagged = std::find(r.flagged_modes.begin(),
                                   r.flagged_modes.end(),
                                   k) != r.flagged_modes.end();
    out << k << "," << r.s_empirical(k) << "," << r.s_cleaned(k) << ",";
    if (std::isnan(r.per_mode_ratio(k)))
      out << "nan";
    else
      out << r.per_mode_ratio(k);
    out << "," << (flagged ? "degenerate" : "") << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace xcov
