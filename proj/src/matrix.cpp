// Copyright 2026 The PLGC Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "plgc/matrix.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <sstream>

#include "plgc/errors.hpp"
#include "plgc/fs.hpp"

namespace plgc {

namespace {

constexpr double kDegenerateNorm = 1e-12;

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ContractError(std::string(op) + ": shape mismatch " + shape(a) + " vs " + shape(b));
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw ContractError("Matrix: data length " + std::to_string(data_.size()) +
                        " does not match " + std::to_string(rows) + "x" + std::to_string(cols));
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ContractError("Matrix::from_rows: ragged rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Matrix(r, c, std::move(data));
}

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

double CsrMatrix::at(std::size_t r, std::size_t c) const {
  for (std::size_t p = row_ptr[r]; p < row_ptr[r + 1]; ++p) {
    if (col_idx[p] == c) return values[p];
  }
  return 0.0;
}

Matrix CsrMatrix::multiply(const Matrix& x) const {
  if (x.rows() != cols) {
    throw ContractError("CsrMatrix::multiply: " + std::to_string(rows) + "x" +
                        std::to_string(cols) + " times " + shape(x));
  }
  Matrix out(rows, x.cols());
  for (std::size_t r = 0; r < rows; ++r) {
    auto dst = out.row(r);
    for (std::size_t p = row_ptr[r]; p < row_ptr[r + 1]; ++p) {
      const double w = values[p];
      auto src = x.row(col_idx[p]);
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += w * src[j];
    }
  }
  return out;
}

CsrMatrix CsrMatrix::transpose() const {
  CsrMatrix t;
  t.rows = cols;
  t.cols = rows;
  t.row_ptr.assign(cols + 1, 0);
  for (std::size_t c : col_idx) ++t.row_ptr[c + 1];
  for (std::size_t i = 0; i < cols; ++i) t.row_ptr[i + 1] += t.row_ptr[i];
  t.col_idx.resize(nnz());
  t.values.resize(nnz());
  std::vector<std::size_t> cursor(t.row_ptr.begin(), t.row_ptr.end() - 1);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t p = row_ptr[r]; p < row_ptr[r + 1]; ++p) {
      const std::size_t dst = cursor[col_idx[p]]++;
      t.col_idx[dst] = r;
      t.values[dst] = values[p];
    }
  }
  return t;
}

Matrix CsrMatrix::to_dense() const {
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t p = row_ptr[r]; p < row_ptr[r + 1]; ++p) m(r, col_idx[p]) += values[p];
  }
  return m;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ContractError("matmul: inner dimensions differ, " + shape(a) + " x " + shape(b));
  }
  Matrix out(a.rows(), b.cols());
  const std::size_t inner = a.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto dst = out.row(i);
    auto lhs = a.row(i);
    for (std::size_t k = 0; k < inner; ++k) {
      const double w = lhs[k];
      if (w == 0.0) continue;
      auto rhs = b.row(k);
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += w * rhs[j];
    }
  }
  return out;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

Matrix add(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "add");
  Matrix out = a;
  auto dst = out.values();
  auto src = b.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  return out;
}

Matrix subtract(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "subtract");
  Matrix out = a;
  auto dst = out.values();
  auto src = b.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] -= src[i];
  return out;
}

Matrix scale(const Matrix& a, double s) {
  Matrix out = a;
  for (double& v : out.values()) v *= s;
  return out;
}

Matrix relu(const Matrix& a) {
  Matrix out = a;
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  return out;
}

Matrix row_l2_normalize(const Matrix& a) {
  Matrix out = a;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto r = out.row(i);
    const double n = l2_norm(r);
    if (!(n > kDegenerateNorm)) {
      throw DegenerateError("row_l2_normalize: row " + std::to_string(i) + " has norm " +
                            format_double(n));
    }
    for (double& v : r) v /= n;
  }
  return out;
}

Matrix gather_rows(const Matrix& a, std::span<const std::size_t> index) {
  Matrix out(index.size(), a.cols());
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= a.rows()) throw ContractError("gather_rows: index out of range");
    std::copy_n(a.row(index[i]).begin(), a.cols(), out.row(i).begin());
  }
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double l2_norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  auto x = a.values();
  auto y = b.values();
  for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x[i] - y[i]));
  return m;
}

double frobenius_sq(const Matrix& a) { return dot(a.values(), a.values()); }

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void save_matrix_bin(const Matrix& m, const std::filesystem::path& path) {
  static_assert(std::endian::native == std::endian::little, "little-endian host required");
  std::string out(16 + 8 * m.size(), '\0');
  const std::uint64_t dims[2] = {m.rows(), m.cols()};
  std::memcpy(out.data(), dims, 16);
  if (m.size() > 0) std::memcpy(out.data() + 16, m.values().data(), 8 * m.size());
  write_file_atomic(path, out);
}

Matrix load_matrix_bin(const std::filesystem::path& path) {
  const std::string raw = read_file(path);
  if (raw.size() < 16) throw ParseError(path.string(), 0, "truncated header");
  std::uint64_t dims[2];
  std::memcpy(dims, raw.data(), 16);
  const std::uint64_t count = dims[0] * dims[1];
  if (raw.size() != 16 + 8 * count) {
    throw ParseError(path.string(), 0,
                     "payload size " + std::to_string(raw.size() - 16) + " does not match " +
                         std::to_string(dims[0]) + "x" + std::to_string(dims[1]));
  }
  std::vector<double> data(count);
  if (count > 0) std::memcpy(data.data(), raw.data() + 16, 8 * count);
  return Matrix(dims[0], dims[1], std::move(data));
}

void save_matrix_tsv(const Matrix& m, const std::filesystem::path& path) {
  std::string out;
  out.reserve(m.size() * 24);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j > 0) out.push_back('\t');
      out += format_double(m(i, j));
    }
    out.push_back('\n');
  }
  write_file_atomic(path, out);
}

Matrix load_matrix_tsv(const std::filesystem::path& path) {
  const std::string raw = read_file(path);
  std::istringstream in(raw);
  std::string line;
  std::vector<double> data;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const char* p = line.c_str();
    std::size_t n = 0;
    while (true) {
      while (*p == ' ' || *p == '\t' || *p == '\r') ++p;
      if (*p == '\0') break;
      char* end = nullptr;
      const double v = std::strtod(p, &end);
      if (end == p) throw ParseError(path.string(), line_no, "expected a number");
      if (!std::isfinite(v)) throw ParseError(path.string(), line_no, "non-finite value");
      data.push_back(v);
      ++n;
      p = end;
    }
    if (rows == 0) {
      cols = n;
    } else if (n != cols) {
      throw ParseError(path.string(), line_no,
                       "expected " + std::to_string(cols) + " columns, got " + std::to_string(n));
    }
    ++rows;
  }
  return Matrix(rows, cols, std::move(data));
}

void save_matrix(const Matrix& m, const std::filesystem::path& path) {
  if (path.extension() == ".bin") {
    save_matrix_bin(m, path);
  } else {
    save_matrix_tsv(m, path);
  }
}

Matrix load_matrix(const std::filesystem::path& path) {
  return path.extension() == ".bin" ? load_matrix_bin(path) : load_matrix_tsv(path);
}

}  // namespace plgc
