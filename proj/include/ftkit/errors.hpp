// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ftkit {

/// Raised when a forward pass or a gradient produces a non-finite value.
/// `epoch` is -1 outside of training.
class NumericOverflow : public std::runtime_error {
 public:
  explicit NumericOverflow(const std::string &what, int epoch = -1)
      : std::runtime_error(what), epoch_(epoch) {}

  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

class CsvError : public std::runtime_error {
 public:
  CsvError(const std::string &what, std::size_t row, std::size_t column)
      : std::runtime_error(what), row_(row), column_(column) {}

  /// 1-based line number in the file (0 when not applicable).
  std::size_t row() const noexcept { return row_; }
  /// 1-based column (0 when not applicable).
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

class CsvEmptyError : public CsvError {
 public:
  explicit CsvEmptyError(const std::string &path)
      : CsvError("empty csv file: " + path, 0, 0) {}
};

class CsvRaggedRowError : public CsvError {
 public:
  CsvRaggedRowError(std::size_t row, std::size_t expected, std::size_t got)
      : CsvError("ragged row " + std::to_string(row) + ": expected " +
                     std::to_string(expected) + " cells, got " +
                     std::to_string(got),
                 row, 0) {}
};

class CsvParseError : public CsvError {
 public:
  CsvParseError(std::size_t row, std::size_t column, const std::string &cell)
      : CsvError("non-numeric cell '" + cell + "' at (" + std::to_string(row) +
                     "," + std::to_string(column) + ")",
                 row, column) {}
};

class DegenerateColumnError : public std::invalid_argument {
 public:
  explicit DegenerateColumnError(std::size_t column)
      : std::invalid_argument("degenerate (constant) column " +
                              std::to_string(column)),
        column_(column) {}

  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t column_;
};

class ClassAbsentError : public std::invalid_argument {
 public:
  explicit ClassAbsentError(const std::string &which)
      : std::invalid_argument("no " + which +
                              " targets under the given threshold") {}
};

}  // namespace ftkit
