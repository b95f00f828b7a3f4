#pragma once

#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace hqo {

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double value);

/// Writes `contents` to `path`, throwing std::system_error on failure.
void write_text_file(const std::string& path, std::string_view contents);

/// Accumulates comma-separated rows under a fixed header.
class CsvTable {
 public:
  explicit CsvTable(std::initializer_list<std::string_view> columns);

  CsvTable& cell(std::string_view text);
  CsvTable& cell(double value);
  CsvTable& cell(long long value);
  CsvTable& cell(int value) { return cell(static_cast<long long>(value)); }
  CsvTable& cell(bool value);
  CsvTable& empty();
  /// Terminates the current row; throws if it has the wrong width.
  void end_row();

  std::string str() const { return text_; }

 private:
  std::size_t width_;
  std::size_t filled_ = 0;
  std::string text_;
};

/// `index,value` rows for a coefficient vector.
std::string coefficients_csv(const Eigen::VectorXd& values);

}  // namespace hqo
