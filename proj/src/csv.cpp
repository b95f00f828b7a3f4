#include "hqo/csv.hpp"

#include <array>
#include <cerrno>
#include <charconv>
#include <fstream>
#include <stdexcept>
#include <system_error>

namespace hqo {

std::string format_double(double value) {
  std::array<char, 32> buffer{};
  const auto [ptr, ec] = std::to_chars(buffer.data(), buffer.data() + buffer.size(), value);
  if (ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
  return std::string(buffer.data(), ptr);
}

void write_text_file(const std::string& path, std::string_view contents) {
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw std::system_error(errno, std::generic_category(), "cannot write " + path);
  file.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!file) throw std::system_error(errno, std::generic_category(), "cannot write " + path);
}

CsvTable::CsvTable(std::initializer_list<std::string_view> columns) : width_(columns.size()) {
  for (auto c : columns) cell(c);
  end_row();
}

CsvTable& CsvTable::cell(std::string_view text) {
  if (filled_ > 0) text_ += ',';
  text_ += text;
  ++filled_;
  return *this;
}

CsvTable& CsvTable::cell(double value) { return cell(format_double(value)); }

CsvTable& CsvTable::cell(long long value) { return cell(std::to_string(value)); }

CsvTable& CsvTable::cell(bool value) { return cell(std::string_view(value ? "true" : "false")); }

CsvTable& CsvTable::empty() { return cell(std::string_view{}); }

void CsvTable::end_row() {
  if (filled_ != width_)
    throw std::logic_error("CsvTable: row has " + std::to_string(filled_) + " cells, expected " +
                           std::to_string(width_));
  text_ += '\n';
  filled_ = 0;
}

std::string coefficients_csv(const Eigen::VectorXd& values) {
  CsvTable table{"index", "value"};
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    table.cell(static_cast<long long>(i)).cell(values[i]);
    table.end_row();
  }
  return table.str();
}

}  // namespace hqo
