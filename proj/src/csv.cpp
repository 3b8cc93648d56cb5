#include "adaflow/csv.hpp"

#include <cstdio>

namespace adaflow::csv {

std::string format_double(double value) {
  char buffer[32];
  const int n = std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return std::string(buffer, static_cast<std::size_t>(n));
}

void Writer::header(const std::vector<std::string>& names) {
  for (const auto& n : names) cell(std::string_view(n));
  end_row();
}

void Writer::separator() {
  if (row_started_) out_ << ',';
  row_started_ = true;
}

Writer& Writer::cell(double value) {
  separator();
  out_ << format_double(value);
  return *this;
}

Writer& Writer::cell(long long value) {
  separator();
  out_ << value;
  return *this;
}

Writer& Writer::cell(std::string_view text) {
  separator();
  out_ << text;
  return *this;
}

void Writer::end_row() {
  out_ << '\n';
  row_started_ = false;
}

std::vector<std::string> indexed_columns(const std::string& prefix, long long n) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(n));
  for (long long i = 1; i <= n; ++i) names.push_back(prefix + "_" + std::to_string(i));
  return names;
}

}  // namespace adaflow::csv
