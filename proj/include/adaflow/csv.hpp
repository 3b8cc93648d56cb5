#pragma once

#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace adaflow::csv {

/// Shortest-free, fixed 17-significant-digit rendering ("%.17g"). Output is
/// bit-exact for a given value, which the determinism guarantees rely on.
[[nodiscard]] std::string format_double(double value);

/// Minimal CSV row writer; cells are never quoted (all cells are numbers or
/// identifiers without commas).
class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void header(const std::vector<std::string>& names);
  Writer& cell(double value);
  Writer& cell(long long value);
  Writer& cell(std::string_view text);
  void end_row();

 private:
  void separator();
  std::ostream& out_;
  bool row_started_ = false;
};

/// Column names prefix_1 .. prefix_n.
[[nodiscard]] std::vector<std::string> indexed_columns(const std::string& prefix, long long n);

}  // namespace adaflow::csv
