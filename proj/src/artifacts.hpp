#pragma once

#include <string>
#include <vector>

namespace stochact::detail {

/// Plot-ready CSV with a header row; numbers are printed with 17
/// significant digits so that they read back exactly.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}
  void add(const std::vector<double>& row) { rows_.push_back(row); }
  std::string str() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<double>> rows_;
};

struct CsvData {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  /// Column by header name; throws if absent.
  std::vector<double> column(const std::string& name) const;
};

CsvData read_csv(const std::string& path);

std::string format_double(double v);
std::string join_path(const std::string& dir, const std::string& name);
void ensure_directory(const std::string& dir);

}  // namespace stochact::detail
