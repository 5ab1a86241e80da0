// Deterministic CSV emission: fixed %.17g formatting so identical runs are
// byte-identical files.
#pragma once

#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

namespace dsmp {

std::string format_double(double v);

class CsvWriter {
public:
  explicit CsvWriter(const std::string& file);

  void comment(const std::string& text);  // emitted as "# text"
  void header(const std::vector<std::string>& columns);
  void row(const std::vector<double>& values);
  void raw_row(const std::vector<std::string>& cells);

private:
  std::ofstream out_;
};

}  // namespace dsmp
