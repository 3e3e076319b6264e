#include "helpers.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "dagalpha/synthetic.hpp"

#ifndef DAGALPHA_TEST_DATA_DIR
#error "DAGALPHA_TEST_DATA_DIR must be defined"
#endif

namespace dagalpha::testing {

Matrix to_matrix(const std::vector<std::vector<double>>& rows) {
  Matrix m(rows.size(), rows.empty() ? 0 : rows[0].size());
  for (std::size_t t = 0; t < rows.size(); ++t)
    for (std::size_t a = 0; a < rows[t].size(); ++a) m(t, a) = rows[t][a];
  return m;
}

namespace {

Panel build(const Matrix& open, const Matrix& close) {
  const std::size_t T = close.rows(), N = close.cols();
  std::vector<std::string> assets;
  for (std::size_t a = 0; a < N; ++a) assets.push_back("S" + std::to_string(a));
  Matrix high(T, N), low(T, N), volume(T, N, 1000.0);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t a = 0; a < N; ++a) {
      high(t, a) = std::fmax(open(t, a), close(t, a));
      low(t, a) = std::fmin(open(t, a), close(t, a));
    }
  }
  return Panel(business_days(*parse_date("2021-01-04"), T), assets,
               {open, high, low, close, close, volume});
}

}  // namespace

Panel panel_from_close(const std::vector<std::vector<double>>& close) {
  const Matrix c = to_matrix(close);
  return build(c, c);
}

Panel panel_from_open_close(const std::vector<std::vector<double>>& open,
                            const std::vector<std::vector<double>>& close) {
  return build(to_matrix(open), to_matrix(close));
}

std::vector<std::string> data_lines(const std::string& name) {
  std::ifstream in(std::string(DAGALPHA_TEST_DATA_DIR) + "/" + name);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    out.push_back(line);
  }
  return out;
}

std::filesystem::path scratch_dir(const std::string& tag) {
  static int counter = 0;
  auto p = std::filesystem::temp_directory_path() /
           ("dagalpha_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool close_enough(double a, double b, double rel_tol, double abs_tol) {
  if (std::isnan(a) || std::isnan(b)) return std::isnan(a) && std::isnan(b);
  return std::fabs(a - b) <= abs_tol + rel_tol * std::fmax(std::fabs(a), std::fabs(b));
}

}  // namespace dagalpha::testing
