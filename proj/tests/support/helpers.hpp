#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dagalpha/panel.hpp"

namespace dagalpha::testing {

// Panel whose six features all equal `close` (rows are dates), with
// consecutive business dates from 2021-01-04.
Panel panel_from_close(const std::vector<std::vector<double>>& close);

// Panel with explicit open and close; high/low envelope them, vwap = close.
Panel panel_from_open_close(const std::vector<std::vector<double>>& open,
                            const std::vector<std::vector<double>>& close);

Matrix to_matrix(const std::vector<std::vector<double>>& rows);

// Non-empty, non-comment lines of a file under tests/data.
std::vector<std::string> data_lines(const std::string& name);

// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& tag);

std::string read_file(const std::filesystem::path& p);

// Same NaN mask and |a - b| <= abs_tol + rel_tol * max(|a|, |b|) elsewhere.
bool close_enough(double a, double b, double rel_tol, double abs_tol);

}  // namespace dagalpha::testing
