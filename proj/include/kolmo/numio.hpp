#pragma once

#include <string>
#include <vector>

#include "kolmo/fdsolver.hpp"
#include "kolmo/numeric.hpp"

namespace kolmo {

// Deterministic text output: %.17g numerics, LF line endings, first line a
// comment echoing the config hash.

std::string fmt_g17(double v);

void write_csv(const std::string& path, const std::string& config_hash,
               const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows);

void write_matrix_csv(const std::string& path, const std::string& config_hash,
                      const std::vector<std::string>& columns, const Matrix& rows);

// GridSolution as CSV: columns t, x1..xd, u; one row per (time level, node).
void write_grid_solution_csv(const std::string& path, const std::string& config_hash,
                             const GridSolution& sol, int time_stride = 1);

// Compact binary layout (little-endian):
//   u64 config_hash
//   u32 d, u32 nt, u32 n[0..d)
//   f64 xlo[0..d), f64 xhi[0..d)
//   f64 times[nt]
//   f64 values[nt][prod n], row-major, time slowest then axes in order
void write_grid_solution_binary(const std::string& path, std::uint64_t config_hash,
                                const GridSolution& sol);
GridSolution read_grid_solution_binary(const std::string& path, std::uint64_t* config_hash = nullptr);

// Hand-rolled rectangle-raster heatmap of one time slice (2-d grids only).
void write_svg_heatmap(const std::string& path, const std::string& config_hash,
                       const GridSolution& sol, int time_index);

} // namespace kolmo
