#include "kolmo/numio.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

#include "kolmo/error.hpp"

namespace kolmo {

std::string fmt_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

std::ofstream open_out(const std::string& path, bool binary = false) {
    std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
    if (!out)
        throw Error("cannot open output file '" + path + "'");
    return out;
}

void write_header_row(std::ofstream& out, const std::string& config_hash,
                      const std::vector<std::string>& columns) {
    out << "# config=" << config_hash << "\n";
    for (std::size_t i = 0; i < columns.size(); ++i)
        out << (i ? "," : "") << columns[i];
    out << "\n";
}

} // namespace

void write_csv(const std::string& path, const std::string& config_hash,
               const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows) {
    auto out = open_out(path);
    write_header_row(out, config_hash, columns);
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i)
            out << (i ? "," : "") << fmt_g17(row[i]);
        out << "\n";
    }
}

void write_matrix_csv(const std::string& path, const std::string& config_hash,
                      const std::vector<std::string>& columns, const Matrix& rows) {
    auto out = open_out(path);
    write_header_row(out, config_hash, columns);
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
        for (Eigen::Index j = 0; j < rows.cols(); ++j)
            out << (j ? "," : "") << fmt_g17(rows(i, j));
        out << "\n";
    }
}

void write_grid_solution_csv(const std::string& path, const std::string& config_hash,
                             const GridSolution& sol, int time_stride) {
    if (time_stride < 1)
        throw Error("write_grid_solution_csv: stride must be >= 1");
    auto out = open_out(path);
    std::vector<std::string> columns = {"t"};
    for (int axis = 0; axis < sol.grid.dim(); ++axis)
        columns.push_back("x" + std::to_string(axis + 1));
    columns.push_back("u");
    write_header_row(out, config_hash, columns);
    for (std::size_t k = 0; k < sol.times.size(); k += time_stride) {
        const auto& level = sol.values[k];
        for (long flat = 0; flat < sol.grid.num_nodes(); ++flat) {
            out << fmt_g17(sol.times[k]);
            const Vector x = sol.grid.node(flat);
            for (int axis = 0; axis < sol.grid.dim(); ++axis)
                out << ',' << fmt_g17(x[axis]);
            out << ',' << fmt_g17(level[flat]) << "\n";
        }
    }
}

void write_grid_solution_binary(const std::string& path, std::uint64_t config_hash,
                                const GridSolution& sol) {
    auto out = open_out(path, true);
    auto put = [&out](const void* p, std::size_t bytes) {
        out.write(static_cast<const char*>(p), static_cast<std::streamsize>(bytes));
    };
    const std::uint32_t d = static_cast<std::uint32_t>(sol.grid.dim());
    const std::uint32_t nt = static_cast<std::uint32_t>(sol.times.size());
    put(&config_hash, 8);
    put(&d, 4);
    put(&nt, 4);
    for (int axis = 0; axis < sol.grid.dim(); ++axis) {
        const std::uint32_t n = static_cast<std::uint32_t>(sol.grid.n[axis]);
        put(&n, 4);
    }
    for (int axis = 0; axis < sol.grid.dim(); ++axis) put(&sol.grid.xlo[axis], 8);
    for (int axis = 0; axis < sol.grid.dim(); ++axis) put(&sol.grid.xhi[axis], 8);
    for (double t : sol.times) put(&t, 8);
    for (const auto& level : sol.values)
        put(level.data(), level.size() * 8);
}

GridSolution read_grid_solution_binary(const std::string& path, std::uint64_t* config_hash) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot open '" + path + "'");
    auto get = [&in, &path](void* p, std::size_t bytes) {
        in.read(static_cast<char*>(p), static_cast<std::streamsize>(bytes));
        if (!in) throw Error("truncated grid solution file '" + path + "'");
    };
    std::uint64_t hash = 0;
    std::uint32_t d = 0, nt = 0;
    get(&hash, 8);
    get(&d, 4);
    get(&nt, 4);
    if (config_hash) *config_hash = hash;
    if (d < 1 || d > 3 || nt < 1)
        throw Error("corrupt grid solution header in '" + path + "'");

    GridSolution sol;
    sol.grid.n.resize(d);
    for (std::uint32_t axis = 0; axis < d; ++axis) {
        std::uint32_t n = 0;
        get(&n, 4);
        sol.grid.n[axis] = static_cast<int>(n);
    }
    sol.grid.xlo.resize(d);
    sol.grid.xhi.resize(d);
    for (std::uint32_t axis = 0; axis < d; ++axis) get(&sol.grid.xlo[axis], 8);
    for (std::uint32_t axis = 0; axis < d; ++axis) get(&sol.grid.xhi[axis], 8);
    sol.times.resize(nt);
    for (auto& t : sol.times) get(&t, 8);
    sol.grid.T = sol.times.front();
    sol.grid.t_final = sol.times.back();
    sol.grid.dt = nt > 1 ? sol.times[0] - sol.times[1] : 1.0;
    const long N = sol.grid.num_nodes();
    sol.values.assign(nt, std::vector<double>(N));
    for (auto& level : sol.values) get(level.data(), static_cast<std::size_t>(N) * 8);
    return sol;
}

void write_svg_heatmap(const std::string& path, const std::string& config_hash,
                       const GridSolution& sol, int time_index) {
    if (sol.grid.dim() != 2)
        throw Error("svg heatmap: only 2-d grids are rendered");
    const auto& level = sol.at_time(time_index);
    const int nx = sol.grid.n[0], ny = sol.grid.n[1];

    double lo = level[0], hi = level[0];
    for (double v : level) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double span = hi > lo ? hi - lo : 1.0;

    const int cell = 4;
    auto out = open_out(path);
    out << "<!-- config=" << config_hash << " t=" << fmt_g17(sol.times[time_index])
        << " min=" << fmt_g17(lo) << " max=" << fmt_g17(hi) << " -->\n";
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << nx * cell
        << "\" height=\"" << ny * cell << "\">\n";
    for (int i = 0; i < nx; ++i) {
        for (int j = 0; j < ny; ++j) {
            const double v = (level[i * sol.grid.stride(0) + j] - lo) / span;
            // blue -> white -> red ramp
            const int r = static_cast<int>(255 * std::min(1.0, 2.0 * v));
            const int b = static_cast<int>(255 * std::min(1.0, 2.0 * (1.0 - v)));
            const int g = std::min(r, b);
            out << "<rect x=\"" << i * cell << "\" y=\"" << (ny - 1 - j) * cell
                << "\" width=\"" << cell << "\" height=\"" << cell << "\" fill=\"rgb("
                << r << ',' << g << ',' << b << ")\"/>\n";
        }
    }
    out << "</svg>\n";
}

} // namespace kolmo
