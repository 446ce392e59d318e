#include "kolmo/numeric.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <thread>

#include "kolmo/error.hpp"

namespace kolmo {

Matrix matrix_exp(const Matrix& a) {
    if (a.rows() != a.cols())
        throw Error("matrix_exp: matrix must be square");
    return a.exp();
}

namespace {

QuadRule compute_gauss_legendre(int n) {
    QuadRule rule;
    rule.x.resize(n);
    rule.w.resize(n);
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        // Chebyshev-like initial guess, then Newton on P_n.
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        rule.x[i] = -x;
        rule.x[n - 1 - i] = x;
        double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.w[i] = w;
        rule.w[n - 1 - i] = w;
    }
    return rule;
}

} // namespace

const QuadRule& gauss_legendre(int n) {
    if (n < 1) throw Error("gauss_legendre: order must be positive");
    static std::mutex mtx;
    static std::map<int, QuadRule> cache;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n);
    if (it == cache.end())
        it = cache.emplace(n, compute_gauss_legendre(n)).first;
    return it->second;
}

double pairwise_sum(const double* a, std::size_t n) {
    if (n == 0) return 0.0;
    if (n <= 8) {
        double s = a[0];
        for (std::size_t i = 1; i < n; ++i) s += a[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(a, half) + pairwise_sum(a + half, n - half);
}

double pairwise_sum(const std::vector<double>& a) {
    return pairwise_sum(a.data(), a.size());
}

namespace {
std::atomic<int> g_max_threads{0}; // 0 = use hardware_concurrency
}

void set_max_threads(int n) { g_max_threads.store(n > 0 ? n : 0); }

int max_threads() {
    int n = g_max_threads.load();
    if (n > 0) return n;
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& f) {
    if (n <= 0) return;
    const int workers = static_cast<int>(std::min<std::int64_t>(max_threads(), n));
    if (workers <= 1) {
        for (std::int64_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<std::int64_t> next{0};
    const std::int64_t chunk = std::max<std::int64_t>(1, n / (8 * workers));
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::exception_ptr err;
    std::mutex err_mtx;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::int64_t b = next.fetch_add(chunk);
                if (b >= n) return;
                const std::int64_t e = std::min(n, b + chunk);
                try {
                    for (std::int64_t i = b; i < e; ++i) f(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mtx);
                    if (!err) err = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

double regression_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw Error("regression_slope: need at least two points");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double denom = n * sxx - sx * sx;
    if (denom == 0.0) throw Error("regression_slope: degenerate abscissae");
    return (n * sxy - sx * sy) / denom;
}

} // namespace kolmo
