#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <fftw3.h>

#include "mvsdde/core.hpp"
#include "mvsdde/grid.hpp"
#include "mvsdde/rng.hpp"

namespace mvsdde::fbm {

/// Covariance kernel of fractional Brownian motion,
/// R_H(t,s) = (t^{2H} + s^{2H} - |t-s|^{2H}) / 2.
inline double covariance(double s, double t, HurstExponent hurst) {
    if (s < 0.0 || t < 0.0) throw std::invalid_argument("covariance: times must be nonnegative");
    const double twoH = 2.0 * hurst.value();
    return 0.5 * (std::pow(t, twoH) + std::pow(s, twoH) - std::pow(std::abs(t - s), twoH));
}

/// Stationary autocovariance of unit-step fractional Gaussian noise,
/// gamma(k) = (|k+1|^{2H} - 2|k|^{2H} + |k-1|^{2H}) / 2.
inline double fgn_autocovariance(long lag, HurstExponent hurst) {
    if (lag < 0) throw std::invalid_argument("fgn_autocovariance: lag must be nonnegative");
    if (lag == 0) return 1.0;
    const double twoH = 2.0 * hurst.value();
    const double k = static_cast<double>(lag);
    return 0.5 * (std::pow(k + 1.0, twoH) - 2.0 * std::pow(k, twoH) + std::pow(k - 1.0, twoH));
}

enum class Method { circulant, cholesky };

inline const char* method_name(Method m) {
    return m == Method::circulant ? "circulant" : "cholesky";
}

inline Method method_from_name(const std::string& s) {
    if (s == "circulant") return Method::circulant;
    if (s == "cholesky") return Method::cholesky;
    throw std::invalid_argument("unknown sampling method: " + s);
}

/// Which RNG streams produced a batch. Row i of the batch is a pure function
/// of (seed, path_offset + i, method), never of batch boundaries.
struct SeedLineage {
    std::uint64_t seed = 0;
    std::uint64_t path_offset = 0;
    Method method = Method::circulant;
};

/// Unit-step standard fractional Gaussian noise, one path per row.
struct FgnBatch {
    RowMatrix increments;  // n_paths x n_steps
    HurstExponent hurst;
    SeedLineage lineage;

    std::size_t n_paths() const { return increments.rows(); }
    std::size_t n_steps() const { return increments.cols(); }
};

/// Fractional Brownian motion values on a grid, one path per row; column k
/// holds B at time k * step, column 0 is identically zero.
struct PathBatch {
    RowMatrix values;  // n_paths x (n_steps + 1)
    TimeGrid grid;
    HurstExponent hurst;
    SeedLineage lineage;

    std::size_t n_paths() const { return values.rows(); }
};

namespace detail {

inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

/// Complex in-place-capable forward DFT of fixed length. Plan creation is
/// serialized (the FFTW planner is not thread-safe); execution on this
/// object's own buffers is.
class Fft {
public:
    explicit Fft(std::size_t n) : n_(n) {
        std::lock_guard lock(fftw_planner_mutex());
        in_ = fftw_alloc_complex(n);
        out_ = fftw_alloc_complex(n);
        if (!in_ || !out_) throw std::bad_alloc();
        plan_ = fftw_plan_dft_1d(static_cast<int>(n), in_, out_, FFTW_FORWARD, FFTW_ESTIMATE);
        if (!plan_) throw std::runtime_error("fftw plan creation failed");
    }
    ~Fft() {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(plan_);
        fftw_free(in_);
        fftw_free(out_);
    }
    Fft(const Fft&) = delete;
    Fft& operator=(const Fft&) = delete;

    std::size_t size() const { return n_; }
    fftw_complex* in() { return in_; }
    const fftw_complex* out() const { return out_; }
    void execute() { fftw_execute(plan_); }

private:
    std::size_t n_;
    fftw_complex* in_ = nullptr;
    fftw_complex* out_ = nullptr;
    fftw_plan plan_;
};

}  // namespace detail

/// Relative tolerance for roundoff on the (theoretically nonnegative)
/// circulant spectrum: anything below -1e-10 * max signals a broken
/// embedding, smaller negatives are clamped to zero.
inline constexpr double kCirculantEigenvalueTolerance = 1e-10;

/// Eigenvalues of the 2M-circulant embedding of the fGn covariance on an
/// M-step grid.
inline std::vector<double> circulant_eigenvalues(HurstExponent hurst, std::size_t n_steps) {
    if (n_steps < 1) throw std::invalid_argument("circulant_eigenvalues: need n_steps >= 1");
    const std::size_t len = 2 * n_steps;
    detail::Fft fft(len);
    for (std::size_t j = 0; j <= n_steps; ++j) {
        const double g = fgn_autocovariance(static_cast<long>(j), hurst);
        fft.in()[j][0] = g;
        fft.in()[j][1] = 0.0;
        if (j >= 1 && j < n_steps) {
            fft.in()[len - j][0] = g;
            fft.in()[len - j][1] = 0.0;
        }
    }
    fft.execute();

    std::vector<double> lambda(len);
    double max_ev = 0.0;
    for (std::size_t j = 0; j < len; ++j) {
        lambda[j] = fft.out()[j][0];
        max_ev = std::max(max_ev, lambda[j]);
    }
    const double floor = -kCirculantEigenvalueTolerance * max_ev;
    for (double& ev : lambda) {
        if (ev < floor)
            throw std::runtime_error("circulant embedding produced a significantly negative eigenvalue");
        if (ev < 0.0) ev = 0.0;
    }
    return lambda;
}

/// Exact fGn sampler via circulant embedding (Davies-Harte): spectral
/// randomization of the embedded covariance, one FFT per path.
class CirculantFgnSampler {
public:
    CirculantFgnSampler(HurstExponent hurst, std::size_t n_steps)
        : n_steps_(n_steps), fft_(2 * n_steps), amplitude_(2 * n_steps, 0.0) {
        const auto lambda = circulant_eigenvalues(hurst, n_steps);
        const auto len = static_cast<double>(2 * n_steps);
        amplitude_[0] = std::sqrt(lambda[0] / len);
        amplitude_[n_steps] = std::sqrt(lambda[n_steps] / len);
        for (std::size_t k = 1; k < n_steps; ++k)
            amplitude_[k] = std::sqrt(lambda[k] / (2.0 * len));
    }

    /// Fills `out` (length n_steps) with one standard fGn path. Consumes the
    /// stream in a fixed order: Z_0, Z_M, then pairs for k = 1..M-1.
    void sample_row(rng::Stream& stream, std::span<double> out) {
        const std::size_t m = n_steps_;
        const std::size_t len = 2 * m;
        fftw_complex* in = fft_.in();
        in[0][0] = amplitude_[0] * stream.normal();
        in[0][1] = 0.0;
        in[m][0] = amplitude_[m] * stream.normal();
        in[m][1] = 0.0;
        for (std::size_t k = 1; k < m; ++k) {
            const double re = amplitude_[k] * stream.normal();
            const double im = amplitude_[k] * stream.normal();
            in[k][0] = re;
            in[k][1] = im;
            in[len - k][0] = re;
            in[len - k][1] = -im;
        }
        fft_.execute();
        for (std::size_t j = 0; j < m; ++j) out[j] = fft_.out()[j][0];
    }

private:
    std::size_t n_steps_;
    detail::Fft fft_;
    std::vector<double> amplitude_;
};

/// Exact fGn sampler via dense Cholesky of the M x M fGn covariance. O(M^3)
/// setup, O(M^2) per path; the brute-force cross-check for the circulant
/// route.
class CholeskyFgnSampler {
public:
    CholeskyFgnSampler(HurstExponent hurst, std::size_t n_steps) : n_steps_(n_steps) {
        Eigen::MatrixXd gamma(n_steps, n_steps);
        for (std::size_t i = 0; i < n_steps; ++i)
            for (std::size_t j = 0; j < n_steps; ++j)
                gamma(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    fgn_autocovariance(static_cast<long>(i > j ? i - j : j - i), hurst);
        Eigen::LLT<Eigen::MatrixXd> llt(gamma);
        if (llt.info() != Eigen::Success)
            throw std::runtime_error("fGn covariance Cholesky factorization failed");
        lower_ = llt.matrixL();
    }

    void sample_row(rng::Stream& stream, std::span<double> out) {
        Eigen::VectorXd z(static_cast<Eigen::Index>(n_steps_));
        for (std::size_t j = 0; j < n_steps_; ++j) z(static_cast<Eigen::Index>(j)) = stream.normal();
        Eigen::Map<Eigen::VectorXd> mapped(out.data(), static_cast<Eigen::Index>(n_steps_));
        mapped.noalias() = lower_ * z;
    }

private:
    std::size_t n_steps_;
    Eigen::MatrixXd lower_;
};

/// Standard fGn batch; row i is fully determined by (seed, path_offset + i,
/// method), independent of batch size and evaluation order.
inline FgnBatch sample_fgn(HurstExponent hurst, std::size_t n_steps, std::size_t n_paths,
                           std::uint64_t seed, Method method = Method::circulant,
                           std::uint64_t path_offset = 0) {
    if (n_steps < 1) throw std::invalid_argument("sample_fgn: need n_steps >= 1");
    if (n_paths < 1) throw std::invalid_argument("sample_fgn: need n_paths >= 1");

    FgnBatch batch{RowMatrix(n_paths, n_steps), hurst, SeedLineage{seed, path_offset, method}};
    if (method == Method::circulant) {
        CirculantFgnSampler sampler(hurst, n_steps);
        for (std::size_t i = 0; i < n_paths; ++i) {
            rng::Stream stream(seed, path_offset + i, rng::StreamTag::fgn);
            sampler.sample_row(stream, batch.increments.row(i));
        }
    } else {
        CholeskyFgnSampler sampler(hurst, n_steps);
        for (std::size_t i = 0; i < n_paths; ++i) {
            rng::Stream stream(seed, path_offset + i, rng::StreamTag::fgn);
            sampler.sample_row(stream, batch.increments.row(i));
        }
    }
    return batch;
}

/// Scales unit-step fGn by step^H and accumulates:
/// values[i][k] = step^H * sum_{j<k} increments[i][j], column 0 zero.
inline PathBatch scale_and_cumulate(const FgnBatch& batch, const TimeGrid& grid) {
    if (batch.n_steps() != grid.n_steps)
        throw std::invalid_argument("scale_and_cumulate: batch and grid step counts differ");
    const double scale = std::pow(grid.step, batch.hurst.value());
    PathBatch paths{RowMatrix(batch.n_paths(), grid.n_steps + 1), grid, batch.hurst, batch.lineage};
    for (std::size_t i = 0; i < batch.n_paths(); ++i) {
        const auto in = batch.increments.row(i);
        auto out = paths.values.row(i);
        out[0] = 0.0;
        for (std::size_t k = 0; k < grid.n_steps; ++k) out[k + 1] = out[k] + scale * in[k];
    }
    return paths;
}

inline PathBatch sample_paths(HurstExponent hurst, const TimeGrid& grid, std::size_t n_paths,
                              std::uint64_t seed, Method method = Method::circulant,
                              std::uint64_t path_offset = 0) {
    return scale_and_cumulate(sample_fgn(hurst, grid.n_steps, n_paths, seed, method, path_offset), grid);
}

/// Subsamples every `factor`-th grid value; bit-identical to the fine path at
/// shared times. Coupled multi-step-size runs always coarsen one fine batch
/// instead of re-sampling.
inline PathBatch coarsen(const PathBatch& paths, std::size_t factor) {
    const TimeGrid coarse = paths.grid.coarsened(factor);
    PathBatch out{RowMatrix(paths.n_paths(), coarse.n_steps + 1), coarse, paths.hurst, paths.lineage};
    for (std::size_t i = 0; i < paths.n_paths(); ++i)
        for (std::size_t k = 0; k <= coarse.n_steps; ++k)
            out.values(i, k) = paths.values(i, k * factor);
    return out;
}

// ---------------------------------------------------------------------------
// Binary path dump: "FBMP", version u32, H f64, step f64, n_steps u64,
// n_paths u64, seed u64, then row-major values (native little-endian).

inline constexpr std::uint32_t kFbmpVersion = 1;

inline void write_fbmp(const PathBatch& paths, std::ostream& os) {
    const char magic[4] = {'F', 'B', 'M', 'P'};
    os.write(magic, 4);
    auto put = [&os](const auto& v) { os.write(reinterpret_cast<const char*>(&v), sizeof v); };
    put(kFbmpVersion);
    const double h = paths.hurst.value();
    const double step = paths.grid.step;
    const std::uint64_t m = paths.grid.n_steps;
    const std::uint64_t n = paths.n_paths();
    const std::uint64_t seed = paths.lineage.seed;
    put(h);
    put(step);
    put(m);
    put(n);
    put(seed);
    const auto flat = paths.values.flat();
    os.write(reinterpret_cast<const char*>(flat.data()),
             static_cast<std::streamsize>(flat.size() * sizeof(double)));
    if (!os) throw std::runtime_error("write_fbmp: stream write failed");
}

inline PathBatch read_fbmp(std::istream& is) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "FBMP", 4) != 0)
        throw std::runtime_error("read_fbmp: bad magic");
    auto get = [&is](auto& v) { is.read(reinterpret_cast<char*>(&v), sizeof v); };
    std::uint32_t version = 0;
    get(version);
    if (version != kFbmpVersion) throw std::runtime_error("read_fbmp: unsupported version");
    double h = 0, step = 0;
    std::uint64_t m = 0, n = 0, seed = 0;
    get(h);
    get(step);
    get(m);
    get(n);
    get(seed);
    if (!is || m < 1 || n < 1) throw std::runtime_error("read_fbmp: corrupt header");
    PathBatch paths{RowMatrix(n, m + 1), TimeGrid(step, m, m), HurstExponent(h), SeedLineage{seed, 0, Method::circulant}};
    auto flat = paths.values.flat();
    is.read(reinterpret_cast<char*>(flat.data()),
            static_cast<std::streamsize>(flat.size() * sizeof(double)));
    if (!is) throw std::runtime_error("read_fbmp: truncated payload");
    return paths;
}

}  // namespace mvsdde::fbm
