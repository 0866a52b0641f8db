#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace vpce {

/// Base of all library errors. `exit_code()` maps onto the CLI contract.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual int exit_code() const noexcept { return 3; }
};

/// Bad input: malformed config, violated precondition, mismatched artifacts.
class ValidationError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 2; }
};

/// Numeric or environment failure at run time (degenerate statistics, no feasible pose).
class NumericError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 3; }
};

class IoError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 4; }
};

/// Dense row-major matrix of doubles. Rows are samples.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return rows_ == 0; }

    std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const noexcept {
        return {data_.data() + i * cols_, cols_};
    }
    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

    const std::vector<double>& data() const noexcept { return data_; }
    std::vector<double>& data() noexcept { return data_; }

    /// Rows `idx` in the given order.
    Matrix select_rows(std::span<const std::size_t> idx) const;

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

double squared_distance(std::span<const double> a, std::span<const double> b) noexcept;
double distance(std::span<const double> a, std::span<const double> b) noexcept;

/// Throws ValidationError naming `what` if any entry is NaN or infinite.
void require_finite(std::span<const double> values, std::string_view what);

/// 64-bit FNV-1a, rendered as 16 lowercase hex digits. Stable across platforms.
std::string fnv1a_hex(std::string_view bytes);

/// Seeded generator with platform-independent draws.
///
/// std::mt19937_64's output sequence is fixed by the standard but the
/// standard distributions are not, so draws are derived from raw bits here.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();
    /// Uniform in [0, 1) with 53 bits of resolution.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [0, n). Rejection sampling, no modulo bias.
    std::size_t below(std::size_t n);
    /// Standard normal via Box-Muller (one value per call; the pair's second half is discarded).
    double normal();

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = below(i);
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

/// Splits [0, n) into `workers` contiguous chunks and runs `fn(begin, end)` on each.
/// Chunk boundaries depend only on (n, workers); callers that write disjoint
/// outputs per index get results independent of the worker count.
void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t, std::size_t)>& fn);

/// Worker count to use when the caller passes 0.
unsigned default_workers() noexcept;

}  // namespace vpce
