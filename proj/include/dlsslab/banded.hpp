#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace dlss {

/// N x N matrix with entries only on the cyclic diagonals -2..2.
/// band(d, i) is the entry (i, (i + d) mod N). For N <= 4 diagonals alias
/// and their contributions add up.
class CyclicPentadiagonal {
public:
    explicit CyclicPentadiagonal(std::size_t n) : n_(n), bands_{} {
        for (auto& b : bands_) b.assign(n, 0.0);
    }

    std::size_t size() const noexcept { return n_; }
    double& band(int d, std::size_t i) noexcept { return bands_[static_cast<std::size_t>(d + 2)][i]; }
    double band(int d, std::size_t i) const noexcept { return bands_[static_cast<std::size_t>(d + 2)][i]; }

    /// Row-major dense copy with aliased diagonals summed.
    std::vector<double> dense() const;
    std::vector<double> multiply(const std::vector<double>& x) const;

private:
    std::size_t n_;
    std::array<std::vector<double>, 5> bands_;
};

/// LU with partial pivoting of a (non-cyclic) matrix with two sub- and two
/// super-diagonals; fill extends the upper bandwidth to four.
class BandedLU {
public:
    BandedLU() = default;
    /// rows[i][d + 2] holds entry (i, i + d), d in -2..2; out-of-range entries ignored.
    explicit BandedLU(const std::vector<std::array<double, 5>>& rows);
    void solve_in_place(std::vector<double>& b) const;
    bool singular() const noexcept { return singular_; }

private:
    std::size_t n_ = 0;
    std::vector<std::array<double, 7>> u_;  // row i: columns i-2 .. i+4
    std::vector<std::array<double, 2>> l_;  // multipliers for rows k+1, k+2
    std::vector<std::size_t> piv_;
    bool singular_ = false;
};

/// Solver for a cyclic pentadiagonal system. Banded LU on the non-cyclic
/// part plus a rank-4 Woodbury correction for the corners when N > 16;
/// dense partial-pivoting LU otherwise.
class CyclicPentadiagonalSolver {
public:
    explicit CyclicPentadiagonalSolver(const CyclicPentadiagonal& a, bool force_dense = false);
    std::vector<double> solve(const std::vector<double>& b) const;
    bool singular() const noexcept { return singular_; }

private:
    std::size_t n_;
    bool dense_;
    bool singular_ = false;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
    BandedLU band_;
    std::array<std::size_t, 4> idx_{};
    Eigen::Matrix<double, Eigen::Dynamic, 4> z_;  // B^{-1} P K
    Eigen::Matrix4d cap_inv_;                     // (I + P^T Z)^{-1}
};

/// Dense LU solve of a row-major n x n system.
std::vector<double> dense_solve(const std::vector<double>& a, const std::vector<double>& b, std::size_t n);

}  // namespace dlss
