#include "dlsslab/banded.hpp"

#include <cmath>
#include <utility>

namespace dlss {

std::vector<double> CyclicPentadiagonal::dense() const {
    std::vector<double> a(n_ * n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i)
        for (int d = -2; d <= 2; ++d) {
            const long m = static_cast<long>(n_);
            const std::size_t j = static_cast<std::size_t>(((static_cast<long>(i) + d) % m + m) % m);
            a[i * n_ + j] += band(d, i);
        }
    return a;
}

std::vector<double> CyclicPentadiagonal::multiply(const std::vector<double>& x) const {
    std::vector<double> y(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i)
        for (int d = -2; d <= 2; ++d) {
            const long m = static_cast<long>(n_);
            y[i] += band(d, i) * x[static_cast<std::size_t>(((static_cast<long>(i) + d) % m + m) % m)];
        }
    return y;
}

BandedLU::BandedLU(const std::vector<std::array<double, 5>>& rows) : n_(rows.size()) {
    u_.assign(n_, {});
    l_.assign(n_, {});
    piv_.assign(n_, 0);
    for (std::size_t i = 0; i < n_; ++i)
        for (int d = -2; d <= 2; ++d) {
            const long j = static_cast<long>(i) + d;
            if (j < 0 || j >= static_cast<long>(n_)) continue;
            u_[i][static_cast<std::size_t>(d + 2)] = rows[i][static_cast<std::size_t>(d + 2)];
        }
    // Entry (i, c) lives at u_[i][c - i + 2].
    auto at = [&](std::size_t i, std::size_t c) -> double& { return u_[i][c + 2 - i]; };
    for (std::size_t k = 0; k < n_; ++k) {
        const std::size_t last = std::min(n_ - 1, k + 2);
        std::size_t p = k;
        double best = std::abs(at(k, k));
        for (std::size_t i = k + 1; i <= last; ++i)
            if (std::abs(at(i, k)) > best) {
                best = std::abs(at(i, k));
                p = i;
            }
        piv_[k] = p;
        if (best == 0.0) {
            singular_ = true;
            continue;
        }
        const std::size_t cmax = std::min(n_ - 1, k + 4);
        if (p != k)
            for (std::size_t c = k; c <= cmax; ++c) {
                // Row p has no entries beyond p + 2 before the swap.
                if (c > p + 4) break;
                std::swap(at(k, c), at(p, c));
            }
        const double pivot = at(k, k);
        for (std::size_t i = k + 1; i <= last; ++i) {
            const double m = at(i, k) / pivot;
            l_[k][i - k - 1] = m;
            at(i, k) = 0.0;
            if (m == 0.0) continue;
            for (std::size_t c = k + 1; c <= cmax; ++c) {
                if (c + 2 < i || c > i + 4) continue;
                at(i, c) -= m * at(k, c);
            }
        }
    }
}

void BandedLU::solve_in_place(std::vector<double>& b) const {
    for (std::size_t k = 0; k < n_; ++k) {
        if (piv_[k] != k) std::swap(b[k], b[piv_[k]]);
        const std::size_t last = std::min(n_ - 1, k + 2);
        for (std::size_t i = k + 1; i <= last; ++i) b[i] -= l_[k][i - k - 1] * b[k];
    }
    for (std::size_t k = n_; k-- > 0;) {
        double s = b[k];
        const std::size_t cmax = std::min(n_ - 1, k + 4);
        for (std::size_t c = k + 1; c <= cmax; ++c) s -= u_[k][c + 2 - k] * b[c];
        b[k] = s / u_[k][2];
    }
}

CyclicPentadiagonalSolver::CyclicPentadiagonalSolver(const CyclicPentadiagonal& a, bool force_dense)
    : n_(a.size()), dense_(force_dense || a.size() <= 16) {
    const std::size_t n = n_;
    if (dense_) {
        const std::vector<double> d = a.dense();
        Eigen::MatrixXd m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = d[i * n + j];
        lu_.compute(m);
        singular_ = !(std::abs(lu_.determinant()) > 0.0);
        return;
    }
    std::vector<std::array<double, 5>> rows(n);
    idx_ = {0, 1, n - 2, n - 1};
    Eigen::Matrix4d k = Eigen::Matrix4d::Zero();
    auto slot = [&](std::size_t i) {
        for (int s = 0; s < 4; ++s)
            if (idx_[static_cast<std::size_t>(s)] == i) return s;
        return -1;
    };
    for (std::size_t i = 0; i < n; ++i)
        for (int d = -2; d <= 2; ++d) {
            const long j = static_cast<long>(i) + d;
            const double v = a.band(d, i);
            if (j >= 0 && j < static_cast<long>(n)) {
                rows[i][static_cast<std::size_t>(d + 2)] = v;
            } else {
                const std::size_t jw = static_cast<std::size_t>((j + static_cast<long>(n)) % static_cast<long>(n));
                k(slot(i), slot(jw)) += v;
            }
        }
    band_ = BandedLU(rows);
    singular_ = band_.singular();
    if (singular_) return;
    // Z = B^{-1} P K ; cap = I + P^T Z.
    Eigen::Matrix<double, Eigen::Dynamic, 4> bp(static_cast<Eigen::Index>(n), 4);
    for (int s = 0; s < 4; ++s) {
        std::vector<double> e(n, 0.0);
        e[idx_[static_cast<std::size_t>(s)]] = 1.0;
        band_.solve_in_place(e);
        for (std::size_t i = 0; i < n; ++i) bp(static_cast<Eigen::Index>(i), s) = e[i];
    }
    z_ = bp * k;
    Eigen::Matrix4d cap = Eigen::Matrix4d::Identity();
    for (int r = 0; r < 4; ++r) cap.row(r) += z_.row(static_cast<Eigen::Index>(idx_[static_cast<std::size_t>(r)]));
    Eigen::FullPivLU<Eigen::Matrix4d> clu(cap);
    if (!clu.isInvertible()) {
        singular_ = true;
        return;
    }
    cap_inv_ = clu.inverse();
}

std::vector<double> CyclicPentadiagonalSolver::solve(const std::vector<double>& b) const {
    const std::size_t n = n_;
    if (dense_) {
        Eigen::Map<const Eigen::VectorXd> rhs(b.data(), static_cast<Eigen::Index>(n));
        const Eigen::VectorXd x = lu_.solve(rhs);
        return std::vector<double>(x.data(), x.data() + n);
    }
    std::vector<double> y(b);
    band_.solve_in_place(y);
    Eigen::Vector4d py;
    for (int r = 0; r < 4; ++r) py(r) = y[idx_[static_cast<std::size_t>(r)]];
    const Eigen::Vector4d c = cap_inv_ * py;
    for (std::size_t i = 0; i < n; ++i) y[i] -= z_.row(static_cast<Eigen::Index>(i)).dot(c);
    return y;
}

std::vector<double> dense_solve(const std::vector<double>& a, const std::vector<double>& b, std::size_t n) {
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> m(
        a.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    Eigen::Map<const Eigen::VectorXd> rhs(b.data(), static_cast<Eigen::Index>(n));
    const Eigen::VectorXd x = m.partialPivLu().solve(rhs);
    return std::vector<double>(x.data(), x.data() + n);
}

}  // namespace dlss
