// SPDX-License-Identifier: Apache-2.0
//
// fdxsic: digital self-interference cancellation simulation library
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "core.hpp"

namespace fdxsic {

using cvec = std::vector<cplx>;

struct size_mismatch : error {
    using error::error;
};
struct not_hermitian : error {
    using error::error;
};
struct no_convergence : error {
    using error::error;
};
struct singular_matrix : error {
    using error::error;
};
struct non_positive_noise : error {
    using error::error;
};

/// Dense row-major complex matrix. Sizes in this library stay at or below the
/// antenna count, so no attempt is made at blocking or sparsity.
class cmat {
public:
    cmat() = default;

    cmat(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

    static cmat identity(std::size_t n) {
        cmat m(n, n);
        for (std::size_t i = 0; i < n; ++i)
            m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    cplx& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    const cplx& operator()(std::size_t i, std::size_t j) const noexcept {
        return data_[i * cols_ + j];
    }

    const std::vector<cplx>& data() const noexcept { return data_; }
    std::vector<cplx>& data() noexcept { return data_; }

    cvec col(std::size_t j) const {
        cvec v(rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            v[i] = (*this)(i, j);
        return v;
    }

    void set_col(std::size_t j, const cvec& v) {
        if (v.size() != rows_)
            throw size_mismatch("set_col: length " + std::to_string(v.size()) + " into " +
                                std::to_string(rows_) + " rows");
        for (std::size_t i = 0; i < rows_; ++i)
            (*this)(i, j) = v[i];
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<cplx> data_;
};

inline cmat adjoint(const cmat& a) {
    cmat r(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            r(j, i) = std::conj(a(i, j));
    return r;
}

inline cmat matmul(const cmat& a, const cmat& b) {
    if (a.cols() != b.rows())
        throw size_mismatch("matmul: " + std::to_string(a.cols()) + " vs " +
                            std::to_string(b.rows()));
    cmat r(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const cplx aik = a(i, k);
            for (std::size_t j = 0; j < b.cols(); ++j)
                r(i, j) += aik * b(k, j);
        }
    return r;
}

inline cvec matvec(const cmat& a, const cvec& x) {
    if (a.cols() != x.size())
        throw size_mismatch("matvec: " + std::to_string(a.cols()) + " vs " +
                            std::to_string(x.size()));
    cvec r(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        cplx acc = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j)
            acc += a(i, j) * x[j];
        r[i] = acc;
    }
    return r;
}

/// Inner product with conjugation on the first argument.
inline cplx vdot(const cvec& a, const cvec& b) {
    if (a.size() != b.size())
        throw size_mismatch("vdot: " + std::to_string(a.size()) + " vs " +
                            std::to_string(b.size()));
    cplx acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        acc += std::conj(a[i]) * b[i];
    return acc;
}

inline double norm2(const cvec& a) { return std::sqrt(std::real(vdot(a, a))); }

inline cplx trace(const cmat& a) {
    cplx t = 0.0;
    for (std::size_t i = 0; i < std::min(a.rows(), a.cols()); ++i)
        t += a(i, i);
    return t;
}

inline double frobenius_norm(const cmat& a) {
    double s = 0.0;
    for (const cplx& z : a.data())
        s += std::norm(z);
    return std::sqrt(s);
}

struct evd_result {
    std::vector<double> eigenvalues; // descending
    cmat eigenvectors;               // columns match eigenvalue order
};

namespace detail {

struct lu_factor {
    cmat lu;
    std::vector<std::size_t> perm;
};

inline lu_factor lu_decompose(const cmat& a) {
    if (a.rows() != a.cols())
        throw size_mismatch("lu_decompose: matrix not square");
    const std::size_t n = a.rows();
    lu_factor f{a, std::vector<std::size_t>(n)};
    std::iota(f.perm.begin(), f.perm.end(), std::size_t{0});
    const double pivot_floor = 1e-14 * frobenius_norm(a);

    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        double best = std::abs(f.lu(k, k));
        for (std::size_t i = k + 1; i < n; ++i) {
            const double m = std::abs(f.lu(i, k));
            if (m > best) {
                best = m;
                piv = i;
            }
        }
        if (best <= pivot_floor)
            throw singular_matrix(detail::strprintf(
                "lu_decompose: pivot %.3e below floor %.3e at column %zu", best, pivot_floor, k));
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j)
                std::swap(f.lu(k, j), f.lu(piv, j));
            std::swap(f.perm[k], f.perm[piv]);
        }
        const cplx inv_piv = 1.0 / f.lu(k, k);
        for (std::size_t i = k + 1; i < n; ++i) {
            const cplx m = f.lu(i, k) * inv_piv;
            f.lu(i, k) = m;
            for (std::size_t j = k + 1; j < n; ++j)
                f.lu(i, j) -= m * f.lu(k, j);
        }
    }
    return f;
}

inline cvec lu_solve(const lu_factor& f, const cvec& b) {
    const std::size_t n = f.lu.rows();
    if (b.size() != n)
        throw size_mismatch("lu_solve: rhs length mismatch");
    cvec x(n);
    for (std::size_t i = 0; i < n; ++i) {
        cplx acc = b[f.perm[i]];
        for (std::size_t j = 0; j < i; ++j)
            acc -= f.lu(i, j) * x[j];
        x[i] = acc;
    }
    for (std::size_t ii = n; ii-- > 0;) {
        cplx acc = x[ii];
        for (std::size_t j = ii + 1; j < n; ++j)
            acc -= f.lu(ii, j) * x[j];
        x[ii] = acc / f.lu(ii, ii);
    }
    return x;
}

} // namespace detail

/// Solve a·x = b by LU with partial pivoting.
inline cvec solve(const cmat& a, const cvec& b) {
    return detail::lu_solve(detail::lu_decompose(a), b);
}

/// Column-wise solve a·X = B.
inline cmat solve(const cmat& a, const cmat& b) {
    if (a.rows() != b.rows())
        throw size_mismatch("solve: rhs row count mismatch");
    const detail::lu_factor f = detail::lu_decompose(a);
    cmat x(b.rows(), b.cols());
    for (std::size_t j = 0; j < b.cols(); ++j)
        x.set_col(j, detail::lu_solve(f, b.col(j)));
    return x;
}

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
/// Unconditionally convergent and exact enough for the array sizes used here.
inline evd_result hermitian_evd(const cmat& a_in) {
    if (a_in.rows() != a_in.cols())
        throw size_mismatch("hermitian_evd: matrix not square");
    const std::size_t n = a_in.rows();
    const double scale = frobenius_norm(a_in);

    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j)
            if (std::abs(a_in(i, j) - std::conj(a_in(j, i))) > 1e-10 * std::max(scale, 1e-300))
                throw not_hermitian(detail::strprintf(
                    "hermitian_evd: entry (%zu,%zu) breaks symmetry beyond tolerance", i, j));

    cmat a = a_in;
    // symmetrize exactly so rotation updates preserve the structure
    for (std::size_t i = 0; i < n; ++i) {
        a(i, i) = std::real(a(i, i));
        for (std::size_t j = i + 1; j < n; ++j) {
            const cplx v = 0.5 * (a(i, j) + std::conj(a(j, i)));
            a(i, j) = v;
            a(j, i) = std::conj(v);
        }
    }
    cmat q = cmat::identity(n);

    const auto off_norm = [&a, n]() {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                s += 2.0 * std::norm(a(i, j));
        return std::sqrt(s);
    };

    const int max_sweeps = 60;
    int sweep = 0;
    while (off_norm() > 1e-13 * std::max(scale, 1e-300)) {
        if (++sweep > max_sweeps)
            throw no_convergence("hermitian_evd: sweep cap reached");
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t qq = p + 1; qq < n; ++qq) {
                const cplx g = a(p, qq);
                const double ga = std::abs(g);
                if (ga <= 1e-300)
                    continue;
                const cplx phase = g / ga;
                const double theta = (std::real(a(p, p)) - std::real(a(qq, qq))) / (2.0 * ga);
                const double sgn = theta >= 0.0 ? 1.0 : -1.0;
                const double t = sgn / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;

                a(p, p) = std::real(a(p, p)) + t * ga;
                a(qq, qq) = std::real(a(qq, qq)) - t * ga;
                a(p, qq) = 0.0;
                a(qq, p) = 0.0;
                for (std::size_t r = 0; r < n; ++r) {
                    if (r == p || r == qq)
                        continue;
                    const cplx arp = a(r, p);
                    const cplx arq = a(r, qq);
                    a(r, p) = c * arp + s * std::conj(phase) * arq;
                    a(r, qq) = -s * phase * arp + c * arq;
                    a(p, r) = std::conj(a(r, p));
                    a(qq, r) = std::conj(a(r, qq));
                }
                for (std::size_t r = 0; r < n; ++r) {
                    const cplx qrp = q(r, p);
                    const cplx qrq = q(r, qq);
                    q(r, p) = c * qrp + s * std::conj(phase) * qrq;
                    q(r, qq) = -s * phase * qrp + c * qrq;
                }
            }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> diag(n);
    for (std::size_t i = 0; i < n; ++i)
        diag[i] = std::real(a(i, i));
    std::stable_sort(order.begin(), order.end(),
                     [&diag](std::size_t i, std::size_t j) { return diag[i] > diag[j]; });

    evd_result out;
    out.eigenvalues.resize(n);
    out.eigenvectors = cmat(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        out.eigenvalues[j] = diag[order[j]];
        cvec v = q.col(order[j]);
        // fix the free phase so repeated runs give identical vectors
        std::size_t lead = 0;
        double best = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (std::abs(v[i]) > best) {
                best = std::abs(v[i]);
                lead = i;
            }
        if (best > 0.0) {
            const cplx rot = std::conj(v[lead]) / best;
            for (cplx& z : v)
                z *= rot;
        }
        out.eigenvectors.set_col(j, v);
    }
    return out;
}

/// Inverse of sigma2·I + sum_l p_l·v_l·v_lᴴ built by rank-one updates, so the
/// cost stays linear in the path count instead of a fresh dense inversion.
inline cmat inv_by_lemma(double sigma2, const cmat& v_int, const std::vector<double>& p_int) {
    if (!(sigma2 > 0.0))
        throw non_positive_noise(detail::strprintf("inv_by_lemma: sigma2 = %g", sigma2));
    if (v_int.cols() != p_int.size())
        throw size_mismatch("inv_by_lemma: column/power count mismatch");
    const std::size_t n = v_int.rows();
    cmat b(n, n);
    for (std::size_t i = 0; i < n; ++i)
        b(i, i) = 1.0 / sigma2;

    for (std::size_t l = 0; l < p_int.size(); ++l) {
        const double p = p_int[l];
        if (p == 0.0)
            continue;
        const cvec v = v_int.col(l);
        const cvec u = matvec(b, v);
        const double denom = 1.0 + p * std::real(vdot(v, u));
        const double c = p / denom;
        for (std::size_t i = 0; i < n; ++i) {
            b(i, i) -= c * std::norm(u[i]);
            b(i, i) = std::real(b(i, i));
            for (std::size_t j = i + 1; j < n; ++j) {
                const cplx upd = c * u[i] * std::conj(u[j]);
                b(i, j) -= upd;
                b(j, i) = std::conj(b(i, j));
            }
        }
    }
    return b;
}

} // namespace fdxsic
