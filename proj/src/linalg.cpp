#include "pbi/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace pbi {

Matrix Matrix::identity(int n) {
    Matrix m(n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix cholesky(const Matrix& A) {
    const int n = A.n;
    Matrix L(n);
    for (int j = 0; j < n; ++j) {
        double d = A(j, j);
        for (int k = 0; k < j; ++k) d -= L(j, k) * L(j, k);
        if (!(d > 0.0)) throw ConfigError("cholesky: matrix is not positive definite");
        L(j, j) = std::sqrt(d);
        for (int i = j + 1; i < n; ++i) {
            double s = A(i, j);
            for (int k = 0; k < j; ++k) s -= L(i, k) * L(j, k);
            L(i, j) = s / L(j, j);
        }
    }
    return L;
}

void sym_eigen(const Matrix& A, Vec& eigenvalues, Matrix& eigenvectors) {
    const int n = A.n;
    Matrix m = A;
    eigenvectors = Matrix::identity(n);

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) off += m(i, j) * m(i, j);
        if (off < 1e-24) break;

        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                if (std::fabs(m(p, q)) < 1e-300) continue;
                const double theta = (m(q, q) - m(p, p)) / (2.0 * m(p, q));
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double mkp = m(k, p), mkq = m(k, q);
                    m(k, p) = c * mkp - s * mkq;
                    m(k, q) = s * mkp + c * mkq;
                }
                for (int k = 0; k < n; ++k) {
                    const double mpk = m(p, k), mqk = m(q, k);
                    m(p, k) = c * mpk - s * mqk;
                    m(q, k) = s * mpk + c * mqk;
                }
                for (int k = 0; k < n; ++k) {
                    const double vkp = eigenvectors(k, p), vkq = eigenvectors(k, q);
                    eigenvectors(k, p) = c * vkp - s * vkq;
                    eigenvectors(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    eigenvalues.resize(n);
    for (int i = 0; i < n; ++i) eigenvalues[i] = m(i, i);

    // Sort ascending, permuting eigenvector columns alongside.
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return eigenvalues[a] < eigenvalues[b]; });
    Vec ev(n);
    Matrix vecs(n);
    for (int c = 0; c < n; ++c) {
        ev[c] = eigenvalues[order[c]];
        for (int r = 0; r < n; ++r) vecs(r, c) = eigenvectors(r, order[c]);
    }
    eigenvalues = std::move(ev);
    eigenvectors = std::move(vecs);
}

Matrix spd_floor(const Matrix& A, double floor_rel) {
    const int n = A.n;
    double trace = 0.0;
    for (int i = 0; i < n; ++i) trace += A(i, i);
    const double floor = std::max(floor_rel * trace / n, 1e-12);

    Vec ev;
    Matrix vecs;
    sym_eigen(A, ev, vecs);
    if (ev.front() >= floor) return A;

    for (auto& l : ev) l = std::max(l, floor);
    Matrix out(n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            double s = 0.0;
            for (int k = 0; k < n; ++k) s += vecs(i, k) * ev[k] * vecs(j, k);
            out(i, j) = s;
            out(j, i) = s;
        }
    return out;
}

void lower_tri_matvec(const Matrix& L, std::span<const double> z, std::span<double> y) {
    const int n = L.n;
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int j = 0; j <= i; ++j) s += L(i, j) * z[j];
        y[i] = s;
    }
}

}  // namespace pbi
