#include "matrix.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <string>

#include "errors.hpp"

namespace fsgn {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw_invalid(what);
}

// Orthonormal DCT-II basis for length n: basis(k, t) = s_k cos(pi (2t+1) k / 2n).
// dct(M) = basis * M, idct(M) = basis^T * M. Cached per length; the cache is
// tiny (n <= 75 in every configuration) and shared across threads.
struct BasisPair {
  Matrix forward;   // n x n
  Matrix backward;  // transpose of forward
};

const BasisPair& dct_basis(std::size_t n) {
  static std::mutex mu;
  static std::map<std::size_t, BasisPair> cache;
  std::scoped_lock lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;

  BasisPair pair;
  pair.forward = Matrix(n, n);
  const double dn = static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double scale = k == 0 ? std::sqrt(1.0 / dn) : std::sqrt(2.0 / dn);
    for (std::size_t t = 0; t < n; ++t) {
      pair.forward(k, t) =
          scale * std::cos(std::numbers::pi * (2.0 * t + 1.0) * k / (2.0 * dn));
    }
  }
  pair.backward = transpose(pair.forward);
  return cache.emplace(n, std::move(pair)).first->second;
}

}  // namespace

Matrix transpose(const Matrix& m) {
  Matrix out(m.cols(), m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      out(c, r) = m(r, c);
    }
  }
  return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows(), "matmul: inner dimensions differ (" +
                                    std::to_string(a.cols()) + " vs " +
                                    std::to_string(b.rows()) + ")");
  Matrix out(a.rows(), b.cols());
  // i-k-j order: streams through b and out row-wise.
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* out_row = out.row(i).data();
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const double* b_row = b.row(k).data();
      for (std::size_t j = 0; j < b.cols(); ++j) {
        out_row[j] += aik * b_row[j];
      }
    }
  }
  return out;
}

Matrix affine(const Matrix& m, const Matrix& w, std::span<const double> bias) {
  require(m.cols() == w.rows(), "affine: input width " + std::to_string(m.cols()) +
                                    " does not match weight rows " +
                                    std::to_string(w.rows()));
  require(bias.size() == w.cols(), "affine: bias length " + std::to_string(bias.size()) +
                                       " does not match weight cols " +
                                       std::to_string(w.cols()));
  Matrix out = matmul(m, w);
  for (std::size_t r = 0; r < out.rows(); ++r) {
    double* row = out.row(r).data();
    for (std::size_t c = 0; c < out.cols(); ++c) row[c] += bias[c];
  }
  return out;
}

Matrix dct(const Matrix& m) {
  require(m.rows() >= 1, "dct: empty input");
  return matmul(dct_basis(m.rows()).forward, m);
}

Matrix idct(const Matrix& m) {
  require(m.rows() >= 1, "idct: empty input");
  return matmul(dct_basis(m.rows()).backward, m);
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require(a.same_shape(b), "max_abs_diff: shape mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
  }
  return worst;
}

bool all_finite(const Matrix& m) {
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!std::isfinite(m.data()[i])) return false;
  }
  return true;
}

}  // namespace fsgn
