#include "ahcf/lattice.hpp"
#include "ahcf/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <mutex>

namespace ahcf {

namespace {

// Small dense matrices bounded by the maximal real dimension (4).
using MatD = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 4, 4>;

std::int64_t ipow(std::int64_t b, int e) {
  std::int64_t r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

}  // namespace

Lattice::Lattice(int n_, int points, double side_) : n(n_), points_per_axis(points), side(side_) {
  if (n < 1 || n > 2) throw Error("Lattice: complex dimension n must be 1 or 2");
  if (points_per_axis < 4 || points_per_axis % 2 != 0)
    throw Error("Lattice: points_per_axis must be even and >= 4");
  if (!(side > 0.0)) throw Error("Lattice: side length must be positive");
}

std::int64_t Lattice::num_points() const { return ipow(points_per_axis, dim()); }

double Lattice::cell_volume() const {
  double v = 1.0;
  for (int a = 0; a < dim(); ++a) v *= spacing();
  return v;
}

std::int64_t Lattice::axis_stride(int axis) const {
  return ipow(points_per_axis, dim() - 1 - axis);
}

Field::Field(const Lattice& lat, Valence valence)
    : lat_(lat), valence_(std::move(valence)), npts_(lat.num_points()) {
  comps_ = 1;
  for (std::size_t s = 0; s < valence_.size(); ++s) comps_ *= lat_.dim();
  data_.assign(static_cast<std::size_t>(comps_) * npts_, 0.0);
}

Field& Field::operator+=(const Field& o) {
  if (o.size() != size()) throw Error("Field: shape mismatch in +=");
  for (std::int64_t i = 0; i < size(); ++i) data_[i] += o.data_[i];
  return *this;
}

Field& Field::operator-=(const Field& o) {
  if (o.size() != size()) throw Error("Field: shape mismatch in -=");
  for (std::int64_t i = 0; i < size(); ++i) data_[i] -= o.data_[i];
  return *this;
}

Field& Field::operator*=(double a) {
  for (auto& v : data_) v *= a;
  return *this;
}

void Field::axpy(double a, const Field& x) {
  if (x.size() != size()) throw Error("Field: shape mismatch in axpy");
  for (std::int64_t i = 0; i < size(); ++i) data_[i] += a * x.data_[i];
}

double Field::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

bool Field::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

void Field::require_finite(const char* who) const {
  if (!all_finite()) throw Error(std::string(who) + ": non-finite values in field");
}

const std::vector<double>& diff_matrix(int N) {
  static std::map<int, std::vector<double>> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(N);
  if (it != cache.end()) return it->second;

  // Trefethen's collocation derivative for an even periodic grid on [0, 2pi):
  // D_jk = 0.5 (-1)^(j-k) cot((j-k) h / 2), zero diagonal.
  std::vector<double> D(static_cast<std::size_t>(N) * N, 0.0);
  const double h = kTwoPi / N;
  for (int j = 0; j < N; ++j) {
    for (int k = 0; k < N; ++k) {
      if (j == k) continue;
      const int m = j - k;
      const double sgn = (m % 2 == 0) ? 1.0 : -1.0;
      D[static_cast<std::size_t>(j) * N + k] = 0.5 * sgn / std::tan(0.5 * m * h);
    }
  }
  return cache.emplace(N, std::move(D)).first->second;
}

const std::vector<double>& dealias_matrix(int N) {
  static std::map<int, std::vector<double>> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(N);
  if (it != cache.end()) return it->second;

  // Real circulant filter F^-1 diag(mask) F with mask keeping |m| <= N/3.
  const int cut = N / 3;
  std::vector<double> C(static_cast<std::size_t>(N) * N, 0.0);
  for (int j = 0; j < N; ++j) {
    for (int k = 0; k < N; ++k) {
      double s = 0.0;
      for (int m = 0; m <= N / 2; ++m) {
        if (m > cut) continue;
        const double c = std::cos(kTwoPi * m * (j - k) / N);
        // modes m and N-m pair up; m = 0 and Nyquist appear once
        s += (m == 0 || m == N / 2) ? c : 2.0 * c;
      }
      C[static_cast<std::size_t>(j) * N + k] = s / N;
    }
  }
  return cache.emplace(N, std::move(C)).first->second;
}

namespace {

// out = M * in applied to every grid line along `axis`, for one component.
void apply_axis_matrix(const std::vector<double>& M, const Lattice& lat, int axis,
                       const double* in, double* out) {
  const int N = lat.points_per_axis;
  const std::int64_t stride = lat.axis_stride(axis);
  const std::int64_t outer = lat.num_points() / (static_cast<std::int64_t>(N) * stride);
  double buf[64], res[64];
  for (std::int64_t o = 0; o < outer; ++o) {
    const std::int64_t block = o * N * stride;
    for (std::int64_t i = 0; i < stride; ++i) {
      const std::int64_t base = block + i;
      for (int j = 0; j < N; ++j) buf[j] = in[base + j * stride];
      for (int j = 0; j < N; ++j) {
        const double* row = M.data() + static_cast<std::size_t>(j) * N;
        double acc = 0.0;
        for (int k = 0; k < N; ++k) acc += row[k] * buf[k];
        res[j] = acc;
      }
      for (int j = 0; j < N; ++j) out[base + j * stride] = res[j];
    }
  }
}

}  // namespace

Field partial(const Field& f, int axis) {
  if (axis < 0 || axis >= f.lattice().dim()) throw Error("partial: axis out of range");
  f.require_finite("partial");
  const Lattice& lat = f.lattice();
  const double scale = kTwoPi / lat.side;
  Field out(lat, f.valence());
  const auto& D = diff_matrix(lat.points_per_axis);
  for (int c = 0; c < f.comps(); ++c) {
    apply_axis_matrix(D, lat, axis, f.component(c), out.component(c));
  }
  if (scale != 1.0) out *= scale;
  return out;
}

Field gradient(const Field& f) {
  const Lattice& lat = f.lattice();
  Valence v;
  v.reserve(f.valence().size() + 1);
  v.push_back(Slot::Lower);
  v.insert(v.end(), f.valence().begin(), f.valence().end());
  Field out(lat, v);
  for (int a = 0; a < lat.dim(); ++a) {
    Field da = partial(f, a);
    for (int c = 0; c < f.comps(); ++c) {
      const double* src = da.component(c);
      double* dst = out.component(a * f.comps() + c);
      std::copy(src, src + lat.num_points(), dst);
    }
  }
  return out;
}

Field gradient_pow(const Field& f, int order) {
  Field g = f;
  for (int j = 0; j < order; ++j) g = gradient(g);
  return g;
}

Field dealias(const Field& f) {
  const Lattice& lat = f.lattice();
  const auto& C = dealias_matrix(lat.points_per_axis);
  Field out = f;
  Field tmp(lat, f.valence());
  for (int a = 0; a < lat.dim(); ++a) {
    for (int c = 0; c < f.comps(); ++c) {
      apply_axis_matrix(C, lat, a, out.component(c), tmp.component(c));
    }
    std::swap(out, tmp);
  }
  return out;
}

double integrate(const Field& f) {
  if (f.rank() != 0) throw Error("integrate: field must be scalar-valued");
  f.require_finite("integrate");
  double s = 0.0;
  const double* d = f.data();
  for (std::int64_t p = 0; p < f.points(); ++p) s += d[p];
  return s * f.lattice().cell_volume();
}

double component_mean(const Field& f, int c) {
  const double* d = f.component(c);
  double s = 0.0;
  for (std::int64_t p = 0; p < f.points(); ++p) s += d[p];
  return s / static_cast<double>(f.points());
}

namespace {

void check_metric(const Field& g) {
  const int d = g.lattice().dim();
  if (g.rank() != 2 || g.valence()[0] != Slot::Lower || g.valence()[1] != Slot::Lower)
    throw Error("norms: metric must be a (0,2) field");
  (void)d;
}

MatD mat_at(const Field& f, std::int64_t p) {
  const int d = f.lattice().dim();
  MatD m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = f.at(p, f.comp2(i, j));
  return m;
}

// Pointwise |T|_g^2: contract T with itself, each lower slot through g^-1 and
// each upper slot through g.
double tensor_norm2_at(const Field& f, std::int64_t p, const MatD& g, const MatD& ginv) {
  const int d = f.lattice().dim();
  const int r = f.rank();
  const int nc = f.comps();
  if (r == 0) {
    const double v = f.at(p, 0);
    return v * v;
  }
  // dualize: U_I = sum_J (prod_s m_s[I_s, J_s]) T_J, with m = ginv for Lower,
  // g for Upper; applied one slot at a time.
  static thread_local std::vector<double> cur, nxt;
  cur.resize(nc);
  nxt.resize(nc);
  for (int c = 0; c < nc; ++c) cur[c] = f.at(p, c);
  int inner = nc / d;  // stride of the slot being contracted
  for (int s = 0; s < r; ++s) {
    const MatD& m = (f.valence()[s] == Slot::Lower) ? ginv : g;
    // slot s has stride d^(r-1-s) in the row-major component index
    const int outer = nc / (inner * d);
    for (int o = 0; o < outer; ++o) {
      for (int i = 0; i < inner; ++i) {
        const int base = o * d * inner + i;
        for (int a = 0; a < d; ++a) {
          double acc = 0.0;
          for (int b = 0; b < d; ++b) acc += m(a, b) * cur[base + b * inner];
          nxt[base + a * inner] = acc;
        }
      }
    }
    std::swap(cur, nxt);
    inner /= d;
  }
  double s2 = 0.0;
  for (int c = 0; c < nc; ++c) s2 += f.at(p, c) * cur[c];
  return s2;
}

bool is_endo_valence(const Valence& v) {
  return v.size() == 2 && v[0] == Slot::Upper && v[1] == Slot::Lower;
}

// Operator norm of the endomorphism K at p with respect to g: the largest
// singular value of G^(1/2) K G^(-1/2).
double operator_norm_at(const Field& K, std::int64_t p, const MatD& g) {
  const int d = K.lattice().dim();
  MatD k(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) k(i, j) = K.at(p, K.comp2(i, j));
  Eigen::SelfAdjointEigenSolver<MatD> es(g);
  MatD ghalf = es.operatorSqrt();
  MatD ghalfinv = es.operatorInverseSqrt();
  MatD b = ghalf * k * ghalfinv;
  Eigen::JacobiSVD<MatD> svd(b);
  return svd.singularValues()(0);
}

}  // namespace

NormReport norms(const Field& f, const Field& metric, int k) {
  if (k < 0) throw Error("norms: k must be >= 0");
  check_metric(metric);
  f.require_finite("norms");
  const Lattice& lat = f.lattice();
  const std::int64_t npts = lat.num_points();

  // precompute pointwise metric inverses, rejecting non-positive-definite g
  std::vector<MatD> gs(npts), ginvs(npts);
  for (std::int64_t p = 0; p < npts; ++p) {
    MatD g = mat_at(metric, p);
    Eigen::LLT<MatD> llt(g);
    if (llt.info() != Eigen::Success) throw Error("norms: metric not positive definite");
    gs[p] = g;
    ginvs[p] = g.inverse();
  }

  NormReport rep;
  rep.sup_by_order.resize(k + 1, 0.0);
  rep.sobolev_l2_by_order.resize(k + 1, 0.0);

  Field stack = f;
  for (int order = 0; order <= k; ++order) {
    if (order > 0) stack = gradient(stack);
    double sup = 0.0, acc = 0.0;
    const bool op_norm = (order == 0) && is_endo_valence(f.valence());
    for (std::int64_t p = 0; p < npts; ++p) {
      const double n2 = tensor_norm2_at(stack, p, gs[p], ginvs[p]);
      acc += n2 * std::sqrt(gs[p].determinant());
      const double psup = op_norm ? operator_norm_at(f, p, gs[p]) : std::sqrt(std::max(0.0, n2));
      sup = std::max(sup, psup);
    }
    rep.sup_by_order[order] = sup;
    rep.sobolev_l2_by_order[order] = std::sqrt(std::max(0.0, acc * lat.cell_volume()));
  }
  rep.l2 = rep.sobolev_l2_by_order[0];
  return rep;
}

double l2_norm(const Field& f, const Field& metric) {
  return norms(f, metric, 0).l2;
}

double sup_norm(const Field& f, const Field& metric) {
  return norms(f, metric, 0).sup_by_order[0];
}

double ck_norm(const NormReport& r, int k) {
  double m = 0.0;
  for (int j = 0; j <= k && j < static_cast<int>(r.sup_by_order.size()); ++j)
    m = std::max(m, r.sup_by_order[j]);
  return m;
}

void point_coords(const Lattice& lat, std::int64_t p, double* x) {
  const int N = lat.points_per_axis;
  for (int a = lat.dim() - 1; a >= 0; --a) {
    x[a] = (p % N) * lat.spacing();
    p /= N;
  }
}

namespace {

// Integer wave vectors in the band, one per +/- pair (first nonzero > 0).
std::vector<std::array<int, 4>> band_modes(const Lattice& lat, const ModeBand& band) {
  std::vector<std::array<int, 4>> modes;
  const int d = lat.dim();
  const int km = band.kmax;
  std::array<int, 4> k{0, 0, 0, 0};
  auto rec = [&](auto&& self, int axis) -> void {
    if (axis == d) {
      long n2 = 0;
      for (int a = 0; a < d; ++a) n2 += static_cast<long>(k[a]) * k[a];
      if (n2 > static_cast<long>(km) * km) return;
      if (n2 < static_cast<long>(band.kmin) * band.kmin) return;
      if (n2 == 0) {
        modes.push_back(k);
        return;
      }
      for (int a = 0; a < d; ++a) {
        if (k[a] > 0) {
          modes.push_back(k);
          return;
        }
        if (k[a] < 0) return;
      }
      return;
    }
    for (int v = -km; v <= km; ++v) {
      k[axis] = v;
      self(self, axis + 1);
    }
    k[axis] = 0;
  };
  rec(rec, 0);
  return modes;
}

}  // namespace

Field random_band_limited(const Lattice& lat, const Valence& v, const ModeBand& band, Rng& rng) {
  if (band.kmax * 2 >= lat.points_per_axis)
    throw Error("random_band_limited: band exceeds grid resolution");
  Field f(lat, v);
  const auto modes = band_modes(lat, band);
  if (modes.empty()) throw Error("random_band_limited: empty mode band");
  const int d = lat.dim();
  const double freq = kTwoPi / lat.side;
  std::vector<double> x(d);
  for (int c = 0; c < f.comps(); ++c) {
    double* dst = f.component(c);
    for (const auto& m : modes) {
      const double a = rng.normal();
      const double b = rng.normal();
      bool zero_mode = true;
      for (int ax = 0; ax < d; ++ax) zero_mode = zero_mode && m[ax] == 0;
      for (std::int64_t p = 0; p < f.points(); ++p) {
        point_coords(lat, p, x.data());
        double phase = 0.0;
        for (int ax = 0; ax < d; ++ax) phase += freq * m[ax] * x[ax];
        dst[p] += zero_mode ? a : (a * std::cos(phase) + b * std::sin(phase));
      }
    }
  }
  const double m = f.max_abs();
  if (m > 0.0) f *= 1.0 / m;
  return f;
}

}  // namespace ahcf
