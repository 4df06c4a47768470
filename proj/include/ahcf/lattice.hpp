#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ahcf {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

// Marks one tensor index slot as covariant (lower) or contravariant (upper).
enum class Slot : std::uint8_t { Lower, Upper };
using Valence = std::vector<Slot>;

// Uniform periodic grid on the flat torus [0, side)^(2n).
// points_per_axis must be even and >= 4 so Fourier collocation is well
// defined; n = 1 and n = 2 are supported.
struct Lattice {
  int n = 1;
  int points_per_axis = 16;
  double side = kTwoPi;

  Lattice() = default;
  Lattice(int n_, int points, double side_ = kTwoPi);

  int dim() const { return 2 * n; }
  std::int64_t num_points() const;
  double spacing() const { return side / points_per_axis; }
  double cell_volume() const;
  std::int64_t axis_stride(int axis) const;  // row-major, last axis fastest

  bool operator==(const Lattice&) const = default;
};

// Sampled real tensor field: one double per grid point per index combination.
// Storage is component-major (each component is a contiguous grid array);
// component index is row-major over the slots.
class Field {
 public:
  Field() = default;
  Field(const Lattice& lat, Valence valence);

  static Field scalar(const Lattice& lat) { return Field(lat, {}); }

  const Lattice& lattice() const { return lat_; }
  const Valence& valence() const { return valence_; }
  int rank() const { return static_cast<int>(valence_.size()); }
  int comps() const { return comps_; }
  std::int64_t points() const { return npts_; }
  std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double* component(int c) { return data_.data() + static_cast<std::int64_t>(c) * npts_; }
  const double* component(int c) const { return data_.data() + static_cast<std::int64_t>(c) * npts_; }

  double& at(std::int64_t p, int c = 0) { return data_[static_cast<std::int64_t>(c) * npts_ + p]; }
  double at(std::int64_t p, int c = 0) const { return data_[static_cast<std::int64_t>(c) * npts_ + p]; }

  int comp2(int i, int j) const { return i * lat_.dim() + j; }
  int comp3(int i, int j, int k) const { return (i * lat_.dim() + j) * lat_.dim() + k; }
  int comp4(int i, int j, int k, int l) const {
    return ((i * lat_.dim() + j) * lat_.dim() + k) * lat_.dim() + l;
  }

  Field& operator+=(const Field& o);
  Field& operator-=(const Field& o);
  Field& operator*=(double a);
  void axpy(double a, const Field& x);  // *this += a * x

  friend Field operator+(Field a, const Field& b) { a += b; return a; }
  friend Field operator-(Field a, const Field& b) { a -= b; return a; }
  friend Field operator*(double a, Field f) { f *= a; return f; }

  double max_abs() const;
  bool all_finite() const;
  void require_finite(const char* who) const;

 private:
  Lattice lat_;
  Valence valence_;
  int comps_ = 0;
  std::int64_t npts_ = 0;
  std::vector<double> data_;
};

// Discrete norms of a field measured against a pointwise metric g.
// sup_by_order[j] / sobolev_l2_by_order[j] refer to the j-th spectral
// gradient stack; order 0 of an endomorphism-valence field uses the
// pointwise g-operator norm, everything else the g-tensor norm.
struct NormReport {
  double l2 = 0.0;
  std::vector<double> sup_by_order;
  std::vector<double> sobolev_l2_by_order;
};

// Exact Fourier-collocation derivative along one axis (Nyquist mode dropped).
Field partial(const Field& f, int axis);

// All partials; prepends one covariant slot.
Field gradient(const Field& f);

// j-fold gradient.
Field gradient_pow(const Field& f, int order);

// Spectral low-pass keeping modes with |m| <= points_per_axis / 3 on every
// axis; applied to polynomial nonlinearities before time stepping.
Field dealias(const Field& f);

// Rectangle-rule integral of a scalar field (exact for band-limited data).
double integrate(const Field& f);

// Mean of one component over the grid (the zero-frequency mode).
double component_mean(const Field& f, int c);

NormReport norms(const Field& f, const Field& metric, int k);
double l2_norm(const Field& f, const Field& metric);
double sup_norm(const Field& f, const Field& metric);

// max over orders 0..k of sup_by_order.
double ck_norm(const NormReport& r, int k);

// The N x N real Fourier differentiation matrix for side length 2*pi
// (scaled by callers for other side lengths). Cached per N.
const std::vector<double>& diff_matrix(int N);

// Cached spectral cut filter matrix (see dealias).
const std::vector<double>& dealias_matrix(int N);

// Coordinates of grid point p (length dim()).
void point_coords(const Lattice& lat, std::int64_t p, double* x);

class Rng;

// Integer frequency band kmin <= |k|_2 <= kmax (k = 0 only when kmin = 0).
struct ModeBand {
  int kmin = 1;
  int kmax = 2;
};

// Random trigonometric polynomial field with every component supported on the
// band, normalized to unit sup of |components|; deterministic in rng state.
Field random_band_limited(const Lattice& lat, const Valence& v, const ModeBand& band, Rng& rng);

}  // namespace ahcf
