#include "sisrd/grid.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>

namespace sisrd {

DomainSpec DomainSpec::interval(double a, double b, std::size_t nodes) {
  DomainSpec s;
  s.kind = DomainKind::Interval;
  s.x0 = a;
  s.x1 = b;
  s.nx = nodes;
  s.ny = 1;
  return s;
}

DomainSpec DomainSpec::rectangle(double xa, double xb, double ya, double yb, std::size_t nodes_x,
                                 std::size_t nodes_y) {
  DomainSpec s;
  s.kind = DomainKind::Rectangle;
  s.x0 = xa;
  s.x1 = xb;
  s.y0 = ya;
  s.y1 = yb;
  s.nx = nodes_x;
  s.ny = nodes_y;
  return s;
}

DomainSpec DomainSpec::disk(double cx, double cy, double r, std::size_t cells_across) {
  DomainSpec s;
  s.kind = DomainKind::Disk;
  s.cx = cx;
  s.cy = cy;
  s.radius = r;
  s.nx = cells_across;
  s.ny = cells_across;
  return s;
}

DomainSpec DomainSpec::disk_with_cell(double cx, double cy, double r, double cell) {
  if (!(cell > 0.0)) throw ConfigError("disk cell size must be positive");
  auto n = static_cast<std::size_t>(std::lround(2.0 * r / cell));
  return disk(cx, cy, r, n);
}

void DomainSpec::validate() const {
  switch (kind) {
    case DomainKind::Interval:
      if (!(x1 > x0)) throw ConfigError("interval must have x1 > x0");
      if (nx < 3) throw ConfigError("resolution too small: interval needs at least 3 nodes");
      break;
    case DomainKind::Rectangle:
      if (!(x1 > x0) || !(y1 > y0)) throw ConfigError("rectangle extents must be positive");
      if (nx < 3 || ny < 3)
        throw ConfigError("resolution too small: rectangle needs at least 3 nodes per axis");
      break;
    case DomainKind::Disk:
      if (!(radius > 0.0)) throw ConfigError("disk radius must be positive");
      if (nx < 3) throw ConfigError("resolution too small: disk needs at least 3 cells across");
      break;
  }
  for (double v : {x0, x1, y0, y1, cx, cy, radius})
    if (!std::isfinite(v)) throw ConfigError("domain extents must be finite");
}

std::ptrdiff_t DiscreteDomain::node_at(std::ptrdiff_t i, std::ptrdiff_t j) const {
  if (i < 0 || j < 0 || i >= static_cast<std::ptrdiff_t>(lat_nx_) ||
      j >= static_cast<std::ptrdiff_t>(lat_ny_))
    return kAbsent;
  return lattice_[static_cast<std::size_t>(j) * lat_nx_ + static_cast<std::size_t>(i)];
}

double DiscreteDomain::continuum_measure() const {
  switch (spec_.kind) {
    case DomainKind::Interval: return spec_.x1 - spec_.x0;
    case DomainKind::Rectangle: return (spec_.x1 - spec_.x0) * (spec_.y1 - spec_.y0);
    case DomainKind::Disk: return std::numbers::pi * spec_.radius * spec_.radius;
  }
  return 0.0;
}

std::size_t DiscreteDomain::nearest_node(Point p) const {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < coords_.size(); ++k) {
    double dx = coords_[k].x - p.x;
    double dy = coords_[k].y - p.y;
    double d = dx * dx + dy * dy;
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

DomainPtr build_domain(const DomainSpec& spec) {
  spec.validate();
  auto dom = std::shared_ptr<DiscreteDomain>(new DiscreteDomain());
  DiscreteDomain& d = *dom;
  d.spec_ = spec;

  auto add_node = [&](std::size_t i, std::size_t j, Point p, double w) {
    d.lattice_[j * d.lat_nx_ + i] = static_cast<std::ptrdiff_t>(d.coords_.size());
    d.coords_.push_back(p);
    d.measure_.push_back(w);
    d.lat_i_.push_back(i);
    d.lat_j_.push_back(j);
  };

  // Trapezoid weights along one axis.
  auto axis_weights = [](std::size_t n, double h) {
    std::vector<double> w(n, h);
    w.front() = 0.5 * h;
    w.back() = 0.5 * h;
    return w;
  };
  auto axis_coord = [](double a, double b, std::size_t n, std::size_t i) {
    if (i + 1 == n) return b;
    return a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  };

  switch (spec.kind) {
    case DomainKind::Interval: {
      d.lat_nx_ = spec.nx;
      d.lat_ny_ = 1;
      d.hx_ = (spec.x1 - spec.x0) / static_cast<double>(spec.nx - 1);
      d.hy_ = 0.0;
      d.lattice_.assign(d.lat_nx_, DiscreteDomain::kAbsent);
      auto w = axis_weights(spec.nx, d.hx_);
      for (std::size_t i = 0; i < spec.nx; ++i)
        add_node(i, 0, {axis_coord(spec.x0, spec.x1, spec.nx, i), 0.0}, w[i]);
      for (std::size_t i = 0; i + 1 < spec.nx; ++i) d.edges_.push_back({i, i + 1, 1.0 / d.hx_});
      break;
    }
    case DomainKind::Rectangle: {
      d.lat_nx_ = spec.nx;
      d.lat_ny_ = spec.ny;
      d.hx_ = (spec.x1 - spec.x0) / static_cast<double>(spec.nx - 1);
      d.hy_ = (spec.y1 - spec.y0) / static_cast<double>(spec.ny - 1);
      d.lattice_.assign(d.lat_nx_ * d.lat_ny_, DiscreteDomain::kAbsent);
      auto wx = axis_weights(spec.nx, d.hx_);
      auto wy = axis_weights(spec.ny, d.hy_);
      for (std::size_t j = 0; j < spec.ny; ++j)
        for (std::size_t i = 0; i < spec.nx; ++i)
          add_node(i, j,
                   {axis_coord(spec.x0, spec.x1, spec.nx, i),
                    axis_coord(spec.y0, spec.y1, spec.ny, j)},
                   wx[i] * wy[j]);
      for (std::size_t j = 0; j < spec.ny; ++j)
        for (std::size_t i = 0; i < spec.nx; ++i) {
          std::size_t a = j * spec.nx + i;
          if (i + 1 < spec.nx) d.edges_.push_back({a, a + 1, wy[j] / d.hx_});
          if (j + 1 < spec.ny) d.edges_.push_back({a, a + spec.nx, wx[i] / d.hy_});
        }
      break;
    }
    case DomainKind::Disk: {
      const std::size_t n = spec.nx;
      const double cell = 2.0 * spec.radius / static_cast<double>(n);
      d.lat_nx_ = n;
      d.lat_ny_ = n;
      d.hx_ = cell;
      d.hy_ = cell;
      d.lattice_.assign(n * n, DiscreteDomain::kAbsent);
      const double r2 = spec.radius * spec.radius;
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i) {
          double ox = (static_cast<double>(i) + 0.5) * cell - spec.radius;
          double oy = (static_cast<double>(j) + 0.5) * cell - spec.radius;
          if (ox * ox + oy * oy < r2) add_node(i, j, {spec.cx + ox, spec.cy + oy}, cell * cell);
        }
      // Uniform cells: conductance h^2/h^2 per shared face.
      for (std::size_t k = 0; k < d.coords_.size(); ++k) {
        auto i = static_cast<std::ptrdiff_t>(d.lat_i_[k]);
        auto j = static_cast<std::ptrdiff_t>(d.lat_j_[k]);
        if (auto e = d.node_at(i + 1, j); e != DiscreteDomain::kAbsent)
          d.edges_.push_back({k, static_cast<std::size_t>(e), 1.0});
        if (auto e = d.node_at(i, j + 1); e != DiscreteDomain::kAbsent)
          d.edges_.push_back({k, static_cast<std::size_t>(e), 1.0});
      }
      break;
    }
  }

  d.neighbors_.assign(d.coords_.size(), {});
  for (const auto& e : d.edges_) {
    d.neighbors_[e.a].push_back(e.b);
    d.neighbors_[e.b].push_back(e.a);
  }
  const std::size_t full = d.dimension() == 1 ? 2 : 4;
  d.boundary_.assign(d.coords_.size(), false);
  for (std::size_t k = 0; k < d.coords_.size(); ++k) {
    if (d.neighbors_[k].empty()) throw ConfigError("resolution too small: isolated grid node");
    d.boundary_[k] = d.neighbors_[k].size() < full;
  }
  for (double w : d.measure_) d.total_measure_ += w;
  return dom;
}

// ---------------------------------------------------------------------------

ScalarField::ScalarField(DomainPtr dom, double fill)
    : dom_(std::move(dom)), v_(dom_ ? dom_->size() : 0, fill) {}

ScalarField::ScalarField(DomainPtr dom, std::vector<double> values)
    : dom_(std::move(dom)), v_(std::move(values)) {
  if (!dom_ || v_.size() != dom_->size())
    throw Error("field length does not match the domain node count");
}

ScalarField ScalarField::from_expr(DomainPtr dom, const Expr& e) {
  ScalarField f(dom);
  const auto& xs = dom->coords();
  for (std::size_t k = 0; k < xs.size(); ++k) f[k] = e.evaluate(xs[k]);
  return f;
}

double ScalarField::min() const { return v_[argmin()]; }
double ScalarField::max() const { return v_[argmax()]; }

std::size_t ScalarField::argmin() const {
  return static_cast<std::size_t>(std::min_element(v_.begin(), v_.end()) - v_.begin());
}
std::size_t ScalarField::argmax() const {
  return static_cast<std::size_t>(std::max_element(v_.begin(), v_.end()) - v_.begin());
}

bool ScalarField::all_finite() const {
  return std::all_of(v_.begin(), v_.end(), [](double v) { return std::isfinite(v); });
}

void ScalarField::require_same_domain(const ScalarField& other) const {
  if (dom_ != other.dom_) throw DomainMismatch();
}

double sup_distance(const ScalarField& a, const ScalarField& b) {
  a.require_same_domain(b);
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

// ---------------------------------------------------------------------------

void SparseOperator::apply(std::span<const double> x, std::span<double> y) const {
  for (std::size_t r = 0; r < n; ++r) {
    double s = 0.0;
    for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) s += val[k] * x[col[k]];
    y[r] = s;
  }
}

std::vector<double> SparseOperator::apply(std::span<const double> x) const {
  std::vector<double> y(n);
  apply(x, y);
  return y;
}

std::vector<double> SparseOperator::diagonal() const {
  std::vector<double> d(n, 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k)
      if (col[k] == r) d[r] += val[k];
  return d;
}

double SparseOperator::asymmetry() const {
  double worst = 0.0;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) {
      std::size_t c = col[k];
      double t = 0.0;
      for (std::size_t m = row_ptr[c]; m < row_ptr[c + 1]; ++m)
        if (col[m] == r) t += val[m];
      worst = std::max(worst, std::abs(val[k] - t));
    }
  return worst;
}

std::vector<double> SparseOperator::row_sums() const {
  std::vector<double> s(n, 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) s[r] += val[k];
  return s;
}

namespace {

// Rows sorted by column with the diagonal included.
SparseOperator from_rows(std::size_t n, std::vector<std::vector<std::pair<std::size_t, double>>> rows) {
  SparseOperator A;
  A.n = n;
  A.row_ptr.assign(n + 1, 0);
  for (std::size_t r = 0; r < n; ++r) {
    std::sort(rows[r].begin(), rows[r].end());
    A.row_ptr[r + 1] = A.row_ptr[r] + rows[r].size();
    for (auto [c, v] : rows[r]) {
      A.col.push_back(c);
      A.val.push_back(v);
    }
  }
  return A;
}

}  // namespace

NeumannLaplacian assemble_neumann_laplacian(const DiscreteDomain& dom) {
  const std::size_t n = dom.size();
  const auto& w = dom.measure();
  std::vector<std::vector<std::pair<std::size_t, double>>> krows(n), lrows(n);
  for (const auto& e : dom.edges()) {
    krows[e.a].emplace_back(e.b, e.conductance);
    krows[e.b].emplace_back(e.a, e.conductance);
    lrows[e.a].emplace_back(e.b, e.conductance / w[e.a]);
    lrows[e.b].emplace_back(e.a, e.conductance / w[e.b]);
  }
  for (std::size_t r = 0; r < n; ++r) {
    double ks = 0.0, ls = 0.0;
    for (auto [c, v] : krows[r]) ks += v;
    for (auto [c, v] : lrows[r]) ls += v;
    krows[r].emplace_back(r, -ks);
    lrows[r].emplace_back(r, -ls);
  }
  return {from_rows(n, std::move(lrows)), from_rows(n, std::move(krows))};
}

SparseOperator shifted_stiffness(const SparseOperator& stiffness, std::span<const double> measure,
                                 std::span<const double> shift, double diffusion) {
  SparseOperator A = stiffness;
  for (double& v : A.val) v *= -diffusion;
  const bool scalar = shift.size() == 1;
  for (std::size_t r = 0; r < A.n; ++r) {
    double c = scalar ? shift[0] : shift[r];
    for (std::size_t k = A.row_ptr[r]; k < A.row_ptr[r + 1]; ++k)
      if (A.col[k] == r) A.val[k] += c * measure[r];
  }
  return A;
}

double integrate(const ScalarField& f) {
  if (!f.domain()) throw DomainMismatch();
  const auto& w = f.domain()->measure();
  double s = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) s += f[k] * w[k];
  return s;
}

NodeMask erode(const DiscreteDomain& dom, const NodeMask& mask, std::size_t radius) {
  NodeMask out(mask.size(), false);
  const auto r = static_cast<std::ptrdiff_t>(radius);
  const std::ptrdiff_t rj = dom.dimension() == 1 ? 0 : r;
  for (std::size_t k = 0; k < dom.size(); ++k) {
    if (!mask[k]) continue;
    auto i = static_cast<std::ptrdiff_t>(dom.lattice_i(k));
    auto j = static_cast<std::ptrdiff_t>(dom.lattice_j(k));
    bool inside = true;
    for (std::ptrdiff_t dj = -rj; dj <= rj && inside; ++dj)
      for (std::ptrdiff_t di = -r; di <= r; ++di) {
        auto m = dom.node_at(i + di, j + dj);
        if (m != DiscreteDomain::kAbsent && !mask[static_cast<std::size_t>(m)]) {
          inside = false;
          break;
        }
      }
    out[k] = inside;
  }
  return out;
}

std::size_t count(const NodeMask& mask) {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  (void)ec;
  return std::string(buf.data(), end);
}

namespace {

std::string csv_rows(const DiscreteDomain& dom, auto&& value_at) {
  std::string out = dom.dimension() == 1 ? "x,value\n" : "x,y,value\n";
  const auto& xs = dom.coords();
  for (std::size_t k = 0; k < xs.size(); ++k) {
    out += format_double(xs[k].x);
    out += ',';
    if (dom.dimension() == 2) {
      out += format_double(xs[k].y);
      out += ',';
    }
    out += value_at(k);
    out += '\n';
  }
  return out;
}

}  // namespace

std::string to_csv(const ScalarField& f) {
  return csv_rows(*f.domain(), [&](std::size_t k) { return format_double(f[k]); });
}

std::string mask_to_csv(const DiscreteDomain& dom, const NodeMask& mask) {
  return csv_rows(dom, [&](std::size_t k) { return std::string(mask[k] ? "1" : "0"); });
}

}  // namespace sisrd
