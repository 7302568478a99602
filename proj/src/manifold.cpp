#include "geoplan/manifold.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace geoplan {

namespace {

constexpr double kSphereTol = 1e-12;
constexpr double kEllipsoidTol = 1e-10;
constexpr double kBoundaryTol = 1e-12;
constexpr double kTangentTol = 1e-10;

std::string coords_str(const Vec& v) {
  std::ostringstream os;
  os << "(";
  for (int i = 0; i < v.size(); ++i) {
    os << (i ? ", " : "") << v[i];
  }
  os << ")";
  return os.str();
}

}  // namespace

ManifoldModel::ManifoldModel(ManifoldKind kind, int dim,
                             std::array<double, 3> axes)
    : kind_(kind), dim_(dim), axes_(axes) {
  switch (kind_) {
    case ManifoldKind::Sphere:
      coord_dim_ = dim_ + 1;
      volume_ = dim_ == 1 ? kTwoPi : (dim_ == 2 ? 4.0 * kPi : 2.0 * kPi * kPi);
      break;
    case ManifoldKind::FlatTorus:
      coord_dim_ = dim_;
      volume_ = std::pow(kTwoPi, dim_);
      break;
    case ManifoldKind::Hemisphere:
      coord_dim_ = 3;
      volume_ = 2.0 * kPi;
      break;
    case ManifoldKind::Ellipsoid:
      coord_dim_ = 3;
      init_ellipsoid_cache();
      break;
  }
}

ManifoldModel ManifoldModel::sphere(int n) {
  if (n < 1 || n > 3) throw ConfigError("sphere dimension must be 1, 2 or 3");
  return ManifoldModel(ManifoldKind::Sphere, n, {1.0, 1.0, 1.0});
}

ManifoldModel ManifoldModel::flat_torus(int n) {
  if (n < 1 || n > 3) throw ConfigError("torus dimension must be 1, 2 or 3");
  return ManifoldModel(ManifoldKind::FlatTorus, n, {1.0, 1.0, 1.0});
}

ManifoldModel ManifoldModel::ellipsoid(double a, double b, double c) {
  if (!(a > 0.0) || !(b > 0.0) || !(c > 0.0)) {
    throw ConfigError("ellipsoid semi-axes must be positive");
  }
  return ManifoldModel(ManifoldKind::Ellipsoid, 2, {a, b, c});
}

ManifoldModel ManifoldModel::hemisphere() {
  return ManifoldModel(ManifoldKind::Hemisphere, 2, {1.0, 1.0, 1.0});
}

ManifoldModel ManifoldModel::from_config(const nlohmann::json& config) {
  if (!config.is_object() || !config.contains("kind")) {
    throw ConfigError("manifold config must be an object with a \"kind\" key");
  }
  const std::string kind = config.at("kind").get<std::string>();
  try {
    if (kind == "sphere") return sphere(config.at("n").get<int>());
    if (kind == "torus") return flat_torus(config.at("n").get<int>());
    if (kind == "hemisphere") return hemisphere();
    if (kind == "ellipsoid") {
      return ellipsoid(config.at("a").get<double>(),
                       config.at("b").get<double>(),
                       config.at("c").get<double>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad manifold config: ") + e.what());
  }
  throw ConfigError("unknown manifold kind \"" + kind + "\"");
}

nlohmann::json ManifoldModel::to_config() const {
  switch (kind_) {
    case ManifoldKind::Sphere:
      return {{"kind", "sphere"}, {"n", dim_}};
    case ManifoldKind::FlatTorus:
      return {{"kind", "torus"}, {"n", dim_}};
    case ManifoldKind::Hemisphere:
      return {{"kind", "hemisphere"}};
    case ManifoldKind::Ellipsoid:
      return {{"kind", "ellipsoid"},
              {"a", axes_[0]},
              {"b", axes_[1]},
              {"c", axes_[2]}};
  }
  throw Error("unreachable");
}

std::string ManifoldModel::name() const {
  switch (kind_) {
    case ManifoldKind::Sphere:
      return "sphere-" + std::to_string(dim_);
    case ManifoldKind::FlatTorus:
      return "torus-" + std::to_string(dim_);
    case ManifoldKind::Hemisphere:
      return "hemisphere";
    case ManifoldKind::Ellipsoid: {
      std::ostringstream os;
      os << "ellipsoid(" << axes_[0] << "," << axes_[1] << "," << axes_[2]
         << ")";
      return os.str();
    }
  }
  throw Error("unreachable");
}

// ---------------------------------------------------------------------------
// constraints

double ManifoldModel::constraint_residual(const Point& p) const {
  if (p.coords.size() != coord_dim_) {
    return std::numeric_limits<double>::infinity();
  }
  switch (kind_) {
    case ManifoldKind::Sphere:
      return std::abs(p.coords.norm() - 1.0);
    case ManifoldKind::Hemisphere: {
      double r = std::abs(p.coords.norm() - 1.0);
      if (p.coords[2] < 0.0) r = std::max(r, -p.coords[2]);
      return r;
    }
    case ManifoldKind::FlatTorus: {
      double r = 0.0;
      for (int i = 0; i < dim_; ++i) {
        const double x = p.coords[i];
        if (x < 0.0) r = std::max(r, -x);
        if (x >= kTwoPi) r = std::max(r, x - kTwoPi);
        if (!std::isfinite(x)) return std::numeric_limits<double>::infinity();
      }
      return r;
    }
    case ManifoldKind::Ellipsoid: {
      double f = -1.0;
      for (int i = 0; i < 3; ++i) {
        f += (p.coords[i] / axes_[i]) * (p.coords[i] / axes_[i]);
      }
      return std::abs(f);
    }
  }
  throw Error("unreachable");
}

bool ManifoldModel::contains(const Point& p) const {
  if (p.coords.size() != coord_dim_) return false;
  switch (kind_) {
    case ManifoldKind::Sphere:
      return constraint_residual(p) <= kSphereTol;
    case ManifoldKind::Hemisphere:
      return std::abs(p.coords.norm() - 1.0) <= kSphereTol &&
             p.coords[2] >= -kBoundaryTol;
    case ManifoldKind::FlatTorus:
      return constraint_residual(p) == 0.0;
    case ManifoldKind::Ellipsoid:
      return constraint_residual(p) <= kEllipsoidTol;
  }
  throw Error("unreachable");
}

void ManifoldModel::validate(const Point& p) const {
  if (!contains(p)) {
    throw ConstraintViolation("point " + coords_str(p.coords) + " is not on " +
                              name() + " (residual " +
                              std::to_string(constraint_residual(p)) + ")");
  }
}

Vec ManifoldModel::surface_normal(const Point& p) const {
  switch (kind_) {
    case ManifoldKind::Sphere:
    case ManifoldKind::Hemisphere:
      return p.coords / p.coords.norm();
    case ManifoldKind::Ellipsoid: {
      Vec n(3);
      for (int i = 0; i < 3; ++i) n[i] = p.coords[i] / (axes_[i] * axes_[i]);
      return n / n.norm();
    }
    case ManifoldKind::FlatTorus:
      throw Error("flat torus has no ambient normal");
  }
  throw Error("unreachable");
}

Point ManifoldModel::project(const Vec& coords) const {
  switch (kind_) {
    case ManifoldKind::Sphere:
    case ManifoldKind::Hemisphere:
      return Point{coords / coords.norm()};
    case ManifoldKind::Ellipsoid: {
      double s = 0.0;
      for (int i = 0; i < 3; ++i) {
        s += (coords[i] / axes_[i]) * (coords[i] / axes_[i]);
      }
      return Point{coords / std::sqrt(s)};
    }
    case ManifoldKind::FlatTorus: {
      Vec w = coords;
      for (int i = 0; i < dim_; ++i) w[i] = wrap_two_pi(w[i]);
      return Point{w};
    }
  }
  throw Error("unreachable");
}

Vec ManifoldModel::tangent_project(const Point& p, const Vec& v) const {
  if (representation() == Representation::Chart) return v;
  const Vec n = surface_normal(p);
  return v - n.dot(v) * n;
}

double ManifoldModel::tangent_residual(const TangentVector& v) const {
  if (representation() == Representation::Chart) return 0.0;
  return std::abs(surface_normal(v.base).dot(v.components));
}

void ManifoldModel::validate_tangent(const TangentVector& v) const {
  validate(v.base);
  if (v.components.size() != coord_dim_) {
    throw ConstraintViolation("tangent component size mismatch on " + name());
  }
  const double r = tangent_residual(v);
  // Scale the orthogonality tolerance with the vector magnitude.
  if (r > kTangentTol * std::max(1.0, v.components.norm())) {
    throw ConstraintViolation("vector " + coords_str(v.components) +
                              " is not tangent at " + coords_str(v.base.coords) +
                              " (normal residual " + std::to_string(r) + ")");
  }
}

// ---------------------------------------------------------------------------
// metric data

double ManifoldModel::inner(const Point&, const Vec& u, const Vec& v) const {
  // Ambient components of an isometric embedding, or flat chart components:
  // the induced inner product is the dot product either way.
  return u.dot(v);
}

double ManifoldModel::norm(const Point& p, const Vec& u) const {
  return std::sqrt(inner(p, u, u));
}

Vec ManifoldModel::to_chart(const Point& p) const {
  switch (kind_) {
    case ManifoldKind::FlatTorus:
      return p.coords;
    case ManifoldKind::Sphere: {
      if (dim_ == 1) {
        Vec c(1);
        c[0] = wrap_two_pi(std::atan2(p.coords[1], p.coords[0]));
        return c;
      }
      if (dim_ == 2) {
        Vec c(2);
        c[0] = std::atan2(std::hypot(p.coords[0], p.coords[1]), p.coords[2]);
        c[1] = wrap_two_pi(std::atan2(p.coords[1], p.coords[0]));
        return c;
      }
      Vec c(3);
      const double r3 = std::hypot(p.coords[2], p.coords[3]);
      c[0] = std::atan2(std::hypot(p.coords[1], r3), p.coords[0]);
      c[1] = std::atan2(r3, p.coords[1]);
      c[2] = wrap_two_pi(std::atan2(p.coords[3], p.coords[2]));
      return c;
    }
    case ManifoldKind::Hemisphere: {
      Vec c(2);
      c[0] = std::atan2(std::hypot(p.coords[0], p.coords[1]), p.coords[2]);
      c[1] = wrap_two_pi(std::atan2(p.coords[1], p.coords[0]));
      return c;
    }
    case ManifoldKind::Ellipsoid: {
      Vec u(3);
      for (int i = 0; i < 3; ++i) u[i] = p.coords[i] / axes_[i];
      u /= u.norm();
      Vec c(2);
      c[0] = std::atan2(std::hypot(u[0], u[1]), u[2]);
      c[1] = wrap_two_pi(std::atan2(u[1], u[0]));
      return c;
    }
  }
  throw Error("unreachable");
}

Point ManifoldModel::from_chart(const Vec& chart) const {
  switch (kind_) {
    case ManifoldKind::FlatTorus: {
      Vec w = chart;
      for (int i = 0; i < dim_; ++i) w[i] = wrap_two_pi(w[i]);
      return Point{w};
    }
    case ManifoldKind::Sphere: {
      if (dim_ == 1) return Point{vec2(std::cos(chart[0]), std::sin(chart[0]))};
      if (dim_ == 2) {
        const double st = std::sin(chart[0]);
        return Point{vec3(st * std::cos(chart[1]), st * std::sin(chart[1]),
                          std::cos(chart[0]))};
      }
      const double sc = std::sin(chart[0]);
      const double st = std::sin(chart[1]);
      return Point{vec4(std::cos(chart[0]), sc * std::cos(chart[1]),
                        sc * st * std::cos(chart[2]),
                        sc * st * std::sin(chart[2]))};
    }
    case ManifoldKind::Hemisphere: {
      const double st = std::sin(chart[0]);
      return Point{vec3(st * std::cos(chart[1]), st * std::sin(chart[1]),
                        std::cos(chart[0]))};
    }
    case ManifoldKind::Ellipsoid: {
      const double st = std::sin(chart[0]);
      return Point{vec3(axes_[0] * st * std::cos(chart[1]),
                        axes_[1] * st * std::sin(chart[1]),
                        axes_[2] * std::cos(chart[0]))};
    }
  }
  throw Error("unreachable");
}

Mat ManifoldModel::chart_metric(const Vec& chart) const {
  Mat g = Mat::Zero(dim_, dim_);
  switch (kind_) {
    case ManifoldKind::FlatTorus:
      g.setIdentity();
      return g;
    case ManifoldKind::Sphere: {
      g(0, 0) = 1.0;
      if (dim_ >= 2) {
        const double s0 = std::sin(chart[0]);
        g(1, 1) = s0 * s0;
        if (dim_ == 3) {
          const double s1 = std::sin(chart[1]);
          g(2, 2) = s0 * s0 * s1 * s1;
        }
      }
      return g;
    }
    case ManifoldKind::Hemisphere: {
      const double s0 = std::sin(chart[0]);
      g(0, 0) = 1.0;
      g(1, 1) = s0 * s0;
      return g;
    }
    case ManifoldKind::Ellipsoid: {
      const double a = axes_[0], b = axes_[1], c = axes_[2];
      const double ct = std::cos(chart[0]), st = std::sin(chart[0]);
      const double cf = std::cos(chart[1]), sf = std::sin(chart[1]);
      g(0, 0) = a * a * ct * ct * cf * cf + b * b * ct * ct * sf * sf +
                c * c * st * st;
      g(0, 1) = g(1, 0) = (b * b - a * a) * st * ct * sf * cf;
      g(1, 1) = a * a * st * st * sf * sf + b * b * st * st * cf * cf;
      return g;
    }
  }
  throw Error("unreachable");
}

Mat ManifoldModel::metric_tensor(const Point& p) const {
  validate(p);
  return chart_metric(to_chart(p));
}

ChristoffelSymbols ManifoldModel::christoffel(const Point& p) const {
  validate(p);
  ChristoffelSymbols gamma;
  gamma.dim = dim_;
  const Vec chart = to_chart(p);
  switch (kind_) {
    case ManifoldKind::FlatTorus:
      return gamma;  // flat connection
    case ManifoldKind::Sphere: {
      if (dim_ == 1) return gamma;
      if (dim_ == 2) {
        const double t = chart[0];
        gamma.at(0, 1, 1) = -std::sin(t) * std::cos(t);
        const double cot = std::cos(t) / std::sin(t);
        gamma.at(1, 0, 1) = cot;
        gamma.at(1, 1, 0) = cot;
        return gamma;
      }
      const double chi = chart[0], theta = chart[1];
      const double cot_chi = std::cos(chi) / std::sin(chi);
      const double cot_th = std::cos(theta) / std::sin(theta);
      gamma.at(0, 1, 1) = -std::sin(chi) * std::cos(chi);
      gamma.at(0, 2, 2) =
          -std::sin(chi) * std::cos(chi) * std::sin(theta) * std::sin(theta);
      gamma.at(1, 0, 1) = gamma.at(1, 1, 0) = cot_chi;
      gamma.at(1, 2, 2) = -std::sin(theta) * std::cos(theta);
      gamma.at(2, 0, 2) = gamma.at(2, 2, 0) = cot_chi;
      gamma.at(2, 1, 2) = gamma.at(2, 2, 1) = cot_th;
      return gamma;
    }
    case ManifoldKind::Hemisphere: {
      const double t = chart[0];
      gamma.at(0, 1, 1) = -std::sin(t) * std::cos(t);
      const double cot = std::cos(t) / std::sin(t);
      gamma.at(1, 0, 1) = cot;
      gamma.at(1, 1, 0) = cot;
      return gamma;
    }
    case ManifoldKind::Ellipsoid: {
      // Central finite differences of the chart metric, step 1e-6.
      const double h = 1e-6;
      std::array<Mat, 2> dg;
      for (int l = 0; l < 2; ++l) {
        Vec cp = chart, cm = chart;
        cp[l] += h;
        cm[l] -= h;
        dg[l] = (chart_metric(cp) - chart_metric(cm)) / (2.0 * h);
      }
      const Mat g = chart_metric(chart);
      Eigen::Matrix2d g2;
      g2 << g(0, 0), g(0, 1), g(1, 0), g(1, 1);
      const Eigen::Matrix2d ginv = g2.inverse();
      for (int k = 0; k < 2; ++k) {
        for (int i = 0; i < 2; ++i) {
          for (int j = 0; j < 2; ++j) {
            double s = 0.0;
            for (int l = 0; l < 2; ++l) {
              s += ginv(k, l) *
                   (dg[i](j, l) + dg[j](i, l) - dg[l](i, j));
            }
            gamma.at(k, i, j) = 0.5 * s;
          }
        }
      }
      return gamma;
    }
  }
  throw Error("unreachable");
}

double ManifoldModel::gaussian_curvature(const Point& p) const {
  switch (kind_) {
    case ManifoldKind::FlatTorus:
      return 0.0;
    case ManifoldKind::Sphere:
    case ManifoldKind::Hemisphere:
      // Constant sectional curvature 1 in every dimension.
      return 1.0;
    case ManifoldKind::Ellipsoid: {
      const double a = axes_[0], b = axes_[1], c = axes_[2];
      double h2 = 0.0;
      h2 += p.coords[0] * p.coords[0] / (a * a * a * a);
      h2 += p.coords[1] * p.coords[1] / (b * b * b * b);
      h2 += p.coords[2] * p.coords[2] / (c * c * c * c);
      return 1.0 / (a * a * b * b * c * c * h2 * h2);
    }
  }
  throw Error("unreachable");
}

// ---------------------------------------------------------------------------
// sampling

Point ManifoldModel::sample_point(RngState& rng) const {
  switch (kind_) {
    case ManifoldKind::Sphere: {
      Vec v(coord_dim_);
      for (int i = 0; i < coord_dim_; ++i) v[i] = gaussian(rng);
      return Point{v / v.norm()};
    }
    case ManifoldKind::Hemisphere: {
      Vec v(3);
      for (int i = 0; i < 3; ++i) v[i] = gaussian(rng);
      v /= v.norm();
      v[2] = std::abs(v[2]);  // mirror map preserves area
      return Point{v};
    }
    case ManifoldKind::FlatTorus: {
      Vec v(dim_);
      for (int i = 0; i < dim_; ++i) v[i] = wrap_two_pi(kTwoPi * uniform01(rng));
      return Point{v};
    }
    case ManifoldKind::Ellipsoid: {
      // Rejection sampling from the parametric area element.
      for (int tries = 0; tries < 100000; ++tries) {
        const double theta = kPi * uniform01(rng);
        const double phi = wrap_two_pi(kTwoPi * uniform01(rng));
        const double u = uniform01(rng);
        const double density = area_density(theta, phi);
        if (density > max_area_density_) {
          throw IntegrationFailure("area-density envelope exceeded");
        }
        if (u * max_area_density_ <= density) {
          return from_chart(vec2(theta, phi));
        }
      }
      throw IntegrationFailure("ellipsoid rejection sampling stalled");
    }
  }
  throw Error("unreachable");
}

Vec ManifoldModel::sample_unit_tangent(const Point& p, RngState& rng) const {
  for (int tries = 0; tries < 100; ++tries) {
    Vec v(coord_dim_);
    for (int i = 0; i < coord_dim_; ++i) v[i] = gaussian(rng);
    v = tangent_project(p, v);
    const double n = v.norm();
    if (n > 1e-8) return v / n;
  }
  throw Error("degenerate tangent sampling");
}

// ---------------------------------------------------------------------------
// distances and global quantities

std::optional<double> ManifoldModel::closed_form_distance(
    const Point& p, const Point& q) const {
  switch (kind_) {
    case ManifoldKind::Sphere:
    case ManifoldKind::Hemisphere: {
      // Symmetric evaluation: sin(theta) = |p-q||p+q|/2 and cos(theta) = p.q
      // give bit-identical results under argument swap.  For the hemisphere
      // the minor great-circle arc between points with z >= 0 stays in the
      // closed hemisphere (its z-profile solves z'' = -theta^2 z, so it is
      // concave wherever positive and minimized at the endpoints); the
      // great-circle value is therefore the intrinsic distance.
      const double c = p.coords.dot(q.coords);
      const double s = 0.5 * (p.coords - q.coords).norm() *
                       (p.coords + q.coords).norm();
      return std::atan2(s, c);
    }
    case ManifoldKind::FlatTorus: {
      double sum = 0.0;
      for (int i = 0; i < dim_; ++i) {
        const double d = wrap_pi(q.coords[i] - p.coords[i]);
        sum += d * d;
      }
      return std::sqrt(sum);
    }
    case ManifoldKind::Ellipsoid:
      return std::nullopt;
  }
  throw Error("unreachable");
}

double ManifoldModel::diameter_bound() const {
  switch (kind_) {
    case ManifoldKind::Sphere:
    case ManifoldKind::Hemisphere:
      return kPi;
    case ManifoldKind::FlatTorus:
      return kPi * std::sqrt(static_cast<double>(dim_));
    case ManifoldKind::Ellipsoid:
      return kPi * std::max({axes_[0], axes_[1], axes_[2]});
  }
  throw Error("unreachable");
}

double ManifoldModel::area_density(double theta, double phi) const {
  const double a = axes_[0], b = axes_[1], c = axes_[2];
  const double ct = std::cos(theta), st = std::sin(theta);
  const double cf = std::cos(phi), sf = std::sin(phi);
  const Eigen::Vector3d xt(a * ct * cf, b * ct * sf, -c * st);
  const Eigen::Vector3d xf(-a * st * sf, b * st * cf, 0.0);
  return xt.cross(xf).norm();
}

void ManifoldModel::init_ellipsoid_cache() {
  // Composite Simpson over the (theta, phi) parameter rectangle; the area
  // density is smooth, so 512 intervals per axis is far below 1e-9 relative
  // error.  The grid maximum also seeds the rejection-sampling envelope.
  const int nt = 512, nf = 512;
  const double ht = kPi / nt, hf = kTwoPi / nf;
  auto simpson_w = [](int i, int n) {
    if (i == 0 || i == n) return 1.0;
    return (i % 2 == 1) ? 4.0 : 2.0;
  };
  double total = 0.0;
  double max_density = 0.0;
  for (int i = 0; i <= nt; ++i) {
    const double theta = i * ht;
    double row = 0.0;
    for (int j = 0; j <= nf; ++j) {
      const double d = area_density(theta, j * hf);
      row += simpson_w(j, nf) * d;
      max_density = std::max(max_density, d);
    }
    total += simpson_w(i, nt) * row;
  }
  volume_ = total * ht * hf / 9.0;
  max_area_density_ = max_density * 1.02;
}

}  // namespace geoplan
