#include "venttsel/singular.hpp"

#include <cmath>

namespace venttsel {

std::pair<double, double> SingularTerm::polar(const Point& x) const {
  const Point v = x - corner;
  const double r = v.norm();
  if (r == 0.0) return {0.0, 0.0};
  double omega = std::atan2(cross(v, first_edge), v.dot(first_edge));
  if (omega < 0.0) omega += 2.0 * kPi;
  return {r, omega};
}

double SingularTerm::raw(const Point& x) const {
  const auto [r, omega] = polar(x);
  if (r == 0.0) return 0.0;
  return std::pow(r, lambda) * std::sin(lambda * omega);
}

double SingularTerm::evaluate(const Point& x) const {
  const double r = (x - corner).norm();
  const double chi = cutoff(r, cutoff_radius);
  return chi == 0.0 ? 0.0 : chi * raw(x);
}

double cutoff(double r, double rho) {
  const double t = (r - 0.5 * rho) / (0.5 * rho);
  if (t <= 0.0) return 1.0;
  if (t >= 1.0) return 0.0;
  return 1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
}

SingularTerm make_singular_term(const Polygon& p, std::size_t j, std::optional<double> rho) {
  const std::size_t n = p.size();
  if (j >= n) throw Error("singular.corner_index", "corner index out of range");
  SingularTerm t;
  t.corner_index = j;
  t.alpha = p.angles()[j];
  t.lambda = kPi / t.alpha;
  t.corner = p.vertex(j);
  t.first_edge = (p.vertex(j + n - 1) - t.corner).normalized();
  t.second_edge = (p.vertex(j + 1) - t.corner).normalized();
  t.cutoff_radius = rho.value_or(std::min(p.side_length(j), p.side_length(j + n - 1)) / 3.0);
  if (!(t.cutoff_radius > 0.0)) throw Error("singular.cutoff", "cutoff radius must be positive");
  return t;
}

std::vector<SingularTerm> singular_terms(const Polygon& p) {
  std::vector<SingularTerm> out;
  for (std::size_t j = 0; j < p.size(); ++j)
    if (p.angles()[j] > kPi) out.push_back(make_singular_term(p, j));
  return out;
}

double singular_value(const SingularTerm& term, const Point& x, const Polygon& p) {
  if (!p.contains(x, 1e-12)) throw Error("singular.outside", "evaluation point lies outside the polygon");
  return term.evaluate(x);
}

double fit_coefficient(const Mesh& m, const Vector& u, const SingularTerm& term, const FitOptions& options) {
  if (static_cast<std::size_t>(u.size()) != m.node_count()) throw Error("field.size", "field length differs from the node count");
  if (!(term.alpha > kPi)) throw Error("singular.convex_corner", "singular fits need a reentrant corner");
  const double r0 = options.inner * term.cutoff_radius;
  const double r1 = options.outer * term.cutoff_radius;
  std::vector<std::size_t> picked;
  for (std::size_t i = 0; i < m.node_count(); ++i) {
    const double r = (m.nodes[i] - term.corner).norm();
    if (r >= r0 && r <= r1) picked.push_back(i);
  }
  if (picked.size() < options.min_nodes) {
    throw Error("singular.annulus_underresolved", "only " + std::to_string(picked.size()) +
                                                      " nodes in the fitting annulus; refine the mesh near corner " +
                                                      std::to_string(term.corner_index));
  }
  const auto rows = static_cast<Eigen::Index>(picked.size());
  DenseMatrix a(rows, 4);
  Vector rhs(rows);
  for (Eigen::Index k = 0; k < rows; ++k) {
    const Point& x = m.nodes[picked[static_cast<std::size_t>(k)]];
    const auto [r, omega] = term.polar(x);
    a(k, 0) = std::pow(r, term.lambda) * std::sin(term.lambda * omega);
    a(k, 1) = 1.0;
    a(k, 2) = r * std::cos(omega);
    a(k, 3) = r * std::sin(omega);
    rhs[k] = u[static_cast<Eigen::Index>(picked[static_cast<std::size_t>(k)])];
  }
  Vector scale = a.cwiseAbs().colwise().maxCoeff().transpose();
  for (Eigen::Index j = 0; j < 4; ++j) {
    if (scale[j] == 0.0) scale[j] = 1.0;
    a.col(j) /= scale[j];
  }
  const Vector coef = a.colPivHouseholderQr().solve(rhs);
  return coef[0] / scale[0];
}

Decomposition decompose(const Mesh& m, const Vector& u, const FitOptions& options) {
  Decomposition d;
  d.terms = singular_terms(m.polygon);
  for (auto& t : d.terms) t.coefficient = fit_coefficient(m, u, t, options);
  d.regular = u;
  for (std::size_t i = 0; i < m.node_count(); ++i) {
    for (const auto& t : d.terms) d.regular[static_cast<Eigen::Index>(i)] -= *t.coefficient * t.evaluate(m.nodes[i]);
  }
  return d;
}

Vector reconstruct(const Mesh& m, const Decomposition& d) {
  Vector u = d.regular;
  for (std::size_t i = 0; i < m.node_count(); ++i) {
    for (const auto& t : d.terms) u[static_cast<Eigen::Index>(i)] += t.coefficient.value_or(0.0) * t.evaluate(m.nodes[i]);
  }
  return u;
}

}  // namespace venttsel
