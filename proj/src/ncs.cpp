#include "mjrobust/ncs.hpp"

#include <cmath>
#include <sstream>

#include "mjrobust/error.hpp"

namespace mjrobust {

void PlantSpec::validate() const {
  if (ac.rows() == 0 || ac.rows() != ac.cols()) throw InvalidInput("plant: A_c must be square");
  if (bc.rows() != ac.rows() || bc.cols() == 0) throw InvalidInput("plant: B_c must be n_c x m");
  if (k.rows() != bc.cols() || k.cols() != ac.rows()) throw InvalidInput("plant: K must be m x n_c");
  if (!(period > 0.0) || !std::isfinite(period)) throw InvalidInput("plant: period must be positive");
  if (!ac.allFinite() || !bc.allFinite() || !k.allFinite()) {
    throw InvalidInput("plant: non-finite data");
  }
}

DelayModel DelayModel::finite(FiniteChain chain, std::vector<double> delays) {
  if (static_cast<int>(delays.size()) != chain.size()) {
    throw InvalidInput("delays: need one delay value per mode");
  }
  return DelayModel{std::move(chain), std::move(delays)};
}

DelayModel DelayModel::kernel(KernelChain chain) { return DelayModel{std::move(chain), {}}; }

double DelayModel::delay(double state) const {
  if (is_finite(chain)) {
    const auto i = static_cast<long>(std::lround(state));
    if (i < 0 || i >= static_cast<long>(values.size())) {
      throw InvalidInput("delays: mode index out of range");
    }
    return values[static_cast<std::size_t>(i)];
  }
  return state;
}

PlantSpec example_plant() {
  PlantSpec p;
  p.ac = Matrix::Constant(1, 1, 0.2);
  p.bc = Matrix::Constant(1, 1, 0.8);
  p.k = Matrix::Constant(1, 1, -1.2);
  p.period = 1.0;
  return p;
}

DelayModel example1_delays() {
  Matrix p(2, 2);
  p << 2.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0;
  return DelayModel::finite(FiniteChain(Vector::Constant(2, 0.5), p), {0.1, 0.3});
}

DelayModel example2_delays() { return DelayModel::kernel(KernelChain::example2(0.4)); }

std::pair<Matrix, Matrix> w_matrices(const PlantSpec& plant, double tau) {
  if (!(tau >= 0.0 && tau < plant.period)) {
    std::ostringstream os;
    os << "w_matrices: delay " << tau << " outside [0, " << plant.period << ")";
    throw InvalidInput(os.str());
  }
  const double l = plant.period;
  Matrix w1 = expm(plant.ac * (l - tau)) * exp_integral(plant.ac, plant.bc, tau);
  Matrix w2 = exp_integral(plant.ac, plant.bc, l - tau);
  return {std::move(w1), std::move(w2)};
}

Matrix ncs_a(const PlantSpec& plant, double tau) {
  const int n = plant.nc();
  const auto [w1, w2] = w_matrices(plant, tau);
  Matrix a = Matrix::Zero(2 * n, 2 * n);
  a.topRightCorner(n, n).setIdentity();
  a.bottomLeftCorner(n, n) = w1 * plant.k;
  a.bottomRightCorner(n, n) = expm(plant.ac * plant.period) + w2 * plant.k;
  return a;
}

Matrix ncs_b(const PlantSpec& plant, double tau) {
  const int n = plant.nc(), m = plant.m();
  const auto [w1, w2] = w_matrices(plant, tau);
  Matrix b = Matrix::Zero(2 * n, 2 * m);
  b.bottomLeftCorner(n, m) = w1;
  b.bottomRightCorner(n, m) = w2;
  return b;
}

namespace {

void check_support(const PlantSpec& plant, const DelayModel& delays) {
  if (const auto* fc = std::get_if<FiniteChain>(&delays.chain)) {
    if (static_cast<int>(delays.values.size()) != fc->size()) {
      throw InvalidInput("delays: need one delay value per mode");
    }
    for (double t : delays.values) {
      if (!(t >= 0.0 && t < plant.period)) {
        throw InvalidInput("delays: every delay must lie in [0, L)");
      }
    }
    return;
  }
  const auto& kc = std::get<KernelChain>(delays.chain);
  if (!(kc.a() >= 0.0 && kc.b() < plant.period)) {
    throw InvalidInput("delays: the kernel chain's interval must lie in [0, L)");
  }
}

}  // namespace

MjlsModel discretize(const PlantSpec& plant, const DelayModel& delays) {
  plant.validate();
  check_support(plant, delays);
  const int n = plant.nc(), m = plant.m();
  const Matrix cd = Matrix::Identity(2 * n, 2 * n);
  if (const auto* fc = std::get_if<FiniteChain>(&delays.chain)) {
    std::vector<Matrix> a, b;
    for (double t : delays.values) {
      a.push_back(ncs_a(plant, t));
      b.push_back(ncs_b(plant, t));
    }
    return MjlsModel(delays.chain, ModeFamily(std::move(a)), ModeFamily(std::move(b)),
                     MatrixField::constant(cd, fc->size()));
  }
  MatrixField a(2 * n, 2 * n, [plant](double t) { return ncs_a(plant, t); });
  MatrixField b(2 * n, 2 * m, [plant](double t) { return ncs_b(plant, t); });
  return MjlsModel(delays.chain, std::move(a), std::move(b), MatrixField::constant(cd));
}

Matrix structured_delta(const PlantSpec& plant, const Matrix& delta) {
  const int n = plant.nc(), m = plant.m();
  if (delta.rows() != m || delta.cols() != n) throw InvalidInput("Delta must be m x n_c");
  if (!delta.allFinite()) throw InvalidInput("Delta must be finite");
  Matrix d = Matrix::Zero(2 * m, 2 * n);
  d.topLeftCorner(m, n) = delta;
  d.bottomRightCorner(m, n) = delta;
  return d;
}

MjlsModel closed_loop_model(const PlantSpec& plant, const DelayModel& delays,
                            const Matrix& delta) {
  const auto model = discretize(plant, delays);
  const Matrix d = structured_delta(plant, delta);
  if (const auto* fc = std::get_if<FiniteChain>(&delays.chain)) {
    return close_uncertain_loop(model, MatrixField::constant(d, fc->size()));
  }
  return close_uncertain_loop(model, MatrixField::constant(d));
}

Vector initial_state(const PlantSpec& plant, const Vector& x0) {
  if (x0.size() != plant.nc()) throw InvalidInput("initial state must have n_c entries");
  Vector xd(2 * plant.nc());
  xd << x0, expm(plant.ac * plant.period) * x0;
  return xd;
}

ClosedLoopTrajectory simulate_closed_loop(const PlantSpec& plant, const Matrix& delta,
                                          const DelayModel& delays, const Vector& x0,
                                          int steps, RngStream& rng) {
  if (steps < 1) throw InvalidInput("simulate_closed_loop: need at least one step");
  const auto model = closed_loop_model(plant, delays, delta);
  const int n = plant.nc();
  ClosedLoopTrajectory out;
  out.xc.push_back(x0);
  Vector xd = initial_state(plant, x0);
  out.xc.push_back(xd.tail(n));
  double th = sample_initial(delays.chain, rng);
  for (int k = 1; k < steps; ++k) {
    out.delays.push_back(delays.delay(th));
    xd = model.A(th) * xd;
    if (!xd.allFinite()) {
      out.diverged = true;
      out.diverged_at = k + 1;
      break;
    }
    out.xc.push_back(xd.tail(n));
    th = sample_next(delays.chain, th, rng);
  }
  return out;
}

}  // namespace mjrobust
