#include "milo/relax/rollout.hpp"

#include "milo/errors.hpp"
#include "milo/srb/model.hpp"

#include <cmath>
#include <string>

namespace milo::relax {

namespace {
const char* kAxis[3] = {"x", "y", "z"};

struct Setter {
  const MixedIntegerQP& m;
  Vec& x;
  void operator()(const std::string& name, double value) const {
    if (auto col = m.names.find(name)) x[*col] = value;
  }
};
}  // namespace

Vec trajectory_vector(const MixedIntegerQP& m, const srb::ProblemInstance& inst,
                      const std::vector<srb::SrbState>& states,
                      const std::vector<srb::FootState>& feet) {
  const int N = inst.horizon_n;
  if (static_cast<int>(states.size()) < N || static_cast<int>(feet.size()) < N)
    throw DimensionMismatch("trajectory shorter than the horizon");

  Vec x = Vec::Zero(m.num_vars());
  Setter set{m, x};
  const double dt = inst.params.dt;

  std::vector<Eigen::Vector3d> omega(N);
  for (int n = 0; n < N; ++n) omega[n] = srb::euler_rate_map(states[n].theta) * states[n].theta_dot;

  for (int n = 0; n < N; ++n) {
    const auto& s = states[n];
    for (int k = 0; k < 3; ++k) {
      set("p[" + std::to_string(n) + "]." + kAxis[k], s.p[k]);
      set("v[" + std::to_string(n) + "]." + kAxis[k], s.v[k]);
      set("th[" + std::to_string(n) + "]." + kAxis[k], s.theta[k]);
      set("thd[" + std::to_string(n) + "]." + kAxis[k], s.theta_dot[k]);
      set("om[" + std::to_string(n) + "]." + kAxis[k], omega[n][k]);
    }
    for (int i = 0; i < 4; ++i) {
      Eigen::Vector3d arm = inst.params.nominal_arm(i);
      Eigen::Vector3d drv = feet[n].p_w[i] - s.p - arm;
      for (int k = 0; k < 3; ++k) {
        set("pw[" + std::to_string(n) + "][" + std::to_string(i) + "]." + kAxis[k],
            feet[n].p_w[i][k]);
        set("dr[" + std::to_string(n) + "][" + std::to_string(i) + "]." + kAxis[k], drv[k]);
      }
      set("c[" + std::to_string(n) + "][" + std::to_string(i) + "]", feet[n].c[i]);
      if (feet[n].c[i]) {
        bool claimed = false;
        for (std::size_t r = 0; r < inst.regions.size(); ++r) {
          bool inside = !claimed && inst.regions[r].contains(feet[n].p_w[i], 1e-7);
          set("z[" + std::to_string(n) + "][" + std::to_string(i) + "][" + std::to_string(r) + "]",
              inside ? 1.0 : 0.0);
          claimed = claimed || inside;
        }
      }
    }
  }

  for (int n = 0; n + 1 < N; ++n) {
    for (int k = 0; k < 3; ++k) {
      set("a[" + std::to_string(n) + "]." + kAxis[k], (states[n + 1].v[k] - states[n].v[k]) / dt);
      set("alp[" + std::to_string(n) + "]." + kAxis[k], (omega[n + 1][k] - omega[n][k]) / dt);
      for (int i = 0; i < 4; ++i)
        set("f[" + std::to_string(n) + "][" + std::to_string(i) + "]." + kAxis[k],
            feet[n].f[i][k]);
    }
  }

  // trig values, products, and rotation entries for knots 1..N-1
  for (int n = 1; n < N; ++n) {
    const std::string kn = std::to_string(n);
    const auto& th = states[n].theta;
    double sphi = std::sin(th[0]), cphi = std::cos(th[0]);
    double sth = std::sin(th[1]), cth = std::cos(th[1]);
    double spsi = std::sin(th[2]), cpsi = std::cos(th[2]);
    for (int k = 0; k < 3; ++k) {
      set("trig[" + kn + "]." + kAxis[k] + ".sin", std::sin(th[k]));
      set("trig[" + kn + "]." + kAxis[k] + ".cos", std::cos(th[k]));
    }
    const std::pair<const char*, double> prods[10] = {
        {"sphi.sth", sphi * sth},   {"sth.cphi", sth * cphi},  {"cth.cpsi", cth * cpsi},
        {"spsi.cphi", spsi * cphi}, {"sphi.spsi", sphi * spsi}, {"cth.spsi", cth * spsi},
        {"cphi.cpsi", cphi * cpsi}, {"sphi.cpsi", sphi * cpsi}, {"sphi.cth", sphi * cth},
        {"cphi.cth", cphi * cth},
    };
    for (const auto& [nm, val] : prods) set("prod[" + kn + "]." + nm, val);
    set("prod3[" + kn + "].sphi.sth.cpsi", sphi * sth * cpsi);
    set("prod3[" + kn + "].sth.cphi.cpsi", sth * cphi * cpsi);
    set("prod3[" + kn + "].sphi.sth.spsi", sphi * sth * spsi);
    set("prod3[" + kn + "].sth.cphi.spsi", sth * cphi * spsi);

    srb::Mat3 R = srb::rotation_matrix(th);
    set("rot[" + kn + "].01", R(0, 1));
    set("rot[" + kn + "].11", R(1, 1));
    set("rot[" + kn + "].02", R(0, 2));
    set("rot[" + kn + "].12", R(1, 2));

    const auto& thd = states[n].theta_dot;
    set("erate[" + kn + "].cthcpsi.phid", cth * cpsi * thd[0]);
    set("erate[" + kn + "].spsi.thd", spsi * thd[1]);
    set("erate[" + kn + "].cthspsi.phid", cth * spsi * thd[0]);
    set("erate[" + kn + "].cpsi.thd", cpsi * thd[1]);
    set("erate[" + kn + "].sth.phid", sth * thd[0]);
  }

  for (int n = 1; n + 1 < N; ++n) {
    const std::string kn = std::to_string(n);
    for (int a = 0; a < 3; ++a)
      for (int bb = a; bb < 3; ++bb)
        set("gyro[" + kn + "]." + std::string(kAxis[a]) + kAxis[bb], omega[n][a] * omega[n][bb]);
    for (int i = 0; i < 4; ++i) {
      Eigen::Vector3d arm = inst.params.nominal_arm(i);
      Eigen::Vector3d drv = feet[n].p_w[i] - states[n].p - arm;
      const std::pair<int, int> pairs[6] = {{1, 2}, {2, 1}, {2, 0}, {0, 2}, {0, 1}, {1, 0}};
      for (auto [ra, fb] : pairs)
        set("mom[" + kn + "][" + std::to_string(i) + "]." + std::string(kAxis[ra]) + kAxis[fb],
            drv[ra] * feet[n].f[i][fb]);
    }
  }

  for (int n = 1; n < N; ++n) {
    const std::string kn = std::to_string(n);
    srb::Mat3 R = srb::rotation_matrix(states[n].theta);
    for (int i = 0; i < 4; ++i) {
      Eigen::Vector3d arm = inst.params.nominal_arm(i);
      Eigen::Vector3d drv = feet[n].p_w[i] - states[n].p - arm;
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) {
          // ws stores factor*dr with the entry sign applied by the consumer;
          // the factor for R(2,0) is sin(theta) (sign folded outside)
          double factor = R(j, k);
          if (j == 2 && k == 0) factor = std::sin(states[n].theta[1]);
          set("ws[" + kn + "][" + std::to_string(i) + "]." + std::to_string(j) +
                  std::to_string(k),
              factor * drv[j]);
        }
    }
  }

  // selector binaries from the true value of each segmented variable
  for (const auto& g : m.selectors) {
    if (g.bins.empty()) continue;
    int r = g.region_of(x[g.var]);
    for (auto [col, val] : g.values_for_region(r)) x[col] = val;
  }

  return x;
}

void vector_to_trajectory(const MixedIntegerQP& m, int horizon, const Vec& x,
                          std::vector<srb::SrbState>& states,
                          std::vector<srb::FootState>& feet) {
  states.assign(horizon, srb::SrbState{});
  feet.assign(horizon, srb::FootState{});
  auto get = [&](const std::string& name) { return x[m.names.at(name)]; };
  for (int n = 0; n < horizon; ++n) {
    for (int k = 0; k < 3; ++k) {
      const std::string kn = std::to_string(n);
      states[n].p[k] = get("p[" + kn + "]." + kAxis[k]);
      states[n].v[k] = get("v[" + kn + "]." + kAxis[k]);
      states[n].theta[k] = get("th[" + kn + "]." + kAxis[k]);
      states[n].theta_dot[k] = get("thd[" + kn + "]." + kAxis[k]);
    }
    for (int i = 0; i < 4; ++i) {
      for (int k = 0; k < 3; ++k) {
        feet[n].p_w[i][k] =
            get("pw[" + std::to_string(n) + "][" + std::to_string(i) + "]." + kAxis[k]);
        if (n + 1 < horizon)
          feet[n].f[i][k] =
              get("f[" + std::to_string(n) + "][" + std::to_string(i) + "]." + kAxis[k]);
      }
      feet[n].c[i] = static_cast<int>(
          std::lround(get("c[" + std::to_string(n) + "][" + std::to_string(i) + "]")));
    }
  }
}

IntegerAssignment assignment_from_vector(const MixedIntegerQP& m, const Vec& x) {
  IntegerAssignment a = IntegerAssignment::empty(m);
  for (std::size_t k = 0; k < m.binary_idx.size(); ++k)
    a.value[k] = static_cast<std::int8_t>(std::lround(x[m.binary_idx[k]]));
  return a;
}

}  // namespace milo::relax
