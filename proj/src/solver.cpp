#include "thermesh/solver.hpp"

#include <Eigen/SparseCholesky>
#include <cmath>
#include <map>

namespace thermesh {

namespace {

constexpr double kGauss = 0.57735026918962576451;  // 1/sqrt(3)

struct QuadPoint {
  double xi, eta, w;
};
constexpr QuadPoint kQuad4[4] = {
    {-kGauss, -kGauss, 1.0}, {kGauss, -kGauss, 1.0}, {kGauss, kGauss, 1.0}, {-kGauss, kGauss, 1.0}};

void shape_q4(double xi, double eta, double n[4], double dxi[4], double deta[4]) {
  n[0] = 0.25 * (1 - xi) * (1 - eta);
  n[1] = 0.25 * (1 + xi) * (1 - eta);
  n[2] = 0.25 * (1 + xi) * (1 + eta);
  n[3] = 0.25 * (1 - xi) * (1 + eta);
  dxi[0] = -0.25 * (1 - eta);
  dxi[1] = 0.25 * (1 - eta);
  dxi[2] = 0.25 * (1 + eta);
  dxi[3] = -0.25 * (1 + eta);
  deta[0] = -0.25 * (1 - xi);
  deta[1] = -0.25 * (1 + xi);
  deta[2] = 0.25 * (1 + xi);
  deta[3] = 0.25 * (1 - xi);
}

}  // namespace

ThermalSolver::ThermalSolver(const LayeredMesh& mesh, MaterialTables tables,
                             ProcessConfig process, SolverConfig cfg)
    : mesh_(mesh), tables_(std::move(tables)), process_(process), cfg_(cfg) {
  tables_.validate();
  process_.validate();
  temp_c_ = Vec::Constant(mesh_.num_nodes(), process_.ambient_c);
}

void ThermalSolver::set_temperatures_c(const Vec& t) {
  if (t.size() != temp_c_.size()) throw ValidationError("solver: temperature size mismatch");
  temp_c_ = t;
}

void ThermalSolver::activate_layer(int layer) {
  if (layer < active_layer_) throw ValidationError("solver: activation never retracts");
  if (layer >= mesh_.num_layers) throw ValidationError("solver: layer beyond mesh");
  if (layer == active_layer_) return;
  // nodes that join the domain start at ambient
  MaskPair next = activation_masks(mesh_, layer);
  for (int n = 0; n < mesh_.num_nodes(); ++n) {
    bool was = active_layer_ >= 0 && masks_.active[static_cast<std::size_t>(n)] != 0;
    if (!was && next.active[static_cast<std::size_t>(n)] != 0) {
      temp_c_(n) = process_.ambient_c;
    }
  }
  active_layer_ = layer;
  masks_ = std::move(next);
  rebuild_active_sets();
}

void ThermalSolver::rebuild_active_sets() {
  active_elems_.clear();
  for (int e = 0; e < mesh_.num_elems(); ++e) {
    if (mesh_.elem_layer[static_cast<std::size_t>(e)] <= active_layer_) active_elems_.push_back(e);
  }
  if (active_elems_.empty()) throw ComputeError("solver: empty active domain");

  dof_of_.assign(static_cast<std::size_t>(mesh_.num_nodes()), -1);
  node_of_.clear();
  for (int e : active_elems_) {
    for (int k = 0; k < 4; ++k) {
      int n = mesh_.elems[static_cast<std::size_t>(e)][static_cast<std::size_t>(k)];
      if (dof_of_[static_cast<std::size_t>(n)] < 0) {
        dof_of_[static_cast<std::size_t>(n)] = static_cast<int>(node_of_.size());
        node_of_.push_back(n);
      }
    }
  }

  // boundary = faces owned by exactly one active element
  std::map<std::pair<int, int>, int> face_count;
  auto face_key = [](int a, int b) { return std::make_pair(std::min(a, b), std::max(a, b)); };
  for (int e : active_elems_) {
    const auto& q = mesh_.elems[static_cast<std::size_t>(e)];
    for (int k = 0; k < 4; ++k) {
      face_count[face_key(q[static_cast<std::size_t>(k)], q[static_cast<std::size_t>((k + 1) % 4)])]++;
    }
  }
  boundary_edges_.clear();
  int top_row = mesh_.top_row_of_layer(active_layer_);
  auto [mx0, mx1] = mesh_.metal_extent_top_mm[static_cast<std::size_t>(active_layer_)];
  for (const auto& [key, count] : face_count) {
    if (count != 1) continue;
    BoundaryEdge be;
    be.n0 = key.first;
    be.n1 = key.second;
    const auto& p0 = mesh_.coords_mm[static_cast<std::size_t>(be.n0)];
    const auto& p1 = mesh_.coords_mm[static_cast<std::size_t>(be.n1)];
    be.length_m = (p1 - p0).norm() * 1e-3;
    double xmid = 0.5 * (p0.x() + p1.x());
    bool on_top = mesh_.node_row(be.n0) == top_row && mesh_.node_row(be.n1) == top_row;
    be.laser_candidate = on_top && xmid > mx0 && xmid < mx1;
    boundary_edges_.push_back(be);
  }
}

double ThermalSolver::element_energy(const Vec& temps) const {
  double u = 0.0;
  double n[4], dxi[4], deta[4];
  for (int e : active_elems_) {
    const auto& q = mesh_.elems[static_cast<std::size_t>(e)];
    double xs[4], ys[4], ts[4];
    for (int k = 0; k < 4; ++k) {
      xs[k] = mesh_.coords_mm[static_cast<std::size_t>(q[static_cast<std::size_t>(k)])].x() * 1e-3;
      ys[k] = mesh_.coords_mm[static_cast<std::size_t>(q[static_cast<std::size_t>(k)])].y() * 1e-3;
      ts[k] = temps(q[static_cast<std::size_t>(k)]);
    }
    for (const QuadPoint& g : kQuad4) {
      shape_q4(g.xi, g.eta, n, dxi, deta);
      double j11 = 0, j12 = 0, j21 = 0, j22 = 0, tq = 0;
      for (int k = 0; k < 4; ++k) {
        j11 += dxi[k] * xs[k];
        j12 += dxi[k] * ys[k];
        j21 += deta[k] * xs[k];
        j22 += deta[k] * ys[k];
        tq += n[k] * ts[k];
      }
      double det = j11 * j22 - j12 * j21;
      u += tables_.density_kg_m3 * tables_.enthalpy(tq) * g.w * det;
    }
  }
  return u;
}

double ThermalSolver::internal_energy_j() const { return element_energy(temp_c_); }

StepDiagnostics ThermalSolver::step(double dt_s, bool heating, double laser_x_mm) {
  if (active_layer_ < 0) throw ComputeError("solver: no layer activated");
  if (!(dt_s > 0)) throw ValidationError("solver: dt must be positive");

  const int ndof = static_cast<int>(node_of_.size());
  Vec t_old(ndof);
  for (int d = 0; d < ndof; ++d) t_old(d) = temp_c_(node_of_[static_cast<std::size_t>(d)]);

  Vec t_iter = t_old;
  StepDiagnostics diag;
  double n[4], dxi[4], deta[4];

  Vec t_new = t_old;
  for (int it = 1; it <= cfg_.picard_max_iters; ++it) {
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(active_elems_.size()) * 32);
    Vec rhs = Vec::Zero(ndof);
    Vec lumped = Vec::Zero(ndof);

    for (int e : active_elems_) {
      const auto& q = mesh_.elems[static_cast<std::size_t>(e)];
      bool metal = mesh_.elem_is_metal[static_cast<std::size_t>(e)] != 0;
      double xs[4], ys[4], to[4], ti[4];
      int dof[4];
      for (int k = 0; k < 4; ++k) {
        int node = q[static_cast<std::size_t>(k)];
        xs[k] = mesh_.coords_mm[static_cast<std::size_t>(node)].x() * 1e-3;
        ys[k] = mesh_.coords_mm[static_cast<std::size_t>(node)].y() * 1e-3;
        dof[k] = dof_of_[static_cast<std::size_t>(node)];
        to[k] = t_old(dof[k]);
        ti[k] = t_iter(dof[k]);
      }
      double ke[4][4] = {};
      double me_cons[4][4] = {};
      double me_lump[4] = {};
      for (const QuadPoint& g : kQuad4) {
        shape_q4(g.xi, g.eta, n, dxi, deta);
        double j11 = 0, j12 = 0, j21 = 0, j22 = 0;
        for (int k = 0; k < 4; ++k) {
          j11 += dxi[k] * xs[k];
          j12 += dxi[k] * ys[k];
          j21 += deta[k] * xs[k];
          j22 += deta[k] * ys[k];
        }
        double det = j11 * j22 - j12 * j21;
        if (det <= 0) throw ComputeError("solver: degenerate element " + std::to_string(e));
        double inv11 = j22 / det, inv12 = -j12 / det, inv21 = -j21 / det, inv22 = j11 / det;
        double bx[4], by[4];
        double t_old_q = 0, t_iter_q = 0;
        for (int k = 0; k < 4; ++k) {
          bx[k] = inv11 * dxi[k] + inv12 * deta[k];
          by[k] = inv21 * dxi[k] + inv22 * deta[k];
          t_old_q += n[k] * to[k];
          t_iter_q += n[k] * ti[k];
        }
        double lambda = metal ? tables_.lambda_metal(t_iter_q) : tables_.lambda_powder(t_iter_q);
        double kappa = tables_.density_kg_m3 * tables_.apparent_capacity(t_old_q, t_iter_q);
        for (int a = 0; a < 4; ++a) {
          for (int b = 0; b < 4; ++b) {
            ke[a][b] += lambda * (bx[a] * bx[b] + by[a] * by[b]) * g.w * det;
            me_cons[a][b] += kappa * n[a] * n[b] * g.w * det;
          }
          me_lump[a] += kappa * n[a] * g.w * det;
        }
      }
      for (int a = 0; a < 4; ++a) {
        for (int b = 0; b < 4; ++b) {
          double m = cfg_.lumped_mass ? 0.0 : me_cons[a][b];
          double v = ke[a][b] + m / dt_s;
          if (v != 0.0) trips.emplace_back(dof[a], dof[b], v);
          if (!cfg_.lumped_mass) rhs(dof[a]) += me_cons[a][b] / dt_s * to[b];
        }
        if (cfg_.lumped_mass) {
          lumped(dof[a]) += me_lump[a];
          rhs(dof[a]) += me_lump[a] / dt_s * to[a];
        }
      }
    }
    if (cfg_.lumped_mass) {
      for (int d = 0; d < ndof; ++d) {
        if (lumped(d) != 0.0) trips.emplace_back(d, d, lumped(d) / dt_s);
      }
    }

    double flux_in = 0.0;
    double h = process_.convection_w_m2k;
    for (const BoundaryEdge& be : boundary_edges_) {
      int d0 = dof_of_[static_cast<std::size_t>(be.n0)];
      int d1 = dof_of_[static_cast<std::size_t>(be.n1)];
      bool lasered = heating && be.laser_candidate;
      if (lasered) {
        // 2-point Gauss line quadrature of the beam profile
        double x0 = mesh_.coords_mm[static_cast<std::size_t>(be.n0)].x();
        double x1 = mesh_.coords_mm[static_cast<std::size_t>(be.n1)].x();
        double half = be.length_m / 2;
        for (double gp : {-kGauss, kGauss}) {
          double xq = 0.5 * (x0 + x1) + 0.5 * gp * (x1 - x0);
          double qv = laser_flux_w_m2(xq, laser_x_mm, true, process_);
          double n0 = 0.5 * (1 - gp), n1 = 0.5 * (1 + gp);
          rhs(d0) += qv * n0 * half;
          rhs(d1) += qv * n1 * half;
          flux_in += qv * half;
        }
      } else if (h > 0.0) {
        double l = be.length_m;
        if (cfg_.lumped_mass) {
          trips.emplace_back(d0, d0, h * l / 2);
          trips.emplace_back(d1, d1, h * l / 2);
        } else {
          trips.emplace_back(d0, d0, h * l / 3);
          trips.emplace_back(d1, d1, h * l / 3);
          trips.emplace_back(d0, d1, h * l / 6);
          trips.emplace_back(d1, d0, h * l / 6);
        }
        rhs(d0) += h * process_.ambient_c * l / 2;
        rhs(d1) += h * process_.ambient_c * l / 2;
      }
    }

    Eigen::SparseMatrix<double> a(ndof, ndof);
    a.setFromTriplets(trips.begin(), trips.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(a);
    if (ldlt.info() != Eigen::Success) {
      throw ComputeError("solver: factorization failed (singular or indefinite system)");
    }
    t_new = ldlt.solve(rhs);
    double lin_res = (a * t_new - rhs).norm() / std::max(1e-30, rhs.norm());
    if (lin_res > cfg_.linear_residual) {
      throw ComputeError("solver: linear residual " + std::to_string(lin_res) + " above contract");
    }

    diag.picard_iters = it;
    diag.update_norm =
        (t_new - t_iter).cwiseAbs().maxCoeff() / std::max(1.0, t_new.cwiseAbs().maxCoeff());
    diag.energy_in_j = flux_in * dt_s;
    t_iter = t_new;
    if (diag.update_norm < cfg_.picard_tol) break;
    if (it == cfg_.picard_max_iters) {
      throw ComputeError("solver: fixed-point iteration did not converge, update " +
                         std::to_string(diag.update_norm));
    }
  }

  // convective losses evaluated at the accepted end-of-step state
  double h = process_.convection_w_m2k;
  double out = 0.0;
  if (h > 0.0) {
    for (const BoundaryEdge& be : boundary_edges_) {
      if (heating && be.laser_candidate) continue;
      int d0 = dof_of_[static_cast<std::size_t>(be.n0)];
      int d1 = dof_of_[static_cast<std::size_t>(be.n1)];
      // row sums of the Robin matrix are h*l/2 per node for both the lumped
      // and the consistent variant
      double l = be.length_m;
      out += h * l / 2 * (t_new(d0) - process_.ambient_c);
      out += h * l / 2 * (t_new(d1) - process_.ambient_c);
    }
  }
  diag.energy_out_j = out * dt_s;

  double u_before = element_energy(temp_c_);
  for (int d = 0; d < ndof; ++d) temp_c_(node_of_[static_cast<std::size_t>(d)]) = t_new(d);
  diag.internal_delta_j = element_energy(temp_c_) - u_before;
  return diag;
}

void SimulationBundle::validate() const {
  if (times_s.size() != temps_c.size() || times_s.size() != active.size() ||
      times_s.size() != material.size() || times_s.size() != layer_index.size()) {
    throw ValidationError("bundle: per-step array lengths disagree");
  }
  for (std::size_t s = 0; s < temps_c.size(); ++s) {
    for (int nidx = 0; nidx < mesh.num_nodes(); ++nidx) {
      if (active[s][static_cast<std::size_t>(nidx)] == 0 &&
          temps_c[s](nidx) != 0.0) {
        throw ValidationError("bundle: inactive node carries a temperature");
      }
    }
  }
}

SimulationBundle simulate(const PartGeometry& geom, const MeshConfig& mesh_cfg,
                          const ProcessConfig& process, const MaterialTables& tables,
                          const SolverConfig& solver_cfg, const std::string& id,
                          const GeometryParams& params) {
  SimulationBundle b;
  b.id = id;
  b.params = params;
  b.height_mm = geom.height_mm;
  b.mesh = generate_mesh(geom, mesh_cfg);
  ProcessSchedule schedule = build_schedule(geom, process);

  ThermalSolver solver(b.mesh, tables, process, solver_cfg);
  solver.activate_layer(0);

  // the archive stores the process trace and temperatures as float32; round
  // at record time so in-memory and round-tripped bundles agree bit-exactly
  auto f32 = [](double v) { return static_cast<double>(static_cast<float>(v)); };
  auto record = [&](double t, int layer, bool heat, double lx) {
    b.times_s.push_back(t);
    b.layer_index.push_back(layer);
    b.heating.push_back(heat ? 1 : 0);
    b.laser_x_mm.push_back(f32(lx));
    b.laser_power_w.push_back(f32(heat ? process.laser_power_w : 0.0));
    const MaskPair& m = solver.masks();
    b.active.push_back(m.active);
    b.material.push_back(m.material);
    Vec t_rec = solver.temperatures_c();
    for (int nidx = 0; nidx < b.mesh.num_nodes(); ++nidx) {
      t_rec(nidx) = m.active[static_cast<std::size_t>(nidx)] == 0 ? 0.0 : f32(t_rec(nidx));
    }
    b.temps_c.push_back(std::move(t_rec));
  };

  double x_start = geom.extent_top[0].first;
  record(0.0, 0, false, x_start);

  double t_prev = 0.0;
  for (int k = 0; k < schedule.num_steps(); ++k) {
    const ScanStep& st = schedule.steps[static_cast<std::size_t>(k)];
    if (st.layer != solver.active_layer()) solver.activate_layer(st.layer);
    try {
      solver.step(st.time_s - t_prev, st.heating, st.laser_x_mm);
    } catch (const std::exception& ex) {
      throw ComputeError("simulate(" + id + "): layer " + std::to_string(st.layer) + " step " +
                         std::to_string(k) + ": " + ex.what());
    }
    t_prev = st.time_s;
    record(st.time_s, st.layer, st.heating, st.laser_x_mm);
  }
  return b;
}

}  // namespace thermesh
