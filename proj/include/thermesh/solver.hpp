#pragma once

#include <Eigen/Sparse>

#include "thermesh/bundle.hpp"
#include "thermesh/material.hpp"
#include "thermesh/mesh.hpp"
#include "thermesh/process.hpp"

namespace thermesh {

struct SolverConfig {
  double picard_tol = 1e-6;    // relative fixed-point tolerance on T
  int picard_max_iters = 50;
  bool lumped_mass = true;     // row-sum lumping of capacity and Robin terms
  double linear_residual = 1e-10;
};

struct StepDiagnostics {
  int picard_iters = 0;
  double update_norm = 0.0;       // last fixed-point update, relative
  double energy_in_j = 0.0;       // laser deposition over the step (per m depth)
  double energy_out_j = 0.0;      // convective loss over the step
  double internal_delta_j = 0.0;  // U(T_new) - U(T_old)
};

/// Implicit-Euler finite element solver for transient heat conduction with
/// element activation, temperature-dependent properties and latent heat
/// handled through an apparent (enthalpy-chord) capacity.
class ThermalSolver {
public:
  ThermalSolver(const LayeredMesh& mesh, MaterialTables tables, ProcessConfig process,
                SolverConfig cfg);

  /// Activates all layers up to and including `layer`; newly active nodes
  /// start at ambient temperature.
  void activate_layer(int layer);
  int active_layer() const { return active_layer_; }

  /// Advances one implicit step of length dt ending at the given laser state.
  StepDiagnostics step(double dt_s, bool heating, double laser_x_mm);

  /// Full-mesh temperature vector; entries of inactive nodes equal ambient.
  const Vec& temperatures_c() const { return temp_c_; }
  void set_temperatures_c(const Vec& t);

  /// Total internal (sensible + latent) energy of the active domain in J per
  /// meter of depth, measured relative to the enthalpy datum.
  double internal_energy_j() const;

  const MaskPair& masks() const { return masks_; }

private:
  struct BoundaryEdge {
    int n0, n1;
    double length_m;
    bool laser_candidate;  // lies on the current top surface inside the metal extent
  };

  void rebuild_active_sets();
  double element_energy(const Vec& temps) const;

  const LayeredMesh& mesh_;
  MaterialTables tables_;
  ProcessConfig process_;
  SolverConfig cfg_;

  int active_layer_ = -1;
  MaskPair masks_;
  std::vector<int> active_elems_;
  std::vector<int> dof_of_;     // node -> active dof or -1
  std::vector<int> node_of_;    // dof -> node
  std::vector<BoundaryEdge> boundary_edges_;
  Vec temp_c_;
};

/// Runs the whole deposition schedule and records every step.
SimulationBundle simulate(const PartGeometry& geom, const MeshConfig& mesh_cfg,
                          const ProcessConfig& process, const MaterialTables& tables,
                          const SolverConfig& solver_cfg, const std::string& id,
                          const GeometryParams& params);

}  // namespace thermesh
