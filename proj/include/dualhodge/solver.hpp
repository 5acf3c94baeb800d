#pragma once

#include <span>
#include <utility>
#include <vector>

#include "dualhodge/assembly.hpp"

namespace dualhodge {

enum class Formulation {
    SP,  ///< nodal scalar potential
    DSP, ///< one potential per cell, on the dual nodes
};

/// Boundary faces held at a fixed voltage.
struct Electrode {
    std::vector<Index> faces;
    double voltage = 0.0;
};

/// Stationary conduction problem. Electrode 0 is the 0 V reference; every
/// boundary face not on an electrode is insulated.
struct ConductionProblem {
    const TetMesh* mesh = nullptr;
    std::vector<MaterialTensor> conductivity; ///< per cell
    std::vector<Electrode> electrodes;

    void validate() const;
};

/// Electrodes collected from boundary face tags, one per (tag, voltage) pair.
std::vector<Electrode> electrodes_from_tags(const TetMesh& mesh,
                                            std::span<const std::pair<int, double>> tags);

struct SolverOptions {
    double tol = 1e-10;
    int max_iter = 0; ///< 0 selects 20 x number of unknowns
    MaterialMode material_mode = MaterialMode::Piecewise;
    StabilizationParams stab;
};

struct SolveResult {
    Formulation formulation = Formulation::DSP;
    std::vector<double> potentials; ///< per node (SP) or per cell (DSP)
    std::vector<double> voltages;   ///< per edge (SP) or per dual edge / face (DSP)
    std::vector<double> currents;   ///< per dual face / edge (SP) or per face (DSP)
    std::vector<Vec3> cell_E;
    std::vector<Vec3> cell_J;
    double applied_voltage = 0.0;   ///< voltage of electrode 1
    double current = 0.0;           ///< current injected through electrode 1
    double power = 0.0;
    double conductance = 0.0;       ///< current / voltage
    double conductance_power = 0.0; ///< power / voltage²
    int iterations = 0;
    double relative_residual = 0.0;
    double conservation_residual = 0.0; ///< ‖D J‖∞ / ‖J‖∞ (DSP)
    double circuital_residual = 0.0;    ///< ‖Cᵀ Ẽ‖∞ / ‖Ẽ‖∞ over closed dual faces (DSP)
    std::vector<DualCellConstruction> constructions; ///< per node (DSP)
};

/// E_s on dual edges (per face): D_{c,f} times the electrode voltage on
/// electrode faces, zero elsewhere. Verifies Cᵀ E_s = 0 on closed dual faces.
std::vector<double> build_source_voltages(const ConductionProblem& problem);

/// Edges whose dual face is closed: no insulated face through the edge and no
/// two electrodes meeting at it.
std::vector<std::uint8_t> closed_dual_faces(const ConductionProblem& problem);

SolveResult solve_dsp(const ConductionProblem& problem, const SolverOptions& options = {});
SolveResult solve_sp(const ConductionProblem& problem, const SolverOptions& options = {});

/// Fills cell_E and cell_J from the DoFs of a solve.
void reconstruct_cell_fields(SolveResult& result, const TetMesh& mesh, const DualGeometry& dual,
                             std::span<const MaterialTensor> conductivity);

/// vᵀ M v.
double dissipated_power(const SparseMatrix& M, std::span<const double> v);

struct CgResult {
    int iterations = 0;
    double relative_residual = 0.0;
};

/// Jacobi-preconditioned conjugate gradients on an SPD matrix, starting from
/// x and stopping at ‖b − A x‖₂ ≤ tol ‖b‖₂ (true residual). When the
/// target lies below the attainable accuracy it returns once restarts stop
/// improving, so callers compare relative_residual with tol. Throws
/// NotConverged after max_iter iterations and NotPositiveDefinite on a
/// nonpositive curvature or diagonal.
CgResult conjugate_gradient(const SparseMatrix& A, std::span<const double> b, std::span<double> x,
                            double tol, int max_iter);

} // namespace dualhodge
