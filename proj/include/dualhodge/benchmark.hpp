#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "dualhodge/solver.hpp"

namespace dualhodge {

enum class BenchmarkGeometry { UnitBox, SeriesBox, ParallelBox, SquareResistorEighth };

BenchmarkGeometry parse_geometry(const std::string& name);
std::string to_string(BenchmarkGeometry g);
Formulation parse_formulation(const std::string& name);
std::string to_string(Formulation f);
MaterialMode parse_material_mode(const std::string& name);
std::string to_string(MaterialMode m);

/// Boundary tags of generated meshes.
inline constexpr int kInsulatedTag = 0;
inline constexpr int kGroundTag = 1;
inline constexpr int kDriveTag = 2;

/// Conductance of the full square resistor (h = 1 m, d = 4 m, l = 2 m, σ = 1 S/m).
inline constexpr double kSquareResistorConductance = 10.23409256;
/// The one-eighth model sees 1/8 of the conductance.
inline constexpr double kSquareResistorSymmetryFactor = 8.0;

/// Built-in structured meshes, split 6 tets per hexahedron along the main
/// diagonal of each hex.
///
///  - unit_box: [0,1]^3 with level^3 hexes, σ = 1.
///  - series_box / parallel_box: [0,1]^3 with n = 2 ceil(level/2) hexes per
///    side; σ = 1 for x < 1/2 (resp. y < 1/2) and σ = 2 beyond.
///  - square_resistor_eighth: the L-shaped prism ([0,2]^2 minus [0,1)^2) x
///    [0,1/2] with N = 3 2^(level-1) hexes per metre in x and y and N/2 layers
///    in z (at least 2). Planes x = 0, y = 0 and z = 0 are symmetry planes and
///    z = 1/2 is the top face; all four are insulated.
///
/// Boxes use x = 0 as the ground electrode and x = 1 as the driven one; the
/// resistor uses its inner faces (x = 1 or y = 1) as ground and its outer
/// faces (x = 2 or y = 2) as driven. Jitter moves interior nodes off
/// material interfaces by up to jitter * h in each coordinate.
struct BenchmarkSpec {
    BenchmarkGeometry geometry = BenchmarkGeometry::UnitBox;
    int level = 1;
    double jitter = 0.0;
    std::uint64_t seed = 0;
    double voltage = 1.0;
    double sigma1 = 1.0;
    double sigma2 = 2.0;

    void validate() const;
};

/// Divisions per unit length along x for the benchmark's geometry and level.
int divisions(const BenchmarkSpec& spec);

TetMesh generate_mesh(const BenchmarkSpec& spec);

/// Problem on a generated mesh: σ from the cell tags, ground electrode at 0 V
/// and driven electrode at spec.voltage.
ConductionProblem benchmark_problem(const BenchmarkSpec& spec, const TetMesh& mesh);

/// Analytic potential of the box benchmarks.
double analytic_potential(const BenchmarkSpec& spec, const Vec3& x);
double analytic_conductance(const BenchmarkSpec& spec);

struct PatchReport {
    BenchmarkSpec spec;
    Formulation formulation = Formulation::DSP;
    MaterialMode mode = MaterialMode::Piecewise;
    Index cells = 0;
    double conductance = 0.0;
    double conductance_power = 0.0;
    double expected_conductance = 0.0;
    double potential_deviation = 0.0; ///< max |U − U_exact| at nodes (SP) or barycenters (DSP)
    double field_deviation = 0.0;     ///< max |E_c − E_exact|
    double tangential_E_jump = 0.0;   ///< across material interfaces
    double normal_J_jump = 0.0;
    double conservation_residual = 0.0;
    double circuital_residual = 0.0;
    int iterations = 0;
    std::vector<DualCellConstruction> constructions;
    bool passed = false;
};

/// Runs a box benchmark and compares with the analytic solution; passes when
/// the potential, conductance and interface jumps are within threshold.
PatchReport run_patch_test(const BenchmarkSpec& spec, Formulation formulation, MaterialMode mode,
                           const SolverOptions& options, double threshold = 1e-9,
                           SolveResult* solution = nullptr);

struct ReportRow {
    int level = 0;
    double h = 0.0;
    Index cells = 0;
    Formulation formulation = Formulation::DSP;
    MaterialMode mode = MaterialMode::Piecewise;
    double conductance = 0.0; ///< full resistor
    double relative_error = 0.0;
    double power = 0.0;       ///< full resistor at the applied voltage
    int iterations = 0;
    double wall_seconds = 0.0;
};

/// One row per (level, formulation), levels in ascending order.
std::vector<ReportRow> run_square_resistor(const std::vector<int>& levels,
                                           const std::vector<Formulation>& formulations,
                                           const SolverOptions& options);

/// CSV with a fixed column order; the wall-time column only when requested,
/// so the default output is byte-stable.
void write_report_csv(const std::vector<ReportRow>& rows, std::ostream& out, bool timing);

struct ResistorChecks {
    bool sp_upper_bound = true;      ///< every SP row ≥ reference
    bool dsp_error_decreasing = true; ///< strictly, level to level
};

ResistorChecks check_resistor_rows(const std::vector<ReportRow>& rows);

} // namespace dualhodge
