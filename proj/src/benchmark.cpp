#include "dualhodge/benchmark.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <random>

namespace dualhodge {

namespace {

bool is_box(BenchmarkGeometry g)
{
    return g != BenchmarkGeometry::SquareResistorEighth;
}

/// Structured lattice of nx x ny x nz hexes, some of which may be left out.
struct Lattice {
    int nx = 1, ny = 1, nz = 1;
    double dx = 1, dy = 1, dz = 1;

    std::int64_t node_key(int i, int j, int k) const
    {
        return (static_cast<std::int64_t>(k) * (ny + 1) + j) * (nx + 1) + i;
    }
};

} // namespace

BenchmarkGeometry parse_geometry(const std::string& name)
{
    if (name == "unit_box" || name == "uniform")
        return BenchmarkGeometry::UnitBox;
    if (name == "series_box" || name == "series")
        return BenchmarkGeometry::SeriesBox;
    if (name == "parallel_box" || name == "parallel")
        return BenchmarkGeometry::ParallelBox;
    if (name == "square_resistor_eighth" || name == "square_resistor")
        return BenchmarkGeometry::SquareResistorEighth;
    throw Error(ErrorCode::InvalidArgument,
                "unknown geometry '" + name +
                    "' (use unit_box, series_box, parallel_box or square_resistor_eighth)");
}

std::string to_string(BenchmarkGeometry g)
{
    switch (g) {
    case BenchmarkGeometry::UnitBox: return "unit_box";
    case BenchmarkGeometry::SeriesBox: return "series_box";
    case BenchmarkGeometry::ParallelBox: return "parallel_box";
    case BenchmarkGeometry::SquareResistorEighth: return "square_resistor_eighth";
    }
    return "?";
}

Formulation parse_formulation(const std::string& name)
{
    if (name == "sp")
        return Formulation::SP;
    if (name == "dsp")
        return Formulation::DSP;
    throw Error(ErrorCode::InvalidArgument, "unknown formulation '" + name + "' (use sp or dsp)");
}

std::string to_string(Formulation f)
{
    return f == Formulation::SP ? "sp" : "dsp";
}

MaterialMode parse_material_mode(const std::string& name)
{
    if (name == "piecewise" || name == "hybrid")
        return MaterialMode::Piecewise;
    if (name == "weighted")
        return MaterialMode::Weighted;
    throw Error(ErrorCode::InvalidArgument,
                "unknown material mode '" + name + "' (use piecewise or weighted)");
}

std::string to_string(MaterialMode m)
{
    return m == MaterialMode::Piecewise ? "piecewise" : "weighted";
}

void BenchmarkSpec::validate() const
{
    if (level < 1)
        throw Error(ErrorCode::InvalidArgument, "refinement level must be at least 1");
    if (level > 64 || (geometry == BenchmarkGeometry::SquareResistorEighth && level > 7))
        throw Error(ErrorCode::InvalidArgument, "refinement level " + std::to_string(level) +
                                                    " is too large for " + to_string(geometry));
    if (!(jitter >= 0.0 && jitter < 0.25))
        throw Error(ErrorCode::InvalidArgument, "jitter must lie in [0, 0.25)");
    if (!std::isfinite(voltage))
        throw Error(ErrorCode::InvalidArgument, "voltage must be finite");
    if (!(sigma1 > 0 && sigma2 > 0 && std::isfinite(sigma1) && std::isfinite(sigma2)))
        throw Error(ErrorCode::InvalidArgument, "conductivities must be positive");
}

int divisions(const BenchmarkSpec& spec)
{
    switch (spec.geometry) {
    case BenchmarkGeometry::UnitBox: return spec.level;
    case BenchmarkGeometry::SeriesBox:
    case BenchmarkGeometry::ParallelBox: return 2 * ((spec.level + 1) / 2);
    case BenchmarkGeometry::SquareResistorEighth: return 3 << (spec.level - 1);
    }
    return spec.level;
}

TetMesh generate_mesh(const BenchmarkSpec& spec)
{
    spec.validate();
    const int n = divisions(spec);
    const bool resistor = spec.geometry == BenchmarkGeometry::SquareResistorEighth;
    Lattice L;
    if (resistor) {
        L.nx = L.ny = 2 * n;
        L.nz = std::max(2, (n + 1) / 2);
        L.dx = L.dy = 1.0 / n;
        L.dz = 0.5 / L.nz;
    } else {
        L.nx = L.ny = L.nz = n;
        L.dx = L.dy = L.dz = 1.0 / n;
    }
    auto included = [&](int i, int j, int k) {
        if (i < 0 || j < 0 || k < 0 || i >= L.nx || j >= L.ny || k >= L.nz)
            return false;
        return !(resistor && i < n && j < n);
    };

    // Compact node numbering over the lattice points touched by some hex.
    std::vector<Index> node_id(static_cast<std::size_t>(L.node_key(L.nx, L.ny, L.nz)) + 1, -1);
    std::vector<std::uint8_t> hex_count(node_id.size(), 0);
    std::vector<std::array<int, 3>> lattice_of;
    for (int k = 0; k <= L.nz; ++k)
        for (int j = 0; j <= L.ny; ++j)
            for (int i = 0; i <= L.nx; ++i) {
                int count = 0;
                for (int c = 0; c < 8; ++c)
                    count += included(i - (c & 1), j - ((c >> 1) & 1), k - ((c >> 2) & 1));
                if (count == 0)
                    continue;
                const auto key = L.node_key(i, j, k);
                node_id[key] = static_cast<Index>(lattice_of.size());
                hex_count[key] = static_cast<std::uint8_t>(count);
                lattice_of.push_back({i, j, k});
            }

    std::vector<Vec3> nodes;
    nodes.reserve(lattice_of.size());
    for (const auto& p : lattice_of)
        nodes.emplace_back(p[0] * L.dx, p[1] * L.dy, p[2] * L.dz);

    if (spec.jitter > 0.0) {
        const double h = std::min({L.dx, L.dy, L.dz});
        std::mt19937_64 rng(spec.seed);
        std::uniform_real_distribution<double> dist(-spec.jitter * h, spec.jitter * h);
        for (std::size_t id = 0; id < lattice_of.size(); ++id) {
            const auto& p = lattice_of[id];
            if (hex_count[L.node_key(p[0], p[1], p[2])] != 8)
                continue;
            if (spec.geometry == BenchmarkGeometry::SeriesBox && 2 * p[0] == n)
                continue;
            if (spec.geometry == BenchmarkGeometry::ParallelBox && 2 * p[1] == n)
                continue;
            for (int a = 0; a < 3; ++a)
                nodes[id][a] += dist(rng);
        }
    }

    static constexpr std::array<std::array<int, 3>, 6> kPerms{
        {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
    std::vector<std::array<Index, 4>> cells;
    std::vector<int> tags;
    std::vector<TaggedTriangle> tris;
    auto id_of = [&](std::array<int, 3> p) { return node_id[L.node_key(p[0], p[1], p[2])]; };
    for (int k = 0; k < L.nz; ++k)
        for (int j = 0; j < L.ny; ++j)
            for (int i = 0; i < L.nx; ++i) {
                if (!included(i, j, k))
                    continue;
                int tag = 1;
                if (spec.geometry == BenchmarkGeometry::SeriesBox && 2 * i >= n)
                    tag = 2;
                if (spec.geometry == BenchmarkGeometry::ParallelBox && 2 * j >= n)
                    tag = 2;
                for (const auto& perm : kPerms) {
                    std::array<int, 3> p{i, j, k};
                    std::array<Index, 4> tet{};
                    tet[0] = id_of(p);
                    for (int s = 0; s < 3; ++s) {
                        ++p[perm[s]];
                        tet[s + 1] = id_of(p);
                    }
                    cells.push_back(tet);
                    tags.push_back(tag);
                }
                // Tagged triangles on the hex faces that lie on the boundary.
                const std::array<int, 3> h{i, j, k};
                for (int a = 0; a < 3; ++a)
                    for (int side = 0; side < 2; ++side) {
                        std::array<int, 3> nb = h;
                        nb[a] += side ? 1 : -1;
                        if (included(nb[0], nb[1], nb[2]))
                            continue;
                        const int plane = h[a] + side;
                        int ftag = kInsulatedTag;
                        if (resistor) {
                            if (a < 2 && plane == n)
                                ftag = kGroundTag;
                            else if (a < 2 && plane == 2 * n)
                                ftag = kDriveTag;
                        } else if (a == 0) {
                            ftag = plane == 0 ? kGroundTag : kDriveTag;
                        }
                        if (ftag == kInsulatedTag)
                            continue;
                        const int b = (a + 1) % 3, c = (a + 2) % 3;
                        std::array<int, 3> q = h;
                        q[a] = plane;
                        std::array<int, 3> qb = q, qc = q, qbc = q;
                        ++qb[b];
                        ++qc[c];
                        ++qbc[b];
                        ++qbc[c];
                        tris.push_back({{id_of(q), id_of(qb), id_of(qbc)}, ftag});
                        tris.push_back({{id_of(q), id_of(qc), id_of(qbc)}, ftag});
                    }
            }
    return TetMesh::build(std::move(nodes), std::move(cells), std::move(tags), tris);
}

ConductionProblem benchmark_problem(const BenchmarkSpec& spec, const TetMesh& mesh)
{
    spec.validate();
    ConductionProblem p;
    p.mesh = &mesh;
    p.conductivity.reserve(mesh.num_cells());
    for (Index c = 0; c < mesh.num_cells(); ++c)
        p.conductivity.push_back(
            MaterialTensor::isotropic(mesh.cell_tag(c) == 2 ? spec.sigma2 : spec.sigma1));
    const std::pair<int, double> tags[] = {{kGroundTag, 0.0}, {kDriveTag, spec.voltage}};
    p.electrodes = electrodes_from_tags(mesh, tags);
    return p;
}

double analytic_conductance(const BenchmarkSpec& spec)
{
    switch (spec.geometry) {
    case BenchmarkGeometry::UnitBox: return spec.sigma1;
    case BenchmarkGeometry::SeriesBox: return 1.0 / (0.5 / spec.sigma1 + 0.5 / spec.sigma2);
    case BenchmarkGeometry::ParallelBox: return 0.5 * (spec.sigma1 + spec.sigma2);
    case BenchmarkGeometry::SquareResistorEighth:
        return spec.sigma1 * kSquareResistorConductance / kSquareResistorSymmetryFactor;
    }
    return 0.0;
}

double analytic_potential(const BenchmarkSpec& spec, const Vec3& x)
{
    if (!is_box(spec.geometry))
        throw Error(ErrorCode::InvalidArgument, "no closed-form potential for " + to_string(spec.geometry));
    if (spec.geometry != BenchmarkGeometry::SeriesBox)
        return spec.voltage * x.x();
    const double J = analytic_conductance(spec) * spec.voltage;
    if (x.x() <= 0.5)
        return J * x.x() / spec.sigma1;
    return J * 0.5 / spec.sigma1 + J * (x.x() - 0.5) / spec.sigma2;
}

PatchReport run_patch_test(const BenchmarkSpec& spec, Formulation formulation, MaterialMode mode,
                           const SolverOptions& options, double threshold, SolveResult* solution)
{
    if (!is_box(spec.geometry))
        throw Error(ErrorCode::InvalidArgument, "patch tests run on the box geometries only");
    const TetMesh mesh = generate_mesh(spec);
    const ConductionProblem problem = benchmark_problem(spec, mesh);
    SolverOptions opts = options;
    opts.material_mode = mode;
    SolveResult res = formulation == Formulation::SP ? solve_sp(problem, opts) : solve_dsp(problem, opts);

    PatchReport r;
    r.spec = spec;
    r.formulation = formulation;
    r.mode = mode;
    r.cells = mesh.num_cells();
    r.conductance = res.conductance;
    r.conductance_power = res.conductance_power;
    r.expected_conductance = analytic_conductance(spec);
    r.conservation_residual = res.conservation_residual;
    r.circuital_residual = res.circuital_residual;
    r.iterations = res.iterations;
    r.constructions = res.constructions;

    const GeometricVectors g = geometric_vectors(mesh);
    if (formulation == Formulation::SP) {
        for (Index n = 0; n < mesh.num_nodes(); ++n)
            r.potential_deviation = std::max(
                r.potential_deviation, std::abs(res.potentials[n] - analytic_potential(spec, mesh.node(n))));
    } else {
        for (Index c = 0; c < mesh.num_cells(); ++c)
            r.potential_deviation =
                std::max(r.potential_deviation,
                         std::abs(res.potentials[c] - analytic_potential(spec, g.cell_barycenters[c])));
    }

    // Exact field: uniform inside each material region.
    auto exact_E = [&](Index c) {
        const double J = analytic_conductance(spec) * spec.voltage;
        if (spec.geometry == BenchmarkGeometry::SeriesBox)
            return Vec3(-J / (mesh.cell_tag(c) == 2 ? spec.sigma2 : spec.sigma1), 0, 0);
        return Vec3(-spec.voltage, 0, 0);
    };
    for (Index c = 0; c < mesh.num_cells(); ++c)
        r.field_deviation = std::max(r.field_deviation, (res.cell_E[c] - exact_E(c)).norm());

    for (Index f = 0; f < mesh.num_faces(); ++f) {
        const auto& fc = mesh.face_cells(f);
        if (fc[1] < 0 || mesh.cell_tag(fc[0]) == mesh.cell_tag(fc[1]))
            continue;
        const Vec3 nrm = g.face_vectors[f].normalized();
        const Vec3 dE = res.cell_E[fc[0]] - res.cell_E[fc[1]];
        const Vec3 dJ = res.cell_J[fc[0]] - res.cell_J[fc[1]];
        r.tangential_E_jump = std::max(r.tangential_E_jump, (dE - dE.dot(nrm) * nrm).norm());
        r.normal_J_jump = std::max(r.normal_J_jump, std::abs(dJ.dot(nrm)));
    }

    r.passed = r.potential_deviation < threshold &&
               std::abs(r.conductance - r.expected_conductance) < threshold &&
               std::abs(r.conductance_power - r.expected_conductance) < threshold &&
               r.tangential_E_jump < threshold && r.normal_J_jump < threshold;
    if (solution)
        *solution = std::move(res);
    return r;
}

std::vector<ReportRow> run_square_resistor(const std::vector<int>& levels,
                                           const std::vector<Formulation>& formulations,
                                           const SolverOptions& options)
{
    if (levels.empty() || formulations.empty())
        throw Error(ErrorCode::InvalidArgument, "at least one level and one formulation are required");
    std::vector<int> sorted = levels;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    std::vector<ReportRow> rows;
    for (int level : sorted) {
        BenchmarkSpec spec;
        spec.geometry = BenchmarkGeometry::SquareResistorEighth;
        spec.level = level;
        spec.validate();
        const TetMesh mesh = generate_mesh(spec);
        const ConductionProblem problem = benchmark_problem(spec, mesh);
        for (Formulation f : formulations) {
            const auto t0 = std::chrono::steady_clock::now();
            const SolveResult res = f == Formulation::SP ? solve_sp(problem, options)
                                                         : solve_dsp(problem, options);
            const auto t1 = std::chrono::steady_clock::now();
            ReportRow row;
            row.level = level;
            row.h = 1.0 / divisions(spec);
            row.cells = mesh.num_cells();
            row.formulation = f;
            row.mode = options.material_mode;
            row.conductance = kSquareResistorSymmetryFactor * res.conductance;
            row.relative_error =
                std::abs(row.conductance - kSquareResistorConductance) / kSquareResistorConductance;
            row.power = kSquareResistorSymmetryFactor * res.power;
            row.iterations = res.iterations;
            row.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
            rows.push_back(row);
        }
    }
    return rows;
}

void write_report_csv(const std::vector<ReportRow>& rows, std::ostream& out, bool timing)
{
    out << "level,h,cells,formulation,material_mode,G,G_ref,rel_error,P,iterations";
    if (timing)
        out << ",wall_s";
    out << '\n';
    char buf[512];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%d,%.10g,%d,%s,%s,%.12g,%.10g,%.6e,%.12g,%d", r.level, r.h,
                      static_cast<int>(r.cells), to_string(r.formulation).c_str(),
                      to_string(r.mode).c_str(), r.conductance, kSquareResistorConductance,
                      r.relative_error, r.power, r.iterations);
        out << buf;
        if (timing) {
            std::snprintf(buf, sizeof buf, ",%.3f", r.wall_seconds);
            out << buf;
        }
        out << '\n';
    }
}

ResistorChecks check_resistor_rows(const std::vector<ReportRow>& rows)
{
    ResistorChecks checks;
    double previous = INFINITY;
    for (const auto& r : rows) {
        if (r.formulation == Formulation::SP && r.conductance < kSquareResistorConductance)
            checks.sp_upper_bound = false;
        if (r.formulation == Formulation::DSP) {
            if (!(r.relative_error < previous))
                checks.dsp_error_decreasing = false;
            previous = r.relative_error;
        }
    }
    return checks;
}

} // namespace dualhodge
