#include "dualhodge/mesh_io.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace dualhodge {

namespace {

/// Whitespace tokenizer over a stream that skips '#' comment lines and keeps
/// track of the line number for error messages.
class Tokenizer {
public:
    explicit Tokenizer(std::istream& in) : in_(in) {}

    bool next(std::string& tok)
    {
        if (!pending_.empty()) {
            tok = std::move(pending_);
            pending_.clear();
            return true;
        }
        while (!(line_ >> tok)) {
            std::string raw;
            if (!std::getline(in_, raw))
                return false;
            ++lineno_;
            auto hash = raw.find('#');
            if (hash != std::string::npos)
                raw.erase(hash);
            line_.clear();
            line_.str(raw);
        }
        return true;
    }

    std::string expect(const char* what)
    {
        std::string tok;
        if (!next(tok))
            fail(std::string("unexpected end of file, expected ") + what);
        return tok;
    }

    long long integer(const char* what)
    {
        std::string tok = expect(what);
        long long v = 0;
        auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc() || p != tok.data() + tok.size())
            fail(std::string("expected integer ") + what + ", got '" + tok + "'");
        return v;
    }

    double real(const char* what)
    {
        std::string tok = expect(what);
        try {
            std::size_t used = 0;
            double v = std::stod(tok, &used);
            if (used == tok.size())
                return v;
        } catch (const std::exception&) {
        }
        fail(std::string("expected number ") + what + ", got '" + tok + "'");
    }

    bool at_end()
    {
        std::string tok;
        if (!next(tok))
            return true;
        pending_ = tok;
        return false;
    }

    [[noreturn]] void fail(const std::string& msg) const
    {
        throw Error(ErrorCode::Parse, "line " + std::to_string(lineno_) + ": " + msg);
    }

private:
    std::istream& in_;
    std::istringstream line_;
    std::string pending_;
    int lineno_ = 0;
};

Index checked_index(Tokenizer& t, long long one_based, long long count)
{
    if (one_based < 1 || one_based > count)
        t.fail("node index " + std::to_string(one_based) + " outside 1.." + std::to_string(count));
    return static_cast<Index>(one_based - 1);
}

long long checked_count(Tokenizer& t, const char* what)
{
    long long n = t.integer(what);
    if (n < 0 || n > std::numeric_limits<Index>::max())
        t.fail(std::string("invalid ") + what + " " + std::to_string(n));
    return n;
}

} // namespace

MeshFormat parse_mesh_format(const std::string& name)
{
    if (name == "msh2" || name == "msh")
        return MeshFormat::Msh2;
    if (name == "simple")
        return MeshFormat::Simple;
    throw Error(ErrorCode::InvalidArgument, "unknown mesh format '" + name + "' (use msh2 or simple)");
}

TetMesh load_mesh(const std::string& path, MeshFormat format)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::Io, "cannot open mesh file '" + path + "'");
    try {
        return format == MeshFormat::Msh2 ? read_msh2(in) : read_simple(in);
    } catch (const DegenerateCellError&) {
        throw;
    } catch (const Error& e) {
        throw Error(e.code(), path + ": " + e.what());
    }
}

TetMesh read_simple(std::istream& in)
{
    Tokenizer t(in);
    long long nn = checked_count(t, "node count");
    std::vector<Vec3> nodes(static_cast<std::size_t>(nn));
    for (auto& p : nodes) {
        p.x() = t.real("x coordinate");
        p.y() = t.real("y coordinate");
        p.z() = t.real("z coordinate");
    }
    long long nc = checked_count(t, "cell count");
    if (nc == 0)
        t.fail("mesh has no tetrahedra");
    std::vector<std::array<Index, 4>> cells(static_cast<std::size_t>(nc));
    std::vector<int> tags(static_cast<std::size_t>(nc));
    for (std::size_t c = 0; c < cells.size(); ++c) {
        for (auto& n : cells[c])
            n = checked_index(t, t.integer("cell node"), nn);
        tags[c] = static_cast<int>(t.integer("cell tag"));
    }
    std::vector<TaggedTriangle> tris;
    if (!t.at_end()) {
        long long nb = checked_count(t, "boundary face count");
        tris.resize(static_cast<std::size_t>(nb));
        for (auto& tri : tris) {
            for (auto& n : tri.nodes)
                n = checked_index(t, t.integer("face node"), nn);
            tri.tag = static_cast<int>(t.integer("face tag"));
        }
        if (!t.at_end())
            t.fail("trailing data after boundary face block");
    }
    return TetMesh::build(std::move(nodes), std::move(cells), std::move(tags), tris);
}

TetMesh read_msh2(std::istream& in)
{
    Tokenizer t(in);
    std::string tok;
    std::unordered_map<long long, Index> node_id;
    std::vector<Vec3> nodes;
    std::vector<std::array<Index, 4>> cells;
    std::vector<int> tags;
    std::vector<TaggedTriangle> tris;
    bool have_nodes = false, have_elements = false;

    auto skip_section = [&](const std::string& name) {
        std::string end = "$End" + name.substr(1);
        std::string s;
        while (t.next(s))
            if (s == end)
                return;
        t.fail("unterminated section " + name);
    };
    auto node_ref = [&](long long tag) {
        auto it = node_id.find(tag);
        if (it == node_id.end())
            t.fail("element references unknown node " + std::to_string(tag));
        return it->second;
    };

    while (t.next(tok)) {
        if (tok == "$MeshFormat") {
            std::string version = t.expect("format version");
            long long file_type = t.integer("file type");
            t.integer("data size");
            if (version.rfind("2", 0) != 0)
                t.fail("unsupported MSH version " + version + " (expected 2.x)");
            if (file_type != 0)
                t.fail("binary MSH files are not supported");
            if (t.expect("$EndMeshFormat") != "$EndMeshFormat")
                t.fail("expected $EndMeshFormat");
        } else if (tok == "$Nodes") {
            long long nn = checked_count(t, "node count");
            nodes.resize(static_cast<std::size_t>(nn));
            for (long long i = 0; i < nn; ++i) {
                long long tag = t.integer("node tag");
                if (!node_id.emplace(tag, static_cast<Index>(i)).second)
                    t.fail("duplicate node tag " + std::to_string(tag));
                nodes[i].x() = t.real("x coordinate");
                nodes[i].y() = t.real("y coordinate");
                nodes[i].z() = t.real("z coordinate");
            }
            if (t.expect("$EndNodes") != "$EndNodes")
                t.fail("expected $EndNodes");
            have_nodes = true;
        } else if (tok == "$Elements") {
            if (!have_nodes)
                t.fail("$Elements before $Nodes");
            long long ne = checked_count(t, "element count");
            for (long long i = 0; i < ne; ++i) {
                t.integer("element tag");
                long long type = t.integer("element type");
                long long ntags = t.integer("tag count");
                if (ntags < 0)
                    t.fail("negative tag count");
                long long physical = 0;
                for (long long k = 0; k < ntags; ++k) {
                    long long v = t.integer("element tag value");
                    if (k == 0)
                        physical = v;
                }
                int nverts = 0;
                switch (type) {
                case 1: nverts = 2; break;
                case 2: nverts = 3; break;
                case 3: nverts = 4; break;
                case 4: nverts = 4; break;
                case 5: nverts = 8; break;
                case 6: nverts = 6; break;
                case 7: nverts = 5; break;
                case 15: nverts = 1; break;
                default: t.fail("unsupported element type " + std::to_string(type));
                }
                std::array<long long, 8> v{};
                for (int k = 0; k < nverts; ++k)
                    v[k] = t.integer("element node");
                if (type == 4) {
                    cells.push_back({node_ref(v[0]), node_ref(v[1]), node_ref(v[2]), node_ref(v[3])});
                    tags.push_back(static_cast<int>(physical));
                } else if (type == 2) {
                    tris.push_back({{node_ref(v[0]), node_ref(v[1]), node_ref(v[2])},
                                    static_cast<int>(physical)});
                }
            }
            if (t.expect("$EndElements") != "$EndElements")
                t.fail("expected $EndElements");
            have_elements = true;
        } else if (!tok.empty() && tok[0] == '$') {
            skip_section(tok);
        } else {
            t.fail("unexpected token '" + tok + "'");
        }
    }
    if (!have_nodes || !have_elements)
        t.fail("missing $Nodes or $Elements section");
    if (cells.empty())
        t.fail("mesh has no tetrahedra");
    return TetMesh::build(std::move(nodes), std::move(cells), std::move(tags), tris);
}

void write_simple(const TetMesh& mesh, std::ostream& out)
{
    out << std::setprecision(17);
    out << mesh.num_nodes() << '\n';
    for (const Vec3& p : mesh.nodes())
        out << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
    out << mesh.num_cells() << '\n';
    for (Index c = 0; c < mesh.num_cells(); ++c) {
        const auto& n = mesh.cell(c);
        out << n[0] + 1 << ' ' << n[1] + 1 << ' ' << n[2] + 1 << ' ' << n[3] + 1 << ' '
            << mesh.cell_tag(c) << '\n';
    }
    std::vector<Index> tagged;
    for (Index f : mesh.boundary_faces())
        if (mesh.face_tag(f) != 0)
            tagged.push_back(f);
    if (!tagged.empty()) {
        out << tagged.size() << '\n';
        for (Index f : tagged) {
            const auto& n = mesh.face(f);
            out << n[0] + 1 << ' ' << n[1] + 1 << ' ' << n[2] + 1 << ' ' << mesh.face_tag(f) << '\n';
        }
    }
}

void write_simple(const TetMesh& mesh, const std::string& path)
{
    std::ofstream out(path);
    if (!out)
        throw Error(ErrorCode::Io, "cannot open '" + path + "' for writing");
    write_simple(mesh, out);
    if (!out)
        throw Error(ErrorCode::Io, "write to '" + path + "' failed");
}

} // namespace dualhodge
