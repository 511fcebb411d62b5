#include <texsr/geometry.hpp>

#include <texsr/error.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <string_view>

namespace texsr {

namespace {

class LineParser
{
public:
    LineParser(std::string_view line, const std::string& source, std::size_t line_no)
        : m_rest(line)
        , m_source(source)
        , m_line_no(line_no)
    {}

    std::string_view next_token()
    {
        const auto begin = m_rest.find_first_not_of(" \t\r");
        if (begin == std::string_view::npos) {
            m_rest = {};
            return {};
        }
        m_rest.remove_prefix(begin);
        const auto end = m_rest.find_first_of(" \t\r");
        std::string_view token = m_rest.substr(0, end);
        m_rest.remove_prefix(end == std::string_view::npos ? m_rest.size() : end);
        return token;
    }

    double number()
    {
        const std::string_view token = next_token();
        double value = 0.0;
        const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
        if (token.empty() || ec != std::errc() || ptr != token.data() + token.size() || !std::isfinite(value)) {
            error("expected a number, got '" + std::string(token) + "'");
        }
        return value;
    }

    [[noreturn]] void error(const std::string& what) const
    {
        fail(ErrorCode::ParseError, m_source + ":" + std::to_string(m_line_no) + ": " + what);
    }

    [[noreturn]] void missing(const std::string& what) const
    {
        fail(ErrorCode::MissingAttribute, m_source + ":" + std::to_string(m_line_no) + ": " + what);
    }

private:
    std::string_view m_rest;
    const std::string& m_source;
    std::size_t m_line_no;
};

// Resolves a 1-based (or negative, relative) OBJ index against `count` items.
std::uint32_t resolve_index(std::string_view token, std::size_t count, const LineParser& parser, const char* kind)
{
    long long raw = 0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), raw);
    if (token.empty() || ec != std::errc() || ptr != token.data() + token.size() || raw == 0) {
        parser.error(std::string("bad ") + kind + " index '" + std::string(token) + "'");
    }
    const long long resolved = raw > 0 ? raw - 1 : static_cast<long long>(count) + raw;
    if (resolved < 0 || resolved >= static_cast<long long>(count)) {
        parser.error(std::string(kind) + " index " + std::to_string(raw) + " out of range");
    }
    return static_cast<std::uint32_t>(resolved);
}

FaceCorner parse_corner(std::string_view token, const TriangleMesh& mesh, const LineParser& parser)
{
    const auto first_slash = token.find('/');
    if (first_slash == std::string_view::npos) parser.missing("face corner '" + std::string(token) + "' has no vt/vn");
    const auto second_slash = token.find('/', first_slash + 1);
    if (second_slash == std::string_view::npos) {
        parser.missing("face corner '" + std::string(token) + "' has no vn");
    }
    const std::string_view v = token.substr(0, first_slash);
    const std::string_view vt = token.substr(first_slash + 1, second_slash - first_slash - 1);
    const std::string_view vn = token.substr(second_slash + 1);
    if (vt.empty()) parser.missing("face corner '" + std::string(token) + "' has no vt");
    if (vn.empty()) parser.missing("face corner '" + std::string(token) + "' has no vn");

    FaceCorner corner;
    corner.vertex = resolve_index(v, mesh.vertices.size(), parser, "vertex");
    corner.uv = resolve_index(vt, mesh.uvs.size(), parser, "texture coordinate");
    corner.normal = resolve_index(vn, mesh.normals.size(), parser, "normal");
    return corner;
}

} // namespace

TriangleMesh parse_obj(std::istream& in, const std::string& source_name)
{
    TriangleMesh mesh;
    std::string line;
    std::size_t line_no = 0;
    std::vector<FaceCorner> polygon;
    while (std::getline(in, line)) {
        ++line_no;
        LineParser parser(line, source_name, line_no);
        const std::string_view keyword = parser.next_token();
        if (keyword.empty() || keyword.front() == '#') continue;

        if (keyword == "v") {
            Eigen::Vector3d p;
            for (int k = 0; k < 3; ++k) p[k] = parser.number();
            mesh.vertices.push_back(p);
        } else if (keyword == "vt") {
            Eigen::Vector2d t;
            for (int k = 0; k < 2; ++k) t[k] = parser.number();
            mesh.uvs.push_back(t);
        } else if (keyword == "vn") {
            Eigen::Vector3d n;
            for (int k = 0; k < 3; ++k) n[k] = parser.number();
            const double length = n.norm();
            if (!(length > 0.0)) parser.error("zero-length normal");
            mesh.normals.push_back(n / length);
        } else if (keyword == "f") {
            polygon.clear();
            for (std::string_view token = parser.next_token(); !token.empty(); token = parser.next_token()) {
                polygon.push_back(parse_corner(token, mesh, parser));
            }
            if (polygon.size() < 3) parser.error("face with fewer than three corners");
            for (std::size_t k = 1; k + 1 < polygon.size(); ++k) {
                mesh.faces.push_back({polygon[0], polygon[k], polygon[k + 1]});
            }
        }
        // Everything else (o, g, s, usemtl, mtllib, l, p, ...) is ignored.
    }
    if (in.bad()) fail(ErrorCode::IoError, "read error in " + source_name);
    if (mesh.faces.empty()) fail(ErrorCode::EmptyMesh, source_name + " contains no faces");
    return mesh;
}

TriangleMesh load_mesh(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) fail(ErrorCode::FileNotFound, path.string());
    return parse_obj(in, path.string());
}

void write_obj(const std::filesystem::path& path, const TriangleMesh& mesh)
{
    std::ostringstream out;
    out << std::setprecision(17);
    for (const auto& v : mesh.vertices) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
    for (const auto& t : mesh.uvs) out << "vt " << t.x() << ' ' << t.y() << '\n';
    for (const auto& n : mesh.normals) out << "vn " << n.x() << ' ' << n.y() << ' ' << n.z() << '\n';
    for (const auto& f : mesh.faces) {
        out << 'f';
        for (const auto& c : f) out << ' ' << c.vertex + 1 << '/' << c.uv + 1 << '/' << c.normal + 1;
        out << '\n';
    }
    std::ofstream file(path, std::ios::binary);
    if (!file) fail(ErrorCode::IoError, "cannot write " + path.string());
    file << out.str();
    if (!file) fail(ErrorCode::IoError, "cannot write " + path.string());
}

} // namespace texsr
