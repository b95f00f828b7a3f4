#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

#include "hqo/csv.hpp"
#include "hqo/mesh.hpp"

namespace hqo {

namespace {

bool default_refinement(const Mesh& m) {
  const Mesh plain(m.vertices(), m.triangles(), m.boundary_edges());
  return plain.refinement_edges() == m.refinement_edges();
}

struct Line {
  int number;
  std::vector<std::string_view> tokens;
};

std::vector<Line> tokenize(std::string_view text) {
  std::vector<Line> lines;
  int number = 0;
  while (!text.empty()) {
    ++number;
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = (eol == std::string_view::npos) ? std::string_view{} : text.substr(eol + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    Line parsed{number, {}};
    std::size_t pos = 0;
    while (pos < line.size()) {
      while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t' || line[pos] == '\r'))
        ++pos;
      const std::size_t start = pos;
      while (pos < line.size() && line[pos] != ' ' && line[pos] != '\t' && line[pos] != '\r')
        ++pos;
      if (pos > start) parsed.tokens.push_back(line.substr(start, pos - start));
    }
    if (!parsed.tokens.empty()) lines.push_back(std::move(parsed));
  }
  return lines;
}

template <typename T>
T parse_number(const Line& line, std::string_view token) {
  T value{};
  const auto* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc{} || ptr != end)
    throw MeshParseError(line.number, "cannot parse '" + std::string(token) + "' as a number");
  return value;
}

class Reader {
 public:
  explicit Reader(std::string_view text) : lines_(tokenize(text)) {}

  bool done() const { return pos_ >= lines_.size(); }
  const Line& peek() const { return lines_[pos_]; }
  const Line& next() {
    if (done()) throw MeshParseError(last_line(), "unexpected end of file");
    return lines_[pos_++];
  }
  int last_line() const { return lines_.empty() ? 0 : lines_.back().number; }

  std::size_t section(std::string_view name) {
    const Line& line = next();
    if (line.tokens.size() != 2 || line.tokens[0] != name)
      throw MeshParseError(line.number, "expected section header '" + std::string(name) +
                                            " <count>'");
    const long count = parse_number<long>(line, line.tokens[1]);
    if (count < 0) throw MeshParseError(line.number, "negative section count");
    return static_cast<std::size_t>(count);
  }

  const Line& record(std::size_t width) {
    const Line& line = next();
    if (!line.tokens.empty() && line.tokens[0].front() == '$')
      throw MeshParseError(line.number, "section ended early at '" +
                                            std::string(line.tokens[0]) + "'");
    if (line.tokens.size() != width)
      throw MeshParseError(line.number, "expected " + std::to_string(width) + " fields");
    return line;
  }

 private:
  std::vector<Line> lines_;
  std::size_t pos_ = 0;
};

int parse_index(const Line& line, std::string_view token, std::size_t bound) {
  const long v = parse_number<long>(line, token);
  if (v < 0 || static_cast<std::size_t>(v) >= bound)
    throw MeshParseError(line.number, "vertex index " + std::string(token) + " out of range");
  return static_cast<int>(v);
}

}  // namespace

std::string write_mesh(const Mesh& m) {
  std::string out;
  out.reserve(static_cast<std::size_t>(m.num_vertices()) * 40 +
              static_cast<std::size_t>(m.num_triangles()) * 24);
  out += "$Vertices " + std::to_string(m.num_vertices()) + "\n";
  for (const auto& v : m.vertices()) {
    out += format_double(v.x());
    out += ' ';
    out += format_double(v.y());
    out += '\n';
  }
  out += "$Triangles " + std::to_string(m.num_triangles()) + "\n";
  for (const auto& t : m.triangles())
    out += std::to_string(t[0]) + ' ' + std::to_string(t[1]) + ' ' + std::to_string(t[2]) + '\n';
  out += "$BoundaryEdges " + std::to_string(m.boundary_edges().size()) + "\n";
  for (const auto& b : m.boundary_edges())
    out += std::to_string(b.a) + ' ' + std::to_string(b.b) + ' ' +
           (b.tag == BoundaryTag::Dirichlet ? 'D' : 'N') + '\n';
  // Bisection history is not recoverable from geometry, so non-default
  // refinement edges travel in an optional trailing section.
  if (!default_refinement(m)) {
    out += "$RefinementEdges " + std::to_string(m.num_triangles()) + "\n";
    for (auto r : m.refinement_edges()) {
      out += static_cast<char>('0' + r);
      out += '\n';
    }
  }
  return out;
}

Mesh read_mesh(std::string_view text) {
  Reader in(text);

  const std::size_t nv = in.section("$Vertices");
  std::vector<Point> vertices;
  vertices.reserve(nv);
  for (std::size_t i = 0; i < nv; ++i) {
    const Line& line = in.record(2);
    vertices.emplace_back(parse_number<double>(line, line.tokens[0]),
                          parse_number<double>(line, line.tokens[1]));
  }

  const std::size_t nt = in.section("$Triangles");
  std::vector<Triangle> triangles;
  triangles.reserve(nt);
  for (std::size_t i = 0; i < nt; ++i) {
    const Line& line = in.record(3);
    triangles.push_back({parse_index(line, line.tokens[0], nv),
                         parse_index(line, line.tokens[1], nv),
                         parse_index(line, line.tokens[2], nv)});
  }

  const std::size_t nb = in.section("$BoundaryEdges");
  std::vector<BoundaryEdge> boundary;
  boundary.reserve(nb);
  for (std::size_t i = 0; i < nb; ++i) {
    const Line& line = in.record(3);
    BoundaryEdge be{parse_index(line, line.tokens[0], nv),
                    parse_index(line, line.tokens[1], nv), BoundaryTag::Dirichlet};
    if (line.tokens[2] == "D")
      be.tag = BoundaryTag::Dirichlet;
    else if (line.tokens[2] == "N")
      be.tag = BoundaryTag::Neumann;
    else
      throw MeshParseError(line.number, "unknown boundary tag '" +
                                            std::string(line.tokens[2]) + "'");
    boundary.push_back(be);
  }

  std::vector<std::uint8_t> refinement;
  if (!in.done()) {
    const std::size_t nr = in.section("$RefinementEdges");
    if (nr != nt)
      throw MeshParseError(in.last_line(), "refinement edge count must equal triangle count");
    refinement.reserve(nr);
    for (std::size_t i = 0; i < nr; ++i) {
      const Line& line = in.record(1);
      const int r = parse_number<int>(line, line.tokens[0]);
      if (r < 0 || r > 2) throw MeshParseError(line.number, "refinement edge must be 0, 1 or 2");
      refinement.push_back(static_cast<std::uint8_t>(r));
    }
    if (!in.done()) throw MeshParseError(in.peek().number, "unexpected trailing content");
  }

  return Mesh(std::move(vertices), std::move(triangles), std::move(boundary),
              std::move(refinement));
}

Mesh load_mesh(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw std::system_error(errno, std::generic_category(), "cannot open " + path);
  std::ostringstream buffer;
  buffer << file.rdbuf();
  return read_mesh(buffer.str());
}

void save_mesh(const std::string& path, const Mesh& m) {
  write_text_file(path, write_mesh(m));
}

}  // namespace hqo
