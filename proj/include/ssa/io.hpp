#ifndef SSA_IO_HPP
#define SSA_IO_HPP

// CSV readers and writers for patterns, spines and trajectories. Numbers are
// written in the shortest form that reads back to the same double.

#include <charconv>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "ssa/core.hpp"
#include "ssa/geometry.hpp"
#include "ssa/shadow.hpp"

namespace ssa {

/// Malformed input file; carries the source name and 1-based line number.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string source, std::size_t line, const std::string& what)
      : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), source_(std::move(source)), line_(line) {}

  const std::string& source() const { return source_; }
  std::size_t line() const { return line_; }

 private:
  std::string source_;
  std::size_t line_;
};

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string join_doubles(const std::vector<double>& v, char sep = ',') {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += sep;
    s += format_double(v[i]);
  }
  return s;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline double parse_double(std::string_view field, const std::string& source, std::size_t line) {
  double v = 0.0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size())
    throw ParseError(source, line, "not a number: '" + std::string(field) + "'");
  if (!std::isfinite(v)) throw ParseError(source, line, "non-finite value: '" + std::string(field) + "'");
  return v;
}

// Reads a CSV with a mandatory header line. Blank lines and lines starting
// with '#' are skipped. on_header(names, line_no) runs once, then row(fields, line_no)
// for every data row.
template <class H, class F>
void read_csv(std::istream& in, const std::string& source, H&& on_header, F&& row) {
  std::string line;
  std::size_t no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++no;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto fields = split(t);
    if (header.empty()) {
      for (auto f : fields) header.emplace_back(f);
      on_header(header, no);
      continue;
    }
    if (fields.size() != header.size())
      throw ParseError(source, no,
                       "expected " + std::to_string(header.size()) + " fields, found " + std::to_string(fields.size()));
    row(fields, no);
  }
  if (header.empty()) throw ParseError(source, no, "missing header line");
}

inline void expect_header(const std::vector<std::string>& got, const std::vector<std::string>& want,
                          const std::string& source, std::size_t line) {
  if (got != want) {
    std::string w;
    for (const auto& s : want) w += (w.empty() ? "" : ",") + s;
    throw ParseError(source, line, "header must be '" + w + "'");
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Patterns: x,y | x,y,z | cx,cy,orientation,length

inline std::vector<std::string> pattern_header(ItemKind kind, int dim) {
  if (kind == ItemKind::segments) return {"cx", "cy", "orientation", "length"};
  if (dim == 3) return {"x", "y", "z"};
  return {"x", "y"};
}

/// Items outside the window are rejected with the offending line number. For
/// segments a positive `segment_length` also pins the length column.
inline Pattern read_pattern_csv(std::istream& in, const Window& window, ItemKind kind, double segment_length = 0.0,
                                const std::string& source = "pattern") {
  const int dim = window.dim();
  std::vector<Point> pts;
  std::vector<Segment> segs;
  const auto want = pattern_header(kind, dim);
  const auto on_header = [&](const auto& h, std::size_t no) { detail::expect_header(h, want, source, no); };
  detail::read_csv(in, source, on_header, [&](const auto& f, std::size_t no) {
    Point p{detail::parse_double(f[0], source, no), detail::parse_double(f[1], source, no), 0.0};
    if (kind == ItemKind::points && dim == 3) p.z = detail::parse_double(f[2], source, no);
    if (!window.contains(p)) throw ParseError(source, no, "item lies outside the observation window");
    if (kind == ItemKind::points) {
      pts.push_back(p);
      return;
    }
    const double len = detail::parse_double(f[3], source, no);
    if (!(len > 0.0)) throw ParseError(source, no, "segment length must be positive");
    if (segment_length > 0.0 && std::abs(len - segment_length) > 1e-12 * segment_length)
      throw ParseError(source, no, "segment length differs from the model length " + format_double(segment_length));
    segs.emplace_back(p, detail::parse_double(f[2], source, no), len);
  });
  if (kind == ItemKind::segments) return Pattern(window, std::move(segs));
  return Pattern(window, std::move(pts));
}

inline void write_pattern_csv(std::ostream& out, const Pattern& p) {
  const auto h = pattern_header(p.kind(), p.window.dim());
  for (std::size_t i = 0; i < h.size(); ++i) out << (i ? "," : "") << h[i];
  out << '\n';
  if (p.kind() == ItemKind::segments) {
    for (const auto& s : p.segments())
      out << format_double(s.center().x) << ',' << format_double(s.center().y) << ',' << format_double(s.orientation())
          << ',' << format_double(s.length()) << '\n';
  } else {
    for (const auto& q : p.points()) {
      out << format_double(q.x) << ',' << format_double(q.y);
      if (p.window.dim() == 3) out << ',' << format_double(q.z);
      out << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Spines: polyline_id,x,y[,z]; consecutive rows with the same id form one polyline.

inline SpineSet read_spines_csv(std::istream& in, const std::string& source = "spines") {
  SpineSet out;
  std::string current;
  std::vector<std::size_t> first_line;
  std::size_t last_line = 0;
  bool has_z = true;
  const auto on_header = [&](const std::vector<std::string>& h, std::size_t no) {
    has_z = h.size() == 4;
    detail::expect_header(h, has_z ? std::vector<std::string>{"polyline_id", "x", "y", "z"}
                                   : std::vector<std::string>{"polyline_id", "x", "y"},
                          source, no);
  };
  detail::read_csv(in, source, on_header, [&](const auto& f, std::size_t no) {
    const std::string id(f[0]);
    if (id.empty()) throw ParseError(source, no, "empty polyline id");
    if (out.polylines.empty() || id != current) {
      out.polylines.emplace_back();
      first_line.push_back(no);
      current = id;
    }
    last_line = no;
    out.polylines.back().push_back({detail::parse_double(f[1], source, no), detail::parse_double(f[2], source, no),
                                    has_z ? detail::parse_double(f[3], source, no) : 0.0});
  });
  if (out.polylines.empty()) throw ParseError(source, last_line, "no spine vertices");
  for (std::size_t i = 0; i < out.polylines.size(); ++i)
    if (out.polylines[i].size() < 2) throw ParseError(source, first_line[i], "polyline has fewer than two vertices");
  return out;
}

// ---------------------------------------------------------------------------
// Trajectories: iter,T,delta_1..k,theta_1..k,accept_rate

inline std::vector<std::string> trajectory_header(std::size_t k) {
  std::vector<std::string> h{"iter", "T"};
  for (std::size_t i = 1; i <= k; ++i) h.push_back("delta_" + std::to_string(i));
  for (std::size_t i = 1; i <= k; ++i) h.push_back("theta_" + std::to_string(i));
  h.push_back("accept_rate");
  return h;
}

inline void write_trajectory_csv(std::ostream& out, const SsaTrajectory& tr, std::size_t k) {
  const auto h = trajectory_header(k);
  for (std::size_t i = 0; i < h.size(); ++i) out << (i ? "," : "") << h[i];
  out << '\n';
  for (const auto& r : tr.rows) {
    out << r.iter << ',' << format_double(r.temperature) << ',' << join_doubles(r.delta) << ','
        << join_doubles(r.theta.values()) << ',' << format_double(r.accept_rate) << '\n';
  }
}

/// An empty file body (header only) yields no rows; the column count fixes k.
inline std::vector<TrajectoryRow> read_trajectory_csv(std::istream& in, const std::string& source = "trajectory") {
  std::vector<TrajectoryRow> rows;
  std::size_t k = 0;
  const auto on_header = [&](const std::vector<std::string>& h, std::size_t no) {
    if (h.size() < 5 || (h.size() - 3) % 2 != 0)
      throw ParseError(source, no, "trajectory header must be iter,T,delta_1..k,theta_1..k,accept_rate");
    k = (h.size() - 3) / 2;
    detail::expect_header(h, trajectory_header(k), source, no);
  };
  detail::read_csv(in, source, on_header, [&](const auto& f, std::size_t no) {
    TrajectoryRow r;
    const double iter = detail::parse_double(f[0], source, no);
    if (iter != std::floor(iter) || iter < 0) throw ParseError(source, no, "iter must be a non-negative integer");
    r.iter = static_cast<long long>(iter);
    r.temperature = detail::parse_double(f[1], source, no);
    for (std::size_t i = 0; i < k; ++i) r.delta.push_back(detail::parse_double(f[2 + i], source, no));
    r.theta = ParameterVector(k);
    for (std::size_t i = 0; i < k; ++i) r.theta[i] = detail::parse_double(f[2 + k + i], source, no);
    r.accept_rate = detail::parse_double(f[2 + 2 * k], source, no);
    rows.push_back(std::move(r));
  });
  return rows;
}

}  // namespace ssa

#endif  // SSA_IO_HPP
