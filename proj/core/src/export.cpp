#include "vmic/export.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "vmic/errors.hpp"

namespace vmic {

namespace {

std::string num(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Short form for plot coordinates.
std::string coord(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

void check_pattern(const PatternTable& t)
{
  if (t.angles.empty())
    throw RangeError("pattern has an empty angle grid");
  if (t.frequencies.empty() || t.distances.empty())
    throw RangeError("pattern has an empty frequency or distance grid");
  if (t.magnitude.size() !=
      t.angles.size() * t.frequencies.size() * t.distances.size())
    throw RangeError("pattern magnitude count does not match its grids");
}

std::string_view to_string(PatternKind kind)
{
  return kind == PatternKind::subband ? "subband" : "monochromatic";
}

void params_header(std::ostringstream& os, const MicParams& p,
                   IntegratorMode mode)
{
  os << "# m=" << num(p.m) << '\n'
     << "# d=" << num(p.d) << '\n'
     << "# g=" << num(p.g) << '\n'
     << "# c0=" << num(p.c0) << '\n'
     << "# fs=" << num(p.fs) << '\n'
     << "# integrator=" << to_string(mode) << '\n';
}

double parse_number(std::string_view s, int line)
{
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw FormatError("csv", "line " + std::to_string(line) +
                                 ": not a number: '" + std::string(s) + "'");
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep)
{
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos)
      break;
    start = pos + 1;
  }
  return out;
}

// Index of v in seen, appending it when new.
std::size_t intern(std::vector<double>& seen, double v)
{
  const auto it = std::find(seen.begin(), seen.end(), v);
  if (it != seen.end())
    return std::size_t(it - seen.begin());
  seen.push_back(v);
  return seen.size() - 1;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                          "#9467bd", "#8c564b", "#e377c2", "#17becf"};

} // namespace

std::string pattern_csv(const PatternTable& t)
{
  check_pattern(t);
  std::ostringstream os;
  os << "# vmic-pattern=1\n# kind=" << to_string(t.kind) << '\n';
  params_header(os, t.params, t.mode);
  const bool multi = t.distances.size() > 1;
  if (!multi)
    os << "# r=" << num(t.distances.front()) << '\n';
  if (!t.band_labels.empty()) {
    os << "# bands=";
    for (std::size_t i = 0; i < t.band_labels.size(); ++i)
      os << (i ? ";" : "") << t.band_labels[i];
    os << '\n';
  }
  os << "angle_deg,freq_hz,magnitude" << (multi ? ",distance_m" : "") << '\n';
  for (std::size_t r = 0; r < t.distances.size(); ++r)
    for (std::size_t f = 0; f < t.frequencies.size(); ++f)
      for (std::size_t a = 0; a < t.angles.size(); ++a) {
        os << num(rad_to_deg(t.angles[a])) << ',' << num(t.frequencies[f])
           << ',' << num(t.at(a, f, r));
        if (multi)
          os << ',' << num(t.distances[r]);
        os << '\n';
      }
  return os.str();
}

PatternTable parse_pattern_csv(std::string_view text)
{
  PatternTable t;
  std::map<std::string, std::string, std::less<>> meta;
  std::vector<std::array<double, 4>> rows;
  bool have_columns = false;
  bool multi = false;
  int line_no = 0;

  for (std::string_view rest = text; !rest.empty();) {
    const auto nl = rest.find('\n');
    std::string_view line = rest.substr(0, nl);
    rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r')
      line.remove_suffix(1);
    if (line.empty())
      continue;
    if (line.front() == '#') {
      line.remove_prefix(1);
      while (!line.empty() && line.front() == ' ')
        line.remove_prefix(1);
      const auto eq = line.find('=');
      if (eq == std::string_view::npos)
        throw FormatError("csv", "line " + std::to_string(line_no) +
                                     ": header line without '='");
      meta.emplace(std::string(line.substr(0, eq)), std::string(line.substr(eq + 1)));
      continue;
    }
    if (!have_columns) {
      if (line == "angle_deg,freq_hz,magnitude")
        multi = false;
      else if (line == "angle_deg,freq_hz,magnitude,distance_m")
        multi = true;
      else
        throw FormatError("csv", "line " + std::to_string(line_no) +
                                     ": unexpected column header");
      have_columns = true;
      continue;
    }
    const auto cells = split(line, ',');
    if (cells.size() != (multi ? 4u : 3u))
      throw FormatError("csv", "line " + std::to_string(line_no) +
                                   ": wrong number of columns");
    std::array<double, 4> row{};
    for (std::size_t i = 0; i < cells.size(); ++i)
      row[i] = parse_number(cells[i], line_no);
    rows.push_back(row);
  }

  const auto key = [&](const char* name) -> const std::string& {
    const auto it = meta.find(name);
    if (it == meta.end())
      throw FormatError("csv", std::string("missing header key '") + name + "'");
    return it->second;
  };
  if (key("vmic-pattern") != "1")
    throw FormatError("csv", "unsupported pattern schema " + key("vmic-pattern"));
  const std::string& kind = key("kind");
  if (kind == "subband")
    t.kind = PatternKind::subband;
  else if (kind == "monochromatic")
    t.kind = PatternKind::monochromatic;
  else
    throw FormatError("csv", "unknown pattern kind '" + kind + "'");
  t.params.m = parse_number(key("m"), 0);
  t.params.d = parse_number(key("d"), 0);
  t.params.g = parse_number(key("g"), 0);
  t.params.c0 = parse_number(key("c0"), 0);
  t.params.fs = parse_number(key("fs"), 0);
  try {
    t.mode = parse_integrator_mode(key("integrator"));
  } catch (const std::invalid_argument& e) {
    throw FormatError("csv", e.what());
  }
  if (const auto it = meta.find("bands"); it != meta.end())
    for (auto label : split(it->second, ';'))
      t.band_labels.emplace_back(label);

  if (!have_columns || rows.empty())
    throw RangeError("pattern file holds no rows (empty angle grid)");
  if (!multi)
    t.distances.push_back(parse_number(key("r"), 0));
  std::vector<std::array<std::size_t, 3>> cells;
  for (const auto& row : rows) {
    cells.push_back({intern(t.angles, row[0]), intern(t.frequencies, row[1]),
                     multi ? intern(t.distances, row[3]) : 0});
  }
  for (double& a : t.angles)
    a = deg_to_rad(a);
  t.magnitude.assign(t.angles.size() * t.frequencies.size() * t.distances.size(),
                     std::nan(""));
  for (std::size_t i = 0; i < rows.size(); ++i)
    t.magnitude[t.index(cells[i][0], cells[i][1], cells[i][2])] = rows[i][2];
  if (std::any_of(t.magnitude.begin(), t.magnitude.end(),
                  [](double v) { return std::isnan(v); }))
    throw FormatError("csv", "pattern rows do not cover the full grid");
  return t;
}

std::string pattern_svg(const PatternTable& t)
{
  check_pattern(t);
  constexpr double size = 480.0;
  constexpr double cx = size / 2;
  constexpr double cy = size / 2;
  constexpr double radius = 200.0;
  double peak = *std::max_element(t.magnitude.begin(), t.magnitude.end());
  if (!(peak > 0.0))
    peak = 1.0;
  const double scale = radius / peak;

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size
     << "\" height=\"" << size << "\" viewBox=\"0 0 " << size << ' ' << size
     << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<g fill=\"none\" stroke=\"#cccccc\" stroke-width=\"1\">\n";
  for (int ring = 1; ring <= 4; ++ring)
    os << "<circle cx=\"" << cx << "\" cy=\"" << cy << "\" r=\""
       << coord(radius * ring / 4.0) << "\"/>\n";
  for (int spoke = 0; spoke < 12; ++spoke) {
    const double a = kTwoPi * spoke / 12.0;
    os << "<line x1=\"" << cx << "\" y1=\"" << cy << "\" x2=\""
       << coord(cx + radius * std::sin(a)) << "\" y2=\""
       << coord(cy - radius * std::cos(a)) << "\"/>\n";
  }
  os << "</g>\n";

  std::size_t series = 0;
  for (std::size_t r = 0; r < t.distances.size(); ++r)
    for (std::size_t f = 0; f < t.frequencies.size(); ++f, ++series) {
      const char* color = kPalette[series % std::size(kPalette)];
      std::ostringstream label;
      if (!t.band_labels.empty() && f < t.band_labels.size())
        label << t.band_labels[f] << " Hz band";
      else
        label << t.frequencies[f] << " Hz";
      label << ", r = " << t.distances[r] << " m";
      os << "<path data-label=\"" << label.str() << "\" fill=\"none\" stroke=\""
         << color << "\" stroke-width=\"1.5\" d=\"";
      for (std::size_t a = 0; a < t.angles.size(); ++a) {
        const double rho = scale * t.at(a, f, r);
        os << (a ? " L " : "M ") << coord(cx + rho * std::sin(t.angles[a]))
           << ' ' << coord(cy - rho * std::cos(t.angles[a]));
      }
      os << " Z\"/>\n";
      os << "<text x=\"8\" y=\"" << 16 + 14 * series
         << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"" << color
         << "\">" << label.str() << "</text>\n";
    }
  os << "</svg>\n";
  return os.str();
}

std::string proximity_csv(const ProximityCurve& c)
{
  if (c.distances.empty())
    throw RangeError("proximity curve is empty");
  std::ostringstream os;
  os << "# vmic-proximity=1\n";
  params_header(os, c.params, c.mode);
  os << "# theta_deg=" << num(rad_to_deg(c.theta)) << '\n'
     << "# f_low=" << num(c.f_low) << '\n'
     << "# f_ref=" << num(c.f_ref) << '\n'
     << "r_m,boost_db\n";
  for (std::size_t i = 0; i < c.distances.size(); ++i)
    os << num(c.distances[i]) << ',' << num(c.boost_db[i]) << '\n';
  return os.str();
}

std::string proximity_svg(const ProximityCurve& c)
{
  if (c.distances.empty())
    throw RangeError("proximity curve is empty");
  constexpr double w = 560.0, h = 360.0, left = 60.0, right = 20.0,
                   top = 20.0, bottom = 40.0;
  const auto [rmin, rmax] = std::minmax_element(c.distances.begin(), c.distances.end());
  const auto [bmin, bmax] = std::minmax_element(c.boost_db.begin(), c.boost_db.end());
  const double lx0 = std::log10(*rmin);
  const double lx1 = std::max(std::log10(*rmax), lx0 + 1e-9);
  const double y0 = std::min(*bmin, 0.0);
  const double y1 = std::max(*bmax, y0 + 1.0);
  const auto px = [&](double r) {
    return left + (w - left - right) * (std::log10(r) - lx0) / (lx1 - lx0);
  };
  const auto py = [&](double db) {
    return h - bottom - (h - top - bottom) * (db - y0) / (y1 - y0);
  };

  std::vector<std::size_t> order(c.distances.size());
  for (std::size_t i = 0; i < order.size(); ++i)
    order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return c.distances[a] < c.distances[b];
  });

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w
     << "\" height=\"" << h << "\" viewBox=\"0 0 " << w << ' ' << h << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<g stroke=\"#888888\" stroke-width=\"1\">\n"
     << "<line x1=\"" << left << "\" y1=\"" << h - bottom << "\" x2=\""
     << w - right << "\" y2=\"" << h - bottom << "\"/>\n"
     << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left
     << "\" y2=\"" << h - bottom << "\"/>\n"
     << "</g>\n"
     << "<text x=\"" << w / 2 << "\" y=\"" << h - 8
     << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">"
        "distance (m, log)</text>\n"
     << "<text x=\"14\" y=\"" << h / 2
     << "\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 14 "
     << h / 2 << ")\" text-anchor=\"middle\">boost (dB)</text>\n"
     << "<path fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" d=\"";
  for (std::size_t k = 0; k < order.size(); ++k) {
    const std::size_t i = order[k];
    os << (k ? " L " : "M ") << coord(px(c.distances[i])) << ' '
       << coord(py(c.boost_db[i]));
  }
  os << "\"/>\n</svg>\n";
  return os.str();
}

std::string deviation_csv(const DeviationMap& map)
{
  if (map.frequencies.empty() || map.distances.empty())
    throw RangeError("deviation map is empty");
  std::ostringstream os;
  os << "# vmic-deviation=1\n";
  params_header(os, map.params, map.mode);
  os << "freq_hz,r_m,max_deviation\n";
  for (std::size_t f = 0; f < map.frequencies.size(); ++f)
    for (std::size_t r = 0; r < map.distances.size(); ++r)
      os << num(map.frequencies[f]) << ',' << num(map.distances[r]) << ','
         << num(map.at(f, r)) << '\n';
  return os.str();
}

std::string energy_csv(const EnergyBalance& eb)
{
  if (eb.frames() == 0)
    throw RangeError("energy balance holds no frames");
  std::ostringstream os;
  os << "# vmic-energy=1\n# fs=" << num(eb.fs) << "\n# frame_s="
     << num(eb.frame_seconds) << '\n'
     << "frame,time_s,band,center_hz,energy\n";
  for (std::size_t i = 0; i < eb.frames(); ++i) {
    const double t0 = double(i) * eb.frame_seconds;
    os << i << ',' << num(t0) << ",total,0," << num(eb.total[i]) << '\n';
    for (std::size_t b = 0; b < eb.bands.size(); ++b)
      os << i << ',' << num(t0) << ',' << eb.bands.labels()[b] << ','
         << num(eb.bands.center(b)) << ',' << num(eb.energy[i][b]) << '\n';
  }
  return os.str();
}

void write_text(const std::filesystem::path& path, std::string_view text)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(text.data(), std::streamsize(text.size()));
  out.close();
  if (!out)
    throw IoError("failed writing '" + path.string() + "'");
}

std::string read_text(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_pattern_csv(const PatternTable& table, const std::filesystem::path& path)
{
  write_text(path, pattern_csv(table));
}

void write_pattern_svg(const PatternTable& table, const std::filesystem::path& path)
{
  write_text(path, pattern_svg(table));
}

PatternTable read_pattern_csv(const std::filesystem::path& path)
{
  return parse_pattern_csv(read_text(path));
}

} // namespace vmic
