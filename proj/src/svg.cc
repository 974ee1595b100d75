#include "sphero/svg.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sphero/errors.h"

namespace sphero {
namespace {

constexpr double kWidth = 720.0;
constexpr double kPanelHeight = 360.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 150.0;  // legend column
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
                                "#bcbd22", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", std::abs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Range {
  double lo{0.0};
  double hi{1.0};
};

// Widens degenerate ranges and snaps to a 1-2-5 tick step.
Range nice(double lo, double hi, double* step) {
  if (!(hi > lo)) {
    const double pad = std::max(1.0, std::abs(lo)) * 0.5;
    lo -= pad;
    hi += pad;
  }
  const double raw = (hi - lo) / 6.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double f = raw / mag;
  *step = (f < 1.5 ? 1.0 : f < 3.5 ? 2.0 : f < 7.5 ? 5.0 : 10.0) * mag;
  return {std::floor(lo / *step) * *step, std::ceil(hi / *step) * *step};
}

void draw_panel(std::ostringstream& o, const Panel& p, double y0) {
  double xlo = INFINITY, xhi = -INFINITY, ylo = INFINITY, yhi = -INFINITY;
  for (const Series& s : p.series) {
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) continue;
      xlo = std::min(xlo, s.x[k]);
      xhi = std::max(xhi, s.x[k]);
      ylo = std::min(ylo, s.y[k]);
      yhi = std::max(yhi, s.y[k]);
    }
  }
  if (!std::isfinite(xlo)) xlo = xhi = ylo = yhi = 0.0;
  const double pw = kWidth - kLeft - kRight;
  const double ph = kPanelHeight - kTop - kBottom;
  if (p.equal_aspect) {
    // Grow the shorter extent so one unit has the same length on both axes.
    const double cx = 0.5 * (xlo + xhi), cy = 0.5 * (ylo + yhi);
    const double scale = std::max((xhi - xlo) / pw, (yhi - ylo) / ph);
    const double s = scale > 0.0 ? scale : 1.0 / pw;
    xlo = cx - 0.5 * s * pw;
    xhi = cx + 0.5 * s * pw;
    ylo = cy - 0.5 * s * ph;
    yhi = cy + 0.5 * s * ph;
  }
  double xs, ys;
  const Range xr = nice(xlo, xhi, &xs);
  const Range yr = nice(ylo, yhi, &ys);
  auto px = [&](double x) { return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto py = [&](double y) {
    return y0 + kTop + (1.0 - (y - yr.lo) / (yr.hi - yr.lo)) * ph;
  };

  o << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"" << num(y0 + 24)
    << "\" text-anchor=\"middle\" font-size=\"15\">" << escape(p.title)
    << "</text>\n";
  o << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(y0 + kTop) << "\" width=\""
    << num(pw) << "\" height=\"" << num(ph)
    << "\" fill=\"none\" stroke=\"#000\"/>\n";
  for (double t = xr.lo; t <= xr.hi + 0.5 * xs; t += xs) {
    o << "<line x1=\"" << num(px(t)) << "\" y1=\"" << num(y0 + kTop)
      << "\" x2=\"" << num(px(t)) << "\" y2=\"" << num(y0 + kTop + ph)
      << "\" stroke=\"#ddd\"/>\n"
      << "<text x=\"" << num(px(t)) << "\" y=\"" << num(y0 + kTop + ph + 16)
      << "\" text-anchor=\"middle\" font-size=\"11\">" << label(t)
      << "</text>\n";
  }
  for (double t = yr.lo; t <= yr.hi + 0.5 * ys; t += ys) {
    o << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(py(t)) << "\" x2=\""
      << num(kLeft + pw) << "\" y2=\"" << num(py(t))
      << "\" stroke=\"#ddd\"/>\n"
      << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(py(t) + 4)
      << "\" text-anchor=\"end\" font-size=\"11\">" << label(t) << "</text>\n";
  }
  o << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\""
    << num(y0 + kPanelHeight - 12) << "\" text-anchor=\"middle\" font-size=\"12\">"
    << escape(p.x_label) << "</text>\n";
  const double yc = y0 + kTop + ph / 2;
  o << "<text x=\"18\" y=\"" << num(yc) << "\" transform=\"rotate(-90 18 "
    << num(yc) << ")\" text-anchor=\"middle\" font-size=\"12\">"
    << escape(p.y_label) << "</text>\n";

  for (std::size_t i = 0; i < p.series.size(); ++i) {
    const Series& s = p.series[i];
    if (s.x.size() == 1) {
      o << "<circle cx=\"" << num(px(s.x[0])) << "\" cy=\"" << num(py(s.y[0]))
        << "\" r=\"3\" fill=\"" << s.color << "\"/>\n";
    } else if (!s.x.empty()) {
      o << "<polyline fill=\"none\" stroke=\"" << s.color
        << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t k = 0; k < s.x.size(); ++k) {
        o << (k ? " " : "") << num(px(s.x[k])) << "," << num(py(s.y[k]));
      }
      o << "\"/>\n";
    }
    const double ly = y0 + kTop + 14 + 18 * static_cast<double>(i);
    const double lx = kLeft + pw + 12;
    o << "<line x1=\"" << num(lx) << "\" y1=\"" << num(ly - 4) << "\" x2=\""
      << num(lx + 22) << "\" y2=\"" << num(ly - 4) << "\" stroke=\"" << s.color
      << "\" stroke-width=\"2\"/>\n"
      << "<text x=\"" << num(lx + 28) << "\" y=\"" << num(ly)
      << "\" font-size=\"11\">" << escape(s.label) << "</text>\n";
  }
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError(path, "cannot write");
  out << text;
}

bool starts_with(const std::string& s, const std::string& p) {
  return s.compare(0, p.size(), p) == 0;
}

}  // namespace

int CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  return it == header.end() ? -1 : static_cast<int>(it - header.begin());
}

std::vector<double> CsvTable::values(int c) const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[static_cast<std::size_t>(c)]);
  return out;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path, "cannot open");
  CsvTable t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (t.header.empty()) {
      t.header = cells;
      continue;
    }
    if (cells.size() != t.header.size()) {
      throw ValidationError(path + ":" + std::to_string(lineno),
                            "row width differs from the header");
    }
    std::vector<double> row;
    for (const std::string& c : cells) {
      char* end = nullptr;
      const double v = std::strtod(c.c_str(), &end);
      if (end == c.c_str()) {
        throw ValidationError(path + ":" + std::to_string(lineno),
                              "non-numeric cell '" + c + "'");
      }
      row.push_back(v);
    }
    t.rows.push_back(std::move(row));
  }
  if (t.header.empty()) throw ValidationError(path, "missing header");
  return t;
}

std::string render_svg(const std::vector<Panel>& panels) {
  std::ostringstream o;
  const double height = kPanelHeight * static_cast<double>(panels.size());
  o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\""
    << num(kWidth) << "\" height=\"" << num(height) << "\" viewBox=\"0 0 "
    << num(kWidth) << " " << num(height) << "\" font-family=\"sans-serif\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"#fff\"/>\n";
  for (std::size_t i = 0; i < panels.size(); ++i) {
    draw_panel(o, panels[i], kPanelHeight * static_cast<double>(i));
  }
  o << "</svg>\n";
  return o.str();
}

std::vector<std::string> plot_log(const CsvTable& log, const std::string& dir) {
  if (log.rows.empty()) throw ValidationError("log", "no samples to plot");
  auto col = [&](const std::string& name) {
    const int c = log.column(name);
    if (c < 0) throw ValidationError("log", "missing column '" + name + "'");
    return log.values(c);
  };
  const std::vector<double> t = col("t");
  auto series = [&](const std::string& name, const std::string& lbl,
                    std::size_t k) {
    return Series{lbl, kPalette[k % 10], t, col(name)};
  };

  Panel path{"Path", "x [m]", "y [m]", {}, true};
  path.series.push_back({"reference", "#1f5fd6", col("orefx"), col("orefy")});
  path.series.push_back({"sphere", "#d62728", col("ox"), col("oy")});

  Panel pos{"Position error", "t [s]", "o_e [m]", {}, false};
  pos.series.push_back(series("oex", "x", 0));
  pos.series.push_back(series("oey", "y", 1));

  Panel ang{"Angular velocity error", "t [s]", "w_e [rad/s]", {}, false};
  ang.series.push_back(series("wex", "x", 0));
  ang.series.push_back(series("wey", "y", 1));
  ang.series.push_back(series("wez", "z", 2));

  Panel vel{"Actuator velocities", "t [s]", "[rad/s]", {}, false};
  Panel ctl{"Control input", "t [s]", "[N m]", {}, false};
  for (const std::string& h : log.header) {
    if (starts_with(h, "psidot_") ||
        (h.size() > 1 && h[0] == 'w' && std::isdigit(static_cast<unsigned char>(h[1])))) {
      vel.series.push_back(series(h, h, vel.series.size()));
    } else if (starts_with(h, "tau") || starts_with(h, "u_")) {
      ctl.series.push_back(series(h, h, ctl.series.size()));
    }
  }

  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const std::vector<std::pair<std::string, std::vector<Panel>>> files = {
      {"path.svg", {path}},
      {"position_error.svg", {pos}},
      {"angular_velocity_error.svg", {ang}},
      {"actuators.svg", {vel, ctl}}};
  std::vector<std::string> written;
  for (const auto& [name, panels] : files) {
    const std::string p = (fs::path(dir) / name).string();
    write_file(p, render_svg(panels));
    written.push_back(p);
  }
  return written;
}

}  // namespace sphero
