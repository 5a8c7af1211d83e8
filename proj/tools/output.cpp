#include "output.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace tool {

namespace {

std::string quote(const std::string& cell) {
  if (cell.find_first_of(",\"\r\n") == std::string::npos) return cell;
  std::string out = "\"";
  for (char c : cell) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

}  // namespace

CsvWriter::CsvWriter(std::vector<std::string> header) : width_(header.size()) { append(header); }

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != width_) throw std::logic_error("CSV row width does not match the header");
  append(cells);
}

void CsvWriter::append(const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ += ',';
    out_ += quote(cells[i]);
  }
  out_ += "\r\n";
}

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string num(long long v) { return std::to_string(v); }

std::string svg_plot(const PlotSpec& spec, const std::vector<Series>& series) {
  const double W = 720, H = 480, left = 80, right = 170, top = 40, bottom = 60;
  auto tx = [&](double v) { return spec.logx ? std::log10(v) : v; };
  auto ty = [&](double v) { return spec.logy ? std::log10(v) : v; };
  auto usable = [&](double x, double y) {
    return std::isfinite(x) && std::isfinite(y) && (!spec.logx || x > 0) && (!spec.logy || y > 0);
  };
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!usable(s.x[i], s.y[i])) continue;
      x0 = std::min(x0, tx(s.x[i]));
      x1 = std::max(x1, tx(s.x[i]));
      y0 = std::min(y0, ty(s.y[i]));
      y1 = std::max(y1, ty(s.y[i]));
    }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x0 -= 0.5, x1 += 0.5;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;
  const double pw = W - left - right, ph = H - top - bottom;
  auto px = [&](double v) { return left + (tx(v) - x0) / (x1 - x0) * pw; };
  auto py = [&](double v) { return top + ph - (ty(v) - y0) / (y1 - y0) * ph; };

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fixed(W) + "\" height=\"" + fixed(H) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + fixed(W / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" + escape_xml(spec.title) + "</text>\n";
  s += "<rect x=\"" + fixed(left) + "\" y=\"" + fixed(top) + "\" width=\"" + fixed(pw) + "\" height=\"" + fixed(ph) +
       "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double fx = x0 + (x1 - x0) * k / 4.0, fy = y0 + (y1 - y0) * k / 4.0;
    const double gx = left + pw * k / 4.0, gy = top + ph - ph * k / 4.0;
    const std::string lx = spec.logx ? "1e" + fixed(fx) : num(std::round(fx * 1e4) / 1e4);
    const std::string ly = spec.logy ? "1e" + fixed(fy) : num(std::round(fy * 1e4) / 1e4);
    s += "<line x1=\"" + fixed(gx) + "\" y1=\"" + fixed(top) + "\" x2=\"" + fixed(gx) + "\" y2=\"" + fixed(top + ph) +
         "\" stroke=\"#ddd\"/>\n";
    s += "<line x1=\"" + fixed(left) + "\" y1=\"" + fixed(gy) + "\" x2=\"" + fixed(left + pw) + "\" y2=\"" + fixed(gy) +
         "\" stroke=\"#ddd\"/>\n";
    s += "<text x=\"" + fixed(gx) + "\" y=\"" + fixed(top + ph + 18) + "\" text-anchor=\"middle\">" + escape_xml(lx) + "</text>\n";
    s += "<text x=\"" + fixed(left - 6) + "\" y=\"" + fixed(gy + 4) + "\" text-anchor=\"end\">" + escape_xml(ly) + "</text>\n";
  }
  s += "<text x=\"" + fixed(left + pw / 2) + "\" y=\"" + fixed(H - 15) + "\" text-anchor=\"middle\">" + escape_xml(spec.xlabel) + "</text>\n";
  s += "<text x=\"18\" y=\"" + fixed(top + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " + fixed(top + ph / 2) +
       ")\">" + escape_xml(spec.ylabel) + "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& sr = series[k];
    const std::string color = kPalette[k % 8];
    if (sr.points) {
      for (std::size_t i = 0; i < sr.x.size(); ++i)
        if (usable(sr.x[i], sr.y[i]))
          s += "<circle cx=\"" + fixed(px(sr.x[i])) + "\" cy=\"" + fixed(py(sr.y[i])) + "\" r=\"2\" fill=\"" + color + "\"/>\n";
    } else {
      std::string pts;
      for (std::size_t i = 0; i < sr.x.size(); ++i)
        if (usable(sr.x[i], sr.y[i])) pts += fixed(px(sr.x[i])) + "," + fixed(py(sr.y[i])) + " ";
      s += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
    }
    const double ly = top + 14 + 18 * static_cast<double>(k);
    s += "<rect x=\"" + fixed(W - right + 12) + "\" y=\"" + fixed(ly - 9) + "\" width=\"12\" height=\"4\" fill=\"" + color + "\"/>\n";
    s += "<text x=\"" + fixed(W - right + 30) + "\" y=\"" + fixed(ly - 3) + "\">" + escape_xml(sr.name) + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

void write_file(const std::string& path, const std::string& content) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << content;
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

}  // namespace tool
