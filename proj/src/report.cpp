#include "perco/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace perco {

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "0x%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

std::string csv_escape(const std::string& s) {
  bool needs = s.find_first_of(",\"\n") != std::string::npos;
  if (!needs) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += "\"";
  return out;
}

}  // namespace

void write_observables_csv(const std::string& path, const std::vector<TrialObservable>& rows,
                           const std::string& config_hash) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "# config_hash=" << config_hash << "\n";
  out << "trial_id,seed,name,value,aux\n";
  for (const auto& r : rows) {
    out << r.trial << "," << r.seed << "," << csv_escape(r.name) << "," << format_double(r.value) << ","
        << csv_escape(r.aux) << "\n";
  }
}

void write_shape_svg(const std::string& path, const ShapeEstimate& shape, const std::string& config_hash) {
  if (shape.directions.empty() || shape.directions.front().size() != 2) {
    throw std::invalid_argument("shape SVG is rendered for d = 2 only");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");

  const double scale = 140.0;
  const double size = 360.0;
  auto tx = [&](double x) { return size / 2 + scale * x; };
  auto ty = [&](double y) { return size / 2 - scale * y; };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size
      << "\" viewBox=\"0 0 " << size << " " << size << "\">\n";
  if (!config_hash.empty()) out << "<!-- config_hash=" << config_hash << " -->\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  // l1 unit diamond: the lower bound |x|_1 <= p_u(x)
  out << "<polygon points=\"" << tx(1) << "," << ty(0) << " " << tx(0) << "," << ty(1) << " " << tx(-1) << ","
      << ty(0) << " " << tx(0) << "," << ty(-1)
      << "\" fill=\"none\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n";

  if (shape.hull.size() >= 3) {
    out << "<polygon points=\"";
    for (const auto& p : shape.hull) out << tx(p[0]) << "," << ty(p[1]) << " ";
    out << "\" fill=\"#dbeafe\" fill-opacity=\"0.6\" stroke=\"#1d4ed8\"/>\n";
  }

  for (std::size_t i = 0; i < shape.directions.size(); ++i) {
    double nx = static_cast<double>(shape.directions[i][0]);
    double ny = static_cast<double>(shape.directions[i][1]);
    double p = shape.p_hat[i];
    double se = shape.stderr_[i];
    for (int sign = -1; sign <= 1; sign += 2) {
      double bx = sign * nx / p;
      double by = sign * ny / p;
      double ix = sign * nx / (p + se);
      double iy = sign * ny / (p + se);
      double ox = p - se > 1e-9 ? sign * nx / (p - se) : bx;
      double oy = p - se > 1e-9 ? sign * ny / (p - se) : by;
      out << "<line x1=\"" << tx(ix) << "\" y1=\"" << ty(iy) << "\" x2=\"" << tx(ox) << "\" y2=\"" << ty(oy)
          << "\" stroke=\"#dc2626\" stroke-width=\"1.5\"/>\n";
      out << "<circle cx=\"" << tx(bx) << "\" cy=\"" << ty(by) << "\" r=\"3\" fill=\"#dc2626\"/>\n";
    }
  }
  out << "</svg>\n";
}

}  // namespace perco
