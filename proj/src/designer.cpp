#include "maglat/designer.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

namespace maglat {

namespace {

struct SpecBlock {
  std::string name;
  std::map<std::string, std::string> kv;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<SpecBlock> parse_blocks(const std::string& text) {
  std::vector<SpecBlock> blocks;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      std::string name = line;
      name.erase(std::remove_if(name.begin(), name.end(),
                                [](char c) { return c == '[' || c == ']'; }),
                 name.end());
      blocks.push_back({trim(name), {}});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("spec file: expected key = value at line " +
                                  std::to_string(lineno));
    if (blocks.empty())
      throw std::invalid_argument("spec file: key outside any section at line " +
                                  std::to_string(lineno));
    blocks.back().kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return blocks;
}

double to_num(const std::string& v, const std::string& key) {
  try {
    size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return x;
  } catch (const std::exception&) {
    throw std::invalid_argument("spec file: bad numeric value for '" + key + "': " + v);
  }
}

std::vector<double> to_nums(const std::string& v, const std::string& key, size_t n) {
  std::istringstream is(v);
  std::vector<double> out;
  double x;
  while (is >> x) out.push_back(x);
  if (out.size() != n)
    throw std::invalid_argument("spec file: '" + key + "' needs " + std::to_string(n) +
                                " numbers");
  return out;
}

int component_index(const std::string& v) {
  if (v == "x" || v == "0") return 0;
  if (v == "y" || v == "1") return 1;
  if (v == "z" || v == "2") return 2;
  throw std::invalid_argument("spec file: component must be x, y or z");
}

}  // namespace

DesignSpec DesignSpec::parse(const std::string& text) {
  DesignSpec spec;
  bool have_lattice = false, have_film = false;
  int auto_label = 0;
  for (const auto& block : parse_blocks(text)) {
    const auto get = [&](const std::string& key) -> const std::string* {
      const auto it = block.kv.find(key);
      return it == block.kv.end() ? nullptr : &it->second;
    };
    if (block.name == "lattice") {
      have_lattice = true;
      for (const auto& [k, v] : block.kv) {
        if (k == "zeta") spec.geometry.zeta = to_num(v, k);
        else if (k == "d") spec.phys.d = to_num(v, k);
        else if (k == "n1") spec.geometry.n1 = int(to_num(v, k));
        else if (k == "n2") spec.geometry.n2 = int(to_num(v, k));
        else throw std::invalid_argument("spec file: unknown [lattice] key '" + k + "'");
      }
    } else if (block.name == "film") {
      have_film = true;
      for (const auto& [k, v] : block.kv) {
        if (k == "Mz") spec.phys.Mz = to_num(v, k);
        else if (k == "delta") spec.phys.delta = to_num(v, k);
        else throw std::invalid_argument("spec file: unknown [film] key '" + k + "'");
      }
    } else if (block.name == "atom") {
      for (const auto& [k, v] : block.kv) {
        if (k == "species") {
          if (v == "rb87") spec.atom = AtomSpec::rb87_22();
          else throw std::invalid_argument("spec file: unknown species '" + v + "'");
        } else if (k == "F") spec.atom.F = to_num(v, k);
        else if (k == "mF") spec.atom.mF = to_num(v, k);
        else if (k == "gF") spec.atom.gF = to_num(v, k);
        else if (k == "mass") spec.atom.mass = to_num(v, k);
        else throw std::invalid_argument("spec file: unknown [atom] key '" + k + "'");
      }
    } else if (block.name == "site") {
      SiteSpec site;
      site.label = "site" + std::to_string(auto_label++);
      for (const auto& [k, v] : block.kv) {
        if (k == "label") site.label = v;
        else if (k == "xy") {
          const auto xy = to_nums(v, k, 2);
          site.xy = {xy[0], xy[1]};
        } else if (k == "height") site.height = to_num(v, k);
        else if (k == "euler_phi") site.phi = to_num(v, k);
        else if (k == "euler_theta") site.theta = to_num(v, k);
        else if (k == "euler_psi") site.psi = to_num(v, k);
        else if (k == "gradient") site.gradient = v != "false" && v != "0";
        else throw std::invalid_argument("spec file: unknown [[site]] key '" + k + "'");
      }
      spec.sites.push_back(site);
    } else if (block.name == "constraint") {
      const std::string* type = get("type");
      if (!type) throw std::invalid_argument("spec file: [[constraint]] needs a type");
      if (*type == "field") {
        FieldConstraintSpec c;
        for (const auto& [k, v] : block.kv) {
          if (k == "type") continue;
          else if (k == "point") {
            const auto p = to_nums(v, k, 3);
            c.point = {p[0], p[1], p[2]};
          } else if (k == "component") c.component = component_index(v);
          else if (k == "target") c.target = to_num(v, k);
          else throw std::invalid_argument("spec file: unknown field-constraint key '" + k + "'");
        }
        spec.field_constraints.push_back(c);
      } else if (*type == "equality") {
        EqualitySpec e;
        for (const auto& [k, v] : block.kv) {
          if (k == "type") continue;
          else if (k == "site_a") e.site_a = v;
          else if (k == "site_b") e.site_b = v;
          else if (k == "selector") e.selector = (v == "v" || v == "2") ? 2 : 1;
          else throw std::invalid_argument("spec file: unknown equality key '" + k + "'");
        }
        spec.equalities.push_back(e);
      } else {
        throw std::invalid_argument("spec file: unknown constraint type '" + *type + "'");
      }
    } else {
      throw std::invalid_argument("spec file: unknown section '" + block.name + "'");
    }
  }
  if (!have_lattice) throw std::invalid_argument("spec file: missing [lattice] section");
  if (!have_film) throw std::invalid_argument("spec file: missing [film] section");
  if (spec.sites.empty()) throw std::invalid_argument("spec file: at least one [[site]] required");
  spec.geometry.validate();
  spec.phys.validate();
  spec.atom.validate();
  return spec;
}

DesignSpec DesignSpec::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("cannot open spec file: " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse(buf.str());
}

namespace {

// Shortest lattice directions for barrier analysis: the two primitive
// vectors, plus the short diagonal when it ties their length (triangular).
std::vector<std::pair<std::string, Eigen::Vector2d>> barrier_directions(
    const LatticeGeometry& g) {
  const Eigen::Vector2d a1 = g.a1(), a2 = g.a2();
  std::vector<std::pair<std::string, Eigen::Vector2d>> dirs = {{"a1", a1}, {"a2", a2}};
  const Eigen::Vector2d diag = a1 - a2;
  if (diag.norm() < 1.02 * std::max(a1.norm(), a2.norm())) dirs.emplace_back("a1-a2", diag);
  return dirs;
}

std::string provenance_text(const DesignSpec& spec, const LpSolution& sol,
                            const RoundingReport& rr, int rank) {
  std::ostringstream os;
  os.precision(12);
  os << "maglat design result\n";
  os << "grid " << spec.geometry.n1 << "x" << spec.geometry.n2 << " zeta " << spec.geometry.zeta
     << " d " << spec.phys.d << " Mz " << spec.phys.Mz << " delta " << spec.phys.delta << "\n";
  os << "sites " << spec.sites.size() << " field constraints " << spec.field_constraints.size()
     << " equalities " << spec.equalities.size() << " rank " << rank << "\n";
  os << "C " << sol.C << " (pos " << sol.C_pos << " neg " << sol.C_neg << ") rounded "
     << rr.C << " perturbation_rel " << rr.perturbation_rel << "\n";
  return os.str();
}

}  // namespace

DesignResult run_design(const DesignSpec& spec) {
  auto program = DesignProgram::create(spec.geometry);
  for (const auto& site : spec.sites)
    if (site.gradient)
      add_gradient_constraints(program, site.trap_site(),
                               gradient_target(site.phi, site.theta, site.psi));
  for (const auto& c : spec.field_constraints)
    add_field_constraint(program, c.point, c.component, c.target);
  for (const auto& e : spec.equalities) {
    const auto find = [&](const std::string& label) -> const SiteSpec& {
      for (const auto& s : spec.sites)
        if (s.label == label) return s;
      throw std::invalid_argument("equality constraint references unknown site '" + label + "'");
    };
    add_equality_constraints(program, find(e.site_a).trap_site(), find(e.site_b).trap_site(),
                             e.selector);
  }

  const LinearSystem sys = assemble(program);
  const LpInstance instance = LpInstance::build(sys.A, sys.b);
  if (instance.residual > 1e-8 * (1.0 + instance.b.norm()))
    throw InfeasibleError(
        "constraints are mutually inconsistent: least-squares residual " +
        std::to_string(instance.residual) + " (minimal-norm violation certificate)");

  DesignResult result;
  result.lp = solve(instance, spec.lp);
  result.rounding = round_unrailed(spec.geometry, instance, result.lp, spec.lp.rail_tol);
  result.pattern = result.rounding.pattern;
  result.C = result.rounding.C;
  result.rank = sys.rank;
  result.provenance = provenance_text(spec, result.lp, result.rounding, sys.rank);
  result.barrier_dirs = barrier_directions(spec.geometry);
  if (!spec.analyze) return result;

  // Re-analysis of the rounded binary pattern.
  const SpectrumField field(FourierSpectrum::of_pattern(result.pattern));
  const SiteSpec& primary = spec.sites.front();
  const Eigen::Vector3d axis_hint = primary.trap_site().ioffe_axis();

  result.ioffe = symmetric_ioffe_search(field, primary.xy, primary.height, axis_hint,
                                        result.barrier_dirs[0].second,
                                        result.barrier_dirs[1].second, spec.ioffe);
  result.bias = solve_bias(field, primary.xy, primary.height, result.ioffe.B_I, axis_hint);

  for (const auto& site : spec.sites) {
    const Eigen::Vector3d trap =
        find_trap(field, result.bias, {site.xy.x(), site.xy.y(), site.height});
    TrapReport rep = characterize_trap(field, result.bias, spec.atom, spec.phys, trap);
    for (const auto& [label, dir] : result.barrier_dirs) {
      Barrier bar = barrier_along(field, result.bias, trap, dir, label);
      bar.height_gauss = bar.height * spec.phys.field_unit_gauss();
      bar.height_mk = spec.atom.mkelvin_from_gauss(bar.height_gauss);
      rep.barriers.push_back(bar);
    }
    if (spec.scan_zeros) {
      ZeroScanRegion region;
      region.z_min = 0.1e-6 / spec.phys.d;  // 0.1 um
      region.z_max = 4.0;
      const auto zres = detect_zeros(field, result.bias, spec.geometry, region,
                                     0.010 / spec.phys.field_unit_gauss());
      rep.zero_flags = zres.points;
      result.zeros = zres;
    }
    result.reports.push_back(std::move(rep));
  }
  return result;
}

EqualizeResult equalize_triangular(const DesignSpec& base, const EqualizeOptions& options) {
  if (base.field_constraints.size() > 0)
    throw std::invalid_argument("equalize_triangular: base spec must not already constrain u");

  auto evaluate = [&](double target) -> std::pair<double, DesignResult> {
    DesignSpec spec = base;
    FieldConstraintSpec c;
    c.point = options.point;
    c.component = options.component;
    c.target = target;
    spec.field_constraints.push_back(c);
    spec.scan_zeros = false;
    DesignResult res = run_design(spec);
    if (res.barrier_dirs.size() < 3 || res.reports.empty())
      throw SolverFailure("equalize_triangular: no third lattice direction to equalize");
    const auto& barriers = res.reports.front().barriers;
    // Objective: third-direction barrier minus the (equalized) primitive one.
    const double b1 = barriers[0].height;
    const double b3 = barriers[2].height;
    return {(b3 - b1) / b1, std::move(res)};
  };

  EqualizeResult out;
  // Coarse scan for a sign change.
  struct Node {
    double t, obj;
    bool valid;
  };
  std::vector<Node> scan;
  for (int i = 0; i < options.scan_points; ++i) {
    const double t = options.scan_lo +
                     (options.scan_hi - options.scan_lo) * i / (options.scan_points - 1);
    try {
      auto [obj, res] = evaluate(t);
      scan.push_back({t, obj, true});
      out.objective_scan.emplace_back(t, obj);
    } catch (const std::exception&) {
      scan.push_back({t, 0.0, false});
    }
  }
  double lo = 0.0, hi = 0.0, flo = 0.0, fhi = 0.0;
  bool bracketed = false;
  for (size_t i = 0; i + 1 < scan.size(); ++i) {
    if (!scan[i].valid || !scan[i + 1].valid) continue;
    if (scan[i].obj * scan[i + 1].obj <= 0.0) {
      lo = scan[i].t;
      flo = scan[i].obj;
      hi = scan[i + 1].t;
      fhi = scan[i + 1].obj;
      bracketed = true;
      break;
    }
  }
  if (!bracketed) {
    std::ostringstream os;
    os << "equalize_triangular: no sign change in the scanned interval;";
    for (const auto& [t, obj] : out.objective_scan) os << " (" << t << ", " << obj << ")";
    throw SolverFailure(os.str());
  }

  // Secant/bisection refinement on the barrier mismatch.
  double best_t = std::abs(flo) < std::abs(fhi) ? lo : hi;
  for (int it = 0; it < options.max_refine; ++it) {
    double mid = 0.5 * (lo + hi);
    if (std::abs(fhi - flo) > 0.0) {
      const double sec = lo - flo * (hi - lo) / (fhi - flo);
      if (sec > std::min(lo, hi) + 0.05 * std::abs(hi - lo) &&
          sec < std::max(lo, hi) - 0.05 * std::abs(hi - lo))
        mid = sec;
    }
    auto [obj, res] = evaluate(mid);
    out.objective_scan.emplace_back(mid, obj);
    best_t = mid;
    out.design = std::move(res);
    if (std::abs(obj) < options.tol) break;
    if (obj * flo <= 0.0) {
      hi = mid;
      fhi = obj;
    } else {
      lo = mid;
      flo = obj;
    }
  }
  out.target = best_t;
  return out;
}

void write_png(const std::string& path, const std::vector<unsigned char>& pixels, int width,
               int height) {
  if (pixels.size() != size_t(width) * size_t(height))
    throw std::invalid_argument("write_png: pixel buffer size mismatch");
  FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw std::runtime_error("write_png: cannot open " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    std::fclose(fp);
    throw std::runtime_error("write_png: libpng failure for " + path);
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, png_uint_32(width), png_uint_32(height), 8, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < height; ++y)
    png_write_row(png, const_cast<unsigned char*>(&pixels[size_t(y) * width]));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

void export_result(const DesignResult& result, const DesignSpec& spec, const std::string& dir,
                   bool csv, bool png) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const auto path = [&](const std::string& name) { return (fs::path(dir) / name).string(); };

  PatternFile pf;
  pf.pattern = result.pattern;
  pf.physical = spec.phys;
  write_pattern_file(path("pattern.txt"), pf);

  {
    std::ofstream os(path("lp_report.txt"));
    os << result.provenance << "\n";
    os << "equalized Ioffe field (reduced): " << std::setprecision(12) << result.bias.B_I
       << "\n";
  }

  if (csv) {
    std::ofstream traps(path("traps.csv"));
    write_trap_reports_csv(traps, result.reports, spec.phys);
    std::ofstream map(path("potential_map.csv"));
    const auto spectrum = FourierSpectrum::of_pattern(result.pattern);
    write_potential_map(map, spectrum,
                        spec.sites.empty() ? 0.5 : spec.sites.front().height, 128, 128);
  }

  if (png) {
    const auto& g = spec.geometry;
    std::vector<unsigned char> pat(size_t(g.n1) * g.n2);
    for (int j = 0; j < g.n2; ++j)
      for (int i = 0; i < g.n1; ++i)
        pat[size_t(g.n2 - 1 - j) * g.n1 + i] =
            result.pattern.at(i, j) > 0.5 ? 255 : 0;
    write_png(path("pattern.png"), pat, g.n1, g.n2);

    // In-plane pseudo-potential map at the primary trap height.
    const int n = 256;
    const double h = spec.sites.empty() ? 0.5 : spec.sites.front().height;
    const SpectrumField field(FourierSpectrum::of_pattern(result.pattern));
    std::vector<Eigen::Vector3d> plane(size_t(n) * n, result.bias.B0);
    field.add_plane_fields(g, n, n, h, plane);
    double vmin = 1e300, vmax = -1e300;
    std::vector<double> vals(plane.size());
    for (size_t i = 0; i < plane.size(); ++i) {
      vals[i] = plane[i].norm();
      vmin = std::min(vmin, vals[i]);
      vmax = std::max(vmax, vals[i]);
    }
    std::vector<unsigned char> img(plane.size());
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        img[size_t(n - 1 - j) * n + i] = (unsigned char)(255.0 *
            (vals[size_t(j) * n + i] - vmin) / std::max(vmax - vmin, 1e-300));
    write_png(path("potential.png"), img, n, n);
  }
}

}  // namespace maglat
