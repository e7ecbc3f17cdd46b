#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <json.hpp>

#include "selcov/coverage.hpp"
#include "selcov/mc_oracle.hpp"
#include "selcov/minimizer.hpp"
#include "selcov/parallel.hpp"

namespace selcov::cli {

namespace {

using nlohmann::ordered_json;

constexpr const char* kSweepHeader =
    "gamma,p_accept,p_J,p_J_and_accept,p_I_and_accept,d_wm,d_rd,coverage_K,coverage_K_star";
constexpr const char* kMinHeader =
    "m,rho,coverage_nominal,test_size,gamma_star,min_coverage,d_wm_at_min,d_rd_at_min";

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

double rounded(double x) { return std::strtod(format_number(x).c_str(), nullptr); }

std::string join(const std::vector<std::string>& args) {
  std::string s;
  for (const auto& a : args) {
    if (!s.empty()) s += ' ';
    s += a;
  }
  return s;
}

std::string xml_escape(const std::string& s) {
  std::string r;
  for (char c : s) {
    switch (c) {
      case '&': r += "&amp;"; break;
      case '<': r += "&lt;"; break;
      case '>': r += "&gt;"; break;
      case '"': r += "&quot;"; break;
      default: r += c;
    }
  }
  return r;
}

// Destination of the primary output: --out path or the supplied stream.
// The file is opened before any work starts so an unwritable path fails fast.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : fallback_(fallback) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary | std::ios::trunc);
      if (!file_) throw UsageError("cannot write output file: " + path);
    }
  }
  void write(const std::string& text) {
    std::ostream& os = file_.is_open() ? static_cast<std::ostream&>(file_) : fallback_;
    os << text;
    os.flush();
    if (!os) throw UsageError("failed writing output");
  }

 private:
  std::ofstream file_;
  std::ostream& fallback_;
};

struct ScenarioFlags {
  int m = 40;
  double rho = 0.6;
  double coverage = 0.95;
  double test_size = 0.1;

  Scenario scenario() const {
    if (m < 1) throw UsageError("--m must be >= 1");
    Scenario s{DegreesOfFreedom(m), rho, coverage, test_size};
    s.validate();
    return s;
  }
};

struct QuadFlags {
  double abs_tol = QuadratureConfig{}.abs_tol;
  double rel_tol = QuadratureConfig{}.rel_tol;
  int max_subdivisions = QuadratureConfig{}.max_subdivisions;

  QuadratureConfig config() const {
    QuadratureConfig q;
    q.abs_tol = abs_tol;
    q.rel_tol = rel_tol;
    q.max_subdivisions = max_subdivisions;
    q.validate();
    return q;
  }
};

struct IoFlags {
  std::string format;
  std::string out;
  int streams = 0;

  unsigned threads() const {
    if (streams < 0) throw UsageError("--streams must be >= 0");
    return streams == 0 ? default_thread_count() : static_cast<unsigned>(streams);
  }
};

void add_scenario(CLI::App* app, ScenarioFlags& f) {
  app->add_option("--m", f.m, "residual degrees of freedom n - p")->capture_default_str();
  app->add_option("--rho", f.rho, "correlation of theta_hat and tau_hat")->capture_default_str();
  app->add_option("--coverage", f.coverage, "nominal coverage 1 - alpha")->capture_default_str();
  app->add_option("--test-size", f.test_size, "size of the preliminary t test")
      ->capture_default_str();
}

void add_quad(CLI::App* app, QuadFlags& f) {
  app->add_option("--abs-tol", f.abs_tol, "absolute tolerance per integral")
      ->capture_default_str();
  app->add_option("--rel-tol", f.rel_tol, "relative tolerance per integral")
      ->capture_default_str();
  app->add_option("--max-subdivisions", f.max_subdivisions, "panel limit per integral")
      ->capture_default_str();
}

void add_io(CLI::App* app, IoFlags& f, std::vector<std::string> formats) {
  f.format = formats.front();
  app->add_option("--format", f.format, "output format")
      ->check(CLI::IsMember(formats))
      ->capture_default_str();
  app->add_option("--out", f.out, "output file (default: standard output)");
  app->add_option("--streams", f.streams, "worker threads, 0 = all cores")->capture_default_str();
  app->add_option("--config", "flat key=value file; flags on the command line win");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool has_flag(const std::vector<std::string>& args, const std::string& flag) {
  return std::any_of(args.begin(), args.end(), [&](const std::string& a) {
    return a == flag || a.rfind(flag + "=", 0) == 0;
  });
}

// Inserts "--key value" for every line of the --config file whose flag is not
// already on the command line. Blank lines and lines starting with '#' are
// skipped.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    }
  }
  if (path.empty() || args.empty()) return args;
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file: " + path);

  std::vector<std::string> from_file;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError(path + ":" + std::to_string(lineno) + ": expected key=value");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.rfind("--", 0) == 0) key = key.substr(2);
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    if (key.empty() || key == "config") {
      throw UsageError(path + ":" + std::to_string(lineno) + ": bad key");
    }
    if (has_flag(args, "--" + key)) continue;
    from_file.push_back("--" + key + "=" + value);
  }

  // Subcommand first, then file values, then the command line.
  std::vector<std::string> out{args.front()};
  out.insert(out.end(), from_file.begin(), from_file.end());
  out.insert(out.end(), args.begin() + 1, args.end());
  return out;
}

ordered_json scenario_json(const Scenario& s) {
  ordered_json j;
  j["m"] = s.m.value();
  j["rho"] = rounded(s.rho);
  j["coverage_nominal"] = rounded(s.nominal_coverage);
  j["test_size"] = rounded(s.test_size);
  return j;
}

ordered_json breakdown_json(const DeficitBreakdown& d) {
  ordered_json j;
  j["gamma"] = rounded(d.gamma);
  j["p_accept"] = rounded(d.p_accept);
  j["p_J"] = rounded(d.p_J);
  j["p_J_and_accept"] = rounded(d.p_J_and_accept);
  j["p_I_and_accept"] = rounded(d.p_I_and_accept);
  j["d_wm"] = rounded(d.d_wm);
  j["d_rd"] = rounded(d.d_rd);
  j["coverage_K"] = rounded(d.coverage_K);
  j["coverage_K_star"] = rounded(d.coverage_K_star);
  return j;
}

ordered_json quadrature_json(const QuadratureConfig& q) {
  ordered_json j;
  j["abs_tol"] = q.abs_tol;
  j["rel_tol"] = q.rel_tol;
  j["w_trunc_prob"] = q.w_trunc_prob;
  j["h_trunc_halfwidth"] = q.h_trunc_halfwidth;
  j["max_subdivisions"] = q.max_subdivisions;
  return j;
}

std::string breakdown_csv_row(const DeficitBreakdown& d) {
  std::string row;
  for (double x : {d.gamma, d.p_accept, d.p_J, d.p_J_and_accept, d.p_I_and_accept, d.d_wm,
                   d.d_rd, d.coverage_K, d.coverage_K_star}) {
    if (!row.empty()) row += ',';
    row += format_number(x);
  }
  return row;
}

std::vector<DeficitBreakdown> sweep_values(const Scenario& scenario, const QuadratureConfig& q,
                                           const std::vector<double>& grid, unsigned threads) {
  const CoverageModel model(scenario, q);
  std::vector<DeficitBreakdown> rows(grid.size());
  parallel_for(grid.size(), threads, [&](std::size_t i) { rows[i] = model.deficits(grid[i]); });
  return rows;
}

struct Series {
  std::string label;
  std::vector<DeficitBreakdown> rows;
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

// Three side-by-side panels: d_wm, d_rd and coverage_K against gamma.
std::string render_svg(const std::vector<Series>& series, const std::string& title,
                       const std::string& flags) {
  constexpr double kPanelW = 320, kPanelH = 260, kLeft = 58, kRight = 12, kTop = 34,
                   kBottom = 42;
  constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  struct Panel {
    const char* name;
    double DeficitBreakdown::*field;
  };
  const Panel panels[] = {{"D_wm", &DeficitBreakdown::d_wm},
                          {"D_rd", &DeficitBreakdown::d_rd},
                          {"coverage of K", &DeficitBreakdown::coverage_K}};

  const double width = 3 * kPanelW;
  const double height = kPanelH + 30;
  std::ostringstream s;
  s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\">\n";
  s << "<metadata>selcov " << xml_escape(flags) << "</metadata>\n";
  s << "<title>" << xml_escape(title) << "</title>\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  double gmin = std::numeric_limits<double>::infinity();
  double gmax = -gmin;
  for (const auto& ser : series) {
    for (const auto& r : ser.rows) {
      gmin = std::min(gmin, r.gamma);
      gmax = std::max(gmax, r.gamma);
    }
  }
  if (!(gmax > gmin)) gmax = gmin + 1.0;

  for (int p = 0; p < 3; ++p) {
    double ymin = std::numeric_limits<double>::infinity();
    double ymax = -ymin;
    for (const auto& ser : series) {
      for (const auto& r : ser.rows) {
        ymin = std::min(ymin, r.*panels[p].field);
        ymax = std::max(ymax, r.*panels[p].field);
      }
    }
    if (p < 2) ymin = std::min(ymin, 0.0);
    if (!(ymax > ymin)) ymax = ymin + 1e-3;
    const double pad = 0.05 * (ymax - ymin);
    ymin -= pad;
    ymax += pad;

    const double x0 = p * kPanelW + kLeft;
    const double x1 = (p + 1) * kPanelW - kRight;
    const double y0 = kTop + kPanelH - kBottom;
    const double y1 = kTop;
    auto px = [&](double g) { return x0 + (g - gmin) / (gmax - gmin) * (x1 - x0); };
    auto py = [&](double v) { return y0 - (v - ymin) / (ymax - ymin) * (y0 - y1); };

    s << "<g>\n";
    s << "<text x=\"" << fmt("%.2f", 0.5 * (x0 + x1)) << "\" y=\"20\" text-anchor=\"middle\" "
      << "font-size=\"14\">" << panels[p].name << "</text>\n";
    s << "<rect x=\"" << fmt("%.2f", x0) << "\" y=\"" << fmt("%.2f", y1) << "\" width=\""
      << fmt("%.2f", x1 - x0) << "\" height=\"" << fmt("%.2f", y0 - y1)
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
      const double g = gmin + k * (gmax - gmin) / 4;
      const double v = ymin + k * (ymax - ymin) / 4;
      s << "<text x=\"" << fmt("%.2f", px(g)) << "\" y=\"" << fmt("%.2f", y0 + 16)
        << "\" text-anchor=\"middle\" font-size=\"10\">" << fmt("%.3g", g) << "</text>\n";
      s << "<text x=\"" << fmt("%.2f", x0 - 4) << "\" y=\"" << fmt("%.2f", py(v) + 3)
        << "\" text-anchor=\"end\" font-size=\"10\">" << fmt("%.3g", v) << "</text>\n";
    }
    s << "<text x=\"" << fmt("%.2f", 0.5 * (x0 + x1)) << "\" y=\"" << fmt("%.2f", y0 + 32)
      << "\" text-anchor=\"middle\" font-size=\"11\">|gamma|</text>\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
      s << "<polyline fill=\"none\" stroke-width=\"1.5\" stroke=\"" << kColors[k % 5]
        << "\" points=\"";
      bool first = true;
      for (const auto& r : series[k].rows) {
        if (!first) s << ' ';
        first = false;
        s << fmt("%.2f", px(r.gamma)) << ',' << fmt("%.2f", py(r.*panels[p].field));
      }
      s << "\"/>\n";
    }
    s << "</g>\n";
  }
  for (std::size_t k = 0; k < series.size(); ++k) {
    const double x = kLeft + 120.0 * k;
    s << "<text x=\"" << fmt("%.2f", x) << "\" y=\"" << fmt("%.2f", height - 8)
      << "\" font-size=\"11\" fill=\"" << kColors[k % 5] << "\">" << xml_escape(series[k].label)
      << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

std::string render_series(const std::vector<Series>& series, const std::vector<double>& rhos,
                          const std::string& format, const std::string& title,
                          const std::string& flags) {
  if (format == "svg") return render_svg(series, title, flags);
  const bool multi = series.size() > 1;
  if (format == "json") {
    ordered_json all = ordered_json::array();
    for (std::size_t k = 0; k < series.size(); ++k) {
      for (const auto& r : series[k].rows) {
        ordered_json row;
        if (multi) row["rho"] = rounded(rhos[k]);
        row.update(breakdown_json(r));
        all.push_back(std::move(row));
      }
    }
    return all.dump(2) + "\n";
  }
  std::string text = multi ? std::string("rho,") + kSweepHeader : kSweepHeader;
  text += '\n';
  for (std::size_t k = 0; k < series.size(); ++k) {
    for (const auto& r : series[k].rows) {
      if (multi) text += format_number(rhos[k]) + ',';
      text += breakdown_csv_row(r) + '\n';
    }
  }
  return text;
}

// ---------------------------------------------------------------- commands

struct PointCmd {
  ScenarioFlags scenario;
  QuadFlags quad;
  IoFlags io;
  double gamma = 2.0;

  void attach(CLI::App* app) {
    add_scenario(app, scenario);
    add_quad(app, quad);
    add_io(app, io, {"json", "csv"});
    app->add_option("--gamma", gamma, "scaled constraint violation")->capture_default_str();
  }

  int run(std::ostream& out) const {
    const Scenario s = scenario.scenario();
    const QuadratureConfig q = quad.config();
    Sink sink(io.out, out);
    const DeficitBreakdown d = CoverageModel(s, q).deficits(gamma);
    if (io.format == "csv") {
      sink.write(std::string(kSweepHeader) + '\n' + breakdown_csv_row(d) + '\n');
      return kOk;
    }
    ordered_json j;
    j["scenario"] = scenario_json(s);
    j.update(breakdown_json(d));
    j["quadrature"] = quadrature_json(q);
    sink.write(j.dump(2) + "\n");
    return kOk;
  }
};

struct SweepCmd {
  ScenarioFlags scenario;
  QuadFlags quad;
  IoFlags io;
  double gamma_min = 0.0;
  double gamma_max = 10.0;
  double step = 0.1;

  void attach(CLI::App* app) {
    add_scenario(app, scenario);
    add_quad(app, quad);
    add_io(app, io, {"csv", "json", "svg"});
    app->add_option("--gamma-min", gamma_min, "first grid point")->capture_default_str();
    app->add_option("--gamma-max", gamma_max, "last grid point")->capture_default_str();
    app->add_option("--step", step, "grid spacing")->capture_default_str();
  }

  std::vector<double> grid() const {
    if (gamma_min < 0.0) throw UsageError("--gamma-min must be >= 0");
    return inclusive_grid(gamma_min, gamma_max, step);
  }

  int run(std::ostream& out, const std::string& flags) const {
    const Scenario s = scenario.scenario();
    const QuadratureConfig q = quad.config();
    const std::vector<double> g = grid();
    Sink sink(io.out, out);
    std::vector<Series> series{{"rho = " + format_number(s.rho), {}}};
    series[0].rows = sweep_values(s, q, g, io.threads());
    sink.write(render_series(series, {s.rho}, io.format,
                             "m = " + std::to_string(s.m.value()) + ", 1 - alpha = " +
                                 format_number(s.nominal_coverage) + ", test size " +
                                 format_number(s.test_size),
                             flags));
    return kOk;
  }
};

struct Figure1Cmd {
  SweepCmd sweep;
  std::vector<double> rhos{0.3, 0.6, 0.8};

  void attach(CLI::App* app) {
    add_scenario(app, sweep.scenario);
    add_quad(app, sweep.quad);
    add_io(app, sweep.io, {"svg", "csv", "json"});
    app->remove_option(app->get_option("--rho"));
    app->add_option("--rho", rhos, "correlations, one curve each")
        ->delimiter(',')
        ->capture_default_str();
    app->add_option("--gamma-max", sweep.gamma_max, "last grid point")->capture_default_str();
    app->add_option("--step", sweep.step, "grid spacing")->capture_default_str();
  }

  int run(std::ostream& out, const std::string& flags) const {
    const QuadratureConfig q = sweep.quad.config();
    const std::vector<double> g = sweep.grid();
    std::vector<Series> series;
    ScenarioFlags sf = sweep.scenario;
    std::vector<Scenario> scenarios;
    for (double r : rhos) {
      sf.rho = r;
      scenarios.push_back(sf.scenario());
    }
    Sink sink(sweep.io.out, out);
    for (const auto& s : scenarios) {
      series.push_back({"rho = " + format_number(s.rho), sweep_values(s, q, g, sweep.io.threads())});
    }
    sink.write(render_series(series, rhos, sweep.io.format,
                             "m = " + std::to_string(sweep.scenario.m) + ", 1 - alpha = " +
                                 format_number(sweep.scenario.coverage) + ", test size " +
                                 format_number(sweep.scenario.test_size),
                             flags));
    return kOk;
  }
};

struct MinCmd {
  std::vector<int> ms{1, 2, 5, 10, 40, 100};
  std::vector<double> rhos{0.0, 0.3, 0.6, 0.8};
  std::vector<double> coverages{0.9, 0.95, 0.98};
  std::vector<double> sizes{0.02, 0.05, 0.1};
  MinSearchConfig search;
  QuadFlags quad;
  IoFlags io;

  void attach(CLI::App* app) {
    app->add_option("--m", ms, "degrees of freedom list")->delimiter(',')->capture_default_str();
    app->add_option("--rho", rhos, "correlation list")->delimiter(',')->capture_default_str();
    app->add_option("--coverage", coverages, "nominal coverage list")
        ->delimiter(',')
        ->capture_default_str();
    app->add_option("--test-size", sizes, "test size list")->delimiter(',')->capture_default_str();
    app->add_option("--gamma-max", search.gamma_max, "upper end of the gamma search")
        ->capture_default_str();
    app->add_option("--step", search.coarse_step, "coarse grid spacing")->capture_default_str();
    add_quad(app, quad);
    add_io(app, io, {"csv", "json"});
  }

  int run(std::ostream& out, std::ostream& err) const {
    const QuadratureConfig q = quad.config();
    MinSearchConfig sc = search;
    sc.threads = io.threads();
    sc.validate();
    std::vector<Scenario> scenarios;
    for (int m : ms) {
      if (m < 1) throw UsageError("--m entries must be >= 1");
      for (double r : rhos) {
        for (double c : coverages) {
          for (double t : sizes) scenarios.push_back({DegreesOfFreedom(m), r, c, t});
        }
      }
    }
    Sink sink(io.out, out);
    const auto rows = min_table(scenarios, sc, q);
    const bool any_error =
        std::any_of(rows.begin(), rows.end(), [](const auto& r) { return !r.result; });
    const bool any_ok =
        std::any_of(rows.begin(), rows.end(), [](const auto& r) { return r.result.has_value(); });

    if (io.format == "json") {
      ordered_json all = ordered_json::array();
      for (const auto& row : rows) {
        ordered_json j = scenario_json(row.scenario);
        if (row.result) {
          j["gamma_star"] = rounded(row.result->gamma_star);
          j["min_coverage"] = rounded(row.result->min_coverage);
          j["d_wm_at_min"] = rounded(row.result->breakdown_at_min.d_wm);
          j["d_rd_at_min"] = rounded(row.result->breakdown_at_min.d_rd);
          j["at_gamma_max"] = row.result->at_gamma_max;
        } else {
          j["error"] = row.error;
        }
        all.push_back(std::move(j));
      }
      sink.write(all.dump(2) + "\n");
    } else {
      std::string text = kMinHeader;
      if (any_error) text += ",error";
      text += '\n';
      for (const auto& row : rows) {
        const Scenario& s = row.scenario;
        text += std::to_string(s.m.value()) + ',' + format_number(s.rho) + ',' +
                format_number(s.nominal_coverage) + ',' + format_number(s.test_size);
        if (row.result) {
          const auto& r = *row.result;
          for (double x : {r.gamma_star, r.min_coverage, r.breakdown_at_min.d_wm,
                           r.breakdown_at_min.d_rd}) {
            text += ',' + format_number(x);
          }
          if (any_error) text += ',';
        } else {
          std::string msg = row.error;
          std::replace(msg.begin(), msg.end(), ',', ';');
          std::replace(msg.begin(), msg.end(), '\n', ' ');
          text += ",,,,," + msg;
        }
        text += '\n';
      }
      sink.write(text);
    }
    for (const auto& row : rows) {
      if (!row.result) err << "row m=" << row.scenario.m.value() << " rho=" << row.scenario.rho
                           << " failed: " << row.error << '\n';
    }
    return any_ok ? kOk : kNumerical;
  }
};

struct ValidateCmd {
  ScenarioFlags scenario;
  QuadFlags quad;
  IoFlags io;
  double gamma = 2.0;
  std::uint64_t reps = 10'000'000;
  std::uint64_t seed = 42;

  void attach(CLI::App* app) {
    add_scenario(app, scenario);
    add_quad(app, quad);
    add_io(app, io, {"csv", "json"});
    app->add_option("--gamma", gamma, "scaled constraint violation")->capture_default_str();
    app->add_option("--reps", reps, "Monte Carlo replications")->capture_default_str();
    app->add_option("--seed", seed, "random seed")->capture_default_str();
  }

  int run(std::ostream& out, std::ostream& err) const {
    const Scenario s = scenario.scenario();
    const QuadratureConfig q = quad.config();
    MonteCarloConfig mc;
    mc.replications = reps;
    mc.seed = seed;
    mc.stream_count = static_cast<int>(io.threads());
    mc.validate();
    Sink sink(io.out, out);

    const DeficitBreakdown d = CoverageModel(s, q).deficits(gamma);
    const MCEstimates e = simulate_reduced(s, gamma, mc);

    bool pass = true;
    std::string csv = "field,quadrature,monte_carlo,se,z\n";
    ordered_json fields = ordered_json::array();
    for (const auto& f : kValidatedFields) {
      const double qv = d.*f.quadrature;
      const Estimate est = e.*f.mc;
      const double diff = est.value - qv;
      double z = 0.0;
      if (est.se > 0.0) {
        z = diff / est.se;
      } else if (std::abs(diff) > 2.0 * q.abs_tol) {
        z = std::copysign(std::numeric_limits<double>::infinity(), diff);
      }
      if (!(std::abs(z) <= 4.0)) pass = false;
      csv += std::string(f.name) + ',' + format_number(qv) + ',' + format_number(est.value) + ',' +
             format_number(est.se) + ',' + format_number(z) + '\n';
      ordered_json j;
      j["field"] = f.name;
      j["quadrature"] = rounded(qv);
      j["monte_carlo"] = rounded(est.value);
      j["se"] = rounded(est.se);
      j["z"] = std::isfinite(z) ? ordered_json(rounded(z)) : ordered_json(format_number(z));
      fields.push_back(std::move(j));
    }
    if (io.format == "json") {
      ordered_json j;
      j["scenario"] = scenario_json(s);
      j["gamma"] = rounded(gamma);
      j["replications"] = reps;
      j["seed"] = seed;
      j["fields"] = std::move(fields);
      j["pass"] = pass;
      sink.write(j.dump(2) + "\n");
    } else {
      sink.write(csv);
    }
    if (!pass) {
      err << "validation failed: some |z| > 4\n";
      return kValidation;
    }
    return kOk;
  }
};

}  // namespace

std::string format_number(double x) {
  if (x == 0.0) x = 0.0;  // no "-0"
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Coverage of confidence intervals after a preliminary t test", "selcov"};
  app.require_subcommand(1);

  PointCmd point;
  SweepCmd sweep;
  Figure1Cmd figure1;
  MinCmd min;
  ValidateCmd validate;
  auto* point_app = app.add_subcommand("point", "all deficit components at one gamma");
  auto* sweep_app = app.add_subcommand("sweep", "deficit components on a gamma grid");
  auto* figure1_app = app.add_subcommand("figure1", "gamma sweeps for several rho, three panels");
  auto* min_app = app.add_subcommand("min", "minimum coverage over gamma for a scenario grid");
  auto* validate_app = app.add_subcommand("validate", "quadrature against Monte Carlo");
  min_app->alias("min-table");
  point.attach(point_app);
  sweep.attach(sweep_app);
  figure1.attach(figure1_app);
  min.attach(min_app);
  validate.attach(validate_app);

  std::vector<std::string> argv_store{"selcov"};
  try {
    const auto expanded = expand_config(args);
    argv_store.insert(argv_store.end(), expanded.begin(), expanded.end());
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  const std::string flags = join(args);
  try {
    if (point_app->parsed()) return point.run(out);
    if (sweep_app->parsed()) return sweep.run(out, flags);
    if (figure1_app->parsed()) return figure1.run(out, flags);
    if (min_app->parsed()) return min.run(out, err);
    if (validate_app->parsed()) return validate.run(out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const QuadratureError& e) {
    err << "quadrature failure: " << e.what() << "\n  estimate " << format_number(e.estimate())
        << ", error estimate " << format_number(e.abs_error()) << ", worst panel ["
        << format_number(e.worst_lo()) << ", " << format_number(e.worst_hi()) << "] error "
        << format_number(e.worst_error()) << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  }
  return kUsage;
}

}  // namespace selcov::cli
