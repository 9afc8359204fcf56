#include "cdspec/experiment.hpp"

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cstdio>
#include <iostream>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>

#include "cdspec/acceptance.hpp"
#include "cdspec/envelope.hpp"
#include "cdspec/gabor.hpp"
#include "cdspec/rng.hpp"
#include "cdspec/stability.hpp"
#include "cdspec/weyl.hpp"

namespace cdspec {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_exponent(const std::string& tok) {
  const std::string t = trim(tok);
  if (t == "inf" || t == "Inf" || t == "INF") return kInf;
  size_t pos = 0;
  const double v = std::stod(t, &pos);
  if (pos != t.size()) throw ConfigError("bad number: " + t);
  return v;
}

}  // namespace

Config Config::parse_string(const std::string& text) {
  Config c;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    c.kv_[key] = value;
  }
  return c;
}

Config Config::parse_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_string(ss.str());
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  auto it = kv_.find(key);
  return it == kv_.end() ? fallback : it->second;
}

std::string Config::require_string(const std::string& key) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) throw ConfigError("missing config key: " + key);
  return it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  try {
    return parse_exponent(it->second);
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + ": bad number '" + it->second + "'");
  }
}

long Config::get_long(const std::string& key, long fallback) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  try {
    return std::stol(it->second);
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + ": bad integer '" + it->second + "'");
  }
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  const std::string v = it->second;
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config key " + key + ": bad boolean '" + v + "'");
}

std::vector<double> Config::get_double_list(const std::string& key,
                                            const std::vector<double>& fallback) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  std::vector<double> out;
  std::stringstream ss(it->second);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    if (tok.empty()) continue;
    try {
      out.push_back(parse_exponent(tok));
    } catch (const std::exception&) {
      throw ConfigError("config key " + key + ": bad list entry '" + tok + "'");
    }
  }
  if (out.empty()) throw ConfigError("config key " + key + ": empty list");
  return out;
}

std::string format_double(double v) {
  if (is_inf(v)) return "inf";
  if (v == -kInf) return "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void run_cells(int threads, std::vector<std::function<void()>>& cells) {
  if (threads <= 1 || cells.size() <= 1) {
    for (auto& c : cells) c();
    return;
  }
  std::atomic<size_t> next{0};
  auto worker = [&] {
    while (true) {
      const size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      cells[i]();
    }
  };
  std::vector<std::thread> pool;
  const int n = std::min<int>(threads, static_cast<int>(cells.size()));
  pool.reserve(n);
  for (int t = 0; t < n; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
}

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

void write_csv(const ResultTable& table, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  for (size_t c = 0; c < table.columns.size(); ++c)
    os << (c ? "," : "") << table.columns[c];
  os << "\n";
  for (const auto& row : table.rows) {
    for (size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << row[c];
    os << "\n";
  }
}

struct Timings {
  std::vector<std::pair<std::string, double>> entries;
  std::chrono::steady_clock::time_point mark = std::chrono::steady_clock::now();
  void lap(const std::string& name) {
    auto now = std::chrono::steady_clock::now();
    entries.emplace_back(name, std::chrono::duration<double>(now - mark).count());
    mark = now;
  }
};

void write_manifest(const Config& config, const ResultTable& table, const Timings& timings,
                    const std::string& out_dir, const std::string& failure = "") {
  json m;
  m["tool"] = "cdspec";
  m["version"] = "0.1.0";
  json cfg;
  for (const auto& [k, v] : config.items()) cfg[k] = v;
  m["config"] = cfg;
  json cols;
  for (const auto& c : table.columns)
    cols[c] = table.column_docs.count(c) ? table.column_docs.at(c) : "";
  m["columns"] = cols;
  json t;
  for (const auto& [name, sec] : timings.entries) t[name] = sec;
  m["timings_seconds"] = t;
  if (!failure.empty()) m["failure"] = failure;
  std::ofstream os(out_dir + "/manifest.json");
  os << m.dump(2) << "\n";
}

// --------------------------------------------------------------------------
// instance and symbol families

CdMatrix build_instance(const Config& cfg) {
  const std::string family = cfg.get_string("instance.family", "exp_toeplitz");
  const double radius = cfg.get_double("instance.radius", 64.0);
  const double step = cfg.get_double("instance.step", 1.0);
  const double diag = cfg.get_double("instance.diag", 1.0);
  const double amp = cfg.get_double("instance.amplitude", 0.1);
  const double rate = cfg.get_double("instance.rate", 1.0);
  const double width = cfg.get_double("instance.width", 8.0);

  RectangularLattice lat{1, {step}, radius};
  auto pts = std::make_shared<const PointSet>(enumerate_lattice(lat));
  if (family == "identity") return CdMatrix::identity(pts);
  if (family == "exp_toeplitz")
    return CdMatrix::toeplitz(pts, [&](const std::vector<double>& d) {
      const double dist = std::abs(d[0]);
      return cplx(dist == 0.0 ? diag + amp : amp * std::exp(-rate * dist));
    });
  if (family == "power_toeplitz")
    return CdMatrix::toeplitz(pts, [&](const std::vector<double>& d) {
      const double dist = std::abs(d[0]);
      return cplx(dist == 0.0 ? diag + amp : amp * std::pow(1.0 + dist, -rate));
    });
  if (family == "band")
    return CdMatrix::toeplitz(pts, [&](const std::vector<double>& d) {
      return std::abs(d[0]) <= width ? cplx(amp) : cplx(0.0);
    });
  throw ConfigError("unknown instance.family: " + family);
}

SampledSymbol build_symbol(const Config& cfg, const SymbolGrid& sg) {
  const std::string family = cfg.get_string("symbol.family", "gaussian_bump");
  const double base = cfg.get_double("symbol.base", 1.0);
  const double amp = cfg.get_double("symbol.amplitude", 0.3);
  const double width = cfg.get_double("symbol.width", 1.0);
  if (family == "constant")
    return symbol_from_function(sg, [&](double, double) { return cplx(base); });
  if (family == "gaussian_bump")
    return symbol_from_function(sg, [&](double x, double xi) {
      return cplx(base + amp * std::exp(-kPi * (x * x + xi * xi) / width));
    });
  throw ConfigError("unknown symbol.family: " + family);
}

struct GaborConfig {
  double h, radius, alpha, beta, lattice_radius, xi_radius;
};

GaborConfig gabor_config(const Config& cfg) {
  GaborConfig g;
  g.h = cfg.get_double("gabor.h", 1.0 / 16);
  g.radius = cfg.get_double("gabor.radius", 8.0);
  g.alpha = cfg.get_double("gabor.alpha", 0.5);
  g.beta = cfg.get_double("gabor.beta", 0.5);
  g.lattice_radius = cfg.get_double("gabor.lattice_radius", g.radius);
  g.xi_radius = cfg.get_double("gabor.xi_radius", 0.0);
  return g;
}

std::shared_ptr<const GaborSystem> build_tight_system(const GaborConfig& g) {
  FuncGrid grid = FuncGrid::make(g.h, g.radius);
  GaborSystem base(gaussian_window(grid), g.alpha, g.beta, g.lattice_radius, true, g.xi_radius);
  return std::make_shared<const GaborSystem>(base.tight_window(), g.alpha, g.beta,
                                             g.lattice_radius, false, g.xi_radius);
}

void dump_symbol_csv(const SampledSymbol& s, const std::string& path) {
  std::ofstream os(path);
  os << "x,xi,re,im\n";
  for (int i = 0; i < s.grid.nx; ++i)
    for (int j = 0; j < s.grid.nxi; ++j)
      os << format_double(s.grid.x(i)) << "," << format_double(s.grid.xi(j)) << ","
         << format_double(s.at(i, j).real()) << "," << format_double(s.at(i, j).imag()) << "\n";
}

// --------------------------------------------------------------------------
// experiments

ExperimentOutcome run_stability(const Config& cfg, const std::string& out) {
  ExperimentOutcome outcome;
  Timings timings;
  CdMatrix a = build_instance(cfg);
  const double p = cfg.get_double("stability.p", 2.0);
  const auto qs = cfg.get_double_list("stability.q", {0.5, 1.0, kInf});
  const std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_long("seed", 1));
  TransferOptions opts;
  opts.seed = seed;
  opts.eps.floor = cfg.get_double("stability.eps_floor", 1.0 / 4096);
  opts.eps.threshold = cfg.get_double("stability.eps_threshold", 0.5);
  opts.lower_bound_starts = static_cast<int>(cfg.get_long("stability.search_starts", 200));
  opts.lower_bound_iters = static_cast<int>(cfg.get_long("stability.search_iters", 200));

  double c0 = cfg.get_double("stability.c0", 0.0);
  if (c0 <= 0) {
    if (p == 2.0) {
      c0 = smallest_singular_value(a.entries()) * 0.999;
    } else {
      Rng rng(seed);
      c0 = empirical_lower_bound(a, p, opts.lower_bound_starts, opts.lower_bound_iters, rng) * 0.9;
    }
  }
  timings.lap("setup");

  ResultTable table;
  table.columns = {"q", "branch", "eps", "schur_budget", "constant", "measured_lower_bound"};
  table.column_docs = {
      {"q", "target exponent"},
      {"branch", "proof branch used by the transfer"},
      {"eps", "accepted partition scale"},
      {"schur_budget", "achieved commutator budget (threshold 1/2)"},
      {"constant", "certified lower-bound constant C_q"},
      {"measured_lower_bound", "multi-start random-search lower bound at q"}};

  std::vector<StabilityCertificate> certs(qs.size());
  std::vector<double> measured(qs.size());
  std::vector<std::function<void()>> cells;
  for (size_t i = 0; i < qs.size(); ++i)
    cells.push_back([&, i] {
      certs[i] = stability_transfer(a, p, c0, qs[i], opts);
      Rng rng(Rng(seed).fork(1000 + i).next_u64());
      measured[i] =
          empirical_lower_bound(a, qs[i], opts.lower_bound_starts, opts.lower_bound_iters, rng);
    });
  try {
    run_cells(static_cast<int>(cfg.get_long("threads", 1)), cells);
  } catch (const EpsSearchError& e) {
    outcome.exit_code = 3;
    outcome.failure = e.what();
    json f;
    f["error"] = "epsilon search failed";
    f["achieved_budget"] = e.achieved_budget;
    f["floor"] = e.floor;
    std::ofstream os(out + "/certificate.json");
    os << f.dump(2) << "\n";
    write_csv(table, out + "/results.csv");
    write_manifest(cfg, table, timings, out, e.what());
    outcome.artifacts = {"results.csv", "certificate.json", "manifest.json"};
    return outcome;
  }
  timings.lap("transfer");

  json jcerts = json::array();
  for (size_t i = 0; i < qs.size(); ++i) {
    const auto& c = certs[i];
    table.rows.push_back({format_double(c.q_target), c.branch, format_double(c.eps_chosen),
                          format_double(c.schur_budget), format_double(c.constant),
                          format_double(measured[i])});
    json jc;
    jc["p_source"] = c.p_source;
    jc["q_target"] = is_inf(c.q_target) ? json("inf") : json(c.q_target);
    jc["eps"] = c.eps_chosen;
    jc["schur_budget"] = c.schur_budget;
    jc["constant"] = c.constant;
    jc["branch"] = c.branch;
    jc["measured_lower_bound"] = measured[i];
    json diag;
    for (const auto& [k, v] : c.diagnostics) diag[k] = v;
    jc["diagnostics"] = diag;
    jcerts.push_back(jc);
  }
  {
    json root;
    root["c0"] = c0;
    root["p"] = p;
    root["certificates"] = jcerts;
    std::ofstream os(out + "/certificate.json");
    os << root.dump(2) << "\n";
  }
  write_csv(table, out + "/results.csv");
  timings.lap("write");
  write_manifest(cfg, table, timings, out);
  outcome.artifacts = {"results.csv", "certificate.json", "manifest.json"};
  return outcome;
}

ExperimentOutcome run_invert_matrix(const Config& cfg, const std::string& out) {
  ExperimentOutcome outcome;
  Timings timings;
  const double p = cfg.get_double("invert.p", 2.0);
  const double p0 = cfg.get_double("invert.p0", 0.5);
  const double margin = cfg.get_double("invert.margin", 0.5);
  const bool sweep = cfg.get_bool("invert.double_radius", true);

  ResultTable table;
  table.columns = {"radius", "eps",  "budget",    "series_terms", "tail_bound",
                   "amalgam", "cond", "max_ratio", "checked",      "pass"};
  table.column_docs = {{"radius", "section truncation radius"},
                       {"eps", "accepted partition scale"},
                       {"budget", "S-1 norm of the normalized commutator matrix"},
                       {"series_terms", "geometric series terms kept"},
                       {"tail_bound", "geometric tail bound after truncation"},
                       {"amalgam", "amalgam quasi-norm of the powered envelope"},
                       {"cond", "condition number of the section"},
                       {"max_ratio", "max |A^{-1}| / envelope on the interior block"},
                       {"checked", "interior pairs checked"},
                       {"pass", "1 when no violations"}};

  EpsOptions eopts;
  eopts.floor = cfg.get_double("invert.eps_floor", 1.0 / 4096);

  std::vector<double> radii{cfg.get_double("instance.radius", 64.0)};
  if (sweep) radii.push_back(radii[0] * 2);
  try {
    for (double r : radii) {
      Config c2 = cfg;
      c2.set("instance.radius", format_double(r));
      CdMatrix a = build_instance(c2);
      auto inv = neumann_inverse_envelope(a, p, p0, eopts);
      Envelope pw = inv.h_tilde.pow(1.0 / p0);
      const double wn = amalgam_quasinorm(pw, p0);
      auto rep = verify_inverse_envelope(a, inv.h_tilde, p0, margin);
      table.rows.push_back({format_double(r), format_double(inv.eps), format_double(inv.budget),
                            std::to_string(inv.series_terms), format_double(inv.tail_bound),
                            format_double(wn), format_double(rep.condition_number),
                            format_double(rep.max_violation_ratio),
                            std::to_string(rep.checked_pairs), rep.pass ? "1" : "0"});
      if (r == radii[0]) save_envelope_file(inv.h_tilde, out + "/envelope.csv");
      timings.lap("radius_" + format_double(r));
    }
  } catch (const EpsSearchError& e) {
    outcome.exit_code = 3;
    outcome.failure = e.what();
    json f;
    f["error"] = "epsilon search failed";
    f["achieved_budget"] = e.achieved_budget;
    std::ofstream os(out + "/certificate.json");
    os << f.dump(2) << "\n";
    write_csv(table, out + "/results.csv");
    write_manifest(cfg, table, timings, out, e.what());
    outcome.artifacts = {"results.csv", "certificate.json", "manifest.json"};
    return outcome;
  }
  write_csv(table, out + "/results.csv");
  {
    json root;
    root["p"] = p;
    root["p0"] = p0;
    root["margin"] = margin;
    std::ofstream os(out + "/certificate.json");
    os << root.dump(2) << "\n";
  }
  write_manifest(cfg, table, timings, out);
  outcome.artifacts = {"results.csv", "certificate.json", "envelope.csv", "manifest.json"};
  return outcome;
}

ExperimentOutcome run_gabor(const Config& cfg, const std::string& out) {
  ExperimentOutcome outcome;
  Timings timings;
  const GaborConfig g = gabor_config(cfg);
  FuncGrid grid = FuncGrid::make(g.h, g.radius);
  auto window = gaussian_window(grid);
  GaborSystem sys(window, g.alpha, g.beta, g.lattice_radius, true, g.xi_radius);
  const int hermites = static_cast<int>(cfg.get_long("gabor.hermite_count", 5));
  timings.lap("build");

  ResultTable table;
  table.columns = {"quantity", "value"};
  table.column_docs = {{"quantity", "measured quantity"}, {"value", "numeric value"}};
  auto push = [&](const std::string& k, double v) {
    table.rows.push_back({k, format_double(v)});
  };

  auto fb = sys.frame_bounds();
  push("frame_lower", fb.lower);
  push("frame_upper", fb.upper);
  push("frame_ratio", fb.ratio());
  timings.lap("bounds");

  double dual_res = 0.0;
  auto gamma = sys.dual_window(1e-10, &dual_res);
  push("dual_residual", dual_res);
  GaborSystem dual_sys(gamma, g.alpha, g.beta, g.lattice_radius, false, g.xi_radius);
  for (int n = 0; n < hermites; ++n) {
    auto f = hermite_function(grid, n);
    auto rec = sys.synthesis(Seq(sys.lattice(), dual_sys.analysis(f).values));
    double num = 0;
    for (int i = 0; i < grid.n; ++i) num += std::norm(rec.v[i] - f.v[i]);
    push("reconstruction_hermite_" + std::to_string(n),
         std::sqrt(num * grid.step) / l2_norm(f));
  }
  for (double pq : {0.5, 1.0})
    push("dual_modulation_quasinorm_p" + format_double(pq),
         modulation_quasinorm(gamma, window, pq, pq));
  timings.lap("dual");

  auto tw = sys.tight_window();
  GaborSystem tight(tw, g.alpha, g.beta, g.lattice_radius, false, g.xi_radius);
  auto ft = tight.frame_bounds();
  push("tight_ratio_minus_one", ft.ratio() - 1.0);
  double worst_parseval = 0.0;
  for (int n = 0; n < hermites; ++n) {
    auto f = hermite_function(grid, n);
    auto c = tight.analysis(f);
    double s = 0;
    for (const auto& z : c.values) s += std::norm(z);
    worst_parseval =
        std::max(worst_parseval, std::abs(s - std::pow(l2_norm(f), 2)) / std::pow(l2_norm(f), 2));
  }
  push("tight_parseval_residual", worst_parseval);
  timings.lap("tight");

  write_csv(table, out + "/results.csv");
  write_manifest(cfg, table, timings, out);
  outcome.artifacts = {"results.csv", "manifest.json"};
  return outcome;
}

ExperimentOutcome run_almostdiag(const Config& cfg, const std::string& out) {
  ExperimentOutcome outcome;
  Timings timings;
  const GaborConfig g = gabor_config(cfg);
  const auto p0s = cfg.get_double_list("almostdiag.p0", {0.5});
  const bool refine = cfg.get_bool("almostdiag.refine", true);

  ResultTable table;
  table.columns = {"h", "p0", "quasinorm", "fit_rate", "fit_log_amp"};
  table.column_docs = {{"h", "sampling step"},
                       {"p0", "envelope class exponent"},
                       {"quasinorm", "l^{p0} quasi-norm of the difference profile"},
                       {"fit_rate", "fitted exponential decay rate"},
                       {"fit_log_amp", "fitted log-amplitude"}};

  std::vector<double> steps{g.h};
  if (refine) steps.push_back(g.h / 2);
  bool first = true;
  for (double h : steps) {
    GaborConfig gh = g;
    gh.h = h;
    auto tight = build_tight_system(gh);
    SymbolGrid sg = SymbolGrid::for_func_grid(tight->window().grid);
    auto a = build_symbol(cfg, sg);
    auto bundle = gabor_matrix(a, tight);
    for (double p0 : p0s) {
      auto ad = almost_diag_envelope(bundle.m, p0);
      table.rows.push_back({format_double(h), format_double(p0), format_double(ad.quasinorm),
                            format_double(ad.fit_rate), format_double(ad.fit_log_amp)});
      if (first) save_envelope_file(ad.env, out + "/envelope.csv");
      first = false;
    }
    timings.lap("h_" + format_double(h));
  }
  write_csv(table, out + "/results.csv");
  write_manifest(cfg, table, timings, out);
  outcome.artifacts = {"results.csv", "envelope.csv", "manifest.json"};
  return outcome;
}

ExperimentOutcome run_invert_weyl(const Config& cfg, const std::string& out) {
  ExperimentOutcome outcome;
  Timings timings;
  const GaborConfig g = gabor_config(cfg);
  const double p0 = cfg.get_double("weylinv.p0", 0.5);
  const double margin = cfg.get_double("weylinv.margin", 4.0);
  const double coef_threshold = cfg.get_double("weylinv.coef_threshold", 1e-12);
  const bool sweep = cfg.get_bool("weylinv.double_radius", true);
  const int hermites = static_cast<int>(cfg.get_long("weylinv.hermite_count", 3));

  ResultTable table;
  table.columns = {"radius", "h", "cond", "roundtrip", "mbma_residual", "quasinorm"};
  table.column_docs = {{"radius", "grid and lattice radius"},
                       {"h", "sampling step"},
                       {"cond", "condition estimate of the matrix section"},
                       {"roundtrip", "worst relative error of a^w b^w f = f"},
                       {"mbma_residual", "interior Frobenius residual of M(b)M(a) - P"},
                       {"quasinorm", "interior l^{p0} quasi-norm of the inverse envelope"}};

  std::vector<std::pair<double, double>> levels{{g.radius, g.h}};
  if (sweep) levels.push_back({g.radius * 2, cfg.get_double("weylinv.refined_h", g.h)});
  bool first = true;
  for (auto [radius, h] : levels) {
    GaborConfig gl = g;
    gl.radius = radius;
    gl.lattice_radius = radius;
    gl.h = h;
    auto tight = build_tight_system(gl);
    FuncGrid grid = tight->window().grid;
    SymbolGrid sg = SymbolGrid::for_func_grid(grid);
    auto a = build_symbol(cfg, sg);
    auto inv = invert_weyl(a, tight, coef_threshold, first);
    double roundtrip = 0.0, residual = 0.0;
    if (first) {
      Matrix ka = weyl_kernel(a, grid);
      Matrix kb = weyl_kernel(inv.b, grid);
      for (int n = 0; n < hermites; ++n) {
        auto f = hermite_function(grid, n);
        auto rt = apply_kernel(ka, apply_kernel(kb, f));
        double num = 0;
        for (int i = 0; i < grid.n; ++i) num += std::norm(rt.v[i] - f.v[i]);
        roundtrip = std::max(roundtrip, std::sqrt(num * grid.step) / l2_norm(f));
      }
      CdMatrix prod(inv.m_b.row_set_ptr(), inv.m_b.col_set_ptr(),
                    matmul(inv.m_b.entries(), inv.bundle.m.entries()) - inv.bundle.p.entries());
      auto prod_in = interior_block(prod, margin);
      auto p_in = interior_block(inv.bundle.p, margin);
      residual = frobenius_norm(prod_in.entries()) / frobenius_norm(p_in.entries());
      dump_symbol_csv(inv.b, out + "/inverse_symbol.csv");
      save_cdmatrix_file(inv.m_b, out + "/m_b.csv");
      save_cdmatrix_file(inv.bundle.p, out + "/p.csv");
    }
    auto ad = almost_diag_envelope(interior_block(inv.m_b, margin), p0);
    table.rows.push_back({format_double(radius), format_double(h), format_double(inv.condition),
                          format_double(roundtrip), format_double(residual),
                          format_double(ad.quasinorm)});
    timings.lap("radius_" + format_double(radius));
    first = false;
  }
  write_csv(table, out + "/results.csv");
  write_manifest(cfg, table, timings, out);
  outcome.artifacts = {"results.csv", "inverse_symbol.csv", "m_b.csv", "p.csv", "manifest.json"};
  return outcome;
}

ExperimentOutcome run_framesymbol(const Config& cfg, const std::string& out) {
  ExperimentOutcome outcome;
  Timings timings;
  const GaborConfig g = gabor_config(cfg);
  FuncGrid grid = FuncGrid::make(g.h, g.radius);
  GaborSystem base(gaussian_window(grid), g.alpha, g.beta, g.lattice_radius, true, g.xi_radius);
  auto tw = base.tight_window();
  GaborSystem tight(tw, g.alpha, g.beta, g.lattice_radius, false, g.xi_radius);
  timings.lap("build");

  auto sym = frame_operator_symbol(tw, tw, g.alpha, g.beta, g.lattice_radius);
  dump_symbol_csv(sym, out + "/symbol.csv");
  timings.lap("symbol");

  const double inner_x = tight.coverage_x() / 2;
  const double inner_xi = tight.coverage_xi() / 2;
  double dev = 0.0;
  for (int i = 0; i < sym.grid.nx; ++i)
    for (int j = 0; j < sym.grid.nxi; ++j) {
      if (std::abs(sym.grid.x(i)) > inner_x || std::abs(sym.grid.xi(j)) > inner_xi) continue;
      dev = std::max(dev, std::abs(sym.at(i, j) - cplx(1.0)));
    }

  Matrix op = weyl_kernel(kn_to_weyl(sym), grid);
  double worst_op = 0.0;
  const int hermites = static_cast<int>(cfg.get_long("framesymbol.hermite_count", 3));
  for (int n = 0; n < hermites; ++n) {
    auto f = hermite_function(grid, n);
    auto lhs = apply_kernel(op, f);
    auto rhs = tight.frame_operator(f);
    double num = 0, den = 0;
    for (int i = 0; i < grid.n; ++i) {
      num += std::norm(lhs.v[i] - rhs.v[i]);
      den += std::norm(rhs.v[i]);
    }
    worst_op = std::max(worst_op, std::sqrt(num / den));
  }
  timings.lap("compare");

  ResultTable table;
  table.columns = {"quantity", "value"};
  table.column_docs = {{"quantity", "measured quantity"}, {"value", "numeric value"}};
  table.rows.push_back({"symbol_constancy_dev", format_double(dev)});
  table.rows.push_back({"operator_match", format_double(worst_op)});
  write_csv(table, out + "/results.csv");
  write_manifest(cfg, table, timings, out);
  outcome.artifacts = {"results.csv", "symbol.csv", "manifest.json"};
  return outcome;
}

ExperimentOutcome run_verify(const Config& cfg, const std::string& out) {
  ExperimentOutcome outcome;
  Timings timings;
  const int only = static_cast<int>(cfg.get_long("verify.criterion", 0));
  auto results = run_acceptance(std::cout, only);
  timings.lap("acceptance");
  ResultTable table;
  table.columns = {"criterion", "name", "pass", "value", "threshold", "seconds"};
  table.column_docs = {{"criterion", "acceptance criterion number"},
                       {"name", "short name"},
                       {"pass", "1 when satisfied"},
                       {"value", "measured value"},
                       {"threshold", "required bound"},
                       {"seconds", "wall time"}};
  bool all = true;
  for (const auto& r : results) {
    all = all && r.pass;
    table.rows.push_back({std::to_string(r.id), r.name, r.pass ? "1" : "0",
                          format_double(r.value), format_double(r.threshold),
                          format_double(r.seconds)});
  }
  write_csv(table, out + "/results.csv");
  write_manifest(cfg, table, timings, out);
  outcome.artifacts = {"results.csv", "manifest.json"};
  if (!all) outcome.exit_code = 1;
  return outcome;
}

}  // namespace

ExperimentOutcome run_experiment(const Config& config, const std::string& out_dir) {
  fs::create_directories(out_dir);
  const std::string kind = config.require_string("experiment");
  if (kind == "stability") return run_stability(config, out_dir);
  if (kind == "invert-matrix") return run_invert_matrix(config, out_dir);
  if (kind == "gabor") return run_gabor(config, out_dir);
  if (kind == "almostdiag") return run_almostdiag(config, out_dir);
  if (kind == "invert-weyl") return run_invert_weyl(config, out_dir);
  if (kind == "framesymbol") return run_framesymbol(config, out_dir);
  if (kind == "verify") return run_verify(config, out_dir);
  throw ConfigError("unknown experiment: " + kind);
}

}  // namespace cdspec
