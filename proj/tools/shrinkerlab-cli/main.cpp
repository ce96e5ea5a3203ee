// Command-line front end.  Talks to the core exclusively through the C API;
// parses flat key=value configs, writes reports atomically, and maps API
// status codes onto the exit contract (0 ok, 1 verification failure, 2 usage,
// 3 numerical failure).
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "shrinkerlab/shrinkerlab.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerification = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

int exit_code_of(int status) {
  switch (status) {
    case SHL_OK: return kExitOk;
    case SHL_ERR_INVALID_ARGUMENT: return kExitUsage;
    case SHL_ERR_IO: return kExitUsage;
    case SHL_ERR_VERIFICATION: return kExitVerification;
    default: return kExitNumeric;
  }
}

[[noreturn]] void die(int code, const std::string& msg) {
  std::cerr << "shrinkerlab-cli: " << msg << "\n";
  std::exit(code);
}

struct Config {
  std::map<std::string, std::string> kv;

  bool has(const std::string& k) const { return kv.count(k) > 0; }
  std::string str(const std::string& k, const std::string& dflt = "") const {
    auto it = kv.find(k);
    return it == kv.end() ? dflt : it->second;
  }
  double num(const std::string& k, double dflt) const {
    auto it = kv.find(k);
    return it == kv.end() ? dflt : std::stod(it->second);
  }
  int integer(const std::string& k, int dflt) const {
    auto it = kv.find(k);
    return it == kv.end() ? dflt : std::stoi(it->second);
  }
  bool flag(const std::string& k, bool dflt) const {
    auto it = kv.find(k);
    if (it == kv.end()) return dflt;
    return it->second == "1" || it->second == "true" || it->second == "yes";
  }
};

Config load_config(const std::string& path) {
  Config cfg;
  if (path.empty()) return cfg;
  std::ifstream in(path);
  if (!in) die(kExitUsage, "cannot open config file: " + path);
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!key.empty()) cfg.kv[key] = value;
  }
  return cfg;
}

void write_atomic(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    out << content;
  }
  fs::rename(tmp, path);
}

std::string take_string(char* s) {
  std::string out = s ? s : "";
  shl_string_free(s);
  return out;
}

struct SurfaceHandle {
  shl_surface* ptr = nullptr;
  ~SurfaceHandle() { shl_surface_free(ptr); }
};

// Builds the surface named by the config (surface = circle | ellipse | sphere |
// cylinder | dumbbell | line | torus | round_product | file).
void build_surface(const Config& cfg, const fs::path& out_dir, SurfaceHandle& h) {
  const std::string kind = cfg.str("surface", "circle");
  const int nodes = cfg.integer("nodes", 512);
  int rc = SHL_OK;
  if (kind == "circle") {
    rc = shl_surface_circle(cfg.num("radius", std::sqrt(2.0)), nodes, &h.ptr);
  } else if (kind == "ellipse") {
    rc = shl_surface_ellipse(cfg.num("a", 1.0), cfg.num("b", 2.0), nodes, &h.ptr);
  } else if (kind == "sphere") {
    rc = shl_surface_sphere_profile(cfg.num("radius", 2.0), nodes, &h.ptr);
  } else if (kind == "cylinder") {
    rc = shl_surface_cylinder_profile(cfg.num("radius", std::sqrt(2.0)),
                                      cfg.num("half_length", 12.0), nodes, &h.ptr);
  } else if (kind == "dumbbell") {
    rc = shl_surface_dumbbell_profile(cfg.num("bell_radius", 1.5),
                                      cfg.num("neck_radius", 0.2),
                                      cfg.num("neck_half_length", 1.2), nodes, &h.ptr);
  } else if (kind == "line") {
    rc = shl_surface_line_segment(cfg.num("half_length", 12.0), nodes, &h.ptr);
  } else if (kind == "round_product") {
    rc = shl_surface_round_product(cfg.integer("ambient_dim", 3),
                                   cfg.integer("sphere_dim", 1),
                                   cfg.num("radius", std::sqrt(2.0)), &h.ptr);
  } else if (kind == "torus_seed") {
    // solve the rotational torus shrinker and perturb it by a small constant
    // normal graph; the seed for the replacement demonstration
    json jc;
    jc["profile_nodes"] = nodes;
    char* solved = nullptr;
    rc = shl_solve_angenent_torus(jc.dump().c_str(), &solved);
    if (rc != SHL_OK) die(exit_code_of(rc), shl_last_error());
    const json rep = json::parse(take_string(solved));
    SurfaceHandle torus;
    rc = shl_surface_from_json(rep.at("profile").dump().c_str(), &torus.ptr);
    if (rc != SHL_OK) die(exit_code_of(rc), shl_last_error());
    const double amp = cfg.num("seed_amplitude", 0.005);
    std::vector<double> f(nodes, 1.0);
    rc = shl_surface_normal_graph(torus.ptr, f.data(), nodes, amp, 1, &h.ptr);
  } else if (kind == "file" || kind == "torus") {
    std::string path = cfg.str("surface_file");
    if (kind == "torus" && path.empty()) path = cfg.str("golden_torus");
    if (path.empty()) {
      if (kind == "torus")
        die(kExitUsage,
            "no torus profile configured; run `shrinkerlab-cli solve` first and point "
            "golden_torus at its output");
      die(kExitUsage, "surface=file needs surface_file=PATH");
    }
    std::ifstream in(path);
    if (!in)
      die(kExitUsage, "cannot open surface file " + path +
                          (kind == "torus" ? " (run `shrinkerlab-cli solve` first)" : ""));
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    json parsed = json::parse(text, nullptr, false);
    if (parsed.is_discarded()) die(kExitUsage, "surface file is not valid JSON: " + path);
    if (parsed.contains("profile")) parsed = parsed["profile"];  // shooting result files
    rc = shl_surface_from_json(parsed.dump().c_str(), &h.ptr);
  } else {
    die(kExitUsage, "unknown surface kind: " + kind);
  }
  if (rc != SHL_OK) die(exit_code_of(rc), shl_last_error());
  (void)out_dir;
}

std::string probes_to_json(const Config& cfg) {
  // probes = x,y,z,anchor;x,y,z,anchor;...
  json arr = json::array();
  std::stringstream ss(cfg.str("probes"));
  std::string item;
  while (std::getline(ss, item, ';')) {
    if (item.empty()) continue;
    std::stringstream is(item);
    std::string num;
    json p = json::array();
    while (std::getline(is, num, ',')) p.push_back(std::stod(num));
    if (p.size() != 4) die(kExitUsage, "each probe needs x,y,z,anchor");
    arr.push_back(p);
  }
  return arr.dump();
}

std::string flow_config_json(const Config& cfg) {
  json j;
  j["dt_max"] = cfg.num("dt_max", 2e-4);
  j["dt_cap"] = cfg.num("dt_cap", 0.02);
  j["time_budget"] = cfg.num("time_budget", 10.0);
  j["area_extinction_frac"] = cfg.num("area_extinction_frac", 1e-4);
  j["max_A_cap_factor"] = cfg.num("max_A_cap_factor", 1e3);
  j["sample_stride"] = cfg.integer("sample_stride", 50);
  j["monitor_entropy"] = cfg.flag("monitor_entropy", false);
  j["rescaled"] = cfg.flag("rescaled", false);
  j["store_surfaces"] = cfg.flag("store_surfaces", true);
  if (cfg.has("probes")) j["probes"] = json::parse(probes_to_json(cfg));
  j["entropy_drop"] = cfg.num("entropy_drop", 1e-3);
  j["proximity_tol"] = cfg.num("proximity_tol", 0.02);
  j["max_jumps"] = cfg.integer("max_jumps", 3);
  return j.dump();
}

void write_trace_files(const json& trace, const fs::path& out_dir, const std::string& fmt) {
  write_atomic(out_dir / "trace_report.json", trace.dump(2) + "\n");
  // JSON-lines stream: one sample per line.
  std::string lines;
  for (const auto& s : trace.at("samples")) lines += s.dump() + "\n";
  write_atomic(out_dir / "trace.jsonl", lines);
  if (fmt == "csv") {
    std::ostringstream csv;
    csv << "t,area,max_abs_A,entropy";
    size_t nprobes = 0;
    for (const auto& s : trace.at("samples"))
      if (s.contains("f_probes")) nprobes = std::max(nprobes, s.at("f_probes").size());
    for (size_t i = 0; i < nprobes; ++i) csv << ",f_probe_" << i;
    csv << "\n";
    for (const auto& s : trace.at("samples")) {
      csv << s.at("t").get<double>() << "," << s.at("area").get<double>() << ","
          << s.at("max_abs_A").get<double>() << ",";
      if (s.contains("entropy")) csv << s.at("entropy").get<double>();
      if (s.contains("f_probes"))
        for (const auto& v : s.at("f_probes")) csv << "," << v.get<double>();
      csv << "\n";
    }
    write_atomic(out_dir / "monitors.csv", csv.str());
  }
}

int cmd_verify(const Config& cfg, const fs::path& out_dir, const std::string&) {
  json jc;
  jc["tolerance_scale"] = cfg.num("tolerance_scale", 1.0);
  jc["resolution"] = cfg.integer("resolution", 512);
  std::string golden;
  const std::string golden_path = cfg.str("golden_torus", "data/golden/angenent_torus.json");
  if (fs::exists(golden_path)) {
    std::ifstream in(golden_path);
    std::stringstream ss;
    ss << in.rdbuf();
    json parsed = json::parse(ss.str(), nullptr, false);
    if (parsed.is_discarded()) die(kExitUsage, "golden torus file is not valid JSON");
    if (parsed.contains("profile")) parsed = parsed["profile"];
    golden = parsed.dump();
  } else if (cfg.has("golden_torus")) {
    die(kExitUsage, "golden torus file '" + golden_path +
                        "' not found; run `shrinkerlab-cli solve` first");
  }
  char* rep = nullptr;
  const int rc = shl_verify_library(jc.dump().c_str(), golden.empty() ? nullptr : golden.c_str(),
                                    &rep);
  const std::string report = take_string(rep);
  if (!report.empty()) write_atomic(out_dir / "verify_report.json", report + "\n");
  if (rc == SHL_OK) {
    std::cout << "verify: all checks passed\n";
    return kExitOk;
  }
  if (rc == SHL_ERR_VERIFICATION) {
    const json j = json::parse(report);
    for (const auto& c : j.at("checks"))
      if (!c.at("pass").get<bool>())
        std::cout << "FAIL " << c.at("name").get<std::string>()
                  << " defect=" << c.at("defect").get<double>()
                  << " tol=" << c.at("tolerance").get<double>() << "\n";
    return kExitVerification;
  }
  die(exit_code_of(rc), shl_last_error());
}

int cmd_flow(const Config& cfg, const fs::path& out_dir, const std::string& fmt) {
  SurfaceHandle h;
  build_surface(cfg, out_dir, h);
  char* out = nullptr;
  const int rc = shl_flow_run(h.ptr, flow_config_json(cfg).c_str(), &out);
  if (rc != SHL_OK) die(exit_code_of(rc), shl_last_error());
  write_trace_files(json::parse(take_string(out)), out_dir, fmt);
  std::cout << "flow: trace written to " << (out_dir / "trace_report.json").string() << "\n";
  return kExitOk;
}

int cmd_generic(const Config& cfg, const fs::path& out_dir, const std::string& fmt) {
  SurfaceHandle h;
  build_surface(cfg, out_dir, h);
  char* out = nullptr;
  const int rc = shl_generic_flow(h.ptr, flow_config_json(cfg).c_str(), &out);
  if (rc != SHL_OK) die(exit_code_of(rc), shl_last_error());
  const json trace = json::parse(take_string(out));
  write_trace_files(trace, out_dir, fmt);
  std::cout << "generic: verdict = " << trace.value("verdict", "") << ", jumps = "
            << trace.at("jumps").size() << "\n";
  return kExitOk;
}

int cmd_spectrum(const Config& cfg, const fs::path& out_dir, const std::string& fmt) {
  SurfaceHandle h;
  build_surface(cfg, out_dir, h);
  const int count = cfg.integer("count", 8);
  char* out = nullptr;
  int rc;
  if (cfg.flag("metric_laplacian", false))
    rc = shl_metric_laplacian_spectrum(h.ptr, count, &out);
  else
    rc = shl_spectrum(h.ptr, count, cfg.integer("azimuthal_mode", 0),
                      cfg.flag("eigenfunctions", false) ? 1 : 0, &out);
  if (rc != SHL_OK) die(exit_code_of(rc), shl_last_error());
  const json rep = json::parse(take_string(out));
  write_atomic(out_dir / "spectrum_report.json", rep.dump(2) + "\n");
  if (fmt == "csv") {
    std::ostringstream csv;
    csv << "k,mu\n";
    int k = 1;
    for (const auto& mu : rep.at("eigenvalues")) csv << k++ << "," << mu.get<double>() << "\n";
    write_atomic(out_dir / "spectrum.csv", csv.str());
  }
  if (cfg.has("dirichlet_sweep")) {
    std::ostringstream csv;
    csv << "R,mu1\n";
    std::stringstream ss(cfg.str("dirichlet_sweep"));
    std::string item;
    json sweep = json::array();
    while (std::getline(ss, item, ',')) {
      double mu1 = 0.0;
      const int rc2 = shl_dirichlet_mu1(h.ptr, std::stod(item), &mu1);
      if (rc2 != SHL_OK) die(exit_code_of(rc2), shl_last_error());
      csv << item << "," << mu1 << "\n";
      sweep.push_back(json{{"R", std::stod(item)}, {"mu1", mu1}});
    }
    write_atomic(out_dir / "dirichlet_sweep.csv", csv.str());
    write_atomic(out_dir / "dirichlet_sweep.json", sweep.dump(2) + "\n");
  }
  std::cout << "spectrum: report written\n";
  return kExitOk;
}

int cmd_entropy(const Config& cfg, const fs::path& out_dir, const std::string& fmt) {
  SurfaceHandle h;
  build_surface(cfg, out_dir, h);
  char* out = nullptr;
  const int rc = shl_entropy(h.ptr, &out);
  if (rc != SHL_OK) die(exit_code_of(rc), shl_last_error());
  const json rep = json::parse(take_string(out));
  write_atomic(out_dir / "entropy_report.json", rep.dump(2) + "\n");
  if (fmt == "csv") {
    std::ostringstream csv;
    csv << "lambda,x0_1,x0_2,x0_3,t0\n";
    csv << rep.at("lambda").get<double>();
    for (const auto& c : rep.at("x0")) csv << "," << c.get<double>();
    csv << "," << rep.at("t0").get<double>() << "\n";
    write_atomic(out_dir / "entropy.csv", csv.str());
  }
  std::cout << "entropy: lambda = " << rep.at("lambda").get<double>() << "\n";
  return kExitOk;
}

int cmd_solve(const Config& cfg, const fs::path& out_dir, const std::string&) {
  json jc;
  jc["window_lo"] = cfg.num("window_lo", 0.2);
  jc["window_hi"] = cfg.num("window_hi", 1.3);
  jc["bisection_tol"] = cfg.num("bisection_tol", 1e-12);
  jc["ode_step"] = cfg.num("ode_step", 1e-3);
  jc["profile_nodes"] = cfg.integer("profile_nodes", 4096);
  jc["shoot_from_outer"] = cfg.flag("shoot_from_outer", false);
  char* out = nullptr;
  const int rc = shl_solve_angenent_torus(jc.dump().c_str(), &out);
  if (rc != SHL_OK) die(exit_code_of(rc), shl_last_error());
  const json rep = json::parse(take_string(out));
  write_atomic(out_dir / "angenent_torus.json", rep.dump(2) + "\n");
  const std::string golden = cfg.str("golden_out");
  if (!golden.empty()) write_atomic(golden, rep.dump(2) + "\n");
  std::cout << "solve: torus profile written (min_r=" << rep.at("min_r").get<double>()
            << ", max_r=" << rep.at("max_r").get<double>()
            << ", residual_max=" << rep.at("residual_max").get<double>() << ")\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"shrinkerlab: self-shrinker laboratory for mean curvature flow"};
  app.require_subcommand(1);
  std::string config_path, out_dir = "out", format = "json";
  app.add_option("--config", config_path, "flat key=value config file")->expected(1);
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--format", format, "json|csv")->check(CLI::IsMember({"json", "csv"}));

  auto* verify = app.add_subcommand("verify", "run the invariant battery over the library");
  auto* flow = app.add_subcommand("flow", "run a mean curvature flow");
  auto* generic = app.add_subcommand("generic", "run the piecewise flow with replacements");
  auto* spectrum = app.add_subcommand("spectrum", "stability-operator spectra");
  auto* entropy = app.add_subcommand("entropy", "entropy of a surface");
  auto* solve = app.add_subcommand("solve", "shooting solve for the rotational torus shrinker");
  for (auto* sc : {verify, flow, generic, spectrum, entropy, solve}) sc->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  const Config cfg = load_config(config_path);
  const fs::path out(out_dir);
  try {
    if (verify->parsed()) return cmd_verify(cfg, out, format);
    if (flow->parsed()) return cmd_flow(cfg, out, format);
    if (generic->parsed()) return cmd_generic(cfg, out, format);
    if (spectrum->parsed()) return cmd_spectrum(cfg, out, format);
    if (entropy->parsed()) return cmd_entropy(cfg, out, format);
    if (solve->parsed()) return cmd_solve(cfg, out, format);
  } catch (const std::exception& e) {
    die(kExitNumeric, e.what());
  }
  return kExitUsage;
}
