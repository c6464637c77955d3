#include "epifilm/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "epifilm/errors.hpp"
#include "epifilm/format.hpp"
#include "epifilm/validation.hpp"

namespace epifilm {

const std::vector<std::string>& experiment_modes() {
  static const std::vector<std::string> modes{"solve",      "minimize",    "nucleate", "sink-study",
                                              "gamma-sweep", "corner",     "validate"};
  return modes;
}

namespace {

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + num(v[i]);
  return s;
}

std::string join_groups(const std::vector<std::vector<double>>& g) {
  std::string s;
  for (std::size_t i = 0; i < g.size(); ++i) s += (i ? "; " : "") + join(g[i]);
  return s;
}

nlohmann::json read_json(const std::filesystem::path& path, const std::string& key) {
  std::ifstream in(path);
  if (!in) throw ConfigError(key + ": cannot read " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(key + ": " + path.string() + ": " + e.what());
  }
}

PenaltyKind penalty_from(const std::string& s, const std::string& where) {
  if (s == "none") return PenaltyKind::none;
  if (s == "two_sided") return PenaltyKind::two_sided;
  if (s == "one_sided") return PenaltyKind::one_sided;
  throw ConfigError(where + "objective.penalty: expected none, two_sided or one_sided");
}

std::string penalty_name(PenaltyKind k) {
  switch (k) {
    case PenaltyKind::none:
      return "none";
    case PenaltyKind::two_sided:
      return "two_sided";
    case PenaltyKind::one_sided:
      return "one_sided";
  }
  return "none";
}

}  // namespace

ExperimentSpec load_spec(const ConfigFile& c, const std::string& mode, std::optional<int> refine,
                         const std::filesystem::path& out_dir) {
  const auto& modes = experiment_modes();
  if (std::find(modes.begin(), modes.end(), mode) == modes.end()) {
    throw ConfigError("unknown mode `" + mode + "`");
  }
  const std::string where = c.source() + ": ";
  const std::filesystem::path base = std::filesystem::path(c.source()).parent_path();
  const auto resolve = [&](const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
  };

  ExperimentSpec spec;
  spec.mode = mode;
  spec.out_dir = out_dir;
  auto& echo = spec.echo;
  try {
    ModelParams& p = spec.params;
    p.lame = LameTensor(c.number("model.mu").value_or(1.0), c.number("model.lambda").value_or(1.0));
    p.gamma = c.number("model.gamma").value_or(1.0);
    p.e0 = mode == "corner" ? c.number("model.e0").value_or(1.0) : c.require_number("model.e0");
    p.r0 = c.number("model.r0").value_or(0.1);
    p.period = c.number("model.period").value_or(1.0);
    p.volume = c.number("model.volume").value_or(1.0);
    p.c_o = c.number("model.c_o").value_or(1.0);
    p.Lambda = c.number("model.Lambda");
    p.beta = c.number("model.beta").value_or(0.0);
    p.validate();
    echo["model.mu"] = num(p.lame.mu);
    echo["model.lambda"] = num(p.lame.lambda);
    echo["model.gamma"] = num(p.gamma);
    echo["model.e0"] = num(p.e0);
    echo["model.r0"] = num(p.r0);
    echo["model.period"] = num(p.period);
    echo["model.volume"] = num(p.volume);
    echo["model.c_o"] = num(p.c_o);
    echo["model.Lambda"] = num(p.volume_weight());
    echo["model.beta"] = num(p.beta);

    const auto configured = c.integer("mesh.refine");
    spec.mesh.refine = refine ? *refine : static_cast<int>(configured.value_or(64));
    if (spec.mesh.refine < 2) throw ConfigError(where + "mesh.refine: must be at least 2");
    spec.mesh.h_min = p.h_min();
    echo["mesh.refine"] = std::to_string(spec.mesh.refine);

    const double ell = p.period;
    const std::string kind = c.text("profile.kind").value_or("flat");
    const double height = c.number("profile.height").value_or(p.volume / ell);
    const auto count = c.integer("profile.nodes").value_or(64);
    if (count < 1) throw ConfigError(where + "profile.nodes: must be positive");
    echo["profile.kind"] = kind;
    if (kind == "flat") {
      spec.profile = Profile::flat(ell, height, static_cast<std::size_t>(count));
      echo["profile.height"] = num(height);
      echo["profile.nodes"] = std::to_string(count);
    } else if (kind == "sinusoid") {
      const double amp = c.number("profile.amplitude").value_or(0.1);
      const double k = c.number("profile.wavenumber").value_or(1.0);
      spec.profile = Profile::sampled(ell, static_cast<std::size_t>(count), [&](double x) {
        return height + amp * std::cos(2.0 * std::numbers::pi * k * x / ell);
      });
      echo["profile.height"] = num(height);
      echo["profile.nodes"] = std::to_string(count);
      echo["profile.amplitude"] = num(amp);
      echo["profile.wavenumber"] = num(k);
    } else if (kind == "nodes") {
      const auto pts = c.groups("profile.points");
      if (!pts) throw ConfigError(where + "profile.points: required for profile.kind = nodes");
      std::vector<ProfileNode> nodes;
      for (const auto& g : *pts) {
        if (g.size() != 2) throw ConfigError(where + "profile.points: expected `x h` pairs");
        nodes.push_back({g[0], g[1]});
      }
      std::vector<Jump> jumps;
      if (const auto js = c.groups("profile.jumps")) {
        for (const auto& g : *js) {
          if (g.size() != 4) throw ConfigError(where + "profile.jumps: expected `x left right value`");
          jumps.push_back({g[0], g[1], g[2], g[3]});
        }
        echo["profile.jumps"] = join_groups(*js);
      }
      spec.profile = Profile(ell, std::move(nodes), std::move(jumps));
      echo["profile.points"] = join_groups(*pts);
    } else if (kind == "file") {
      const auto path = c.text("profile.file");
      if (!path) throw ConfigError(where + "profile.file: required for profile.kind = file");
      spec.profile = profile_from_json(read_json(resolve(*path), "profile.file"));
      if (spec.profile.period() != ell) {
        throw ConfigError(where + "profile.file: period differs from model.period");
      }
      echo["profile.file"] = *path;
    } else {
      throw ConfigError(where + "profile.kind: expected flat, sinusoid, nodes or file");
    }

    const auto burgers = c.groups("dislocations.burgers").value_or(
        std::vector<std::vector<double>>{{1.0, 0.0}});
    std::vector<Vec2> fundamentals;
    for (const auto& g : burgers) {
      if (g.size() != 2) throw ConfigError(where + "dislocations.burgers: expected `bx by` pairs");
      fundamentals.push_back({g[0], g[1]});
    }
    const BurgersLattice lattice(fundamentals);
    echo["dislocations.burgers"] = join_groups(burgers);
    if (const auto file = c.text("dislocations.file")) {
      if (c.has("dislocations.centers")) {
        throw ConfigError(where + "dislocations.file: conflicts with dislocations.centers");
      }
      spec.sigma = measure_from_json(read_json(resolve(*file), "dislocations.file"));
      if (spec.sigma.r0() != p.r0) {
        throw ConfigError(where + "dislocations.file: r0 differs from model.r0");
      }
      echo["dislocations.file"] = *file;
    } else {
      std::vector<DislocationEntry> entries;
      const auto centers = c.groups("dislocations.centers");
      const auto coeffs = c.groups("dislocations.coeffs");
      if (coeffs && !centers) {
        throw ConfigError(where + "dislocations.coeffs: given without dislocations.centers");
      }
      if (centers) {
        if (coeffs && coeffs->size() != centers->size()) {
          throw ConfigError(where + "dislocations.coeffs: one group per center required");
        }
        for (std::size_t i = 0; i < centers->size(); ++i) {
          const auto& z = (*centers)[i];
          if (z.size() != 2) throw ConfigError(where + "dislocations.centers: expected `x y` pairs");
          std::vector<int> m(lattice.size(), 0);
          if (coeffs) {
            const auto& g = (*coeffs)[i];
            if (g.size() != lattice.size()) {
              throw ConfigError(where + "dislocations.coeffs: one integer per Burgers vector");
            }
            for (std::size_t k = 0; k < g.size(); ++k) {
              if (g[k] != std::round(g[k])) {
                throw ConfigError(where + "dislocations.coeffs: integers required");
              }
              m[k] = static_cast<int>(g[k]);
            }
          } else {
            m[0] = 1;
          }
          entries.push_back({{z[0], z[1]}, m});
        }
        echo["dislocations.centers"] = join_groups(*centers);
        if (coeffs) echo["dislocations.coeffs"] = join_groups(*coeffs);
      }
      spec.sigma = DislocationMeasure(p.r0, lattice, std::move(entries));
    }
    if (!spec.sigma.admissible(spec.profile)) {
      throw ConfigError(where + "dislocations: a core disk does not fit inside the film");
    }

    ScheduleParams& s = spec.schedule;
    s.nucleation_dx = ell / 8.0;
    s.nucleation_dy = p.r0;
    const auto dnum = [&](const char* key, double& field) {
      field = c.number(key).value_or(field);
      echo[key] = num(field);
    };
    const auto inum = [&](const char* key, int& field) {
      field = static_cast<int>(c.integer(key).value_or(field));
      echo[key] = std::to_string(field);
    };
    const auto bnum = [&](const char* key, bool& field) {
      field = c.boolean(key).value_or(field);
      echo[key] = field ? "true" : "false";
    };
    dnum("schedule.profile_tau", s.profile_tau);
    dnum("schedule.max_normal_displacement", s.max_normal_displacement);
    s.fd_step = c.number("schedule.fd_step").value_or(s.fd(p.r0));
    echo["schedule.fd_step"] = num(s.fd_step);
    dnum("schedule.shrink", s.shrink);
    inum("schedule.line_search_max", s.line_search_max);
    dnum("schedule.dislocation_max_move", s.dislocation_max_move);
    dnum("schedule.nucleation_dx", s.nucleation_dx);
    dnum("schedule.nucleation_dy", s.nucleation_dy);
    inum("schedule.max_nucleations", s.max_nucleations);
    dnum("schedule.energy_tol", s.energy_tol);
    inum("schedule.max_sweeps", s.max_sweeps);
    inum("schedule.profile_steps", s.profile_steps);
    inum("schedule.dislocation_steps", s.dislocation_steps);
    bnum("schedule.move_profile", s.move_profile);
    bnum("schedule.move_dislocations", s.move_dislocations);
    bnum("schedule.nucleate", s.nucleate);
    s.validate(p.r0);

    spec.objective.penalty =
        penalty_from(c.text("objective.penalty").value_or("none"), where);
    echo["objective.penalty"] = penalty_name(spec.objective.penalty);
    spec.objective.nucleation = c.boolean("objective.nucleation").value_or(false);
    echo["objective.nucleation"] = spec.objective.nucleation ? "true" : "false";
    if (const auto anchor = c.text("objective.anchor")) {
      if (*anchor != "initial") throw ConfigError(where + "objective.anchor: only `initial` is supported");
      spec.objective.anchor = spec.profile;
      echo["objective.anchor"] = *anchor;
    }

    dnum("scan.e0_min", spec.scan.e0_min);
    dnum("scan.e0_max", spec.scan.e0_max);
    dnum("scan.e0_step", spec.scan.e0_step);
    inum("scan.bisect", spec.scan.bisect);
    inum("scan.max_nucleations", spec.scan.max_nucleations);
    if (!(spec.scan.e0_step > 0.0) || spec.scan.e0_max < spec.scan.e0_min) {
      throw ConfigError(where + "scan: need e0_step > 0 and e0_max >= e0_min");
    }
    inum("sink.max_steps", spec.sink_max_steps);
    if (const auto g = c.numbers("sweep.gammas")) {
      if (g->empty()) throw ConfigError(where + "sweep.gammas: empty list");
      spec.sweep.gammas = *g;
    }
    echo["sweep.gammas"] = join(spec.sweep.gammas);

    const auto omegas = c.numbers("corner.omegas");
    const auto omegas_pi = c.numbers("corner.omegas_pi");
    if (omegas) spec.corner.omegas = *omegas;
    if (omegas_pi) {
      for (const double f : *omegas_pi) spec.corner.omegas.push_back(f * std::numbers::pi);
    }
    if (mode == "corner" && spec.corner.omegas.empty()) {
      throw ConfigError(where + "corner.omegas: required field missing (or corner.omegas_pi)");
    }
    spec.corner.strip.lo = c.number("corner.re_min").value_or(0.0);
    spec.corner.strip.hi = c.number("corner.re_max").value_or(1.0);
    spec.corner.im_max = c.number("corner.im_max").value_or(10.0);
    echo["corner.omegas"] = join(spec.corner.omegas);
    echo["corner.re_min"] = num(spec.corner.strip.lo);
    echo["corner.re_max"] = num(spec.corner.strip.hi);
    echo["corner.im_max"] = num(spec.corner.im_max);
    bnum("validate.tiny", spec.validate_tiny);
  } catch (const InvalidInput& e) {
    throw ConfigError(where + e.what());
  }
  c.reject_unknown();
  return spec;
}

// ------------------------------------------------------------------- studies

ThresholdScan nucleation_threshold_scan(const Evaluator& eval, const Profile& profile,
                                        const DislocationMeasure& sigma,
                                        const ScheduleParams& schedule, const ScanSettings& scan) {
  ThresholdScan out;
  ScheduleParams sched = schedule;
  sched.max_nucleations = scan.max_nucleations;
  if (sigma.lattice().empty()) throw InvalidInput("scan: empty Burgers lattice");

  const ModelParams& base = eval.params();
  const Vec2 b = sigma.lattice().fundamentals()[0];
  const double hbar = volume(profile) / profile.period();
  const DislocationMeasure bottom = sigma.plus({0.0, sigma.r0()}, [&] {
    std::vector<int> m(sigma.lattice().size(), 0);
    m[0] = 1;
    return m;
  }());
  const auto placed = eval.evaluate(profile, bottom);
  out.self_energy = placed.state->fields().unit.self;
  out.estimate = (out.self_energy + base.c_o * (b.x * b.x + b.y * b.y)) /
                 (2.0 * base.W0() * b.x * (hbar - sigma.r0()));

  const auto accepts = [&](double e0, ScanRow* row) {
    ModelParams p = base;
    p.e0 = e0;
    const Evaluator at = eval.with_params(p);
    const auto start = at.evaluate(profile, sigma);
    const auto end = nucleation_sweep(start, at, sched);
    const bool accepted = !(end.sigma == start.sigma);
    if (row) {
      *row = {e0, accepted, end.sigma.merged().size(),
              start.energy.total + (at.objective().nucleation ? 0.0 : nucleation_energy(sigma, p.c_o)),
              end.energy.total + (at.objective().nucleation ? 0.0 : nucleation_energy(end.sigma, p.c_o))};
    }
    return accepted;
  };

  const long steps = std::lround((scan.e0_max - scan.e0_min) / scan.e0_step);
  for (long k = 0; k <= steps; ++k) {
    const double e0 = scan.e0_min + scan.e0_step * static_cast<double>(k);
    ScanRow row;
    accepts(e0, &row);
    out.rows.push_back(row);
  }
  std::size_t first = out.rows.size();
  for (std::size_t i = 0; i < out.rows.size(); ++i) {
    if (out.rows[i].accepted) {
      first = i;
      break;
    }
  }
  if (first < out.rows.size()) {
    out.consistent = std::all_of(out.rows.begin() + static_cast<std::ptrdiff_t>(first),
                                 out.rows.end(), [](const ScanRow& r) { return r.accepted; });
    if (first == 0) {
      out.threshold = out.rows[0].e0;
    } else {
      double lo = out.rows[first - 1].e0, hi = out.rows[first].e0;
      for (int it = 0; it < scan.bisect; ++it) {
        const double mid = 0.5 * (lo + hi);
        (accepts(mid, nullptr) ? hi : lo) = mid;
      }
      out.threshold = hi;
    }
  }
  return out;
}

std::vector<SinkRow> sink_study(const Configuration& start, const Evaluator& eval,
                                const ScheduleParams& schedule, int max_steps) {
  if (start.sigma.empty()) throw InvalidInput("sink study: at least one dislocation required");
  std::vector<SinkRow> rows;
  Configuration cur = start;
  const auto record = [&](int step) {
    const Point z = cur.sigma.entries()[0].center;
    rows.push_back({step, z.x, z.y, cur.energy.total});
  };
  record(0);
  for (int k = 1; k <= max_steps; ++k) {
    auto next = dislocation_step(cur, eval, schedule);
    if (!(next.energy.total < cur.energy.total)) break;
    cur = std::move(next);
    record(k);
  }
  return rows;
}

std::vector<SweepRow> gamma_sweep(const ExperimentSpec& spec) {
  std::vector<SweepRow> rows;
  for (const double g : spec.sweep.gammas) {
    ModelParams p = spec.params;
    p.gamma = g;
    const Evaluator eval(p, spec.objective, spec.mesh);
    const auto run = alternate_minimize(eval.evaluate(spec.profile, spec.sigma), eval, spec.schedule);
    const auto& prof = run.final.profile;
    const double flat = volume(prof) / prof.period();
    double sup = 0.0;
    for (const double h : prof.heights()) sup = std::max(sup, std::abs(h - flat));
    rows.push_back({g, sup, run.final.energy.total, run.converged, run.trace.size() - 1});
  }
  return rows;
}

// ------------------------------------------------------------------- exports

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw NumericError("sha256 failed");
  }
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) {
    os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  }
  return os.str();
}

std::string trace_csv(const std::vector<TraceRow>& trace) {
  std::ostringstream os;
  os << "sweep,step_kind,elastic,surface,cuts,nucleation,penalty,total,volume,n_dislocations\n";
  for (const auto& r : trace) {
    const auto& e = r.energy;
    os << r.sweep << ',' << r.kind << ',' << num(e.elastic) << ',' << num(e.surface) << ','
       << num(e.cuts) << ',' << num(e.nucleation) << ',' << num(e.penalty()) << ','
       << num(e.total) << ',' << num(e.volume) << ',' << r.dislocations << '\n';
  }
  return os.str();
}

std::string energy_csv(const EnergyBreakdown& e, const std::string& params_hash) {
  std::ostringstream os;
  os << "quantity,value\n";
  const std::pair<const char*, double> rows[] = {
      {"elastic", e.elastic},
      {"elastic_mismatch", e.elastic_parts.mismatch},
      {"elastic_cross", e.elastic_parts.cross},
      {"elastic_self", e.elastic_parts.self},
      {"surface", e.surface},
      {"cuts", e.cuts},
      {"nucleation", e.nucleation},
      {"volume_penalty", e.volume_penalty},
      {"anchoring_penalty", e.anchoring_penalty},
      {"total", e.total},
      {"volume", e.volume}};
  for (const auto& [k, v] : rows) os << k << ',' << num(v) << '\n';
  os << "field_assumed," << (e.field_assumed ? 1 : 0) << '\n';
  os << "params_hash," << params_hash << '\n';
  return os.str();
}

std::string field_csv(const ElasticState& state) {
  const Mesh& mesh = state.mesh();
  const auto& disc = state.discretization();
  const auto& f = state.fields();
  const double e0 = state.e0();
  std::ostringstream os;
  os << "x,y,ux,uy,H11,H12,H21,H22,W\n";
  for (std::size_t t = 0; t < mesh.triangles().size(); ++t) {
    const auto& tri = mesh.triangles()[t];
    Vec2d c = Vec2d::Zero();
    Vec2d u = Vec2d::Zero();
    for (int k = 0; k < 3; ++k) {
      c += mesh.vertex(t, k) / 3.0;
      const int n = tri.v[static_cast<std::size_t>(k)];
      u += (e0 * disc.nodal(f.mismatch.w, n) + disc.nodal(f.corrector.v, n)) / 3.0;
    }
    u.x() += e0 * c.x();
    Mat2 H = Mat2::Zero();
    for (int q = 0; q < 3; ++q) H += state.total_strain(t, q) / 3.0;
    const double W = energy_density(0.5 * (H + H.transpose()), disc.lame());
    os << num(c.x()) << ',' << num(c.y()) << ',' << num(u.x()) << ',' << num(u.y()) << ','
       << num(H(0, 0)) << ',' << num(H(0, 1)) << ',' << num(H(1, 0)) << ',' << num(H(1, 1)) << ','
       << num(W) << '\n';
  }
  return os.str();
}

namespace {

std::string mesh_nodes_csv(const Mesh& mesh) {
  std::ostringstream os;
  os << "id,x,y\n";
  for (std::size_t n = 0; n < mesh.node_count(); ++n) {
    const auto& p = mesh.node_position(static_cast<int>(n));
    os << n << ',' << num(p.x()) << ',' << num(p.y()) << '\n';
  }
  return os.str();
}

std::string mesh_triangles_csv(const Mesh& mesh) {
  std::ostringstream os;
  os << "id,v0,v1,v2,shift0,shift1,shift2\n";
  for (std::size_t t = 0; t < mesh.triangles().size(); ++t) {
    const auto& tri = mesh.triangles()[t];
    os << t << ',' << tri.v[0] << ',' << tri.v[1] << ',' << tri.v[2] << ',' << num(tri.shift[0])
       << ',' << num(tri.shift[1]) << ',' << num(tri.shift[2]) << '\n';
  }
  return os.str();
}

std::string configuration_json(const Profile& p, const DislocationMeasure& s) {
  nlohmann::json j;
  j["profile"] = p;
  j["dislocations"] = s;
  return j.dump(2) + "\n";
}

std::string el_csv(const ELResidual& r) {
  std::ostringstream os;
  os << "x,residual,excluded\n";
  for (std::size_t i = 0; i < r.x.size(); ++i) {
    os << num(r.x[i]) << ',' << num(r.residual[i]) << ',' << (r.excluded[i] ? 1 : 0) << '\n';
  }
  return os.str();
}

class Writer {
 public:
  explicit Writer(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
  }

  void write(const std::string& name, const std::string& body) {
    const auto path = dir_ / name;
    std::ofstream out(path, std::ios::binary);
    out << body;
    if (!out) throw NumericError("cannot write " + path.string());
    files_.push_back({{"name", name}, {"sha256", sha256_hex(body)}, {"bytes", body.size()}});
    paths_.push_back(path);
  }

  const nlohmann::json& files() const { return files_; }
  const std::vector<std::filesystem::path>& paths() const { return paths_; }
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  nlohmann::json files_ = nlohmann::json::array();
  std::vector<std::filesystem::path> paths_;
};

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

RunOutcome run(const ExperimentSpec& spec) {
  Writer out(spec.out_dir);
  std::string canonical;
  for (const auto& [k, v] : spec.echo) canonical += k + " = " + v + "\n";
  const std::string params_hash = sha256_hex(canonical);
  RunOutcome outcome;
  nlohmann::json summary = nlohmann::json::object();

  const auto evaluator = [&] { return Evaluator(spec.params, spec.objective, spec.mesh); };

  if (spec.mode == "solve") {
    const auto eval = evaluator();
    const auto cfg = eval.evaluate(spec.profile, spec.sigma);
    out.write("energy.csv", energy_csv(cfg.energy, params_hash));
    out.write("field.csv", field_csv(*cfg.state));
    out.write("mesh_nodes.csv", mesh_nodes_csv(cfg.state->mesh()));
    out.write("mesh_triangles.csv", mesh_triangles_csv(cfg.state->mesh()));
    out.write("configuration.json", configuration_json(cfg.profile, cfg.sigma));
    summary["total"] = cfg.energy.total;
    outcome.message = "total energy " + num(cfg.energy.total);
  } else if (spec.mode == "minimize") {
    const auto eval = evaluator();
    const auto res = alternate_minimize(eval.evaluate(spec.profile, spec.sigma), eval, spec.schedule);
    out.write("trace.csv", trace_csv(res.trace));
    out.write("energy.csv", energy_csv(res.final.energy, params_hash));
    out.write("final_profile.json", nlohmann::json(res.final.profile).dump(2) + "\n");
    out.write("final_dislocations.json", nlohmann::json(res.final.sigma).dump(2) + "\n");
    if (res.residual) {
      out.write("el_residual.csv", el_csv(*res.residual));
      summary["el_residual_sup"] = res.residual->sup;
      summary["el_multiplier"] = res.residual->multiplier;
    }
    summary["converged"] = res.converged;
    summary["max_sweeps_exceeded"] = res.max_sweeps_exceeded;
    summary["total"] = res.final.energy.total;
    outcome.message = "final energy " + num(res.final.energy.total) +
                      (res.max_sweeps_exceeded ? " (max sweeps exceeded)" : "");
  } else if (spec.mode == "nucleate") {
    const auto eval = evaluator();
    const auto scan = nucleation_threshold_scan(eval, spec.profile, spec.sigma, spec.schedule, spec.scan);
    std::ostringstream os;
    os << "e0,accepted,n_dislocations,energy_before,energy_after\n";
    for (const auto& r : scan.rows) {
      os << num(r.e0) << ',' << (r.accepted ? 1 : 0) << ',' << r.dislocations << ','
         << num(r.before) << ',' << num(r.after) << '\n';
    }
    out.write("nucleation_scan.csv", os.str());
    std::ostringstream th;
    th << "quantity,value\n";
    th << "threshold," << (scan.threshold ? num(*scan.threshold) : std::string("none")) << '\n';
    th << "estimate," << num(scan.estimate) << '\n';
    th << "self_energy," << num(scan.self_energy) << '\n';
    th << "consistent," << (scan.consistent ? 1 : 0) << '\n';
    out.write("threshold.csv", th.str());
    summary["estimate"] = scan.estimate;
    if (scan.threshold) summary["threshold"] = *scan.threshold;
    outcome.message = scan.threshold ? "nucleation threshold " + num(*scan.threshold) +
                                           " (estimate " + num(scan.estimate) + ")"
                                     : "no nucleation in the scanned range";
  } else if (spec.mode == "sink-study") {
    const auto eval = evaluator();
    const auto rows = sink_study(eval.evaluate(spec.profile, spec.sigma), eval, spec.schedule,
                                 spec.sink_max_steps);
    std::ostringstream os;
    os << "step,x,y,energy\n";
    for (const auto& r : rows) {
      os << r.step << ',' << num(r.x) << ',' << num(r.y) << ',' << num(r.energy) << '\n';
    }
    out.write("sink.csv", os.str());
    summary["final_y"] = rows.back().y;
    outcome.message = "final center height " + num(rows.back().y);
  } else if (spec.mode == "gamma-sweep") {
    const auto rows = gamma_sweep(spec);
    std::ostringstream os;
    os << "gamma,sup_distance,energy,converged,accepted_steps\n";
    for (const auto& r : rows) {
      os << num(r.gamma) << ',' << num(r.sup_distance) << ',' << num(r.energy) << ','
         << (r.converged ? 1 : 0) << ',' << r.accepted_steps << '\n';
    }
    out.write("gamma_sweep.csv", os.str());
    outcome.message = std::to_string(rows.size()) + " surface tensions";
  } else if (spec.mode == "corner") {
    std::ostringstream roots, counts;
    roots << "omega,re_alpha,im_alpha,residual,multiplicity\n";
    counts << "omega,enumerated,winding,winding_tall,complete\n";
    bool complete = true;
    for (const double w : spec.corner.omegas) {
      const auto r = corner_roots(w, spec.corner.strip, spec.corner.im_max);
      for (const auto& root : r.roots) {
        roots << num(w) << ',' << num(root.alpha.real()) << ',' << num(root.alpha.imag()) << ','
              << num(root.residual) << ',' << root.multiplicity << '\n';
      }
      counts << num(w) << ',' << r.enumerated << ',' << r.winding << ',' << r.winding_tall << ','
             << (r.complete() ? 1 : 0) << '\n';
      complete = complete && r.complete();
    }
    out.write("corner_roots.csv", roots.str());
    out.write("corner_counts.csv", counts.str());
    summary["complete"] = complete;
    if (!complete) {
      outcome.status = 3;
      outcome.message = "incomplete enumeration: winding count differs from the root list";
    } else {
      outcome.message = "corner roots enumerated";
    }
  } else if (spec.mode == "validate") {
    const auto reports = validation_suite(spec.params, {spec.mesh.refine, spec.validate_tiny});
    out.write("validation.csv", reports_csv(reports));
    bool pass = true;
    for (const auto& r : reports) pass = pass && r.pass;
    nlohmann::json j{{"pass", pass}, {"reports", reports}};
    out.write("validation.json", j.dump(2) + "\n");
    summary["pass"] = pass;
    outcome.status = pass ? 0 : 3;
    outcome.message = pass ? "all oracle checks passed" : "oracle checks failed";
    for (const auto& r : reports) {
      if (!r.pass) outcome.message += "\n  failed: " + r.name;
    }
  }

  nlohmann::json manifest{{"mode", spec.mode},
                          {"created", utc_now()},
                          {"parameters", spec.echo},
                          {"params_hash", params_hash},
                          {"status", outcome.status},
                          {"summary", summary},
                          {"files", out.files()}};
  const auto path = out.dir() / "manifest.json";
  std::ofstream mf(path);
  mf << manifest.dump(2) << "\n";
  if (!mf) throw NumericError("cannot write " + path.string());
  outcome.files = out.paths();
  outcome.files.push_back(path);
  return outcome;
}

}  // namespace epifilm
