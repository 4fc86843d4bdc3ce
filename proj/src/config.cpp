#include "sbm/config.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "sbm/diffusion.hpp"
#include "sbm/elasticity.hpp"
#include "sbm/phase_field.hpp"
#include "sbm/surface_bulk.hpp"
#include "sbm/validation.hpp"

namespace sbm {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kTopKeys = {"solver", "description", "grid",  "domain", "domain2",
                                           "initial", "physics",    "box",   "output"};
const std::vector<std::string> kGridKeys = {"dims", "spacing", "origin", "coord_system"};
const std::vector<std::string> kBoxKeys = {"default", "x_lo", "x_hi", "y_lo",
                                           "y_hi",    "z_lo", "z_hi"};
const std::vector<std::string> kOutputKeys = {"dir", "fields", "format", "cadence"};

const std::map<std::string, std::vector<std::string>> kShapeKeys = {
    {"uniform", {"shape", "value"}},
    {"halfspace", {"shape", "axis", "position", "inside_above", "zeta"}},
    {"slab", {"shape", "axis", "lo", "hi", "zeta"}},
    {"sphere", {"shape", "centre", "radius", "invert", "zeta"}},
    {"voxels", {"shape", "file", "inside_labels", "steps", "band_width", "zeta"}}};

const std::vector<std::string> kPhaseInitialKeys = {"shape", "centre", "radius", "axis",
                                                    "position", "inside_above"};

const std::map<SolverKind, std::vector<std::string>> kPhysicsKeys = {
    {SolverKind::diffusion,
     {"diffusivity", "source", "sink_rate", "upsilon", "guard", "boundary", "neumann_value",
      "dirichlet_value", "split_axis", "split_position", "t_end", "dt", "safety"}},
    {SolverKind::surface_bulk,
     {"D_b", "D_s", "kappa", "L", "upsilon", "guard", "t_end", "dt", "safety"}},
    {SolverKind::helmholtz, {"D_b", "D_s", "kappa", "omega", "tol", "max_sweeps"}},
    {SolverKind::allen_cahn,
     {"delta_phi", "theta", "theta_split", "M", "upsilon", "guard", "t_end", "dt", "safety"}},
    {SolverKind::cahn_hilliard,
     {"delta_phi", "theta", "theta_split", "M", "J_n", "upsilon", "guard", "t_end", "dt",
      "safety"}},
    {SolverKind::elasticity, {"materials", "upsilon", "tol", "change_tol", "max_sweeps"}},
    {SolverKind::smooth_voxels, {}},
    {SolverKind::suite, {"name", "full", "workers"}}};

const std::map<SolverKind, std::vector<std::string>> kFieldNames = {
    {SolverKind::diffusion, {"C", "psi"}},
    {SolverKind::surface_bulk, {"C", "psi"}},
    {SolverKind::helmholtz, {"C", "psi"}},
    {SolverKind::allen_cahn, {"phi", "psi", "mu"}},
    {SolverKind::cahn_hilliard, {"phi", "psi", "mu"}},
    {SolverKind::elasticity,
     {"u_x", "u_y", "u_z", "sigma_xx", "sigma_yy", "sigma_zz", "sigma_xy", "sigma_xz",
      "sigma_yz", "sigma_m", "psi", "psi2"}},
    {SolverKind::smooth_voxels, {"psi", "labels"}},
    {SolverKind::suite, {}}};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void check_keys(const json& j, const std::vector<std::string>& allowed, const std::string& where) {
  require(j.is_object(), where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) != allowed.end()) continue;
    std::string msg = "unknown key '" + key + "' in " + where;
    const std::string hint = nearest_key(key, allowed);
    if (!hint.empty()) msg += "; did you mean '" + hint + "'?";
    throw InvalidArgument(msg);
  }
}

// Typed access to one config object, logging every value it hands out.
class Section {
 public:
  Section(const json& j, std::string name, RunLog& log)
      : j_(j.is_null() ? empty() : j), name_(std::move(name)), log_(log) {}

  bool has(const std::string& key) const { return j_.contains(key); }

  double number(const std::string& key, std::optional<double> fallback = std::nullopt) const {
    if (!has(key)) {
      require(fallback.has_value(), name_ + "." + key + " is required");
      log_.record(name_ + "." + key, fmt(*fallback), true);
      return *fallback;
    }
    require(j_[key].is_number(), name_ + "." + key + " must be a number");
    const double v = j_[key].get<double>();
    log_.record(name_ + "." + key, fmt(v), false);
    return v;
  }

  int integer(const std::string& key, std::optional<int> fallback = std::nullopt) const {
    const double v = number(key, fallback ? std::optional<double>(*fallback) : std::nullopt);
    require(v == std::floor(v), name_ + "." + key + " must be an integer");
    return static_cast<int>(v);
  }

  bool boolean(const std::string& key, bool fallback) const {
    if (!has(key)) {
      log_.record(name_ + "." + key, fallback ? "true" : "false", true);
      return fallback;
    }
    require(j_[key].is_boolean(), name_ + "." + key + " must be true or false");
    const bool v = j_[key].get<bool>();
    log_.record(name_ + "." + key, v ? "true" : "false", false);
    return v;
  }

  std::string text(const std::string& key, std::optional<std::string> fallback = std::nullopt) const {
    if (!has(key)) {
      require(fallback.has_value(), name_ + "." + key + " is required");
      log_.record(name_ + "." + key, *fallback, true);
      return *fallback;
    }
    require(j_[key].is_string(), name_ + "." + key + " must be a string");
    const std::string v = j_[key].get<std::string>();
    log_.record(name_ + "." + key, v, false);
    return v;
  }

  std::vector<double> numbers(const std::string& key,
                              std::optional<std::vector<double>> fallback = std::nullopt) const {
    std::vector<double> v;
    bool defaulted = false;
    if (!has(key)) {
      require(fallback.has_value(), name_ + "." + key + " is required");
      v = *fallback;
      defaulted = true;
    } else {
      const json& a = j_[key];
      require(a.is_array(), name_ + "." + key + " must be an array of numbers");
      for (const auto& e : a) {
        require(e.is_number(), name_ + "." + key + " must be an array of numbers");
        v.push_back(e.get<double>());
      }
    }
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
    log_.record(name_ + "." + key, s + "]", defaulted);
    return v;
  }

  const json& raw() const { return j_; }
  const std::string& name() const { return name_; }

 private:
  static const json& empty() {
    static const json e = json::object();
    return e;
  }
  const json& j_;
  std::string name_;
  RunLog& log_;
};

std::string resolve(const std::string& base, const std::string& file) {
  const fs::path p(file);
  return p.is_absolute() ? file : (fs::path(base) / p).string();
}

int axis_value(const Section& s, const std::string& key, const Grid& g, int fallback = 0) {
  const int a = s.integer(key, fallback);
  require(a >= 0 && a < g.ndim(), s.name() + "." + key + " must name a grid axis");
  return a;
}

std::array<double, 3> point(const Section& s, const std::string& key, const Grid& g) {
  const std::vector<double> v = s.numbers(key);
  require(static_cast<int>(v.size()) == g.ndim(),
          s.name() + "." + key + " needs one entry per grid axis");
  std::array<double, 3> p{0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < v.size(); ++i) p[i] = v[i];
  return p;
}

GuardForm guard_value(const Section& s) { return guard_form_from_string(s.text("guard", "blended")); }

// Ticket for per-run output handling.
struct Outputs {
  fs::path dir;
  std::set<std::string> fields;
  ExportFormat format = ExportFormat::sbmf;
  double cadence = 0.0;
  RunOutcome* outcome = nullptr;

  bool wants(const std::string& f) const { return fields.count(f) > 0; }
  std::string path(const std::string& stem, const char* ext) const {
    return (dir / (stem + ext)).string();
  }
  void field(const std::string& name, const ScalarField& f, const std::string& stem = "") {
    const std::string p = path(stem.empty() ? name : stem, extension(format));
    export_field(f, p, format, name);
    outcome->artifacts.push_back(p);
  }
  void field(const std::string& name, const ComplexScalarField& f) {
    const std::string p = path(name, extension(format));
    export_field(f, p, format);
    outcome->artifacts.push_back(p);
  }
  void text(const std::string& file, const std::string& body) {
    const std::string p = (dir / file).string();
    write_text(p, body);
    outcome->artifacts.push_back(p);
  }
};

Outputs outputs_from(const RunConfig& c, RunLog& log, RunOutcome& outcome) {
  const Section s(c.output, "output", log);
  Outputs o;
  o.dir = resolve(c.base_dir, s.text("dir", "out"));
  o.format = export_format_from_string(s.text("format", "sbmf"));
  o.cadence = s.number("cadence", 0.0);
  require(o.cadence >= 0.0, "output.cadence must be >= 0");
  const auto& known = kFieldNames.at(c.solver);
  std::vector<std::string> requested;
  if (s.has("fields")) {
    require(s.raw()["fields"].is_array(), "output.fields must be an array of names");
    for (const auto& f : s.raw()["fields"]) {
      require(f.is_string(), "output.fields must be an array of names");
      requested.push_back(f.get<std::string>());
    }
  } else {
    requested = {known.begin(), known.begin() + std::min<std::size_t>(known.size(), 2)};
  }
  std::string listed;
  for (const auto& f : requested) {
    if (std::find(known.begin(), known.end(), f) == known.end()) {
      std::string msg = "unknown output field '" + f + "' for solver " + to_string(c.solver);
      const std::string hint = nearest_key(f, known);
      if (!hint.empty()) msg += "; did you mean '" + hint + "'?";
      throw InvalidArgument(msg);
    }
    o.fields.insert(f);
    listed += (listed.empty() ? "" : ", ") + f;
  }
  log.record("output.fields", "[" + listed + "]", !s.has("fields"));
  o.outcome = &outcome;
  return o;
}

void start_outputs(Outputs& o) {
  std::error_code ec;
  fs::create_directories(o.dir, ec);
  if (ec) throw IoError("cannot create output directory '" + o.dir.string() + "': " + ec.message());
}

Grid resolve_grid(const RunConfig& c, RunLog& log) {
  if (c.domain.is_object() && c.domain.value("shape", "") == "voxels" && c.grid.is_null()) {
    const std::string file = resolve(c.base_dir, c.domain["file"].get<std::string>());
    log.record("grid", "from " + file, true);
    return read_sbmf_header(file).grid;
  }
  return grid_from_config(c.grid, log);
}

long step_count(double t_end, double dt) {
  return static_cast<long>(std::ceil(t_end / dt - 1e-9));
}

template <typename StepFn>
void march(double t_end, double dt, double cadence, StepFn&& step,
           const std::function<void(int, double)>& snapshot) {
  const long n = step_count(t_end, dt);
  const long every = cadence > 0.0 ? std::max<long>(1, std::lround(cadence / dt)) : 0;
  int k = 0;
  for (long s = 1; s <= n; ++s) {
    step();
    if (every && s % every == 0 && s < n) snapshot(++k, s * dt);
  }
}

// ---------------------------------------------------------------- runs

void run_diffusion(const RunConfig& c, RunLog& log, Outputs& out, std::ostream& progress) {
  const Grid g = resolve_grid(c, log);
  DiffusionProblem prob;
  prob.dp = domain_from_config(c.domain, g, c.base_dir, log);
  prob.box = box_from_config(c.box, log);
  const Section p(c.physics, "physics", log);
  prob.D = ScalarField(g, p.number("diffusivity", 1.0));
  prob.S = ScalarField(g, p.number("source", 0.0));
  prob.sink_rate = p.number("sink_rate", 0.0);
  prob.upsilon = p.number("upsilon", 1e-7);
  prob.guard = guard_value(p);
  const std::string kind = p.text("boundary", "neumann");
  const double bn = p.number("neumann_value", 0.0), bd = p.number("dirichlet_value", 0.0);
  if (kind == "neumann") {
    prob.bc = BoundarySpec::regional(ScalarField(g, 1.0), bn, bd);
  } else if (kind == "dirichlet") {
    prob.bc = BoundarySpec::regional(ScalarField(g, -1.0), bn, bd);
  } else if (kind == "regional") {
    const int axis = axis_value(p, "split_axis", g);
    const double at = p.number("split_position");
    prob.bc = BoundarySpec::regional(
        ScalarField::from_function(g, [&](const auto& x) { return x[axis] - at; }), bn, bd);
  } else {
    throw InvalidArgument("physics.boundary must be neumann, dirichlet or regional");
  }
  prob.dt = p.number("dt", 0.0);
  const double safety = p.number("safety", 0.25), t_end = p.number("t_end", 1.0);
  const Section init(c.initial, "initial", log);
  Eigen::ArrayXd C = Eigen::ArrayXd::Constant(g.size(), init.number("value", 0.0));
  prob.validate();
  DiffusionStepper stepper(prob, safety);
  log.record("dt", fmt(stepper.dt()), prob.dt == 0.0);
  start_outputs(out);
  progress << "diffusion: dt = " << stepper.dt() << ", " << step_count(t_end, stepper.dt())
           << " steps\n";
  march(t_end, stepper.dt(), out.cadence, [&] { stepper.step(C); },
        [&](int k, double) {
          if (out.wants("C")) out.field("C", ScalarField(g, C), "C_" + std::to_string(k));
        });
  if (out.wants("C")) out.field("C", ScalarField(g, C));
  if (out.wants("psi")) out.field("psi", prob.dp.psi);
  out.text("report.txt", "steps " + std::to_string(stepper.steps()) + "\nt " +
                             fmt(stepper.steps() * stepper.dt()) + "\n");
}

SurfaceBulkProblem surface_bulk_problem(const RunConfig& c, RunLog& log, const Grid& g,
                                        const Section& p) {
  SurfaceBulkProblem prob;
  prob.dp = domain_from_config(c.domain, g, c.base_dir, log);
  prob.box = box_from_config(c.box, log);
  prob.D_b = p.number("D_b", 1.0);
  prob.D_s = p.number("D_s", 0.0);
  prob.kappa = p.number("kappa", 0.0);
  return prob;
}

void run_surface_bulk(const RunConfig& c, RunLog& log, Outputs& out, std::ostream& progress) {
  const Grid g = resolve_grid(c, log);
  const Section p(c.physics, "physics", log);
  SurfaceBulkProblem prob = surface_bulk_problem(c, log, g, p);
  prob.L = p.number("L", 0.0);
  prob.upsilon = p.number("upsilon", 1e-7);
  prob.guard = guard_value(p);
  const double dt = p.number("dt", 0.0), safety = p.number("safety", 0.25);
  const double t_end = p.number("t_end", 1.0);
  const Section init(c.initial, "initial", log);
  Eigen::ArrayXd C = Eigen::ArrayXd::Constant(g.size(), init.number("value", 0.0));
  prob.validate();
  CoupledStepper stepper(prob, dt, safety);
  log.record("dt", fmt(stepper.dt()), dt == 0.0);
  start_outputs(out);
  progress << "surface_bulk: dt = " << stepper.dt() << "\n";
  march(t_end, stepper.dt(), out.cadence, [&] { stepper.step(C); },
        [&](int k, double) {
          if (out.wants("C")) out.field("C", ScalarField(g, C), "C_" + std::to_string(k));
        });
  if (out.wants("C")) out.field("C", ScalarField(g, C));
  if (out.wants("psi")) out.field("psi", prob.dp.psi);
  out.text("report.txt", "steps " + std::to_string(stepper.steps()) + "\n");
}

void run_helmholtz(const RunConfig& c, RunLog& log, Outputs& out, std::ostream& progress) {
  const Grid g = resolve_grid(c, log);
  const Section p(c.physics, "physics", log);
  SurfaceBulkProblem prob = surface_bulk_problem(c, log, g, p);
  prob.omega = p.number("omega", 0.0);
  AdlrOptions ao;
  ao.tol = p.number("tol", 1e-5);
  ao.max_sweeps = p.integer("max_sweeps", 20000);
  prob.validate();
  start_outputs(out);
  const HelmholtzResult h = solve_helmholtz_adlr(prob, ao);
  progress << "helmholtz: " << h.sweeps << " sweeps, residual " << h.residual << "\n";
  if (out.wants("C")) out.field("C", h.C);
  if (out.wants("psi")) out.field("psi", prob.dp.psi);
  out.text("report.txt", "sweeps " + std::to_string(h.sweeps) + "\nresidual " + fmt(h.residual) +
                             "\nconverged " + (h.converged ? "true" : "false") + "\n");
  if (!h.converged) throw SolverError("line relaxation did not reach tol " + fmt(ao.tol));
}

std::string contour_csv(const ScalarField& phi, const DomainParameter& dp) {
  std::string s = "x,y\n";
  for (const auto& q : phase_contour(phi, dp)) s += fmt(q[0]) + "," + fmt(q[1]) + "\n";
  return s;
}

void run_phase_field(const RunConfig& c, RunLog& log, Outputs& out, std::ostream& progress) {
  const PhaseDynamics dyn =
      c.solver == SolverKind::allen_cahn ? PhaseDynamics::allen_cahn : PhaseDynamics::cahn_hilliard;
  const Grid g = resolve_grid(c, log);
  const Section p(c.physics, "physics", log);
  PhaseFieldState s;
  s.dp = domain_from_config(c.domain, g, c.base_dir, log);
  s.box = box_from_config(c.box, log);
  const auto [w, eps] = well_for_width(p.number("delta_phi", 1.4142135623730951));
  s.w = w;
  s.epsilon = eps;
  s.M = p.number("M", 1.0);
  s.theta = p.number("theta", 90.0) * std::acos(-1.0) / 180.0;
  if (dyn == PhaseDynamics::cahn_hilliard) s.J_n = p.number("J_n", 0.0);
  s.upsilon = p.number("upsilon", 1e-7);
  s.guard = guard_value(p);
  if (p.has("theta_split")) {
    const json& ts = p.raw()["theta_split"];
    check_keys(ts, {"axis", "position", "below", "above"}, "physics.theta_split");
    const Section t(ts, "physics.theta_split", log);
    const int axis = axis_value(t, "axis", g);
    const double at = t.number("position");
    const double lo = t.number("below") * std::acos(-1.0) / 180.0;
    const double hi = t.number("above") * std::acos(-1.0) / 180.0;
    s.theta_map.resize(g.size());
    for (Index q = 0; q < g.size(); ++q) s.theta_map[q] = g.position(q)[axis] < at ? lo : hi;
  }
  // Phase 1 inside the initial shape, with the flat equilibrium profile.
  require(c.initial.is_object(), "initial is required for phase-field runs");
  const Section init(c.initial, "initial", log);
  const std::string shape = init.text("shape");
  ScalarField dist(g);
  if (shape == "sphere") {
    dist = sphere_distance(g, point(init, "centre", g), init.number("radius"));
  } else if (shape == "halfspace") {
    dist = halfspace_distance(g, axis_value(init, "axis", g), init.number("position"),
                              init.boolean("inside_above", false));
  } else {
    throw InvalidArgument("initial.shape must be sphere or halfspace");
  }
  s.phi = ScalarField(g);
  for (Index q = 0; q < g.size(); ++q) s.phi[q] = equilibrium_profile(-dist[q], s.w, s.epsilon);
  s.validate();
  const double dt = p.number("dt", 0.0), safety = p.number("safety", 0.5);
  const double t_end = p.number("t_end", 100.0);
  PhaseFieldStepper stepper(s, dyn, dt, safety);
  log.record("dt", fmt(stepper.dt()), dt == 0.0);
  start_outputs(out);
  progress << to_string(dyn) << ": dt = " << stepper.dt() << ", "
           << step_count(t_end, stepper.dt()) << " steps\n";
  const ScalarField phi0 = s.phi;
  Eigen::ArrayXd x = s.phi.values();
  march(t_end, stepper.dt(), out.cadence, [&] { stepper.step(x); },
        [&](int k, double t) {
          const ScalarField phi(g, x);
          if (g.ndim() == 2) out.text("contour_" + std::to_string(k) + ".csv", contour_csv(phi, s.dp));
          if (out.wants("phi")) out.field("phi", phi, "phi_" + std::to_string(k));
          progress << "  t = " << t << "\n";
        });
  s.phi = ScalarField(g, x);
  if (out.wants("phi")) out.field("phi", s.phi);
  if (out.wants("psi")) out.field("psi", s.dp.psi);
  if (out.wants("mu")) out.field("mu", sbm_chemical_potential(s));
  if (g.ndim() == 2) out.text("contour.csv", contour_csv(s.phi, s.dp));
  std::string report = "steps " + std::to_string(stepper.steps()) + "\nt " +
                       fmt(stepper.steps() * stepper.dt()) + "\nconservation " +
                       fmt(conservation_metric(s.phi, phi0, s.dp)) + "\n";
  try {
    const ContactAngle ca = measure_contact_angle(s.phi, s.dp);
    report += "mean_cos " + fmt(ca.mean_cos) + "\nangle_deg " +
              fmt(180.0 - ca.angle * 180.0 / std::acos(-1.0)) + "\nband_nodes " +
              std::to_string(ca.count) + "\n";
  } catch (const InvalidArgument&) {
    report += "angle_deg none (no contact line)\n";
  }
  out.text("report.txt", report);
}

IsotropicMaterial material_from(const json& m, const std::string& where, RunLog& log) {
  check_keys(m, {"E", "nu", "rho"}, where);
  const Section s(m, where, log);
  return lame_from_engineering(s.number("E"), s.number("nu"), s.number("rho", 0.0));
}

std::string phase_stats(const ScalarField& v, const ScalarField& psi, const std::string& label) {
  double lo = 1e300, hi = -1e300, sum = 0.0, vol = 0.0;
  const Grid& g = v.grid();
  for (Index p = 0; p < g.size(); ++p) {
    if (psi[p] < 0.5) continue;
    lo = std::min(lo, v[p]);
    hi = std::max(hi, v[p]);
    sum += v[p] * g.node_volume(p);
    vol += g.node_volume(p);
  }
  if (vol == 0.0) return label + " empty\n";
  return label + " min " + fmt(lo) + " max " + fmt(hi) + " mean " + fmt(sum / vol) + "\n";
}

void run_elasticity(const RunConfig& c, RunLog& log, Outputs& out, std::ostream& progress) {
  const Grid g = resolve_grid(c, log);
  const Section p(c.physics, "physics", log);
  ElasticProblem prob;
  prob.dp1 = domain_from_config(c.domain, g, c.base_dir, log);
  if (!c.domain2.is_null()) prob.dp2 = domain_from_config(c.domain2, g, c.base_dir, log, "domain2");
  require(p.has("materials") && p.raw()["materials"].is_array() &&
              !p.raw()["materials"].empty() && p.raw()["materials"].size() <= 2,
          "physics.materials must list one or two materials {E, nu, rho}");
  const json& mats = p.raw()["materials"];
  prob.mat1 = material_from(mats[0], "physics.materials[0]", log);
  prob.mat2 = mats.size() > 1 ? material_from(mats[1], "physics.materials[1]", log) : prob.mat1;
  require(!c.domain2.is_null() || mats.size() == 1, "a second material needs domain2");
  prob.upsilon = p.number("upsilon", 1e-16);
  prob.box_bcs = rigid_frictionless_box();
  log.record("box", "rigid frictionless (u_a = 0 on faces normal to a)", true);
  ElasticOptions eo;
  eo.tol = p.number("tol", eo.tol);
  eo.change_tol = p.number("change_tol", eo.change_tol);
  eo.max_sweeps = p.integer("max_sweeps", eo.max_sweeps);
  prob.validate();
  start_outputs(out);
  const ElasticResult r = solve_displacements_adlr(prob, eo);
  progress << "elasticity: " << r.sweeps << " sweeps, residual " << r.residual << "\n";
  const SymTensorField sigma = compute_stress(r.u, prob);
  const char* axes = "xyz";
  for (int a = 0; a < g.ndim(); ++a) {
    const std::string name = std::string("u_") + axes[a];
    if (out.wants(name)) out.field(name, ScalarField(g, r.u(a)));
    for (int b = a; b < g.ndim(); ++b) {
      const std::string sname = std::string("sigma_") + axes[a] + axes[b];
      if (out.wants(sname)) out.field(sname, ScalarField(g, sigma(a, b)));
    }
  }
  ScalarField sm(g);
  if (g.ndim() == 3) {
    sm = mean_stress(sigma);
  } else {
    Eigen::ArrayXd tr = Eigen::ArrayXd::Zero(g.size());
    for (int a = 0; a < g.ndim(); ++a) tr += sigma(a, a);
    sm = ScalarField(g, Eigen::ArrayXd(tr / g.ndim()));
  }
  if (out.wants("sigma_m")) out.field("sigma_m", sm);
  if (out.wants("psi")) out.field("psi", prob.dp1.psi);
  if (out.wants("psi2") && !c.domain2.is_null()) out.field("psi2", prob.dp2.psi);
  std::string report = "sweeps " + std::to_string(r.sweeps) + "\nresidual " + fmt(r.residual) +
                       "\n" + (g.ndim() == 3 ? "" : "sigma_m is the in-plane mean\n");
  report += phase_stats(sm, prob.dp1.psi, "sigma_m phase1");
  if (!c.domain2.is_null()) report += phase_stats(sm, prob.dp2.psi, "sigma_m phase2");
  out.text("report.txt", report);
}

void run_smooth(const RunConfig& c, RunLog& log, Outputs& out, std::ostream& progress) {
  require(c.domain.is_object() && c.domain.value("shape", "") == "voxels",
          "smooth_voxels needs a voxels domain");
  const Grid g = resolve_grid(c, log);
  const DomainParameter dp = domain_from_config(c.domain, g, c.base_dir, log);
  start_outputs(out);
  if (out.wants("psi")) out.field("psi", dp.psi);
  if (out.wants("labels"))
    out.field("labels", load_voxels(resolve(c.base_dir, c.domain["file"].get<std::string>())));
  const InterfaceMetrics m = interface_metrics(dp);
  progress << "smooth_voxels: thickness " << m.thickness << ", area " << m.area << "\n";
  out.text("interface_metrics.txt", "max_grad " + fmt(m.max_grad) + "\nthickness " +
                                        fmt(m.thickness) + "\narea " + fmt(m.area) +
                                        "\nprobes " + std::to_string(m.probes) + "\n");
}

int run_suites(const RunConfig& c, RunLog& log, Outputs& out, std::ostream& progress) {
  const Section p(c.physics, "physics", log);
  const std::string name = p.text("name", "all");
  SuiteOptions o;
  o.full = p.boolean("full", false);
  o.workers = p.integer("workers", 1);
  require(o.workers >= 1, "physics.workers must be >= 1");
  std::vector<std::string> names = suite_names();
  if (name != "all") {
    require(std::find(names.begin(), names.end(), name) != names.end(),
            "physics.name must be all or one of table1, table2, table3, boundary, elasticity, "
            "kernels");
    names = {name};
  }
  start_outputs(out);
  bool trends = true;
  std::string all_summary;
  for (const auto& n : names) {
    progress << "suite " << n << " ..." << std::endl;
    const SuiteReport r = run_suite(n, o);
    out.text(n + ".csv", to_csv(r));
    out.text(n + "_trends.csv", trends_to_csv(r));
    const std::string sum = summary(r);
    progress << sum << std::flush;
    all_summary += sum;
    trends = trends && r.trends_pass();
  }
  // The summary carries wall times, so it stays out of the byte-compared CSVs.
  out.text("summary.txt", all_summary);
  return trends ? exit_ok : exit_validation;
}

int levenshtein(const std::string& a, const std::string& b) {
  std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] != b[j - 1])});
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace

const char* to_string(SolverKind k) {
  switch (k) {
    case SolverKind::diffusion: return "diffusion";
    case SolverKind::surface_bulk: return "surface_bulk";
    case SolverKind::helmholtz: return "helmholtz";
    case SolverKind::allen_cahn: return "allen_cahn";
    case SolverKind::cahn_hilliard: return "cahn_hilliard";
    case SolverKind::elasticity: return "elasticity";
    case SolverKind::smooth_voxels: return "smooth_voxels";
    case SolverKind::suite: return "suite";
  }
  return "diffusion";
}

SolverKind solver_kind_from_string(const std::string& s) {
  for (const auto& [k, keys] : kPhysicsKeys)
    if (s == to_string(k)) return k;
  std::vector<std::string> names;
  for (const auto& [k, keys] : kPhysicsKeys) names.push_back(to_string(k));
  std::string msg = "unknown solver '" + s + "'";
  const std::string hint = nearest_key(s, names);
  if (!hint.empty()) msg += "; did you mean '" + hint + "'?";
  throw InvalidArgument(msg);
}

void RunLog::record(const std::string& key, const std::string& value, bool defaulted) {
  lines.push_back(key + " = " + value + (defaulted ? "  (default)" : ""));
}

std::string RunLog::text() const {
  std::string s;
  for (const auto& l : lines) s += l + "\n";
  return s;
}

std::string nearest_key(const std::string& key, const std::vector<std::string>& candidates) {
  std::string best;
  int best_d = 1 << 30;
  for (const auto& c : candidates) {
    const int d = levenshtein(key, c);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  // Only suggest plausible typos.
  const int limit = std::max(2, static_cast<int>(key.size()) / 3);
  return best_d <= limit ? best : "";
}

Grid grid_from_config(const json& j, RunLog& log) {
  require(j.is_object(), "grid section is required");
  check_keys(j, kGridKeys, "grid");
  const Section s(j, "grid", log);
  const std::vector<double> dims = s.numbers("dims");
  require(!dims.empty() && dims.size() <= 3, "grid.dims needs 1 to 3 entries");
  const std::vector<double> spacing = s.numbers("spacing");
  const std::vector<double> origin = s.numbers("origin", std::vector<double>(dims.size(), 0.0));
  std::vector<int> idims;
  for (double d : dims) {
    require(d >= 1 && d == std::floor(d), "grid.dims must be positive integers");
    idims.push_back(static_cast<int>(d));
  }
  return Grid(idims, spacing, origin, coord_system_from_string(s.text("coord_system", "cartesian")));
}

DomainParameter domain_from_config(const json& j, const Grid& g, const std::string& base_dir,
                                   RunLog& log, const std::string& prefix) {
  require(j.is_object(), prefix + " section is required");
  const Section s(j, prefix, log);
  const std::string shape = s.text("shape");
  const auto it = kShapeKeys.find(shape);
  require(it != kShapeKeys.end(),
          prefix + ".shape must be uniform, halfspace, slab, sphere or voxels");
  check_keys(j, it->second, prefix);
  if (shape == "uniform") return DomainParameter::uniform(g, s.number("value", 1.0));
  const double zeta = s.number("zeta", 1.0);
  if (shape == "halfspace")
    return tanh_from_distance(halfspace_distance(g, axis_value(s, "axis", g), s.number("position"),
                                                 s.boolean("inside_above", true)),
                              zeta);
  if (shape == "slab")
    return tanh_from_distance(
        slab_distance(g, axis_value(s, "axis", g), s.number("lo"), s.number("hi")), zeta);
  if (shape == "sphere") {
    ScalarField d = sphere_distance(g, point(s, "centre", g), s.number("radius"));
    if (s.boolean("invert", false)) d.values() = -d.values();
    return tanh_from_distance(d, zeta);
  }
  // voxels
  const std::string file = resolve(base_dir, s.text("file"));
  const ScalarField labels = load_voxels(file);
  require(labels.grid() == g, prefix + ": voxel grid differs from the run grid");
  std::vector<int> inside;
  for (double v : s.numbers("inside_labels", std::vector<double>{1.0})) inside.push_back(static_cast<int>(v));
  ReinitOptions ro;
  ro.steps = s.integer("steps", ro.steps);
  ro.band_width = s.number("band_width", ro.band_width);
  const SignedDistance sd = reinitialize_distance(sign_from_labels(labels, inside), ro);
  log.record(prefix + ".reinit_residual", fmt(sd.residual), false);
  return tanh_from_distance(sd, zeta);
}

BoxClosure box_from_config(const json& j, RunLog& log) {
  BoxClosure box;
  if (j.is_null()) {
    log.record("box.default", "zero_gradient", true);
    return box;
  }
  check_keys(j, kBoxKeys, "box");
  auto face = [&](const json& f, const std::string& where) {
    if (f.is_string()) {
      require(f.get<std::string>() == "zero_gradient",
              where + " must be \"zero_gradient\", {\"fixed_value\": v} or {\"fixed_gradient\": g}");
      log.record(where, "zero_gradient", false);
      return FaceClosure::zero_gradient();
    }
    require(f.is_object() && f.size() == 1,
            where + " must be \"zero_gradient\", {\"fixed_value\": v} or {\"fixed_gradient\": g}");
    check_keys(f, {"fixed_value", "fixed_gradient"}, where);
    const auto& [kind, v] = *f.items().begin();
    require(v.is_number(), where + "." + kind + " must be a number");
    log.record(where, kind + " " + fmt(v.get<double>()), false);
    return kind == "fixed_value" ? FaceClosure::fixed_value(v.get<double>())
                                 : FaceClosure::fixed_gradient(v.get<double>());
  };
  if (j.contains("default")) box = BoxClosure::all(face(j["default"], "box.default"));
  else log.record("box.default", "zero_gradient", true);
  const char* axes = "xyz";
  for (int a = 0; a < 3; ++a)
    for (Side side : {Side::lo, Side::hi}) {
      const std::string key = std::string(1, axes[a]) + (side == Side::lo ? "_lo" : "_hi");
      if (j.contains(key)) box.set(a, side, face(j[key], "box." + key));
    }
  return box;
}

RunConfig parse_run_config(const json& j, const std::string& base_dir) {
  check_keys(j, kTopKeys, "config");
  require(j.contains("solver") && j["solver"].is_string(), "config.solver is required");
  RunConfig c;
  c.solver = solver_kind_from_string(j["solver"].get<std::string>());
  c.base_dir = base_dir;
  auto take = [&](const char* key) { return j.contains(key) ? j[key] : json(); };
  c.grid = take("grid");
  c.domain = take("domain");
  c.domain2 = take("domain2");
  c.initial = take("initial");
  c.physics = take("physics");
  c.box = take("box");
  c.output = take("output");

  if (!c.physics.is_null()) check_keys(c.physics, kPhysicsKeys.at(c.solver), "physics");
  if (!c.output.is_null()) check_keys(c.output, kOutputKeys, "output");
  if (!c.grid.is_null()) check_keys(c.grid, kGridKeys, "grid");
  if (!c.box.is_null()) check_keys(c.box, kBoxKeys, "box");
  for (const auto* d : {&c.domain, &c.domain2}) {
    if (d->is_null()) continue;
    require(d->is_object() && d->contains("shape") && (*d)["shape"].is_string(),
            "domain sections need a string 'shape'");
    const auto it = kShapeKeys.find((*d)["shape"].get<std::string>());
    require(it != kShapeKeys.end(), "domain.shape must be uniform, halfspace, slab, sphere or voxels");
    check_keys(*d, it->second, d == &c.domain ? "domain" : "domain2");
    if (it->first == "voxels") {
      require(d->contains("file") && (*d)["file"].is_string(), "voxels domain needs 'file'");
      const std::string f = resolve(base_dir, (*d)["file"].get<std::string>());
      require(fs::exists(f), "voxel file '" + f + "' does not exist");
    }
  }
  if (!c.initial.is_null()) {
    const bool phase = c.solver == SolverKind::allen_cahn || c.solver == SolverKind::cahn_hilliard;
    check_keys(c.initial, phase ? kPhaseInitialKeys : std::vector<std::string>{"value"}, "initial");
  }
  const bool needs_domain = c.solver != SolverKind::suite;
  require(!needs_domain || c.domain.is_object(), "config.domain is required for this solver");
  require(!needs_domain || c.grid.is_object() ||
              (c.domain.is_object() && c.domain.value("shape", "") == "voxels"),
          "config.grid is required unless the domain is a voxel file");
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& ex) {
    throw InvalidArgument("config '" + path + "': " + ex.what());
  }
  return parse_run_config(j, fs::path(path).parent_path().string().empty()
                                 ? "."
                                 : fs::path(path).parent_path().string());
}

RunOutcome run_config(const RunConfig& c, std::ostream& progress) {
  RunOutcome outcome;
  RunLog log;
  log.record("solver", to_string(c.solver), false);
  Outputs out;
  bool started = false;
  try {
    out = outputs_from(c, log, outcome);
    started = true;
    switch (c.solver) {
      case SolverKind::diffusion: run_diffusion(c, log, out, progress); break;
      case SolverKind::surface_bulk: run_surface_bulk(c, log, out, progress); break;
      case SolverKind::helmholtz: run_helmholtz(c, log, out, progress); break;
      case SolverKind::allen_cahn:
      case SolverKind::cahn_hilliard: run_phase_field(c, log, out, progress); break;
      case SolverKind::elasticity: run_elasticity(c, log, out, progress); break;
      case SolverKind::smooth_voxels: run_smooth(c, log, out, progress); break;
      case SolverKind::suite: outcome.exit_code = run_suites(c, log, out, progress); break;
    }
    if (outcome.exit_code == exit_validation) outcome.message = "trend assertions failed";
  } catch (const InvalidArgument& ex) {
    outcome.exit_code = exit_config;
    outcome.message = ex.what();
  } catch (const IoError& ex) {
    outcome.exit_code = exit_config;
    outcome.message = ex.what();
  } catch (const SolverError& ex) {
    outcome.exit_code = exit_solver;
    outcome.message = ex.what();
  }
  if (started && fs::is_directory(out.dir)) {
    const std::string p = (out.dir / "run.log").string();
    try {
      write_text(p, log.text());
      outcome.artifacts.push_back(p);
    } catch (const IoError&) {
    }
  }
  return outcome;
}

RunOutcome run_config_file(const std::string& path, std::ostream& progress) {
  try {
    return run_config(load_run_config(path), progress);
  } catch (const InvalidArgument& ex) {
    return {exit_config, {}, ex.what()};
  }
}

}  // namespace sbm
