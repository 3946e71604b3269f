#include "daeh/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>

#include "daeh/report.hpp"

namespace daeh::cli {

using report::Json;

namespace {

struct RunConfig {
  std::string subcommand;
  std::string builtin;
  std::string problem_file;
  std::string reproduce_id;
  double lambda = 0.01;
  double lambda_max = 1.0;
  std::string box_text;
  double tol_newton = 1e-12;
  double tol_shoot = 1e-9;
  double tol_res = 1e-7;
  double tol_ode = 1e-12;
  double tol_rank = 1e-10;
  double tol_boundary = 1e-6;
  int grid = 16;
  std::uint64_t seed = 0;
  std::string out;
  std::string x0_text;
  double t0 = 0.0;
  std::optional<double> t1;
  std::optional<double> t;
  int samples = 65;
  int zero_index = -1;
};

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      out.push_back(expr::Expr::parse(tok).eval({}));
    } catch (const Error&) {
      fail(ErrorKind::Usage, std::string("cannot read ") + what + " entry '" + tok + "'");
    }
  }
  return out;
}

double parse_bound(std::string tok) {
  tok.erase(0, tok.find_first_not_of(' '));
  tok.erase(tok.find_last_not_of(' ') + 1);
  if (tok == "inf" || tok == "+inf") return std::numeric_limits<double>::infinity();
  if (tok == "-inf") return -std::numeric_limits<double>::infinity();
  try {
    return expr::Expr::parse(tok).eval({});
  } catch (const Error&) {
    fail(ErrorKind::Usage, "cannot read box bound '" + tok + "'");
  }
}

// "lo,hi;lo,hi;..."
Box parse_box(const std::string& text) {
  Box b;
  std::stringstream ss(text);
  std::string side;
  while (std::getline(ss, side, ';')) {
    const auto comma = side.find(',');
    if (comma == std::string::npos) fail(ErrorKind::Usage, "box side '" + side + "' must be lo,hi");
    b.bounds.push_back({parse_bound(side.substr(0, comma)), parse_bound(side.substr(comma + 1))});
  }
  return b;
}

struct Context {
  RunConfig cfg;
  Json config;
  std::vector<std::pair<std::string, std::string>> csvs;  // suffix, content
};

DaeProblem load_problem(const RunConfig& cfg) {
  if (!cfg.builtin.empty() && !cfg.problem_file.empty()) {
    fail(ErrorKind::Usage, "give either --builtin or --problem, not both");
  }
  if (!cfg.builtin.empty()) return builtin(cfg.builtin);
  if (!cfg.problem_file.empty()) return load_problem_file(cfg.problem_file);
  fail(ErrorKind::Usage, "a problem is required: --builtin <name> or --problem <file>");
}

Box resolve_box(const DaeProblem& prob, const RunConfig& cfg) {
  Box b = cfg.box_text.empty() ? prob.box() : degree::bounded_box(prob, parse_box(cfg.box_text));
  if (b.dim() != prob.n()) fail(ErrorKind::Usage, "--box needs k + s = " + std::to_string(prob.n()) + " sides");
  if (b.empty()) fail(ErrorKind::Usage, "--box is empty");
  return b;
}

void check_tolerances(const RunConfig& c) {
  for (double v : {c.tol_newton, c.tol_shoot, c.tol_res, c.tol_ode, c.tol_rank, c.tol_boundary}) {
    if (!(v > 0.0)) fail(ErrorKind::Usage, "tolerances must be positive");
  }
  if (c.grid < 1) fail(ErrorKind::Usage, "--grid must be positive");
  if (c.lambda < 0.0) fail(ErrorKind::Usage, "--lambda must be nonnegative");
  if (c.samples < 2) fail(ErrorKind::Usage, "--samples must be at least 2");
}

Json base_config(const RunConfig& c) {
  Json j;
  j["subcommand"] = c.subcommand;
  if (!c.reproduce_id.empty()) j["example"] = c.reproduce_id;
  if (!c.builtin.empty()) j["builtin"] = c.builtin;
  if (!c.problem_file.empty()) j["problem"] = c.problem_file;
  j["lambda"] = c.lambda;
  j["lambda_max"] = c.lambda_max;
  j["tol"] = Json{{"newton", c.tol_newton}, {"shoot", c.tol_shoot}, {"resonance", c.tol_res},
                  {"ode", c.tol_ode},       {"rank", c.tol_rank},   {"boundary", c.tol_boundary}};
  j["grid"] = c.grid;
  j["seed"] = c.seed;
  return j;
}

flow::IntegrateOptions integrate_options(const RunConfig& c) {
  flow::IntegrateOptions io;
  io.rtol = c.tol_ode;
  io.atol = c.tol_ode;
  io.sample_count = c.samples;
  return io;
}

degree::ZeroSearchOptions search_options(const RunConfig& c) {
  degree::ZeroSearchOptions o;
  o.grid_per_dim = c.grid;
  o.newton_tol = c.tol_newton;
  o.seed = c.seed;
  return o;
}

degree::DegreeOptions degree_options(const RunConfig& c) {
  degree::DegreeOptions o;
  o.search = search_options(c);
  o.boundary_tol = c.tol_boundary;
  return o;
}

continuation::BranchOptions branch_options(const RunConfig& c, const std::vector<degree::ZeroRecord>& zeros) {
  continuation::BranchOptions o;
  o.shoot.tol = c.tol_shoot;
  o.shoot.poincare.integrate.rtol = c.tol_ode;
  o.shoot.poincare.integrate.atol = c.tol_ode;
  o.zeros = zeros;
  return o;
}

resonance::ResonanceOptions resonance_options(const RunConfig& c) {
  resonance::ResonanceOptions o;
  o.res_tol = c.tol_res;
  return o;
}

Vector resolve_x0(const DaeProblem& prob, const Box& box, const RunConfig& c, Json& config) {
  Vector x0;
  if (c.x0_text.empty()) {
    const Vector center = box.center();
    x0.assign(center.begin(), center.begin() + static_cast<std::ptrdiff_t>(prob.k()));
  } else {
    x0 = parse_list(c.x0_text, "--x0");
  }
  if (x0.size() != prob.k()) fail(ErrorKind::Usage, "--x0 needs k = " + std::to_string(prob.k()) + " entries");
  config["x0"] = report::vec(x0);
  return x0;
}

std::vector<degree::ZeroRecord> non_resonant(const DaeProblem& prob, const std::vector<degree::ZeroRecord>& zs,
                                             const RunConfig& c) {
  std::vector<degree::ZeroRecord> out;
  for (const auto& z : zs) {
    if (!resonance::is_T_resonant(prob, z.z, prob.period(), resonance_options(c)).resonant) out.push_back(z);
  }
  return out;
}

// --------------------------------------------------------------- commands

Json cmd_integrate(Context& ctx) {
  const auto prob = load_problem(ctx.cfg);
  const Box box = resolve_box(prob, ctx.cfg);
  ctx.config["box"] = report::box(box);
  const Vector x0 = resolve_x0(prob, box, ctx.cfg, ctx.config);
  const double t1 = ctx.cfg.t1.value_or(ctx.cfg.t0 + prob.period());
  ctx.config["t0"] = ctx.cfg.t0;
  ctx.config["t1"] = t1;
  ctx.config["samples"] = ctx.cfg.samples;
  if (!(t1 > ctx.cfg.t0)) fail(ErrorKind::Usage, "--t1 must exceed --t0");
  const auto start = manifold::project(prob, x0, flow::default_q_guess(prob));
  const auto traj = flow::integrate(prob, ctx.cfg.lambda, start, ctx.cfg.t0, t1, integrate_options(ctx.cfg));
  ctx.csvs.emplace_back("trajectory", flow::trajectory_csv(traj, prob.k(), prob.s()));
  return Json{{"trajectory", report::trajectory_summary(traj)}};
}

Json cmd_phi_a(Context& ctx) {
  const auto prob = load_problem(ctx.cfg);
  const double t = ctx.cfg.t.value_or(prob.period());
  ctx.config["t"] = t;
  return Json{{"t", t}, {"phi_a", flow::phi_a(prob, t)}, {"period", prob.period()}, {"a_mean", prob.a_mean()}};
}

Json cmd_zeros(Context& ctx) {
  const auto prob = load_problem(ctx.cfg);
  const Box box = resolve_box(prob, ctx.cfg);
  ctx.config["box"] = report::box(box);
  const auto r = degree::find_zeros(prob, box, search_options(ctx.cfg));
  Json zs = Json::array();
  for (const auto& z : r.zeros) zs.push_back(report::zero(z));
  return Json{{"zeros", zs}, {"starts", r.starts}, {"left_box", r.left_box}, {"not_converged", r.not_converged},
              {"warnings", r.warnings}};
}

Json cmd_degree(Context& ctx) {
  const auto prob = load_problem(ctx.cfg);
  const Box box = resolve_box(prob, ctx.cfg);
  ctx.config["box"] = report::box(box);
  const auto d = degree::degree(prob, box, degree_options(ctx.cfg));
  const auto psi = degree::degree_psi(prob, d.zeros);
  return Json{{"degree", report::degree_report(d)}, {"degree_psi", report::psi_report(psi)}};
}

Json cmd_resonance(Context& ctx) {
  const auto prob = load_problem(ctx.cfg);
  const Box box = resolve_box(prob, ctx.cfg);
  ctx.config["box"] = report::box(box);
  const auto zs = degree::find_zeros(prob, box, search_options(ctx.cfg)).zeros;
  Json out = Json::array();
  for (const auto& z : zs) {
    const auto r = resonance::is_T_resonant(prob, z.z, prob.period(), resonance_options(ctx.cfg));
    Json j = report::resonance_report(r);
    if (std::abs(prob.a_mean() - 1.0) <= 1e-9) {
      j["prop_4_1"] = report::prop41(resonance::check_prop_4_1(prob, r.phi, prob.period()));
    }
    out.push_back(j);
  }
  return Json{{"period", prob.period()}, {"a_mean", prob.a_mean()}, {"zeros", out}};
}

Json cmd_periodic(Context& ctx) {
  const auto prob = load_problem(ctx.cfg);
  const Box box = resolve_box(prob, ctx.cfg);
  ctx.config["box"] = report::box(box);
  const Vector x0 = resolve_x0(prob, box, ctx.cfg, ctx.config);
  continuation::ShootOptions so = branch_options(ctx.cfg, {}).shoot;
  const auto orb = continuation::find_periodic(prob, ctx.cfg.lambda, x0, so);
  ctx.csvs.emplace_back("orbit", flow::trajectory_csv(orb.orbit, prob.k(), prob.s()));
  return Json{{"orbit", report::orbit(orb)}};
}

const degree::ZeroRecord& pick_zero(const std::vector<degree::ZeroRecord>& zs, int index) {
  if (zs.empty()) fail(ErrorKind::Usage, "no non-resonant zero of F in the box");
  if (index < 0) return zs.front();
  if (static_cast<std::size_t>(index) >= zs.size()) {
    fail(ErrorKind::Usage, "--zero " + std::to_string(index) + " out of range (" + std::to_string(zs.size()) +
                               " non-resonant zeros)");
  }
  return zs[static_cast<std::size_t>(index)];
}

Json cmd_branch(Context& ctx) {
  const auto prob = load_problem(ctx.cfg);
  const Box box = resolve_box(prob, ctx.cfg);
  ctx.config["box"] = report::box(box);
  const auto zs = degree::find_zeros(prob, box, search_options(ctx.cfg)).zeros;
  const auto nr = non_resonant(prob, zs, ctx.cfg);
  const auto& origin = pick_zero(nr, ctx.cfg.zero_index);
  ctx.config["zero"] = std::max(ctx.cfg.zero_index, 0);
  const auto br = continuation::continue_branch(prob, origin, ctx.cfg.lambda_max, branch_options(ctx.cfg, zs));
  ctx.csvs.emplace_back("branch", continuation::branch_csv(br, prob.k()));
  Json j = report::branch(br);
  j["caveat"] = "a finite branch sample cannot certify unboundedness";
  return Json{{"branch", j}};
}

Json cmd_multiplicity(Context& ctx) {
  const auto prob = load_problem(ctx.cfg);
  const Box box = resolve_box(prob, ctx.cfg);
  ctx.config["box"] = report::box(box);
  const auto zs = degree::find_zeros(prob, box, search_options(ctx.cfg)).zeros;
  const auto nr = non_resonant(prob, zs, ctx.cfg);
  continuation::MultiplicityOptions mo;
  mo.branch = branch_options(ctx.cfg, zs);
  mo.degree = degree_options(ctx.cfg);
  return Json{{"multiplicity", report::multiplicity(continuation::multiplicity_scan(prob, ctx.cfg.lambda, nr, box, mo))}};
}

Json svd_section(const svd::ImplicitLinearDae& dae, const RunConfig& cfg, Context& ctx) {
  svd::ReduceOptions ro;
  ro.rank_tol = cfg.tol_rank;
  const auto red = svd::reduce(dae, ro);
  const auto inv = svd::a22_rank_invariance_check(dae, 5, cfg.seed == 0 ? 1 : cfg.seed, ro);
  Vector x0(red.reduced.k(), 0.1);
  const auto start = manifold::project(red.reduced, x0, Vector(red.reduced.s(), 0.0));
  flow::IntegrateOptions io = integrate_options(cfg);
  io.sample_count = 1025;
  const auto traj = flow::integrate(red.reduced, cfg.lambda, start, 0.0, dae.period, io);
  ctx.csvs.emplace_back("reduced_trajectory", flow::trajectory_csv(traj, red.reduced.k(), red.reduced.s()));
  Json j = report::svd_reduction(red);
  j["a22_ranks"] = inv.ranks;
  j["a22_rank_invariant"] = inv.invariant;
  j["roundtrip_residual"] = svd::roundtrip_residual(dae, red, cfg.lambda, traj);
  j["roundtrip_max_g_residual"] = traj.max_g_residual;
  return j;
}

Json cmd_reduce_svd(Context& ctx) {
  const svd::ImplicitLinearDae dae =
      ctx.cfg.problem_file.empty() ? svd::constructed_example() : svd::load_implicit_file(ctx.cfg.problem_file);
  if (ctx.cfg.problem_file.empty()) ctx.config["problem"] = "constructed 5x5 rank-3 example";
  return Json{{"reduction", svd_section(dae, ctx.cfg, ctx)}};
}

// ------------------------------------------------------------- reproduce

Box box_of(std::initializer_list<std::pair<double, double>> sides) {
  Box b;
  for (auto [lo, hi] : sides) b.bounds.push_back({lo, hi});
  return b;
}

Json time_reparam_check(const DaeProblem& prob, std::span<const double> x0) {
  flow::PoincareOptions po;
  po.with_monodromy = false;
  const auto with_a = flow::poincare_T(prob, 0.0, x0, po);
  po.horizon = flow::phi_a(prob, prob.period());
  const auto unit = flow::poincare_T(prob.with_unit_drift(), 0.0, x0, po);
  double d = 0.0;
  for (std::size_t i = 0; i < x0.size(); ++i) d = std::max(d, std::abs(with_a.p_t[i] - unit.p_t[i]));
  return Json{{"x0", report::vec(x0)}, {"P_aPsi_T", report::vec(with_a.p_t)},
              {"P_Psi_phiT", report::vec(unit.p_t)}, {"difference", d}};
}

Json zero_analysis(const DaeProblem& prob, const degree::DegreeReport& d, const RunConfig& cfg) {
  Json out = Json::array();
  for (const auto& z : d.zeros) {
    const auto r = resonance::is_T_resonant(prob, z.z, prob.period(), resonance_options(cfg));
    Json j = report::resonance_report(r);
    if (std::abs(prob.a_mean() - 1.0) <= 1e-9 && !r.resonant) {
      j["prop_4_1"] = report::prop41(resonance::check_prop_4_1(prob, r.phi, prob.period()));
    }
    out.push_back(j);
  }
  return out;
}

Json indices_of(const degree::DegreeReport& d) {
  Json a = Json::array();
  for (const auto& z : d.zeros) a.push_back(z.index ? Json(*z.index) : Json("unknown"));
  return a;
}

Json cmd_reproduce(Context& ctx) {
  const std::string& id = ctx.cfg.reproduce_id;
  const RunConfig& cfg = ctx.cfg;
  Json r;
  if (id == "example-3-7") {
    const auto prob = builtin(id);
    const Box box = box_of({{-0.99, 5.0}, {-5.0, 5.0}});
    ctx.config["box"] = report::box(box);
    r["integral_a_over_b"] = flow::phi_a(prob, prob.period());
    r["closed_form_2_ln_3"] = 2.0 * std::log(3.0);
    const auto d = degree::degree(prob, box, degree_options(cfg));
    r["zeros"] = report::degree_report(d)["zeros"];
    r["degree"] = d.total_degree ? Json(*d.total_degree) : Json("unknown");
    r["degree_stable"] = d.stable;
    r["boundary_min"] = d.boundary_min_norm;
    r["degree_psi"] = degree::degree_psi(prob, d.zeros).total;
    r["resonance"] = zero_analysis(prob, d, cfg);
    const Vector x0{0.5};
    r["time_reparametrization"] = time_reparam_check(prob, x0);
  } else if (id == "example-4-6") {
    const auto prob = builtin(id);
    const Box box = box_of({{-1.49, 5.0}, {-1.49, 5.0}});
    ctx.config["box"] = report::box(box);
    const auto d = degree::degree(prob, box, degree_options(cfg));
    r["zeros"] = report::degree_report(d)["zeros"];
    r["indices"] = indices_of(d);
    r["total_degree"] = d.total_degree ? Json(*d.total_degree) : Json("unknown");
    r["degree_stable"] = d.stable;
    r["degree_psi"] = report::psi_report(degree::degree_psi(prob, d.zeros));
    r["resonance"] = zero_analysis(prob, d, cfg);
    const Vector x0{1.0};
    r["time_reparametrization"] = time_reparam_check(prob, x0);
    continuation::MultiplicityOptions mo;
    mo.branch = branch_options(cfg, d.zeros);
    mo.degree = degree_options(cfg);
    const auto m = continuation::multiplicity_scan(prob, cfg.lambda, non_resonant(prob, d.zeros, cfg), box, mo);
    r["periodic_orbits_found"] = m.orbits.size();
    r["multiplicity"] = report::multiplicity(m);
  } else if (id == "reactor") {
    const auto prob = builtin(id);
    const Box box = box_of({{0.0, 5.0}, {0.1, 5.0}, {0.0, 5.0}});
    ctx.config["box"] = report::box(box);
    const auto d = degree::degree(prob, box, degree_options(cfg));
    r["zeros"] = report::degree_report(d)["zeros"];
    r["zero_count"] = d.zeros.size();
    r["degree"] = d.total_degree ? Json(*d.total_degree) : Json("unknown");
    r["degree_psi"] = degree::degree_psi(prob, d.zeros).total;
    r["resonance"] = zero_analysis(prob, d, cfg);
    bool any_resonant = false;
    for (const auto& z : d.zeros) {
      any_resonant = any_resonant || resonance::is_T_resonant(prob, z.z, prob.period(), resonance_options(cfg)).resonant;
    }
    r["resonant"] = any_resonant;
    if (d.zeros.empty()) fail(ErrorKind::NoConvergence, "no zero found for the reactor");
    const auto br = continuation::continue_branch(prob, d.zeros.front(), cfg.lambda_max, branch_options(cfg, d.zeros));
    ctx.csvs.emplace_back("branch", continuation::branch_csv(br, prob.k()));
    r["termination"] = continuation::to_string(br.termination);
    r["branch"] = report::branch(br);
  } else if (id == "example-3-9") {
    ctx.config["problem"] = "constructed 5x5 rank-3 example";
    r["reduction"] = svd_section(svd::constructed_example(), cfg, ctx);
  } else {
    fail(ErrorKind::Usage, "unknown example '" + id + "' (example-3-7, example-3-9, example-4-6, reactor)");
  }
  return r;
}

void add_common(CLI::App* sub, RunConfig& c, bool problem = true) {
  if (problem) {
    sub->add_option("--builtin", c.builtin, "built-in problem (example-3-7, reactor, example-4-6)");
    sub->add_option("--problem", c.problem_file, "problem file");
  }
  sub->add_option("--lambda", c.lambda, "perturbation parameter")->capture_default_str();
  sub->add_option("--lambda-max", c.lambda_max, "end of the continuation range")->capture_default_str();
  sub->add_option("--box", c.box_text, "search box 'lo,hi;lo,hi;...' over (x, y)");
  sub->add_option("--tol-newton", c.tol_newton, "zero-search Newton tolerance")->capture_default_str();
  sub->add_option("--tol-shoot", c.tol_shoot, "shooting residual tolerance")->capture_default_str();
  sub->add_option("--tol-res", c.tol_res, "resonance distance tolerance")->capture_default_str();
  sub->add_option("--tol-ode", c.tol_ode, "integrator rtol and atol")->capture_default_str();
  sub->add_option("--tol-rank", c.tol_rank, "relative rank threshold")->capture_default_str();
  sub->add_option("--tol-boundary", c.tol_boundary, "boundary admissibility threshold")->capture_default_str();
  sub->add_option("--grid", c.grid, "multistart grid points per dimension")->capture_default_str();
  sub->add_option("--seed", c.seed, "multistart shuffling seed (0 keeps grid order)")->capture_default_str();
  sub->add_option("--out", c.out, "JSON output file; CSVs are written beside it");
}

int emit(const Context& ctx, const Json& doc, std::ostream& out, std::ostream& err) {
  const std::string text = report::dump(doc);
  if (ctx.cfg.out.empty()) {
    out << text;
    return 0;
  }
  std::ofstream f(ctx.cfg.out, std::ios::binary);
  if (!f) {
    err << "error: cannot write " << ctx.cfg.out << "\n";
    return 2;
  }
  f << text;
  const std::filesystem::path base(ctx.cfg.out);
  for (const auto& [suffix, content] : ctx.csvs) {
    auto p = base;
    p.replace_filename(base.stem().string() + "_" + suffix + ".csv");
    std::ofstream c(p, std::ios::binary);
    if (!c) {
      err << "error: cannot write " << p.string() << "\n";
      return 2;
    }
    c << content;
  }
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Context ctx;
  RunConfig& c = ctx.cfg;
  CLI::App app{"Periodic perturbations of separated-variable DAEs", "daeh"};
  app.require_subcommand(1);
  std::optional<double> t1, t;

  auto* integrate = app.add_subcommand("integrate", "integrate the ODE on M and write the trajectory");
  add_common(integrate, c);
  integrate->add_option("--x0", c.x0_text, "initial x, comma separated (default: box center)");
  integrate->add_option("--t0", c.t0, "start time")->capture_default_str();
  integrate->add_option("--t1", t1, "end time (default: t0 + T)");
  integrate->add_option("--samples", c.samples, "sample count")->capture_default_str();

  auto* phi = app.add_subcommand("phi-a", "integral of a over [0, t]");
  add_common(phi, c);
  phi->add_option("--t", t, "upper limit (default: T)");

  auto* zeros = app.add_subcommand("zeros", "zeros of F in the box");
  add_common(zeros, c);
  auto* deg = app.add_subcommand("degree", "indices, Brouwer degree and the degree of Psi");
  add_common(deg, c);
  auto* res = app.add_subcommand("resonance", "T-resonance of every zero");
  add_common(res, c);
  auto* per = app.add_subcommand("periodic", "T-periodic orbit by shooting");
  add_common(per, c);
  per->add_option("--x0", c.x0_text, "initial guess for x (default: box center)");
  auto* br = app.add_subcommand("branch", "continue a branch of T-periodic pairs in lambda");
  add_common(br, c);
  br->add_option("--zero", c.zero_index, "index among the non-resonant zeros (default 0)");
  auto* mult = app.add_subcommand("multiplicity", "count distinct T-periodic orbits at small lambda");
  add_common(mult, c);
  auto* svd_cmd = app.add_subcommand("reduce-svd", "reduce E x' = a A x + lambda C S(x) by SVD");
  add_common(svd_cmd, c, false);
  svd_cmd->add_option("--problem", c.problem_file, "matrix input file (default: constructed example)");
  auto* rep = app.add_subcommand("reproduce", "rerun a worked example");
  add_common(rep, c, false);
  rep->add_option("example", c.reproduce_id, "example-3-7, example-3-9, example-4-6 or reactor")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << "run with --help for usage\n";
    return 2;
  }
  for (auto* sub : app.get_subcommands()) {
    if (sub->get_subcommands().empty()) c.subcommand = sub->get_name();
  }
  c.t1 = t1;
  c.t = t;

  Json doc;
  doc["schema"] = report::kSchema;
  doc["command"] = c.subcommand;
  int code = 0;
  try {
    check_tolerances(c);
    ctx.config = base_config(c);
    Json result;
    if (c.subcommand == "integrate") result = cmd_integrate(ctx);
    else if (c.subcommand == "phi-a") result = cmd_phi_a(ctx);
    else if (c.subcommand == "zeros") result = cmd_zeros(ctx);
    else if (c.subcommand == "degree") result = cmd_degree(ctx);
    else if (c.subcommand == "resonance") result = cmd_resonance(ctx);
    else if (c.subcommand == "periodic") result = cmd_periodic(ctx);
    else if (c.subcommand == "branch") result = cmd_branch(ctx);
    else if (c.subcommand == "multiplicity") result = cmd_multiplicity(ctx);
    else if (c.subcommand == "reduce-svd") result = cmd_reduce_svd(ctx);
    else result = cmd_reproduce(ctx);
    doc["config"] = ctx.config;
    doc["status"] = "ok";
    doc["result"] = result;
  } catch (const Error& e) {
    if (ctx.config.is_null()) ctx.config = base_config(c);
    doc["config"] = ctx.config;
    doc["status"] = "error";
    doc["error"] = report::error(e);
    code = is_precondition(e.kind()) ? 2 : 1;
    err << "error [" << to_string(e.kind()) << "]: " << e.what() << "\n";
  }
  const int io = emit(ctx, doc, out, err);
  return io != 0 ? io : code;
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace daeh::cli
