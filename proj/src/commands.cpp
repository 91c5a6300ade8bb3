#include "lockbif/app/commands.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <map>
#include <mutex>
#include <thread>

#include "lockbif/app/output.hpp"
#include "lockbif/app/verify.hpp"
#include "lockbif/coupled_system.hpp"
#include "lockbif/locked_algebra.hpp"
#include "lockbif/partition.hpp"

namespace lockbif::app {

namespace fs = std::filesystem;

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::no_convergence:
    case Errc::newton_failure:
    case Errc::predictor_diverged:
    case Errc::eigensolver_failure:
    case Errc::positivity_lost:
      return exit_no_convergence;
    case Errc::degenerate_ground_state:
    case Errc::degenerate_spectrum:
      return exit_degenerate;
    case Errc::invariant_violation:
      return exit_invariant;
    default:
      return exit_invalid_config;
  }
}

namespace {

GroundStateOptions ground_state_options(const RunConfig& cfg) {
  GroundStateOptions o;
  o.tolerance = cfg.solver.tolerance;
  o.max_iterations = cfg.solver.max_iterations;
  return o;
}

}  // namespace

Problem::Problem(const RunConfig& config)
    : cfg(config),
      grid(build_grid<Real>(cfg.domain, cfg.points)),
      op(assemble_operator(grid, cfg.potential)),
      coupling(CouplingSpec<Real>::from(cfg.mu)),
      gs(solve_ground_state(op, ground_state_options(cfg))) {}

WeightedSpectrum<Real> Problem::spectrum() const {
  return weighted_spectrum(op, gs, cfg.solver.kmax);
}

std::pair<Real, Real> Problem::scan_window() const {
  const Real bbar = beta_bar(coupling);
  const Real margin = Real(cfg.continuation.margin) * (coupling.mu_min() - bbar);
  const Real lo = cfg.scan.beta_min ? Real(*cfg.scan.beta_min) : bbar + margin;
  const Real hi = cfg.scan.beta_max ? Real(*cfg.scan.beta_max) : coupling.mu_min() - margin;
  require(lo < hi, Errc::invalid_config, "empty scan window");
  return {lo, hi};
}

std::vector<Real> Problem::scan_betas() const {
  const auto [lo, hi] = scan_window();
  std::vector<Real> out;
  const int m = cfg.scan.samples;
  for (int s = 0; s < m; ++s) out.push_back(lo + (hi - lo) * Real(s) / Real(m - 1));
  return out;
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"ground-state", "spectrum", "bifpoints", "locked",
                                              "morse-scan",   "continue", "sweep",     "verify"};
  return names;
}

std::string csv_contracts() {
  return "CSV artifacts (leading '#' lines echo the resolved config):\n"
         "  ground_state.csv  r,omega,w\n"
         "  spectrum.csv      k,lambda,multiplicity\n"
         "  bifpoints.csv     k,lambda,multiplicity,beta,kernel_dim\n"
         "  locked.csv        beta,g,f,alpha_1..alpha_n,residual,min_u,morse_index\n"
         "  morse_scan.csv    beta,direct,formula,kernel_dim,agree\n"
         "  branch_*.csv      step,beta,s,residual,full_residual,min_u,dist_locked,morse_index\n"
         "  sweep.csv         k,partition,direction,points,termination,beta_end,extrapolated_origin\n"
         "  verify.csv        check,status,value,threshold,detail\n";
}

std::string partition_file_tag(const Partition& p) {
  std::string tag = p.to_string();
  std::replace(tag.begin(), tag.end(), '|', '_');
  std::replace(tag.begin(), tag.end(), ',', '.');
  return tag;
}

namespace {

struct Context {
  const RunConfig& cfg;
  fs::path out;
  std::ostream& log;

  void emit(const std::string& stem, const nlohmann::ordered_json& doc, const Table& table,
            bool dat = false) const {
    if (cfg.output.json) write_json(out / (stem + ".json"), doc);
    if (cfg.output.csv) write_csv(out / (stem + ".csv"), cfg, table);
    if (dat && cfg.output.dat) write_dat(out / (stem + ".dat"), cfg, table);
  }
};

int cmd_ground_state(const Problem& pb, const Context& ctx) {
  Table t{{"r", "omega", "w"}, {}};
  for (Index i = 0; i < pb.grid.size(); ++i) t.add(pb.grid.nodes(i), pb.grid.weights(i), pb.gs.w(i));
  auto doc = document("ground-state", ctx.cfg);
  doc["residual_norm"] = static_cast<double>(pb.gs.residual_norm);
  doc["iterations"] = pb.gs.iterations;
  doc["nondegenerate"] = pb.gs.nondegenerate;
  doc["max_w"] = static_cast<double>(pb.gs.w.maxCoeff());
  doc["min_w"] = static_cast<double>(pb.gs.w.minCoeff());
  doc["tail_mass"] = static_cast<double>(pb.gs.tail_mass);
  doc["smallest_operator_eigenvalue"] = static_cast<double>(operator_smallest_eigenvalue(pb.op));
  ctx.emit("ground_state", doc, t);
  ctx.log << "ground state: residual " << format_number(pb.gs.residual_norm) << ", "
          << pb.gs.iterations << " Newton iterations, max w " << format_number(pb.gs.w.maxCoeff())
          << ", nondegenerate " << (pb.gs.nondegenerate ? "yes" : "no") << '\n';
  if (pb.cfg.domain.kind == DomainKind::truncated_space && pb.gs.tail_mass >= Real(1e-6)) {
    ctx.log << "warning: tail mass " << format_number(pb.gs.tail_mass)
            << " on the outer 10% exceeds 1e-6; increase outer_radius\n";
  }
  return pb.gs.nondegenerate ? exit_ok : exit_degenerate;
}

int cmd_spectrum(const Problem& pb, const Context& ctx) {
  const auto sp = pb.spectrum();
  Table t{{"k", "lambda", "multiplicity"}, {}};
  for (std::size_t k = 1; k <= sp.clusters(); ++k) t.add(static_cast<int>(k), sp.lambda(k), sp.multiplicity(k));
  auto doc = document("spectrum", ctx.cfg);
  doc["near_three"] = sp.near_three;
  doc["rows"] = table_to_json(t);
  ctx.emit("spectrum", doc, t);
  for (std::size_t k = 1; k <= sp.clusters(); ++k) {
    ctx.log << "lambda_" << k << " = " << format_number(sp.lambda(k)) << "  (n_k = " << sp.multiplicity(k)
            << ")\n";
  }
  return sp.near_three ? exit_degenerate : exit_ok;
}

int cmd_bifpoints(const Problem& pb, const Context& ctx) {
  const auto sp = pb.spectrum();
  auto points = bifurcation_points(pb.coupling, sp);
  std::sort(points.begin(), points.end(), [](const auto& a, const auto& b) { return a.k < b.k; });
  Table t{{"k", "lambda", "multiplicity", "beta", "kernel_dim"}, {}};
  for (const auto& p : points) t.add(p.k, p.lambda, p.multiplicity, p.beta, p.kernel_dim);
  auto doc = document("bifpoints", ctx.cfg);
  doc["beta_bar"] = static_cast<double>(beta_bar(pb.coupling));
  doc["mu_min"] = static_cast<double>(pb.coupling.mu_min());
  doc["rows"] = table_to_json(t);
  ctx.emit("bifpoints", doc, t);
  ctx.log << "beta_bar = " << format_number(beta_bar(pb.coupling)) << '\n';
  for (const auto& p : points) {
    ctx.log << "k = " << p.k << ": beta_k = " << format_number(p.beta) << ", kernel dim "
            << p.kernel_dim << '\n';
  }
  return exit_ok;
}

int cmd_locked(const Problem& pb, const Context& ctx) {
  const auto sp = pb.spectrum();
  const auto [lo, hi] = pb.scan_window();
  const auto branch = sample_locked_branch(pb.op, pb.gs, sp, pb.coupling, lo, hi, pb.cfg.scan.samples);
  Table t;
  t.columns = {"beta", "g", "f"};
  for (int j = 1; j <= pb.cfg.n(); ++j) t.columns.push_back("alpha_" + std::to_string(j));
  t.columns.insert(t.columns.end(), {"residual", "min_u", "morse_index"});
  Real worst = 0;
  for (const auto& p : branch.points) {
    std::vector<std::string> row{format_number(p.beta), format_number(eval_g(pb.coupling, p.beta)),
                                 format_number(eval_f(pb.coupling, p.beta))};
    const auto alpha = gammas_alphas(pb.coupling, p.beta).alpha;
    for (Index j = 0; j < alpha.size(); ++j) row.push_back(format_number(alpha(j)));
    row.push_back(format_number(p.residual));
    row.push_back(format_number(p.min_u));
    row.push_back(format_number(p.morse_index));
    t.rows.push_back(std::move(row));
    worst = std::max(worst, p.residual);
  }
  auto doc = document("locked", ctx.cfg);
  doc["beta_bar"] = static_cast<double>(beta_bar(pb.coupling));
  doc["max_residual"] = static_cast<double>(worst);
  doc["rows"] = table_to_json(t);
  ctx.emit("locked", doc, t);
  ctx.log << branch.points.size() << " locked samples on [" << format_number(lo) << ", "
          << format_number(hi) << "], max residual " << format_number(worst) << '\n';
  return exit_ok;
}

int cmd_morse_scan(const Problem& pb, const Context& ctx) {
  const auto sp = pb.spectrum();
  const Real tol = Real(pb.cfg.solver.zero_tol);
  Table t{{"beta", "direct", "formula", "kernel_dim", "agree"}, {}};
  int mismatches = 0;
  for (Real beta : pb.scan_betas()) {
    const SystemState<Real> s{beta, locked_solution(pb.gs.w, pb.coupling, beta)};
    const auto hs = hessian_spectrum(s, pb.coupling, pb.op, 0, tol);
    std::optional<int> formula;
    try {
      formula = morse_index_formula(pb.coupling, beta, sp);
    } catch (const Error& e) {
      if (e.code() != Errc::at_bifurcation && e.code() != Errc::insufficient_spectrum) throw;
    }
    const bool agree = formula && *formula == hs.morse_index;
    if (formula && !agree) ++mismatches;
    t.add(beta, hs.morse_index, formula, hs.kernel_dim, formula ? (agree ? "yes" : "no") : "n/a");
  }
  auto doc = document("morse-scan", ctx.cfg);
  doc["mismatches"] = mismatches;
  doc["rows"] = table_to_json(t);
  ctx.emit("morse_scan", doc, t);
  ctx.log << t.rows.size() << " beta samples, " << mismatches
          << " disagreements between direct count and formula\n";
  return exit_ok;
}

struct BranchJob {
  PlannedBifurcation<Real> plan;
  Partition partition;
  int direction = 1;
};

struct BranchOutcome {
  std::optional<Branch<Real>> branch;
  std::string error;
  Errc code = Errc::no_convergence;
};

BranchOutcome run_branch(const Problem& pb, const WeightedSpectrum<Real>& sp, const BranchJob& job,
                         const ContinuationOpts& opts) {
  BranchOutcome out;
  try {
    const auto& bp = job.plan.point;
    const auto pred = branch_switch_predictor(job.partition, pb.coupling, pb.gs, bp, sp.basis(bp.k),
                                              pb.grid, Real(opts.eps), job.direction);
    out.branch = continue_branch(pred, pb.coupling, pb.op, pb.gs, opts);
  } catch (const Error& e) {
    out.error = e.what();
    out.code = e.code();
  }
  return out;
}

std::string branch_stem(const BranchJob& job) {
  return "branch_k" + std::to_string(job.plan.point.k) + "_" + partition_file_tag(job.partition) +
         (job.direction > 0 ? "_plus" : "_minus");
}

Table branch_table(const Branch<Real>& br) {
  Table t{{"step", "beta", "s", "residual", "full_residual", "min_u", "dist_locked", "morse_index"}, {}};
  int step = 0;
  for (const auto& p : br.points) {
    t.add(step++, p.beta, p.s, p.residual, p.full_residual, p.min_u, p.dist_locked, p.morse_index);
  }
  return t;
}

void emit_branch(const Context& ctx, const BranchJob& job, const Branch<Real>& br,
                 const ContinuationOpts& opts) {
  auto doc = document("continue", ctx.cfg);
  doc["origin"] = {{"k", br.origin.k},
                   {"beta_k", static_cast<double>(br.origin.beta_k)},
                   {"lambda_k", static_cast<double>(br.origin.lambda_k)},
                   {"n_k", br.origin.n_k}};
  doc["partition"] = br.partition.to_string();
  doc["direction"] = br.direction;
  doc["ambiguous"] = br.ambiguous;
  doc["opts"] = {{"ds0", opts.ds0},         {"ds_min", opts.ds_min},
                 {"ds_max", opts.ds_max},   {"newton_tol", opts.newton_tol},
                 {"max_newton", opts.max_newton}, {"max_steps", opts.max_steps},
                 {"margin", opts.margin},   {"eps", opts.eps},
                 {"morse_every", opts.morse_every}};
  nlohmann::ordered_json points = nlohmann::ordered_json::array();
  for (const auto& p : br.points) {
    nlohmann::ordered_json q;
    q["beta"] = static_cast<double>(p.beta);
    q["s"] = static_cast<double>(p.s);
    q["residual"] = static_cast<double>(p.residual);
    q["full_residual"] = static_cast<double>(p.full_residual);
    q["min_u"] = static_cast<double>(p.min_u);
    q["dist_locked"] = static_cast<double>(p.dist_locked);
    if (p.morse_index) q["morse_index"] = *p.morse_index;
    points.push_back(std::move(q));
  }
  doc["points"] = std::move(points);
  doc["termination"] = to_string(br.termination);
  const auto origin = extrapolated_origin(br);
  if (origin) {
    doc["extrapolated_origin"] = static_cast<double>(*origin);
  } else {
    doc["extrapolated_origin"] = nullptr;
  }
  ctx.emit(branch_stem(job), doc, branch_table(br), true);
}

ContinuationOpts effective_opts(const RunConfig& cfg, const Flags& flags) {
  ContinuationOpts o = cfg.continuation;
  if (flags.eps) o.eps = *flags.eps;
  validate(o);
  return o;
}

const PlannedBifurcation<Real>& find_plan(const std::vector<PlannedBifurcation<Real>>& plan, int k) {
  for (const auto& p : plan) {
    if (p.point.k == k) return p;
  }
  throw Error(Errc::invalid_config,
              "no bifurcation point with k = " + std::to_string(k) + " (raise solver.kmax)");
}

int cmd_continue(const Problem& pb, const Context& ctx, const Flags& flags) {
  const auto sp = pb.spectrum();
  const auto plan = plan_bifurcations(pb.gs, pb.coupling, sp);
  BranchJob job{find_plan(plan, flags.k.value_or(2)), Partition(), flags.direction};
  job.partition = flags.partition ? Partition::parse(*flags.partition, pb.coupling.n())
                                  : job.plan.partitions.front();
  const auto opts = effective_opts(pb.cfg, flags);
  auto outcome = run_branch(pb, sp, job, opts);
  if (!outcome.branch) throw Error(outcome.code, outcome.error);
  emit_branch(ctx, job, *outcome.branch, opts);
  const auto& br = *outcome.branch;
  ctx.log << "branch k = " << job.plan.point.k << ", partition " << job.partition.to_string()
          << ", direction " << (job.direction > 0 ? "+" : "-") << ": " << br.points.size()
          << " points, termination " << to_string(br.termination) << '\n';
  if (br.ambiguous) ctx.log << "note: n_k > 1, continued along the first kernel direction only\n";
  return exit_ok;
}

int cmd_sweep(const Problem& pb, const Context& ctx, const Flags& flags) {
  const auto sp = pb.spectrum();
  const auto plan = plan_bifurcations(pb.gs, pb.coupling, sp);
  std::vector<BranchJob> jobs;
  for (const auto& p : plan) {
    if (flags.k && p.point.k != *flags.k) continue;
    for (const auto& part : p.partitions) jobs.push_back({p, part, flags.direction});
  }
  require(!jobs.empty(), Errc::invalid_config, "no branches selected");
  const auto opts = effective_opts(pb.cfg, flags);

  unsigned workers = flags.jobs > 0 ? static_cast<unsigned>(flags.jobs)
                                    : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(jobs.size()));
  std::vector<BranchOutcome> outcomes(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) outcomes[i] = run_branch(pb, sp, jobs[i], opts);
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  Table summary{{"k", "partition", "direction", "points", "termination", "beta_end", "extrapolated_origin"}, {}};
  int status = exit_ok;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto& job = jobs[i];
    const auto& out = outcomes[i];
    if (out.branch) {
      emit_branch(ctx, job, *out.branch, opts);
      const auto& br = *out.branch;
      summary.add(job.plan.point.k, job.partition.to_string(), job.direction,
                  static_cast<int>(br.points.size()), to_string(br.termination), br.points.back().beta,
                  extrapolated_origin(br));
      ctx.log << "k = " << job.plan.point.k << " " << job.partition.to_string() << ": "
              << br.points.size() << " points, " << to_string(br.termination) << '\n';
    } else {
      summary.add(job.plan.point.k, job.partition.to_string(), job.direction, 0,
                  std::string("error: ") + to_string(out.code), "", "");
      ctx.log << "k = " << job.plan.point.k << " " << job.partition.to_string() << ": " << out.error << '\n';
      status = std::max(status, exit_code_for(out.code));
    }
  }
  if (ctx.cfg.output.csv) write_csv(ctx.out / "sweep.csv", ctx.cfg, summary);
  return status;
}

int cmd_verify(const Problem& pb, const Context& ctx) {
  const auto rows = run_verify(pb, ctx.log);
  Table t{{"check", "status", "value", "threshold", "detail"}, {}};
  bool all = true;
  for (const auto& r : rows) {
    t.add(r.name, r.passed ? "pass" : "fail", r.value, r.threshold, r.detail);
    all = all && r.passed;
  }
  auto doc = document("verify", ctx.cfg);
  doc["passed"] = all;
  doc["rows"] = table_to_json(t);
  ctx.emit("verify", doc, t);
  return all ? exit_ok : exit_invariant;
}

}  // namespace

int run(const std::string& command, const RunConfig& cfg_in, const Flags& flags, std::ostream& log,
        std::ostream& err) {
  try {
    RunConfig cfg = cfg_in;
    if (flags.out) cfg.output.directory = *flags.out;
    validate(cfg);
    require(std::find(command_names().begin(), command_names().end(), command) != command_names().end(),
            Errc::invalid_config, "unknown command '" + command + "'");
    require(flags.direction == 1 || flags.direction == -1, Errc::invalid_config, "--dir must be + or -");
    require(!flags.k || *flags.k >= 2, Errc::invalid_config, "--k must be at least 2");
    require(flags.jobs >= 0, Errc::invalid_config, "--jobs must be non-negative");
    if (flags.partition) {
      const auto p = Partition::parse(*flags.partition, cfg.n());
      require(p.size() == 2, Errc::not_pair_partition, "--partition must have exactly two blocks");
    }
    const Problem pb(cfg);
    const Context ctx{pb.cfg, fs::path(pb.cfg.output.directory), log};
    if (command == "ground-state") return cmd_ground_state(pb, ctx);
    if (command == "spectrum") return cmd_spectrum(pb, ctx);
    if (command == "bifpoints") return cmd_bifpoints(pb, ctx);
    if (command == "locked") return cmd_locked(pb, ctx);
    if (command == "morse-scan") return cmd_morse_scan(pb, ctx);
    if (command == "continue") return cmd_continue(pb, ctx, flags);
    if (command == "sweep") return cmd_sweep(pb, ctx, flags);
    return cmd_verify(pb, ctx);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return exit_invalid_config;
  }
}

}  // namespace lockbif::app
