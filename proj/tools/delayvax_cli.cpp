// Command-line front end. Every subcommand is deterministic for a fixed
// seed: explicit --seed wins, then the DELAYVAX_SEED environment variable,
// then the built-in default (for `experiment`, the config's master_seed).
// Errors leave one machine-readable line on stderr: `error: code=<Name> ...`.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "delayvax.hpp"

namespace {

using namespace delayvax;

struct CommonFlags {
  std::uint64_t seed = 1;
  unsigned threads = 1;
  CLI::Option* seed_opt = nullptr;

  void attach(CLI::App* cmd) {
    seed_opt = cmd->add_option("--seed", seed, "seed for any randomized work");
    cmd->add_option("--threads", threads, "worker threads (0 = all hardware threads)");
  }

  bool seed_given() const { return seed_opt != nullptr && seed_opt->count() > 0; }

  // Explicit flag, then environment, then the caller's fallback.
  std::uint64_t resolve_seed(std::uint64_t fallback) const {
    if (seed_given()) return seed;
    if (const char* env = std::getenv("DELAYVAX_SEED"))
      return detail::parse_number<std::uint64_t>(env, "DELAYVAX_SEED");
    return fallback;
  }

  unsigned resolved_threads() const { return resolve_threads(threads); }
};

struct ModelFlags {
  double lambda = 1.0;
  double e_tau = 0.0;
  double tau_fixed = 0.0;
  CLI::Option* e_opt = nullptr;
  CLI::Option* f_opt = nullptr;

  void attach(CLI::App* cmd) {
    cmd->add_option("--lambda", lambda, "infection passage rate per edge");
    e_opt = cmd->add_option("--e-tau", e_tau, "expected delay (exponential model)");
    f_opt = cmd->add_option("--tau-fixed", tau_fixed, "fixed delay (deterministic model)");
    e_opt->excludes(f_opt);
    f_opt->excludes(e_opt);
  }

  DelayModel make() const {
    if (e_opt->count() > 0) {
      if (!(e_tau > 0.0)) fail(Errc::config_invalid, "--e-tau must be > 0");
      return DelayModel::exponential_tau(lambda, 1.0 / e_tau);
    }
    if (f_opt->count() > 0) return DelayModel::deterministic_tau(lambda, tau_fixed);
    fail(Errc::config_invalid, "one of --e-tau or --tau-fixed is required");
  }
};

// Writes to --out when given, otherwise to stdout.
void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty())
    std::fwrite(text.data(), 1, text.size(), stdout);
  else
    write_file(out_path, text);
}

OffspringDistribution make_family(const std::string& name, double mean, bool mean_given) {
  if (name == "binary") {
    if (mean_given) fail(Errc::config_invalid, "the binary family takes no --mean");
    return OffspringDistribution::binary_mix();
  }
  if (!mean_given) fail(Errc::config_invalid, "--mean is required for family `" + name + "`");
  if (name == "poisson") return OffspringDistribution::poisson(mean);
  if (name == "uniform") {
    if (mean != static_cast<int>(mean))
      fail(Errc::config_invalid, "the uniform family needs an integer --mean");
    return OffspringDistribution::discrete_uniform(static_cast<int>(mean));
  }
  fail(Errc::config_invalid, "unknown family `" + name + "`");
}

std::vector<int> parse_id_list(const std::string& text) {
  std::vector<int> ids;
  for (std::string_view part : detail::split_csv(text))
    ids.push_back(detail::parse_number<int>(part, "node id"));
  return ids;
}

std::string self_path(const char* argv0) {
  std::error_code ec;
  auto p = std::filesystem::read_symlink("/proc/self/exe", ec);
  return ec ? std::string(argv0) : p.string();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vaccination planning under immunization delay on rooted trees"};
  app.require_subcommand(1);

  // gen-tree
  auto* gen = app.add_subcommand("gen-tree", "sample a rooted tree of a given size");
  CommonFlags gen_common;
  gen_common.attach(gen);
  std::string gen_family = "binary", gen_out;
  double gen_mean = 0.0;
  int gen_size = 0;
  gen->add_option("--family", gen_family, "offspring family: binary, poisson, uniform");
  auto* gen_mean_opt = gen->add_option("--mean", gen_mean, "offspring mean");
  gen->add_option("--size", gen_size, "target node count")->required();
  gen->add_option("--out", gen_out, "output path (stdout when absent)");
  gen->callback([&] {
    auto dist = make_family(gen_family, gen_mean, gen_mean_opt->count() > 0);
    RootedTree t = sample_galton_watson(dist, gen_size, gen_common.resolve_seed(1));
    emit(gen_out, format_tree(t));
  });

  // plan
  auto* plan_cmd = app.add_subcommand("plan", "choose a vaccination plan");
  CommonFlags plan_common;
  plan_common.attach(plan_cmd);
  ModelFlags plan_model;
  plan_model.attach(plan_cmd);
  std::string plan_tree, plan_policy = "greedy", plan_sources, plan_out, plan_report;
  int plan_k = 0, plan_layers = -1;
  plan_cmd->add_option("--tree", plan_tree, "tree file")->required();
  plan_cmd->add_option("--policy", plan_policy, "greedy or a baseline policy");
  plan_cmd->add_option("--k", plan_k, "budget")->required();
  auto* layers_opt =
      plan_cmd->add_option("--frontier-layers", plan_layers, "depth threshold for top_k_frontiers");
  plan_cmd->add_option("--sources", plan_sources, "comma-separated infected nodes");
  plan_cmd->add_option("--report", plan_report, "write the multi-source decomposition here");
  plan_cmd->add_option("--out", plan_out, "output path (stdout when absent)");
  plan_cmd->callback([&] {
    RootedTree t = parse_tree(read_file(plan_tree));
    PolicyKind policy = PolicyKind::parse(plan_policy);
    if (layers_opt->count() > 0) policy.threshold_layers = plan_layers;
    DelayModel m = plan_model.make();
    VaccinationPlan plan;
    if (!plan_sources.empty()) {
      if (policy.id != PolicyKind::Id::greedy)
        fail(Errc::config_invalid, "baseline policies apply to single-source instances only");
      auto inst = MultiSourceInstance::make(t, parse_id_list(plan_sources));
      plan = plan_multisource(inst, plan_k, m, plan_common.resolved_threads());
      if (!plan_report.empty())
        write_file(plan_report, format_decomposition(decompose_distant_sources(normalize_root(inst))));
    } else {
      if (!plan_report.empty()) fail(Errc::config_invalid, "--report requires --sources");
      plan = select_plan(t, plan_k, policy, m, plan_common.resolved_threads());
    }
    emit(plan_out, format_plan(plan));
  });

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "estimate a plan's value by simulation");
  CommonFlags sim_common;
  sim_common.attach(sim_cmd);
  ModelFlags sim_model;
  sim_model.attach(sim_cmd);
  std::string sim_tree, sim_plan, sim_out, sim_raw_out;
  int sim_runs = 1000;
  sim_cmd->add_option("--tree", sim_tree, "tree file")->required();
  sim_cmd->add_option("--plan", sim_plan, "plan file")->required();
  sim_cmd->add_option("--runs", sim_runs, "number of independent epidemics");
  sim_cmd->add_option("--raw-out", sim_raw_out, "write one row per run here");
  sim_cmd->add_option("--out", sim_out, "summary path (stdout when absent)");
  sim_cmd->callback([&] {
    RootedTree t = parse_tree(read_file(sim_tree));
    VaccinationPlan plan = parse_plan(read_file(sim_plan));
    DelayModel m = sim_model.make();
    std::vector<RunRecord> raw;
    RewardEstimate est =
        estimate_reward(t, plan.nodes, m, sim_runs, sim_common.resolve_seed(1),
                        sim_common.resolved_threads(), sim_raw_out.empty() ? nullptr : &raw);
    if (!sim_raw_out.empty()) {
      std::string text = "run,saved_by_plan,never_infected,tau_sample\n";
      for (const RunRecord& r : raw)
        text += std::to_string(r.run) + "," + std::to_string(r.saved_by_plan) + "," +
                std::to_string(r.never_infected) + "," + format_double(r.tau_sample) + "\n";
      write_file(sim_raw_out, text);
    }
    emit(sim_out, "runs,mean_saved,std_error,mean_never_infected,never_infected_std_error\n" +
                      std::to_string(sim_runs) + "," + format_double(est.mean) + "," +
                      format_double(est.std_error) + "," + format_double(est.never_mean) + "," +
                      format_double(est.never_std_error) + "\n");
  });

  // oracle
  auto* oracle_cmd = app.add_subcommand("oracle", "exhaustive optimum for small instances");
  CommonFlags oracle_common;
  oracle_common.attach(oracle_cmd);
  ModelFlags oracle_model;
  oracle_model.attach(oracle_cmd);
  std::string oracle_tree, oracle_out;
  int oracle_k = 0;
  long long oracle_cap = kDefaultOracleCap;
  oracle_cmd->add_option("--tree", oracle_tree, "tree file")->required();
  oracle_cmd->add_option("--k", oracle_k, "budget")->required();
  oracle_cmd->add_option("--cap", oracle_cap, "largest candidate-set count to enumerate");
  oracle_cmd->add_option("--out", oracle_out, "output path (stdout when absent)");
  oracle_cmd->callback([&] {
    RootedTree t = parse_tree(read_file(oracle_tree));
    OracleResult r = exhaustive_optimum(t, oracle_k, oracle_model.make(), oracle_cap);
    std::string text = "value " + format_double(r.best_value) + "\nevaluated " +
                       std::to_string(r.evaluated) + "\nnodes";
    for (int v : r.best_set) text += " " + std::to_string(v);
    emit(oracle_out, text + "\n");
  });

  // experiment
  auto* exp_cmd = app.add_subcommand("experiment", "run a configured policy sweep");
  CommonFlags exp_common;
  exp_common.attach(exp_cmd);
  std::string exp_config, exp_out;
  bool exp_raw = false;
  exp_cmd->add_option("--config", exp_config, "key=value config file")->required();
  exp_cmd->add_option("--out", exp_out, "output directory (overrides the config)");
  exp_cmd->add_flag("--emit-raw", exp_raw, "also write per-run rows");
  exp_cmd->callback([&] {
    ExperimentConfig cfg = parse_experiment_config(read_file(exp_config));
    cfg.master_seed = exp_common.resolve_seed(cfg.master_seed);
    if (!exp_out.empty()) cfg.output_dir = exp_out;
    if (exp_raw) cfg.emit_raw = true;
    write_experiment_output(cfg, run_experiment(cfg, exp_common.resolved_threads()));
  });

  // verify
  auto* verify_cmd = app.add_subcommand("verify", "run the acceptance checks");
  CommonFlags verify_common;
  verify_common.attach(verify_cmd);
  std::vector<int> verify_ids;
  bool verify_full = false;
  std::string verify_cli, verify_work;
  verify_cmd->add_option("--criterion", verify_ids, "criterion number, repeatable (default: all)");
  verify_cmd->add_flag("--full", verify_full, "full-scale sweeps instead of smoke scale");
  verify_cmd->add_option("--cli", verify_cli, "binary to drive in the determinism check");
  verify_cmd->add_option("--work-dir", verify_work, "scratch directory for the determinism check");
  verify_cmd->callback([&] {
    if (verify_ids.empty()) verify_ids = {1, 2, 3, 4, 5, 6, 7, 8};
    std::sort(verify_ids.begin(), verify_ids.end());
    verify_ids.erase(std::unique(verify_ids.begin(), verify_ids.end()), verify_ids.end());
    for (int id : verify_ids)
      if (id < 1 || id > 8)
        fail(Errc::config_invalid, "criterion numbers run from 1 to 8");
    selfcheck::CheckOptions co;
    co.seed = verify_common.resolve_seed(1);
    co.full = verify_full;
    co.threads = verify_common.resolved_threads();
    co.cli_path = verify_cli.empty() ? self_path(argv[0]) : verify_cli;
    co.work_dir = verify_work;
    bool all_pass = true;
    for (const auto& r : selfcheck::run_checks(verify_ids, co)) {
      std::printf("[%s] criterion %d - %s: %s\n", r.pass ? "PASS" : "FAIL", r.id, r.name.c_str(),
                  r.detail.c_str());
      all_pass = all_pass && r.pass;
    }
    if (!all_pass) fail(Errc::config_invalid, "one or more criteria failed");
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "error: code=ConfigInvalid %s\n", e.what());
    return 1;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: code=%s %s\n", errc_name(e.code()), e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: code=Internal %s\n", e.what());
    return 3;
  }
  return 0;
}
