// Command-line front end: exact toy-grid sweeps, sampled AIS on toy targets,
// paired-bound runs on the bundled models, the full real-vs-simulated
// protocol, dataset simulation, and report rendering.
//
// Exit codes: 0 success, 1 runtime/model error, 2 usage error.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bread/ais.hpp"
#include "bread/grid_oracle.hpp"
#include "bread/io.hpp"
#include "bread/models.hpp"
#include "bread/protocol.hpp"
#include "bread/version.hpp"

namespace {

using nlohmann::json;

struct CommonOptions {
  std::optional<std::uint64_t> seed;
  int threads = static_cast<int>(std::thread::hardware_concurrency());
  std::string out_dir = ".";
  std::string config_path;
  json config = json::object();

  std::uint64_t resolve_seed() {
    if (seed) return *seed;
    std::random_device rd;
    const std::uint64_t s = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    std::cerr << "[bread] no --seed given; drew seed " << s << " from entropy\n";
    seed = s;
    return s;
  }
};

void add_common(CLI::App* cmd, CommonOptions& opt) {
  cmd->add_option("--seed", opt.seed, "master seed (omitted: drawn from entropy and recorded)");
  cmd->add_option("--threads", opt.threads, "worker threads for chain ensembles");
  cmd->add_option("--out-dir", opt.out_dir, "directory for output artifacts");
  cmd->add_option("--config", opt.config_path, "JSON config file; flags override its fields");
}

void load_config(CommonOptions& opt) {
  if (opt.config_path.empty()) return;
  std::ifstream in(opt.config_path);
  if (!in) throw bread::io_error("cannot open config: " + opt.config_path);
  in >> opt.config;
}

template <class T>
T config_or(const json& cfg, const std::string& key, T fallback) {
  if (cfg.contains(key)) return cfg.at(key).get<T>();
  return fallback;
}

std::vector<int> parse_int_list(const std::string& csv) {
  std::vector<int> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stoi(item));
  }
  if (out.empty()) throw CLI::ValidationError("--T", "expected a comma-separated list");
  return out;
}

void write_text_atomic(const std::string& path, const std::string& text) {
  std::filesystem::create_directories(std::filesystem::path(path).parent_path());
  bread::write_file_atomic(path, text);
}

double elapsed_seconds(std::chrono::steady_clock::time_point from) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - from).count();
}

// ---------------------------------------------------------------------------
// Toy grid targets.

bread::GridDistribution named_grid_target(const std::string& name, double sigma,
                                          std::uint64_t grid_seed) {
  if (name == "barrier") return bread::barrier_target();
  if (name == "easy") return bread::random_grid_target(sigma > 0 ? sigma : 2.0, grid_seed);
  if (name == "hard") return bread::random_grid_target(sigma > 0 ? sigma : 10.0, grid_seed);
  throw CLI::ValidationError("--target", "unknown toy target: " + name);
}

int cmd_toy_exact(CommonOptions& opt, const std::string& target, const std::string& t_list,
                  double sigma, std::uint64_t grid_seed, int sweeps) {
  const auto grid = named_grid_target(target, sigma, grid_seed);
  auto stages = parse_int_list(t_list);
  std::sort(stages.begin(), stages.end());
  std::ostringstream csv;
  csv << "T,J,B\n";
  for (int t : stages) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto res = bread::grid_oracle_summary(grid, bread::linear_schedule(t), sweeps);
    std::cerr << "[bread] toy-exact " << target << " T=" << t << " took " << elapsed_seconds(t0)
              << "s\n";
    csv << t << "," << bread::format_double(res.final_jeffreys) << ","
        << bread::format_double(res.chain_jeffreys) << "\n";
  }
  const std::string path = opt.out_dir + "/toy_exact_" + target + ".csv";
  write_text_atomic(path, csv.str());
  std::cout << path << "\n";
  return 0;
}

int cmd_toy_ais(CommonOptions& opt, const std::string& target, int stages, int chains,
                double sigma, std::uint64_t grid_seed) {
  const std::uint64_t seed = opt.resolve_seed();
  const auto grid = named_grid_target(target, sigma, grid_seed);
  const auto schedule = bread::linear_schedule(stages);
  const bread::GridNeighborMhKernel kernel{grid, 1};
  bread::KernelSpec spec;
  spec.kind = bread::KernelKind::grid_neighbor_mh;
  auto flat_draw = [&grid](bread::RngStream& rng) {
    return static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(grid.size())));
  };
  const auto t0 = std::chrono::steady_clock::now();
  const auto run = bread::forward_ais(grid.path(), schedule, kernel, flat_draw, chains, seed,
                                      spec, opt.threads);
  std::cerr << "[bread] toy-ais sampled " << chains << " chains in " << elapsed_seconds(t0)
            << "s\n";

  std::ostringstream weights;
  weights << "chain,log_weight\n";
  const auto w = run.final_chain_log_weights();
  for (int k = 0; k < chains; ++k)
    weights << k << "," << bread::format_double(w[static_cast<std::size_t>(k)]) << "\n";
  const std::string wpath = opt.out_dir + "/toy_ais_weights_" + target + ".csv";
  write_text_atomic(wpath, weights.str());

  std::vector<long> counts(static_cast<std::size_t>(grid.size()), 0);
  for (int s : run.final_states) ++counts[static_cast<std::size_t>(s)];
  const auto exact = grid.target_probabilities();
  std::ostringstream hist;
  hist << "row,col,count,frequency,exact_probability\n";
  for (int i = 0; i < grid.size(); ++i)
    hist << grid.row(i) << "," << grid.col(i) << "," << counts[static_cast<std::size_t>(i)] << ","
         << bread::format_double(static_cast<double>(counts[static_cast<std::size_t>(i)]) /
                                 static_cast<double>(chains))
         << "," << bread::format_double(exact[static_cast<std::size_t>(i)]) << "\n";
  const std::string hpath = opt.out_dir + "/toy_ais_hist_" + target + ".csv";
  write_text_atomic(hpath, hist.str());
  std::cout << wpath << "\n" << hpath << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// Bundled continuous models.

struct ModelSetup {
  std::string name;
  std::optional<bread::LinRegModel> linreg;
  std::optional<bread::MatrixFactorizationModel> mf;
  bread::KernelSpec kernel;
};

Eigen::MatrixXd standardized_design(int n, int d, std::uint64_t seed) {
  bread::RngStream rng(seed);
  Eigen::MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  for (int c = 0; c < d; ++c) {
    const double mean = x.col(c).mean();
    const double sd = std::sqrt((x.col(c).array() - mean).square().sum() / n);
    x.col(c) = (x.col(c).array() - mean) / sd;
  }
  return x;
}

ModelSetup make_model(const std::string& name, const json& cfg, std::uint64_t seed) {
  ModelSetup m;
  m.name = name;
  const json mp = cfg.contains("model_params") ? cfg.at("model_params") : json::object();
  if (name == "conjugate" || name == "linreg-ig" || name == "linreg-cauchy") {
    const int n = config_or(mp, "observations", 50);
    const int d = config_or(mp, "weights", 5);
    const double noise = config_or(mp, "noise_scale", 0.5);
    const std::uint64_t dseed = config_or(mp, "design_seed", std::uint64_t{20160607});
    Eigen::MatrixXd x = standardized_design(n, d, dseed);
    if (name == "conjugate")
      m.linreg = bread::LinRegModel::fixed_noise(std::move(x), noise);
    else if (name == "linreg-ig")
      m.linreg = bread::LinRegModel::inverse_gaussian_noise(std::move(x),
                                                            config_or(mp, "ig_mean", 1.0),
                                                            config_or(mp, "ig_shape", 1.0));
    else
      m.linreg = bread::LinRegModel::half_cauchy_noise(std::move(x),
                                                       config_or(mp, "cauchy_scale", 5.0));
    m.kernel.kind = bread::KernelKind::gaussian_random_walk_mh;
    m.kernel.proposal_scale = config_or(mp, "proposal_scale", 0.5);
  } else if (name == "mf" || name == "mf-collapsed") {
    const int rows = config_or(mp, "rows", 10);
    const int rank = config_or(mp, "rank", 5);
    const int cols = config_or(mp, "cols", 10);
    const auto rep = name == "mf" ? bread::MfRepresentation::uncollapsed
                                  : bread::MfRepresentation::collapsed;
    m.mf = bread::MatrixFactorizationModel(rows, rank, cols, rep);
    m.kernel.kind = bread::KernelKind::hmc;
    m.kernel.hmc_step_size = config_or(mp, "hmc_step_size", 0.05);
    m.kernel.hmc_leapfrog = config_or(mp, "hmc_leapfrog", 10);
  } else {
    throw CLI::ValidationError("--model", "unknown model: " + name);
  }
  (void)seed;
  return m;
}

// One paired run on a simulated dataset for any bundled model; returns the
// result plus run-record identifiers.
struct PairedRun {
  bread::BdmcResult result;
  double truth = std::numeric_limits<double>::quiet_NaN();  // NaN when unknown
  double forward_seconds = 0.0;
  double reverse_seconds = 0.0;
  std::string forward_record, reverse_record;
};

template <class State, class Kernel, class Init, class Target>
PairedRun paired_run(const bread::GeometricPath<State>& path,
                     const bread::AnnealingSchedule& schedule, const Kernel& kernel, Init&& init,
                     Target&& target, int chains, std::uint64_t seed,
                     const bread::KernelSpec& spec, int threads, const json& base_config,
                     const std::string& store) {
  PairedRun out;
  auto t0 = std::chrono::steady_clock::now();
  const auto fwd = bread::forward_ais(path, schedule, kernel, init, chains,
                                      bread::detail::mix64(seed ^ 0x666f7277ull), spec, threads);
  out.forward_seconds = elapsed_seconds(t0);
  t0 = std::chrono::steady_clock::now();
  const auto rev = target(bread::detail::mix64(seed ^ 0x72657665ull));
  out.reverse_seconds = elapsed_seconds(t0);
  out.result = bread::make_bdmc_result(fwd, rev);

  for (const bread::Direction dir : {bread::Direction::forward, bread::Direction::reverse}) {
    bread::RunRecord rec;
    rec.config = base_config;
    rec.config["direction"] = bread::direction_name(dir);
    rec.config["stages"] = schedule.stages();
    rec.config["chains"] = chains;
    rec.config["seed"] = seed;
    const bool is_fwd = dir == bread::Direction::forward;
    rec.summary["final_chain_log_weights"] =
        is_fwd ? fwd.final_chain_log_weights() : rev.final_chain_log_weights();
    rec.summary["log_mean_weight"] = is_fwd ? fwd.log_mean_weight() : rev.log_mean_weight();
    rec.summary["divergences"] = is_fwd ? fwd.divergences : rev.divergences;
    rec.summary["shared_target_sample"] = is_fwd ? false : rev.shared_target_sample;
    (is_fwd ? out.forward_record : out.reverse_record) = bread::persist_run(rec, store);
  }
  return out;
}

int cmd_bdmc(CommonOptions& opt, const std::string& model_name, const std::string& t_list,
             int chains) {
  const std::uint64_t seed = opt.resolve_seed();
  const ModelSetup setup = make_model(model_name, opt.config, seed);
  auto stages = parse_int_list(t_list);
  std::sort(stages.begin(), stages.end());
  const std::string store = opt.out_dir + "/runs";

  json result;
  result["model"] = model_name;
  result["chains"] = chains;
  result["seed"] = seed;
  result["kernel"] = bread::to_json(setup.kernel);
  json per_t = json::array();
  std::ostringstream csv;
  csv << "T,direction,bound\n";

  json base_config{{"model", model_name}, {"kernel", bread::to_json(setup.kernel)}};

  for (int t : stages) {
    const auto schedule = bread::linear_schedule(t);
    const std::uint64_t t_seed = bread::detail::mix64(seed ^ static_cast<std::uint64_t>(t));
    PairedRun pr;
    if (setup.linreg) {
      const auto& model = *setup.linreg;
      const auto sim = bread::simulate_dataset(model, bread::detail::mix64(seed ^ 0xdada));
      const auto path = bread::posterior_path(model, sim.data);
      const bread::RandomWalkMhKernel kernel{setup.kernel.proposal_scale,
                                             setup.kernel.steps_per_stage};
      auto init = [&model](bread::RngStream& rng) { return model.sample_params(rng); };
      if (!model.has_free_noise()) {
        // conjugate: every reverse chain gets an independent exact draw
        auto target = [&](std::uint64_t s) {
          auto sampler = [&](bread::RngStream& rng) { return model.sample_posterior(sim.data, rng); };
          return bread::reverse_ais(path, schedule, kernel, sampler, chains, s, setup.kernel,
                                    opt.threads);
        };
        pr = paired_run(path, schedule, kernel, init, target, chains, t_seed, setup.kernel,
                        opt.threads, base_config, store);
        pr.truth = model.log_marginal_likelihood(sim.data);
      } else {
        auto target = [&](std::uint64_t s) {
          return bread::reverse_ais_shared(path, schedule, kernel, sim.params,
                                           setup.kernel.steps_per_stage, chains, s, setup.kernel,
                                           opt.threads);
        };
        pr = paired_run(path, schedule, kernel, init, target, chains, t_seed, setup.kernel,
                        opt.threads, base_config, store);
      }
    } else {
      const auto& model = *setup.mf;
      const auto sim = bread::simulate_dataset(model, bread::detail::mix64(seed ^ 0xdada));
      const auto path = bread::posterior_path(model, sim.data);
      const bread::HmcKernel kernel{setup.kernel.hmc_step_size, setup.kernel.hmc_leapfrog,
                                    setup.kernel.steps_per_stage};
      auto init = [&model](bread::RngStream& rng) { return model.sample_params(rng); };
      auto target = [&](std::uint64_t s) {
        return bread::reverse_ais_shared(path, schedule, kernel, sim.params,
                                         setup.kernel.steps_per_stage, chains, s, setup.kernel,
                                         opt.threads);
      };
      pr = paired_run(path, schedule, kernel, init, target, chains, t_seed, setup.kernel,
                      opt.threads, base_config, store);
    }

    std::cerr << "[bread] bdmc " << model_name << " T=" << t << " forward "
              << pr.forward_seconds << "s reverse " << pr.reverse_seconds << "s gap "
              << pr.result.gap << "\n";
    json entry = bread::to_json(pr.result);
    entry["stages"] = t;
    entry["forward_record"] = pr.forward_record;
    entry["reverse_record"] = pr.reverse_record;
    if (!std::isnan(pr.truth)) entry["true_log_ml"] = pr.truth;
    per_t.push_back(entry);
    csv << t << ",forward," << bread::format_double(pr.result.lower) << "\n";
    csv << t << ",reverse," << bread::format_double(pr.result.upper) << "\n";
  }
  result["runs"] = per_t;
  write_text_atomic(opt.out_dir + "/bdmc_result.json", result.dump(2) + "\n");
  write_text_atomic(opt.out_dir + "/bdmc_curves.csv", csv.str());
  std::cout << opt.out_dir + "/bdmc_result.json" << "\n"
            << opt.out_dir + "/bdmc_curves.csv" << "\n";
  return 0;
}

int cmd_bread(CommonOptions& opt, const std::string& data_path, const std::string& target_col,
              const std::string& model_name, const std::string& t_list, int chains) {
  const std::uint64_t seed = opt.resolve_seed();
  const auto ds = bread::load_csv_standardized(data_path, target_col);
  if (ds.rows_dropped > 0)
    std::cerr << "[bread] dropped " << ds.rows_dropped << " incomplete rows from " << data_path
              << "\n";

  bread::LinRegModel model = [&] {
    const json mp = opt.config.contains("model_params") ? opt.config.at("model_params")
                                                        : json::object();
    if (model_name == "linreg-ig")
      return bread::LinRegModel::inverse_gaussian_noise(ds.features,
                                                        config_or(mp, "ig_mean", 1.0),
                                                        config_or(mp, "ig_shape", 1.0));
    if (model_name == "linreg-cauchy" || model_name.empty())
      return bread::LinRegModel::half_cauchy_noise(ds.features,
                                                   config_or(mp, "cauchy_scale", 5.0));
    if (model_name == "conjugate")
      return bread::LinRegModel::fixed_noise(ds.features, config_or(mp, "noise_scale", 1.0));
    throw CLI::ValidationError("--model", "bread supports the regression models");
  }();

  bread::ProtocolConfig pc;
  pc.stage_sweep = parse_int_list(t_list);
  std::sort(pc.stage_sweep.begin(), pc.stage_sweep.end());
  pc.chains = chains;
  pc.refresh_steps = config_or(opt.config, "refresh_steps", pc.refresh_steps);
  pc.hyper_budget = config_or(opt.config, "hyper_budget", pc.hyper_budget);
  pc.fix_hyper_value = config_or(opt.config, "fix_hyper_value", 0.0);
  pc.consistency_threshold = config_or(opt.config, "consistency_threshold", 0.25);
  pc.kernel.proposal_scale = config_or(opt.config, "proposal_scale", 0.5);
  pc.seed = seed;
  pc.threads = opt.threads;

  const auto t0 = std::chrono::steady_clock::now();
  const bread::BreadReport report = bread::run_bread(model, ds.target, pc);
  std::cerr << "[bread] protocol finished in " << elapsed_seconds(t0) << "s\n";

  json out = bread::to_json(report);
  out["dataset"] = {{"path", ds.source_path},
                    {"target", ds.target_name},
                    {"n", ds.n()},
                    {"d", ds.d()},
                    {"rows_dropped", ds.rows_dropped}};
  out["model"] = model_name.empty() ? "linreg-cauchy" : model_name;
  out["seed"] = seed;

  bread::RunRecord rec;
  rec.config = {{"command", "bread"},
                {"model", out["model"]},
                {"dataset", out["dataset"]},
                {"protocol", bread::to_json(pc)}};
  rec.summary = out;
  const std::string id = bread::persist_run(rec, opt.out_dir + "/runs");
  out["run_record"] = id;

  std::ostringstream csv;
  csv << "T,dataset,direction,bound\n";
  for (const auto& p : report.real_forward.points)
    csv << p.stages << ",real,forward," << bread::format_double(p.bound) << "\n";
  for (const auto& p : report.sim_forward.points)
    csv << p.stages << ",simulated,forward," << bread::format_double(p.bound) << "\n";
  for (const auto& p : report.sim_reverse.points)
    csv << p.stages << ",simulated,reverse," << bread::format_double(p.bound) << "\n";

  write_text_atomic(opt.out_dir + "/bread_report.json", out.dump(2) + "\n");
  write_text_atomic(opt.out_dir + "/bread_curves.csv", csv.str());
  std::cout << opt.out_dir + "/bread_report.json" << "\n"
            << opt.out_dir + "/bread_curves.csv" << "\n";
  return 0;
}

int cmd_simulate(CommonOptions& opt, const std::string& model_name) {
  const std::uint64_t seed = opt.resolve_seed();
  const ModelSetup setup = make_model(model_name, opt.config, seed);
  json sample;
  sample["model"] = model_name;
  sample["seed"] = seed;
  std::ostringstream csv;

  if (setup.linreg) {
    const auto& model = *setup.linreg;
    const auto sim = bread::simulate_dataset(model, seed);
    csv << "y";
    for (int c = 0; c < model.weights(); ++c) csv << ",x" << c;
    csv << "\n";
    for (int r = 0; r < model.observations(); ++r) {
      csv << bread::format_double(sim.data[r]);
      for (int c = 0; c < model.weights(); ++c)
        csv << "," << bread::format_double(model.design()(r, c));
      csv << "\n";
    }
    std::vector<double> theta(sim.params.data(), sim.params.data() + sim.params.size());
    sample["exact_posterior_sample"] = theta;
    if (model.has_free_noise()) sample["noise_scale"] = model.noise_scale_of(sim.params);
  } else {
    const auto& model = *setup.mf;
    const auto sim = bread::simulate_dataset(model, seed);
    const Eigen::MatrixXd& y = sim.data;
    for (int c = 0; c < model.cols(); ++c) csv << (c ? "," : "") << "c" << c;
    csv << "\n";
    for (int r = 0; r < model.rows(); ++r) {
      for (int c = 0; c < model.cols(); ++c)
        csv << (c ? "," : "") << bread::format_double(y(r, c));
      csv << "\n";
    }
    std::vector<double> theta(sim.params.data(), sim.params.data() + sim.params.size());
    sample["exact_posterior_sample"] = theta;
    sample["layout"] = model.representation() == bread::MfRepresentation::uncollapsed
                           ? "column-major U then column-major V"
                           : "column-major V";
  }
  const std::string dpath = opt.out_dir + "/simulated_" + model_name + ".csv";
  const std::string spath = opt.out_dir + "/exact_sample_" + model_name + ".json";
  write_text_atomic(dpath, csv.str());
  write_text_atomic(spath, sample.dump(2) + "\n");
  std::cout << dpath << "\n" << spath << "\n";
  return 0;
}

int cmd_report(const std::string& report_path) {
  std::ifstream in(report_path);
  if (!in) throw bread::io_error("cannot open report: " + report_path);
  json r;
  in >> r;

  std::ostringstream out;
  out << "bound-evaluation report (" << report_path << ")\n";
  if (r.contains("dataset"))
    out << "  dataset: " << r["dataset"].value("path", "?") << "  n="
        << r["dataset"].value("n", 0) << " d=" << r["dataset"].value("d", 0) << "\n";
  if (r.contains("model")) out << "  model: " << r.value("model", "?") << "\n";
  if (r.contains("seed")) out << "  seed: " << r.value("seed", std::uint64_t{0}) << "\n";
  if (r.contains("eta_real"))
    out << "  estimated noise scale (real data): " << r.value("eta_real", 0.0)
        << "; simulated at " << r.value("eta_simulated", 0.0) << "\n";
  const auto curve = [&](const char* key, const char* label) {
    if (!r.contains(key)) return;
    out << "  " << label << ":\n";
    for (const auto& p : r[key])
      out << "    T=" << p.value("stages", 0) << "  " << p.value("direction", "?") << "  "
          << p.value("bound", 0.0) << "\n";
  };
  curve("real_forward", "log-ML lower bounds, real data");
  curve("sim_forward", "log-ML lower bounds, simulated data");
  curve("sim_reverse", "log-ML upper bounds, simulated data");
  if (r.contains("gaps")) {
    out << "  bound gaps on simulated data:\n";
    for (const auto& g : r["gaps"])
      out << "    T=" << g.value("stages", 0) << "  gap=" << g.value("gap", 0.0) << " nats\n";
  }
  if (r.contains("refresh_upper")) {
    out << "  upper bound vs refresh steps (largest T):\n";
    for (const auto& g : r["refresh_upper"])
      out << "    L=" << g.value("refresh_steps", 0) << "  upper=" << g.value("upper", 0.0)
          << "\n";
  }
  if (r.contains("consistency")) {
    const auto& c = r["consistency"];
    out << "  real-vs-simulated consistency: max|residual|="
        << c.value("max_abs_residual", 0.0) << " nats, threshold="
        << c.value("threshold_nats", 0.0) << " -> "
        << (c.value("pass", false) ? "PASS" : "FAIL")
        << " (heuristic shape comparison, curves aligned at largest T)\n";
  }
  std::cout << out.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string("bread ") + bread::version_string +
               " - annealing-based sampler evaluation via paired stochastic bounds"};
  app.require_subcommand(1);

  CommonOptions opt;

  // toy-exact
  auto* toy_exact = app.add_subcommand("toy-exact", "exact J/B sweep on a toy grid target");
  std::string te_target = "barrier", te_list = "10,100,1000";
  double te_sigma = 0.0;
  std::uint64_t te_grid_seed = 0;
  int te_sweeps = 1;
  toy_exact->add_option("--target", te_target, "barrier|easy|hard");
  toy_exact->add_option("--T", te_list, "comma-separated stage counts");
  toy_exact->add_option("--sigma", te_sigma, "log-potential std for random targets");
  toy_exact->add_option("--grid-seed", te_grid_seed, "seed for random targets");
  toy_exact->add_option("--sweeps", te_sweeps, "kernel sweeps per stage");
  add_common(toy_exact, opt);

  // toy-ais
  auto* toy_ais = app.add_subcommand("toy-ais", "sampled forward AIS on a toy grid target");
  std::string ta_target = "barrier";
  int ta_stages = 100, ta_chains = 1000;
  double ta_sigma = 0.0;
  std::uint64_t ta_grid_seed = 0;
  toy_ais->add_option("--target", ta_target, "barrier|easy|hard");
  toy_ais->add_option("--T", ta_stages, "stage count");
  toy_ais->add_option("--K", ta_chains, "number of chains");
  toy_ais->add_option("--sigma", ta_sigma, "log-potential std for random targets");
  toy_ais->add_option("--grid-seed", ta_grid_seed, "seed for random targets");
  add_common(toy_ais, opt);

  // bdmc
  auto* bdmc_cmd = app.add_subcommand("bdmc", "paired bounds on a simulated dataset");
  std::string bd_model = "conjugate", bd_list = "100,1000";
  int bd_chains = 16;
  bdmc_cmd->add_option("--model", bd_model, "conjugate|linreg-ig|linreg-cauchy|mf|mf-collapsed");
  bdmc_cmd->add_option("--T", bd_list, "comma-separated stage counts");
  bdmc_cmd->add_option("--K", bd_chains, "number of chains");
  add_common(bdmc_cmd, opt);

  // bread
  auto* bread_cmd = app.add_subcommand("bread", "full protocol on a real CSV dataset");
  std::string br_data, br_target_col = "y", br_model = "linreg-cauchy", br_list = "100,1000";
  int br_chains = 16;
  bread_cmd->add_option("--data", br_data, "CSV dataset with a header row")->required();
  bread_cmd->add_option("--target-column", br_target_col, "name of the response column");
  bread_cmd->add_option("--model", br_model, "linreg-cauchy|linreg-ig|conjugate");
  bread_cmd->add_option("--T", br_list, "comma-separated stage counts");
  bread_cmd->add_option("--K", br_chains, "number of chains");
  add_common(bread_cmd, opt);

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "emit a simulated dataset and its exact posterior sample");
  std::string sm_model = "conjugate";
  sim_cmd->add_option("--model", sm_model, "conjugate|linreg-ig|linreg-cauchy|mf|mf-collapsed");
  add_common(sim_cmd, opt);

  // report
  auto* rep_cmd = app.add_subcommand("report", "render a persisted report as text");
  std::string rp_path;
  rep_cmd->add_option("--report", rp_path, "path to a bread_report.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;  // usage error
  }

  try {
    load_config(opt);
    if (toy_exact->parsed())
      return cmd_toy_exact(opt, te_target, te_list, te_sigma, te_grid_seed, te_sweeps);
    if (toy_ais->parsed())
      return cmd_toy_ais(opt, ta_target, ta_stages, ta_chains, ta_sigma, ta_grid_seed);
    if (bdmc_cmd->parsed()) return cmd_bdmc(opt, bd_model, bd_list, bd_chains);
    if (bread_cmd->parsed())
      return cmd_bread(opt, br_data, br_target_col, br_model, br_list, br_chains);
    if (sim_cmd->parsed()) return cmd_simulate(opt, sm_model);
    if (rep_cmd->parsed()) return cmd_report(rp_path);
  } catch (const CLI::Error& e) {
    app.exit(e);
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
