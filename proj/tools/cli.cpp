#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "hzmgp/io.hpp"

namespace hzmgp::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

enum class Level { Quiet = 0, Info = 1, Debug = 2 };

// HZMGP_LOG = quiet | info | debug
Level log_level() {
  const char* env = std::getenv("HZMGP_LOG");
  if (!env) return Level::Info;
  const std::string v(env);
  if (v == "quiet" || v == "0") return Level::Quiet;
  if (v == "debug" || v == "2") return Level::Debug;
  return Level::Info;
}

void log(Level level, const std::string& msg) {
  if (static_cast<int>(level) <= static_cast<int>(log_level())) std::cerr << "hzmgp: " << msg << '\n';
}

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "JSON config file");
  cmd->add_option("--seed", c.seed, "Random seed (overrides the config)");
  cmd->add_option("--out", c.out, "Output directory")->capture_default_str();
}

io::RunConfig load_config(const Common& c) { return c.config.empty() ? io::RunConfig{} : io::read_config(c.config); }

std::uint64_t resolve_seed(const Common& c, const io::RunConfig& cfg) { return c.seed.value_or(cfg.seed.value_or(1)); }

fs::path prepare_out(const Common& c) {
  const fs::path out(c.out);
  fs::create_directories(out);
  return out;
}

template <class Writer>
void write_csv(const fs::path& path, Writer&& writer) {
  std::ostringstream os;
  writer(os);
  io::write_text(path, os.str());
}

const ScenarioSpec& require_scenario(const io::RunConfig& cfg) {
  if (!cfg.scenario) throw io::DataError("config has no 'scenario' section");
  return *cfg.scenario;
}

json manifest_base(const std::string& command, std::uint64_t seed, const io::RunConfig& cfg) {
  return {{"tool", "hzmgp"}, {"version", io::kVersion}, {"command", command}, {"seed", seed}, {"config", cfg.to_json()}};
}

// Maps draws of the coefficients of standardized covariates back to the
// original covariate scale.
PosteriorDraws to_original_scale(const PosteriorDraws& draws, const io::PredictorColumns& cols,
                                 const io::Standardization& st) {
  PosteriorDraws out = draws;
  auto rescale = [&](int begin, const std::vector<std::string>& names) {
    for (std::size_t j = 0; j < names.size(); ++j) {
      const auto it = st.columns.find(names[j]);
      if (it == st.columns.end()) continue;
      const auto [mean, sd] = it->second;
      const Eigen::Index col = begin + 1 + static_cast<Eigen::Index>(j);
      out.draws.col(col) = draws.draws.col(col) / sd;
      out.draws.col(begin) -= draws.draws.col(col) * (mean / sd);
    }
  };
  rescale(draws.layout.omega_begin(), cols.omega);
  rescale(draws.layout.mu_begin(), cols.mu);
  return out;
}

int cmd_fit(const Common& c, const std::string& data_path) {
  const io::RunConfig cfg = load_config(c);
  const std::uint64_t seed = resolve_seed(c, cfg);
  io::Dataset data = io::read_dataset(data_path);
  if (!data.has_event()) throw io::DataError("at least one event required (every row has status = 0)");
  const io::PredictorColumns cols = io::resolve_columns(data, cfg);
  io::Standardization st;
  if (cfg.standardize) st = io::Standardization::fit(data);
  st.apply(data);
  const SurvivalData sd = io::to_survival_data(data, cols);

  SamplerConfig sampler = cfg.sampler;
  sampler.seed = seed;
  log(Level::Info, "fitting " + std::to_string(data.size()) + " subjects with " + std::to_string(sampler.chains) +
                       " chains x " + std::to_string(sampler.iterations) + " iterations");
  const PosteriorDraws draws = run_sampler(sd, sampler, cfg.prior);

  const fs::path out = prepare_out(c);
  write_csv(out / "draws.csv", [&](std::ostream& os) { io::write_draws(os, draws); });
  write_csv(out / "summary.csv", [&](std::ostream& os) { io::write_summary(os, summarize(draws)); });
  if (!st.columns.empty())
    write_csv(out / "summary_original_scale.csv",
              [&](std::ostream& os) { io::write_summary(os, summarize(to_original_scale(draws, cols, st))); });
  write_csv(out / "diagnostics.csv", [&](std::ostream& os) { io::write_diagnostics(os, draws); });

  json manifest = manifest_base("fit", seed, cfg);
  std::size_t events = 0;
  for (const auto& r : data.records) events += r.event;
  manifest["data"] = {{"path", data_path}, {"rows", data.size()}, {"events", events},
                      {"covariates", data.covariate_names}};
  manifest["predictors"] = {{"omega", cols.omega}, {"mu", cols.mu}};
  manifest["standardization"] = st.to_json();
  manifest["chains"] = draws.chains;
  manifest["draws_per_chain"] = draws.draws_per_chain;
  manifest["parameters"] = draws.names;
  io::write_json(out / "manifest.json", manifest);

  log(Level::Info, "divergences: " + std::to_string(draws.divergences) + ", mean acceptance " +
                       io::format_double(draws.mean_accept_stat));
  const double limit = cfg.diagnostics.rhat_limit;
  std::vector<std::string> bad;
  for (Eigen::Index j = 0; j < draws.r_hat.size(); ++j)
    if (draws.r_hat(j) > limit) bad.push_back(draws.names[j] + " (" + io::format_double(draws.r_hat(j)) + ")");
  if (!bad.empty()) {
    std::string msg = "R-hat above " + io::format_double(limit) + " for";
    for (const auto& b : bad) msg += " " + b;
    log(Level::Quiet, (cfg.diagnostics.warn_only ? "warning: " : "error: ") + msg);
    if (!cfg.diagnostics.warn_only) return kDiagnosticsFailure;
  }
  return kOk;
}

int cmd_simulate(const Common& c) {
  const io::RunConfig cfg = load_config(c);
  const ScenarioSpec& spec = require_scenario(cfg);
  const std::uint64_t seed = resolve_seed(c, cfg);
  Rng rng = make_stream(seed, 0);
  const SimulatedDataset sim = generate_dataset(spec, rng);

  io::Dataset data;
  for (const auto& law : spec.covariates) data.covariate_names.push_back(law.name);
  data.records = sim.records;

  const fs::path out = prepare_out(c);
  write_csv(out / "data.csv", [&](std::ostream& os) { io::write_dataset(os, data); });
  write_csv(out / "truth_subjects.csv", [&](std::ostream& os) {
    os << "subject,frailty,cured,omega,mu,latent_time\n";
    for (std::size_t i = 0; i < data.size(); ++i)
      os << (i + 1) << ',' << sim.frailty[i] << ',' << (sim.frailty[i] == 0 ? 1 : 0) << ','
         << io::format_double(sim.omega[i]) << ',' << io::format_double(sim.mu[i]) << ','
         << io::format_double(sim.latent_time[i]) << '\n';
  });

  double cured = 0.0, expected_cured = 0.0, censored = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    cured += sim.frailty[i] == 0;
    expected_cured += 1.0 - sim.omega[i];
    censored += !sim.records[i].event;
  }
  const double n = static_cast<double>(data.size());
  json truth = {{"tool", "hzmgp"},
                {"version", io::kVersion},
                {"seed", seed},
                {"scenario", io::scenario_to_json(spec)},
                {"cured_fraction", cured / n},
                {"expected_cured_fraction", expected_cured / n},
                {"censored_fraction", censored / n}};
  io::write_json(out / "truth.json", truth);
  log(Level::Info, "simulated " + std::to_string(data.size()) + " subjects; cured fraction " +
                       io::format_double(cured / n) + ", censored fraction " + io::format_double(censored / n));
  return kOk;
}

int cmd_classify(const Common& c, const std::string& draws_path, const std::string& data_path,
                 std::optional<double> alpha, std::string manifest_path) {
  const io::RunConfig cfg = load_config(c);
  const ClassificationConfig cls = alpha ? ClassificationConfig(*alpha) : cfg.classification;

  if (manifest_path.empty()) {
    const fs::path guess = fs::path(draws_path).parent_path() / "manifest.json";
    if (fs::exists(guess)) manifest_path = guess.string();
  }
  io::Dataset data = io::read_dataset(data_path);
  io::PredictorColumns cols{data.covariate_names, data.covariate_names};
  io::Standardization st;
  int chains = 1;
  if (!manifest_path.empty()) {
    std::ifstream in(manifest_path);
    if (!in) throw io::DataError("cannot open manifest '" + manifest_path + "'");
    try {
      const json m = json::parse(in);
      cols.omega = m.at("predictors").at("omega").get<std::vector<std::string>>();
      cols.mu = m.at("predictors").at("mu").get<std::vector<std::string>>();
      st = io::Standardization::from_json(m.at("standardization"));
      chains = m.at("chains").get<int>();
    } catch (const json::exception& e) {
      throw io::DataError("manifest '" + manifest_path + "' is incomplete: " + e.what());
    }
    log(Level::Debug, "using manifest " + manifest_path);
  }
  st.apply(data);
  const SurvivalData sd = io::to_survival_data(data, cols);
  const PosteriorDraws draws = io::read_draws(fs::path(draws_path), chains);
  if (draws.layout.n_omega != sd.x_omega.cols() || draws.layout.n_mu != sd.x_mu.cols())
    throw io::DataError("draws have " + std::to_string(draws.layout.n_omega - 1) + " omega and " +
                        std::to_string(draws.layout.n_mu - 1) + " mu covariates, dataset provides " +
                        std::to_string(sd.x_omega.cols() - 1) + " and " + std::to_string(sd.x_mu.cols() - 1));
  const PopulationClassification pc = classify_population(draws, sd, cls);

  const fs::path out = prepare_out(c);
  write_csv(out / "classification.csv", [&](std::ostream& os) { io::write_classification(os, pc); });
  json pop = io::population_to_json(pc, cls.alpha);
  pop["tool"] = "hzmgp";
  pop["version"] = io::kVersion;
  io::write_json(out / "population.json", pop);
  for (ZeroModClass k : kAllClasses)
    std::cout << to_string(k) << ' ' << io::format_double(pc.proportion(k)) << '\n';
  std::cout << "unclassifiable " << io::format_double(pc.unclassifiable) << '\n';
  return kOk;
}

int cmd_study(const Common& c) {
  const io::RunConfig cfg = load_config(c);
  const ScenarioSpec& spec = require_scenario(cfg);
  const std::uint64_t seed = resolve_seed(c, cfg);
  log(Level::Info, "study " + spec.name + ": " + std::to_string(spec.replicates) + " replicates of n = " +
                       std::to_string(spec.n));
  const SimulationReport report = run_study(spec, cfg.fit_config(), seed, [](const ReplicateResult& r) {
    log(Level::Info, "replicate " + std::to_string(r.index) + (r.ok ? " done" : " failed: " + r.error) + " in " +
                         io::format_double(std::round(r.seconds * 10.0) / 10.0) + " s");
  });

  const fs::path out = prepare_out(c);
  write_csv(out / "report.csv", [&](std::ostream& os) { io::write_study_report(os, report); });
  write_csv(out / "replicates.csv", [&](std::ostream& os) { io::write_study_replicates(os, report); });
  std::ostringstream summary;
  io::write_study_summary(summary, report);
  io::write_text(out / "summary.txt", summary.str());
  write_csv(out / "timing.csv", [&](std::ostream& os) {
    os << "replicate,seconds\n";
    for (const auto& r : report.runs) os << r.index << ',' << io::format_double(r.seconds) << '\n';
  });
  io::write_json(out / "manifest.json", manifest_base("study", seed, cfg));
  std::cout << summary.str();
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Bayesian cure-rate survival model with zero-modified generalized Poisson frailty", "hzmgp"};
  app.set_version_flag("--version", io::kVersion);
  app.require_subcommand(1);

  Common common;
  std::string data_path, draws_path, manifest_path;
  std::optional<double> alpha;

  auto* fit = app.add_subcommand("fit", "Fit the model to a dataset CSV");
  add_common(fit, common);
  fit->add_option("--data", data_path, "Dataset CSV (time, status, covariates)")->required();

  auto* simulate = app.add_subcommand("simulate", "Generate a dataset from a scenario config");
  add_common(simulate, common);

  auto* classify = app.add_subcommand("classify", "Classify subjects from posterior draws");
  add_common(classify, common);
  classify->add_option("--draws", draws_path, "draws.csv written by fit")->required();
  classify->add_option("--data", data_path, "Dataset CSV")->required();
  classify->add_option("--alpha", alpha, "Decision level in (0, 0.5)");
  classify->add_option("--manifest", manifest_path, "Fit manifest (default: next to the draws file)");

  auto* study = app.add_subcommand("study", "Replicated simulation study for a scenario config");
  add_common(study, common);

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalidInput;
  }

  try {
    if (fit->parsed()) return cmd_fit(common, data_path);
    if (simulate->parsed()) return cmd_simulate(common);
    if (classify->parsed()) return cmd_classify(common, draws_path, data_path, alpha, manifest_path);
    if (study->parsed()) return cmd_study(common);
  } catch (const io::DataError& e) {
    log(Level::Quiet, std::string("error: ") + e.what());
    return kInvalidInput;
  } catch (const std::invalid_argument& e) {
    log(Level::Quiet, std::string("error: ") + e.what());
    return kInvalidInput;
  } catch (const SamplerError& e) {
    log(Level::Quiet, std::string("sampler failure: ") + e.what());
    return kSamplerFailure;
  } catch (const std::exception& e) {
    log(Level::Quiet, std::string("error: ") + e.what());
    return kFailure;
  }
  return kFailure;
}

}  // namespace hzmgp::cli
