#include "hzmgp/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace hzmgp::io {

namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  std::string out = s.substr(b, e - b + 1);
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
  return out;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool is_missing(const std::string& s) {
  return s.empty() || s == "NA" || s == "na" || s == "NaN" || s == "nan" || s == ".";
}

std::optional<double> parse_number(const std::string& s) {
  double v = 0.0;
  const char* first = s.data();
  if (!s.empty() && s.front() == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return in;
}

std::string where(std::size_t line) { return "line " + std::to_string(line) + ": "; }

// Rejects keys outside `allowed` so typos in config files do not pass silently.
void check_keys(const json& j, const std::string& section, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw DataError("config: '" + section + "' must be an object");
  for (const auto& [key, _] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      throw DataError("config: unknown key '" + key + "' in '" + section + "'");
  }
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

Eigen::VectorXd to_vector(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> from_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

std::string label_name(const std::optional<ZeroModClass>& label) {
  return label ? std::string(to_string(*label)) : "unclassifiable";
}

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "NA";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

int Dataset::column(const std::string& name) const {
  const auto it = std::find(covariate_names.begin(), covariate_names.end(), name);
  if (it == covariate_names.end()) throw DataError("unknown covariate column '" + name + "'");
  return static_cast<int>(it - covariate_names.begin());
}

bool Dataset::has_event() const {
  return std::any_of(records.begin(), records.end(), [](const SubjectRecord& r) { return r.event; });
}

Dataset read_dataset(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (header.empty() && std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) header = split_csv(line);
  }
  if (header.empty()) throw DataError("dataset is empty (no header row)");

  std::set<std::string> seen;
  for (const auto& h : header) {
    if (h.empty()) throw DataError("header has an empty column name");
    if (!seen.insert(h).second) throw DataError("duplicate column '" + h + "'");
  }
  const auto find = [&](const char* name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError(std::string("missing required column '") + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t time_col = find("time");
  const std::size_t status_col = find("status");

  Dataset data;
  std::vector<std::size_t> cov_cols;
  for (std::size_t k = 0; k < header.size(); ++k) {
    if (k == time_col || k == status_col) continue;
    cov_cols.push_back(k);
    data.covariate_names.push_back(header[k]);
  }

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != header.size())
      throw DataError(where(line_no) + "expected " + std::to_string(header.size()) + " fields, found " +
                      std::to_string(fields.size()));
    std::vector<double> values(fields.size());
    for (std::size_t k = 0; k < fields.size(); ++k) {
      if (is_missing(fields[k])) throw DataError(where(line_no) + "missing value in column '" + header[k] + "'");
      const auto v = parse_number(fields[k]);
      if (!v || !std::isfinite(*v))
        throw DataError(where(line_no) + "non-numeric value '" + fields[k] + "' in column '" + header[k] + "'");
      values[k] = *v;
    }
    const double status = values[status_col];
    if (status != 0.0 && status != 1.0) throw DataError(where(line_no) + "column 'status' must be 0 or 1");
    const double time = values[time_col];
    if (time < 0.0) throw DataError(where(line_no) + "column 'time' must be non-negative");
    if (status == 1.0 && !(time > 0.0)) throw DataError(where(line_no) + "column 'time' must be > 0 when status = 1");
    Eigen::VectorXd x(static_cast<Eigen::Index>(cov_cols.size()));
    for (std::size_t j = 0; j < cov_cols.size(); ++j) x(static_cast<Eigen::Index>(j)) = values[cov_cols[j]];
    data.records.push_back({time, status == 1.0, std::move(x)});
  }
  if (data.records.empty()) throw DataError("dataset has no data rows");
  return data;
}

Dataset read_dataset(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_dataset(in);
}

void write_dataset(std::ostream& out, const Dataset& data) {
  out << "time,status";
  for (const auto& n : data.covariate_names) out << ',' << n;
  out << '\n';
  for (const auto& r : data.records) {
    out << format_double(r.time) << ',' << (r.event ? 1 : 0);
    for (Eigen::Index j = 0; j < r.covariates.size(); ++j) out << ',' << format_double(r.covariates(j));
    out << '\n';
  }
}

bool is_binary(const Dataset& data, int column) {
  return std::all_of(data.records.begin(), data.records.end(), [column](const SubjectRecord& r) {
    const double v = r.covariates(column);
    return v == 0.0 || v == 1.0;
  });
}

Standardization Standardization::fit(const Dataset& data) {
  Standardization s;
  const double n = static_cast<double>(data.size());
  for (std::size_t j = 0; j < data.covariate_names.size(); ++j) {
    const int c = static_cast<int>(j);
    if (is_binary(data, c) || data.size() < 2) continue;
    double mean = 0.0;
    for (const auto& r : data.records) mean += r.covariates(c);
    mean /= n;
    double ss = 0.0;
    for (const auto& r : data.records) ss += (r.covariates(c) - mean) * (r.covariates(c) - mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    if (sd > 0.0) s.columns[data.covariate_names[j]] = {mean, sd};
  }
  return s;
}

void Standardization::apply(Dataset& data) const {
  for (const auto& [name, ms] : columns) {
    const int c = data.column(name);
    for (auto& r : data.records) r.covariates(c) = (r.covariates(c) - ms.first) / ms.second;
  }
}

json Standardization::to_json() const {
  json j = json::object();
  for (const auto& [name, ms] : columns) j[name] = {{"mean", ms.first}, {"sd", ms.second}};
  return j;
}

Standardization Standardization::from_json(const json& j) {
  Standardization s;
  try {
    for (const auto& [name, v] : j.items()) {
      const double sd = v.at("sd").get<double>();
      if (!(sd > 0.0)) throw DataError("standardization sd for '" + name + "' must be > 0");
      s.columns[name] = {v.at("mean").get<double>(), sd};
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("invalid standardization record: ") + e.what());
  }
  return s;
}

json scenario_to_json(const ScenarioSpec& spec) {
  json covs = json::array();
  for (const auto& c : spec.covariates) {
    if (c.kind == CovariateLaw::Kind::Normal)
      covs.push_back({{"name", c.name}, {"dist", "normal"}, {"mean", c.mean}, {"sd", c.sd}});
    else
      covs.push_back({{"name", c.name}, {"dist", "bernoulli"}, {"p", c.p}});
  }
  return {{"name", spec.name},
          {"phi", spec.phi},
          {"beta_omega", from_vector(spec.beta_omega)},
          {"beta_mu", from_vector(spec.beta_mu)},
          {"lambda", spec.lambda},
          {"gamma", spec.gamma},
          {"covariates", covs},
          {"n", spec.n},
          {"replicates", spec.replicates},
          {"tau", spec.tau}};
}

ScenarioSpec scenario_from_json(const json& j) {
  check_keys(j, "scenario",
             {"base", "name", "phi", "beta_omega", "beta_mu", "lambda", "gamma", "covariates", "n", "replicates", "tau"});
  ScenarioSpec s;
  try {
    if (j.contains("base")) {
      const auto base = j.at("base").get<std::string>();
      if (base == "scenario_I") s = ScenarioSpec::scenario_one();
      else if (base == "scenario_II") s = ScenarioSpec::scenario_two();
      else throw DataError("scenario: unknown base '" + base + "' (expected scenario_I or scenario_II)");
    }
    s.name = get_or(j, "name", s.name);
    s.phi = get_or(j, "phi", s.phi);
    if (j.contains("beta_omega")) s.beta_omega = to_vector(j.at("beta_omega"));
    if (j.contains("beta_mu")) s.beta_mu = to_vector(j.at("beta_mu"));
    s.lambda = get_or(j, "lambda", s.lambda);
    s.gamma = get_or(j, "gamma", s.gamma);
    s.n = get_or(j, "n", s.n);
    s.replicates = get_or(j, "replicates", s.replicates);
    s.tau = get_or(j, "tau", s.tau);
    if (j.contains("covariates")) {
      s.covariates.clear();
      for (const auto& c : j.at("covariates")) {
        check_keys(c, "scenario.covariates", {"name", "dist", "mean", "sd", "p"});
        CovariateLaw law;
        law.name = c.at("name").get<std::string>();
        const auto dist = c.at("dist").get<std::string>();
        if (dist == "normal") {
          law.kind = CovariateLaw::Kind::Normal;
          law.mean = get_or(c, "mean", 0.0);
          law.sd = get_or(c, "sd", 1.0);
        } else if (dist == "bernoulli") {
          law.kind = CovariateLaw::Kind::Bernoulli;
          law.p = get_or(c, "p", 0.5);
        } else {
          throw DataError("scenario: covariate '" + law.name + "' has unknown dist '" + dist + "'");
        }
        s.covariates.push_back(law);
      }
    }
    s.validate();
  } catch (const json::exception& e) {
    throw DataError(std::string("scenario: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
  return s;
}

RunConfig parse_config(const json& j) {
  check_keys(j, "config",
             {"description", "seed", "scenario", "prior", "sampler", "classification", "covariates", "diagnostics",
              "study"});
  RunConfig cfg;
  try {
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("scenario")) cfg.scenario = scenario_from_json(j.at("scenario"));
    if (j.contains("prior")) {
      const auto& p = j.at("prior");
      check_keys(p, "prior", {"mean", "sd"});
      cfg.prior = PriorSpec(get_or(p, "mean", 0.0), get_or(p, "sd", 10.0));
    }
    if (j.contains("sampler")) {
      const auto& s = j.at("sampler");
      check_keys(s, "sampler", {"chains", "iterations", "burn_in", "target_acceptance", "max_tree_depth", "metric"});
      SamplerConfig& sc = cfg.sampler;
      sc.chains = get_or(s, "chains", sc.chains);
      sc.iterations = get_or(s, "iterations", sc.iterations);
      sc.burn_in = get_or(s, "burn_in", sc.burn_in);
      sc.target_acceptance = get_or(s, "target_acceptance", sc.target_acceptance);
      sc.max_tree_depth = get_or(s, "max_tree_depth", sc.max_tree_depth);
      const auto metric = get_or<std::string>(s, "metric", "diagonal");
      if (metric == "diagonal") sc.metric = SamplerConfig::Metric::Diagonal;
      else if (metric == "dense") sc.metric = SamplerConfig::Metric::Dense;
      else throw DataError("sampler: metric must be 'diagonal' or 'dense'");
    }
    cfg.sampler.validate();
    if (j.contains("classification")) {
      const auto& c = j.at("classification");
      check_keys(c, "classification", {"alpha"});
      cfg.classification = ClassificationConfig(get_or(c, "alpha", 0.1));
    }
    if (j.contains("covariates")) {
      const auto& c = j.at("covariates");
      check_keys(c, "covariates", {"omega", "mu", "standardize"});
      if (c.contains("omega") && !c.at("omega").is_null())
        cfg.omega_covariates = c.at("omega").get<std::vector<std::string>>();
      if (c.contains("mu") && !c.at("mu").is_null()) cfg.mu_covariates = c.at("mu").get<std::vector<std::string>>();
      cfg.standardize = get_or(c, "standardize", true);
    }
    if (j.contains("diagnostics")) {
      const auto& d = j.at("diagnostics");
      check_keys(d, "diagnostics", {"rhat_limit", "warn_only"});
      cfg.diagnostics.rhat_limit = get_or(d, "rhat_limit", 1.05);
      cfg.diagnostics.warn_only = get_or(d, "warn_only", false);
      if (!(cfg.diagnostics.rhat_limit >= 1.0)) throw DataError("diagnostics: rhat_limit must be >= 1");
    }
    if (j.contains("study")) {
      const auto& s = j.at("study");
      check_keys(s, "study", {"replicate_workers"});
      cfg.replicate_workers = get_or(s, "replicate_workers", 1);
      if (cfg.replicate_workers < 1) throw DataError("study: replicate_workers must be >= 1");
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("config: ") + e.what());
  }
  return cfg;
}

RunConfig read_config(const std::filesystem::path& path) {
  auto in = open_input(path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

json RunConfig::to_json() const {
  json j;
  if (seed) j["seed"] = *seed;
  if (scenario) j["scenario"] = scenario_to_json(*scenario);
  j["prior"] = {{"mean", prior.mean}, {"sd", prior.sd}};
  j["sampler"] = {{"chains", sampler.chains},
                  {"iterations", sampler.iterations},
                  {"burn_in", sampler.burn_in},
                  {"target_acceptance", sampler.target_acceptance},
                  {"max_tree_depth", sampler.max_tree_depth},
                  {"metric", sampler.metric == SamplerConfig::Metric::Dense ? "dense" : "diagonal"}};
  j["classification"] = {{"alpha", classification.alpha}};
  j["covariates"] = {{"omega", omega_covariates ? json(*omega_covariates) : json(nullptr)},
                     {"mu", mu_covariates ? json(*mu_covariates) : json(nullptr)},
                     {"standardize", standardize}};
  j["diagnostics"] = {{"rhat_limit", diagnostics.rhat_limit}, {"warn_only", diagnostics.warn_only}};
  j["study"] = {{"replicate_workers", replicate_workers}};
  return j;
}

PredictorColumns resolve_columns(const Dataset& data, const RunConfig& cfg) {
  PredictorColumns cols;
  cols.omega = cfg.omega_covariates.value_or(data.covariate_names);
  cols.mu = cfg.mu_covariates.value_or(data.covariate_names);
  for (const auto& n : cols.omega) data.column(n);
  for (const auto& n : cols.mu) data.column(n);
  return cols;
}

SurvivalData to_survival_data(const Dataset& data, const PredictorColumns& cols) {
  std::vector<int> omega, mu;
  for (const auto& n : cols.omega) omega.push_back(data.column(n));
  for (const auto& n : cols.mu) mu.push_back(data.column(n));
  return make_survival_data(data.records, omega, mu);
}

void write_draws(std::ostream& out, const PosteriorDraws& draws) {
  for (std::size_t k = 0; k < draws.names.size(); ++k) out << (k ? "," : "") << draws.names[k];
  out << '\n';
  for (Eigen::Index i = 0; i < draws.draws.rows(); ++i) {
    for (Eigen::Index j = 0; j < draws.draws.cols(); ++j) out << (j ? "," : "") << format_double(draws.draws(i, j));
    out << '\n';
  }
}

PosteriorDraws read_draws(std::istream& in, int chains) {
  if (chains < 1) throw DataError("draws: chains must be >= 1");
  std::string line;
  if (!std::getline(in, line)) throw DataError("draws file is empty");
  const auto header = split_csv(line);
  ParameterLayout layout;
  layout.n_omega = static_cast<int>(std::count_if(header.begin(), header.end(), [](const std::string& h) {
    return h.rfind("beta_omega_", 0) == 0;
  }));
  layout.n_mu = static_cast<int>(
      std::count_if(header.begin(), header.end(), [](const std::string& h) { return h.rfind("beta_mu_", 0) == 0; }));
  if (layout.n_omega < 1 || layout.n_mu < 1 || header != layout.names())
    throw DataError("draws header does not match the parameter layout beta_omega_*, beta_mu_*, theta_phi, "
                    "theta_lambda, theta_gamma");

  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != header.size())
      throw DataError("draws " + where(line_no) + "expected " + std::to_string(header.size()) + " fields");
    std::vector<double> row;
    for (const auto& f : fields) {
      const auto v = parse_number(f);
      if (!v || !std::isfinite(*v)) throw DataError("draws " + where(line_no) + "invalid value '" + f + "'");
      row.push_back(*v);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError("draws file has no rows");
  if (rows.size() % static_cast<std::size_t>(chains) != 0)
    throw DataError("draws: " + std::to_string(rows.size()) + " rows do not split into " + std::to_string(chains) +
                    " chains");

  PosteriorDraws out;
  out.layout = layout;
  out.names = header;
  out.chains = chains;
  out.draws_per_chain = static_cast<int>(rows.size()) / chains;
  out.draws.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(header.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < header.size(); ++j)
      out.draws(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  if (out.draws_per_chain >= 4) out.compute_diagnostics();
  return out;
}

PosteriorDraws read_draws(const std::filesystem::path& path, int chains) {
  auto in = open_input(path);
  return read_draws(in, chains);
}

void write_summary(std::ostream& out, const std::vector<ParameterSummary>& summary) {
  out << "parameter,mean,sd,q2.5,q97.5\n";
  for (const auto& s : summary)
    out << s.name << ',' << format_double(s.mean) << ',' << format_double(s.sd) << ',' << format_double(s.q025)
        << ',' << format_double(s.q975) << '\n';
}

void write_diagnostics(std::ostream& out, const PosteriorDraws& draws) {
  out << "parameter,rhat,ess,ess_degenerate\n";
  for (std::size_t j = 0; j < draws.names.size(); ++j) {
    const auto k = static_cast<Eigen::Index>(j);
    const double rhat = draws.r_hat.size() > k ? draws.r_hat(k) : std::nan("");
    const double ess = draws.ess.size() > k ? draws.ess(k) : std::nan("");
    const bool degenerate = j < draws.ess_degenerate.size() && draws.ess_degenerate[j];
    out << draws.names[j] << ',' << format_double(rhat) << ',' << format_double(ess) << ',' << (degenerate ? 1 : 0)
        << '\n';
  }
  out << "divergences,," << draws.divergences << ",\n";
}

void write_classification(std::ostream& out, const PopulationClassification& pc) {
  out << "subject,label,prob_below_threshold,prob_omega_lt_1\n";
  for (const auto& s : pc.subjects)
    out << (s.subject + 1) << ',' << label_name(s.label) << ',' << format_double(s.prob_below_threshold) << ','
        << format_double(s.prob_omega_lt_1) << '\n';
}

json population_to_json(const PopulationClassification& pc, double alpha) {
  json props = json::object();
  for (ZeroModClass c : kAllClasses) props[to_string(c)] = pc.proportion(c);
  props["unclassifiable"] = pc.unclassifiable;
  return {{"alpha", alpha}, {"subjects", pc.subjects.size()}, {"proportions", props}};
}

void write_study_report(std::ostream& out, const SimulationReport& report) {
  out << "parameter,truth,mean,sd,cp\n";
  for (const auto& p : report.parameters)
    out << p.name << ',' << format_double(p.truth) << ',' << format_double(p.mean_of_means) << ','
        << format_double(p.mean_of_sds) << ',' << format_double(p.coverage) << '\n';
  for (ZeroModClass c : kAllClasses)
    out << "prop_" << to_string(c) << ",," << format_double(report.proportions[static_cast<std::size_t>(c)])
        << ",,\n";
  out << "prop_unclassifiable,," << format_double(report.unclassifiable) << ",,\n";
}

void write_study_replicates(std::ostream& out, const SimulationReport& report) {
  out << "replicate,ok,censored_fraction,max_rhat,min_ess,divergences,error\n";
  for (const auto& r : report.runs) {
    std::string err = r.error;
    std::replace(err.begin(), err.end(), ',', ';');
    out << r.index << ',' << (r.ok ? 1 : 0) << ',' << format_double(r.censored_fraction) << ','
        << format_double(r.ok ? r.max_rhat : std::nan("")) << ',' << format_double(r.ok ? r.min_ess : std::nan(""))
        << ',' << r.divergences << ',' << err << '\n';
  }
}

void write_study_summary(std::ostream& out, const SimulationReport& report) {
  out << report.scenario << ": n = " << report.n << ", " << report.completed << " of " << report.replicates
      << " replicates completed";
  if (report.failed > 0) out << " (" << report.failed << " sampler failures excluded)";
  out << "\n\n";
  out << std::left << std::setw(16) << "parameter" << std::right << std::setw(10) << "truth" << std::setw(10)
      << "mean" << std::setw(10) << "sd" << std::setw(8) << "cp" << '\n';
  out << std::fixed;
  for (const auto& p : report.parameters)
    out << std::left << std::setw(16) << p.name << std::right << std::setprecision(3) << std::setw(10) << p.truth
        << std::setw(10) << p.mean_of_means << std::setw(10) << p.mean_of_sds << std::setprecision(2)
        << std::setw(8) << p.coverage << '\n';
  out << "\nclassification proportions\n";
  for (ZeroModClass c : kAllClasses)
    out << "  " << std::left << std::setw(16) << to_string(c) << std::right << std::setprecision(3)
        << report.proportions[static_cast<std::size_t>(c)] << '\n';
  out << "  " << std::left << std::setw(16) << "unclassifiable" << std::right << report.unclassifiable << '\n';
  out.unsetf(std::ios::fixed);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

void write_json(const std::filesystem::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

}  // namespace hzmgp::io
