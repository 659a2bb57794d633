#ifndef HZMGP_IO_HPP
#define HZMGP_IO_HPP

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "hzmgp/classify.hpp"
#include "hzmgp/fit.hpp"
#include "hzmgp/simulation.hpp"
#include "hzmgp/survival_model.hpp"

namespace hzmgp::io {

inline constexpr const char* kVersion = "0.1.0";

/// Invalid dataset, draws file or configuration. The CLI maps it to exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// CSV with header; `time` and `status` are required, every other column is a numeric covariate.
struct Dataset {
  std::vector<std::string> covariate_names;
  std::vector<SubjectRecord> records;

  std::size_t size() const { return records.size(); }
  /// Index of a covariate column; throws DataError naming the column when absent.
  int column(const std::string& name) const;
  bool has_event() const;
};

Dataset read_dataset(std::istream& in);
Dataset read_dataset(const std::filesystem::path& path);
void write_dataset(std::ostream& out, const Dataset& data);

/// Columns whose values are all 0 or 1.
bool is_binary(const Dataset& data, int column);

/// Centre/scale applied to non-binary covariates before fitting.
struct Standardization {
  std::map<std::string, std::pair<double, double>> columns;  // name -> (mean, sd)

  static Standardization fit(const Dataset& data);
  void apply(Dataset& data) const;
  nlohmann::json to_json() const;
  static Standardization from_json(const nlohmann::json& j);
};

struct DiagnosticsPolicy {
  double rhat_limit = 1.05;
  bool warn_only = false;
};

struct RunConfig {
  PriorSpec prior;
  SamplerConfig sampler;
  ClassificationConfig classification;
  std::optional<std::vector<std::string>> omega_covariates;  // default: all
  std::optional<std::vector<std::string>> mu_covariates;
  bool standardize = true;
  DiagnosticsPolicy diagnostics;
  std::optional<std::uint64_t> seed;
  std::optional<ScenarioSpec> scenario;
  int replicate_workers = 1;

  FitConfig fit_config() const { return {sampler, prior, classification, replicate_workers}; }
  nlohmann::json to_json() const;
};

/// Parses the single JSON config format shared by every subcommand. Unknown
/// keys and out-of-range values raise DataError.
RunConfig parse_config(const nlohmann::json& j);
RunConfig read_config(const std::filesystem::path& path);

nlohmann::json scenario_to_json(const ScenarioSpec& spec);
ScenarioSpec scenario_from_json(const nlohmann::json& j);

/// Covariate names used by each predictor, in design-matrix order.
struct PredictorColumns {
  std::vector<std::string> omega;
  std::vector<std::string> mu;
};

PredictorColumns resolve_columns(const Dataset& data, const RunConfig& cfg);
/// Design matrices for the given columns; throws DataError for unknown names.
SurvivalData to_survival_data(const Dataset& data, const PredictorColumns& cols);

/// One row per draw, header of unconstrained parameter names, chain-major.
void write_draws(std::ostream& out, const PosteriorDraws& draws);
/// Rebuilds the layout from the header; chains defaults to one.
PosteriorDraws read_draws(std::istream& in, int chains = 1);
PosteriorDraws read_draws(const std::filesystem::path& path, int chains = 1);

void write_summary(std::ostream& out, const std::vector<ParameterSummary>& summary);
void write_diagnostics(std::ostream& out, const PosteriorDraws& draws);
void write_classification(std::ostream& out, const PopulationClassification& pc);
nlohmann::json population_to_json(const PopulationClassification& pc, double alpha);

void write_study_report(std::ostream& out, const SimulationReport& report);
void write_study_replicates(std::ostream& out, const SimulationReport& report);
void write_study_summary(std::ostream& out, const SimulationReport& report);

/// Shortest round-trip decimal form.
std::string format_double(double x);

void write_text(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace hzmgp::io

#endif  // HZMGP_IO_HPP
