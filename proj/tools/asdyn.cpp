// Command-line pipeline: simulate, calibrate, fit, summarize and check.

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>
#include <unistd.h>

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include "asdyn/blanket_model.hpp"
#include "asdyn/calibration.hpp"
#include "asdyn/dataset.hpp"
#include "asdyn/diagnostics.hpp"
#include "asdyn/draws_io.hpp"
#include "asdyn/hmc.hpp"
#include "asdyn/model_spec.hpp"
#include "asdyn/pipeline.hpp"
#include "asdyn/quantile.hpp"
#include "asdyn/resampled_model.hpp"
#include "asdyn/simulate.hpp"
#include "asdyn/summaries.hpp"

#ifndef ASDYN_VERSION
#define ASDYN_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace asdyn;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
/// Results were written but more than 1% of parameters have R-hat above 1.05.
constexpr int kExitConvergence = 3;
constexpr double kRhatWarn = 1.05;
constexpr double kRhatWarnFraction = 0.01;

class CliError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliError("cannot read '" + path.string() + "'");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw CliError("SHA-256 unavailable");
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return hex.str();
}

/// Outputs are written to a hidden sibling directory and renamed into place on commit.
class StagedOutput {
 public:
  StagedOutput(const fs::path& final_dir, bool force) : final_(fs::absolute(final_dir).lexically_normal()) {
    if (final_.filename().empty()) final_ = final_.parent_path();
    if (fs::exists(final_) && !force) {
      throw CliError("output directory '" + final_dir.string() + "' exists; pass --force to replace it");
    }
    fs::create_directories(final_.parent_path());
    staging_ = final_.parent_path() / ("." + final_.filename().string() + ".tmp-" + std::to_string(::getpid()));
    fs::remove_all(staging_);
    fs::create_directory(staging_);
  }
  StagedOutput(const StagedOutput&) = delete;
  StagedOutput& operator=(const StagedOutput&) = delete;
  ~StagedOutput() {
    std::error_code ec;
    if (!committed_) fs::remove_all(staging_, ec);
  }

  [[nodiscard]] fs::path path(const std::string& name) const { return staging_ / name; }
  [[nodiscard]] const fs::path& staging() const noexcept { return staging_; }

  void commit() {
    if (fs::exists(final_)) fs::remove_all(final_);
    fs::rename(staging_, final_);
    committed_ = true;
  }

 private:
  fs::path final_;
  fs::path staging_;
  bool committed_ = false;
};

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw CliError("cannot write '" + path.string() + "'");
  return out;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out = open_out(path);
  out << j.dump(2) << '\n';
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw CliError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw CliError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

/// Run record: configuration, seed, input digests, output digests and stage timings.
class Manifest {
 public:
  Manifest(std::string command, const RunConfig& config) {
    j_["command"] = std::move(command);
    j_["version"] = ASDYN_VERSION;
    j_["seed"] = config.sampler.seed;
    std::ostringstream cfg;
    write_config(cfg, config);
    j_["config"] = cfg.str();
    j_["inputs"] = json::array();
    j_["timings_s"] = json::object();
  }

  void input(const fs::path& path) {
    if (!fs::exists(path)) throw CliError("input file '" + path.string() + "' does not exist");
    j_["inputs"].push_back({{"path", path.string()}, {"sha256", sha256_file(path)}, {"bytes", fs::file_size(path)}});
  }

  template <class F>
  auto timed(const std::string& stage, F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    auto finish = [&] { j_["timings_s"][stage] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      finish();
    } else {
      auto r = f();
      finish();
      return r;
    }
  }

  void set(const std::string& key, json value) { j_[key] = std::move(value); }

  /// Digests every file already staged, then writes manifest.json alongside them.
  void write(const StagedOutput& out) {
    json outputs = json::array();
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(out.staging())) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) outputs.push_back({{"file", f.filename().string()}, {"sha256", sha256_file(f)}});
    j_["outputs"] = outputs;
    write_json(out.path("manifest.json"), j_);
  }

 private:
  json j_;
};

/// Options shared by every pipeline subcommand.
struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string out;
  bool force = false;
};

void add_common(CLI::App* app, CommonOptions& o, bool with_out = true) {
  app->add_option("--config", o.config_path, "key = value configuration file (see 'config init')");
  app->add_option("--seed", o.seed, "random seed; overrides AQ_SEED and the config file");
  app->add_option("--threads", o.threads, "worker threads for chains")->check(CLI::PositiveNumber);
  if (with_out) {
    app->add_option("--out", o.out, "output directory")->required();
    app->add_flag("--force", o.force, "replace an existing output directory");
  }
}

RunConfig resolve_config(const CommonOptions& o) {
  RunConfig c = o.config_path.empty() ? RunConfig{} : load_config(o.config_path);
  if (const char* env = std::getenv("AQ_SEED"); env && *env) set_config_value(c, "seed", env);
  if (o.seed) c.sampler.seed = *o.seed;
  if (o.threads) c.sampler.threads = *o.threads;
  return c;
}

Dataset load(const std::string& path, Schema schema, Manifest& manifest) {
  manifest.input(path);
  return load_survey(path, schema);
}

json standardization_json(const Standardization& s) {
  return {{"east_offset", s.east_offset}, {"north_offset", s.north_offset}, {"east_extent", s.east_extent}};
}

int finish_fit(const PosteriorDraws& draws, StagedOutput& out, Manifest& manifest, const json& info) {
  const DiagnosticsReport report = manifest.timed("diagnostics", [&] { return diagnose(draws); });
  manifest.timed("write", [&] {
    std::ofstream csv = open_out(out.path("draws.csv"));
    write_draws_csv(csv, draws);
    csv.close();
    write_json(out.path("diagnostics.json"), diagnostics_json(report, draws));
    write_json(out.path("fit_info.json"), info);
  });
  const double frac = report.fraction_rhat_above(kRhatWarn);
  manifest.set("fraction_rhat_above_1_05", frac);
  manifest.write(out);
  out.commit();
  std::cerr << "draws: " << draws.n_chains << " chains x " << draws.n_draws << ", divergences " << draws.total_divergences();
  if (const auto m = report.max_rhat()) std::cerr << ", max R-hat " << *m;
  std::cerr << '\n';
  if (frac > kRhatWarnFraction) {
    std::cerr << "warning: R-hat > " << kRhatWarn << " for " << 100.0 * frac << "% of parameters\n";
    return kExitConvergence;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_simulate(const CommonOptions& o) {
  const RunConfig config = resolve_config(o);
  StagedOutput out(o.out, o.force);
  Manifest manifest("simulate", config);
  if (!o.config_path.empty()) manifest.input(o.config_path);
  const std::uint64_t seed = config.sampler.seed;
  auto save = [&](const Dataset& d, const std::string& name) {
    std::ofstream f = open_out(out.path(name));
    write_dataset(f, d);
  };
  if (config.model.kind == ModelKind::blanket) {
    const SimulatedBlanket sim = manifest.timed("simulate", [&] { return simulate_blanket(config.model, config.simulation, seed); });
    save(sim.survey1, "survey1.csv");
    save(sim.survey2, "survey2.csv");
    save(sim.calibration, "calibration.csv");
    save(sim.panel, "panel.csv");
    write_json(out.path("truth.json"), truth_json(sim));
  } else {
    const SimulatedPanel sim = manifest.timed("simulate", [&] { return simulate_resampled(config.model, config.simulation, seed); });
    save(sim.panel, "panel.csv");
    write_json(out.path("truth.json"), truth_json(sim));
  }
  manifest.write(out);
  out.commit();
  return kExitOk;
}

int cmd_calibrate(const CommonOptions& o, const std::string& input) {
  const RunConfig config = resolve_config(o);
  Manifest manifest("calibrate", config);
  const Dataset data = load(input, Schema::calibration, manifest);
  const CalibrationFit fit = manifest.timed("fit", [&] { return fit_calibration(data.pairs); });
  StagedOutput out(o.out, o.force);
  write_json(out.path("calibration.json"), fit.model);
  const Eigen::MatrixXi confusion = calibration_confusion(fit.model, data.pairs);
  json table = json::array();
  for (Eigen::Index i = 0; i < confusion.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < confusion.cols(); ++j) row.push_back(confusion(i, j));
    table.push_back(row);
  }
  const Eigen::VectorXd se = fit.standard_errors();
  write_json(out.path("fit_report.json"), {{"n_pairs", data.pairs.size()},
                                           {"log_likelihood", fit.log_likelihood},
                                           {"iterations", fit.iterations},
                                           {"gradient_norm", fit.gradient_norm},
                                           {"standard_errors", std::vector<double>(se.data(), se.data() + se.size())},
                                           {"kit_labels", kKitLabels},
                                           {"confusion_observed_by_modal", table}});
  manifest.write(out);
  out.commit();
  std::cerr << "calibration: log-likelihood " << fit.log_likelihood << " after " << fit.iterations << " iterations\n";
  return kExitOk;
}

int cmd_fit_blanket(const CommonOptions& o, const std::string& s1_path, const std::string& s2_path,
                    const std::string& cal_path) {
  RunConfig config = resolve_config(o);
  config.model.kind = ModelKind::blanket;
  config.sampler.validate();
  Manifest manifest("fit-blanket", config);
  if (!o.config_path.empty()) manifest.input(o.config_path);
  const Dataset s1 = load(s1_path, Schema::survey1, manifest);
  const Dataset s2 = load(s2_path, Schema::survey2, manifest);
  manifest.input(cal_path);
  const CalibrationModel cal = read_json(cal_path).get<CalibrationModel>();
  StagedOutput out(o.out, o.force);
  const BlanketSetup setup = manifest.timed("bases", [&] { return prepare_blanket(s1, s2, cal, config.model); });
  const BlanketModel model(setup.data, config.model.variant, config.model.blanket, config.model.laplacian_scale);
  std::cerr << "blanket model: " << model.n_basis() << " surface coefficients, " << model.dim() << " parameters\n";
  const PosteriorDraws draws = manifest.timed("sample", [&] { return sample(model, config.sampler, model.data_init()); });
  const json info = {{"model", "blanket"},
                     {"variant", to_string(config.model.variant)},
                     {"n_wells", s2.size()},
                     {"n_survey1", s1.size()},
                     {"n_basis", model.n_basis()},
                     {"d0", setup.data.d0},
                     {"laplacian_scale", config.model.laplacian_scale},
                     {"standardization", standardization_json(setup.standardization)}};
  return finish_fit(draws, out, manifest, info);
}

int cmd_fit_resampled(const CommonOptions& o, const std::string& panel_path) {
  RunConfig config = resolve_config(o);
  config.model.kind = ModelKind::resampled;
  config.sampler.validate();
  Manifest manifest("fit-resampled", config);
  if (!o.config_path.empty()) manifest.input(o.config_path);
  const Dataset panel = load(panel_path, Schema::panel, manifest);
  StagedOutput out(o.out, o.force);
  const ResampledSetup setup = prepare_resampled(panel, config.model);
  const ResampledModel model(setup.data, setup.breakpoints, config.model.resampled);
  const PosteriorDraws draws = manifest.timed("sample", [&] { return sample(model, config.sampler, model.data_init()); });
  const json info = {{"model", "resampled"},
                     {"n_wells", panel.size()},
                     {"d0", setup.data.d0},
                     {"spline_breakpoints", setup.breakpoints},
                     {"standardization", standardization_json(setup.standardization)}};
  return finish_fit(draws, out, manifest, info);
}

struct FitDirectory {
  PosteriorDraws draws;
  json info;
};

FitDirectory load_fit(const fs::path& dir, Manifest& manifest) {
  const fs::path draws = dir / "draws.csv";
  const fs::path info = dir / "fit_info.json";
  if (!fs::exists(draws)) throw CliError("no draws.csv in '" + dir.string() + "'");
  manifest.input(draws);
  manifest.input(info);
  return {read_draws_csv(draws.string()), read_json(info)};
}

/// Survey-2 wells in the order of the draws; rejects a well-count mismatch.
Dataset matching_survey2(const FitDirectory& fit, const std::string& path, Manifest& manifest) {
  Dataset s2 = load(path, Schema::survey2, manifest);
  const std::size_t n = fit.draws.layout.at("theta1").size;
  if (s2.size() != n) {
    throw CliError("layout mismatch: draws hold " + std::to_string(n) + " survey-2 wells, '" + path + "' has " +
                   std::to_string(s2.size()));
  }
  return s2;
}

std::vector<double> parse_thresholds(const std::string& text) {
  std::vector<double> t;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const double v = std::stod(item, &used);
      if (used != item.size() || !(v > 0.0)) throw std::invalid_argument(item);
      t.push_back(v);
    } catch (const std::exception&) {
      throw CliError("--thresholds: '" + item + "' is not a positive number");
    }
  }
  if (t.empty()) throw CliError("--thresholds: empty list");
  return t;
}

std::string threshold_tag(double t) {
  std::ostringstream s;
  s << t;
  return s.str();
}

void write_band_header(std::ostream& out, const std::string& first) {
  out << first << ",mean,median,q2.5,q25,q75,q97.5\n";
}

void write_band(std::ostream& out, double x, const Band& b) {
  out << x << ',' << b.mean << ',' << b.median << ',' << b.central95.lower << ',' << b.central50.lower << ','
      << b.central50.upper << ',' << b.central95.upper << '\n';
}

json band_json(const Band& b) {
  return {{"mean", b.mean},
          {"median", b.median},
          {"central50", {b.central50.lower, b.central50.upper}},
          {"central95", {b.central95.lower, b.central95.upper}}};
}

std::vector<double> grid(double lo, double hi, int n) {
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
  return g;
}

void write_parameter_summary(const fs::path& path, const PosteriorDraws& draws) {
  std::ofstream out = open_out(path);
  out << std::setprecision(10);
  out << "parameter,mean,median,q2.5,q25,q75,q97.5\n";
  const auto names = draws.layout.column_names();
  for (Eigen::Index j = 0; j < draws.values.cols(); ++j) {
    const Band b = summarize_band(draws.column(j));
    out << names[static_cast<std::size_t>(j)] << ',' << b.mean << ',' << b.median << ',' << b.central95.lower << ','
        << b.central50.lower << ',' << b.central50.upper << ',' << b.central95.upper << '\n';
  }
}

int cmd_summarize(const CommonOptions& o, const std::string& fit_dir, const std::string& s2_path,
                  const std::string& thresholds_text, bool plot_data) {
  const RunConfig config = resolve_config(o);
  Manifest manifest("summarize", config);
  const FitDirectory fit = load_fit(fit_dir, manifest);
  const std::vector<double> thresholds = parse_thresholds(thresholds_text);
  const std::string kind = fit.info.at("model").get<std::string>();
  const std::uint64_t seed = config.sampler.seed;

  if (kind == "blanket") {
    if (s2_path.empty()) throw CliError("summarize: blanket fits need --survey2");
    const Dataset s2 = matching_survey2(fit, s2_path, manifest);
    const MixingVariant variant = parse_mixing_variant(fit.info.at("variant").get<std::string>());
    StagedOutput out(o.out, o.force);
    write_parameter_summary(out.path("parameters.csv"), fit.draws);
    const ExceedanceReport ex = manifest.timed("exceedance", [&] { return individual_predictions(fit.draws, thresholds); });
    {
      std::ofstream f = open_out(out.path("exceedance.csv"));
      f << std::setprecision(10) << "well_id,mean_ugL,q10_ugL,q90_ugL";
      for (double t : thresholds) f << ",p_gt_" << threshold_tag(t) << ",mcse_gt_" << threshold_tag(t);
      f << '\n';
      for (std::size_t i = 0; i < ex.wells.size(); ++i) {
        const WellExceedance& w = ex.wells[i];
        f << s2.wells[i].well_id << ',' << w.mean << ',' << w.q10 << ',' << w.q90;
        for (std::size_t t = 0; t < thresholds.size(); ++t) f << ',' << w.prob_exceed[t] << ',' << w.mcse[t];
        f << '\n';
      }
    }
    const TrendReport trend = manifest.timed("trend", [&] {
      return trend_report(fit.draws, s2.depths(), fit.info.at("d0").get<double>(), seed);
    });
    write_json(out.path("trend.json"), {{"mean_multiplicative_change", band_json(trend.mean_multiplicative)},
                                        {"median_multiplicative_change", band_json(trend.median_multiplicative)},
                                        {"mean_before_ugL", band_json(trend.mean_before)},
                                        {"mean_after_ugL", band_json(trend.mean_after)},
                                        {"mean_change_ugL", band_json(trend.mean_change)},
                                        {"intercept_attribution_ugL", band_json(trend.intercept_attribution)},
                                        {"fraction_increase", trend.fraction_increase}});
    if (plot_data) {
      const std::vector<double> theta = grid(0.0, 8.0, 81);
      std::ofstream mc = open_out(out.path("mixing_curve.csv"));
      mc << std::setprecision(10);
      write_band_header(mc, "theta");
      const auto bands = mixing_coefficient_curve(fit.draws, variant, theta);
      for (std::size_t g = 0; g < theta.size(); ++g) write_band(mc, theta[g], bands[g]);

      const std::vector<double> th1 = fit.draws.column("theta1", 0);
      std::vector<double> all_theta1;
      for (std::size_t i = 0; i < s2.size(); ++i) all_theta1.push_back(summarize_band(fit.draws.column("theta1", i)).mean);
      const double centre = quantile(all_theta1, 0.5);
      const std::vector<double> delta = grid(-3.0, 3.0, 61);
      for (bool noise : {false, true}) {
        std::ofstream pc = open_out(out.path(noise ? "predictive_change_noise.csv" : "predictive_change.csv"));
        pc << std::setprecision(10);
        write_band_header(pc, "delta");
        const auto b = predictive_change(fit.draws, variant, centre, delta, noise, seed);
        for (std::size_t g = 0; g < delta.size(); ++g) write_band(pc, delta[g], b[g]);
      }
      std::ofstream map = open_out(out.path("well_map.csv"));
      map << std::setprecision(10) << "well_id,east_m,north_m,theta1_mean,delta_mean,theta2_mean\n";
      for (std::size_t i = 0; i < s2.size(); ++i) {
        map << s2.wells[i].well_id << ',' << s2.wells[i].east_m << ',' << s2.wells[i].north_m << ','
            << summarize_band(fit.draws.column("theta1", i)).mean << ',' << summarize_band(fit.draws.column("delta", i)).mean
            << ',' << summarize_band(fit.draws.column("theta2", i)).mean << '\n';
      }
    }
    manifest.write(out);
    out.commit();
    return kExitOk;
  }

  if (kind != "resampled") throw CliError("fit_info.json: unknown model '" + kind + "'");
  StagedOutput out(o.out, o.force);
  write_parameter_summary(out.path("parameters.csv"), fit.draws);
  const CubicBSpline spline(fit.info.at("spline_breakpoints").get<std::vector<double>>());
  const std::vector<double> theta = grid(spline.lower(), spline.upper(), 61);
  const SplineChangeCurve curve = manifest.timed("spline_curve", [&] {
    return spline_change_curve(fit.draws, spline, theta, thresholds, 20, seed);
  });
  std::ofstream f = open_out(out.path("spline_change.csv"));
  f << std::setprecision(10) << "theta2000,change_mean,change_median,change_q2.5,change_q25,change_q75,change_q97.5";
  for (double t : thresholds) f << ",p_gt_" << threshold_tag(t);
  f << '\n';
  for (std::size_t g = 0; g < theta.size(); ++g) {
    const Band& b = curve.change[g];
    f << theta[g] << ',' << b.mean << ',' << b.median << ',' << b.central95.lower << ',' << b.central50.lower << ','
      << b.central50.upper << ',' << b.central95.upper;
    for (std::size_t t = 0; t < thresholds.size(); ++t) f << ',' << curve.exceedance[t][g];
    f << '\n';
  }
  f.close();
  manifest.write(out);
  out.commit();
  return kExitOk;
}

int cmd_ppc(const CommonOptions& o, const std::string& fit_dir, const std::string& s2_path, const std::string& panel_path,
            std::optional<std::size_t> subsample, bool plot_data) {
  const RunConfig config = resolve_config(o);
  Manifest manifest("ppc", config);
  const FitDirectory fit = load_fit(fit_dir, manifest);
  if (fit.info.at("model").get<std::string>() != "blanket") throw CliError("ppc: needs a blanket fit");
  const Dataset s2 = matching_survey2(fit, s2_path, manifest);
  const Dataset panel = load(panel_path, Schema::panel, manifest);
  const std::size_t k = subsample.value_or(panel.size());
  StagedOutput out(o.out, o.force);
  const PpcReport report = manifest.timed("ppc", [&] {
    return ppc_subsample(fit.draws, k, panel, s2.depths(), fit.info.at("d0").get<double>(), config.sampler.seed);
  });
  json stats = json::array();
  for (const auto& s : report.statistics) {
    stats.push_back({{"name", s.name}, {"observed", s.observed}, {"p_value", s.p_value}, {"replicated", band_json(summarize_band(s.replicated))}});
  }
  write_json(out.path("ppc.json"), {{"subsample_size", report.subsample_size}, {"statistics", stats}});
  if (plot_data) {
    std::ofstream f = open_out(out.path("ppc_replicates.csv"));
    f << std::setprecision(10) << "draw";
    for (const auto& s : report.statistics) f << ',' << s.name;
    f << '\n';
    for (std::size_t r = 0; r < report.statistics.front().replicated.size(); ++r) {
      f << r + 1;
      for (const auto& s : report.statistics) f << ',' << s.replicated[r];
      f << '\n';
    }
  }
  manifest.write(out);
  out.commit();
  for (const auto& s : report.statistics) std::cerr << s.name << ": observed " << s.observed << ", p = " << s.p_value << '\n';
  return kExitOk;
}

int cmd_config_init(const std::string& out_path, bool force) {
  if (out_path.empty()) {
    write_config(std::cout, RunConfig{});
    return kExitOk;
  }
  if (fs::exists(out_path) && !force) throw CliError("'" + out_path + "' exists; pass --force to replace it");
  const fs::path tmp = out_path + ".tmp-" + std::to_string(::getpid());
  {
    std::ofstream f = open_out(tmp);
    write_config(f, RunConfig{});
  }
  fs::rename(tmp, out_path);
  return kExitOk;
}

std::string config_reference() {
  std::ostringstream s;
  s << "Configuration keys and defaults:\n";
  write_config(s, RunConfig{});
  return s.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Arsenic survey dynamics: calibrate kits, fit spatial change models, summarize posteriors"};
  app.set_version_flag("--version", ASDYN_VERSION);
  app.require_subcommand(1);
  app.footer("Exit status: 0 success, 1 error, 3 fit written but R-hat > 1.05 on more than 1% of parameters.");

  CommonOptions common;
  int status = kExitOk;

  auto* sim = app.add_subcommand("simulate", "generate a synthetic data set from the configured model");
  add_common(sim, common);

  std::string cal_input;
  auto* cal = app.add_subcommand("calibrate", "fit the kit calibration model to quality-control pairs");
  add_common(cal, common);
  cal->add_option("--input", cal_input, "calibration CSV (lab_ugL,kit_level)")->required();

  std::string s1_path, s2_path, cal_path;
  auto* fb = app.add_subcommand("fit-blanket", "fit the blanket-survey model");
  add_common(fb, common);
  fb->add_option("--survey1", s1_path, "survey-1 CSV (lab values)")->required();
  fb->add_option("--survey2", s2_path, "survey-2 CSV (kit readings)")->required();
  fb->add_option("--calibration", cal_path, "calibration.json from 'calibrate'")->required();

  std::string panel_path;
  auto* fr = app.add_subcommand("fit-resampled", "fit the resampled-panel model");
  add_common(fr, common);
  fr->add_option("--panel", panel_path, "panel CSV (three lab epochs)")->required();

  std::string fit_dir, thresholds = "10,50,100";
  bool plot_data = false;
  auto* sm = app.add_subcommand("summarize", "exceedance, trend and curve summaries of a fit");
  add_common(sm, common);
  sm->add_option("--fit", fit_dir, "fit output directory")->required();
  sm->add_option("--survey2", s2_path, "survey-2 CSV used for the fit (blanket fits)");
  sm->add_option("--thresholds", thresholds, "comma-separated thresholds in ug/L")->capture_default_str();
  sm->add_flag("--plot-data", plot_data, "also write figure data CSVs");

  std::optional<std::size_t> subsample;
  auto* pp = app.add_subcommand("ppc", "posterior predictive check against a resampled panel");
  add_common(pp, common);
  pp->add_option("--fit", fit_dir, "blanket fit output directory")->required();
  pp->add_option("--survey2", s2_path, "survey-2 CSV used for the fit")->required();
  pp->add_option("--panel", panel_path, "observed panel CSV")->required();
  pp->add_option("--subsample", subsample, "wells per replicated subsample (default: panel size)")->check(CLI::PositiveNumber);
  pp->add_flag("--plot-data", plot_data, "also write replicated statistics");

  std::string config_out;
  bool config_force = false;
  auto* cfg = app.add_subcommand("config", "configuration utilities");
  cfg->require_subcommand(1);
  cfg->footer(config_reference());
  auto* init = cfg->add_subcommand("init", "write the default configuration");
  init->add_option("--out", config_out, "file to write (default: standard output)");
  init->add_flag("--force", config_force, "replace an existing file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (*sim) status = cmd_simulate(common);
    else if (*cal) status = cmd_calibrate(common, cal_input);
    else if (*fb) status = cmd_fit_blanket(common, s1_path, s2_path, cal_path);
    else if (*fr) status = cmd_fit_resampled(common, panel_path);
    else if (*sm) status = cmd_summarize(common, fit_dir, s2_path, thresholds, plot_data);
    else if (*pp) status = cmd_ppc(common, fit_dir, s2_path, panel_path, subsample, plot_data);
    else if (*init) status = cmd_config_init(config_out, config_force);
  } catch (const FitError& e) {
    std::cerr << "error: " << e.what() << " (gradient norm " << e.gradient_norm() << ")\n";
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return status;
}
