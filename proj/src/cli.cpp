#include "tdist/cli.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "tdist/noise.hpp"

namespace tdist::cli {

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitNotConverged = 1;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNoRegions = 4;

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json spd_to_json(const SpdMatrix& m) { return matrix_to_json(m.matrix()); }

json fit_result_to_json(const AlgorithmChoice& choice, const FitResult& res, bool with_trace) {
  json j;
  j["algorithm"] = to_string(choice.kind);
  j["scheme"] = to_string(choice.scheme);
  j["nu"] = res.params.nu;
  j["mu"] = res.params.mu;
  j["sigma"] = spd_to_json(res.params.sigma);
  j["iterations"] = res.iterations;
  j["status"] = to_string(res.status);
  j["final_L"] = res.final_objective;
  j["wall_seconds"] = res.wall_seconds;
  if (with_trace) j["trace"] = res.objective_trace;
  if (res.gaussian_sigma) j["gaussian_sigma"] = spd_to_json(*res.gaussian_sigma);
  return j;
}

json report_to_json(const SimulationSpec& spec, const SimulationReport& report) {
  json j;
  j["spec"] = {{"d", spec.d},
               {"n", spec.n},
               {"nu", spec.nu_list},
               {"sigma_scale", spec.sigma_scale},
               {"trials", spec.trials},
               {"seed", spec.seed},
               {"tol", spec.fit.tol},
               {"nu0", spec.fit.nu0}};
  json recs = json::array();
  for (const TrialRecord& r : report.records) {
    recs.push_back({{"seed", r.seed},
                    {"trial", r.trial},
                    {"algo", to_string(r.algorithm.kind)},
                    {"scheme", to_string(r.algorithm.scheme)},
                    {"nu_true", r.nu_true},
                    {"nu_hat", r.nu_hat},
                    {"iterations", r.iterations},
                    {"status", r.status},
                    {"seconds", r.seconds},
                    {"final_L", r.final_objective}});
  }
  j["records"] = std::move(recs);
  json aggs = json::array();
  for (const SimulationAggregate& a : report.aggregates) {
    aggs.push_back({{"algo", to_string(a.algorithm.kind)},
                    {"scheme", to_string(a.algorithm.scheme)},
                    {"nu_true", a.nu_true},
                    {"trials", a.trials},
                    {"mean_iterations", a.mean_iterations},
                    {"std_iterations", a.std_iterations},
                    {"mean_seconds", a.mean_seconds},
                    {"std_seconds", a.std_seconds},
                    {"mean_nu_hat", a.mean_nu_hat}});
  }
  j["aggregates"] = std::move(aggs);
  return j;
}

json region_report_to_json(const RegionReport& rep) {
  json blocks = json::array();
  for (const Block& b : rep.blocks) blocks.push_back({{"x", b.x}, {"y", b.y}, {"side", b.side}});
  return json{{"side", rep.side},
              {"tested", rep.tested},
              {"accepted", rep.accepted},
              {"failed_fits", rep.failed_fits},
              {"divergent_fits", rep.divergent_fits},
              {"blocks", std::move(blocks)},
              {"nu", rep.nu_hats},
              {"sigma", rep.sigma_hats},
              {"aggregate",
               {{"nu_arith", rep.nu_arith},
                {"nu_geom", rep.nu_geom},
                {"sigma_arith", rep.sigma_arith},
                {"sigma_geom", rep.sigma_geom}}}};
}

void write_output(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    if (!content.empty() && content.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot open output file: " + path);
  out << content;
}

std::vector<AlgorithmChoice> parse_algorithm_list(const std::string& csv) {
  std::vector<AlgorithmChoice> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    const auto choice = algorithm_choice_from_token(tok);
    if (!choice) throw CLI::ValidationError("--algorithms", "unknown algorithm token: " + tok);
    out.push_back(*choice);
  }
  if (out.empty()) throw CLI::ValidationError("--algorithms", "empty algorithm list");
  return out;
}

int cmd_simulate(const SimulationSpec& spec, const std::string& output,
                 const std::string& format) {
  const SimulationReport report = run_simulation(spec);
  if (format == "json") {
    write_output(output, report_to_json(spec, report).dump(2));
  } else {
    std::ostringstream csv;
    write_records_csv(csv, report);
    write_output(output, csv.str());
  }
  return kExitOk;
}

}  // namespace

Matrix read_samples_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  bool header_allowed = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool parse_failed = false;
    while (std::getline(ss, cell, ',')) {
      try {
        size_t pos = 0;
        double v = std::stod(cell, &pos);
        row.push_back(v);
      } catch (...) {
        parse_failed = true;
        break;
      }
    }
    if (parse_failed) {
      if (header_allowed) {  // first non-empty line may be a header
        header_allowed = false;
        continue;
      }
      throw DataError("samples csv: parse error at line " + std::to_string(lineno));
    }
    header_allowed = false;
    if (row.empty()) throw DataError("samples csv: empty row at line " + std::to_string(lineno));
    if (!rows.empty() && row.size() != rows.front().size())
      throw DataError("samples csv: inconsistent column count at line " + std::to_string(lineno));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError("samples csv: no data rows");
  Matrix points(static_cast<int>(rows.size()), static_cast<int>(rows.front().size()));
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < rows.front().size(); ++j)
      points(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
  return points;
}

Matrix read_samples_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open samples file: " + path);
  return read_samples_csv(in);
}

int run(int argc, const char* const* argv) {
  CLI::App app{"ML estimation of (nu, mu, Sigma) for the multivariate Student-t distribution"};
  app.require_subcommand(1);

  // simulate
  SimulationSpec spec;
  std::string sim_algorithms = "em,aem,mmf,gmmf";
  std::string sim_sigma_csv;
  std::string sim_output, sim_format = "csv";
  auto* sim = app.add_subcommand("simulate", "Monte Carlo benchmark of the estimators");
  sim->add_option("--d", spec.d, "sample dimension")->check(CLI::PositiveNumber);
  sim->add_option("--n", spec.n, "samples per trial")->check(CLI::PositiveNumber);
  sim->add_option("--nu", spec.nu_list, "true degrees of freedom (repeatable)");
  sim->add_option("--sigma-scale", spec.sigma_scale, "scatter = scale * identity");
  sim->add_option("--sigma-csv", sim_sigma_csv, "explicit scatter matrix (CSV)");
  sim->add_option("--trials", spec.trials, "trials per nu")->check(CLI::PositiveNumber);
  sim->add_option("--algorithms", sim_algorithms,
                  "comma list: em,aem,mmf,gmmf,ecme with optional squarem-/daarem- prefix");
  sim->add_option("--seed", spec.seed, "master seed");
  sim->add_option("--jobs", spec.jobs, "parallel trial workers");
  sim->add_option("--tol", spec.fit.tol, "stopping tolerance");
  sim->add_option("--nu0", spec.fit.nu0, "initial nu");
  sim->add_option("--max-iters", spec.fit.max_outer_iters, "outer iteration cap");
  sim->add_option("--output", sim_output, "output path ('-' for stdout)");
  sim->add_option("--format", sim_format, "csv | json")
      ->check(CLI::IsMember({"csv", "json"}));

  // fit
  std::string fit_input, fit_algorithm = "mmf", fit_scheme = "none", fit_output;
  FitConfig fit_cfg;
  double fixed_nu = 0.0;
  bool with_trace = false;
  auto* fitcmd = app.add_subcommand("fit", "fit one dataset from CSV");
  fitcmd->add_option("input", fit_input, "CSV of n x d samples")->required();
  fitcmd->add_option("--algorithm", fit_algorithm, "em | aem | mmf | gmmf | ecme");
  fitcmd->add_option("--scheme", fit_scheme, "none | squarem | daarem");
  fitcmd->add_option("--tol", fit_cfg.tol, "stopping tolerance");
  fitcmd->add_option("--nu0", fit_cfg.nu0, "initial nu");
  fitcmd->add_option("--max-iters", fit_cfg.max_outer_iters, "outer iteration cap");
  auto* fixed_opt = fitcmd->add_option("--fixed-nu", fixed_nu, "estimate mu, Sigma at fixed nu");
  fitcmd->add_flag("--trace", with_trace, "include the objective trace");
  fitcmd->add_option("--output", fit_output, "output path ('-' for stdout)");

  // noise-estimate
  std::string noise_input, noise_output;
  HomogeneityTestConfig noise_cfg;
  FitConfig noise_fit_cfg;
  auto* noise = app.add_subcommand("noise-estimate", "estimate Student-t noise from an image");
  noise->add_option("image", noise_input, "PGM (P2/P5) or CSV image")->required();
  noise->add_option("--alpha", noise_cfg.alpha_level, "significance level per neighbor test")
      ->check(CLI::Range(1e-9, 0.999999));
  noise->add_option("--min-regions", noise_cfg.min_regions, "blocks needed before halting");
  noise->add_option("--initial-block", noise_cfg.initial_block, "starting block side");
  noise->add_option("--min-block", noise_cfg.min_block, "smallest block side tried");
  noise->add_option("--jobs", noise_cfg.jobs, "parallel block workers");
  noise->add_option("--tol", noise_fit_cfg.tol, "per-block fit tolerance");
  noise->add_option("--output", noise_output, "output path ('-' for stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (sim->parsed()) {
      spec.algorithms = parse_algorithm_list(sim_algorithms);
      if (!sim_sigma_csv.empty()) spec.sigma_explicit = read_samples_csv_file(sim_sigma_csv);
      return cmd_simulate(spec, sim_output, sim_format);
    }
    if (fitcmd->parsed()) {
      const auto kind = algorithm_from_string(fit_algorithm);
      const auto scheme = scheme_from_string(fit_scheme);
      if (!kind || !scheme) {
        std::cerr << "unknown algorithm or scheme\n";
        return kExitUsage;
      }
      if (fixed_opt->count() > 0) {
        if (!(fixed_nu > 0)) throw DataError("--fixed-nu must be > 0");
        fit_cfg.fixed_nu = fixed_nu;
      }
      Matrix points = read_samples_csv_file(fit_input);
      if (points.rows() < points.cols() + 1)
        throw DataError("fit: need n >= d + 1 samples");
      const WeightedSample data = WeightedSample::uniform(std::move(points));
      if (!data.weight_bound_ok())
        std::cerr << "warning: max weight >= 1/d (Assumption on the weights violated)\n";
      const FitResult res = accelerated_fit(*kind, *scheme, data, fit_cfg);
      write_output(fit_output, fit_result_to_json({*kind, *scheme}, res, with_trace).dump(2));
      return res.status == FitStatus::MaxIters ? kExitNotConverged : kExitOk;
    }
    if (noise->parsed()) {
      const GrayImage image = [&] {
        try {
          return load_image(noise_input);
        } catch (const std::exception& e) {
          throw DataError(e.what());
        }
      }();
      const RegionReport rep = estimate_noise(image, noise_cfg, noise_fit_cfg);
      write_output(noise_output, region_report_to_json(rep).dump(2));
      if (rep.degenerate()) {
        std::cerr << "no usable constant regions: every per-block fit was degenerate\n";
        return kExitNoRegions;
      }
      return kExitOk;
    }
  } catch (const NoConstantRegions& e) {
    std::cerr << e.what() << '\n';
    return kExitNoRegions;
  } catch (const DataError& e) {
    std::cerr << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

int run(const std::vector<std::string>& args) {
  std::vector<std::string> full;
  full.reserve(args.size() + 1);
  full.push_back("tdist");
  full.insert(full.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  argv.reserve(full.size());
  for (const std::string& s : full) argv.push_back(s.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace tdist::cli
