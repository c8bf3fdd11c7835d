#include "tdist/simulate.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tdist {

std::optional<AlgorithmChoice> algorithm_choice_from_token(const std::string& token) {
  AlgorithmChoice choice;
  std::string base = token;
  if (token.rfind("squarem-", 0) == 0) {
    choice.scheme = AccelScheme::Squarem;
    base = token.substr(8);
  } else if (token.rfind("daarem-", 0) == 0) {
    choice.scheme = AccelScheme::Daarem;
    base = token.substr(7);
  }
  const auto kind = algorithm_from_string(base);
  if (!kind) return std::nullopt;
  choice.kind = *kind;
  return choice;
}

std::string to_token(const AlgorithmChoice& choice) {
  if (choice.scheme == AccelScheme::None) return to_string(choice.kind);
  return std::string(to_string(choice.scheme)) + "-" + to_string(choice.kind);
}

namespace {

SpdMatrix simulation_sigma(const SimulationSpec& spec) {
  if (spec.sigma_explicit) return SpdMatrix::from_matrix(*spec.sigma_explicit);
  return SpdMatrix::scaled_identity(spec.d, spec.sigma_scale);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

SimulationReport run_simulation(const SimulationSpec& spec) {
  if (spec.trials < 1) throw std::invalid_argument("simulate: trials must be >= 1");
  if (spec.n < spec.d + 1) throw std::invalid_argument("simulate: need n >= d + 1");
  const SpdMatrix sigma = simulation_sigma(spec);
  if (sigma.dim() != spec.d) throw std::invalid_argument("simulate: sigma dimension mismatch");
  const Vector mu(spec.d, 0.0);
  const int n_algos = static_cast<int>(spec.algorithms.size());

  SimulationReport report;
  report.records.resize(spec.nu_list.size() * spec.trials * n_algos);

  for (size_t nu_idx = 0; nu_idx < spec.nu_list.size(); ++nu_idx) {
    const double nu_true = spec.nu_list[nu_idx];
    const StudentTParams truth(nu_true, mu, sigma);
    TrialRecord* rows = report.records.data() + nu_idx * spec.trials * n_algos;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, spec.jobs)) if (spec.jobs > 1)
#endif
    for (int trial = 0; trial < spec.trials; ++trial) {
      Rng rng = Rng::stream(spec.seed, nu_idx * static_cast<uint64_t>(spec.trials) + trial);
      const WeightedSample data = WeightedSample::uniform(sample(truth, spec.n, rng));
      for (int a = 0; a < n_algos; ++a) {
        TrialRecord& rec = rows[static_cast<size_t>(trial) * n_algos + a];
        rec.seed = spec.seed;
        rec.trial = trial;
        rec.algorithm = spec.algorithms[a];
        rec.nu_true = nu_true;
        try {
          const FitResult res =
              accelerated_fit(rec.algorithm.kind, rec.algorithm.scheme, data, spec.fit);
          rec.nu_hat = res.params.nu;
          rec.iterations = res.iterations;
          rec.status = to_string(res.status);
          rec.seconds = res.wall_seconds;
          rec.final_objective = res.final_objective;
        } catch (const std::exception&) {
          rec.nu_hat = std::nan("");
          rec.iterations = 0;
          rec.status = "error";
          rec.seconds = 0.0;
          rec.final_objective = std::nan("");
        }
      }
    }
  }

  // aggregates per (algorithm, nu_true), trial order preserved
  std::map<std::pair<std::string, double>, std::vector<const TrialRecord*>> groups;
  for (const TrialRecord& rec : report.records)
    groups[{to_token(rec.algorithm), rec.nu_true}].push_back(&rec);
  for (const auto& [key, rows] : groups) {
    SimulationAggregate agg;
    agg.algorithm = rows.front()->algorithm;
    agg.nu_true = key.second;
    double si = 0, si2 = 0, ss = 0, ss2 = 0, sn = 0;
    int n_ok = 0;
    for (const TrialRecord* rec : rows) {
      if (rec->status == "error") continue;
      ++n_ok;
      si += rec->iterations;
      si2 += static_cast<double>(rec->iterations) * rec->iterations;
      ss += rec->seconds;
      ss2 += rec->seconds * rec->seconds;
      sn += rec->nu_hat;
    }
    agg.trials = n_ok;
    if (n_ok > 0) {
      agg.mean_iterations = si / n_ok;
      agg.mean_seconds = ss / n_ok;
      agg.mean_nu_hat = sn / n_ok;
      if (n_ok > 1) {
        agg.std_iterations = std::sqrt(std::max(0.0, (si2 - si * si / n_ok) / (n_ok - 1)));
        agg.std_seconds = std::sqrt(std::max(0.0, (ss2 - ss * ss / n_ok) / (n_ok - 1)));
      }
    }
    report.aggregates.push_back(agg);
  }
  return report;
}

void write_records_csv(std::ostream& out, const SimulationReport& report) {
  out << "seed,trial,algo,scheme,nu_true,nu_hat,iterations,status,seconds,final_L\n";
  for (const TrialRecord& rec : report.records) {
    out << rec.seed << ',' << rec.trial << ',' << to_string(rec.algorithm.kind) << ','
        << to_string(rec.algorithm.scheme) << ',' << format_double(rec.nu_true) << ','
        << format_double(rec.nu_hat) << ',' << rec.iterations << ',' << rec.status << ','
        << format_double(rec.seconds) << ',' << format_double(rec.final_objective) << '\n';
  }
}

std::vector<TrialRecord> read_records_csv(std::istream& in) {
  std::vector<TrialRecord> records;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("records csv: empty input");
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 10)
      throw std::runtime_error("records csv: bad column count at line " + std::to_string(lineno));
    TrialRecord rec;
    try {
      rec.seed = std::stoull(cells[0]);
      rec.trial = std::stoi(cells[1]);
      const auto kind = algorithm_from_string(cells[2]);
      const auto scheme = scheme_from_string(cells[3]);
      if (!kind || !scheme) throw std::invalid_argument("algo");
      rec.algorithm = {*kind, *scheme};
      rec.nu_true = std::stod(cells[4]);
      rec.nu_hat = std::stod(cells[5]);
      rec.iterations = std::stoi(cells[6]);
      rec.status = cells[7];
      rec.seconds = std::stod(cells[8]);
      rec.final_objective = std::stod(cells[9]);
    } catch (...) {
      throw std::runtime_error("records csv: parse error at line " + std::to_string(lineno));
    }
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace tdist
