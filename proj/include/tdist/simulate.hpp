#pragma once

#include <cstdint>
#include <iosfwd>

#include "tdist/accel.hpp"

namespace tdist {

struct AlgorithmChoice {
  AlgorithmKind kind = AlgorithmKind::MMF;
  AccelScheme scheme = AccelScheme::None;
};

// Token forms: "em", "aem", "mmf", "gmmf", "ecme", optionally prefixed with
// "squarem-" or "daarem-".
std::optional<AlgorithmChoice> algorithm_choice_from_token(const std::string& token);
std::string to_token(const AlgorithmChoice& choice);

struct SimulationSpec {
  int d = 2;
  int n = 1000;
  std::vector<double> nu_list{1.0, 2.0, 5.0, 10.0};
  double sigma_scale = 1.0;          // scaled identity unless sigma_explicit set
  std::optional<Matrix> sigma_explicit;
  int trials = 100;
  std::vector<AlgorithmChoice> algorithms{{AlgorithmKind::EM, AccelScheme::None},
                                          {AlgorithmKind::AEM, AccelScheme::None},
                                          {AlgorithmKind::MMF, AccelScheme::None},
                                          {AlgorithmKind::GMMF, AccelScheme::None}};
  uint64_t seed = 0;
  int jobs = 1;
  FitConfig fit;
};

struct TrialRecord {
  uint64_t seed = 0;
  int trial = 0;
  AlgorithmChoice algorithm;
  double nu_true = 0.0;
  double nu_hat = 0.0;
  int iterations = 0;
  std::string status;  // converged | max_iters | gaussian_limit | error
  double seconds = 0.0;
  double final_objective = 0.0;
};

struct SimulationAggregate {
  AlgorithmChoice algorithm;
  double nu_true = 0.0;
  int trials = 0;
  double mean_iterations = 0.0, std_iterations = 0.0;
  double mean_seconds = 0.0, std_seconds = 0.0;
  double mean_nu_hat = 0.0;
};

struct SimulationReport {
  std::vector<TrialRecord> records;
  std::vector<SimulationAggregate> aggregates;
};

// Trials run under OpenMP when spec.jobs > 1; every trial owns an RNG stream
// derived from (seed, nu index, trial index), so results are bitwise equal to
// the serial path regardless of scheduling.
SimulationReport run_simulation(const SimulationSpec& spec);

void write_records_csv(std::ostream& out, const SimulationReport& report);
std::vector<TrialRecord> read_records_csv(std::istream& in);

}  // namespace tdist
