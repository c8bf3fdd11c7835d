// Compares the serial reference path (jobs = 1) against the OpenMP path for
// the two batch kernels: Monte Carlo fitting trials and the image block scan.

#include <chrono>
#include <cstdio>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "tdist/noise.hpp"
#include "tdist/simulate.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double time_simulation(int jobs, int trials) {
  tdist::SimulationSpec spec;
  spec.d = 2;
  spec.n = 500;
  spec.nu_list = {1.0, 5.0};
  spec.trials = trials;
  spec.algorithms = {{tdist::AlgorithmKind::MMF, tdist::AccelScheme::None},
                     {tdist::AlgorithmKind::GMMF, tdist::AccelScheme::None}};
  spec.seed = 7;
  spec.jobs = jobs;
  const auto t0 = Clock::now();
  const auto report = tdist::run_simulation(spec);
  const double dt = seconds_since(t0);
  if (report.records.empty()) std::fprintf(stderr, "empty report?\n");
  return dt;
}

double time_noise_scan(int jobs, int size) {
  tdist::GrayImage img(size, size, 128.0);
  tdist::Rng rng(42);
  tdist::StudentTParams noise_params(1.0, {0.0}, tdist::SpdMatrix::scaled_identity(1, 100.0));
  const tdist::Matrix draws = tdist::sample(noise_params, size * size, rng);
  for (size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] += draws(static_cast<int>(i), 0);

  tdist::HomogeneityTestConfig cfg;
  cfg.jobs = jobs;
  const auto t0 = Clock::now();
  const auto report = tdist::estimate_noise(img, cfg);
  const double dt = seconds_since(t0);
  if (report.degenerate()) std::fprintf(stderr, "degenerate noise report?\n");
  return dt;
}

}  // namespace

int main(int argc, char** argv) {
  int trials = 40;
  int size = 512;
  int jobs = 2;
#ifdef _OPENMP
  jobs = omp_get_max_threads();
#endif
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string flag = argv[i];
    const int value = std::atoi(argv[i + 1]);
    if (flag == "--trials") trials = value;
    else if (flag == "--size") size = value;
    else if (flag == "--jobs") jobs = value;
  }

#ifndef _OPENMP
  std::printf("built without OpenMP; parallel path falls back to serial\n");
#endif
  std::printf("%-28s %10s %10s %8s\n", "kernel", "serial_s", "parallel_s", "speedup");

  const double sim_serial = time_simulation(1, trials);
  const double sim_par = time_simulation(jobs, trials);
  std::printf("%-28s %10.3f %10.3f %7.2fx\n", "simulate (MMF+GMMF trials)", sim_serial, sim_par,
              sim_serial / sim_par);

  const double scan_serial = time_noise_scan(1, size);
  const double scan_par = time_noise_scan(jobs, size);
  std::printf("%-28s %10.3f %10.3f %7.2fx\n", "noise block scan + fits", scan_serial, scan_par,
              scan_serial / scan_par);
  return 0;
}
