#pragma once

#include <iosfwd>
#include <string>

#include "tdist/estimators.hpp"

namespace tdist {

struct GrayImage {
  int width = 0, height = 0;
  std::vector<double> pixels;  // row-major

  GrayImage() = default;
  GrayImage(int w, int h, double fill = 0.0)
      : width(w), height(h), pixels(static_cast<size_t>(w) * h, fill) {}
  double at(int y, int x) const { return pixels[static_cast<size_t>(y) * width + x]; }
  double& at(int y, int x) { return pixels[static_cast<size_t>(y) * width + x]; }
};

GrayImage load_pgm(std::istream& in);
GrayImage load_csv_image(std::istream& in);
// Dispatches on the PGM magic ("P2"/"P5"), falling back to CSV.
GrayImage load_image(const std::string& path);

// Kendall rank statistics; tau-b tie correction, all-tied sequences give 0.
double kendall_tau(const Vector& x, const Vector& y);
double z_score(const Vector& x, const Vector& y);

struct HomogeneityTestConfig {
  double alpha_level = 0.05;
  int initial_block = 64;
  int min_block = 8;
  int min_regions = 20;
  int jobs = 1;
};

struct Block {
  int x = 0, y = 0, side = 0;
};

// Kendall z tests along the four neighbor offsets (horizontal, vertical, two
// diagonals); rejects as soon as one |z| exceeds the two-sided quantile.
bool test_block_constant(const GrayImage& image, const Block& block, double alpha_level);

struct NoConstantRegions : std::runtime_error {
  NoConstantRegions() : std::runtime_error("no constant regions found at the minimum block size") {}
};

// Tiles the grid at initial_block and halves the side until at least
// min_regions blocks pass; throws NoConstantRegions if none pass at min_block.
std::vector<Block> detect_constant_regions(const GrayImage& image,
                                           const HomogeneityTestConfig& cfg);

struct RegionReport {
  std::vector<Block> blocks;  // blocks whose d=1 fit succeeded
  Vector nu_hats;
  Vector sigma_hats;
  int side = 0;               // tile side the detection settled on
  int tested = 0;             // tiles tested at that side
  int accepted = 0;           // tiles that passed the homogeneity test
  int failed_fits = 0;        // degenerate blocks (skipped)
  int divergent_fits = 0;     // Gaussian-limit / non-converged blocks (skipped)
  double nu_arith = 0.0, nu_geom = 0.0;
  double sigma_arith = 0.0, sigma_geom = 0.0;

  bool degenerate() const { return nu_hats.empty(); }
};

// Per-block univariate MMF fits; location discarded, nu and sigma aggregated
// by arithmetic and geometric means.
RegionReport estimate_noise(const GrayImage& image, const HomogeneityTestConfig& cfg,
                            const FitConfig& fit_cfg = {});

}  // namespace tdist
