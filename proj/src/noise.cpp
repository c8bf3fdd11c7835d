#include "tdist/noise.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "tdist/special.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tdist {

namespace {

// Merge-sort inversion counting (Knight's algorithm). Returns n_c - n_d and
// the tie-corrected denominator pieces.
struct KendallCounts {
  long long num = 0;     // n_c - n_d
  long long n0 = 0;      // n(n-1)/2
  long long tie_x = 0;   // sum t(t-1)/2 over groups tied in x
  long long tie_y = 0;
};

long long merge_count(std::vector<double>& v, std::vector<double>& buf, size_t lo, size_t hi) {
  if (hi - lo < 2) return 0;
  const size_t mid = lo + (hi - lo) / 2;
  long long inv = merge_count(v, buf, lo, mid) + merge_count(v, buf, mid, hi);
  size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      inv += static_cast<long long>(mid - i);
      buf[k++] = v[j++];
    } else {
      buf[k++] = v[i++];
    }
  }
  while (i < mid) buf[k++] = v[i++];
  while (j < hi) buf[k++] = v[j++];
  std::copy(buf.begin() + lo, buf.begin() + hi, v.begin() + lo);
  return inv;
}

long long pair_count(long long t) { return t * (t - 1) / 2; }

KendallCounts kendall_counts(const Vector& x, const Vector& y) {
  const size_t n = x.size();
  if (y.size() != n) throw std::invalid_argument("kendall: length mismatch");
  if (n < 2) throw std::invalid_argument("kendall: need at least two observations");
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (x[a] != x[b]) return x[a] < x[b];
    return y[a] < y[b];
  });

  KendallCounts counts;
  counts.n0 = pair_count(static_cast<long long>(n));

  long long tie_xy = 0;
  {
    long long run_x = 1, run_xy = 1;
    for (size_t i = 1; i < n; ++i) {
      const bool same_x = x[order[i]] == x[order[i - 1]];
      const bool same_xy = same_x && y[order[i]] == y[order[i - 1]];
      if (same_x) ++run_x; else { counts.tie_x += pair_count(run_x); run_x = 1; }
      if (same_xy) ++run_xy; else { tie_xy += pair_count(run_xy); run_xy = 1; }
    }
    counts.tie_x += pair_count(run_x);
    tie_xy += pair_count(run_xy);
  }

  std::vector<double> ysorted(n), buf(n);
  for (size_t i = 0; i < n; ++i) ysorted[i] = y[order[i]];
  const long long swaps = merge_count(ysorted, buf, 0, n);  // discordant pairs

  {
    long long run_y = 1;
    for (size_t i = 1; i < n; ++i) {
      if (ysorted[i] == ysorted[i - 1]) ++run_y; else { counts.tie_y += pair_count(run_y); run_y = 1; }
    }
    counts.tie_y += pair_count(run_y);
  }

  counts.num = counts.n0 - counts.tie_x - counts.tie_y + tie_xy - 2 * swaps;
  return counts;
}

std::string read_token(std::istream& in) {
  // PGM tokens with '#' comments
  std::string tok;
  for (;;) {
    int ch = in.get();
    if (ch == EOF) return tok;
    if (ch == '#') {
      std::string line;
      std::getline(in, line);
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
}

int parse_int_token(std::istream& in, const char* what) {
  const std::string tok = read_token(in);
  try {
    size_t pos = 0;
    const int v = std::stoi(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (...) {
    throw std::runtime_error(std::string("pgm: malformed ") + what);
  }
}

}  // namespace

GrayImage load_pgm(std::istream& in) {
  const std::string magic = read_token(in);
  if (magic != "P2" && magic != "P5") throw std::runtime_error("pgm: unsupported magic");
  const int width = parse_int_token(in, "width");
  const int height = parse_int_token(in, "height");
  const int maxval = parse_int_token(in, "maxval");
  if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 65535)
    throw std::runtime_error("pgm: invalid header");
  GrayImage img(width, height);
  const size_t count = img.pixels.size();
  if (magic == "P2") {
    for (size_t i = 0; i < count; ++i) img.pixels[i] = parse_int_token(in, "pixel");
  } else {
    // binary body starts after exactly one whitespace byte (already consumed)
    const int bytes = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> raw(count * bytes);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<size_t>(in.gcount()) != raw.size())
      throw std::runtime_error("pgm: truncated pixel data");
    for (size_t i = 0; i < count; ++i)
      img.pixels[i] = bytes == 1 ? raw[i] : raw[2 * i] * 256 + raw[2 * i + 1];
  }
  return img;
}

GrayImage load_csv_image(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        size_t pos = 0;
        row.push_back(std::stod(cell, &pos));
      } catch (...) {
        throw std::runtime_error("csv image: parse error at line " + std::to_string(lineno));
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::runtime_error("csv image: ragged row at line " + std::to_string(lineno));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("csv image: empty file");
  GrayImage img(static_cast<int>(rows.front().size()), static_cast<int>(rows.size()));
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) img.at(y, x) = rows[y][x];
  return img;
}

GrayImage load_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open image: " + path);
  char m0 = 0, m1 = 0;
  in.get(m0);
  in.get(m1);
  in.seekg(0);
  if (m0 == 'P' && (m1 == '2' || m1 == '5')) return load_pgm(in);
  return load_csv_image(in);
}

double kendall_tau(const Vector& x, const Vector& y) {
  const KendallCounts c = kendall_counts(x, y);
  const double denom = std::sqrt(static_cast<double>(c.n0 - c.tie_x)) *
                       std::sqrt(static_cast<double>(c.n0 - c.tie_y));
  if (denom == 0.0) return 0.0;
  return static_cast<double>(c.num) / denom;
}

double z_score(const Vector& x, const Vector& y) {
  const double n = static_cast<double>(x.size());
  const double tau = kendall_tau(x, y);
  return 3.0 * std::sqrt(n * (n - 1.0)) * tau / std::sqrt(2.0 * (2.0 * n + 5.0));
}

bool test_block_constant(const GrayImage& image, const Block& block, double alpha_level) {
  if (block.side < 2) throw std::invalid_argument("test_block_constant: side must be >= 2");
  const double threshold = normal_quantile(1.0 - 0.5 * alpha_level);
  static constexpr int kOffsets[4][2] = {{0, 1}, {1, 0}, {1, 1}, {1, -1}};
  Vector xs, ys;
  for (const auto& off : kOffsets) {
    const int dy = off[0], dx = off[1];
    xs.clear();
    ys.clear();
    for (int r = 0; r < block.side; ++r) {
      const int rr = block.y + r;
      if (rr + dy >= block.y + block.side) continue;
      for (int c = 0; c < block.side; ++c) {
        const int cc = block.x + c;
        if (cc + dx < block.x || cc + dx >= block.x + block.side) continue;
        xs.push_back(image.at(rr, cc));
        ys.push_back(image.at(rr + dy, cc + dx));
      }
    }
    if (std::fabs(z_score(xs, ys)) > threshold) return false;
  }
  return true;
}

std::vector<Block> detect_constant_regions(const GrayImage& image,
                                           const HomogeneityTestConfig& cfg) {
  if (image.width < cfg.min_block || image.height < cfg.min_block)
    throw std::invalid_argument("detect_constant_regions: image smaller than min_block");
  std::vector<Block> last_accepted;
  for (int side = cfg.initial_block; side >= cfg.min_block; side /= 2) {
    if (side > image.width || side > image.height) continue;
    std::vector<Block> tiles;
    for (int y = 0; y + side <= image.height; y += side)
      for (int x = 0; x + side <= image.width; x += side) tiles.push_back({x, y, side});
    std::vector<char> ok(tiles.size(), 0);
    const int nt = static_cast<int>(tiles.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, cfg.jobs)) if (cfg.jobs > 1)
#endif
    for (int i = 0; i < nt; ++i)
      ok[i] = test_block_constant(image, tiles[i], cfg.alpha_level) ? 1 : 0;
    std::vector<Block> accepted;
    for (int i = 0; i < nt; ++i)
      if (ok[i]) accepted.push_back(tiles[i]);
    if (static_cast<int>(accepted.size()) >= cfg.min_regions) return accepted;
    last_accepted = std::move(accepted);
  }
  if (last_accepted.empty()) throw NoConstantRegions();
  return last_accepted;
}

RegionReport estimate_noise(const GrayImage& image, const HomogeneityTestConfig& cfg,
                            const FitConfig& fit_cfg) {
  const std::vector<Block> blocks = detect_constant_regions(image, cfg);
  RegionReport report;
  report.side = blocks.front().side;
  report.tested = (image.width / report.side) * (image.height / report.side);
  report.accepted = static_cast<int>(blocks.size());

  const int nb = static_cast<int>(blocks.size());
  std::vector<double> nu(nb, -1.0), sigma(nb, -1.0);
  std::vector<char> state(nb, 0);  // 0 failed, 1 ok, 2 divergent
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, cfg.jobs)) if (cfg.jobs > 1)
#endif
  for (int i = 0; i < nb; ++i) {
    const Block& b = blocks[i];
    Matrix pts(b.side * b.side, 1);
    int k = 0;
    for (int r = 0; r < b.side; ++r)
      for (int c = 0; c < b.side; ++c) pts(k++, 0) = image.at(b.y + r, b.x + c);
    try {
      const FitResult res = fit(AlgorithmKind::MMF, WeightedSample::uniform(std::move(pts)), fit_cfg);
      if (res.status == FitStatus::Converged) {
        nu[i] = res.params.nu;
        sigma[i] = std::sqrt(res.params.sigma(0, 0));
        state[i] = 1;
      } else {
        state[i] = 2;
      }
    } catch (...) {
      state[i] = 0;
    }
  }
  for (int i = 0; i < nb; ++i) {
    if (state[i] == 1) {
      report.blocks.push_back(blocks[i]);
      report.nu_hats.push_back(nu[i]);
      report.sigma_hats.push_back(sigma[i]);
    } else if (state[i] == 2) {
      ++report.divergent_fits;
    } else {
      ++report.failed_fits;
    }
  }
  const size_t m = report.nu_hats.size();
  if (m > 0) {
    double na = 0, ng = 0, sa = 0, sg = 0;
    for (size_t i = 0; i < m; ++i) {
      na += report.nu_hats[i];
      sa += report.sigma_hats[i];
      ng += std::log(report.nu_hats[i]);
      sg += std::log(report.sigma_hats[i]);
    }
    report.nu_arith = na / m;
    report.sigma_arith = sa / m;
    report.nu_geom = std::exp(ng / m);
    report.sigma_geom = std::exp(sg / m);
  }
  return report;
}

}  // namespace tdist
