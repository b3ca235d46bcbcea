// Price/return panels, moment estimation and the seeded synthetic generator.
//
// Conventions fixed here and relied on everywhere else:
//   * simple (arithmetic) returns: r[t] = (p[t+1] - p[t]) / p[t]
//   * population moments: mu = (1/N) sum r_j,  sigma = (1/N) sum (r_j-mu)(r_j-mu)^T

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <istream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cardport/io.hpp"

namespace cardport {

struct PricePanel {
  std::vector<std::string> dates;    // row labels, file order
  std::vector<std::string> tickers;  // column labels
  Eigen::MatrixXd prices;            // T x n, strictly positive

  void validate() const {
    const auto rows = static_cast<std::size_t>(prices.rows());
    const auto cols = static_cast<std::size_t>(prices.cols());
    if (rows != dates.size()) throw std::invalid_argument("price panel: row count does not match date count");
    if (cols != tickers.size()) throw std::invalid_argument("price panel: column count does not match ticker count");
    if (prices.rows() < 2) throw std::invalid_argument("price panel: need at least two rows of prices");
    if (!(prices.array() > 0.0).all()) throw std::invalid_argument("price panel: prices must be strictly positive");
  }
};

struct ReturnsPanel {
  std::vector<std::string> tickers;
  Eigen::MatrixXd returns;           // N x n
  std::vector<std::string> sectors;  // optional, one label per ticker (empty if unknown)

  int n_assets() const { return static_cast<int>(returns.cols()); }
  int n_samples() const { return static_cast<int>(returns.rows()); }

  void validate() const {
    if (returns.rows() < 1) throw std::invalid_argument("returns panel: need at least one sample");
    if (static_cast<std::size_t>(returns.cols()) != tickers.size())
      throw std::invalid_argument("returns panel: column count does not match ticker count");
    if (!sectors.empty() && sectors.size() != tickers.size())
      throw std::invalid_argument("returns panel: sector labels must match ticker count");
    if (!returns.allFinite()) throw std::invalid_argument("returns panel: non-finite entries");
  }
};

struct Moments {
  Eigen::VectorXd mu;     // length n
  Eigen::MatrixXd sigma;  // n x n, symmetric PSD
};

/// Parse a price CSV (`date,<T1>,<T2>,...`; one row per trading day).
/// Malformed cells, non-positive prices and duplicate tickers raise with the
/// offending 1-based file line.
inline PricePanel load_prices(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("price csv: empty input");
  auto header = split_csv_line(line);
  if (header.empty() || trim(header[0]) != "date")
    throw std::invalid_argument("price csv line 1: first column header must be 'date'");
  if (header.size() < 2) throw std::invalid_argument("price csv line 1: no ticker columns");

  std::vector<std::string> tickers(header.begin() + 1, header.end());
  for (auto& t : tickers) t = trim(t);
  for (std::size_t i = 0; i < tickers.size(); ++i) {
    if (tickers[i].empty()) throw std::invalid_argument("price csv line 1: empty ticker name");
    for (std::size_t j = i + 1; j < tickers.size(); ++j)
      if (tickers[i] == tickers[j])
        throw std::invalid_argument("price csv line 1: duplicate ticker '" + tickers[i] + "'");
  }

  const std::size_t n = tickers.size();
  std::vector<std::string> dates;
  std::vector<double> values;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != n + 1)
      throw std::invalid_argument("price csv line " + std::to_string(line_no) + ": expected " +
                                  std::to_string(n + 1) + " columns, got " + std::to_string(cells.size()));
    dates.push_back(trim(cells[0]));
    for (std::size_t j = 1; j < cells.size(); ++j) {
      double v = 0.0;
      if (!parse_double(cells[j], v))
        throw std::invalid_argument("price csv line " + std::to_string(line_no) + ": cell '" + cells[j] +
                                    "' is not a decimal number");
      if (!(v > 0.0))
        throw std::invalid_argument("price csv line " + std::to_string(line_no) +
                                    ": price must be strictly positive (ticker '" + tickers[j - 1] + "')");
      values.push_back(v);
    }
  }
  if (dates.empty()) throw std::invalid_argument("price csv: no data rows");

  PricePanel panel;
  panel.dates = std::move(dates);
  panel.tickers = std::move(tickers);
  panel.prices = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), static_cast<Eigen::Index>(panel.dates.size()), static_cast<Eigen::Index>(n));
  return panel;
}

inline PricePanel load_prices(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path.string());
  return load_prices(in);
}

/// Simple per-period returns; row j is (p[j+1] - p[j]) / p[j].
inline ReturnsPanel to_returns(const PricePanel& panel) {
  if (panel.prices.rows() < 2) throw std::invalid_argument("to_returns: need at least two price rows");
  const Eigen::Index T = panel.prices.rows();
  ReturnsPanel out;
  out.tickers = panel.tickers;
  out.returns = (panel.prices.bottomRows(T - 1).array() - panel.prices.topRows(T - 1).array()) /
                panel.prices.topRows(T - 1).array();
  return out;
}

/// Population mean and covariance of the sample rows.
inline Moments estimate_moments(const ReturnsPanel& panel) {
  if (panel.returns.rows() < 1) throw std::invalid_argument("estimate_moments: need at least one sample");
  const auto& r = panel.returns;
  const double inv_n = 1.0 / static_cast<double>(r.rows());
  Moments m;
  m.mu = r.colwise().mean();
  const Eigen::MatrixXd centered = r.rowwise() - m.mu.transpose();
  m.sigma = inv_n * (centered.transpose() * centered);
  m.sigma = ((m.sigma + m.sigma.transpose()) * 0.5).eval();  // kill rounding asymmetry
  return m;
}

/// Parameters of the sector-factor generator. Each asset is
///   r = mean + factor(sector) + idio noise,
/// which gives within-sector correlation factor_vol^2/(factor_vol^2+idio_vol^2)
/// and zero expected cross-sector correlation.
struct SynthConfig {
  double factor_vol = 0.02;    // stdev of the per-sector common factor
  double idio_vol = 0.012;     // stdev of per-asset noise
  double mean_low = -0.0005;   // per-asset mean draws are uniform on [low, high]
  double mean_high = 0.002;
};

/// Deterministic synthetic returns panel: n_assets split into the given sector
/// sizes (every sector must be nonempty), n_samples rows, seeded.
inline ReturnsPanel synth_returns(int n_assets, int n_samples, const std::vector<int>& sector_sizes,
                                  std::uint64_t seed, const SynthConfig& cfg = {}) {
  if (n_assets < 1) throw std::invalid_argument("synth_returns: need at least one asset");
  if (n_samples < 2) throw std::invalid_argument("synth_returns: need at least two samples");
  int total = 0;
  for (std::size_t s = 0; s < sector_sizes.size(); ++s) {
    if (sector_sizes[s] <= 0)
      throw std::invalid_argument("synth_returns: sector " + std::to_string(s) + " is empty");
    total += sector_sizes[s];
  }
  if (sector_sizes.empty() || total != n_assets)
    throw std::invalid_argument("synth_returns: sector sizes must sum to the asset count");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(cfg.mean_low, cfg.mean_high);

  ReturnsPanel panel;
  panel.returns.resize(n_samples, n_assets);
  int asset = 0;
  for (std::size_t s = 0; s < sector_sizes.size(); ++s) {
    const std::string sector = "S" + std::to_string(s);
    for (int j = 0; j < sector_sizes[s]; ++j, ++asset) {
      panel.tickers.push_back("A" + std::to_string(asset));
      panel.sectors.push_back(sector);
    }
  }
  // per-asset means, then one factor path per sector, then idiosyncratic noise
  Eigen::VectorXd means(n_assets);
  for (int i = 0; i < n_assets; ++i) means[i] = unif(rng);
  Eigen::MatrixXd factors(n_samples, static_cast<Eigen::Index>(sector_sizes.size()));
  for (Eigen::Index s = 0; s < factors.cols(); ++s)
    for (int t = 0; t < n_samples; ++t) factors(t, s) = cfg.factor_vol * gauss(rng);
  asset = 0;
  for (std::size_t s = 0; s < sector_sizes.size(); ++s) {
    for (int j = 0; j < sector_sizes[s]; ++j, ++asset) {
      for (int t = 0; t < n_samples; ++t)
        panel.returns(t, asset) = means[asset] + factors(t, static_cast<Eigen::Index>(s)) + cfg.idio_vol * gauss(rng);
    }
  }
  return panel;
}

/// Convenience split of n assets into n_sectors blocks, sizes as equal as possible.
inline std::vector<int> even_sector_sizes(int n_assets, int n_sectors) {
  if (n_sectors < 1 || n_sectors > n_assets)
    throw std::invalid_argument("even_sector_sizes: sector count must be in [1, n_assets]");
  std::vector<int> sizes(static_cast<std::size_t>(n_sectors), n_assets / n_sectors);
  for (int i = 0; i < n_assets % n_sectors; ++i) sizes[static_cast<std::size_t>(i)] += 1;
  return sizes;
}

/// Returns CSV: ticker header, one row per sample.
inline std::string returns_to_csv(const ReturnsPanel& panel) {
  std::ostringstream out;
  for (std::size_t i = 0; i < panel.tickers.size(); ++i) {
    if (i) out << ',';
    out << panel.tickers[i];
  }
  out << '\n';
  for (Eigen::Index r = 0; r < panel.returns.rows(); ++r) {
    for (Eigen::Index c = 0; c < panel.returns.cols(); ++c) {
      if (c) out << ',';
      out << format_double(panel.returns(r, c));
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace cardport
