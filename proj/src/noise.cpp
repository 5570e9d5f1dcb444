#include "odenet/noise.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "odenet/error.hpp"

namespace odenet {

Eigen::VectorXd sup_norm_per_dimension(const Eigen::MatrixXd& values) {
  Eigen::VectorXd norm = Eigen::VectorXd::Zero(values.cols());
  for (Eigen::Index i = 0; i < values.cols(); ++i) {
    if (values.rows() > 0) norm[i] = values.col(i).cwiseAbs().maxCoeff();
  }
  return norm;
}

NoisyValues inject_noise(const Eigen::MatrixXd& values, double eps, std::mt19937_64& rng,
                         const std::vector<bool>& observed) {
  if (!(eps >= 0.0)) throw Error(ErrorCode::InvalidArgument, "noise strength must be >= 0");
  NoisyValues out{values, Eigen::MatrixXd::Zero(values.rows(), values.cols())};
  if (eps == 0.0) return out;
  const Eigen::VectorXd scale = sup_norm_per_dimension(values);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index k = 0; k < values.rows(); ++k) {
    for (Eigen::Index i = 0; i < values.cols(); ++i) {
      if (!observed.empty() && !observed[static_cast<std::size_t>(i)]) continue;
      const double e = eps * scale[i] * normal(rng);
      out.noise(k, i) = e;
      out.values(k, i) += e;
    }
  }
  return out;
}

double NoiseField::offset(std::size_t traj, std::size_t sample, int dim) const {
  const int c = column_of(dim);
  return c < 0 ? 0.0 : offsets[traj](static_cast<Eigen::Index>(sample), c);
}

int NoiseField::column_of(int dim) const {
  for (std::size_t c = 0; c < observed_dims.size(); ++c) {
    if (observed_dims[c] == dim) return static_cast<int>(c);
  }
  return -1;
}

NoiseField initialize_noise_field(const Dataset& dataset, double eps_guess) {
  if (!(eps_guess >= 0.0)) throw Error(ErrorCode::InvalidArgument, "noise guess must be >= 0");
  NoiseField field;
  const int d = dataset.dimension();
  const auto mask = dataset.observed();
  for (int i = 0; i < d; ++i) {
    if (mask[static_cast<std::size_t>(i)]) field.observed_dims.push_back(i);
  }
  field.scale_reference = Eigen::VectorXd::Zero(d);
  for (const auto& traj : dataset.trajectories) {
    const Eigen::VectorXd s = sup_norm_per_dimension(traj.values);
    for (int i : field.observed_dims) {
      field.scale_reference[i] = std::max(field.scale_reference[i], s[i]);
    }
    field.offsets.push_back(Eigen::MatrixXd::Zero(
        static_cast<Eigen::Index>(traj.samples()),
        static_cast<Eigen::Index>(field.observed_dims.size())));
  }
  return field;
}

std::vector<DimensionNoiseReport> noise_gaussianity_report(const NoiseField& field) {
  constexpr int kBins = 40;
  std::vector<DimensionNoiseReport> reports;
  for (std::size_t c = 0; c < field.observed_dims.size(); ++c) {
    std::vector<double> xs;
    for (const auto& m : field.offsets) {
      for (Eigen::Index k = 0; k < m.rows(); ++k) xs.push_back(m(k, static_cast<Eigen::Index>(c)));
    }
    if (xs.size() < 10) {
      throw Error(ErrorCode::InsufficientData, "noise report needs at least 10 samples");
    }
    DimensionNoiseReport r;
    r.dimension = field.observed_dims[c];
    r.samples = xs.size();
    const double n = static_cast<double>(xs.size());
    double sum = 0.0;
    for (double x : xs) sum += x;
    r.mean = sum / n;
    double m2 = 0.0, m4 = 0.0;
    for (double x : xs) {
      const double dx = x - r.mean;
      m2 += dx * dx;
      m4 += dx * dx * dx * dx;
    }
    m2 /= n;
    m4 /= n;
    r.stddev = std::sqrt(m2);
    r.degenerate = !(r.stddev > 0.0);
    r.excess_kurtosis = r.degenerate ? 0.0 : m4 / (m2 * m2) - 3.0;

    r.counts.assign(kBins, 0);
    r.bin_centers.resize(kBins);
    r.reference_density.assign(kBins, 0.0);
    if (r.degenerate) {
      // Everything lands in the middle bin; there is no spread to scale by.
      for (int b = 0; b < kBins; ++b) r.bin_centers[b] = r.mean;
      r.counts[kBins / 2] = xs.size();
    } else {
      const double lo = r.mean - 4.0 * r.stddev;
      const double width = 8.0 * r.stddev / kBins;
      for (int b = 0; b < kBins; ++b) {
        r.bin_centers[b] = lo + (b + 0.5) * width;
        const double z = (r.bin_centers[b] - r.mean) / r.stddev;
        r.reference_density[b] =
            std::exp(-0.5 * z * z) / (r.stddev * std::sqrt(2.0 * std::numbers::pi));
      }
      for (double x : xs) {
        const int b = static_cast<int>(std::floor((x - lo) / width));
        if (b >= 0 && b < kBins) ++r.counts[b];
      }
    }
    reports.push_back(std::move(r));
  }
  return reports;
}

std::string noise_report_csv(const std::vector<DimensionNoiseReport>& reports) {
  std::ostringstream os;
  os.precision(17);
  os << "dimension,bin_center,count,reference_density\n";
  for (const auto& r : reports) {
    for (std::size_t b = 0; b < r.counts.size(); ++b) {
      os << r.dimension + 1 << ',' << r.bin_centers[b] << ',' << r.counts[b] << ','
         << r.reference_density[b] << '\n';
    }
  }
  return os.str();
}

double noise_correlation(const NoiseField& field, const std::vector<Eigen::MatrixXd>& reference,
                         int dim) {
  const int c = field.column_of(dim);
  if (c < 0) throw Error(ErrorCode::InvalidArgument, "dimension has no noise offsets");
  if (reference.size() != field.offsets.size()) {
    throw Error(ErrorCode::InvalidDimension, "reference noise does not match field");
  }
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0, n = 0;
  for (std::size_t t = 0; t < reference.size(); ++t) {
    for (Eigen::Index k = 0; k < field.offsets[t].rows(); ++k) {
      const double x = field.offsets[t](k, c);
      const double y = reference[t](k, dim);
      sx += x;
      sy += y;
      sxx += x * x;
      syy += y * y;
      sxy += x * y;
      n += 1;
    }
  }
  const double cov = sxy / n - (sx / n) * (sy / n);
  const double vx = sxx / n - (sx / n) * (sx / n);
  const double vy = syy / n - (sy / n) * (sy / n);
  if (!(vx > 0.0) || !(vy > 0.0)) return 0.0;
  return cov / std::sqrt(vx * vy);
}

}  // namespace odenet
