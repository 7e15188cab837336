#include "begp/acquisition.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace begp {

void ContinuousDesignSpace::validate() const {
  if (lower.size() != upper.size() || lower.size() == 0)
    throw std::invalid_argument("design space: bound sizes disagree or empty");
  if (!lower.allFinite() || !upper.allFinite())
    throw std::invalid_argument("design space: bounds must be finite");
  for (Eigen::Index i = 0; i < lower.size(); ++i)
    if (lower[i] > upper[i])
      throw std::invalid_argument("design space: lower bound above upper");
}

Vector ContinuousDesignSpace::clamp(Vector x) const {
  for (Eigen::Index i = 0; i < x.size(); ++i)
    x[i] = std::min(std::max(x[i], lower[i]), upper[i]);
  return x;
}

int FiniteDesignSet::n_unevaluated() const {
  int n = 0;
  for (const FiniteCandidate& c : candidates)
    if (!c.evaluated) ++n;
  return n;
}

void FiniteDesignSet::validate() const {
  if (candidates.empty())
    throw std::invalid_argument("finite design set: no candidates");
  const Eigen::Index d = candidates.front().x.size();
  for (const FiniteCandidate& c : candidates) {
    if (c.x.size() != d)
      throw std::invalid_argument("finite design set: dimension mismatch");
    if (!c.x.allFinite())
      throw std::invalid_argument("finite design set: non-finite design");
  }
}

double normal_pdf(double u) {
  return std::exp(-0.5 * u * u) * 0.3989422804014327;
}

double normal_cdf(double u) {
  return 0.5 * std::erfc(-u * 0.7071067811865476);
}

double expected_improvement(double mean, double variance, double y_min) {
  const double sigma = std::sqrt(std::max(variance, 1e-12));
  const double u = (y_min - mean) / sigma;
  return (mean - y_min) * normal_cdf(u) - sigma * normal_pdf(u);
}

Vector halton_point(std::uint64_t index, Eigen::Index dim) {
  static constexpr int kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19,
                                    23, 29, 31, 37, 41, 43, 47, 53};
  if (dim <= 0 || dim > static_cast<Eigen::Index>(std::size(kPrimes)))
    throw std::invalid_argument("halton_point: unsupported dimension");
  Vector p(dim);
  for (Eigen::Index d = 0; d < dim; ++d) {
    const std::uint64_t base = static_cast<std::uint64_t>(kPrimes[d]);
    double inv = 1.0 / static_cast<double>(base);
    double value = 0.0;
    for (std::uint64_t i = index; i > 0; i /= base) {
      value += static_cast<double>(i % base) * inv;
      inv /= static_cast<double>(base);
    }
    p[d] = value;
  }
  return p;
}

namespace {

double ei_at(const FrozenPredictor& predictor, const Vector& x, double y_min) {
  double mean = 0.0, variance = 0.0;
  predictor.mean_var(x, mean, variance);
  return expected_improvement(mean, variance, y_min);
}

}  // namespace

EiResult maximize_ei(const Surrogate& model, const TaskKey& task,
                     const ContinuousDesignSpace& space,
                     const EiOptions& options, std::uint64_t seed) {
  space.validate();
  if (options.restarts < 1 || options.ascent_steps < 0)
    throw std::invalid_argument("maximize_ei: bad restart or step count");
  const Eigen::Index dim = space.dim();
  const Vector width = space.upper - space.lower;

  // Seeded Cranley-Patterson shift on a Halton sequence for the starts.
  RngStream shift_rng(derive_seed(seed, "ei-starts"));
  Vector shift(dim);
  for (Eigen::Index d = 0; d < dim; ++d) shift[d] = shift_rng.uniform();
  std::vector<Vector> starts;
  starts.reserve(static_cast<std::size_t>(options.restarts));
  for (int r = 0; r < options.restarts; ++r) {
    Vector h = halton_point(static_cast<std::uint64_t>(r) + 1, dim);
    for (Eigen::Index d = 0; d < dim; ++d) {
      double v = h[d] + shift[d];
      v -= std::floor(v);
      h[d] = space.lower[d] + width[d] * v;
    }
    starts.push_back(std::move(h));
  }

  // Incumbent: best observation for the task, else the lowest predictive mean
  // over the start points under a dedicated frozen draw set.
  double y_min;
  if (const auto observed = model.min_observed_y(task)) {
    y_min = *observed;
  } else {
    const auto frozen = model.freeze(task, derive_seed(seed, "ei-ymin"));
    y_min = std::numeric_limits<double>::infinity();
    for (const Vector& s : starts) {
      double mean = 0.0, variance = 0.0;
      frozen->mean_var(s, mean, variance);
      y_min = std::min(y_min, mean);
    }
  }

  EiResult best;
  best.value = std::numeric_limits<double>::infinity();
  for (int r = 0; r < options.restarts; ++r) {
    const auto frozen = model.freeze(task, derive_seed(seed, "ei-draws", r));
    Vector x = starts[static_cast<std::size_t>(r)];
    double step = options.step_scale;
    for (int it = 0; it < options.ascent_steps; ++it) {
      Vector g(dim);
      for (Eigen::Index d = 0; d < dim; ++d) {
        const double h = std::max(options.fd_step * width[d], 1e-12);
        Vector xp = x, xm = x;
        xp[d] += h;
        xm[d] -= h;
        g[d] = (ei_at(*frozen, xp, y_min) - ei_at(*frozen, xm, y_min)) /
               (2.0 * h);
      }
      const double norm = g.norm();
      if (!(norm > 0.0) || !g.allFinite()) break;
      x = space.clamp(x - (step / norm) * width.cwiseProduct(g));
      step *= options.step_decay;
    }
    const double value = ei_at(*frozen, x, y_min);
    if (value < best.value) {
      best.value = value;
      best.x = x;
    }
  }
  return best;
}

Vector prob_best(const Surrogate& model, const TaskKey& task,
                 const FiniteDesignSet& designs, int n_samples,
                 std::uint64_t seed) {
  designs.validate();
  if (n_samples < 1)
    throw std::invalid_argument("prob_best: need at least one sample");
  std::vector<int> open;
  for (std::size_t i = 0; i < designs.candidates.size(); ++i)
    if (!designs.candidates[i].evaluated) open.push_back(static_cast<int>(i));
  if (open.empty())
    throw std::invalid_argument("prob_best: no unevaluated candidates");

  const Eigen::Index m = static_cast<Eigen::Index>(open.size());
  Matrix x(m, designs.candidates.front().x.size());
  for (Eigen::Index i = 0; i < m; ++i)
    x.row(i) = designs.candidates[static_cast<std::size_t>(open[static_cast<std::size_t>(i)])].x.transpose();

  Vector counts = Vector::Zero(m);
  RngStream rng(derive_seed(seed, "prob-best"));
  for (int s = 0; s < n_samples; ++s) {
    const Vector y = model.sample_outputs(task, x, rng);
    Eigen::Index arg = 0;
    for (Eigen::Index i = 1; i < m; ++i)
      if (y[i] < y[arg]) arg = i;
    counts[arg] += 1.0;
  }

  Vector probs = Vector::Zero(static_cast<Eigen::Index>(designs.candidates.size()));
  for (Eigen::Index i = 0; i < m; ++i)
    probs[open[static_cast<std::size_t>(i)]] =
        counts[i] / static_cast<double>(n_samples);
  return probs;
}

}  // namespace begp
