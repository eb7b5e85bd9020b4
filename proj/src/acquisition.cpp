#include "bayeshpo/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <spdlog/spdlog.h>

#include "bayeshpo/errors.hpp"
#include "bayeshpo/rng.hpp"

namespace bayeshpo {

namespace {

struct Scored {
  EncodedPoint point;
  double ei = 0.0;
};

bool lex_less(const EncodedPoint& a, const EncodedPoint& b) {
  return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

// Order-stable "better than": larger EI, then lexicographically smaller point.
bool better(const Scored& a, const Scored& b) {
  if (a.ei != b.ei) return a.ei > b.ei;
  return lex_less(a.point, b.point);
}

Scored pattern_search(const FittedGP& gp, Scored start, double f_best,
                      const AcquisitionOptions& opt) {
  Scored cur = std::move(start);
  double step = opt.step_start;
  int passes = 0;
  while (step >= opt.step_min && passes < 500) {
    ++passes;
    bool improved = false;
    for (Eigen::Index j = 0; j < cur.point.size(); ++j) {
      for (const double dir : {1.0, -1.0}) {
        EncodedPoint trial = cur.point;
        trial[j] = std::clamp(trial[j] + dir * step, 0.0, 1.0);
        if (trial[j] == cur.point[j]) continue;
        const double e = expected_improvement(gp, trial, f_best);
        if (e > cur.ei) {
          cur.point = std::move(trial);
          cur.ei = e;
          improved = true;
          break;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  return cur;
}

}  // namespace

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double expected_improvement(double mean, double variance, double f_best) {
  if (!(variance >= 0.0)) throw ValidationError("expected_improvement: negative variance");
  const double sigma = std::sqrt(variance);
  if (sigma == 0.0) return std::max(0.0, f_best - mean);
  const double z = (f_best - mean) / sigma;
  return std::max(0.0, sigma * (z * normal_cdf(z) + normal_pdf(z)));
}

double expected_improvement(const FittedGP& gp, const EncodedPoint& x, double f_best) {
  const auto p = gp.predict(x);
  return expected_improvement(p.mean, p.variance, f_best);
}

std::vector<EncodedPoint> acquisition_candidates(std::size_t dim, std::uint64_t seed,
                                                 int n_candidates) {
  Rng rng(seed);
  std::vector<EncodedPoint> out;
  out.reserve(static_cast<std::size_t>(std::max(0, n_candidates)));
  for (int i = 0; i < n_candidates; ++i) {
    EncodedPoint p(static_cast<Eigen::Index>(dim));
    for (auto& c : p) c = unit_uniform(rng);
    out.push_back(std::move(p));
  }
  return out;
}

AcquisitionResult propose_next(const FittedGP& gp, const OptimizationHistory& history,
                               std::uint64_t seed, const AcquisitionOptions& options) {
  if (history.empty()) throw ValidationError("propose_next: empty history");
  const double f_best = history.best_objective();
  const std::size_t dim = gp.dim();

  std::vector<Scored> scored;
  for (auto& p : acquisition_candidates(dim, seed, options.n_candidates)) {
    const double e = expected_improvement(gp, p, f_best);
    scored.push_back({std::move(p), e});
  }
  for (const auto& t : history.trials()) {
    if (static_cast<std::size_t>(t.encoded.size()) != dim)
      throw ValidationError("propose_next: history point dimension does not match the GP");
    scored.push_back({t.encoded, expected_improvement(gp, t.encoded, f_best)});
  }

  const auto n_refine =
      std::min<std::size_t>(scored.size(), static_cast<std::size_t>(std::max(0, options.n_refine)));
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n_refine),
                    scored.end(), better);

  Scored best = scored.front();
  for (std::size_t i = 0; i < n_refine; ++i) {
    auto refined = pattern_search(gp, scored[i], f_best, options);
    if (better(refined, best)) best = std::move(refined);
  }

  if (!(best.ei > 0.0)) {
    Rng rng(derive_seed(seed, 0xFA11BAC4ULL));
    EncodedPoint p(static_cast<Eigen::Index>(dim));
    for (auto& c : p) c = unit_uniform(rng);
    spdlog::warn("expected improvement is zero everywhere; proposing a uniform random point");
    return {std::move(p), 0.0, true};
  }
  return {std::move(best.point), best.ei, false};
}

}  // namespace bayeshpo
