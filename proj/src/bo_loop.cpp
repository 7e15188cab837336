#include "begp/bo_loop.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace begp {

Vector BORun::final_design() const {
  Vector best;
  double best_y = std::numeric_limits<double>::infinity();
  for (const BoEvent& e : events) {
    if (e.y < best_y) {
      best_y = e.y;
      best = e.x;
    }
  }
  return best;
}

std::vector<double> running_best(const std::vector<double>& ys) {
  if (ys.empty())
    throw std::invalid_argument("running_best: empty history");
  std::vector<double> best;
  best.reserve(ys.size());
  double cur = std::numeric_limits<double>::infinity();
  for (double y : ys) {
    cur = std::min(cur, y);
    best.push_back(cur);
  }
  return best;
}

std::vector<double> running_best(const std::vector<double>& ys,
                                 double task_best) {
  std::vector<double> best = running_best(ys);
  for (double& b : best) b -= task_best;
  return best;
}

namespace {

double now_ms() {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

// One BO iteration body shared by both loops; returns false when the run
// aborted (error already recorded).
template <typename SelectFn>
bool bo_step(Surrogate& model, const MultiTaskData& initial_data, BORun& run,
             int iteration, std::uint64_t seed, SelectFn&& select) {
  const double t0 = now_ms();
  try {
    if (iteration == 0)
      model.fit(initial_data, derive_seed(seed, "fit"));
    else
      model.refit(derive_seed(seed, "refit", iteration));

    auto [x, y, acq] = select(iteration);

    if (!std::isfinite(y))
      throw std::runtime_error("objective returned a non-finite value");
    model.add_datum(run.task, x, y);

    BoEvent event;
    event.iteration = iteration;
    event.x = std::move(x);
    event.y = y;
    event.acquisition_value = acq;
    event.best_so_far =
        run.events.empty() ? y : std::min(y, run.events.back().best_so_far);
    event.wall_ms = now_ms() - t0;
    run.best_trace.push_back(event.best_so_far);
    run.events.push_back(std::move(event));
    return true;
  } catch (const SingularKernelError& e) {
    run.aborted = true;
    run.error = e.what();
  } catch (const TrainingDivergedError& e) {
    run.aborted = true;
    run.error = e.what();
  } catch (const std::runtime_error& e) {
    run.aborted = true;
    run.error = e.what();
  }
  return false;
}

}  // namespace

BORun run_bo_continuous(Surrogate& model, const MultiTaskData& initial_data,
                        const TaskKey& task, const Oracle& oracle,
                        const ContinuousDesignSpace& space,
                        const BoSettings& settings, std::uint64_t seed) {
  space.validate();
  if (settings.budget < 0)
    throw std::invalid_argument("run_bo_continuous: negative budget");
  BORun run;
  run.task = task;
  run.budget = settings.budget;
  for (int i = 0; i < settings.budget; ++i) {
    const bool ok = bo_step(
        model, initial_data, run, i, seed, [&](int iteration) {
          const EiResult r = maximize_ei(model, task, space, settings.ei,
                                         derive_seed(seed, "acq", iteration));
          return std::make_tuple(r.x, oracle(r.x), r.value);
        });
    if (!ok) break;
  }
  return run;
}

BORun run_bo_finite(Surrogate& model, const MultiTaskData& initial_data,
                    const TaskKey& task, FiniteDesignSet& designs,
                    const BoSettings& settings, std::uint64_t seed) {
  designs.validate();
  if (settings.budget < 0)
    throw std::invalid_argument("run_bo_finite: negative budget");
  if (settings.budget > designs.n_unevaluated())
    throw std::invalid_argument(
        "run_bo_finite: budget exceeds the unevaluated candidates");
  BORun run;
  run.task = task;
  run.budget = settings.budget;
  for (int i = 0; i < settings.budget; ++i) {
    const bool ok = bo_step(
        model, initial_data, run, i, seed, [&](int iteration) {
          const Vector probs =
              prob_best(model, task, designs, settings.prob_best_samples,
                        derive_seed(seed, "acq", iteration));
          Eigen::Index arg = -1;
          double best_p = -1.0;
          for (Eigen::Index c = 0; c < probs.size(); ++c) {
            if (designs.candidates[static_cast<std::size_t>(c)].evaluated)
              continue;
            if (probs[c] > best_p) {
              best_p = probs[c];
              arg = c;
            }
          }
          FiniteCandidate& chosen =
              designs.candidates[static_cast<std::size_t>(arg)];
          chosen.evaluated = true;
          return std::make_tuple(chosen.x, chosen.y, best_p);
        });
    if (!ok) break;
  }
  return run;
}

}  // namespace begp
