#pragma once

#include <functional>
#include <string>

#include "begp/acquisition.hpp"

namespace begp {

struct BoEvent {
  int iteration = 0;
  Vector x;
  double y = 0.0;
  double best_so_far = 0.0;
  double acquisition_value = 0.0;
  double wall_ms = 0.0;
};

struct BORun {
  TaskKey task;
  int budget = 0;
  std::vector<BoEvent> events;
  std::vector<double> best_trace;  // running best, one entry per evaluation
  bool aborted = false;
  std::string error;

  // Design of the best observed outcome; empty when no evaluations happened.
  [[nodiscard]] Vector final_design() const;
};

struct BoSettings {
  int budget = 5;
  EiOptions ei;
  int prob_best_samples = 256;
};

// Running minimum of a non-empty sequence; the relative overload subtracts
// the per-task global best from every entry.
std::vector<double> running_best(const std::vector<double>& ys);
std::vector<double> running_best(const std::vector<double>& ys,
                                 double task_best);

using Oracle = std::function<double(const Vector&)>;

// Sequential BO over a box: cold fit on the initial data (zero-shot for the
// current task when it has no rows there), then per evaluation a warm-started
// refit, an EI maximization, an oracle call, and a data append.  Model
// failures mid-run abort with partial history recorded on the run.
BORun run_bo_continuous(Surrogate& model, const MultiTaskData& initial_data,
                        const TaskKey& task, const Oracle& oracle,
                        const ContinuousDesignSpace& space,
                        const BoSettings& settings, std::uint64_t seed);

// Same loop over a finite candidate pool, selecting the argmax of prob_best
// among unevaluated candidates (ties to the lowest index).  Selected
// candidates reveal their stored outcome and are marked evaluated.
BORun run_bo_finite(Surrogate& model, const MultiTaskData& initial_data,
                    const TaskKey& task, FiniteDesignSet& designs,
                    const BoSettings& settings, std::uint64_t seed);

}  // namespace begp
