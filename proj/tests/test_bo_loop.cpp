#include <doctest.h>

#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include "begp/bo_loop.hpp"
#include "stub_surrogate.hpp"

using namespace begp;
using begp::testing::StubSurrogate;

namespace {

ContinuousDesignSpace unit_box() {
  ContinuousDesignSpace space;
  space.lower = Vector::Zero(1);
  space.upper = Vector::Ones(1);
  return space;
}

MultiTaskData empty_data() {
  MultiTaskData data;
  data.feature_names = {"task"};
  data.x = Matrix(0, 1);
  data.y = Vector(0);
  return data;
}

FiniteDesignSet four_candidates() {
  FiniteDesignSet designs;
  const double xs[] = {0.1, 0.4, 0.7, 0.9};
  const double ys[] = {0.8, 0.1, 0.5, 0.3};
  for (int i = 0; i < 4; ++i) {
    FiniteCandidate c;
    c.x = Vector::Constant(1, xs[i]);
    c.y = ys[i];
    designs.candidates.push_back(c);
  }
  return designs;
}

}  // namespace

TEST_SUITE("bo loop") {

TEST_CASE("running_best tracks the prefix minimum") {
  CHECK(running_best({3.0, 1.0, 2.0}) == std::vector<double>{3.0, 1.0, 1.0});
  CHECK(running_best({5.0}) == std::vector<double>{5.0});
  CHECK(running_best({3.0, 1.0, 2.0}, 1.0) ==
        std::vector<double>{2.0, 0.0, 0.0});
  CHECK_THROWS_AS(running_best(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("zero budget runs nothing, not even the cold fit") {
  StubSurrogate stub;
  BoSettings settings;
  settings.budget = 0;
  const Oracle oracle = [](const Vector& x) { return x[0]; };
  const BORun run =
      run_bo_continuous(stub, empty_data(), {"t"}, oracle, unit_box(),
                        settings, 4);
  CHECK(run.events.empty());
  CHECK(run.best_trace.empty());
  CHECK_FALSE(run.aborted);
  CHECK(run.final_design().size() == 0);
  CHECK(stub.fit_calls == 0);
  CHECK(stub.refit_calls == 0);
}

TEST_CASE("continuous run fills the budget and keeps its own bookkeeping") {
  StubSurrogate stub;
  MultiTaskData initial = empty_data();
  initial.append({"other"}, Vector::Constant(1, 0.2), 1.5);
  initial.append({"other"}, Vector::Constant(1, 0.8), 2.5);

  BoSettings settings;
  settings.budget = 4;
  const Oracle oracle = [](const Vector& x) {
    return (x[0] - 0.7) * (x[0] - 0.7);
  };
  const BORun run = run_bo_continuous(stub, initial, {"current"}, oracle,
                                      unit_box(), settings, 11);

  REQUIRE(run.events.size() == 4);
  REQUIRE(run.best_trace.size() == 4);
  CHECK_FALSE(run.aborted);
  CHECK(run.budget == 4);
  CHECK(stub.fit_calls == 1);
  CHECK(stub.refit_calls == 3);
  CHECK(stub.training_data().rows() == 2 + 4);

  std::vector<double> ys;
  double best_y = run.events.front().y;
  for (std::size_t i = 0; i < run.events.size(); ++i) {
    const BoEvent& e = run.events[i];
    CHECK(e.iteration == static_cast<int>(i));
    CHECK(e.x.size() == 1);
    CHECK(e.x[0] >= 0.0);
    CHECK(e.x[0] <= 1.0);
    CHECK(e.y == oracle(e.x));
    CHECK(e.acquisition_value <= 0.0);
    CHECK(e.wall_ms >= 0.0);
    best_y = std::min(best_y, e.y);
    CHECK(e.best_so_far == best_y);
    ys.push_back(e.y);
  }
  CHECK(run.best_trace == running_best(ys));

  double best = run.events.front().y;
  Vector best_x = run.events.front().x;
  for (const BoEvent& e : run.events) {
    if (e.y < best) {
      best = e.y;
      best_x = e.x;
    }
  }
  REQUIRE(run.final_design().size() == 1);
  CHECK(run.final_design()[0] == best_x[0]);
}

TEST_CASE("continuous runs are reproducible from the seed") {
  const Oracle oracle = [](const Vector& x) { return std::sin(7.0 * x[0]); };
  BoSettings settings;
  settings.budget = 3;

  auto trace = [&](std::uint64_t seed) {
    StubSurrogate stub;
    return run_bo_continuous(stub, empty_data(), {"t"}, oracle, unit_box(),
                             settings, seed);
  };
  const BORun a = trace(21);
  const BORun b = trace(21);
  REQUIRE(a.events.size() == b.events.size());
  for (std::size_t i = 0; i < a.events.size(); ++i) {
    CHECK(a.events[i].x[0] == b.events[i].x[0]);
    CHECK(a.events[i].y == b.events[i].y);
  }
  const BORun c = trace(22);
  bool all_same = true;
  for (std::size_t i = 0; i < a.events.size(); ++i)
    all_same = all_same && a.events[i].x[0] == c.events[i].x[0];
  CHECK_FALSE(all_same);
}

TEST_CASE("a non-finite objective aborts with the history kept") {
  StubSurrogate stub;
  int calls = 0;
  const Oracle oracle = [&](const Vector&) {
    ++calls;
    return calls >= 2 ? std::numeric_limits<double>::quiet_NaN() : 0.4;
  };
  BoSettings settings;
  settings.budget = 5;
  const BORun run = run_bo_continuous(stub, empty_data(), {"t"}, oracle,
                                      unit_box(), settings, 3);
  CHECK(run.aborted);
  CHECK(run.error.find("non-finite") != std::string::npos);
  CHECK(run.events.size() == 1);
  CHECK(run.best_trace.size() == 1);
  CHECK(stub.training_data().rows() == 1);
}

TEST_CASE("a diverging refit aborts and records the message") {
  StubSurrogate stub;
  stub.throw_refit_at = 1;
  const Oracle oracle = [](const Vector& x) { return x[0]; };
  BoSettings settings;
  settings.budget = 4;
  const BORun run = run_bo_continuous(stub, empty_data(), {"t"}, oracle,
                                      unit_box(), settings, 6);
  CHECK(run.aborted);
  CHECK(run.error.find("diverged") != std::string::npos);
  CHECK(run.events.size() == 2);
}

TEST_CASE("negative budgets are rejected") {
  StubSurrogate stub;
  BoSettings settings;
  settings.budget = -1;
  const Oracle oracle = [](const Vector& x) { return x[0]; };
  CHECK_THROWS_AS(run_bo_continuous(stub, empty_data(), {"t"}, oracle,
                                    unit_box(), settings, 0),
                  std::invalid_argument);
  FiniteDesignSet designs = four_candidates();
  CHECK_THROWS_AS(
      run_bo_finite(stub, empty_data(), {"t"}, designs, settings, 0),
      std::invalid_argument);
}

TEST_CASE("finite run with budget equal to the pool evaluates each once") {
  StubSurrogate stub;
  FiniteDesignSet designs = four_candidates();
  BoSettings settings;
  settings.budget = 4;
  settings.prob_best_samples = 64;
  const BORun run =
      run_bo_finite(stub, empty_data(), {"t"}, designs, settings, 9);

  REQUIRE(run.events.size() == 4);
  CHECK_FALSE(run.aborted);
  CHECK(designs.n_unevaluated() == 0);

  std::set<double> picked;
  std::vector<double> ys;
  for (const BoEvent& e : run.events) {
    picked.insert(e.x[0]);
    ys.push_back(e.y);
    bool matched = false;
    for (const FiniteCandidate& c : designs.candidates)
      if (c.x[0] == e.x[0]) {
        matched = true;
        CHECK(e.y == c.y);
      }
    CHECK(matched);
  }
  CHECK(picked.size() == 4);
  CHECK(run.best_trace == running_best(ys));
  CHECK(run.best_trace.back() == 0.1);
}

TEST_CASE("finite run rejects budgets above the unevaluated pool") {
  StubSurrogate stub;
  FiniteDesignSet designs = four_candidates();
  designs.candidates[2].evaluated = true;
  BoSettings settings;
  settings.budget = 4;
  CHECK_THROWS_AS(
      run_bo_finite(stub, empty_data(), {"t"}, designs, settings, 0),
      std::invalid_argument);
  settings.budget = 3;
  const BORun run =
      run_bo_finite(stub, empty_data(), {"t"}, designs, settings, 0);
  CHECK(run.events.size() == 3);
  for (const BoEvent& e : run.events) CHECK(e.x[0] != 0.7);
}

TEST_CASE("finite selection tracks the predicted-best candidate") {
  // Sampled outputs rise steeply in x, so the leftmost open candidate
  // should win nearly always.
  int first_pick_wins = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    StubSurrogate stub;
    stub.sampler = [](const Matrix& x_r, RngStream& rng) {
      Vector draw(x_r.rows());
      for (Eigen::Index i = 0; i < x_r.rows(); ++i)
        draw[i] = 10.0 * x_r(i, 0) + 0.1 * rng.normal();
      return draw;
    };
    FiniteDesignSet designs = four_candidates();
    BoSettings settings;
    settings.budget = 2;
    settings.prob_best_samples = 128;
    const BORun run =
        run_bo_finite(stub, empty_data(), {"t"}, designs, settings, seed);
    REQUIRE(run.events.size() == 2);
    if (run.events[0].x[0] == 0.1 && run.events[1].x[0] == 0.4)
      ++first_pick_wins;
  }
  CHECK(first_pick_wins >= 19);
}

}  // TEST_SUITE
