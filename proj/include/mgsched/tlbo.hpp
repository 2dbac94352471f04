#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mgsched/random.hpp"

namespace mgsched::tlbo {

struct Bounds {
  std::vector<double> lo;
  std::vector<double> hi;

  std::size_t dim() const { return lo.size(); }
  static Bounds uniform(std::size_t dim, double lo, double hi) {
    return {std::vector<double>(dim, lo), std::vector<double>(dim, hi)};
  }
};

struct Config {
  std::size_t population_size = 50;
  std::size_t max_iterations = 100;
  std::uint64_t seed = 1;
  Bounds bounds;
  // Draw the step factor per dimension instead of once per individual.
  bool per_dimension_r = false;
  // Worker threads for fitness evaluation. Results do not depend on it.
  unsigned threads = 1;
};

// Throws Error{InvalidArgument} on a malformed config.
void validate(const Config& config);

struct Individual {
  std::vector<double> position;
  double fitness = 0.0;
};

using Population = std::vector<Individual>;

// Must be pure: the same position always yields the same value. Non-finite
// values are treated as +inf.
using Objective = std::function<double(std::span<const double>)>;

struct OptResult {
  std::vector<double> best_position;
  double best_fitness = 0.0;
  // trace[0] is the initial population's best, then one entry per iteration.
  std::vector<double> trace;
  std::size_t evaluations = 0;
};

// Called after every iteration with the iteration number (1-based).
using Observer = std::function<void(std::size_t, const Population&)>;

void clamp(std::vector<double>& x, const Bounds& bounds);

// Lowest fitness; the first index wins among ties.
std::size_t teacher_index(const Population& pop);
std::vector<double> population_mean(const Population& pop);

// x + r * (teacher - tf * mean), before clamping.
std::vector<double> teacher_candidate(std::span<const double> x, std::span<const double> teacher,
                                      std::span<const double> mean, int teaching_factor,
                                      std::span<const double> r);

// Moves away from the partner when strictly fitter, towards it otherwise.
std::vector<double> learner_candidate(std::span<const double> xi, std::span<const double> xj,
                                      double fi, double fj, std::span<const double> r);

// Uniform partner index in [0, n) excluding `self`.
std::size_t partner_index(std::size_t self, std::size_t n, Rng& rng);

Population initialize(const Objective& f, const Config& config, Rng& rng,
                      std::size_t& evaluations);

// Both phases build every candidate from the population as it stood at
// phase start, evaluate them, then accept each one that strictly improves
// its individual. Return the number of evaluations.
std::size_t teacher_phase(Population& pop, const Objective& f, const Config& config, Rng& rng);
std::size_t learner_phase(Population& pop, const Objective& f, const Config& config, Rng& rng);

OptResult optimize(const Objective& f, const Config& config, const Observer& observer = {});

// --- benchmark harness ----------------------------------------------------

double sphere(std::span<const double> x);
double rosenbrock(std::span<const double> x);
double rastrigin(std::span<const double> x);

struct BenchmarkRow {
  std::string function;
  std::size_t dim = 0;
  std::size_t population = 0;
  std::size_t iterations = 0;
  std::uint64_t seed = 0;
  double best_fitness = 0.0;
  std::size_t evaluations = 0;
};

std::vector<BenchmarkRow> benchmark_suite(std::uint64_t seed = 1);

// `function,dim,pop,iters,seed,best_fitness,evals`
std::string benchmark_csv(const std::vector<BenchmarkRow>& rows);

}  // namespace mgsched::tlbo
