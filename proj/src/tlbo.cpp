#include "mgsched/tlbo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <thread>

#include "mgsched/error.hpp"

namespace mgsched::tlbo {

namespace {

double safe_eval(const Objective& f, std::span<const double> x) {
  const double v = f(x);
  return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
}

// Evaluates every candidate; work is split in contiguous chunks so the
// output is independent of the thread count.
std::vector<double> evaluate_all(const Objective& f, const std::vector<std::vector<double>>& xs,
                                 unsigned threads) {
  std::vector<double> out(xs.size());
  const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), xs.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < xs.size(); ++i) out[i] = safe_eval(f, xs[i]);
    return out;
  }
  std::vector<std::jthread> pool;
  const std::size_t chunk = (xs.size() + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      const std::size_t end = std::min(xs.size(), (w + 1) * chunk);
      for (std::size_t i = w * chunk; i < end; ++i) out[i] = safe_eval(f, xs[i]);
    });
  }
  return out;
}

std::vector<double> draw_r(const Config& config, Rng& rng) {
  const std::size_t dim = config.bounds.dim();
  if (config.per_dimension_r) {
    std::vector<double> r(dim);
    for (auto& v : r) v = rng.uniform();
    return r;
  }
  return std::vector<double>(dim, rng.uniform());
}

std::size_t accept(Population& pop, std::vector<std::vector<double>>& candidates,
                   const std::vector<double>& fitness) {
  for (std::size_t i = 0; i < pop.size(); ++i) {
    if (fitness[i] < pop[i].fitness) {
      pop[i].position = std::move(candidates[i]);
      pop[i].fitness = fitness[i];
    }
  }
  return candidates.size();
}

}  // namespace

void validate(const Config& config) {
  if (config.population_size < 2) {
    throw Error(ErrorCode::InvalidArgument, "population_size must be >= 2");
  }
  if (config.bounds.lo.size() != config.bounds.hi.size() || config.bounds.lo.empty()) {
    throw Error(ErrorCode::InvalidArgument, "bounds must be non-empty and of equal length");
  }
  for (std::size_t d = 0; d < config.bounds.dim(); ++d) {
    if (!(config.bounds.lo[d] < config.bounds.hi[d])) {
      throw Error(ErrorCode::InvalidArgument,
                  "bounds violate lo < hi in dimension " + std::to_string(d));
    }
  }
}

void clamp(std::vector<double>& x, const Bounds& bounds) {
  for (std::size_t d = 0; d < x.size(); ++d) x[d] = std::clamp(x[d], bounds.lo[d], bounds.hi[d]);
}

std::size_t teacher_index(const Population& pop) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < pop.size(); ++i) {
    if (pop[i].fitness < pop[best].fitness) best = i;
  }
  return best;
}

std::vector<double> population_mean(const Population& pop) {
  std::vector<double> mean(pop.front().position.size(), 0.0);
  for (const auto& ind : pop) {
    for (std::size_t d = 0; d < mean.size(); ++d) mean[d] += ind.position[d];
  }
  for (auto& m : mean) m /= static_cast<double>(pop.size());
  return mean;
}

std::vector<double> teacher_candidate(std::span<const double> x, std::span<const double> teacher,
                                      std::span<const double> mean, int teaching_factor,
                                      std::span<const double> r) {
  std::vector<double> out(x.size());
  for (std::size_t d = 0; d < x.size(); ++d) {
    out[d] = x[d] + r[d] * (teacher[d] - teaching_factor * mean[d]);
  }
  return out;
}

std::vector<double> learner_candidate(std::span<const double> xi, std::span<const double> xj,
                                      double fi, double fj, std::span<const double> r) {
  std::vector<double> out(xi.size());
  const bool fitter = fi < fj;
  for (std::size_t d = 0; d < xi.size(); ++d) {
    const double direction = fitter ? xi[d] - xj[d] : xj[d] - xi[d];
    out[d] = xi[d] + r[d] * direction;
  }
  return out;
}

std::size_t partner_index(std::size_t self, std::size_t n, Rng& rng) {
  const std::size_t j = rng.index(n - 1);
  return j >= self ? j + 1 : j;
}

Population initialize(const Objective& f, const Config& config, Rng& rng,
                      std::size_t& evaluations) {
  std::vector<std::vector<double>> xs(config.population_size);
  for (auto& x : xs) {
    x.resize(config.bounds.dim());
    for (std::size_t d = 0; d < x.size(); ++d) {
      x[d] = rng.uniform(config.bounds.lo[d], config.bounds.hi[d]);
    }
  }
  const auto fitness = evaluate_all(f, xs, config.threads);
  evaluations += xs.size();
  Population pop(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) pop[i] = {std::move(xs[i]), fitness[i]};
  return pop;
}

std::size_t teacher_phase(Population& pop, const Objective& f, const Config& config, Rng& rng) {
  const auto& teacher = pop[teacher_index(pop)].position;
  const auto mean = population_mean(pop);
  std::vector<std::vector<double>> candidates(pop.size());
  for (std::size_t i = 0; i < pop.size(); ++i) {
    const auto r = draw_r(config, rng);
    const int tf = 1 + static_cast<int>(rng.index(2));
    candidates[i] = teacher_candidate(pop[i].position, teacher, mean, tf, r);
    clamp(candidates[i], config.bounds);
  }
  const auto fitness = evaluate_all(f, candidates, config.threads);
  return accept(pop, candidates, fitness);
}

std::size_t learner_phase(Population& pop, const Objective& f, const Config& config, Rng& rng) {
  std::vector<std::vector<double>> candidates(pop.size());
  for (std::size_t i = 0; i < pop.size(); ++i) {
    const std::size_t j = partner_index(i, pop.size(), rng);
    const auto r = draw_r(config, rng);
    candidates[i] = learner_candidate(pop[i].position, pop[j].position, pop[i].fitness,
                                      pop[j].fitness, r);
    clamp(candidates[i], config.bounds);
  }
  const auto fitness = evaluate_all(f, candidates, config.threads);
  return accept(pop, candidates, fitness);
}

OptResult optimize(const Objective& f, const Config& config, const Observer& observer) {
  validate(config);
  Rng rng(config.seed);
  OptResult result;
  Population pop = initialize(f, config, rng, result.evaluations);
  result.trace.reserve(config.max_iterations + 1);
  result.trace.push_back(pop[teacher_index(pop)].fitness);
  for (std::size_t it = 1; it <= config.max_iterations; ++it) {
    result.evaluations += teacher_phase(pop, f, config, rng);
    result.evaluations += learner_phase(pop, f, config, rng);
    result.trace.push_back(pop[teacher_index(pop)].fitness);
    if (observer) observer(it, pop);
  }
  const auto& best = pop[teacher_index(pop)];
  result.best_position = best.position;
  result.best_fitness = best.fitness;
  return result;
}

double sphere(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

double rosenbrock(std::span<const double> x) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    const double a = x[i + 1] - x[i] * x[i];
    const double b = 1.0 - x[i];
    s += 100.0 * a * a + b * b;
  }
  return s;
}

double rastrigin(std::span<const double> x) {
  double s = 10.0 * static_cast<double>(x.size());
  for (double v : x) s += v * v - 10.0 * std::cos(2.0 * std::numbers::pi * v);
  return s;
}

std::vector<BenchmarkRow> benchmark_suite(std::uint64_t seed) {
  struct Case {
    const char* name;
    double (*fn)(std::span<const double>);
    std::size_t dim;
    double lo, hi;
    std::size_t pop, iters;
  };
  const Case cases[] = {
      {"sphere", sphere, 10, -100.0, 100.0, 50, 500},
      {"rosenbrock", rosenbrock, 2, -5.0, 10.0, 50, 2000},
      {"rastrigin", rastrigin, 10, -5.12, 5.12, 50, 500},
  };
  std::vector<BenchmarkRow> rows;
  for (const auto& c : cases) {
    Config config;
    config.population_size = c.pop;
    config.max_iterations = c.iters;
    config.seed = seed;
    config.bounds = Bounds::uniform(c.dim, c.lo, c.hi);
    const auto r = optimize(c.fn, config);
    rows.push_back({c.name, c.dim, c.pop, c.iters, seed, r.best_fitness, r.evaluations});
  }
  return rows;
}

std::string benchmark_csv(const std::vector<BenchmarkRow>& rows) {
  std::ostringstream out;
  out.precision(17);
  out << "function,dim,pop,iters,seed,best_fitness,evals\n";
  for (const auto& r : rows) {
    out << r.function << "," << r.dim << "," << r.population << "," << r.iterations << ","
        << r.seed << "," << r.best_fitness << "," << r.evaluations << "\n";
  }
  return out.str();
}

}  // namespace mgsched::tlbo
