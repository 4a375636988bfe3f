#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "coevo/metrics.hpp"
#include "coevo/society.hpp"
#include "coevo/steady_state.hpp"

namespace coevo {

/// Finite-agent run configuration.
struct SimConfig {
  std::int64_t n_scale = 10000;  ///< agents per unit population mass
  double t_end = 60.0;           ///< simulated horizon
  double burn_in = -1.0;         ///< time before statistics collection; < 0 picks 20/lambda_d
  std::uint64_t seed = 1;        ///< base RNG seed; replicate i uses seed + i
  int replicates = 1;
  int hist_bins = 80;            ///< welfare histogram bins over [-r, x_hist_max]
  double x_hist_max = 0.0;       ///< <= 0 picks 25/lambda_d
  double sample_dt = 0.0;        ///< series/histogram snapshot spacing; <= 0 picks 0.1/lambda_d
  double max_alive_factor = 10.0;  ///< hard cap at factor * lambda_b * n_scale / lambda_d agents
  int jobs = 1;                  ///< replicate parallelism; results are merge-order deterministic
};

class resource_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class insufficient_data_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Throws std::invalid_argument on out-of-range configuration.
void validate_config(const SimConfig& cfg);

double resolved_burn_in(const SocietyParams& p, const SimConfig& cfg);
double resolved_sample_dt(const SocietyParams& p, const SimConfig& cfg);
double resolved_x_hist_max(const SocietyParams& p, const SimConfig& cfg);

/// One replicate's accumulated statistics.
struct ReplicateSummary {
  double q_bar = 0.0;     ///< time-averaged empirical mean quality
  double pop = 0.0;       ///< time-averaged population mass (alive/n_scale)
  double x_bar = 0.0;     ///< time-averaged per-capita mean welfare
  double var_x = 0.0;     ///< time-averaged E[x^2] minus x_bar^2
  double t_good = 0.0;    ///< mean completed lifetime, good quality, post burn-in
  double t_bad = 0.0;
  double t_bar = 0.0;          ///< population-share weighted lifetime
  double t_bar_newborn = 0.0;  ///< plain mean of completed lifetimes (newborn weighting)
  double death_ratio = 0.0;    ///< boundary/natural deaths post burn-in
  double min_welfare = 0.0;    ///< lowest welfare materialized at any snapshot
  std::int64_t births = 0;     ///< whole-run counters (conservation identity)
  std::int64_t deaths_natural = 0;
  std::int64_t deaths_boundary = 0;
  std::int64_t alive_end = 0;
  std::int64_t post_burn_events = 0;
  std::vector<double> hist_mass;  ///< time-averaged mass per histogram bin
};

/// Merged output of all replicates.
struct SimResult {
  SocietyParams params{};
  SimConfig config{};
  std::vector<std::pair<double, double>> q_bar_series;  ///< replicate 0 snapshots
  std::vector<std::pair<double, double>> pop_series;    ///< replicate 0 snapshots
  std::vector<double> lifetimes;                        ///< replicate 0 sample, capped
  std::vector<double> hist_mass;                        ///< mean over replicates
  double hist_lo = 0.0;
  double hist_hi = 0.0;
  std::int64_t births = 0;
  std::int64_t deaths_natural = 0;
  std::int64_t deaths_boundary = 0;
  std::int64_t alive_end = 0;
  std::vector<ReplicateSummary> replicates;
};

/// Exact event-driven trajectory of the finite-agent system. Between events every
/// agent drifts at (1-w)*q + w*Qhat with Qhat the current empirical mean quality;
/// births arrive at rate lambda_b*n_scale with fair-coin quality, natural deaths as
/// one population-level exponential clock with a uniform victim, and boundary hits
/// at exact closed-form crossing times. Bit-for-bit reproducible per (seed, params, cfg).
SimResult run_simulation(const SocietyParams& p, const SimConfig& cfg);

struct Estimate {
  double mean = 0.0;
  double se = 0.0;  ///< standard error from replicate spread (0 when replicates == 1)
};

/// Time-averaged empirical steady-state estimates with standard errors.
struct EmpiricalMetrics {
  Estimate q_bar, pop, x_bar, var_x, t_bar, t_bar_newborn, t_good, t_bad, death_ratio;
  std::int64_t post_burn_events = 0;
};

/// Reduces replicate summaries; throws insufficient_data_error when fewer than
/// 1000 post-burn-in events were recorded.
EmpiricalMetrics estimate_steady(const SimResult& result);

struct ComparisonRow {
  std::string metric;
  double analytical = 0.0;
  double empirical = 0.0;
  double se = 0.0;
  double z = 0.0;
  bool pass = false;  ///< |z| <= 3
};

struct ComparisonReport {
  std::vector<ComparisonRow> rows;
  bool all_pass = false;
};

/// Per-metric z-scores of empirical vs analytical values.
ComparisonReport compare(const SteadyState& ss, const SocietyMetrics& analytical,
                         const EmpiricalMetrics& empirical);

/// Analytic mass per histogram bin over [lo, hi], for density cross-checks.
std::vector<double> analytic_bin_masses(const SocietyParams& p, const SteadyState& ss,
                                        double lo, double hi, int bins);

}  // namespace coevo
