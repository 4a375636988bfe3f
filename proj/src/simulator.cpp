#include "coevo/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <optional>
#include <random>
#include <sstream>

namespace coevo {

void validate_config(const SimConfig& cfg) {
  if (cfg.n_scale < 1) throw std::invalid_argument("sim config: n_scale must be >= 1");
  if (!(cfg.t_end > 0.0) || !std::isfinite(cfg.t_end)) {
    throw std::invalid_argument("sim config: t_end must be finite and > 0");
  }
  if (cfg.burn_in >= 0.0 && !(cfg.burn_in < cfg.t_end)) {
    throw std::invalid_argument("sim config: need burn_in < t_end");
  }
  if (cfg.replicates < 1) throw std::invalid_argument("sim config: replicates must be >= 1");
  if (cfg.hist_bins < 1) throw std::invalid_argument("sim config: hist_bins must be >= 1");
  if (!(cfg.max_alive_factor > 0.0)) {
    throw std::invalid_argument("sim config: max_alive_factor must be > 0");
  }
}

double resolved_burn_in(const SocietyParams& p, const SimConfig& cfg) {
  // relaxation time is ~1/lambda_d, so default to 20 of them
  return cfg.burn_in >= 0.0 ? cfg.burn_in : 20.0 / p.lambda_d;
}

double resolved_sample_dt(const SocietyParams& p, const SimConfig& cfg) {
  return cfg.sample_dt > 0.0 ? cfg.sample_dt : 0.1 / p.lambda_d;
}

double resolved_x_hist_max(const SocietyParams& p, const SimConfig& cfg) {
  return cfg.x_hist_max > 0.0 ? cfg.x_hist_max : 25.0 / p.lambda_d;
}

namespace {

constexpr std::uint32_t npos32 = 0xffffffffu;
constexpr double inf = std::numeric_limits<double>::infinity();
constexpr std::size_t lifetime_sample_cap = 200000;

// Deterministic draws over the standardized mt19937_64 stream; transforms are
// spelled out so the byte stream does not depend on the standard library's
// distribution implementations.
class SimRng {
 public:
  explicit SimRng(std::uint64_t seed) : eng_(seed) {}
  double u01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double exponential(double rate) { return -std::log1p(-u01()) / rate; }
  bool coin() { return (eng_() & 1ull) != 0; }
  std::uint64_t below(std::uint64_t n) {
    std::uint64_t x;
    std::uint64_t rem;
    do {
      x = eng_();
      rem = x % n;
    } while (x - rem > std::uint64_t(0) - n);  // reject the incomplete top block
    return rem;
  }

 private:
  std::mt19937_64 eng_;
};

struct AgentSlot {
  double key = 0.0;  // cohort drift-offset at birth; welfare(t) = offset_c(t) - key
  double birth = 0.0;
  std::uint32_t gen = 0;
  std::uint8_t cohort = 0;  // 0 = bad quality, 1 = good quality
};

struct HeapEntry {
  double key;
  std::uint32_t id;
  std::uint32_t gen;
};

// Max-heap on key with id tiebreak, entries lazily invalidated by generation.
struct HeapLess {
  bool operator()(const HeapEntry& a, const HeapEntry& b) const {
    if (a.key != b.key) return a.key < b.key;
    return a.id < b.id;
  }
};

struct ReplicateOut {
  ReplicateSummary summary;
  std::vector<std::pair<double, double>> q_series;
  std::vector<std::pair<double, double>> pop_series;
  std::vector<double> lifetimes;
};

// One replicate: exact event-driven dynamics. All agents of a cohort share the
// same piecewise-constant drift, so per-cohort cumulative offsets make every
// welfare O(1) to materialize, and the next boundary hit within a cohort is
// always the agent with the maximal birth key.
class Engine {
 public:
  Engine(const SocietyParams& p, const SimConfig& cfg, std::uint64_t seed, bool want_series)
      : p_(p),
        cfg_(cfg),
        rng_(seed),
        want_series_(want_series),
        burn_in_(resolved_burn_in(p, cfg)),
        sample_dt_(resolved_sample_dt(p, cfg)),
        hist_lo_(-p.r),
        hist_hi_(resolved_x_hist_max(p, cfg)),
        inv_binw_(cfg.hist_bins / (resolved_x_hist_max(p, cfg) + p.r)),
        birth_rate_(p.lambda_b * static_cast<double>(cfg.n_scale)),
        alive_cap_(static_cast<std::int64_t>(
            std::ceil(cfg.max_alive_factor * p.lambda_b * static_cast<double>(cfg.n_scale) /
                      p.lambda_d))) {
    hist_counts_.assign(cfg.hist_bins, 0);
  }

  ReplicateOut run() {
    while (true) {
      const double qhat = empirical_mean_quality();
      rate_[0] = -(1.0 - p_.w) + p_.w * qhat;
      rate_[1] = (1.0 - p_.w) + p_.w * qhat;

      const double dt_birth = rng_.exponential(birth_rate_);
      const std::size_t n = alive_.size();
      const double dt_nat = n > 0 ? rng_.exponential(p_.lambda_d * static_cast<double>(n)) : inf;

      double dt_hit = inf;
      int hit_cohort = -1;
      for (int c = 0; c < 2; ++c) {
        if (count_[c] == 0 || rate_[c] >= 0.0) continue;
        const HeapEntry* top = peek_valid(c);
        if (top == nullptr) continue;
        const double x_min = off_[c] - top->key;
        double dth = (x_min + p_.r) / -rate_[c];
        if (dth < 0.0) dth = 0.0;  // fp noise around an exact crossing
        if (dth < dt_hit) {
          dt_hit = dth;
          hit_cohort = c;
        }
      }

      // simultaneous events resolve as birth < natural death < boundary hit
      double dt = dt_birth;
      int kind = 0;
      if (dt_nat < dt) {
        dt = dt_nat;
        kind = 1;
      }
      if (dt_hit < dt) {
        dt = dt_hit;
        kind = 2;
      }

      const double t_next = t_ + dt;
      if (t_next > cfg_.t_end) {
        advance(cfg_.t_end);
        break;
      }
      advance(t_next);
      if (t_ >= burn_in_) ++post_burn_events_;
      switch (kind) {
        case 0:
          apply_birth();
          break;
        case 1:
          apply_natural_death();
          break;
        default:
          apply_boundary_death(hit_cohort);
          break;
      }
    }
    return finalize();
  }

 private:
  double empirical_mean_quality() const {
    const double n = static_cast<double>(count_[0] + count_[1]);
    return n > 0.0 ? static_cast<double>(count_[1] - count_[0]) / n : 0.0;
  }

  const HeapEntry* peek_valid(int c) {
    auto& h = heap_[c];
    while (!h.empty()) {
      const HeapEntry& top = h.front();
      if (slots_[top.id].gen == top.gen) return &h.front();
      std::pop_heap(h.begin(), h.end(), HeapLess{});
      h.pop_back();
    }
    return nullptr;
  }

  void maybe_compact(int c) {
    auto& h = heap_[c];
    if (h.size() <= 4 * static_cast<std::size_t>(count_[c]) + 64) return;
    h.clear();
    for (const std::uint32_t id : alive_) {
      const AgentSlot& s = slots_[id];
      if (s.cohort == c) h.push_back({s.key, id, s.gen});
    }
    std::make_heap(h.begin(), h.end(), HeapLess{});
  }

  // Emits snapshots and accumulates exact segment integrals over [t_, t2], then
  // moves the cohort offsets to t2. Drifts are constant on the segment, so the
  // per-capita welfare sum is linear in time and its square sum quadratic; both
  // integrate in closed form from the cohort aggregates.
  void advance(double t2) {
    const double t0 = t_;
    const double rb = rate_[0];
    const double rg = rate_[1];

    while (true) {
      const double s = static_cast<double>(k_sample_) * sample_dt_;
      if (s > t2) break;
      snapshot(s, t0, rb, rg);
      ++k_sample_;
    }

    const double a = std::max(t0, burn_in_);
    if (t2 > a) {
      const double len = t2 - a;
      const double tau0 = a - t0;
      const double off_b = off_[0] + rb * tau0;
      const double off_g = off_[1] + rg * tau0;
      const double nb = static_cast<double>(count_[0]);
      const double ng = static_cast<double>(count_[1]);
      const double n = nb + ng;
      stat_time_ += len;
      if (n > 0.0) {
        int_q_ += (ng - nb) / n * len;
        int_n_ += n * len;
        const double sx = nb * off_b - sum_key_[0] + ng * off_g - sum_key_[1];
        const double sx_slope = nb * rb + ng * rg;
        const double p0 = nb * off_b * off_b - 2.0 * off_b * sum_key_[0] + sum_key2_[0] +
                          ng * off_g * off_g - 2.0 * off_g * sum_key_[1] + sum_key2_[1];
        const double p1 = 2.0 * (rb * (nb * off_b - sum_key_[0]) + rg * (ng * off_g - sum_key_[1]));
        const double p2 = 2.0 * (nb * rb * rb + ng * rg * rg);
        int_x_ += (sx * len + 0.5 * sx_slope * len * len) / n;
        int_x2_ += (p0 * len + 0.5 * p1 * len * len + p2 * len * len * len / 6.0) / n;
      }
    }

    off_[0] += rb * (t2 - t0);
    off_[1] += rg * (t2 - t0);
    t_ = t2;
  }

  void snapshot(double s, double t0, double rb, double rg) {
    const double off_b = off_[0] + rb * (s - t0);
    const double off_g = off_[1] + rg * (s - t0);
    const double n = static_cast<double>(count_[0] + count_[1]);
    if (want_series_) {
      const double qhat = n > 0.0 ? static_cast<double>(count_[1] - count_[0]) / n : 0.0;
      out_.q_series.emplace_back(s, qhat);
      out_.pop_series.emplace_back(s, n / static_cast<double>(cfg_.n_scale));
    }
    if (s < burn_in_) return;
    ++hist_samples_;
    for (const std::uint32_t id : alive_) {
      const AgentSlot& sl = slots_[id];
      const double x = (sl.cohort ? off_g : off_b) - sl.key;
      if (x < min_welfare_) min_welfare_ = x;
      const double pos = (x - hist_lo_) * inv_binw_;
      if (pos >= 0.0) {
        if (pos < static_cast<double>(cfg_.hist_bins)) ++hist_counts_[static_cast<int>(pos)];
      } else {
        ++hist_counts_[0];  // exact -r crossings can land an ulp below the edge
      }
    }
  }

  std::uint32_t alloc_slot() {
    if (!free_.empty()) {
      const std::uint32_t id = free_.back();
      free_.pop_back();
      return id;
    }
    slots_.push_back({});
    pos_in_alive_.push_back(npos32);
    return static_cast<std::uint32_t>(slots_.size() - 1);
  }

  void apply_birth() {
    if (static_cast<std::int64_t>(alive_.size()) >= alive_cap_) {
      std::ostringstream msg;
      msg << "simulation exceeded the alive-agent cap of " << alive_cap_
          << " (max_alive_factor * lambda_b * n_scale / lambda_d)";
      throw resource_error(msg.str());
    }
    const std::uint8_t c = rng_.coin() ? 1 : 0;
    const std::uint32_t id = alloc_slot();
    AgentSlot& s = slots_[id];
    s.key = off_[c];
    s.birth = t_;
    s.cohort = c;
    pos_in_alive_[id] = static_cast<std::uint32_t>(alive_.size());
    alive_.push_back(id);
    ++count_[c];
    sum_key_[c] += s.key;
    sum_key2_[c] += s.key * s.key;
    heap_[c].push_back({s.key, id, s.gen});
    std::push_heap(heap_[c].begin(), heap_[c].end(), HeapLess{});
    ++births_;
  }

  void apply_natural_death() {
    const std::uint32_t id = alive_[rng_.below(alive_.size())];
    remove_agent(id);
    ++deaths_natural_;
    if (t_ >= burn_in_) ++d_nat_post_;
  }

  void apply_boundary_death(int c) {
    const HeapEntry* top = peek_valid(c);  // scheduled from a valid top; still valid here
    const std::uint32_t id = top->id;
    remove_agent(id);
    ++deaths_boundary_;
    if (t_ >= burn_in_) ++d_bound_post_;
  }

  void remove_agent(std::uint32_t id) {
    AgentSlot& s = slots_[id];
    const int c = s.cohort;
    const double lifetime = t_ - s.birth;
    if (t_ >= burn_in_) {
      lt_sum_[c] += lifetime;
      lt_cnt_[c] += 1;
      if (want_series_ && out_.lifetimes.size() < lifetime_sample_cap) {
        out_.lifetimes.push_back(lifetime);
      }
    }
    sum_key_[c] -= s.key;
    sum_key2_[c] -= s.key * s.key;
    --count_[c];
    const std::uint32_t pos = pos_in_alive_[id];
    const std::uint32_t last = alive_.back();
    alive_[pos] = last;
    pos_in_alive_[last] = pos;
    alive_.pop_back();
    pos_in_alive_[id] = npos32;
    ++s.gen;  // invalidates every heap entry of this incarnation
    free_.push_back(id);
    maybe_compact(c);
  }

  ReplicateOut finalize() {
    ReplicateSummary& s = out_.summary;
    s.q_bar = int_q_ / stat_time_;
    s.pop = int_n_ / stat_time_ / static_cast<double>(cfg_.n_scale);
    s.x_bar = int_x_ / stat_time_;
    s.var_x = int_x2_ / stat_time_ - s.x_bar * s.x_bar;
    s.t_good = lt_cnt_[1] > 0 ? lt_sum_[1] / static_cast<double>(lt_cnt_[1]) : 0.0;
    s.t_bad = lt_cnt_[0] > 0 ? lt_sum_[0] / static_cast<double>(lt_cnt_[0]) : 0.0;
    const double mass_good = 0.5 * (1.0 + s.q_bar);
    s.t_bar = mass_good * s.t_good + (1.0 - mass_good) * s.t_bad;
    const std::int64_t lt_total = lt_cnt_[0] + lt_cnt_[1];
    s.t_bar_newborn =
        lt_total > 0 ? (lt_sum_[0] + lt_sum_[1]) / static_cast<double>(lt_total) : 0.0;
    s.death_ratio =
        d_nat_post_ > 0 ? static_cast<double>(d_bound_post_) / static_cast<double>(d_nat_post_)
                        : 0.0;
    s.min_welfare = min_welfare_;
    s.births = births_;
    s.deaths_natural = deaths_natural_;
    s.deaths_boundary = deaths_boundary_;
    s.alive_end = static_cast<std::int64_t>(alive_.size());
    s.post_burn_events = post_burn_events_;
    s.hist_mass.resize(cfg_.hist_bins);
    const double denom = static_cast<double>(hist_samples_) * static_cast<double>(cfg_.n_scale);
    for (int b = 0; b < cfg_.hist_bins; ++b) {
      s.hist_mass[b] = denom > 0.0 ? static_cast<double>(hist_counts_[b]) / denom : 0.0;
    }
    return std::move(out_);
  }

  SocietyParams p_;
  SimConfig cfg_;
  SimRng rng_;
  bool want_series_;
  double burn_in_;
  double sample_dt_;
  double hist_lo_;
  double hist_hi_;
  double inv_binw_;
  double birth_rate_;
  std::int64_t alive_cap_;

  double t_ = 0.0;
  double off_[2] = {0.0, 0.0};
  double rate_[2] = {0.0, 0.0};
  std::int64_t count_[2] = {0, 0};
  double sum_key_[2] = {0.0, 0.0};
  double sum_key2_[2] = {0.0, 0.0};
  std::vector<AgentSlot> slots_;
  std::vector<std::uint32_t> pos_in_alive_;
  std::vector<std::uint32_t> alive_;
  std::vector<std::uint32_t> free_;
  std::vector<HeapEntry> heap_[2];

  std::int64_t births_ = 0;
  std::int64_t deaths_natural_ = 0;
  std::int64_t deaths_boundary_ = 0;
  std::int64_t d_nat_post_ = 0;
  std::int64_t d_bound_post_ = 0;
  std::int64_t post_burn_events_ = 0;
  std::int64_t k_sample_ = 0;
  std::int64_t hist_samples_ = 0;
  double stat_time_ = 0.0;
  double int_q_ = 0.0;
  double int_n_ = 0.0;
  double int_x_ = 0.0;
  double int_x2_ = 0.0;
  double lt_sum_[2] = {0.0, 0.0};
  std::int64_t lt_cnt_[2] = {0, 0};
  double min_welfare_ = 0.0;
  std::vector<std::int64_t> hist_counts_;

  ReplicateOut out_;
};

ReplicateOut run_replicate(const SocietyParams& p, const SimConfig& cfg, int index) {
  Engine eng(p, cfg, cfg.seed + static_cast<std::uint64_t>(index), index == 0);
  return eng.run();
}

}  // namespace

SimResult run_simulation(const SocietyParams& p, const SimConfig& cfg) {
  validate_config(cfg);
  if (!(resolved_burn_in(p, cfg) < cfg.t_end)) {
    throw std::invalid_argument("sim config: resolved burn_in must stay below t_end");
  }
  std::vector<ReplicateOut> outs(cfg.replicates);
  const int jobs = std::max(1, cfg.jobs);
  if (jobs == 1 || cfg.replicates == 1) {
    for (int i = 0; i < cfg.replicates; ++i) outs[i] = run_replicate(p, cfg, i);
  } else {
    // one isolated deterministic stream per replicate; merge order is by index
    std::vector<std::future<ReplicateOut>> futs;
    futs.reserve(cfg.replicates);
    for (int i = 0; i < cfg.replicates; ++i) {
      futs.push_back(std::async(std::launch::async, run_replicate, p, cfg, i));
    }
    for (int i = 0; i < cfg.replicates; ++i) outs[i] = futs[i].get();
  }

  SimResult res;
  res.params = p;
  res.config = cfg;
  res.q_bar_series = std::move(outs[0].q_series);
  res.pop_series = std::move(outs[0].pop_series);
  res.lifetimes = std::move(outs[0].lifetimes);
  res.hist_lo = -p.r;
  res.hist_hi = resolved_x_hist_max(p, cfg);
  res.hist_mass.assign(cfg.hist_bins, 0.0);
  for (const auto& o : outs) {
    const ReplicateSummary& s = o.summary;
    res.births += s.births;
    res.deaths_natural += s.deaths_natural;
    res.deaths_boundary += s.deaths_boundary;
    res.alive_end += s.alive_end;
    for (int b = 0; b < cfg.hist_bins; ++b) res.hist_mass[b] += s.hist_mass[b];
    res.replicates.push_back(s);
  }
  for (double& m : res.hist_mass) m /= static_cast<double>(cfg.replicates);
  return res;
}

namespace {

Estimate reduce(const std::vector<double>& xs) {
  Estimate e;
  const double n = static_cast<double>(xs.size());
  for (const double x : xs) e.mean += x;
  e.mean /= n;
  if (xs.size() > 1) {
    double ss = 0.0;
    for (const double x : xs) ss += (x - e.mean) * (x - e.mean);
    e.se = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  return e;
}

}  // namespace

EmpiricalMetrics estimate_steady(const SimResult& result) {
  if (result.replicates.empty()) {
    throw insufficient_data_error("estimate_steady: no replicates");
  }
  std::int64_t events = 0;
  for (const auto& r : result.replicates) events += r.post_burn_events;
  if (events < 1000) {
    std::ostringstream msg;
    msg << "estimate_steady: only " << events
        << " post-burn-in events recorded; need at least 1000";
    throw insufficient_data_error(msg.str());
  }
  const auto pull = [&](auto member) {
    std::vector<double> xs;
    xs.reserve(result.replicates.size());
    for (const auto& r : result.replicates) xs.push_back(r.*member);
    return reduce(xs);
  };
  EmpiricalMetrics e;
  e.q_bar = pull(&ReplicateSummary::q_bar);
  e.pop = pull(&ReplicateSummary::pop);
  e.x_bar = pull(&ReplicateSummary::x_bar);
  e.var_x = pull(&ReplicateSummary::var_x);
  e.t_bar = pull(&ReplicateSummary::t_bar);
  e.t_bar_newborn = pull(&ReplicateSummary::t_bar_newborn);
  e.t_good = pull(&ReplicateSummary::t_good);
  e.t_bad = pull(&ReplicateSummary::t_bad);
  e.death_ratio = pull(&ReplicateSummary::death_ratio);
  e.post_burn_events = events;
  return e;
}

namespace {

ComparisonRow make_row(const std::string& name, double analytical, const Estimate& emp) {
  ComparisonRow row;
  row.metric = name;
  row.analytical = analytical;
  row.empirical = emp.mean;
  row.se = emp.se;
  if (emp.se > 0.0) {
    row.z = (emp.mean - analytical) / emp.se;
  } else {
    row.z = emp.mean == analytical ? 0.0 : std::copysign(inf, emp.mean - analytical);
  }
  row.pass = std::abs(row.z) <= 3.0;
  return row;
}

}  // namespace

ComparisonReport compare(const SteadyState& ss, const SocietyMetrics& analytical,
                         const EmpiricalMetrics& empirical) {
  ComparisonReport rep;
  rep.rows.push_back(make_row("q_bar", ss.q_bar, empirical.q_bar));
  rep.rows.push_back(make_row("pop", analytical.pop, empirical.pop));
  rep.rows.push_back(make_row("x_bar", analytical.x_bar, empirical.x_bar));
  rep.rows.push_back(make_row("var_x", analytical.var_x, empirical.var_x));
  rep.rows.push_back(make_row("t_bar", analytical.t_bar, empirical.t_bar));
  rep.rows.push_back(make_row("t_good", analytical.t_good, empirical.t_good));
  rep.rows.push_back(make_row("t_bad", analytical.t_bad, empirical.t_bad));
  rep.rows.push_back(make_row("death_ratio", ss.q_bar, empirical.death_ratio));
  rep.all_pass = true;
  for (const auto& row : rep.rows) rep.all_pass = rep.all_pass && row.pass;
  return rep;
}

std::vector<double> analytic_bin_masses(const SocietyParams& p, const SteadyState& ss,
                                        double lo, double hi, int bins) {
  std::vector<double> masses(bins);
  const double width = (hi - lo) / bins;
  for (int b = 0; b < bins; ++b) {
    masses[b] = density_mass(p, ss, lo + b * width, lo + (b + 1) * width);
  }
  return masses;
}

}  // namespace coevo
