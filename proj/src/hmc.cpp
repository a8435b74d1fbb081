#include "asdyn/hmc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <string>
#include <thread>

namespace asdyn {

namespace {

// Streams used besides the per-iteration transition stream.
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kStepSizeStream = 2;

}  // namespace

void leapfrog(const LogDensity& target, const Eigen::VectorXd& inv_metric, double step_size, PhasePoint& z) {
  z.p += 0.5 * step_size * z.grad;
  z.q += step_size * inv_metric.cwiseProduct(z.p);
  z.log_density = target.log_density(z.q, &z.grad);
  if (!std::isfinite(z.log_density) || !z.grad.allFinite()) {
    z.log_density = kNegInf;
    z.grad.setZero(z.q.size());
    return;
  }
  z.p += 0.5 * step_size * z.grad;
}

namespace {

double log_add_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

struct Tree {
  PhasePoint minus;  // earliest state in fictitious time
  PhasePoint plus;   // latest state
  PhasePoint proposal;
  Eigen::VectorXd rho;
  double log_sum_weight = kNegInf;
  bool valid = true;
};

struct TransitionStats {
  double sum_metro = 0.0;
  int n_leapfrog = 0;
  bool divergent = false;
};

// Step-size dual averaging.
class DualAveraging {
 public:
  void restart(double step_size) {
    mu_ = std::log(10.0 * step_size);
    s_bar_ = 0.0;
    x_bar_ = 0.0;
    counter_ = 0;
  }
  double update(double accept_stat, double target) {
    ++counter_;
    accept_stat = std::min(1.0, accept_stat);
    const double t = static_cast<double>(counter_);
    const double eta = 1.0 / (t + kT0);
    s_bar_ = (1.0 - eta) * s_bar_ + eta * (target - accept_stat);
    const double x = mu_ - s_bar_ * std::sqrt(t) / kGamma;
    const double x_eta = std::pow(t, -kKappa);
    x_bar_ = (1.0 - x_eta) * x_bar_ + x_eta * x;
    return std::exp(x);
  }
  [[nodiscard]] double final_step_size() const { return std::exp(x_bar_); }

 private:
  static constexpr double kGamma = 0.05;
  static constexpr double kT0 = 10.0;
  static constexpr double kKappa = 0.75;
  double mu_ = 0.0;
  double s_bar_ = 0.0;
  double x_bar_ = 0.0;
  long counter_ = 0;
};

// Expanding windows for diagonal metric estimation during warmup.
class MetricWindows {
 public:
  explicit MetricWindows(int n_warmup) : warmup_(n_warmup) {
    if (n_warmup < 20) {
      enabled_ = false;
      return;
    }
    init_ = 75;
    term_ = 50;
    base_ = 25;
    if (init_ + term_ + base_ > n_warmup) {
      init_ = static_cast<int>(0.15 * n_warmup);
      term_ = static_cast<int>(0.1 * n_warmup);
      base_ = n_warmup - init_ - term_;
    }
    window_size_ = base_;
    next_end_ = init_ + base_ - 1;
  }

  [[nodiscard]] bool in_window(int iteration) const {
    return enabled_ && iteration >= init_ && iteration < warmup_ - term_;
  }
  [[nodiscard]] bool window_ends(int iteration) const { return enabled_ && iteration == next_end_; }

  void advance(int iteration) {
    if (next_end_ == warmup_ - term_ - 1) return;
    window_size_ *= 2;
    next_end_ = iteration + window_size_;
    if (next_end_ != warmup_ - term_ - 1) {
      const int boundary = next_end_ + 2 * window_size_;
      if (boundary >= warmup_ - term_) next_end_ = warmup_ - term_ - 1;
    }
  }

 private:
  int warmup_;
  bool enabled_ = true;
  int init_ = 0;
  int term_ = 0;
  int base_ = 0;
  int window_size_ = 0;
  int next_end_ = -1;
};

class Welford {
 public:
  explicit Welford(Eigen::Index dim) : mean_(Eigen::VectorXd::Zero(dim)), m2_(Eigen::VectorXd::Zero(dim)) {}
  void add(const Eigen::VectorXd& x) {
    ++n_;
    const Eigen::VectorXd d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d.cwiseProduct(x - mean_);
  }
  /// Sample variance shrunk toward 1e-3, as in standard windowed adaptation.
  [[nodiscard]] Eigen::VectorXd regularized_variance() const {
    const double n = static_cast<double>(n_);
    const Eigen::VectorXd var = m2_ / std::max(1.0, n - 1.0);
    return (n / (n + 5.0)) * var.array() + 1e-3 * (5.0 / (n + 5.0));
  }
  void reset() {
    n_ = 0;
    mean_.setZero();
    m2_.setZero();
  }
  [[nodiscard]] long count() const { return n_; }

 private:
  long n_ = 0;
  Eigen::VectorXd mean_;
  Eigen::VectorXd m2_;
};

class ChainRunner {
 public:
  ChainRunner(const LogDensity& target, const SamplerConfig& config, int chain)
      : target_(target), config_(config), chain_(static_cast<std::uint64_t>(chain)) {}

  void run(const std::optional<Eigen::VectorXd>& init, PosteriorDraws& out) {
    const auto dim = static_cast<Eigen::Index>(target_.dim());
    inv_metric_ = Eigen::VectorXd::Ones(dim);
    PhasePoint z = initialize(init);
    step_size_ = 1.0;
    init_step_size(z, 0);

    DualAveraging dual;
    dual.restart(step_size_);
    MetricWindows windows(config_.n_warmup);
    Welford welford(dim);
    int warmup_divergent = 0;
    const int chain = static_cast<int>(chain_);

    for (int it = 0; it < config_.n_warmup; ++it) {
      const TransitionStats s = transition(z, static_cast<std::uint64_t>(it));
      if (s.divergent) ++warmup_divergent;
      step_size_ = dual.update(s.n_leapfrog > 0 ? s.sum_metro / s.n_leapfrog : 0.0, config_.target_accept);
      if (windows.in_window(it)) welford.add(z.q);
      if (windows.window_ends(it)) {
        inv_metric_ = welford.regularized_variance();
        welford.reset();
        init_step_size(z, static_cast<std::uint64_t>(it + 1));
        dual.restart(step_size_);
        windows.advance(it);
      }
    }
    if (config_.n_warmup > 0) {
      if (warmup_divergent == config_.n_warmup) {
        throw SamplerError("chain " + std::to_string(chain + 1) + ": every warmup transition diverged");
      }
      step_size_ = dual.final_step_size();
    }

    int divergent = 0;
    double accept_sum = 0.0;
    for (int d = 0; d < config_.n_draws; ++d) {
      const TransitionStats s = transition(z, static_cast<std::uint64_t>(config_.n_warmup + d));
      if (s.divergent) ++divergent;
      accept_sum += s.n_leapfrog > 0 ? s.sum_metro / s.n_leapfrog : 0.0;
      out.values.row(out.row(chain, d)) = target_.output(z.q).transpose();
    }
    out.divergences[static_cast<std::size_t>(chain)] = divergent;
    out.step_size[static_cast<std::size_t>(chain)] = step_size_;
    out.mean_accept[static_cast<std::size_t>(chain)] = accept_sum / config_.n_draws;
    out.n_leapfrog[static_cast<std::size_t>(chain)] = n_leapfrog_;
  }

 private:
  PhasePoint initialize(const std::optional<Eigen::VectorXd>& init) {
    const auto dim = static_cast<Eigen::Index>(target_.dim());
    if (init && init->size() != dim) {
      throw std::invalid_argument("sample: initial point has " + std::to_string(init->size()) +
                                  " entries, expected " + std::to_string(dim));
    }
    constexpr int kAttempts = 100;
    PhasePoint z;
    for (int attempt = 0; attempt < kAttempts; ++attempt) {
      CounterRng rng(config_.seed, chain_, static_cast<std::uint64_t>(attempt), kInitStream);
      const double width = init ? config_.init_jitter : config_.init_radius;
      z.q = init ? *init : Eigen::VectorXd::Zero(dim);
      for (Eigen::Index i = 0; i < dim; ++i) z.q[i] += width * (2.0 * rng.uniform() - 1.0);
      z.log_density = target_.log_density(z.q, &z.grad);
      if (std::isfinite(z.log_density) && z.grad.allFinite()) {
        z.p = Eigen::VectorXd::Zero(dim);
        return z;
      }
    }
    throw SamplerError("chain " + std::to_string(chain_ + 1) + ": no finite log density after " +
                       std::to_string(kAttempts) + " initialization attempts");
  }

  [[nodiscard]] double kinetic(const Eigen::VectorXd& p) const {
    return 0.5 * p.cwiseProduct(inv_metric_).dot(p);
  }
  [[nodiscard]] double hamiltonian(const PhasePoint& z) const {
    const double h = -z.log_density + kinetic(z.p);
    return std::isnan(h) ? std::numeric_limits<double>::infinity() : h;
  }
  void draw_momentum(CounterRng& rng, PhasePoint& z) const {
    z.p.resize(z.q.size());
    for (Eigen::Index i = 0; i < z.q.size(); ++i) z.p[i] = rng.normal() / std::sqrt(inv_metric_[i]);
  }

  void init_step_size(const PhasePoint& start, std::uint64_t key) {
    CounterRng rng(config_.seed, chain_, key, kStepSizeStream);
    const double log_target = std::log(0.8);
    auto delta_h = [&]() {
      PhasePoint z = start;
      draw_momentum(rng, z);
      const double h0 = hamiltonian(z);
      leapfrog(target_, inv_metric_, step_size_, z);
      ++n_leapfrog_;
      return h0 - hamiltonian(z);
    };
    const int direction = delta_h() > log_target ? 1 : -1;
    for (int k = 0; k < 2000; ++k) {
      const double dh = delta_h();
      if (direction == 1 && !(dh > log_target)) break;
      if (direction == -1 && !(dh < log_target)) break;
      step_size_ = direction == 1 ? 2.0 * step_size_ : 0.5 * step_size_;
      if (step_size_ > 1e7) throw SamplerError("step size diverged: the target may be improper");
      if (step_size_ == 0.0) throw SamplerError("step size collapsed to zero: no acceptable step found");
    }
  }

  [[nodiscard]] bool no_u_turn(const PhasePoint& a, const PhasePoint& b, const Eigen::VectorXd& rho) const {
    return inv_metric_.cwiseProduct(a.p).dot(rho) > 0.0 && inv_metric_.cwiseProduct(b.p).dot(rho) > 0.0;
  }

  // Joins two adjacent trees in time order and applies the generalized U-turn checks.
  Tree join(Tree&& lo, Tree&& hi, PhasePoint&& proposal, double log_sum_weight) const {
    Tree t;
    t.rho = lo.rho + hi.rho;
    bool ok = no_u_turn(lo.minus, hi.plus, t.rho);
    ok = ok && no_u_turn(lo.minus, hi.minus, lo.rho + hi.minus.p);
    ok = ok && no_u_turn(lo.plus, hi.plus, lo.plus.p + hi.rho);
    t.minus = std::move(lo.minus);
    t.plus = std::move(hi.plus);
    t.proposal = std::move(proposal);
    t.log_sum_weight = log_sum_weight;
    t.valid = ok;
    return t;
  }

  Tree build(int depth, const PhasePoint& from, int direction, double h0, CounterRng& rng, TransitionStats& stats) {
    if (depth == 0) {
      Tree t;
      PhasePoint z = from;
      leapfrog(target_, inv_metric_, direction * step_size_, z);
      ++stats.n_leapfrog;
      ++n_leapfrog_;
      const double delta = hamiltonian(z) - h0;
      if (!(delta <= config_.divergence_threshold)) {
        stats.divergent = true;
        t.valid = false;
        return t;
      }
      stats.sum_metro += delta > 0.0 ? std::exp(-delta) : 1.0;
      t.log_sum_weight = -delta;
      t.rho = z.p;
      t.minus = z;
      t.plus = z;
      t.proposal = std::move(z);
      return t;
    }
    Tree a = build(depth - 1, from, direction, h0, rng, stats);
    if (!a.valid) return a;
    Tree b = build(depth - 1, direction > 0 ? a.plus : a.minus, direction, h0, rng, stats);
    if (!b.valid) return b;
    const double lsw = log_add_exp(a.log_sum_weight, b.log_sum_weight);
    PhasePoint proposal =
        rng.uniform() < std::exp(b.log_sum_weight - lsw) ? std::move(b.proposal) : std::move(a.proposal);
    return direction > 0 ? join(std::move(a), std::move(b), std::move(proposal), lsw)
                         : join(std::move(b), std::move(a), std::move(proposal), lsw);
  }

  TransitionStats transition(PhasePoint& z, std::uint64_t iteration) {
    CounterRng rng(config_.seed, chain_, iteration);
    draw_momentum(rng, z);
    const double h0 = hamiltonian(z);
    TransitionStats stats;
    if (config_.leapfrog_steps > 0) {
      PhasePoint y = z;
      for (int s = 0; s < config_.leapfrog_steps; ++s) {
        leapfrog(target_, inv_metric_, step_size_, y);
        ++n_leapfrog_;
        if (y.log_density == kNegInf) break;
      }
      stats.n_leapfrog = 1;
      const double delta = hamiltonian(y) - h0;
      if (!(delta <= config_.divergence_threshold)) {
        stats.divergent = true;
        return stats;
      }
      const double accept = delta > 0.0 ? std::exp(-delta) : 1.0;
      stats.sum_metro = accept;
      if (rng.uniform() < accept) z = std::move(y);
      return stats;
    }

    Tree whole;
    whole.minus = z;
    whole.plus = z;
    whole.proposal = z;
    whole.rho = z.p;
    whole.log_sum_weight = 0.0;
    for (int depth = 0; depth < config_.max_tree_depth; ++depth) {
      const int direction = rng.uniform() > 0.5 ? 1 : -1;
      Tree sub = build(depth, direction > 0 ? whole.plus : whole.minus, direction, h0, rng, stats);
      if (!sub.valid) break;
      // Biased progressive sampling favours the newer subtree.
      const bool take_new = sub.log_sum_weight > whole.log_sum_weight ||
                            rng.uniform() < std::exp(sub.log_sum_weight - whole.log_sum_weight);
      const double lsw = log_add_exp(whole.log_sum_weight, sub.log_sum_weight);
      PhasePoint proposal = take_new ? std::move(sub.proposal) : std::move(whole.proposal);
      whole = direction > 0 ? join(std::move(whole), std::move(sub), std::move(proposal), lsw)
                            : join(std::move(sub), std::move(whole), std::move(proposal), lsw);
      if (!whole.valid) break;
    }
    if (!stats.divergent) {
      z.q = std::move(whole.proposal.q);
      z.grad = std::move(whole.proposal.grad);
      z.log_density = whole.proposal.log_density;
    }
    return stats;
  }

  const LogDensity& target_;
  const SamplerConfig& config_;
  std::uint64_t chain_;
  Eigen::VectorXd inv_metric_;
  double step_size_ = 1.0;
  long long n_leapfrog_ = 0;
};

}  // namespace

PosteriorDraws sample(const LogDensity& target, const SamplerConfig& config, const std::optional<Eigen::VectorXd>& init) {
  config.validate();
  if (target.dim() == 0) throw std::invalid_argument("sample: target has no parameters");
  PosteriorDraws out;
  out.layout = target.output_layout();
  out.n_chains = config.n_chains;
  out.n_draws = config.n_draws;
  out.values.resize(static_cast<Eigen::Index>(config.n_chains) * config.n_draws,
                    static_cast<Eigen::Index>(out.layout.dim()));
  const auto chains = static_cast<std::size_t>(config.n_chains);
  out.divergences.assign(chains, 0);
  out.step_size.assign(chains, 0.0);
  out.mean_accept.assign(chains, 0.0);
  out.n_leapfrog.assign(chains, 0);

  std::vector<std::exception_ptr> errors(chains);
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (int c = next++; c < config.n_chains; c = next++) {
      try {
        ChainRunner(target, config, c).run(init, out);
      } catch (...) {
        errors[static_cast<std::size_t>(c)] = std::current_exception();
      }
    }
  };
  const int n_threads = std::min(config.threads, config.n_chains);
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace asdyn
