#include "hzmgp/nuts.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>
#include <thread>

namespace hzmgp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMaxDeltaH = 1000.0;
constexpr int kInitAttempts = 100;

double log_sum_exp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

// Dual averaging of log step size (Nesterov 2009, as tuned by Hoffman & Gelman).
class StepSizeAdaptation {
 public:
  explicit StepSizeAdaptation(double delta) : delta_(delta) {}

  void set_mu(double mu) { mu_ = mu; }
  void restart() {
    counter_ = 0;
    s_bar_ = 0;
    x_bar_ = 0;
  }

  void learn(double& epsilon, double adapt_stat) {
    ++counter_;
    adapt_stat = std::min(1.0, adapt_stat);
    const double eta = 1.0 / (counter_ + kT0);
    s_bar_ = (1.0 - eta) * s_bar_ + eta * (delta_ - adapt_stat);
    const double x = mu_ - s_bar_ * std::sqrt(counter_) / kGamma;
    const double x_eta = std::pow(counter_, -kKappa);
    x_bar_ = (1.0 - x_eta) * x_bar_ + x_eta * x;
    epsilon = std::exp(x);
  }

  void complete(double& epsilon) const { epsilon = std::exp(x_bar_); }

 private:
  static constexpr double kGamma = 0.05;
  static constexpr double kT0 = 10.0;
  static constexpr double kKappa = 0.75;

  double delta_;
  double mu_ = 0.0;
  double counter_ = 0.0;
  double s_bar_ = 0.0;
  double x_bar_ = 0.0;
};

// Windowed metric estimation: a fast initial buffer, doubling slow windows,
// and a terminal buffer, with the usual shrinkage toward 1e-3.
class MetricAdaptation {
 public:
  MetricAdaptation(int num_warmup, int dim, bool dense)
      : num_warmup_(num_warmup), dense_(dense), mean_(Eigen::VectorXd::Zero(dim)),
        m2_(Eigen::MatrixXd::Zero(dim, dim)) {
    init_buffer_ = 75;
    term_buffer_ = 50;
    base_window_ = 25;
    if (num_warmup < 20) {
      init_buffer_ = num_warmup;
      term_buffer_ = 0;
      base_window_ = 0;
    } else if (init_buffer_ + base_window_ + term_buffer_ > num_warmup) {
      init_buffer_ = static_cast<int>(0.15 * num_warmup);
      term_buffer_ = static_cast<int>(0.1 * num_warmup);
      base_window_ = num_warmup - (init_buffer_ + term_buffer_);
    }
    window_size_ = base_window_;
    next_window_ = init_buffer_ + window_size_ - 1;
  }

  /// Feeds one warmup draw; returns true when inv_metric was refreshed.
  bool learn(Eigen::MatrixXd& inv_metric, const Eigen::VectorXd& q) {
    if (base_window_ == 0) return false;
    if (in_window()) add(q);
    if (window_counter_ == next_window_ && window_counter_ != num_warmup_) {
      compute_next_window();
      const double n = count_;
      Eigen::MatrixXd cov = m2_ / (n - 1.0);
      if (!dense_) cov = Eigen::MatrixXd(cov.diagonal().asDiagonal());
      const Eigen::Index d = cov.rows();
      inv_metric = (n / (n + 5.0)) * cov + 1e-3 * (5.0 / (n + 5.0)) * Eigen::MatrixXd::Identity(d, d);
      count_ = 0;
      mean_.setZero();
      m2_.setZero();
      ++window_counter_;
      return true;
    }
    ++window_counter_;
    return false;
  }

 private:
  bool in_window() const {
    return window_counter_ >= init_buffer_ && window_counter_ < num_warmup_ - term_buffer_ &&
           window_counter_ != num_warmup_;
  }

  void add(const Eigen::VectorXd& q) {
    ++count_;
    const Eigen::VectorXd delta = q - mean_;
    mean_ += delta / count_;
    m2_ += delta * (q - mean_).transpose();
  }

  void compute_next_window() {
    const int last = num_warmup_ - term_buffer_ - 1;
    if (next_window_ == last) return;
    window_size_ *= 2;
    next_window_ = window_counter_ + window_size_;
    if (next_window_ != last && next_window_ + 2 * window_size_ >= num_warmup_ - term_buffer_)
      next_window_ = last;
  }

  int num_warmup_;
  bool dense_;
  int init_buffer_ = 0;
  int term_buffer_ = 0;
  int base_window_ = 0;
  int window_size_ = 0;
  int next_window_ = 0;
  int window_counter_ = 0;
  double count_ = 0.0;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd m2_;
};

struct PhasePoint {
  Eigen::VectorXd q;
  Eigen::VectorXd p;
  Eigen::VectorXd grad;
  double log_density = -kInf;
};

struct Transition {
  double accept_stat = 0.0;
  int depth = 0;
  int n_leapfrog = 0;
  bool divergent = false;
};

class NutsChain {
 public:
  NutsChain(const LogDensityGradient& f, int dim, const SamplerConfig& cfg, Rng rng)
      : f_(f), cfg_(cfg), rng_(std::move(rng)) {
    set_metric(Eigen::MatrixXd::Identity(dim, dim));
  }

  ChainResult run() {
    const int dim = static_cast<int>(inv_metric_.rows());
    PhasePoint z = initial_point(dim);

    StepSizeAdaptation step_adapt(cfg_.target_acceptance);
    MetricAdaptation metric_adapt(cfg_.burn_in, dim, cfg_.metric == SamplerConfig::Metric::Dense);
    Eigen::MatrixXd next_metric = inv_metric_;
    init_step_size(z);
    step_adapt.set_mu(std::log(10.0 * epsilon_));
    step_adapt.restart();

    ChainResult out;
    const int keep = cfg_.kept_per_chain();
    out.draws.resize(keep, dim);
    out.accept_stat.resize(keep);
    out.tree_depth.resize(keep);
    out.n_leapfrog.resize(keep);

    for (int it = 0; it < cfg_.iterations; ++it) {
      const Transition t = transition(z);
      if (it < cfg_.burn_in) {
        out.warmup_divergences += t.divergent;
        step_adapt.learn(epsilon_, t.accept_stat);
        if (metric_adapt.learn(next_metric, z.q)) {
          set_metric(next_metric);
          init_step_size(z);
          step_adapt.set_mu(std::log(10.0 * epsilon_));
          step_adapt.restart();
        }
        if (it == cfg_.burn_in - 1) step_adapt.complete(epsilon_);
        continue;
      }
      const int k = it - cfg_.burn_in;
      out.draws.row(k) = z.q.transpose();
      out.accept_stat(k) = t.accept_stat;
      out.tree_depth(k) = t.depth;
      out.n_leapfrog(k) = t.n_leapfrog;
      out.divergences += t.divergent;
    }
    out.step_size = epsilon_;
    out.inv_metric = inv_metric_;
    return out;
  }

 private:
  double uniform() { return unif_(rng_); }

  PhasePoint initial_point(int dim) {
    std::uniform_real_distribution<double> init(-2.0, 2.0);
    PhasePoint z;
    z.q.resize(dim);
    z.grad.resize(dim);
    for (int attempt = 0; attempt < kInitAttempts; ++attempt) {
      for (int j = 0; j < dim; ++j) z.q(j) = init(rng_);
      z.log_density = f_(z.q, z.grad);
      if (std::isfinite(z.log_density) && z.grad.allFinite()) {
        z.p = Eigen::VectorXd::Zero(dim);
        return z;
      }
    }
    throw SamplerError("could not find a finite initial point in 100 uniform(-2, 2) attempts");
  }

  // inv_metric = L L'; momentum p = L^{-T} u with u standard normal has covariance inv_metric^{-1}.
  void set_metric(const Eigen::MatrixXd& inv_metric) {
    inv_metric_ = inv_metric;
    chol_ = inv_metric_.llt();
    if (chol_.info() != Eigen::Success) throw SamplerError("adapted metric is not positive definite");
  }

  void sample_momentum(PhasePoint& z) {
    Eigen::VectorXd u(z.q.size());
    for (Eigen::Index j = 0; j < u.size(); ++j) u(j) = normal_(rng_);
    z.p = chol_.matrixU().solve(u);
  }

  double hamiltonian(const PhasePoint& z) const {
    const double h = -z.log_density + 0.5 * z.p.dot(inv_metric_ * z.p);
    return std::isnan(h) ? kInf : h;
  }

  Eigen::VectorXd dtau_dp(const PhasePoint& z) const { return inv_metric_ * z.p; }

  void leapfrog(PhasePoint& z, double eps) const {
    z.p += 0.5 * eps * z.grad;
    z.q += eps * (inv_metric_ * z.p);
    z.log_density = f_(z.q, z.grad);
    if (!std::isfinite(z.log_density) || !z.grad.allFinite()) {
      z.log_density = -kInf;
      return;
    }
    z.p += 0.5 * eps * z.grad;
  }

  void init_step_size(const PhasePoint& z_init) {
    const double log_target = std::log(0.8);
    auto trial = [&]() {
      PhasePoint z = z_init;
      sample_momentum(z);
      const double h0 = hamiltonian(z);
      leapfrog(z, epsilon_);
      return h0 - hamiltonian(z);
    };
    const int direction = trial() > log_target ? 1 : -1;
    for (;;) {
      const double delta_h = trial();
      if (direction == 1 && !(delta_h > log_target)) break;
      if (direction == -1 && !(delta_h < log_target)) break;
      epsilon_ = direction == 1 ? 2.0 * epsilon_ : 0.5 * epsilon_;
      if (epsilon_ > 1e7) throw SamplerError("step size search diverged; posterior may be improper");
      if (epsilon_ == 0.0) throw SamplerError("step size collapsed to zero; no acceptable step found");
    }
  }

  static bool no_u_turn(const Eigen::VectorXd& p_sharp_minus, const Eigen::VectorXd& p_sharp_plus,
                        const Eigen::VectorXd& rho) {
    return p_sharp_plus.dot(rho) > 0 && p_sharp_minus.dot(rho) > 0;
  }

  Transition transition(PhasePoint& z) {
    sample_momentum(z);
    const double h0 = hamiltonian(z);

    PhasePoint z_fwd = z;
    PhasePoint z_bck = z;
    PhasePoint z_sample = z;
    PhasePoint z_propose = z;

    Eigen::VectorXd p_fwd_fwd = z.p, p_sharp_fwd_fwd = dtau_dp(z);
    Eigen::VectorXd p_fwd_bck = z.p, p_sharp_fwd_bck = p_sharp_fwd_fwd;
    Eigen::VectorXd p_bck_fwd = z.p, p_sharp_bck_fwd = p_sharp_fwd_fwd;
    Eigen::VectorXd p_bck_bck = z.p, p_sharp_bck_bck = p_sharp_fwd_fwd;
    Eigen::VectorXd rho = z.p;

    double log_sum_weight = 0.0;
    Transition t;
    double sum_metro_prob = 0.0;
    divergent_ = false;

    while (t.depth < cfg_.max_tree_depth) {
      Eigen::VectorXd rho_fwd = Eigen::VectorXd::Zero(rho.size());
      Eigen::VectorXd rho_bck = Eigen::VectorXd::Zero(rho.size());
      bool valid_subtree = false;
      double log_sum_weight_subtree = -kInf;

      if (uniform() > 0.5) {
        rho_bck = rho;
        p_bck_fwd = p_fwd_bck;
        p_sharp_bck_fwd = p_sharp_fwd_bck;
        PhasePoint& cur = z_fwd;
        valid_subtree = build_tree(t.depth, cur, z_propose, p_sharp_fwd_bck, p_sharp_fwd_fwd, rho_fwd, p_fwd_bck,
                                   p_fwd_fwd, h0, 1.0, t.n_leapfrog, log_sum_weight_subtree, sum_metro_prob);
      } else {
        rho_fwd = rho;
        p_fwd_bck = p_bck_fwd;
        p_sharp_fwd_bck = p_sharp_bck_fwd;
        PhasePoint& cur = z_bck;
        valid_subtree = build_tree(t.depth, cur, z_propose, p_sharp_bck_fwd, p_sharp_bck_bck, rho_bck, p_bck_fwd,
                                   p_bck_bck, h0, -1.0, t.n_leapfrog, log_sum_weight_subtree, sum_metro_prob);
      }

      if (!valid_subtree) break;
      ++t.depth;

      if (log_sum_weight_subtree > log_sum_weight) {
        z_sample = z_propose;
      } else if (uniform() < std::exp(log_sum_weight_subtree - log_sum_weight)) {
        z_sample = z_propose;
      }
      log_sum_weight = log_sum_exp(log_sum_weight, log_sum_weight_subtree);

      rho = rho_bck + rho_fwd;
      bool persist = no_u_turn(p_sharp_bck_bck, p_sharp_fwd_fwd, rho);
      persist = persist && no_u_turn(p_sharp_bck_bck, p_sharp_fwd_bck, Eigen::VectorXd(rho_bck + p_fwd_bck));
      persist = persist && no_u_turn(p_sharp_bck_fwd, p_sharp_fwd_fwd, Eigen::VectorXd(rho_fwd + p_bck_fwd));
      if (!persist) break;
    }

    t.divergent = divergent_;
    t.accept_stat = t.n_leapfrog > 0 ? sum_metro_prob / t.n_leapfrog : 0.0;
    z = z_sample;
    return t;
  }

  // Extends the trajectory from z by 2^depth leapfrog steps in direction sign.
  bool build_tree(int depth, PhasePoint& z, PhasePoint& z_propose, Eigen::VectorXd& p_sharp_beg,
                  Eigen::VectorXd& p_sharp_end, Eigen::VectorXd& rho, Eigen::VectorXd& p_beg, Eigen::VectorXd& p_end,
                  double h0, double sign, int& n_leapfrog, double& log_sum_weight, double& sum_metro_prob) {
    if (depth == 0) {
      leapfrog(z, sign * epsilon_);
      ++n_leapfrog;
      const double h = hamiltonian(z);
      if (h - h0 > kMaxDeltaH) divergent_ = true;
      log_sum_weight = log_sum_exp(log_sum_weight, h0 - h);
      sum_metro_prob += h0 - h > 0 ? 1.0 : std::exp(h0 - h);
      z_propose = z;
      p_sharp_beg = dtau_dp(z);
      p_sharp_end = p_sharp_beg;
      rho += z.p;
      p_beg = z.p;
      p_end = p_beg;
      return !divergent_;
    }

    const Eigen::Index dim = rho.size();
    Eigen::VectorXd p_init_end(dim), p_sharp_init_end(dim);
    Eigen::VectorXd rho_init = Eigen::VectorXd::Zero(dim);
    double log_sum_weight_init = -kInf;
    if (!build_tree(depth - 1, z, z_propose, p_sharp_beg, p_sharp_init_end, rho_init, p_beg, p_init_end, h0, sign,
                    n_leapfrog, log_sum_weight_init, sum_metro_prob))
      return false;

    PhasePoint z_propose_final = z;
    Eigen::VectorXd p_final_beg(dim), p_sharp_final_beg(dim);
    Eigen::VectorXd rho_final = Eigen::VectorXd::Zero(dim);
    double log_sum_weight_final = -kInf;
    if (!build_tree(depth - 1, z, z_propose_final, p_sharp_final_beg, p_sharp_end, rho_final, p_final_beg, p_end, h0,
                    sign, n_leapfrog, log_sum_weight_final, sum_metro_prob))
      return false;

    const double log_sum_weight_subtree = log_sum_exp(log_sum_weight_init, log_sum_weight_final);
    log_sum_weight = log_sum_exp(log_sum_weight, log_sum_weight_subtree);

    if (log_sum_weight_final > log_sum_weight_subtree) {
      z_propose = z_propose_final;
    } else if (uniform() < std::exp(log_sum_weight_final - log_sum_weight_subtree)) {
      z_propose = z_propose_final;
    }

    const Eigen::VectorXd rho_subtree = rho_init + rho_final;
    rho += rho_subtree;

    bool persist = no_u_turn(p_sharp_beg, p_sharp_end, rho_subtree);
    persist = persist && no_u_turn(p_sharp_beg, p_sharp_final_beg, Eigen::VectorXd(rho_init + p_final_beg));
    persist = persist && no_u_turn(p_sharp_init_end, p_sharp_end, Eigen::VectorXd(rho_final + p_init_end));
    return persist;
  }

  const LogDensityGradient& f_;
  const SamplerConfig& cfg_;
  Rng rng_;
  std::uniform_real_distribution<double> unif_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
  Eigen::MatrixXd inv_metric_;
  Eigen::LLT<Eigen::MatrixXd> chol_;
  double epsilon_ = 1.0;
  bool divergent_ = false;
};

}  // namespace

void SamplerConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("SamplerConfig: " + msg); };
  if (chains < 1) fail("chains must be >= 1");
  if (iterations < 1) fail("iterations must be >= 1");
  if (burn_in < 0) fail("burn_in must be >= 0");
  if (burn_in >= iterations) fail("burn_in must be smaller than iterations");
  if (!(target_acceptance > 0.0 && target_acceptance < 1.0)) fail("target_acceptance must lie in (0, 1)");
  if (max_tree_depth < 1) fail("max_tree_depth must be >= 1");
}

Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32), 0x5eedu};
  return Rng(seq);
}

ChainResult run_nuts_chain(const LogDensityGradient& log_density, int dim, const SamplerConfig& config,
                           int chain_index) {
  config.validate();
  NutsChain chain(log_density, dim, config, make_stream(config.seed, static_cast<std::uint64_t>(chain_index)));
  return chain.run();
}

std::vector<ChainResult> run_nuts(const LogDensityGradient& log_density, int dim, const SamplerConfig& config) {
  config.validate();
  std::vector<ChainResult> results(config.chains);
  std::vector<std::exception_ptr> errors(config.chains);
  std::vector<std::thread> workers;
  workers.reserve(config.chains);
  for (int c = 0; c < config.chains; ++c) {
    workers.emplace_back([&, c] {
      try {
        results[c] = run_nuts_chain(log_density, dim, config, c);
      } catch (...) {
        errors[c] = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return results;
}

}  // namespace hzmgp
