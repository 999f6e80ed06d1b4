#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dhg/inference.hpp"
#include "dhg/kernels.hpp"

namespace dhg {

namespace {

// z[x] = CUSUM over `count` rows (oldest first, ring starting at `head`) of
// ln Pr^x - ln Pr^nominal, from zero.
void score_window(int nominal, const double* rows, int head, int count, int capacity, int nx, double* z, double* inc) {
  const auto& k = kernels::active();
  std::fill(z, z + nx, 0.0);
  for (int i = 0; i < count; ++i) {
    const double* row = rows + static_cast<std::size_t>((head + i) % capacity) * static_cast<std::size_t>(nx);
    double base = row[nominal];
    for (int x = 0; x < nx; ++x) inc[x] = row[x] - base;
    k.clamp_accumulate(z, inc, static_cast<std::size_t>(nx));
  }
}

// First hypothesis whose score reaches c under the tie rule, if any.
std::optional<int> pick_crossing(std::span<const double> z, double c, TieRule tie, Rng& rng) {
  std::vector<int> over;
  for (std::size_t x = 0; x < z.size(); ++x)
    if (z[x] >= c) over.push_back(static_cast<int>(x));
  if (over.empty()) return std::nullopt;
  if (tie == TieRule::kLowestIndex || over.size() == 1) return over.front();
  return over[static_cast<std::size_t>(rng() % over.size())];
}

}  // namespace

std::vector<Observation> observations_of(const History& h) {
  std::vector<Observation> out;
  out.reserve(h.actions.size());
  for (std::size_t i = 0; i < h.actions.size(); ++i)
    out.push_back({h.states[i], h.actions[i].p1, h.actions[i].p2, h.states[i + 1]});
  return out;
}

HypothesisSpace::HypothesisSpace(const ConcurrentGame& game, std::vector<Hypothesis> hypotheses, int initial,
                                 LikelihoodModel model, double floor)
    : game_(&game), hyps_(std::move(hypotheses)), initial_(initial), model_(model), floor_(floor) {
  if (hyps_.empty()) throw std::invalid_argument("hypothesis space is empty");
  if (initial_ < 0 || initial_ >= size()) throw std::invalid_argument("initial hypothesis out of range");
  if (!(floor_ > 0.0)) throw std::invalid_argument("probability floor must be positive");
  for (const auto& h : hyps_)
    if (h.profile.num_states() != game.num_states())
      throw std::invalid_argument("hypothesis '" + h.name + "' has no solved profile for this game");
}

double HypothesisSpace::probability(int x, const Observation& y) const {
  const Profile& pr = hyps_[static_cast<std::size_t>(x)].profile;
  double p = pr.p1(y.from)[static_cast<std::size_t>(y.a1)];
  if (model_ == LikelihoodModel::kJoint) p *= pr.p2(y.from)[static_cast<std::size_t>(y.a2)];
  if (p > 0.0) p *= game_->probability(y.from, y.a1, y.a2, y.to);
  return std::max(p, floor_);
}

void HypothesisSpace::log_likelihoods(const Observation& y, std::span<double> out) const {
  for (int x = 0; x < size(); ++x) out[static_cast<std::size_t>(x)] = std::log(probability(x, y));
}

Cusum::Cusum(int num_hypotheses, int nominal, const CusumConfig& config)
    : nx_(num_hypotheses),
      nominal_(nominal),
      config_(config),
      z_(static_cast<std::size_t>(num_hypotheses), 0.0),
      inc_(static_cast<std::size_t>(num_hypotheses), 0.0),
      rng_(config.seed) {
  if (nx_ <= 0) throw std::invalid_argument("cusum: need at least one hypothesis");
  if (nominal < 0 || nominal >= nx_) throw std::invalid_argument("cusum: nominal out of range");
  if (config.window < 0) throw std::invalid_argument("cusum: negative window");
  if (!(config.threshold > 0.0)) throw std::invalid_argument("cusum: threshold must be positive");
  buffer_.resize(static_cast<std::size_t>(config.window) * static_cast<std::size_t>(nx_));
}

void Cusum::reset(int nominal) {
  nominal_ = nominal;
  std::fill(z_.begin(), z_.end(), 0.0);
  head_ = filled_ = 0;
  steps_ = 0;
}

std::optional<Detection> Cusum::push(std::span<const double> loglik) {
  if (static_cast<int>(loglik.size()) != nx_) throw std::invalid_argument("cusum: row size mismatch");
  ++steps_;
  const int w = config_.window;
  if (w == 0) {
    double base = loglik[static_cast<std::size_t>(nominal_)];
    for (int x = 0; x < nx_; ++x) inc_[static_cast<std::size_t>(x)] = loglik[static_cast<std::size_t>(x)] - base;
    kernels::active().clamp_accumulate(z_.data(), inc_.data(), z_.size());
  } else {
    int slot = (head_ + filled_) % w;
    if (filled_ == w) {
      slot = head_;
      head_ = (head_ + 1) % w;
    } else {
      ++filled_;
    }
    std::copy(loglik.begin(), loglik.end(), buffer_.begin() + static_cast<std::ptrdiff_t>(slot) * nx_);
    score_window(nominal_, buffer_.data(), head_, filled_, w, nx_, z_.data(), inc_.data());
  }
  auto hit = pick_crossing(z_, config_.threshold, config_.tie, rng_);
  if (!hit) return std::nullopt;
  nominal_ = *hit;
  std::fill(z_.begin(), z_.end(), 0.0);
  return Detection{*hit, steps_};
}

int eta(const HypothesisSpace& space, int x, std::span<const Observation> history, const CusumConfig& config) {
  Cusum det(space.size(), x, config);
  std::vector<double> row(static_cast<std::size_t>(space.size()));
  for (const Observation& y : history) {
    space.log_likelihoods(y, row);
    det.push(row);
  }
  return det.nominal();
}

std::size_t WindowClasses::Hash::operator()(const std::vector<Observation>& w) const {
  std::uint64_t h = w.size();
  for (const Observation& y : w) {
    h = splitmix64(h ^ static_cast<std::uint32_t>(y.from));
    h = splitmix64(h ^ (static_cast<std::uint64_t>(static_cast<std::uint32_t>(y.a1)) << 32 | static_cast<std::uint32_t>(y.a2)));
    h = splitmix64(h ^ static_cast<std::uint32_t>(y.to));
  }
  return static_cast<std::size_t>(h);
}

WindowClasses::WindowClasses(int window) : window_(window) {
  if (window < 1) throw std::invalid_argument("window classes need a window of at least one observation");
  intern({});
}

int WindowClasses::intern(std::vector<Observation> w) {
  auto it = ids_.find(w);
  if (it != ids_.end()) return it->second;
  int id = size();
  ids_.emplace(w, id);
  windows_.push_back(std::move(w));
  return id;
}

int WindowClasses::extend(int id, const Observation& y) {
  const auto& cur = windows_[static_cast<std::size_t>(id)];
  std::vector<Observation> w;
  w.reserve(static_cast<std::size_t>(window_));
  std::size_t skip = cur.size() + 1 > static_cast<std::size_t>(window_) ? cur.size() + 1 - static_cast<std::size_t>(window_) : 0;
  w.insert(w.end(), cur.begin() + static_cast<std::ptrdiff_t>(skip), cur.end());
  w.push_back(y);
  return intern(std::move(w));
}

int WindowClasses::classify(std::span<const Observation> history) {
  std::size_t n = std::min(history.size(), static_cast<std::size_t>(window_));
  return intern(std::vector<Observation>(history.end() - static_cast<std::ptrdiff_t>(n), history.end()));
}

std::optional<int> WindowClasses::find(std::span<const Observation> window) const {
  auto it = ids_.find(std::vector<Observation>(window.begin(), window.end()));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

WindowInference::WindowInference(const HypothesisSpace& space, WindowClasses& classes, const CusumConfig& config)
    : space_(&space), classes_(&classes), config_(config) {
  if (config.window != classes.window()) throw std::invalid_argument("window inference: window mismatch");
  if (config.tie != TieRule::kLowestIndex) throw std::invalid_argument("window inference needs the deterministic tie rule");
}

int WindowInference::next(int x, int cls) {
  std::uint64_t key = static_cast<std::uint64_t>(cls) * static_cast<std::uint64_t>(space_->size()) + static_cast<std::uint64_t>(x);
  if (auto it = memo_.find(key); it != memo_.end()) return it->second;
  const int nx = space_->size();
  auto obs = classes_->observations(cls);
  std::vector<double> rows(obs.size() * static_cast<std::size_t>(nx));
  for (std::size_t i = 0; i < obs.size(); ++i)
    space_->log_likelihoods(obs[i], std::span<double>(rows).subspan(i * static_cast<std::size_t>(nx), static_cast<std::size_t>(nx)));
  std::vector<double> z(static_cast<std::size_t>(nx)), inc(static_cast<std::size_t>(nx));
  score_window(x, rows.data(), 0, static_cast<int>(obs.size()), std::max(1, static_cast<int>(obs.size())), nx, z.data(), inc.data());
  Rng unused(0);
  int out = pick_crossing(z, config_.threshold, TieRule::kLowestIndex, unused).value_or(x);
  memo_.emplace(key, out);
  return out;
}

}  // namespace dhg
