#include "epsts/inner_opt.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "epsts/errors.hpp"

namespace epsts {
namespace {

// Rectangles are never split below a side of 3^-kMaxLevel.
constexpr int kMaxLevel = 30;

std::string format_point(const Eigen::VectorXd& x) {
  std::ostringstream os;
  os.precision(17);
  os << '[';
  for (Eigen::Index i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << ']';
  return os.str();
}

[[noreturn]] void throw_non_finite(const Eigen::VectorXd& x, double v) {
  std::ostringstream os;
  os << "objective returned non-finite value " << v << " at x = " << format_point(x);
  throw OptimizerError(os.str());
}

struct Rect {
  Eigen::VectorXd center;
  std::vector<int> level;  // side length along axis i is 3^-level[i]
  double f;
  double size;  // half diagonal
};

double rect_size(std::vector<int> level) {
  std::sort(level.begin(), level.end());
  double acc = 0.0;
  for (int l : level) acc += std::pow(3.0, -2.0 * l);
  return 0.5 * std::sqrt(acc);
}

// Evaluates `points` in order, concurrently when allowed. The first failure
// by index is rethrown after the loop so the outcome never depends on timing.
std::vector<double> evaluate_batch(const ScalarFn& f, const std::vector<Eigen::VectorXd>& points, bool parallel) {
  const auto n = static_cast<long>(points.size());
  std::vector<double> out(points.size());
  std::vector<std::exception_ptr> errors(points.size());
#pragma omp parallel for schedule(dynamic, 4) if (parallel && n >= 8)
  for (long i = 0; i < n; ++i) {
    try {
      out[i] = f(points[i]);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (long i = 0; i < n; ++i) {
    if (errors[i]) std::rethrow_exception(errors[i]);
    if (!std::isfinite(out[i])) throw_non_finite(points[i], out[i]);
  }
  return out;
}

// Potentially optimal rectangles: per-size minima lying on the lower-right
// convex hull of (size, f) and promising at least epsilon relative
// improvement over f_min. Ties go to the lower index; returned in order of
// increasing size.
std::vector<std::size_t> select_potentially_optimal(const std::vector<Rect>& rects, double f_min, double epsilon) {
  std::map<double, std::size_t> best_per_size;
  for (std::size_t i = 0; i < rects.size(); ++i) {
    const Rect& r = rects[i];
    if (*std::min_element(r.level.begin(), r.level.end()) >= kMaxLevel) continue;
    auto it = best_per_size.find(r.size);
    if (it == best_per_size.end() || r.f < rects[it->second].f) best_per_size[r.size] = i;
  }
  std::vector<std::size_t> cand;
  cand.reserve(best_per_size.size());
  for (const auto& [size, idx] : best_per_size) cand.push_back(idx);

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> selected;
  for (std::size_t a = 0; a < cand.size(); ++a) {
    const Rect& rj = rects[cand[a]];
    double k_low = -inf;
    double k_high = inf;
    for (std::size_t b = 0; b < cand.size(); ++b) {
      if (a == b) continue;
      const Rect& ri = rects[cand[b]];
      if (ri.size < rj.size) {
        k_low = std::max(k_low, (rj.f - ri.f) / (rj.size - ri.size));
      } else {
        k_high = std::min(k_high, (ri.f - rj.f) / (ri.size - rj.size));
      }
    }
    if (k_high <= 0.0 || k_low > k_high) continue;
    if (k_high != inf && rj.f - k_high * rj.size > f_min - epsilon * std::abs(f_min)) continue;
    selected.push_back(cand[a]);
  }
  return selected;
}

}  // namespace

DirectConfig DirectConfig::for_dim(Eigen::Index d) {
  if (d < 1) throw std::invalid_argument("dimension must be at least 1");
  DirectConfig c;
  c.max_evals = 1000 * d;
  c.max_iters = 10000 * d;
  c.max_rect_divisions = 10000 * d;
  return c;
}

void DirectConfig::validate() const {
  if (!(fun_tolerance > 0.0) || max_evals < 1 || max_iters < 1 || max_rect_divisions < 1 || !(epsilon >= 0.0)) {
    throw std::invalid_argument("DIRECT budgets and tolerances must be positive");
  }
}

void LocalConfig::validate() const {
  if (!(fun_tolerance > 0.0) || !(step_tolerance > 0.0) || !(optimality_tolerance > 0.0) || max_iters < 1 ||
      max_evals < 1) {
    throw std::invalid_argument("local refinement budgets and tolerances must be positive");
  }
}

MinimizeResult direct_minimize(const ScalarFn& objective, Eigen::Index d, const DirectConfig& cfg) {
  cfg.validate();
  if (d < 1) throw std::invalid_argument("dimension must be at least 1");

  std::vector<Rect> rects;
  {
    Eigen::VectorXd c = Eigen::VectorXd::Constant(d, 0.5);
    const double f0 = evaluate_batch(objective, {c}, false)[0];
    std::vector<int> level(static_cast<std::size_t>(d), 0);
    rects.push_back({c, level, f0, rect_size(level)});
  }
  long evals = 1;
  long iters = 0;
  long divisions = 0;
  std::size_t best = 0;
  double f_max = rects[0].f;
  std::string reason = "max_iters";

  while (true) {
    if (evals >= cfg.max_evals) { reason = "max_evals"; break; }
    if (iters >= cfg.max_iters) { reason = "max_iters"; break; }
    if (divisions >= cfg.max_rect_divisions) { reason = "max_rect_divisions"; break; }
    if (f_max - rects[best].f <= cfg.fun_tolerance && rects.size() > 1) { reason = "fun_tolerance"; break; }

    const auto selected = select_potentially_optimal(rects, rects[best].f, cfg.epsilon);
    if (selected.empty()) { reason = "no_divisible_rectangles"; break; }

    // Plan every split of this iteration, then evaluate the new centers as one batch.
    struct Plan {
      std::size_t rect;
      std::vector<Eigen::Index> axes;
      double delta;
    };
    std::vector<Plan> plans;
    std::vector<Eigen::VectorXd> points;
    for (std::size_t idx : selected) {
      if (divisions >= cfg.max_rect_divisions) break;
      const Rect& r = rects[idx];
      const int min_level = *std::min_element(r.level.begin(), r.level.end());
      std::vector<Eigen::Index> axes;
      for (Eigen::Index i = 0; i < d; ++i) {
        if (r.level[static_cast<std::size_t>(i)] == min_level) axes.push_back(i);
      }
      if (evals + static_cast<long>(points.size() + 2 * axes.size()) > cfg.max_evals) break;
      const double delta = std::pow(3.0, -(min_level + 1));
      for (Eigen::Index i : axes) {
        Eigen::VectorXd up = r.center;
        Eigen::VectorXd down = r.center;
        up[i] += delta;
        down[i] -= delta;
        points.push_back(std::move(up));
        points.push_back(std::move(down));
      }
      plans.push_back({idx, std::move(axes), delta});
      ++divisions;
    }
    if (plans.empty()) { reason = "max_evals"; break; }

    const std::vector<double> values = evaluate_batch(objective, points, cfg.parallel_batch);
    evals += static_cast<long>(values.size());

    std::size_t offset = 0;
    for (const Plan& p : plans) {
      const std::size_t m = p.axes.size();
      // Split first along the axis whose better neighbour is lowest, so the
      // most promising children keep the largest sides.
      std::vector<std::size_t> order(m);
      std::iota(order.begin(), order.end(), 0);
      std::vector<double> w(m);
      for (std::size_t k = 0; k < m; ++k) w[k] = std::min(values[offset + 2 * k], values[offset + 2 * k + 1]);
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return w[a] < w[b]; });

      std::vector<int> level = rects[p.rect].level;
      for (std::size_t k : order) {
        level[static_cast<std::size_t>(p.axes[k])] += 1;
        for (std::size_t side = 0; side < 2; ++side) {
          const std::size_t pi = offset + 2 * k + side;
          rects.push_back({points[pi], level, values[pi], rect_size(level)});
        }
      }
      rects[p.rect].level = level;
      rects[p.rect].size = rect_size(level);
      offset += 2 * m;
    }
    for (std::size_t i = 0; i < rects.size(); ++i) {
      if (rects[i].f < rects[best].f) best = i;
      f_max = std::max(f_max, rects[i].f);
    }
    ++iters;
  }

  return {rects[best].center, rects[best].f, evals, iters, reason};
}

MinimizeResult local_refine(const ValueGradFn& objective, const Eigen::VectorXd& x0, const LocalConfig& cfg) {
  cfg.validate();
  const Eigen::Index d = x0.size();
  if (d < 1) throw std::invalid_argument("local_refine needs a nonempty start point");

  auto project = [](const Eigen::VectorXd& v) -> Eigen::VectorXd { return v.cwiseMax(0.0).cwiseMin(1.0); };
  auto eval = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g.resize(d);
    const double v = objective(x, g);
    if (!std::isfinite(v) || !g.allFinite()) throw_non_finite(x, v);
    return v;
  };

  Eigen::VectorXd x = project(x0);
  Eigen::VectorXd g;
  double f = eval(x, g);
  long evals = 1;
  long iters = 0;
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(d, d);
  bool fresh_hessian = true;
  std::string reason = "max_iters";

  Eigen::VectorXd xn;
  Eigen::VectorXd gn;
  while (true) {
    const Eigen::VectorXd pg = project(x - g) - x;
    if (pg.lpNorm<Eigen::Infinity>() <= cfg.optimality_tolerance) { reason = "optimality"; break; }
    if (iters >= cfg.max_iters) { reason = "max_iters"; break; }
    if (evals >= cfg.max_evals) { reason = "max_evals"; break; }

    // Variables pinned at a bound with the gradient pushing outward stay fixed.
    std::vector<bool> free_var(static_cast<std::size_t>(d));
    for (Eigen::Index i = 0; i < d; ++i) {
      const bool pinned = (x[i] <= 0.0 && g[i] > 0.0) || (x[i] >= 1.0 && g[i] < 0.0);
      free_var[static_cast<std::size_t>(i)] = !pinned;
    }
    auto mask = [&](Eigen::VectorXd v) {
      for (Eigen::Index i = 0; i < d; ++i) {
        if (!free_var[static_cast<std::size_t>(i)]) v[i] = 0.0;
      }
      return v;
    };
    const Eigen::VectorXd g_free = mask(g);
    Eigen::VectorXd dir = -mask(H * g_free);
    if (g.dot(dir) >= 0.0) {
      H.setIdentity();
      fresh_hessian = true;
      dir = -g_free;
    }
    double t = 1.0;
    if (fresh_hessian) t = std::min(1.0, 0.1 / std::max(dir.lpNorm<Eigen::Infinity>(), 1e-300));

    bool accepted = false;
    double fn = f;
    while (evals < cfg.max_evals) {
      xn = project(x + t * dir);
      fn = eval(xn, gn);
      ++evals;
      if (fn <= f + 1e-4 * g.dot(xn - x) && fn <= f) {
        accepted = true;
        break;
      }
      t *= 0.5;
      if (t < 1e-20) break;
    }
    ++iters;
    if (!accepted) { reason = evals >= cfg.max_evals ? "max_evals" : "line_search"; break; }

    const Eigen::VectorXd s = xn - x;
    const Eigen::VectorXd y = gn - g;
    const double decrease = f - fn;
    x = xn;
    f = fn;
    g = gn;

    if (s.lpNorm<Eigen::Infinity>() <= cfg.step_tolerance * (1.0 + x.lpNorm<Eigen::Infinity>())) {
      reason = "step_tolerance";
      break;
    }
    if (decrease <= cfg.fun_tolerance * (1.0 + std::abs(f)) &&
        (project(x - g) - x).lpNorm<Eigen::Infinity>() <= std::sqrt(cfg.fun_tolerance)) {
      reason = "fun_tolerance";
      break;
    }

    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (fresh_hessian) {
        H *= sy / y.squaredNorm();
        fresh_hessian = false;
      }
      const double rho = 1.0 / sy;
      const Eigen::VectorXd Hy = H * y;
      H += (rho * rho * y.dot(Hy) + rho) * s * s.transpose() - rho * (Hy * s.transpose() + s * Hy.transpose());
    }
  }
  return {x, f, evals, iters, reason};
}

MinimizeResult local_refine(const ScalarFn& objective, const GradientFn& gradient, const Eigen::VectorXd& x0,
                            const LocalConfig& cfg) {
  ValueGradFn fg = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g = gradient(x);
    return objective(x);
  };
  return local_refine(fg, x0, cfg);
}

MinimizeResult minimize_acquisition(const ScalarFn& objective, const ValueGradFn& value_grad, Eigen::Index d,
                                    const InnerConfig& cfg) {
  MinimizeResult global = direct_minimize(objective, d, cfg.direct);
  if (!value_grad) return global;
  MinimizeResult local = local_refine(value_grad, global.x, cfg.local);
  local.evals += global.evals;
  if (local.f <= global.f) return local;
  global.evals = local.evals;
  return global;
}

}  // namespace epsts
