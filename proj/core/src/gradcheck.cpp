#include "cmha/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "cmha/error.hpp"
#include "cmha/losses.hpp"
#include "cmha/rng.hpp"
#include "cmha/tensor.hpp"

namespace cmha {

GradCheckReport check_gradient(const ScalarObjective& f, std::span<const double> x,
                               std::span<const double> analytic, double h, double floor) {
  if (x.size() != analytic.size()) throw Error("gradient length mismatch");
  GradCheckReport rep;
  rep.rounding_bound =
      kRoundingUlps * std::numeric_limits<double>::epsilon() * std::abs(f(x)) / h;
  std::vector<double> probe(x.begin(), x.end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = f(probe);
    probe[i] = x[i] - h;
    const double down = f(probe);
    probe[i] = x[i];
    const double numeric = (up - down) / (2.0 * h);
    const double a = analytic[i];
    const double excess = std::max(0.0, std::abs(a - numeric) - rep.rounding_bound);
    const double scale = std::max({std::abs(a), std::abs(numeric), floor});
    const double rel = excess / scale;
    const double raw = std::abs(a - numeric) / scale;
    // Worst entry by discounted error, ties broken by raw error.
    if (rep.checked == 0 || rel > rep.max_rel_error ||
        (rel == rep.max_rel_error && raw > rep.max_raw_rel_error)) {
      rep.max_rel_error = rel;
      rep.worst_index = i;
      rep.analytic_at_worst = a;
      rep.numeric_at_worst = numeric;
    }
    rep.max_raw_rel_error = std::max(rep.max_raw_rel_error, raw);
    ++rep.checked;
  }
  return rep;
}

namespace {

Matrix random_matrix(Xorshift64Star& rng, std::size_t r, std::size_t c, double lo, double hi) {
  Matrix m(r, c);
  for (double& v : m.data()) v = rng.uniform(lo, hi);
  return m;
}

// Overlap table with a mix of positives, negatives and ignored pairs, and
// at least one positive per row.
Matrix random_overlaps(Xorshift64Star& rng, std::size_t r, std::size_t c) {
  Matrix o(r, c);
  for (double& v : o.data()) {
    const double u = rng.uniform();
    if (u < 0.25) v = rng.uniform(0.15, 1.0);
    else if (u < 0.35) v = rng.uniform(0.01, 0.09);
    else v = 0.0;
  }
  for (std::size_t i = 0; i < r; ++i) o(i, rng.below(c)) = rng.uniform(0.15, 1.0);
  return o;
}

std::vector<double> faulty(std::span<const double> g, double fault) {
  std::vector<double> out(g.begin(), g.end());
  for (double& v : out) v *= 1.0 + fault;
  return out;
}

std::string matrix_location(std::size_t flat, std::size_t cols) {
  return "(" + std::to_string(flat / cols) + ", " + std::to_string(flat % cols) + ")";
}

LossGradCheck finish(std::string name, std::string location, GradCheckReport rep,
                     double tol) {
  LossGradCheck c;
  c.name = std::move(name);
  c.location = std::move(location);
  c.report = rep;
  c.passed = rep.max_rel_error < tol;
  return c;
}

}  // namespace

std::vector<LossGradCheck> run_loss_gradchecks(const GradCheckOptions& opts) {
  if (opts.n_p < 1 || opts.n_q < 1 || opts.d < 1) throw Error("gradcheck sizes must be >= 1");
  Xorshift64Star rng(opts.seed);
  std::vector<LossGradCheck> out;
  const CircleLossConfig circle;

  {
    const Matrix dist = random_matrix(rng, opts.n_p, opts.n_q, 0.0, 2.0);
    const Matrix overlaps = random_overlaps(rng, opts.n_p, opts.n_q);
    const auto res = circle_loss_from_distances(dist, overlaps, circle);
    auto f = [&](std::span<const double> x) {
      return circle_loss_from_distances(Matrix(opts.n_p, opts.n_q, {x.begin(), x.end()}),
                                        overlaps, circle)
          .value;
    };
    const auto rep = check_gradient(f, dist.data(), faulty(res.grad_dist.data(), opts.gradient_fault),
                                    opts.h);
    out.push_back(finish("circle/distances", matrix_location(rep.worst_index, opts.n_q), rep,
                         opts.tolerance));
  }
  {
    // Features scaled so pairwise distances straddle both margins.
    const double s = 1.0 / std::sqrt(static_cast<double>(opts.d));
    const Matrix fp = random_matrix(rng, opts.n_p, opts.d, -s, s);
    const Matrix fq = random_matrix(rng, opts.n_q, opts.d, -s, s);
    const Matrix overlaps = random_overlaps(rng, opts.n_p, opts.n_q);
    const auto res = coarse_circle_loss(fp, fq, overlaps, circle);
    std::vector<double> x(fp.data().begin(), fp.data().end());
    x.insert(x.end(), fq.data().begin(), fq.data().end());
    std::vector<double> g(res.grad_src.data().begin(), res.grad_src.data().end());
    g.insert(g.end(), res.grad_tgt.data().begin(), res.grad_tgt.data().end());
    const std::size_t split = fp.size();
    auto f = [&](std::span<const double> v) {
      Matrix a(opts.n_p, opts.d, {v.begin(), v.begin() + static_cast<std::ptrdiff_t>(split)});
      Matrix b(opts.n_q, opts.d, {v.begin() + static_cast<std::ptrdiff_t>(split), v.end()});
      return coarse_circle_loss(a, b, overlaps, circle).value;
    };
    const auto rep = check_gradient(f, x, faulty(g, opts.gradient_fault), opts.h);
    const std::string loc = rep.worst_index < split
                                ? "src" + matrix_location(rep.worst_index, opts.d)
                                : "tgt" + matrix_location(rep.worst_index - split, opts.d);
    out.push_back(finish("circle/features", loc, rep, opts.tolerance));
  }
  {
    // Three patches of varying size; entries bounded away from zero.
    std::vector<Matrix> zs;
    std::vector<FinePatchSupervision> sup;
    for (std::size_t p = 0; p < 3; ++p) {
      const std::size_t n = 1 + rng.below(std::min<std::size_t>(opts.n_p, 6));
      const std::size_t m = 1 + rng.below(std::min<std::size_t>(opts.n_q, 6));
      zs.push_back(random_matrix(rng, n + 1, m + 1, 0.05, 1.0));
      FinePatchSupervision s;
      std::vector<bool> tgt_used(m, false);
      for (std::size_t x = 0; x < n; ++x) {
        const std::size_t y = rng.below(m);
        if (rng.uniform() < 0.6 && !tgt_used[y]) {
          s.matched.emplace_back(x, y);
          tgt_used[y] = true;
        } else {
          s.unmatched_src.push_back(x);
        }
      }
      for (std::size_t y = 0; y < m; ++y)
        if (!tgt_used[y]) s.unmatched_tgt.push_back(y);
      sup.push_back(std::move(s));
    }
    const auto res = fine_matching_loss(zs, sup);
    std::vector<double> x, g;
    std::vector<std::size_t> offsets;
    for (std::size_t p = 0; p < zs.size(); ++p) {
      offsets.push_back(x.size());
      x.insert(x.end(), zs[p].data().begin(), zs[p].data().end());
      g.insert(g.end(), res.grad_z[p].data().begin(), res.grad_z[p].data().end());
    }
    auto f = [&](std::span<const double> v) {
      std::vector<Matrix> probe = zs;
      for (std::size_t p = 0; p < probe.size(); ++p)
        std::copy_n(v.begin() + static_cast<std::ptrdiff_t>(offsets[p]), probe[p].size(),
                    probe[p].data().begin());
      return fine_matching_loss(probe, sup).value;
    };
    const auto rep = check_gradient(f, x, faulty(g, opts.gradient_fault), opts.h);
    std::size_t patch = 0;
    while (patch + 1 < offsets.size() && offsets[patch + 1] <= rep.worst_index) ++patch;
    out.push_back(finish("fine/assignment",
                         "patch " + std::to_string(patch) +
                             matrix_location(rep.worst_index - offsets[patch], zs[patch].cols()),
                         rep, opts.tolerance));
  }
  {
    const Matrix s = random_matrix(rng, opts.n_p, opts.n_p, -3.0, 3.0);
    const auto res = contrastive_from_similarity(s);
    auto f = [&](std::span<const double> v) {
      return contrastive_from_similarity(Matrix(opts.n_p, opts.n_p, {v.begin(), v.end()})).value;
    };
    const auto rep = check_gradient(f, s.data(), faulty(res.grad_s.data(), opts.gradient_fault),
                                    opts.h);
    out.push_back(finish("contrastive/similarity", matrix_location(rep.worst_index, opts.n_p),
                         rep, opts.tolerance));
  }
  {
    const Matrix geo = random_matrix(rng, opts.n_p, opts.d, -1.0, 1.0);
    const Matrix img = random_matrix(rng, opts.n_p, opts.d, -1.0, 1.0);
    const auto res = cross_modal_contrastive(geo, img);
    std::vector<double> x(geo.data().begin(), geo.data().end());
    x.insert(x.end(), img.data().begin(), img.data().end());
    std::vector<double> g(res.grad_geo.data().begin(), res.grad_geo.data().end());
    g.insert(g.end(), res.grad_img.data().begin(), res.grad_img.data().end());
    const std::size_t split = geo.size();
    auto f = [&](std::span<const double> v) {
      Matrix a(opts.n_p, opts.d, {v.begin(), v.begin() + static_cast<std::ptrdiff_t>(split)});
      Matrix b(opts.n_p, opts.d, {v.begin() + static_cast<std::ptrdiff_t>(split), v.end()});
      return cross_modal_contrastive(a, b).value;
    };
    const auto rep = check_gradient(f, x, faulty(g, opts.gradient_fault), opts.h);
    const std::string loc = rep.worst_index < split
                                ? "geo" + matrix_location(rep.worst_index, opts.d)
                                : "img" + matrix_location(rep.worst_index - split, opts.d);
    out.push_back(finish("contrastive/features", loc, rep, opts.tolerance));
  }
  return out;
}

}  // namespace cmha
