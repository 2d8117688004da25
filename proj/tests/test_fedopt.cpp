#include <doctest.h>

#include "rfed/error.hpp"
#include "rfed/fedopt.hpp"
#include "rfed/objectives.hpp"
#include "support.hpp"

#include <cmath>
#include <set>

using namespace rfed;
using namespace rfed::testing;

namespace {

struct Instance {
  Manifold m;
  GlobalObjective f;
  Point x0;
};

Instance random_instance(Index d, Index r, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Manifold m = r == 1 ? Manifold::sphere(d) : Manifold::stiefel(d, r);
  std::vector<Matrix> covs;
  for (std::size_t i = 0; i < n; ++i) covs.push_back(random_psd(d, 2 * d, rng) / (2.0 * d));
  return {m, GlobalObjective::from_covariances(covs), m.random_point(rng)};
}

AlgorithmConfig config(Algorithm a, std::size_t n, std::size_t k, std::size_t rounds, std::size_t tau,
                       double eta) {
  AlgorithmConfig cfg;
  cfg.algorithm = a;
  cfg.n = n;
  cfg.k = k;
  cfg.rounds = rounds;
  cfg.local_steps = tau;
  cfg.step_size = eta;
  cfg.seed = 7;
  return cfg;
}

double max_round_gap(const RunResult& a, const RunResult& b) {
  double gap = std::abs(a.terminal.loss - b.terminal.loss);
  for (std::size_t t = 0; t < a.history.size(); ++t)
    gap = std::max({gap, std::abs(a.history[t].loss - b.history[t].loss),
                    std::abs(a.history[t].grad_norm - b.history[t].grad_norm)});
  return std::max(gap, (a.last_iterate.values() - b.last_iterate.values()).norm());
}

}  // namespace

TEST_CASE("client sampling") {
  std::mt19937_64 rng(41);
  CHECK(sample_clients(5, 5, rng) == std::vector<std::size_t>{0, 1, 2, 3, 4});
  CHECK(sample_clients(1, 1, rng) == std::vector<std::size_t>{0});
  CHECK_THROWS_AS(sample_clients(3, 4, rng), Error);
  CHECK_THROWS_AS(sample_clients(3, 0, rng), Error);

  std::mt19937_64 a(99), b(99);
  const auto first = sample_clients(100, 10, a);
  CHECK(first == sample_clients(100, 10, b));
  CHECK(std::set<std::size_t>(first.begin(), first.end()).size() == 10);
  CHECK(std::is_sorted(first.begin(), first.end()));

  const int draws = 100000;
  std::vector<int> hits(100, 0);
  for (int i = 0; i < draws; ++i)
    for (std::size_t c : sample_clients(100, 10, rng)) ++hits[c];
  const double p = 0.1;
  const double sigma = std::sqrt(draws * p * (1 - p));
  for (int h : hits) CHECK(std::abs(h - draws * p) <= 3.5 * sigma);
}

TEST_CASE("first SVRG local step is a global gradient step for every client") {
  const Instance inst = random_instance(9, 3, 4, 42);
  const Tangent g = riemannian_grad(inst.m, inst.f, inst.x0);
  const Point expected = inst.m.exp(inst.x0, -0.3 * g);
  for (std::size_t i = 0; i < 4; ++i) {
    const Point step = svrg_local_step(inst.m, inst.x0, inst.x0, inst.f.client(i), g, 0.3);
    CHECK((step.values() - expected.values()).norm() <= 1e-13);
  }
}

TEST_CASE("SVRG step agrees with a direct transcription") {
  std::mt19937_64 rng(43);
  for (Index r : {1, 3}) {
    const Instance inst = random_instance(8, r, 3, 43 + r);
    const Manifold& m = inst.m;
    const Point anchor = inst.x0;
    const Point x = m.exp(anchor, 0.2 * m.random_tangent(anchor, rng));
    const Objective& fi = inst.f.client(1);
    const Tangent g = riemannian_grad(m, inst.f, anchor);

    // grad f_i(x) - P_{anchor->x}(grad f_i(anchor) - grad f(anchor)), written out in ambient terms.
    const Matrix gi_x = m.project_tangent(x, fi.euclidean_grad(x.values())).values();
    const Matrix gi_a = m.project_tangent(anchor, fi.euclidean_grad(anchor.values())).values();
    const Matrix gf_a = m.project_tangent(anchor, inst.f.euclidean_grad(anchor.values())).values();
    const Tangent moved = m.transport(anchor, x, m.make_tangent(anchor, gi_a - gf_a));
    const Matrix direction = -0.25 * (gi_x - moved.values());
    const Point expected = m.exp(x, m.make_tangent(x, direction));

    const Point got = svrg_local_step(m, x, anchor, fi, g, 0.25);
    CHECK((got.values() - expected.values()).norm() <= 1e-12);
  }
}

TEST_CASE("SVRG step rejects a gradient anchored elsewhere") {
  std::mt19937_64 rng(44);
  const Instance inst = random_instance(5, 1, 2, 44);
  const Point other = inst.m.random_point(rng);
  const Tangent g = riemannian_grad(inst.m, inst.f, other);
  CHECK_THROWS_AS(svrg_local_step(inst.m, inst.x0, inst.x0, inst.f.client(0), g, 0.1), Error);
}

TEST_CASE("single client SVRG is plain gradient descent on that client") {
  const Instance inst = random_instance(6, 2, 1, 45);
  const Objective& f1 = inst.f.client(0);
  Point x = inst.x0;
  const Tangent g = riemannian_grad(inst.m, inst.f, inst.x0);
  for (int step = 0; step < 5; ++step) {
    const Point svrg = svrg_local_step(inst.m, x, inst.x0, f1, g, 0.2);
    const Point plain = fedavg_local_step(inst.m, x, f1, 0.2);
    CHECK((svrg.values() - plain.values()).norm() <= 1e-14);
    x = plain;
  }
}

TEST_CASE("tau = 1 RFedSVRG is centralized Riemannian gradient descent") {
  for (std::size_t k : {1, 3, 5}) {
    const Instance inst = random_instance(12, 2, 5, 46 + k);
    const AlgorithmConfig cfg = config(Algorithm::RFedSVRG, 5, k, 60, 1, 0.4);
    const RunResult run = run_rfedsvrg(cfg, inst.m, inst.f, inst.x0);
    Point x = inst.x0;
    for (std::size_t t = 0; t < cfg.rounds; ++t) {
      CHECK(std::abs(run.history[t].loss - inst.f.value(x.values())) <= 1e-10);
      x = inst.m.exp(x, -0.4 * riemannian_grad(inst.m, inst.f, x));
    }
    CHECK((run.last_iterate.values() - x.values()).norm() <= 1e-10);
  }
}

TEST_CASE("zero rounds returns the start point") {
  const Instance inst = random_instance(5, 1, 2, 47);
  const RunResult run = run_rfedsvrg(config(Algorithm::RFedSVRG, 2, 2, 0, 3, 0.1), inst.m, inst.f, inst.x0);
  CHECK(run.history.empty());
  CHECK(run.output.same_as(inst.x0));
  CHECK(run.terminal.round == 0);
  CHECK(run.all_records().size() == 1);
}

TEST_CASE("loss is non-increasing with eta = 1/L") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Instance inst = random_instance(20, 1, 4, 100 + seed);
    const double l = smoothness_constant(inst.f, SmoothnessRule::MeanCovariance);
    const RunResult run = run_rfedsvrg(config(Algorithm::RFedSVRG, 4, 4, 100, 1, 1.0 / l), inst.m, inst.f, inst.x0);
    const auto records = run.all_records();
    for (std::size_t t = 1; t < records.size(); ++t) CHECK(records[t].loss <= records[t - 1].loss + 1e-12);
  }
}

TEST_CASE("RFedAvg with one client matches RFedSVRG") {
  const Instance inst = random_instance(8, 2, 1, 48);
  const RunResult avg = run_rfedavg(config(Algorithm::RFedAvg, 1, 1, 20, 4, 0.3), inst.m, inst.f, inst.x0);
  const RunResult svrg = run_rfedsvrg(config(Algorithm::RFedSVRG, 1, 1, 20, 4, 0.3), inst.m, inst.f, inst.x0);
  CHECK(max_round_gap(avg, svrg) <= 1e-12);
}

TEST_CASE("homogeneous clients: RFedAvg and RFedSVRG coincide at tau = 1") {
  std::mt19937_64 rng(49);
  const Matrix a = random_psd(10, 20, rng) / 20.0;
  const GlobalObjective f = GlobalObjective::from_covariances({a, a, a, a});
  const Manifold m = Manifold::stiefel(10, 3);
  const Point x0 = m.random_point(rng);
  const RunResult avg = run_rfedavg(config(Algorithm::RFedAvg, 4, 4, 50, 1, 0.5), m, f, x0);
  const RunResult svrg = run_rfedsvrg(config(Algorithm::RFedSVRG, 4, 4, 50, 1, 0.5), m, f, x0);
  CHECK(max_round_gap(avg, svrg) <= 1e-10);
}

TEST_CASE("client drift on a two-client sphere problem") {
  Matrix a1 = Matrix::Zero(3, 3), a2 = Matrix::Zero(3, 3);
  a1.diagonal() << 3, 1, 0;
  a2.diagonal() << 0, 1, 2;
  const GlobalObjective f = GlobalObjective::from_covariances({a1, a2});
  const Manifold s = Manifold::sphere(3);
  Matrix start(3, 1);
  start << 1, 1, 1;
  const Point x0 = s.retract_ambient(start);

  const RunResult avg = run_rfedavg(config(Algorithm::RFedAvg, 2, 2, 200, 20, 0.05), s, f, x0);
  const RunResult svrg = run_rfedsvrg(config(Algorithm::RFedSVRG, 2, 2, 200, 20, 0.05), s, f, x0);
  CHECK(avg.terminal.grad_norm >= 1e-2);
  CHECK(svrg.terminal.grad_norm <= 1e-6);
}

TEST_CASE("RFedProx with mu = 0 is RFedAvg") {
  const Instance inst = random_instance(9, 2, 4, 50);
  AlgorithmConfig prox = config(Algorithm::RFedProx, 4, 2, 30, 5, 0.2);
  prox.prox_weight = 0.0;
  const RunResult a = run_rfedprox(prox, inst.m, inst.f, inst.x0);
  const RunResult b = run_rfedavg(config(Algorithm::RFedAvg, 4, 2, 30, 5, 0.2), inst.m, inst.f, inst.x0);
  CHECK(max_round_gap(a, b) <= 1e-12);
}

TEST_CASE("large prox weight pins local iterates to the anchor") {
  std::mt19937_64 rng(51);
  const Instance inst = random_instance(10, 1, 3, 51);
  const double mu = 1e6;
  const double eta = 0.5 / mu;
  for (std::size_t i = 0; i < 3; ++i) {
    const Objective& fi = inst.f.client(i);
    const double g = riemannian_grad(inst.m, fi, inst.x0).norm();
    // Start off the anchor so the prox term has something to pull against.
    Point x = inst.m.exp(inst.x0, 1e-3 * inst.m.random_tangent(inst.x0, rng));
    for (int step = 0; step < 20; ++step) x = prox_local_step(inst.m, x, inst.x0, fi, mu, eta);
    CHECK(inst.m.distance(x, inst.x0) <= 1e-2 * std::max(g, 1.0));
  }
  AlgorithmConfig cfg = config(Algorithm::RFedProx, 3, 3, 5, 5, eta);
  cfg.prox_weight = mu;
  const RunResult run = run_rfedprox(cfg, inst.m, inst.f, inst.x0);
  CHECK(inst.m.distance(run.last_iterate, inst.x0) <= 1e-5);
}

// The identity grad d^2(., a) = -2 Log(., a) needs the true geodesic distance,
// so the check runs on the sphere. On Stiefel the distance is the retraction
// surrogate and agreement is only first order near the anchor.
TEST_CASE("prox gradient matches finite differences") {
  std::mt19937_64 rng(52);
  const Instance inst = random_instance(7, 1, 2, 52);
  const Manifold& m = inst.m;
  const Objective& fi = inst.f.client(0);
  for (int trial = 0; trial < 40; ++trial) {
    const Point anchor = m.random_point(rng);
    const Point x = m.exp(anchor, 0.3 * m.random_tangent(anchor, rng));
    const Tangent xi = m.random_tangent(x, rng);
    const double mu = 2.5;
    auto h = [&](const Point& y) {
      const double dist = m.distance(y, anchor);
      return fi.value(y.values()) + 0.5 * mu * dist * dist;
    };
    const double step = 1e-6;
    const double fd = (h(m.exp(x, step * xi)) - h(m.exp(x, -step * xi))) / (2 * step);
    const double analytic = inner(prox_grad(m, fi, x, anchor, mu), xi);
    CHECK(std::abs(fd - analytic) <= 1e-5 * std::max(1.0, std::abs(analytic)));
  }
}

TEST_CASE("prox gradient on Stiefel agrees to first order near the anchor") {
  std::mt19937_64 rng(56);
  const Instance inst = random_instance(7, 3, 2, 56);
  const Manifold& m = inst.m;
  const Point anchor = m.random_point(rng);
  const Tangent dir = m.random_tangent(anchor, rng);
  const Tangent probe = m.random_tangent(anchor, rng);
  double previous = 0.0;
  for (double radius : {1e-1, 1e-2, 1e-3}) {
    const Point x = m.exp(anchor, (radius / dir.norm()) * dir);
    const Tangent xi = m.project_tangent(x, probe.values());
    auto d2 = [&](const Point& y) { return std::pow(m.distance(y, anchor), 2); };
    const double step = 1e-7;
    const double fd = (d2(m.exp(x, step * xi)) - d2(m.exp(x, -step * xi))) / (2 * step);
    const double analytic = inner(-2.0 * m.log(x, anchor), xi);
    const double err = std::abs(fd - analytic) / radius;
    if (previous > 0.0) CHECK(err < 0.2 * previous);
    previous = err;
  }
}

TEST_CASE("histories do not depend on the worker count") {
  const Instance inst = random_instance(15, 3, 8, 53);
  for (Algorithm a : {Algorithm::RFedSVRG, Algorithm::RFedAvg, Algorithm::RFedProx}) {
    AlgorithmConfig cfg = config(a, 8, 3, 25, 3, 0.3);
    cfg.prox_weight = 0.8;
    cfg.client_option = OutputOption::UniformSample;
    cfg.server_option = OutputOption::UniformSample;
    RunOptions one, four;
    four.workers = 4;
    const RunResult r1 = run_federated(cfg, inst.m, inst.f, inst.x0, one);
    const RunResult r4 = run_federated(cfg, inst.m, inst.f, inst.x0, four);
    REQUIRE(r1.history.size() == r4.history.size());
    for (std::size_t t = 0; t < r1.history.size(); ++t) {
      CHECK(r1.history[t].loss == r4.history[t].loss);
      CHECK(r1.history[t].grad_norm == r4.history[t].grad_norm);
      CHECK(r1.history[t].sampled_clients == r4.history[t].sampled_clients);
    }
    CHECK(r1.output.values() == r4.output.values());
  }
}

TEST_CASE("server iterates stay on the manifold over long runs") {
  const Instance inst = random_instance(10, 3, 4, 54);
  const RunResult run = run_rfedsvrg(config(Algorithm::RFedSVRG, 4, 2, 1000, 2, 0.3), inst.m, inst.f, inst.x0);
  CHECK(inst.m.constraint_violation(run.last_iterate.values()) <= 1e-8);
}

TEST_CASE("configuration errors") {
  const Instance inst = random_instance(5, 1, 3, 55);
  CHECK_THROWS_AS(run_rfedsvrg(config(Algorithm::RFedSVRG, 3, 4, 1, 1, 0.1), inst.m, inst.f, inst.x0), Error);
  CHECK_THROWS_AS(run_rfedsvrg(config(Algorithm::RFedSVRG, 3, 3, 1, 0, 0.1), inst.m, inst.f, inst.x0), Error);
  CHECK_THROWS_AS(run_rfedsvrg(config(Algorithm::RFedSVRG, 3, 3, 1, 1, 0.0), inst.m, inst.f, inst.x0), Error);
  CHECK_THROWS_AS(run_rfedsvrg(config(Algorithm::RFedSVRG, 2, 2, 1, 1, 0.1), inst.m, inst.f, inst.x0), Error);
  AlgorithmConfig neg = config(Algorithm::RFedProx, 3, 3, 1, 1, 0.1);
  neg.prox_weight = -1.0;
  CHECK_THROWS_AS(run_rfedprox(neg, inst.m, inst.f, inst.x0), Error);
}
