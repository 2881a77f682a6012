#include <doctest.h>

#include <cmath>
#include <vector>

#include "isvrg/optimizer.hpp"
#include "isvrg/problems.hpp"
#include "toy.hpp"

using namespace isvrg;
using isvrg::test::vec;

namespace {

QuadraticSum two_parabolas() {
  return QuadraticSum({Eigen::MatrixXd::Identity(1, 1), Eigen::MatrixXd::Identity(1, 1)},
                      {vec({-1.0}), vec({1.0})});
}

RunConfig<double> base_config(const Problem& p, EstimatorSpec est, StepSchedule sched, Index S,
                              Index m, std::uint64_t seed) {
  RunConfig<double> rc;
  rc.estimator = est;
  rc.schedule = sched;
  rc.epochs = S;
  rc.inner_length = m;
  rc.seed = seed;
  rc.x0 = Vector::Constant(p.dim(), 0.5);
  return rc;
}

// Straight-line loop with a constant step: snapshot gradient, m sampled
// steps, last iterate becomes the snapshot.
Vector reference_loop(const Problem& p, double lambda_u, double eta, Index S, Index m,
                      std::uint64_t seed, Vector x) {
  CounterRng rng(seed);
  const Index n = p.size();
  for (Index s = 0; s < S; ++s) {
    const Vector snap = x;
    Vector g = Vector::Zero(p.dim());
    for (Index i = 0; i < n; ++i) g += p.gradient(i, snap);
    g /= double(n);
    for (Index t = 0; t < m; ++t) {
      const auto i = static_cast<Index>(rng.index(static_cast<std::uint64_t>(n)));
      const Vector v = (1 - lambda_u) * p.gradient(i, x) - lambda_u * (p.gradient(i, snap) - g);
      x -= eta * v;
    }
  }
  return x;
}

ProblemRecipe sigmoid(Index n, Index d, std::uint64_t seed) {
  ProblemRecipe r;
  r.family = Family::SigmoidRegression;
  r.n = n;
  r.d = d;
  r.seed = seed;
  return r;
}

}  // namespace

TEST_CASE("a vanishing step leaves the iterate in place") {
  const auto p = two_parabolas();
  auto rc = base_config(p, EstimatorSpec::plain_sgd(), StepSchedule::constant(1e-300), 1, 1, 3);
  const auto r = run(p, rc);
  CHECK(r.x(0) == 0.5);
  REQUIRE(r.trace.size() == 1);
  IfoLedger scratch;
  CHECK(r.trace[0].grad_sq == grad_sq_norm(p, rc.x0, scratch));
}

TEST_CASE("scaled svrg contracts on two parabolas") {
  const auto p = two_parabolas();
  const auto rc =
      base_config(p, EstimatorSpec::scaled_svrg(), StepSchedule::constant(0.1), 200, 2, 7);
  const auto r = run(p, rc);
  CHECK(r.trace.back().grad_sq <= 1e-6);
  // ScaledSvrg is the unbiased formula at one half
  const Vector ref = reference_loop(p, 0.5, 0.1, 200, 2, 7, rc.x0);
  CHECK(std::abs(r.x(0) - ref(0)) <= 1e-12);
}

TEST_CASE("run matches the reference loop on a nonconvex problem") {
  const auto p = make_problem(sigmoid(23, 4, 2));
  for (double lambda : {0.0, 0.3, 0.8}) {
    const auto rc = base_config(*p, EstimatorSpec::weighted_unbiased(lambda),
                                StepSchedule::constant(0.2), 6, 17, 99);
    const auto r = run(*p, rc);
    const Vector ref = reference_loop(*p, lambda, 0.2, 6, 17, 99, rc.x0);
    CHECK((r.x - ref).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("identical runs give identical traces") {
  const auto p = make_problem(sigmoid(40, 5, 1));
  auto rc = base_config(*p, EstimatorSpec::hybrid_switch(),
                        StepSchedule::hybrid_max(1.0, 1.0, 40), 5, 40, 1234);
  const auto a = run(*p, rc);
  const auto b = run(*p, rc);
  CHECK(a.trace == b.trace);
  CHECK((a.x.array() == b.x.array()).all());
  rc.seed = 1235;
  CHECK_FALSE(run(*p, rc).trace == a.trace);
}

TEST_CASE("IFO ledger counts only the algorithm's own calls") {
  const auto p = make_problem(sigmoid(29, 3, 0));
  const Index S = 7, m = 13, n = 29;
  for (auto est : {EstimatorSpec::scaled_svrg(), EstimatorSpec::biased(0.4),
                   EstimatorSpec::weighted_unbiased(0.2), EstimatorSpec::hybrid_switch()}) {
    const auto r = run(*p, base_config(*p, est, StepSchedule::constant(0.1), S, m, 5));
    CHECK(r.ledger.optimization == static_cast<std::uint64_t>(S * (n + 2 * m)));
    CHECK(r.ledger.evaluation == static_cast<std::uint64_t>(S * 2 * n));  // objective + grad_sq
  }
  auto rc = base_config(*p, EstimatorSpec::plain_sgd(), StepSchedule::constant(0.1), S, m, 5);
  CHECK(run(*p, rc).ledger.optimization == static_cast<std::uint64_t>(S * m));
  rc.snapshot_gradient = SnapshotGradient::Always;
  CHECK(run(*p, rc).ledger.optimization == static_cast<std::uint64_t>(S * (n + m)));
  rc.estimator = EstimatorSpec::weighted_unbiased(0.0);
  rc.snapshot_gradient = SnapshotGradient::Auto;
  CHECK(run(*p, rc).ledger.optimization == static_cast<std::uint64_t>(S * m));
}

TEST_CASE("skipping oracles does not shift the sampled indices") {
  const auto p = make_problem(sigmoid(31, 4, 3));
  std::vector<Vector> sgd, unbiased;
  std::vector<Index> sgd_idx, unbiased_idx;
  auto rc = base_config(*p, EstimatorSpec::plain_sgd(), StepSchedule::decayed(0.5), 3, 10, 8);
  run<double>(*p, rc, [&](const InnerStep& st, const Vector& x) {
    sgd.push_back(x);
    sgd_idx.push_back(st.component);
  });
  rc.estimator = EstimatorSpec::weighted_unbiased(0.0);
  rc.snapshot_gradient = SnapshotGradient::Always;
  const auto r = run<double>(*p, rc, [&](const InnerStep& st, const Vector& x) {
    unbiased.push_back(x);
    unbiased_idx.push_back(st.component);
  });
  CHECK(sgd_idx == unbiased_idx);
  REQUIRE(sgd.size() == unbiased.size());
  bool identical = true;
  for (std::size_t k = 0; k < sgd.size(); ++k) identical = identical && sgd[k] == unbiased[k];
  CHECK(identical);
  CHECK(r.ledger.optimization == 3 * (31 + 10));
}

TEST_CASE("recorded branch follows the schedule and never reverts") {
  const auto p = make_problem(sigmoid(20, 3, 4));
  const auto sched = StepSchedule::hybrid_max(1.0, 1.0, 20);
  const auto rc = base_config(*p, EstimatorSpec::hybrid_switch(), sched, 4, 20, 6);
  bool turned_fixed = false, reverted = false, mismatch = false;
  run<double>(*p, rc, [&](const InnerStep& st, const Vector&) {
    const Step expected = step_at(sched, st.delta, static_cast<std::uint64_t>(st.t + 1),
                                  static_cast<std::uint64_t>(st.epoch));
    mismatch = mismatch || expected.branch != st.branch || expected.eta != st.eta;
    if (st.branch == Branch::Fixed) turned_fixed = true;
    else if (turned_fixed) reverted = true;
    CHECK(st.delta == static_cast<std::uint64_t>((st.epoch - 1) * 20 + st.t));
  });
  CHECK_FALSE(mismatch);
  CHECK(turned_fixed);
  CHECK_FALSE(reverted);
}

TEST_CASE("trace records are well formed") {
  const auto p = make_problem(sigmoid(25, 3, 9));
  const auto rc = base_config(*p, EstimatorSpec::biased(0.5), StepSchedule::decayed(0.8), 6, 9, 2);
  const auto r = run(*p, rc);
  REQUIRE(r.trace.size() == 6);
  for (std::size_t k = 0; k < r.trace.size(); ++k) {
    CHECK(r.trace[k].epoch == static_cast<Index>(k + 1));
    CHECK(r.trace[k].grad_sq >= 0.0);
    CHECK(r.trace[k].second_moment > 0.0);
    CHECK(r.trace[k].branch == Branch::Decayed);
    if (k > 0) CHECK(r.trace[k].cum_ifo > r.trace[k - 1].cum_ifo);
  }
  // last step of epoch 6 is global step 53
  CHECK(r.trace.back().step_size == doctest::Approx(0.8 / std::sqrt(54.0)));
}

TEST_CASE("explicit snapshot weights average the epoch's iterates") {
  const auto p = two_parabolas();
  auto rc = base_config(p, EstimatorSpec::plain_sgd(), StepSchedule::constant(0.25), 1, 2, 1);
  rc.snapshot_weights = SnapshotWeights::explicit_weights({0.5, 0.0, 0.5});
  std::vector<double> xs;
  const auto r = run<double>(p, rc, [&](const InnerStep&, const Vector& x) { xs.push_back(x(0)); });
  REQUIRE(xs.size() == 2);
  // x_2 from the observed x_1 and the same sampled component
  CounterRng rng(1);
  rng.index(2);
  const Index i = static_cast<Index>(rng.index(2));
  const double x2 = xs[1] - 0.25 * p.gradient(i, vec({xs[1]}))(0);
  CHECK(r.x(0) == doctest::Approx(0.5 * xs[0] + 0.5 * x2).epsilon(1e-15));

  rc.snapshot_weights = SnapshotWeights::explicit_weights({0.5, 0.6});
  CHECK_THROWS_AS(run(p, rc), ConfigError);
  rc.snapshot_weights = SnapshotWeights::explicit_weights({0.5, 0.6, -0.1});
  CHECK_THROWS_AS(run(p, rc), ConfigError);
}

TEST_CASE("configuration errors") {
  const auto p = two_parabolas();
  auto rc = base_config(p, EstimatorSpec::plain_sgd(), StepSchedule::constant(0.1), 1, 1, 1);
  rc.epochs = 0;
  CHECK_THROWS_AS(run(p, rc), ConfigError);
  rc.epochs = 1;
  rc.x0 = vec({1.0, 2.0});
  CHECK_THROWS_AS(run(p, rc), ConfigError);
  rc.x0 = vec({std::nan("")});
  CHECK_THROWS_AS(run(p, rc), ConfigError);
  rc.x0 = vec({1.0});
  rc.ifo_budget = 0;
  CHECK_THROWS_AS(run(p, rc), ConfigError);
}

TEST_CASE("divergence carries the finite part of the trace") {
  const auto p = two_parabolas();
  auto rc = base_config(p, EstimatorSpec::scaled_svrg(), StepSchedule::constant(1e3), 200, 4, 1);
  try {
    run(p, rc);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.delta() > 0);
    for (const auto& rec : e.trace()) CHECK(std::isfinite(rec.grad_sq));
    CHECK(static_cast<Index>(e.trace().size()) < rc.epochs);
  }
}

TEST_CASE("IFO budget truncates with a flag") {
  const auto p = make_problem(sigmoid(10, 2, 1));
  auto rc = base_config(*p, EstimatorSpec::scaled_svrg(), StepSchedule::constant(0.1), 50, 5, 1);
  rc.ifo_budget = 57;  // two epochs cost 40, the third affords n and three steps
  const auto r = run(*p, rc);
  CHECK(r.truncated);
  CHECK(r.ledger.optimization <= 57);
  CHECK(r.ledger.optimization == 40 + 10 + 2 * 3);
  CHECK(r.trace.size() == 3);
  CHECK(r.trace.back().cum_ifo == 56);
}

TEST_CASE("epsilon stops early") {
  const auto p = two_parabolas();
  auto rc = base_config(p, EstimatorSpec::scaled_svrg(), StepSchedule::constant(0.1), 500, 2, 7);
  rc.epsilon = 1e-4;
  const auto r = run(p, rc);
  CHECK(r.converged);
  CHECK(r.trace.back().grad_sq <= 1e-4);
  CHECK(static_cast<Index>(r.trace.size()) < 500);
}

TEST_CASE("output policies") {
  std::vector<TraceRecord> trace(3);
  trace[0].grad_sq = 9;
  trace[1].grad_sq = 1;
  trace[2].grad_sq = 4;
  for (std::size_t k = 0; k < 3; ++k) trace[k].epoch = static_cast<Index>(k + 1);
  const std::vector<Vector> snaps{vec({9.0}), vec({1.0}), vec({4.0})};
  CounterRng rng(0);
  CHECK(select_output<double>(trace, snaps, OutputPolicy::BestSnapshotByGradNorm, rng)(0) == 1.0);
  CHECK(select_output<double>(trace, snaps, OutputPolicy::LastSnapshot, rng)(0) == 4.0);
  std::vector<int> hits(3, 0);
  for (int k = 0; k < 300; ++k)
    ++hits[static_cast<std::size_t>(select_output_index<double>(trace, OutputPolicy::UniformRandomSnapshot, rng))];
  for (int h : hits) CHECK(h > 50);

  const std::vector<TraceRecord> one(trace.begin(), trace.begin() + 1);
  const std::vector<Vector> one_snap{vec({2.0})};
  for (auto policy : {OutputPolicy::LastSnapshot, OutputPolicy::BestSnapshotByGradNorm,
                      OutputPolicy::UniformRandomSnapshot})
    CHECK(select_output<double>(one, one_snap, policy, rng)(0) == 2.0);
  CHECK_THROWS_AS(select_output_index<double>({}, OutputPolicy::LastSnapshot, rng), ContractError);
}

TEST_CASE("best output equals last on a decreasing trace") {
  const auto p = two_parabolas();
  auto rc = base_config(p, EstimatorSpec::scaled_svrg(), StepSchedule::constant(0.1), 30, 2, 7);
  rc.x0 = vec({5.0});
  const auto last = run(p, rc);
  rc.output_policy = OutputPolicy::BestSnapshotByGradNorm;
  const auto best = run(p, rc);
  bool decreasing = true;
  for (std::size_t k = 1; k < last.trace.size(); ++k)
    decreasing = decreasing && last.trace[k].grad_sq < last.trace[k - 1].grad_sq;
  REQUIRE(decreasing);
  CHECK(best.x == last.x);
  CHECK(best.output_epoch == 30);
}

TEST_CASE("default inner lengths") {
  CHECK(default_inner_length(InnerLengthVariant::IsvrgPlus, 32, 1, 2, 0.2) == 32);
  CHECK(default_inner_length(InnerLengthVariant::Unbiased, 32, 1, 2, 0.2, 0.0) == 96);
  CHECK(default_inner_length(InnerLengthVariant::Biased, 16, 1, 2, 0.2, 0.5) == 9);
  CHECK(default_inner_length(InnerLengthVariant::Svrg, 32, 1, 2, 0.2) == 2);  // 9 * 32^0.1 / 5
  CHECK(default_inner_length(InnerLengthVariant::IsvrgPlus, 1, 1, 2, 0.2) == 1);
  CHECK_THROWS_AS(default_inner_length(InnerLengthVariant::Biased, 16, 1, 2, 0.2, 1.0), ConfigError);
  CHECK_THROWS_AS(default_inner_length(InnerLengthVariant::Unbiased, 16, 1, 2, 0.2, 1.0),
                  ConfigError);
}
