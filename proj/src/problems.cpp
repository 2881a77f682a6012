#include "isvrg/problems.hpp"

#include <algorithm>
#include <cmath>

#include "isvrg/rng.hpp"

namespace isvrg {

namespace {

double logistic(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

Eigen::MatrixXd gaussian_matrix(CounterRng rng, Index rows, Index cols, double scale) {
  Eigen::MatrixXd m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = scale * rng.normal();
  return m;
}

Vector gaussian_vector(CounterRng rng, Index size, double scale) {
  Vector v(size);
  for (Index i = 0; i < size; ++i) v(i) = scale * rng.normal();
  return v;
}

std::shared_ptr<const Problem> make_quadratic(const ProblemRecipe& r) {
  const CounterRng root(r.seed);
  CounterRng spectra = root.substream(1);
  std::vector<Eigen::MatrixXd> curvatures;
  std::vector<Vector> centers;
  curvatures.reserve(static_cast<std::size_t>(r.n));
  centers.reserve(static_cast<std::size_t>(r.n));
  for (Index i = 0; i < r.n; ++i) {
    const Eigen::MatrixXd g =
        gaussian_matrix(root.substream(100 + 2 * static_cast<std::uint64_t>(i)), r.d, r.d, 1.0);
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
    Vector eig(r.d);
    for (Index j = 0; j < r.d; ++j) eig(j) = spectra.uniform(0.5, 1.0) * r.lipschitz_target;
    // component 1 attains the target exactly so L is tight
    if (i == 0) eig(0) = r.lipschitz_target;
    Eigen::MatrixXd a = q * eig.asDiagonal() * q.transpose();
    curvatures.emplace_back(0.5 * (a + a.transpose()));
    centers.push_back(
        gaussian_vector(root.substream(101 + 2 * static_cast<std::uint64_t>(i)), r.d, r.data_scale));
  }
  return std::make_shared<QuadraticSum>(std::move(curvatures), std::move(centers));
}

struct ClassificationData {
  Eigen::MatrixXd features;
  Vector margins;  // a_i' w* + noise
  Vector planted;
};

ClassificationData planted_margins(const ProblemRecipe& r) {
  const CounterRng root(r.seed);
  ClassificationData data;
  data.features = gaussian_matrix(root.substream(1), r.n, r.d, r.data_scale);
  data.planted = gaussian_vector(root.substream(2), r.d, 2.0 / std::sqrt(static_cast<double>(r.d)));
  data.margins = data.features * data.planted +
                 gaussian_vector(root.substream(3), r.n, r.label_noise);
  return data;
}

std::shared_ptr<const Problem> make_sigmoid(const ProblemRecipe& r) {
  auto data = planted_margins(r);
  Vector labels = (data.margins.array() > 0.0).cast<double>();
  auto p = std::make_shared<SigmoidRegression>(std::move(data.features), std::move(labels));
  p->set_planted(std::move(data.planted));
  return p;
}

std::shared_ptr<const Problem> make_logistic(const ProblemRecipe& r) {
  auto data = planted_margins(r);
  Vector labels = data.margins.unaryExpr([](double m) { return m > 0.0 ? 1.0 : -1.0; });
  auto p = std::make_shared<RegularizedLogistic>(std::move(data.features), std::move(labels),
                                                 r.regularizer);
  p->set_planted(std::move(data.planted));
  return p;
}

std::shared_ptr<const Problem> make_mlp(const ProblemRecipe& r) {
  const CounterRng root(r.seed);
  const Index h = r.hidden;
  const Index p = r.d;
  Eigen::MatrixXd inputs = gaussian_matrix(root.substream(1), r.n, p, r.data_scale);

  Vector planted(TinyMlp::parameter_dim(p, h));
  planted.head(h * p) = gaussian_vector(root.substream(2), h * p, 1.0 / std::sqrt(double(p)));
  planted.segment(h * p, h) = gaussian_vector(root.substream(3), h, 0.1);
  planted.segment(h * p + h, h) = gaussian_vector(root.substream(4), h, 1.0 / std::sqrt(double(h)));
  planted(h * p + 2 * h) = 0.0;

  // Targets come from the planted network itself plus noise.
  TinyMlp teacher(inputs, Vector::Zero(r.n), h);
  Vector targets(r.n);
  const Vector noise = gaussian_vector(root.substream(5), r.n, r.label_noise);
  for (Index i = 0; i < r.n; ++i) targets(i) = teacher.predict(i, planted) + noise(i);

  auto problem = std::make_shared<TinyMlp>(std::move(inputs), std::move(targets), h);
  problem->set_planted(std::move(planted));
  return problem;
}

}  // namespace

std::string_view family_name(Family family) {
  switch (family) {
    case Family::QuadraticSum: return "quadratic";
    case Family::SigmoidRegression: return "sigmoid";
    case Family::NonconvexRegularizedLogistic: return "logistic";
    case Family::TinyMlp: return "mlp";
  }
  return "unknown";
}

Family parse_family(std::string_view name) {
  if (name == "quadratic" || name == "QuadraticSum") return Family::QuadraticSum;
  if (name == "sigmoid" || name == "SigmoidRegression") return Family::SigmoidRegression;
  if (name == "logistic" || name == "NonconvexRegularizedLogistic")
    return Family::NonconvexRegularizedLogistic;
  if (name == "mlp" || name == "TinyMlp") return Family::TinyMlp;
  throw ConfigError("unknown problem family '" + std::string(name) + "'");
}

void ProblemRecipe::validate() const {
  if (n < 1) throw ConfigError("problem n must be positive");
  if (d < 1) throw ConfigError("problem d must be positive");
  if (!(data_scale > 0) || !std::isfinite(data_scale))
    throw ConfigError("data_scale must be positive");
  if (!(label_noise >= 0) || !std::isfinite(label_noise))
    throw ConfigError("label_noise must be non-negative");
  switch (family) {
    case Family::QuadraticSum:
      if (!(lipschitz_target > 0) || !std::isfinite(lipschitz_target))
        throw ConfigError("lipschitz_target must be positive");
      break;
    case Family::NonconvexRegularizedLogistic:
      if (!(regularizer >= 0) || !std::isfinite(regularizer))
        throw ConfigError("regularizer must be non-negative");
      break;
    case Family::TinyMlp:
      if (hidden < 1) throw ConfigError("hidden width must be positive");
      break;
    case Family::SigmoidRegression:
      break;
  }
}

// ---------------------------------------------------------------------------

QuadraticSum::QuadraticSum(std::vector<Eigen::MatrixXd> curvatures, std::vector<Vector> centers)
    : curvatures_(std::move(curvatures)), centers_(std::move(centers)) {
  if (centers_.empty() || centers_.size() != curvatures_.size())
    throw ContractError("QuadraticSum needs matching, non-empty A_i and b_i");
  dim_ = centers_.front().size();
  if (dim_ < 1) throw ContractError("QuadraticSum needs d >= 1");

  double lipschitz = 0.0;
  Eigen::MatrixXd a_sum = Eigen::MatrixXd::Zero(dim_, dim_);
  Vector ab_sum = Vector::Zero(dim_);
  for (std::size_t i = 0; i < centers_.size(); ++i) {
    const auto& a = curvatures_[i];
    if (a.rows() != dim_ || a.cols() != dim_ || centers_[i].size() != dim_)
      throw ContractError("QuadraticSum component " + std::to_string(i + 1) + " has wrong shape");
    if (!a.isApprox(a.transpose(), 1e-12) && (a - a.transpose()).norm() > 1e-12)
      throw ContractError("QuadraticSum component " + std::to_string(i + 1) + " is not symmetric");
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, eig.eigenvalues().maxCoeff()))
      throw ContractError("QuadraticSum component " + std::to_string(i + 1) + " is indefinite");
    lipschitz = std::max(lipschitz, eig.eigenvalues().maxCoeff());
    a_sum += a;
    ab_sum += a * centers_[i];
  }
  metadata_.lipschitz = lipschitz;

  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> sum_eig(a_sum, Eigen::EigenvaluesOnly);
  if (sum_eig.eigenvalues().minCoeff() > 1e-10 * std::max(1.0, sum_eig.eigenvalues().maxCoeff())) {
    Vector xstar = a_sum.ldlt().solve(ab_sum);
    double f = 0.0;
    for (Index i = 0; i < size(); ++i) f += value(i, xstar);
    metadata_.optimal_value = f / static_cast<double>(size());
    metadata_.minimizer = std::move(xstar);
  }
}

double QuadraticSum::value(Index i, ConstRef x) const {
  const Vector r = x - centers_[static_cast<std::size_t>(i)];
  return 0.5 * r.dot(curvatures_[static_cast<std::size_t>(i)] * r);
}

void QuadraticSum::gradient(Index i, ConstRef x, Ref grad) const {
  const auto k = static_cast<std::size_t>(i);
  grad.noalias() = curvatures_[k] * (x - centers_[k]);
}

// ---------------------------------------------------------------------------

SigmoidRegression::SigmoidRegression(Eigen::MatrixXd features, Vector labels)
    : features_(features.transpose()), labels_(std::move(labels)) {
  if (features_.cols() < 1 || features_.rows() < 1 || labels_.size() != features_.cols())
    throw ContractError("SigmoidRegression needs one label per feature row");
}

double SigmoidRegression::value(Index i, ConstRef x) const {
  const double r = logistic(features_.col(i).dot(x)) - labels_(i);
  return r * r;
}

void SigmoidRegression::gradient(Index i, ConstRef x, Ref grad) const {
  const double s = logistic(features_.col(i).dot(x));
  grad = (2.0 * (s - labels_(i)) * s * (1.0 - s)) * features_.col(i);
}

// ---------------------------------------------------------------------------

RegularizedLogistic::RegularizedLogistic(Eigen::MatrixXd features, Vector labels, double alpha)
    : features_(features.transpose()), labels_(std::move(labels)), alpha_(alpha) {
  if (features_.cols() < 1 || features_.rows() < 1 || labels_.size() != features_.cols())
    throw ContractError("RegularizedLogistic needs one label per feature row");
  if (!(alpha_ >= 0)) throw ContractError("regularizer weight must be non-negative");
}

double RegularizedLogistic::value(Index i, ConstRef x) const {
  const double z = labels_(i) * features_.col(i).dot(x);
  const double reg = (x.array().square() / (1.0 + x.array().square())).sum();
  return softplus(-z) + alpha_ * reg;
}

void RegularizedLogistic::gradient(Index i, ConstRef x, Ref grad) const {
  const double z = labels_(i) * features_.col(i).dot(x);
  const double weight = -labels_(i) * logistic(-z);
  grad = weight * features_.col(i);
  grad.array() += alpha_ * 2.0 * x.array() / (1.0 + x.array().square()).square();
}

// ---------------------------------------------------------------------------

TinyMlp::TinyMlp(Eigen::MatrixXd inputs, Vector targets, Index hidden)
    : inputs_(inputs.transpose()), targets_(std::move(targets)), hidden_(hidden) {
  if (hidden_ < 1) throw ConfigError("hidden width must be positive");
  if (inputs_.cols() < 1 || inputs_.rows() < 1 || targets_.size() != inputs_.cols())
    throw ContractError("TinyMlp needs one target per input row");
}

double TinyMlp::predict(Index i, ConstRef x) const {
  const Index h = hidden_;
  const Index p = inputs_.rows();
  const Eigen::Map<const Eigen::MatrixXd> w1(x.data(), h, p);
  const Vector act = (w1 * inputs_.col(i) + x.segment(h * p, h)).array().tanh();
  return x.segment(h * p + h, h).dot(act) + x(h * p + 2 * h);
}

double TinyMlp::value(Index i, ConstRef x) const {
  const double r = predict(i, x) - targets_(i);
  return 0.5 * r * r;
}

void TinyMlp::gradient(Index i, ConstRef x, Ref grad) const {
  const Index h = hidden_;
  const Index p = inputs_.rows();
  const Eigen::Map<const Eigen::MatrixXd> w1(x.data(), h, p);
  const auto w2 = x.segment(h * p + h, h);
  const Vector act = (w1 * inputs_.col(i) + x.segment(h * p, h)).array().tanh();
  const double r = w2.dot(act) + x(h * p + 2 * h) - targets_(i);
  const Vector delta = (r * w2.array() * (1.0 - act.array().square())).matrix();

  Eigen::Map<Eigen::MatrixXd>(grad.data(), h, p).noalias() = delta * inputs_.col(i).transpose();
  grad.segment(h * p, h) = delta;
  grad.segment(h * p + h, h) = r * act;
  grad(h * p + 2 * h) = r;
}

// ---------------------------------------------------------------------------

std::shared_ptr<const Problem> make_problem(const ProblemRecipe& recipe) {
  recipe.validate();
  switch (recipe.family) {
    case Family::QuadraticSum: return make_quadratic(recipe);
    case Family::SigmoidRegression: return make_sigmoid(recipe);
    case Family::NonconvexRegularizedLogistic: return make_logistic(recipe);
    case Family::TinyMlp: return make_mlp(recipe);
  }
  throw ConfigError("unknown problem family");
}

double estimate_lipschitz(const Problem& problem, int num_pairs, double radius,
                          std::uint64_t seed) {
  if (num_pairs < 1) throw ContractError("estimate_lipschitz needs num_pairs >= 1");
  if (!(radius > 0)) throw ContractError("estimate_lipschitz needs radius > 0");
  const Index d = problem.dim();
  CounterRng rng(seed);
  Vector x(d), y(d), gx(d), gy(d);
  double best = 0.0;
  for (int k = 0; k < num_pairs; ++k) {
    const auto i = static_cast<Index>(rng.index(static_cast<std::uint64_t>(problem.size())));
    for (Index j = 0; j < d; ++j) x(j) = rng.uniform(-radius, radius);
    double gap = 0.0;
    do {
      for (Index j = 0; j < d; ++j) y(j) = rng.uniform(-radius, radius);
      gap = (x - y).norm();
    } while (gap == 0.0);
    problem.gradient(i, x, gx);
    problem.gradient(i, y, gy);
    best = std::max(best, (gx - gy).norm() / gap);
  }
  return best;
}

double estimate_sigma(const Problem& problem, std::span<const Vector> points) {
  if (points.empty()) throw ContractError("estimate_sigma needs at least one point");
  Vector g(problem.dim());
  double best = 0.0;
  for (const auto& x : points) {
    require_dim(x, problem.dim(), "point");
    for (Index i = 0; i < problem.size(); ++i) {
      problem.gradient(i, x, g);
      best = std::max(best, g.norm());
    }
  }
  return best;
}

double finite_diff_check(const Problem& problem, const Vector& x, double h) {
  if (!(h > 0)) throw ContractError("finite_diff_check needs h > 0");
  require_dim(x, problem.dim(), "x");
  const Index d = problem.dim();
  Vector g(d);
  Vector probe = x;
  double worst = 0.0;
  for (Index i = 0; i < problem.size(); ++i) {
    problem.gradient(i, x, g);
    for (Index j = 0; j < d; ++j) {
      probe(j) = x(j) + h;
      const double up = problem.value(i, probe);
      probe(j) = x(j) - h;
      const double down = problem.value(i, probe);
      probe(j) = x(j);
      const double numeric = (up - down) / (2.0 * h);
      worst = std::max(worst, std::abs(g(j) - numeric) / std::max(1.0, std::abs(g(j))));
    }
  }
  return worst;
}

}  // namespace isvrg
