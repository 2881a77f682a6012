#ifndef ISVRG_PROBLEMS_HPP
#define ISVRG_PROBLEMS_HPP

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "isvrg/core.hpp"

namespace isvrg {

enum class Family { QuadraticSum, SigmoidRegression, NonconvexRegularizedLogistic, TinyMlp };

std::string_view family_name(Family family);
Family parse_family(std::string_view name);

/// Everything needed to regenerate a built-in problem bit for bit.
///
/// For TinyMlp `d` is the number of input features; the parameter
/// dimension is hidden * (d + 2) + 1.
struct ProblemRecipe {
  Family family = Family::QuadraticSum;
  Index n = 1;
  Index d = 1;
  std::uint64_t seed = 0;
  double regularizer = 0.1;  // NonconvexRegularizedLogistic
  Index hidden = 4;          // TinyMlp
  double data_scale = 1.0;   // feature standard deviation
  double label_noise = 0.5;  // noise added before thresholding / to targets
  double lipschitz_target = 1.0;  // QuadraticSum

  void validate() const;
};

/// f_i(x) = 1/2 (x - b_i)' A_i (x - b_i) with symmetric PSD A_i.
class QuadraticSum final : public Problem {
 public:
  QuadraticSum(std::vector<Eigen::MatrixXd> curvatures, std::vector<Vector> centers);

  Index size() const override { return static_cast<Index>(centers_.size()); }
  Index dim() const override { return dim_; }
  double value(Index i, ConstRef x) const override;
  void gradient(Index i, ConstRef x, Ref grad) const override;
  using Problem::gradient;

 private:
  Index dim_;
  std::vector<Eigen::MatrixXd> curvatures_;
  std::vector<Vector> centers_;
};

/// f_i(x) = (s(a_i' x) - y_i)^2, s the logistic function, y_i in {0, 1}.
class SigmoidRegression final : public Problem {
 public:
  SigmoidRegression(Eigen::MatrixXd features, Vector labels);

  Index size() const override { return features_.cols(); }
  Index dim() const override { return features_.rows(); }
  double value(Index i, ConstRef x) const override;
  void gradient(Index i, ConstRef x, Ref grad) const override;
  using Problem::gradient;

  void set_planted(Vector planted) { metadata_.planted = std::move(planted); }

 private:
  Eigen::MatrixXd features_;  // d x n, one sample per column
  Vector labels_;
};

/// Logistic loss plus alpha * sum_j x_j^2 / (1 + x_j^2); labels in {-1, +1}.
class RegularizedLogistic final : public Problem {
 public:
  RegularizedLogistic(Eigen::MatrixXd features, Vector labels, double alpha);

  Index size() const override { return features_.cols(); }
  Index dim() const override { return features_.rows(); }
  double value(Index i, ConstRef x) const override;
  void gradient(Index i, ConstRef x, Ref grad) const override;
  using Problem::gradient;

  void set_planted(Vector planted) { metadata_.planted = std::move(planted); }

 private:
  Eigen::MatrixXd features_;  // d x n
  Vector labels_;
  double alpha_;
};

/// One tanh hidden layer, scalar output, f_i = 1/2 (net(a_i) - y_i)^2.
///
/// Parameter layout: W1 (hidden x inputs, column-major), b1, w2, b2.
class TinyMlp final : public Problem {
 public:
  TinyMlp(Eigen::MatrixXd inputs, Vector targets, Index hidden);

  Index size() const override { return inputs_.cols(); }
  Index dim() const override { return hidden_ * (inputs_.rows() + 2) + 1; }
  double value(Index i, ConstRef x) const override;
  void gradient(Index i, ConstRef x, Ref grad) const override;
  using Problem::gradient;

  static Index parameter_dim(Index inputs, Index hidden) { return hidden * (inputs + 2) + 1; }
  double predict(Index i, ConstRef x) const;
  void set_planted(Vector planted) { metadata_.planted = std::move(planted); }

 private:
  Eigen::MatrixXd inputs_;  // inputs x n
  Vector targets_;
  Index hidden_;
};

/// Builds a built-in problem. Identical recipes give bit-identical problems.
std::shared_ptr<const Problem> make_problem(const ProblemRecipe& recipe);

/// Largest secant slope ||grad f_i(x) - grad f_i(y)|| / ||x - y|| over
/// `num_pairs` random pairs in the cube [-radius, radius]^d. A lower
/// estimate of L; the k-th pair depends only on (seed, k).
double estimate_lipschitz(const Problem& problem, int num_pairs, double radius,
                          std::uint64_t seed);

/// max over points and components of ||grad f_i(x)||.
double estimate_sigma(const Problem& problem, std::span<const Vector> points);

/// Worst relative error between analytic partials and central differences,
/// relative to max(1, |analytic|), over every component and coordinate.
double finite_diff_check(const Problem& problem, const Vector& x, double h);

}  // namespace isvrg

#endif  // ISVRG_PROBLEMS_HPP
