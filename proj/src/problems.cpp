#include "perturbode/problems.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace perturbode {

QuadraticProblem::QuadraticProblem(Vector eigenvalues) : eigenvalues_(std::move(eigenvalues)) {
  if (eigenvalues_.size() < 1) {
    throw UsageError("quadratic: at least one eigenvalue required");
  }
  std::sort(eigenvalues_.begin(), eigenvalues_.end());
  if (!(eigenvalues_[0] > 0.0)) {
    throw UsageError("quadratic: eigenvalues must be positive");
  }
}

QuadraticProblem::QuadraticProblem(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols() || a.rows() < 1) {
    throw UsageError("quadratic: matrix must be square");
  }
  if (!a.isApprox(a.transpose(), 1e-12)) {
    throw UsageError("quadratic: matrix must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  eigenvalues_ = es.eigenvalues();  // ascending
  basis_ = es.eigenvectors();
  if (!(eigenvalues_[0] > 0.0)) {
    throw UsageError("quadratic: matrix must be positive definite");
  }
}

Vector QuadraticProblem::apply(const Vector& x) const {
  if (basis_) {
    return *basis_ * (eigenvalues_.cwiseProduct(basis_->transpose() * x));
  }
  return eigenvalues_.cwiseProduct(x);
}

double QuadraticProblem::value(const Vector& x) const {
  require_dimension(x);
  return 0.5 * x.dot(apply(x));
}

Vector QuadraticProblem::gradient(const Vector& x) const {
  require_dimension(x);
  return apply(x);
}

Vector QuadraticProblem::hessian_vector(const Vector& x, const Vector& v) const {
  require_dimension(x);
  require_dimension(v);
  return apply(v);
}

Vector QuadraticProblem::prox(const Vector& y, double beta) const {
  require_dimension(y);
  const Vector scale = (1.0 + beta * eigenvalues_.array()).inverse().matrix();
  if (basis_) {
    return *basis_ * scale.cwiseProduct(basis_->transpose() * y);
  }
  return scale.cwiseProduct(y);
}

namespace {

double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

// log(1 + exp(-t)) without overflow for large |t|
double log1p_exp_neg(double t) {
  if (t >= 0.0) {
    return std::log1p(std::exp(-t));
  }
  return -t + std::log1p(std::exp(t));
}

}  // namespace

LogisticProblem::LogisticProblem(std::vector<LogisticSample> samples, Eigen::Index dimension,
                                 double reg)
    : samples_(std::move(samples)), dimension_(dimension), reg_(reg) {
  if (dimension_ < 1) {
    throw UsageError("logistic: dimension must be at least 1");
  }
  if (samples_.empty()) {
    throw UsageError("logistic: no samples");
  }
  if (!(reg_ > 0.0)) {
    throw UsageError("logistic: regularization must be positive");
  }
  double sq_sum = 0.0;
  for (const auto& sample : samples_) {
    if (sample.label != 1.0 && sample.label != -1.0) {
      throw UsageError("logistic: labels must be normalized to +1/-1");
    }
    if (sample.indices.size() != sample.values.size()) {
      throw UsageError("logistic: index/value length mismatch");
    }
    for (double v : sample.values) {
      sq_sum += v * v;
    }
  }
  lipschitz_ = sq_sum / (4.0 * static_cast<double>(samples_.size())) + reg_;
}

double LogisticProblem::value(const Vector& x) const {
  require_dimension(x);
  double loss = 0.0;
  for (const auto& sample : samples_) {
    double dot = 0.0;
    for (std::size_t j = 0; j < sample.indices.size(); ++j) {
      dot += sample.values[j] * x[sample.indices[j]];
    }
    loss += log1p_exp_neg(sample.label * dot);
  }
  return loss / static_cast<double>(samples_.size()) + 0.5 * reg_ * x.squaredNorm();
}

Vector LogisticProblem::gradient(const Vector& x) const {
  require_dimension(x);
  Vector grad = reg_ * x;
  const double inv_m = 1.0 / static_cast<double>(samples_.size());
  for (const auto& sample : samples_) {
    double dot = 0.0;
    for (std::size_t j = 0; j < sample.indices.size(); ++j) {
      dot += sample.values[j] * x[sample.indices[j]];
    }
    const double coeff = -sample.label * sigmoid(-sample.label * dot) * inv_m;
    for (std::size_t j = 0; j < sample.indices.size(); ++j) {
      grad[sample.indices[j]] += coeff * sample.values[j];
    }
  }
  return grad;
}

Vector LogisticProblem::hessian_vector(const Vector& x, const Vector& v) const {
  require_dimension(x);
  require_dimension(v);
  Vector out = reg_ * v;
  const double inv_m = 1.0 / static_cast<double>(samples_.size());
  for (const auto& sample : samples_) {
    double dot = 0.0;
    double dir = 0.0;
    for (std::size_t j = 0; j < sample.indices.size(); ++j) {
      dot += sample.values[j] * x[sample.indices[j]];
      dir += sample.values[j] * v[sample.indices[j]];
    }
    const double sig = sigmoid(sample.label * dot);
    const double coeff = sig * (1.0 - sig) * dir * inv_m;
    for (std::size_t j = 0; j < sample.indices.size(); ++j) {
      out[sample.indices[j]] += coeff * sample.values[j];
    }
  }
  return out;
}

namespace {

double map_label(double raw, LabelPolicy policy, long line) {
  switch (policy) {
    case LabelPolicy::sign:
      return raw > 0.0 ? 1.0 : -1.0;
    case LabelPolicy::strict:
      if (raw == 1.0 || raw == -1.0) {
        return raw;
      }
      throw ParseError("label " + std::to_string(raw) + " is not +1/-1", line);
  }
  throw UsageError("unknown label policy");
}

}  // namespace

LogisticProblem parse_libsvm(const std::string& text, double reg, LabelPolicy policy) {
  std::vector<LogisticSample> samples;
  Eigen::Index max_index = 0;
  std::istringstream stream(text);
  std::string raw_line;
  long line_no = 0;
  while (std::getline(stream, raw_line)) {
    ++line_no;
    const auto hash = raw_line.find('#');
    if (hash != std::string::npos) {
      raw_line.erase(hash);
    }
    std::istringstream line(raw_line);
    double raw_label;
    if (!(line >> raw_label)) {
      continue;  // blank / comment-only line
    }
    LogisticSample sample;
    sample.label = map_label(raw_label, policy, line_no);
    std::string token;
    while (line >> token) {
      const auto colon = token.find(':');
      if (colon == std::string::npos) {
        throw ParseError("expected index:value, got '" + token + "'", line_no);
      }
      std::size_t used = 0;
      long index = 0;
      double value = 0.0;
      try {
        index = std::stol(token.substr(0, colon), &used);
        if (used != colon) {
          throw std::invalid_argument("");
        }
        const std::string value_text = token.substr(colon + 1);
        value = std::stod(value_text, &used);
        if (used != value_text.size()) {
          throw std::invalid_argument("");
        }
      } catch (const std::logic_error&) {
        throw ParseError("malformed feature '" + token + "'", line_no);
      }
      if (index < 1) {
        throw ParseError("feature indices are 1-based, got " + std::to_string(index), line_no);
      }
      if (!sample.indices.empty() && index - 1 <= sample.indices.back()) {
        throw ParseError("feature indices must be strictly increasing", line_no);
      }
      sample.indices.push_back(index - 1);
      sample.values.push_back(value);
      max_index = std::max<Eigen::Index>(max_index, index);
    }
    samples.push_back(std::move(sample));
  }
  if (samples.empty()) {
    throw UsageError("libsvm input holds no samples");
  }
  return LogisticProblem(std::move(samples), std::max<Eigen::Index>(max_index, 1), reg);
}

LogisticProblem load_libsvm(const std::string& path, double reg, LabelPolicy policy) {
  std::ifstream file(path);
  if (!file) {
    throw UsageError("cannot open " + path);
  }
  std::ostringstream buffer;
  buffer << file.rdbuf();
  return parse_libsvm(buffer.str(), reg, policy);
}

std::string to_libsvm(const LogisticProblem& problem) {
  std::string out;
  char buf[64];
  for (const auto& sample : problem.samples()) {
    out += sample.label > 0 ? "+1" : "-1";
    for (std::size_t j = 0; j < sample.indices.size(); ++j) {
      std::snprintf(buf, sizeof(buf), " %lld:%.17g",
                    static_cast<long long>(sample.indices[j] + 1), sample.values[j]);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

namespace {

// splitmix64; fixed recipe so synthetic data is identical everywhere.
std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double uniform_pm1(std::uint64_t& state) {
  return 2.0 * (static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53) - 1.0;
}

}  // namespace

LogisticProblem synth_logistic(Eigen::Index n, Eigen::Index m, double reg, std::uint64_t seed) {
  if (n < 1 || m < 1) {
    throw UsageError("synth_logistic: n and m must be at least 1");
  }
  std::uint64_t state = seed * 0x9e3779b97f4a7c15ULL + 0x2545f4914f6cdd1dULL;
  Vector planted(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    planted[j] = uniform_pm1(state);
  }
  std::vector<LogisticSample> samples(static_cast<std::size_t>(m));
  for (auto& sample : samples) {
    sample.indices.resize(static_cast<std::size_t>(n));
    sample.values.resize(static_cast<std::size_t>(n));
    double dot = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double v = uniform_pm1(state);
      sample.indices[static_cast<std::size_t>(j)] = j;
      sample.values[static_cast<std::size_t>(j)] = v;
      dot += v * planted[j];
    }
    sample.label = dot >= 0.0 ? 1.0 : -1.0;
  }
  return LogisticProblem(std::move(samples), n, reg);
}

ReferenceSolution reference_solve(const Objective& f, double tol, long max_iterations) {
  if (!(tol > 0.0)) {
    throw UsageError("reference_solve: tol must be positive");
  }
  ReferenceSolution ref;
  if (f.has_known_minimizer()) {
    ref.x_star = f.known_minimizer();
    ref.f_star = f.value(ref.x_star);
    ref.certified_grad_norm = f.gradient(ref.x_star).norm();
    return ref;
  }
  const double s = 1.0 / f.lipschitz();
  const double root = std::sqrt(f.mu() * s);
  const double momentum = (1.0 - root) / (1.0 + root);
  Vector x_prev = Vector::Zero(f.dimension());
  Vector x = x_prev;
  for (long k = 0; k < max_iterations; ++k) {
    const Vector grad = f.gradient(x);
    const double norm = grad.norm();
    if (norm < tol) {
      ref.x_star = x;
      ref.f_star = f.value(x);
      ref.certified_grad_norm = norm;
      return ref;
    }
    const Vector y = x + momentum * (x - x_prev);
    Vector x_next = y - s * f.gradient(y);
    x_prev = std::move(x);
    x = std::move(x_next);
  }
  throw NumericalError("reference_solve: budget of " + std::to_string(max_iterations) +
                           " iterations exhausted",
                       f.gradient(x).norm());
}

}  // namespace perturbode
