#include "cppf/optimizer.hpp"

#include <cmath>

#include "cppf/error.hpp"

namespace cppf {

Adam::Adam(const MaskedLm& model, AdamSettings settings) : s_(settings) {
  for (const auto& p : model.parameters()) {
    m_.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
    v_.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
  }
}

void Adam::step(MaskedLm& model, const GradientSet& grads, double lr) {
  auto& params = model.parameters();
  if (grads.size() != params.size() || m_.size() != params.size()) {
    throw Error("optimizer: gradient set does not match the model");
  }
  if (!grads.all_finite()) throw NumericError("optimizer: non-finite gradient");
  ++t_;
  const double bc1 = 1.0 - std::pow(s_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(s_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Matrix& g = grads[i];
    m_[i] = s_.beta1 * m_[i] + (1.0 - s_.beta1) * g;
    v_[i] = s_.beta2 * v_[i] + (1.0 - s_.beta2) * g.cwiseProduct(g);
    if (lr == 0.0) continue;
    params[i].value.array() -=
        lr * (m_[i].array() / bc1) / ((v_[i].array() / bc2).sqrt() + s_.eps);
  }
  model.bump_version();
}

}  // namespace cppf
