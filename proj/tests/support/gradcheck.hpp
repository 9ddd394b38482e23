#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "mcgan/nn/layers.hpp"

namespace mcgan::testing {

struct GroupError {
  std::string group;
  std::size_t entries = 0;
  double analytic_norm = 0;
  double numeric_norm = 0;
  double rel_error = 0;  // ||a - n|| / max(||a||, ||n||)
};

/// Group key of a parameter name: "gen/g1/res/0/conv_a/weight" -> "gen/g1/res".
inline std::string param_group(const std::string& name) {
  std::size_t pos = 0;
  for (int i = 0; i < 3 && pos != std::string::npos; ++i) pos = name.find('/', pos + 1);
  std::string head = name.substr(0, pos);
  // Discriminator names have one level less: "disc/stem/conv0/weight" -> "disc/stem".
  if (head.rfind("disc/", 0) == 0) head = head.substr(0, name.find('/', 5));
  return head;
}

/// Central differences against reverse mode for every entry of every
/// parameter. `loss` must rebuild the scalar from the current values.
inline std::vector<GroupError> gradient_check(const nn::ParamList<double>& params,
                                              const std::function<nn::Var<double>()>& loss, double h = 1e-6) {
  for (const auto& p : params) p.var.node()->grad = nn::Tensor<double>();
  nn::backward(loss());
  std::map<std::string, GroupError> groups;
  std::vector<std::string> order;
  for (const auto& p : params) {
    const std::string g = param_group(p.name);
    if (!groups.count(g)) {
      groups[g].group = g;
      order.push_back(g);
    }
    auto& err = groups[g];
    auto& value = p.var.node()->value;
    const auto& grad = p.var.node()->grad;
    double diff2 = 0;
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double analytic = grad.empty() ? 0.0 : grad[i];
      const double saved = value[i];
      double plus = 0;
      double minus = 0;
      {
        nn::NoGradGuard ng;
        value[i] = saved + h;
        plus = loss().item();
        value[i] = saved - h;
        minus = loss().item();
      }
      value[i] = saved;
      const double numeric = (plus - minus) / (2 * h);
      err.analytic_norm += analytic * analytic;
      err.numeric_norm += numeric * numeric;
      diff2 += (analytic - numeric) * (analytic - numeric);
      ++err.entries;
    }
    err.rel_error += diff2;  // accumulated squared difference, finished below
  }
  std::vector<GroupError> out;
  for (const auto& g : order) {
    auto e = groups[g];
    e.analytic_norm = std::sqrt(e.analytic_norm);
    e.numeric_norm = std::sqrt(e.numeric_norm);
    const double denom = std::max(e.analytic_norm, e.numeric_norm);
    e.rel_error = denom > 0 ? std::sqrt(e.rel_error) / denom : 0.0;
    out.push_back(e);
  }
  return out;
}

/// Deterministic weights in [-1, 1] for projecting a tensor to a scalar.
inline nn::Tensor<double> projection(const nn::Shape& shape, std::uint64_t seed) {
  nn::Tensor<double> t(shape);
  std::uint64_t s = seed * 0x9E3779B97F4A7C15ULL + 1;
  for (auto& v : t.values()) {
    s ^= s << 13;
    s ^= s >> 7;
    s ^= s << 17;
    v = static_cast<double>(s % 20001) / 10000.0 - 1.0;
  }
  return t;
}

}  // namespace mcgan::testing
