#pragma once

#include <string>

#include "gsheaf/autodiff/ops.hpp"
#include "gsheaf/autodiff/optim.hpp"
#include "gsheaf/sheaf.hpp"

namespace gsheaf {

/// Psi: one hidden ELU layer, tanh output, projected onto a map class.
class RestrictionNetwork {
 public:
  static constexpr double kGeneralRidge = 1e-3;

  RestrictionNetwork() = default;
  /// Registers "<prefix>.w1", ".b1", ".w2", ".b2" as sheaf parameters.
  RestrictionNetwork(ad::ParameterSet& params, const std::string& prefix, int in_dim, int hidden,
                     int d, MapClass cls, Rng& rng);

  int dim() const { return d_; }
  MapClass map_class() const { return cls_; }
  int in_dim() const { return in_dim_; }

  /// Maps (rows, d, d) for per-incidence features (rows, in_dim).
  ad::Var maps(const std::vector<ad::Var>& params, ad::Var features) const;

 private:
  int d_ = 0;
  int in_dim_ = 0;
  MapClass cls_ = MapClass::general;
  int w1_ = -1, b1_ = -1, w2_ = -1, b2_ = -1;
};

/// Values per map for a class: d (diagonal), d(d-1)/2 (orthogonal), d^2 (general).
int map_output_width(MapClass cls, int d);

/// Class projection of raw values (rows, width) in [-1, 1]: diagonal maps,
/// Cayley transforms of skew-symmetric matrices, or reshaped matrices plus
/// 1e-3 I.
ad::Var project_maps(ad::Var raw, MapClass cls, int d);

/// Standardized rows [mu_v || mu_u || det S_v || det S_u]; row 2e has
/// (v, u) = (lower, upper) endpoint of edge e, row 2e + 1 the reverse.
ad::Tensor incidence_features(const Graph& g, const GaussianField& field);

RestrictionMapSet learn_restriction_maps(const RestrictionNetwork& psi,
                                         const ad::ParameterSet& params,
                                         const GaussianField& field, const Graph& g);

}  // namespace gsheaf
