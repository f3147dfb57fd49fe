#include "rejuv/design.hpp"

namespace rejuv {

Design build_design(const DesignInputs& in) {
  in.quad.validate();
  in.clamp.validate();
  if (in.q_safety.size() != 12 || in.r_safety.size() != 4 ||
      in.q_tracking.size() != 12 || in.r_tracking.size() != 4) {
    throw ConfigError("controller weights must be 12 state / 4 input diagonals");
  }
  if (!(in.eps_tc > 0.0) || !(in.eps_sc > in.eps_tc) || !(in.eps_sc < 1.0)) {
    throw ConfigError("levels must satisfy 0 < eps_tc < eps_sc < 1");
  }

  Design d;
  const Linearization lin = linearize_hover(in.quad);
  d.a = lin.a;
  d.b = lin.b;

  const Wrench u_ff{in.quad.hover_thrust(), 0.0, 0.0, 0.0};
  const LqrResult safety =
      lqr_gain(d.a, d.b, Mat(in.q_safety.asDiagonal()),
               Mat(in.r_safety.asDiagonal()));
  const LqrResult tracking =
      lqr_gain(d.a, d.b, Mat(in.q_tracking.asDiagonal()),
               Mat(in.r_tracking.asDiagonal()));

  d.constraint = normalize_constraints(in.state_bounds, Vec::Zero(12));
  d.input_set = InputSet(input_set_from_clamp(in.clamp.tc, u_ff.thrust));

  const Mat a_sc = d.a - d.b * safety.k;
  Ellipsoid e_c;
  if (in.shape_t_uc > 0.0) {
    e_c = margin_shaped_ellipsoid(a_sc, d.constraint, d.a, d.b, d.input_set,
                                  in.eps_sc, in.shape_t_uc);
  } else {
    InvariantEllipsoidOptions opts;
    opts.volume_ascent_iters = in.volume_ascent_iters;
    e_c = invariant_ellipsoid(a_sc, d.constraint, opts);
  }
  d.p = e_c.shape;
  d.log_det_p_inv = log_det_inverse(d.p);

  d.safety = {safety.k, u_ff, d.p};
  d.tracking = {tracking.k, u_ff, d.p};
  d.eps_sc = in.eps_sc;
  d.eps_tc = in.eps_tc;
  return d;
}

}  // namespace rejuv
