# Closed-form excess-rate bounds
from src.bounds.analytic import (
    BoundPoint,
    bound_point,
    excess_rate_lb,
    excess_rate_lb_per_dim_quadratic,
    figure1_table,
    gaussian_rate_distortion,
    gish_pierce_constant,
    interval_moment,
    nats_to_bits,
    shannon_lower_bound,
    slb_constant,
    tessellating_excess,
    tessellating_rate,
    unit_ball_volume,
    zador_rc_ub_per_dim,
    zador_scalar_rate,
)
