"""Reference values produced by ``oracle.values()`` (mpmath, 30 digits)."""

FROZEN = {
    "sphere_2": 6.283185307179586,
    "sphere_3": 12.566370614359172,
    "sphere_4": 39.47841760435743,
    "sphere_5": 78.95683520871486,
    "ball_0": 1.0,
    "ball_1": 2.0,
    "ball_2": 3.141592653589793,
    "ball_3": 4.188790204786391,
    "ball_4": 4.934802200544679,
    "arc_quarter_origin": 0.25,
    "arc_quarter_03": 0.4527857840028129,
    "green_half_0": 0.6931471805599453,
    "green_06_01": 0.6312717768418579,
    "green_a_x0": 0.5790414211332189,
    "avg_log_half_r1": 0.0,
    "avg_abs2_r05": 0.26,
    "square_log_mean": -1.0611754268825243,
}
