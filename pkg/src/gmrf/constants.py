# Uniform prior support of rho; the transform maps this interval onto the real line.
RHO_PRIOR_LOWER = -0.4
RHO_PRIOR_UPPER = 1.0

# Names of the transformed coordinates, in order.
ALPHA_NAMES = ('log_phi', 'log_theta_over_kappa', 'probit_kappa', 'probit_rho')

# Symbolic factorizations kept alive at once; one per (graph, backend) in a fit.
SYMBOLIC_CACHE_SIZE = 8
