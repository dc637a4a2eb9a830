class SubblockSchemes:
    PER_GRAIN = 'per-grain'
    FIXED_SIZE = 'fixed-size'

    ALL = (PER_GRAIN, FIXED_SIZE)


class Phases:
    ADAPTATION = 'adaptation'
    BURN_IN = 'burn_in'
    SAMPLING = 'sampling'

    ALL = (ADAPTATION, BURN_IN, SAMPLING)


DF_PROPOSAL = 'df'

# Haario et al. shape scaling for a d-dimensional random walk.
HAARIO_SCALE = 2.38 ** 2
