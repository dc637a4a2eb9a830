class Baselines:
    CONSTANT = 'constant'
    GRAIN_MEANS = 'grain-means'

    ALL = (CONSTANT, GRAIN_MEANS)


SUMMARY_QUANTILES = (0.05, 0.5, 0.95)
DEFAULT_PROFILE_BINS = 10
