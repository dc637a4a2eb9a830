import numpy as np

# Recorded in every manifest; traces are only reproducible with the same generator.
BIT_GENERATOR = 'philox'


def make_rng(seed: int) -> np.random.Generator:
    if seed is None:
        raise ValueError("An explicit seed is required")
    return np.random.Generator(np.random.Philox(int(seed)))
