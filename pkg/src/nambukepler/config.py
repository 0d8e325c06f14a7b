from dataclasses import dataclass

import numpy as np

SCHEMA_VERSION = 1

# Every random draw in the package comes from this bit generator.
PRNG_ALGORITHM = "PCG64"


@dataclass(frozen=True)
class Tolerances:
    algebra: float = 1e-13
    identity: float = 1e-12
    bracket: float = 1e-10
    flow: float = 1e-8
    drift: float = 1e-8
    closure: float = 1e-6
    reversal: float = 1e-5
    gradient: float = 1e-6
    spectrum_cluster: float = 1e-9
    spectrum_match: float = 1e-10
    hermitean: float = 1e-12
    jordan_kurosh_eps: float = 1e-8


@dataclass(frozen=True)
class Thresholds:
    # |R3 + Lcal3| and |R3 * Lcal3| below this make the Nambu forms undefined
    degeneracy: float = 1e-6
    zero_angular_momentum: float = 1e-12
    sampler_rejection: float = 1e-3
    # both sides of a quantum law below this fraction of the argument scale are round-off
    vanishing_law: float = 1e-8


@dataclass(frozen=True)
class IntegratorSettings:
    method: str = "DOP853"
    rtol: float = 1e-10
    atol_factor: float = 1e-2


TOLERANCES = Tolerances()
THRESHOLDS = Thresholds()
INTEGRATOR = IntegratorSettings()


def make_rng(seed: int) -> np.random.Generator:
    """
    Build the package's random generator.
    :param seed: 64-bit integer seed.
    :return: numpy Generator backed by PCG64.
    """
    return np.random.Generator(np.random.PCG64(seed))
