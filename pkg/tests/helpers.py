import numpy as np

from riskstop import RiskSpec

ORACLE_SPECS = (RiskSpec.expectation(), RiskSpec.cvar(0.5), RiskSpec.mean_cvar(0.5, 0.3),
                RiskSpec.mean_semideviation(0.5))


def small_dims(seed):
    rng = np.random.default_rng(seed)
    return int(rng.integers(1, 5)), int(rng.integers(1, 4))
