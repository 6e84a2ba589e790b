"""Random small ILP models shared by the optimiser tests and the acceptance suite."""

from fractions import Fraction

import numpy as np

from faasorch.domain import FunctionVersion, ResourcePrediction
from faasorch.optimizer import DemandClass, IlpModel, VersionTerm


def random_model(rng: np.random.Generator) -> IlpModel:
    """<=4 versions, <=3 classes, demand <=20, every x bounded by <=5 through capacity.

    Coefficients are multiples of 1/4 so distinct objective values differ by
    far more than the solver's float tolerance.
    """
    n_v = int(rng.integers(1, 5))
    n_c = int(rng.integers(0, 4))
    mems = sorted(rng.choice(np.arange(1, 17) * 128, size=n_v, replace=False).tolist())
    versions = []
    for m in mems:
        v = FunctionVersion("f", int(m), int(m) // 2)
        versions.append(VersionTerm(v, cost=float(Fraction(int(rng.integers(0, 13)), 4)),
                                    kappa=int(rng.integers(1, 11)), lower=int(rng.random() < 0.2),
                                    upper=int(rng.integers(1, 6)), live=int(rng.integers(0, 4))))
    classes = []
    for r in range(n_c):
        req_mem = int(rng.choice(np.arange(1, 17) * 128))
        classes.append(DemandClass(f"c{r}", "f", ResourcePrediction(req_mem, req_mem // 2),
                                   demand=int(rng.integers(0, 21)),
                                   penalty=float(Fraction(int(rng.integers(0, 9)), 4)),
                                   utility=float(Fraction(int(rng.integers(0, 9)), 4))))
    max_mem = max(mems)
    cap_mem = int(rng.integers(max_mem, 5 * max_mem + 1))
    cap_cpu = int(rng.integers(max_mem // 2, 5 * max_mem // 2 + 1))
    cs = rng.random() < 0.3
    return IlpModel(versions, classes, cap_cpu, cap_mem,
                    alpha=1.0, beta=float(rng.integers(1, 3)), gamma=float(rng.integers(0, 3)),
                    cs_weight=1.0 if cs else 0.0, cs_penalty=0.5 if cs else 0.0)
