"""Shared constants and helpers for the test suite."""
import numpy as np

from disco.scaleconv import random_network

SQRT2_SCALES = "1,sqrt2,2,2sqrt2"

# Equivariance harness used wherever a sqrt2 basis is compared with another.
HARNESS = dict(num_layers=3, channels=4, extent=2, nonlinearity="relu", seed=1)
HARNESS_IMAGES = dict(count=8, size=48, seed=2)


def rel(a, b):
    return np.linalg.norm(np.asarray(a) - np.asarray(b)) / np.linalg.norm(np.asarray(b))


def harness_net(basis):
    return random_network(basis, **HARNESS)


# Acceptance outcomes, filled in by test_acceptance and printed at the end of the run.
ACCEPTANCE = {}


def record(number, passed, summary):
    ACCEPTANCE[number] = (bool(passed), summary)
    return bool(passed)
