"""Compressive principal component pursuit.

Thin wrapper over the C++ library. Matrices are numpy float64 arrays, supports
are boolean masks and Q-perp bases are lists of m x n arrays. JSON reports are
returned parsed.
"""

import json as _json

from ._cpcp import (  # noqa: F401
    ConfigError,
    CpcpError,
    DegenerateSum,
    Instance,
    IoError,
    NumericalError,
    PremiseViolation,
    RankDeficient,
    Subspace,
    basis_from_jacobians,
    coherence_mu,
    default_lambda,
    gamma_constrained,
    generate,
    golfing_depth,
    golfing_rate,
    lemma_check_names,
    nu_coherence,
    op_norm_product,
    oracle_solve,
    read_bundle,
    singular_values,
    soft_threshold,
    solve_cpcp,
    solve_pcp,
    svt,
    write_bundle,
)
from . import _cpcp


def certify(instance, lam=None, tol=1e-10, schedule_seed=0):
    out = _cpcp.certify(instance, lam, tol, schedule_seed)
    out["report"] = _json.loads(out["report"])
    return out


def check_premises(instance):
    return _json.loads(_cpcp.check_premises(instance))


def run_lemma_check(name, **setup):
    return _json.loads(_cpcp.run_lemma_check(name, **setup))
