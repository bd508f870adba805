"""Random-walk ground truth for hitting and commute times.

Everything here is dense and meant for small graphs: it exists to check
the spectral commute-time formula against an independent route.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import EmbedError, InputError, NumericError

DENSE_CAP = 2000
DEFAULT_STEP_CAP = 10**6
# walks are simulated in fixed-size chunks, each with its own derived seed
_CHUNK = 1024


@dataclass(frozen=True, eq=False)
class WalkModel:
    """Transition matrix ``P = D^-1 W``, stationary law ``pi`` and fundamental matrix ``Z``."""

    transition: np.ndarray
    stationary: np.ndarray
    fundamental: np.ndarray

    @property
    def n_nodes(self):
        return len(self.stationary)

    @property
    def stationary_outer(self):
        """The rank-one matrix whose rows all equal ``pi``."""
        return np.broadcast_to(self.stationary, self.transition.shape)


@dataclass(frozen=True)
class MonteCarloResult:
    mean: float
    stderr: float
    n_completed: int
    n_capped: int


def build_walk_model(G, dense_cap=DENSE_CAP):
    n = G.n_nodes
    if n > dense_cap:
        raise InputError(f"walk oracle is dense; N={n} exceeds the cap of {dense_cap}")
    W = G.weights.toarray()
    d = W.sum(axis=1)
    P = W / d[:, None]
    pi = d / d.sum()
    A = np.eye(n) - P + pi[None, :]
    try:
        lu = scipy.linalg.lu_factor(A, check_finite=True)
        Z = scipy.linalg.lu_solve(lu, np.eye(n))
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericError(f"I - (P - Pi) is singular: {exc} (internal inconsistency)") from None
    if not np.all(np.isfinite(Z)):
        raise NumericError("I - (P - Pi) is singular (internal inconsistency)")
    return WalkModel(P, pi, Z)


def hitting_times(model):
    """Matrix ``H[i, j] = E_i[T_j] = (Z_jj - Z_ij) / pi_j``."""
    Z = model.fundamental
    H = (np.diag(Z)[None, :] - Z) / model.stationary[None, :]
    np.fill_diagonal(H, 0.0)
    return H


def hitting_time(model, i, j):
    if i == j:
        return 0.0
    Z = model.fundamental
    return float((Z[j, j] - Z[i, j]) / model.stationary[j])


def commute_times(model):
    H = hitting_times(model)
    return H + H.T


def verify_one_step(model, H):
    """Largest violation of ``H[i,j] = 1 + sum_{k != j} P[i,k] H[k,j]`` over ``i != j``."""
    P = model.transition
    H = np.asarray(H)
    Hoff = H.copy()
    np.fill_diagonal(Hoff, 0.0)
    # sum over k != j of P[i,k] H[k,j]; H[j,j] is zero so the full product suffices
    resid = H - 1.0 - P @ Hoff
    np.fill_diagonal(resid, 0.0)
    return float(np.max(np.abs(resid)))


def _chunk_seed(seed, chunk):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(chunk)])))


def monte_carlo_hitting(model, i, j, n_walks, seed, step_cap=DEFAULT_STEP_CAP):
    """Empirical first-passage time from ``i`` to ``j``.

    Walks run in chunks of fixed size; chunk ``c`` draws from PCG64 seeded
    with ``SeedSequence([seed, c])``, so results depend only on ``seed``
    and ``n_walks``. Walks still running after ``step_cap`` steps are
    dropped and counted in ``n_capped``.
    """
    n_walks = int(n_walks)
    if n_walks < 100:
        raise InputError(f"n_walks must be >= 100, got {n_walks}")
    if i == j:
        return MonteCarloResult(0.0, 0.0, n_walks, 0)
    cum = np.cumsum(model.transition, axis=1)
    cum[:, -1] = 1.0
    times = []
    capped = 0
    for c, start in enumerate(range(0, n_walks, _CHUNK)):
        m = min(_CHUNK, n_walks - start)
        rng = _chunk_seed(seed, c)
        pos = np.full(m, i, dtype=np.int64)
        steps = np.zeros(m, dtype=np.int64)
        active = np.ones(m, dtype=bool)
        while active.any() and steps.max() < step_cap:
            idx = np.nonzero(active)[0]
            u = rng.random(len(idx))
            rows = cum[pos[idx]]
            pos[idx] = np.minimum((u[:, None] >= rows).sum(axis=1), model.n_nodes - 1)
            steps[idx] += 1
            active[idx[pos[idx] == j]] = False
        capped += int(active.sum())
        times.append(steps[~active])
    t = np.concatenate(times).astype(np.float64)
    if t.size == 0:
        raise EmbedError(f"all {n_walks} walks exceeded the step cap of {step_cap}")
    stderr = float(t.std(ddof=1) / np.sqrt(t.size)) if t.size > 1 else 0.0
    return MonteCarloResult(float(t.mean()), stderr, int(t.size), capped)


def save_hitting_csv(H, path):
    with open(path, "w") as fh:
        fh.write("i,j,hitting_time\n")
        for a in range(H.shape[0]):
            for b in range(H.shape[1]):
                fh.write(f"{a},{b},{float(H[a, b])!r}\n")
