"""Reference values for the Rust oracle tests.

Computed with numpy/scipy closed forms and cvxpy semidefinite programs, with
no code shared with the Rust crate. Writes crates/core/tests/data/oracles.json.

    python3 python/generate_oracles.py
"""

import json
import pathlib

import cvxpy as cp
import numpy as np
from scipy.linalg import logm, sqrtm
from scipy.optimize import minimize_scalar

RNG = np.random.default_rng(20240611)
OUT = pathlib.Path(__file__).resolve().parent.parent / "crates/core/tests/data/oracles.json"


def encode(m):
    m = np.asarray(m, dtype=complex)
    return {"rows": m.shape[0], "cols": m.shape[1], "entries": [[z.real, z.imag] for z in m.reshape(-1)]}


def ginibre(rows, cols):
    return (RNG.normal(size=(rows, cols)) + 1j * RNG.normal(size=(rows, cols))) / np.sqrt(2)


def density(d, rank=None):
    g = ginibre(d, rank or d)
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def herm_power(h, a, cutoff=1e-12):
    w, v = np.linalg.eigh(h)
    wp = np.array([x**a if x > cutoff else 0.0 for x in w])
    return (v * wp) @ v.conj().T


def ptrace_first(rho, da, db):
    """tr_A of an operator on A ⊗ B."""
    return np.einsum("ijik->jk", rho.reshape(da, db, da, db))


def d_max(rho, sigma):
    isq = herm_power(sigma, -0.5)
    return np.log2(np.linalg.eigvalsh(isq @ rho @ isq).max())


def relative_entropy(rho, sigma):
    return np.trace(rho @ (logm(rho) - logm(sigma))).real / np.log(2)


def sandwiched(alpha, rho, sigma):
    s = herm_power(sigma, (1 - alpha) / (2 * alpha))
    inner = s @ rho @ s
    return np.log2(np.trace(herm_power((inner + inner.conj().T) / 2, alpha)).real) / (alpha - 1)


def petz(alpha, rho, sigma):
    return np.log2(np.trace(herm_power(rho, alpha) @ herm_power(sigma, 1 - alpha)).real) / (alpha - 1)


def solve(problem):
    problem.solve(solver=cp.CLARABEL)
    if problem.status != cp.OPTIMAL:
        problem.solve(solver=cp.SCS, eps=1e-10, max_iters=200000)
    assert problem.status == cp.OPTIMAL, problem.status
    return problem.value


def d_hypothesis(eps, rho, sigma):
    """Scalar Lagrange dual max_μ μ(1−ε) − tr(μρ − σ)_+, checked against cvxpy."""

    def neg_dual(mu):
        w = np.linalg.eigvalsh(mu * rho - sigma)
        return -(mu * (1 - eps) - w[w > 0].sum())

    hi = 10 * 2 ** d_max(rho, sigma)
    best = minimize_scalar(neg_dual, bounds=(0.0, hi), method="bounded", options={"xatol": 1e-14})
    value = -best.fun

    d = rho.shape[0]
    q = cp.Variable((d, d), hermitian=True)
    cons = [q >> 0, np.eye(d) - q >> 0, cp.real(cp.trace(q @ rho)) >= 1 - eps]
    problem = cp.Problem(cp.Minimize(cp.real(cp.trace(q @ sigma))), cons)
    problem.solve(solver=cp.CLARABEL)
    if problem.status == cp.OPTIMAL:
        assert abs(problem.value - value) < 1e-6, (problem.value, value)
    return -np.log2(value)


def cond_min_up(rho, da, db):
    sigma = cp.Variable((db, db), hermitian=True)
    cons = [cp.kron(np.eye(da), sigma) - rho >> 0]
    return -np.log2(solve(cp.Problem(cp.Minimize(cp.real(cp.trace(sigma))), cons)))


def cond_min_down(rho, da, db):
    rb = ptrace_first(rho, da, db)
    return -d_max(rho, np.kron(np.eye(da), rb))


def cond_half_up(rho, da, db):
    """S_1/2(A|B) = −S_min(A|C) on a purification ψ_ABC."""
    w, v = np.linalg.eigh(rho)
    keep = w > 1e-12
    dc = int(keep.sum())
    psi = (v[:, keep] * np.sqrt(w[keep])).reshape(da, db, dc)
    rho_ac = np.einsum("abc,dbe->acde", psi, psi.conj()).reshape(da * dc, da * dc)
    return -cond_min_up(rho_ac, da, dc)


def fidelity(rho, sigma):
    return np.abs(np.trace(sqrtm(sqrtm(rho) @ sigma @ sqrtm(rho)))) ** 2


def choi(kraus, din):
    """Unnormalized Choi matrix on [in, out]."""
    dout = kraus[0].shape[0]
    j = np.zeros((din * dout, din * dout), dtype=complex)
    for k in kraus:
        v = np.zeros(din * dout, dtype=complex)
        for i in range(din):
            v[i * dout : (i + 1) * dout] = k[:, i]
        j += np.outer(v, v.conj())
    return j


def random_channel(din, dout, nk):
    g = ginibre(dout * nk, din)
    w, v = np.linalg.eigh(g.conj().T @ g)
    iso = g @ (v / np.sqrt(w)) @ v.conj().T
    return [iso[np.arange(dout) * nk + i, :] for i in range(nk)]


def channel_min_entropy(kraus, din):
    j = choi(kraus, din) / din
    return -np.log2(din * np.linalg.eigvalsh(j).max())


def diamond_distance(k1, k2, din):
    """½‖N−M‖⋄ by the Watrous SDP, Choi ordering [in, out]."""
    jd = choi(k1, din) - choi(k2, din)
    dout = k1[0].shape[0]
    w = cp.Variable((din * dout, din * dout), hermitian=True)
    rho = cp.Variable((din, din), hermitian=True)
    cons = [w >> 0, cp.kron(rho, np.eye(dout)) - w >> 0, cp.real(cp.trace(rho)) == 1]
    return solve(cp.Problem(cp.Maximize(cp.real(cp.trace(jd @ w))), cons))


def main():
    cases = []

    def add(kind, expected, **inputs):
        cases.append({"kind": kind, "expected": float(expected), **inputs})

    for _ in range(4):
        rho, sigma = density(3), density(3)
        r, s = encode(rho), encode(sigma)
        add("d_max", d_max(rho, sigma), rho=r, sigma=s)
        add("relative_entropy", relative_entropy(rho, sigma), rho=r, sigma=s)
        add("sandwiched_renyi", sandwiched(2.0, rho, sigma), alpha=2.0, rho=r, sigma=s)
        add("sandwiched_renyi", sandwiched(0.5, rho, sigma), alpha=0.5, rho=r, sigma=s)
        add("petz_renyi", petz(0.5, rho, sigma), alpha=0.5, rho=r, sigma=s)
        add("petz_renyi", petz(1.5, rho, sigma), alpha=1.5, rho=r, sigma=s)
        add("fidelity", fidelity(rho, sigma), rho=r, sigma=s)
        for eps in (0.05, 0.2):
            add("d_hypothesis", d_hypothesis(eps, rho, sigma), epsilon=eps, rho=r, sigma=s)

    for rank in (4, 4, 3, 2, 1):
        rho = density(4, rank)
        r = encode(rho)
        add("cond_min_entropy_up", cond_min_up(rho, 2, 2), rho=r, dims=[2, 2])
        add("cond_min_entropy_down", cond_min_down(rho, 2, 2), rho=r, dims=[2, 2])
        add("cond_sandwiched_half_up", cond_half_up(rho, 2, 2), rho=r, dims=[2, 2])
    rho = density(6, 4)
    add("cond_min_entropy_up", cond_min_up(rho, 2, 3), rho=encode(rho), dims=[2, 3])
    add("cond_min_entropy_down", cond_min_down(rho, 2, 3), rho=encode(rho), dims=[2, 3])

    for din, dout, nk in ((2, 2, 1), (2, 2, 2), (2, 2, 4), (2, 3, 2), (3, 2, 3), (3, 3, 2)):
        k = random_channel(din, dout, nk)
        add("channel_min_entropy", channel_min_entropy(k, din), kraus=[encode(x) for x in k], in_dim=din)

    for nk1, nk2 in ((1, 2), (2, 2), (4, 3), (2, 4)):
        k1, k2 = random_channel(2, 2, nk1), random_channel(2, 2, nk2)
        add(
            "diamond_distance",
            diamond_distance(k1, k2, 2),
            kraus=[encode(x) for x in k1],
            kraus2=[encode(x) for x in k2],
            in_dim=2,
        )

    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps({"generator": "python/generate_oracles.py", "cases": cases}, indent=1) + "\n")
    print(f"wrote {len(cases)} cases to {OUT}")


if __name__ == "__main__":
    main()
