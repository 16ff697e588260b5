"""Hierarchy-identity verification.

The evolved marginals are tested against the coupled evolution equations they
must satisfy: the finite-N hierarchy for the confined dynamics, the limiting
2D hierarchy for tensor products of NLS solutions, the delta-collision
operator, and the mollifier-vs-delta comparison rate.  Residuals are always
evaluated against the discrete generator (spectral Laplacian, collocation
interaction, cell-normalized delta), so the commutator identities hold
exactly in space and the measured residual is the O(dt^2) time-sampling
error; pass criteria are convergence-order based.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .hermite import HermiteBasis
from .manybody import ManyBodyOperator, ReducedDensity
from .nls2d import Field2D, Grid2D

__all__ = [
    "ObservableK",
    "standard_panel",
    "standard_panel_x",
    "dk_metric",
    "bbgky_residual",
    "collision_apply",
    "gp_residual_2d",
    "coupled_collision_identity",
    "Mollifier",
    "MollifierSetup",
    "mollifier_rate",
]


# ---------------------------------------------------------------------------
# observables


@dataclass(frozen=True)
class ObservableK:
    """Finite-rank test operator J = sum_r w_r |u_r1 x..x u_rk><v_r1 x..x v_rk|.

    One-particle vectors are unit l^2 vectors and sum |w_r| <= 1, which forces
    ||J||_op <= 1.  Built from smoothed projectors, so weighted-derivative
    conjugations of J stay bounded.
    """

    obs_id: str
    order: int
    slot_dim: int
    weights: tuple
    left: np.ndarray  # (R, k, d)
    right: np.ndarray  # (R, k, d)

    def __post_init__(self):
        if sum(abs(w) for w in self.weights) > 1 + 1e-12:
            raise ValueError("observable weights must sum (in modulus) to <= 1")

    def as_matrix(self) -> np.ndarray:
        d = self.slot_dim**self.order
        out = np.zeros((d, d), dtype=complex)
        for w, us, vs in zip(self.weights, self.left, self.right):
            u = us[0]
            v = vs[0]
            for j in range(1, self.order):
                u = np.kron(u, us[j])
                v = np.kron(v, vs[j])
            out += w * np.outer(u, v.conj())
        return out

    def apply(self, vec: np.ndarray) -> np.ndarray:
        """J acting on a k-particle vector (any shape with d^k entries)."""
        flat = vec.reshape((self.slot_dim,) * self.order)
        out = np.zeros_like(flat)
        for w, us, vs in zip(self.weights, self.left, self.right):
            amp = flat
            for j in range(self.order):
                amp = np.tensordot(vs[j].conj(), amp, axes=(0, 0))
            term = us[0]
            for j in range(1, self.order):
                term = np.tensordot(term, us[j], axes=0)
            out = out + w * complex(amp) * term
        return out.reshape(vec.shape)

    def apply_padded(self, psi: np.ndarray, total_slots: int) -> np.ndarray:
        """(J x Identity) on the first k of ``total_slots`` slots."""
        d = self.slot_dim
        arr = psi.reshape((d,) * total_slots)
        out = np.zeros_like(arr)
        for w, us, vs in zip(self.weights, self.left, self.right):
            rest = arr
            for j in range(self.order):
                rest = np.tensordot(vs[j].conj(), rest, axes=(0, 0))
            head = us[0]
            for j in range(1, self.order):
                head = np.tensordot(head, us[j], axes=0)
            out = out + w * np.tensordot(head, rest, axes=0)
        return out.reshape(psi.shape)

    def transposed(self, perm) -> "ObservableK":
        """Conjugate J by a particle permutation."""
        perm = tuple(perm)
        return ObservableK(
            self.obs_id + f"-perm{perm}",
            self.order,
            self.slot_dim,
            self.weights,
            self.left[:, perm, :],
            self.right[:, perm, :],
        )


def _gaussian_x(grid: Grid2D, width: float, center=(0.0, 0.0), momentum=(0.0, 0.0)) -> np.ndarray:
    X, Y = grid.meshgrid()
    g = np.exp(
        -((X - center[0]) ** 2 + (Y - center[1]) ** 2) / (2 * width**2)
        + 1j * (momentum[0] * X + momentum[1] * Y)
    )
    g = g.reshape(-1)
    return g / np.linalg.norm(g)


def _one_particle_states(grid: Grid2D, basis: HermiteBasis | None):
    """Smooth unit states used as projector factors; x-only when basis is None."""
    k0 = np.pi / grid.L
    xs = [
        ("g0", _gaussian_x(grid, 1.5)),
        ("g1", _gaussian_x(grid, 1.0, center=(0.8, 0.0))),
        ("g2", _gaussian_x(grid, 1.2, momentum=(k0, 0.0))),
    ]
    if basis is None:
        return xs
    out = []
    M = basis.mode_count
    zmodes = [("z0", 0)] + ([("z1", 1)] if M > 1 else [])
    for (xn, xv), (zn, zm) in itertools.product(xs, zmodes):
        z = np.zeros(M, complex)
        z[zm] = 1.0
        out.append((f"{xn}{zn}", np.einsum("a,m->am", xv, z).reshape(-1)))
    return out


def _projector(obs_id, order, dim, states) -> ObservableK:
    """Normalized sum of tensor-product projectors onto the given unit states."""
    reps = list(states)
    w = 1.0 / len(reps)
    left = np.array([[s for s in slots] for slots in reps])
    return ObservableK(obs_id, order, dim, tuple(w for _ in reps), left, left.copy())


def _coherence(obs_id, order, dim, bra_slots, ket_slots) -> ObservableK:
    left = np.array([list(ket_slots)])
    right = np.array([list(bra_slots)])
    return ObservableK(obs_id, order, dim, (1.0,), left, right)


def standard_panel(grid: Grid2D, basis: HermiteBasis, order: int) -> list[ObservableK]:
    """Deterministic observable panel on the (x, z) one-particle space."""
    states = _one_particle_states(grid, basis)
    dim = grid.n**2 * basis.mode_count
    return _panel_from_states(states, dim, order)


def standard_panel_x(grid: Grid2D, order: int) -> list[ObservableK]:
    """Deterministic observable panel on the x-only one-particle space."""
    states = _one_particle_states(grid, None)
    return _panel_from_states(states, grid.n**2, order)


def _panel_from_states(states, dim, order) -> list[ObservableK]:
    panel = []
    for name, vec in states[:3]:
        panel.append(_projector(f"proj-{name}", order, dim, [[vec] * order]))
    (n_a, v_a), (n_b, v_b) = states[0], states[1]
    panel.append(_coherence(f"coh-{n_a}-{n_b}", order, dim, [v_a] * order, [v_b] * order))
    mix = [[v_a if j % 2 == 0 else v_b for j in range(order)]]
    if order > 1:
        panel.append(_projector(f"proj-mix-{n_a}{n_b}", order, dim, mix))
    return panel


def dk_metric(a: ReducedDensity, b: ReducedDensity, panel) -> float:
    """d_k(a, b) = sum_i 2^-i |Tr J_i (a - b)| over the observable panel."""
    total = 0.0
    for i, J in enumerate(panel, start=1):
        Jm = J.as_matrix()
        total += 2.0**-i * abs(a.expect(Jm) - b.expect(Jm))
    return total


# ---------------------------------------------------------------------------
# dense-kernel operator actions (k-particle kernels as (n,n,M)^{2k} arrays)


def _kernel_array(g: ReducedDensity, grid: Grid2D, basis: HermiteBasis) -> np.ndarray:
    slot = (grid.n, grid.n, basis.mode_count)
    return g.dense().reshape(slot * (2 * g.order))


def _dagger(arr: np.ndarray, k: int) -> np.ndarray:
    half = arr.ndim // 2
    perm = tuple(range(half, 2 * half)) + tuple(range(half))
    return arr.transpose(perm).conj()


def _kin_left(arr: np.ndarray, grid: Grid2D, slot: int) -> np.ndarray:
    """-Lap_x on the row index of the given slot (0-based)."""
    ax = (3 * slot, 3 * slot + 1)
    k2 = grid.laplacian_symbol()
    sh = [1] * arr.ndim
    sh[ax[0]], sh[ax[1]] = grid.n, grid.n
    return np.fft.ifft2(np.fft.fft2(arr, axes=ax) * k2.reshape(sh), axes=ax)


def _osc_left(arr: np.ndarray, basis: HermiteBasis, slot: int) -> np.ndarray:
    """(-d_z^2 + z^2) on the row index of the given slot (diagonal 2m+1)."""
    ax = 3 * slot + 2
    ev = basis.eigenvalues
    sh = [1] * arr.ndim
    sh[ax] = ev.size
    return arr * ev.reshape(sh)


def _comm_expect_dense(Jm: np.ndarray, arr: np.ndarray, left_fn, k: int) -> complex:
    """Tr J [A, gamma] for a dense kernel with A applied through left_fn."""
    d = Jm.shape[0]
    a_g = left_fn(arr).reshape(d, d)
    g_a = _dagger(left_fn(_dagger(arr, k).reshape(arr.shape)), k).reshape(d, d)
    return complex(np.einsum("ij,ji->", Jm, a_g - g_a))


def _comm_expect_pure(J: ObservableK, psi: np.ndarray, apply_A) -> complex:
    """Tr J [A, |psi><psi|] = <psi, J A psi> - <A psi, J psi> (A Hermitian)."""
    a_psi = apply_A(psi)
    j_psi = J.apply(psi.reshape(-1)).reshape(psi.shape)
    j_a_psi = J.apply(a_psi.reshape(-1)).reshape(psi.shape)
    return complex(np.vdot(psi, j_a_psi) - np.vdot(a_psi, j_psi))


def _check_provenance(*densities):
    tags = {g.provenance["run_tag"] for g in densities if g.provenance}
    if len(tags) != 1 or any(g.provenance is None for g in densities):
        raise ValueError(f"marginals come from different evolutions: {tags or 'missing provenance'}")
    dims = {(g.provenance["n"], g.provenance["M"], g.provenance["N"]) for g in densities}
    if len(dims) != 1:
        raise ValueError("marginals have inconsistent discretizations")


def bbgky_residual(
    gk_minus: ReducedDensity,
    gk_center: ReducedDensity,
    gk_plus: ReducedDensity,
    gk_next: ReducedDensity | None,
    op: ManyBodyOperator,
    panel,
    dt: float,
) -> dict:
    """Max panel residual of the finite-N evolution hierarchy at order k.

    Evaluates, for each observable J,
        Tr J ( i d_t gamma^(k)
               - sum_j [-Lap_{x_j}, gamma^(k)]
               - omega sum_j [-d_{z_j}^2 + z_j^2, gamma^(k)]
               - (1/N) sum_{i<j<=k} [V_ij, gamma^(k)]
               - (N-k)/N sum_j Tr_{k+1} [V_{j,k+1}, gamma^(k+1)] )
    with d_t by central difference.  gk_next may be omitted at the top level
    k = N, where the hierarchy degenerates to the von Neumann equation.
    """
    k = gk_center.order
    N = op.N
    triple = [gk_minus, gk_center, gk_plus]
    if gk_next is not None:
        if gk_next.order != k + 1:
            raise ValueError("gk_next must have order k+1")
        _check_provenance(*triple, gk_next)
    else:
        if k != N:
            raise ValueError("gk_next may be omitted only at the top level k = N")
        _check_provenance(*triple)
    times = [g.provenance["time"] for g in triple]
    if abs((times[1] - times[0]) - dt) > 1e-9 or abs((times[2] - times[1]) - dt) > 1e-9:
        raise ValueError(f"marginal times {times} are not spaced by dt={dt}")

    grid, basis, omega = op.grid, op.basis, op.omega
    slot = (grid.n, grid.n, basis.mode_count)
    pure = gk_center.pure is not None
    pair_vals = op.pair_potential_values() if (op.potential is not None and N > 1) else None

    def pair_mult(arr_slots: np.ndarray, i: int, j: int) -> np.ndarray:
        """V_{N,omega}(r_i - r_j) as pointwise multiplication at collocation."""
        cmap = basis.collocation_map
        zax = (3 * i + 2, 3 * j + 2)
        out = arr_slots
        for ax in zax:
            out = np.moveaxis(np.tensordot(cmap, np.moveaxis(out, ax, 0), axes=(1, 0)), 0, ax)
        sh = [1] * out.ndim
        for axpos, axval in zip(range(3 * i, 3 * i + 3), slot):
            sh[axpos] = axval
        for axpos, axval in zip(range(3 * j, 3 * j + 3), slot):
            sh[axpos] = axval
        out = out * pair_vals.reshape(sh)
        for ax in zax:
            out = np.moveaxis(np.tensordot(cmap.T, np.moveaxis(out, ax, 0), axes=(1, 0)), 0, ax)
        return out

    results = []
    for J in panel:
        # time derivative
        if pure:
            psis = [g.pure.reshape(slot * k) for g in triple]
            tr = [complex(np.vdot(p.reshape(-1), J.apply(p.reshape(-1)))) for p in psis]
            ddt = 1j * (tr[2] - tr[0]) / (2 * dt)
            psi0 = psis[1]
        else:
            Jm = J.as_matrix()
            tr = [g.expect(Jm) for g in triple]
            ddt = 1j * (tr[2] - tr[0]) / (2 * dt)
            arr0 = _kernel_array(gk_center, grid, basis)

        total = ddt
        for j in range(k):
            if pure:
                total -= _comm_expect_pure(J, psi0, lambda a, j=j: _fft_slot_apply(a, grid, j))
                total -= omega * _comm_expect_pure(J, psi0, lambda a, j=j: _osc_left(a, basis, j))
            else:
                total -= _comm_expect_dense(Jm, arr0, lambda a, j=j: _fft_slot_apply(a, grid, j), k)
                total -= omega * _comm_expect_dense(Jm, arr0, lambda a, j=j: _osc_left(a, basis, j), k)
        if pair_vals is not None:
            for i, j in itertools.combinations(range(k), 2):
                if pure:
                    total -= _comm_expect_pure(J, psi0, lambda a, i=i, j=j: pair_mult(a, i, j)) / N
                else:
                    total -= _comm_expect_dense(Jm, arr0, lambda a, i=i, j=j: pair_mult(a, i, j), k) / N
        if gk_next is not None and pair_vals is not None:
            coeff = (N - k) / N
            for j in range(k):
                total -= coeff * _collision_expect(J, gk_next, pair_mult, j, k, slot)
        results.append({"observable_id": J.obs_id, "residual": abs(total)})

    scale = max(abs(r["residual"]) for r in results) if results else 0.0
    report = {
        "k": k,
        "t": float(times[1]),
        "dt": dt,
        "observables": results,
        "max_residual": max(r["residual"] for r in results),
        "floor_estimate": dt**2 * max(scale, 1.0),
    }
    return report


def _fft_slot_apply(arr: np.ndarray, grid: Grid2D, slot: int) -> np.ndarray:
    return _kin_left(arr, grid, slot)


def _collision_expect(J: ObservableK, gk_next: ReducedDensity, pair_mult, j: int, k: int, slot) -> complex:
    """Tr J Tr_{k+1} [V_{j,k+1}, gamma^(k+1)]."""
    if gk_next.pure is not None:
        n_slots = gk_next.order
        psi = gk_next.pure.reshape(slot * n_slots)
        v_psi = pair_mult(psi, j, k)
        jpad_v = J.apply_padded(v_psi, n_slots)
        jpad = J.apply_padded(psi, n_slots)
        return complex(np.vdot(psi, jpad_v) - np.vdot(v_psi, jpad))
    arr = gk_next.dense().reshape(slot * (2 * (k + 1)))
    v_g = pair_mult(arr, j, k)
    g_v = _dagger(pair_mult(_dagger(arr, k + 1).reshape(arr.shape), j, k), k + 1).reshape(arr.shape)
    comm = (v_g - g_v).reshape((np.prod(slot) ** (k + 1),) * 2)
    d_k = np.prod(slot) ** k
    d1 = np.prod(slot)
    comm = comm.reshape(d_k, d1, d_k, d1)
    traced = np.einsum("abcb->ac", comm)
    return complex(np.trace(J.as_matrix() @ traced))


# ---------------------------------------------------------------------------
# 2D limiting hierarchy


def collision_apply(gx: ReducedDensity, j: int, cell_area: float) -> ReducedDensity:
    """Collision operator B_{j,k+1} gamma = Tr_{k+1}[delta(x_j - x_{k+1}), gamma].

    ``gx`` is an x-only (k+1)-particle density; the delta is the grid diagonal
    with value 1/cell_area.  Returns the k-particle (skew-Hermitian) kernel.
    """
    kp1 = gx.order
    k = kp1 - 1
    if not 0 <= j < k:
        raise ValueError(f"slot j={j} must satisfy 0 <= j < k={k}")
    P = gx.slot_dim
    arr = gx.dense().reshape((P,) * (2 * kp1))
    # common trace over (row_{k+1}, col_{k+1}) -> trailing diagonal axis
    diag = np.diagonal(arr, axis1=k, axis2=2 * k + 1)
    # first term: traced coordinate pinned to the row x_j
    t1 = np.diagonal(diag, axis1=j, axis2=-1)
    t1 = np.moveaxis(t1, -1, j)
    # second term: pinned to the column x'_j
    t2 = np.diagonal(diag, axis1=k + j, axis2=-1)
    t2 = np.moveaxis(t2, -1, k + j)
    out = (t1 - t2) / cell_area
    prov = dict(gx.provenance or {})
    prov["order"] = k
    return ReducedDensity(k, P, kernel=out.reshape(P**k, P**k), provenance=prov)


def _product_vector(phi_flat: np.ndarray, k: int) -> np.ndarray:
    out = phi_flat
    for _ in range(k - 1):
        out = np.tensordot(out, phi_flat, axes=0)
    return out


def gp_residual_2d(
    trajectory: tuple[Field2D, Field2D, Field2D],
    coupling: float,
    k: int,
    panel=None,
) -> dict:
    """Max panel residual of the limiting 2D hierarchy on tensor-product densities.

    ``trajectory`` holds the NLS solution at t-dt, t, t+dt; the hierarchy
    tested is i d_t gamma^(k) = sum_j [-Lap, gamma^(k)] + c sum_j B_{j,k+1} gamma^(k+1)
    with gamma^(k) = |phi><phi|^(x k) built from the trajectory.
    """
    phi_m, phi_0, phi_p = trajectory
    grid = phi_0.grid
    if panel is None:
        panel = standard_panel_x(grid, k)
    dt = phi_p.time - phi_0.time
    if abs((phi_0.time - phi_m.time) - dt) > 1e-9:
        raise ValueError("trajectory times must be equally spaced")
    cell = grid.cell_area
    sqrt_cell = math.sqrt(cell)
    vecs = [f.values.reshape(-1) * sqrt_cell for f in (phi_m, phi_0, phi_p)]
    P = grid.n**2
    k2 = grid.laplacian_symbol()

    def kinetic(vec_slots: np.ndarray, j: int) -> np.ndarray:
        arr = vec_slots.reshape((grid.n, grid.n) * k)
        ax = (2 * j, 2 * j + 1)
        sh = [1] * arr.ndim
        sh[ax[0]], sh[ax[1]] = grid.n, grid.n
        out = np.fft.ifft2(np.fft.fft2(arr, axes=ax) * k2.reshape(sh), axes=ax)
        return out.reshape(vec_slots.shape)

    phi0 = vecs[1]
    dens = np.abs(phi0) ** 2 / cell  # physical |phi|^2
    u = dens * phi0
    results = []
    for J in panel:
        tr = []
        for v in (vecs[0], vecs[2]):
            prod = _product_vector(v.reshape(P), k).reshape(-1)
            tr.append(complex(np.vdot(prod, J.apply(prod))))
        ddt = 1j * (tr[1] - tr[0]) / (2 * dt)
        total = ddt
        prod0 = _product_vector(phi0, k).reshape((P,) * k)
        for j in range(k):
            total -= _comm_expect_pure(J, prod0, lambda a, j=j: kinetic(a, j))
        for j in range(k):
            slots = [phi0] * k
            slots[j] = u
            prod_u = slots[0]
            for s in slots[1:]:
                prod_u = np.tensordot(prod_u, s, axes=0)
            j_pu = J.apply(prod_u.reshape(-1))
            j_p0 = J.apply(prod0.reshape(-1))
            coll = complex(np.vdot(prod0.reshape(-1), j_pu) - np.vdot(prod_u.reshape(-1), j_p0))
            total -= coupling * coll
        results.append({"observable_id": J.obs_id, "residual": abs(total)})
    return {
        "k": k,
        "t": float(phi_0.time),
        "dt": dt,
        "observables": results,
        "max_residual": max(r["residual"] for r in results),
        "floor_estimate": dt**2,
    }


def coupled_collision_identity(phi: Field2D, basis: HermiteBasis, k: int = 1) -> dict:
    """Numerical form of the z-trace factorization of the coupled hierarchy.

    For tensor densities gamma^(k+1) = gamma_x^(k+1) x (h h)^(x k+1) the
    confined collision term Tr_{x_{k+1}} Tr_z [delta(r_j - r_{k+1}), gamma^(k+1)]
    equals (int |h_1|^4 dz) Tr_{x_{k+1}} [delta(x_j - x_{k+1}), gamma_x^(k+1)]
    on the grid.  Returns both kernels and their max deviation (for k = 1).
    """
    if k != 1:
        raise NotImplementedError("the identity check is implemented for k = 1")
    grid = phi.grid
    cell = grid.cell_area
    P = grid.n**2
    phi_l2 = phi.values.reshape(-1) * math.sqrt(cell)
    # z direction on the quadrature nodes, sqrt(weight)-scaled values
    w = basis.quadrature_weights
    h = basis.eigenfunction_table[0]
    hz = np.sqrt(w) * h
    quartic = float(np.sum(w * h**4))

    # one-particle (x,z) vector; the pair tensor Phi(a,q,b,p) = f1[a,q] f1[b,p]
    # never needs materializing
    f1 = np.einsum("a,q->aq", phi_l2, hz)

    # (D Phi)(a,q,b,p) is supported on the coincidence set b=a, p=q, where the
    # grid delta carries the value 1/(cell * w_q):
    #   LHS_x(a, a') = sum_{q,b,p} [ (D Phi)(a,q,b,p) conj(Phi)(a',q,b,p)
    #                                - Phi(a,q,b,p) conj((D Phi))(a',q,b,p) ]
    # Collapsing b=a (resp. b=a') and p=q leaves a single q sum.
    dvals = f1 * f1 / (cell * w[None, :])  # (D Phi) restricted to the diagonal
    slice_q = np.einsum("cq,aq->caq", f1, f1)  # Phi(c,q,a,q)
    lhs = np.einsum("aq,caq->ac", dvals, slice_q.conj())
    lhs -= np.einsum("acq,cq->ac", slice_q, dvals.conj())

    # limiting side: quartic * B_1 applied to |phi><phi|^{x2}; the collision
    # kernel of the product state is the literal coincidence gather
    #   B_1(a, a') = (1/cell) [Phi_x(a,a) conj(Phi_x)(a',a) - Phi_x(a,a') conj(Phi_x)(a',a')]
    t1 = (np.abs(phi_l2) ** 2 * phi_l2)[:, None] * phi_l2.conj()[None, :]
    t2 = phi_l2[:, None] * (np.abs(phi_l2) ** 2 * phi_l2.conj())[None, :]
    rhs = quartic * (t1 - t2) / cell
    return {
        "lhs": lhs,
        "rhs": rhs,
        "max_diff": float(np.max(np.abs(lhs - rhs))),
        "quartic": quartic,
    }


# ---------------------------------------------------------------------------
# mollifier comparison


@dataclass(frozen=True)
class Mollifier:
    """Unit-mass Gaussian density rho with dilation rho_alpha = alpha^-3 rho(r/alpha)."""

    width: float
    base_sigma: float = 1.0

    def __post_init__(self):
        if self.width <= 0 or self.base_sigma <= 0:
            raise ValueError("mollifier widths must be positive")

    def values(self, r_sq: np.ndarray) -> np.ndarray:
        s = self.width * self.base_sigma
        return (2 * np.pi * s**2) ** -1.5 * np.exp(-r_sq / (2 * s**2))

    def moment(self, kappa: float) -> float:
        """int rho(r) |r|^kappa dr for the base (width-1) density."""
        s = self.base_sigma
        return s**kappa * 2 ** (kappa / 2) * math.gamma((3 + kappa) / 2) * 2 / math.sqrt(math.pi)


@dataclass
class MollifierSetup:
    """Uniform periodic 3D grid with a smooth rank-one pair density and observable.

    The pair density is gamma^(2) = |f x g><f x g| with Gaussian f, g; the
    observable is a smooth rank-one projector.  Traces against difference
    kernels rho_alpha(r1 - r2) reduce to one FFT convolution per alpha.
    """

    n_xy: int = 48
    n_z: int = 48
    L_xy: float = 6.0
    L_z: float = 6.0
    widths: tuple = (1.0, 1.3, 1.1)

    def __post_init__(self):
        ax_xy = -self.L_xy + 2 * self.L_xy * np.arange(self.n_xy) / self.n_xy
        ax_z = -self.L_z + 2 * self.L_z * np.arange(self.n_z) / self.n_z
        h_xy = 2 * self.L_xy / self.n_xy
        h_z = 2 * self.L_z / self.n_z
        self.cell = h_xy**2 * h_z
        X, Y, Z = np.meshgrid(ax_xy, ax_xy, ax_z, indexing="ij")
        wf, wg, wj = self.widths
        self.f = np.exp(-(X**2 + Y**2 + Z**2) / (2 * wf**2)).astype(complex)
        self.g = np.exp(-((X - 0.5) ** 2 + Y**2 + Z**2) / (2 * wg**2)).astype(complex)
        j = np.exp(-(X**2 + (Y - 0.4) ** 2 + Z**2) / (2 * wj**2)).astype(complex)
        self.j = j / np.linalg.norm(j)
        for a in ("f", "g"):
            setattr(self, a, getattr(self, a) / np.linalg.norm(getattr(self, a).reshape(-1)))
        # periodic lag coordinates: entry n of the convolution kernel is the
        # wrapped displacement n*h on each axis
        lag_xy = (h_xy * np.arange(self.n_xy) + self.L_xy) % (2 * self.L_xy) - self.L_xy
        lag_z = (h_z * np.arange(self.n_z) + self.L_z) % (2 * self.L_z) - self.L_z
        D0, D1, D2 = np.meshgrid(lag_xy, lag_xy, lag_z, indexing="ij")
        self.diff_sq = D0**2 + D1**2 + D2**2
        self.min_spacing = max(h_xy, h_z)

    def trace_gap(self, moll: Mollifier, reference: Mollifier | None = None) -> float:
        """|Tr J^(1) (rho_alpha(r1-r2) - ref(r1-r2)) gamma^(2)|; ref None = grid delta."""
        # A(r1) = conj((J f))(r1) f(r1);  B(r2) = |g(r2)|^2
        jf = self.j * complex(np.vdot(self.j.reshape(-1), self.f.reshape(-1)))
        A = jf.conj() * self.f
        B = np.abs(self.g) ** 2
        kernel = moll.values(self.diff_sq)
        if reference is not None:
            kernel = kernel - reference.values(self.diff_sq)
        # sum_{r2} K(r1-r2) B(r2) by circular convolution; the grid delta has
        # diagonal value 1/cell, so the two terms share the l^2 convention
        conv = np.fft.ifftn(np.fft.fftn(B) * np.fft.fftn(kernel)).real
        term_rho = complex(np.sum(A * conv))
        if reference is not None:
            return abs(term_rho)
        term_delta = complex(np.sum(A * B)) / self.cell
        return abs(term_rho - term_delta)


def mollifier_rate(kappa: float, alphas, setup: MollifierSetup | None = None) -> dict:
    """Fitted log-log rate of |Tr J (rho_alpha - delta) gamma| as alpha -> 0.

    The comparison bound guarantees rate >= kappa for kappa in (0, 1/2);
    smooth test densities may converge faster.  Alphas below twice the grid
    spacing are excluded from the fit with a warning.
    """
    if not 0 < kappa < 0.5:
        raise ValueError(f"kappa must lie in (0, 1/2), got {kappa}")
    setup = setup or MollifierSetup()
    alphas = sorted(float(a) for a in alphas)
    usable, excluded = [], []
    for a in alphas:
        (usable if a >= 2 * setup.min_spacing else excluded).append(a)
    if excluded:
        warnings.warn(
            f"alphas below grid resolution excluded from fit: {excluded}", stacklevel=2
        )
    if len(usable) < 2:
        raise ValueError("need at least two alphas at or above grid resolution")
    gaps = [setup.trace_gap(Mollifier(a)) for a in usable]
    slope = float(np.polyfit(np.log(usable), np.log(gaps), 1)[0])
    moment = Mollifier(1.0).moment(kappa)
    return {
        "kappa": kappa,
        "alphas": usable,
        "excluded": excluded,
        "gaps": gaps,
        "slope": slope,
        "moment_kappa": moment,
    }
