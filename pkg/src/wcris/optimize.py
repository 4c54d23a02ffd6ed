"""Beam synthesis: simulated annealing over mode amplitudes plus a
lookup table that warm-starts new requests from previous solutions.

Both the exact simulator and the trained surrogate hide behind the same
pattern_db(w) interface, so the annealer never knows which one it is
driving.  Directions need not lie on the sampled angle grid; powers are
interpolated linearly between neighbouring grid angles in dB.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import physics
from .dataset import ScalingSpec
from .nn import load_model

TABLE_TAG = "wcris-table"
TABLE_VERSION = 1


@dataclass(frozen=True)
class GridSpec:
    """Uniform angle grid the patterns are sampled on, degrees."""

    theta_min: float
    theta_max: float
    n_angles: int

    @classmethod
    def from_setup(cls, setup):
        return cls(setup.theta_min, setup.theta_max, setup.n_angles)

    def contains(self, theta):
        return self.theta_min <= theta <= self.theta_max

    def fractional_index(self, theta):
        if not self.contains(theta):
            raise ValueError(
                f"direction {theta} outside the grid "
                f"[{self.theta_min}, {self.theta_max}] degrees"
            )
        # multiply first: grid-aligned angles then land on exact integers
        return (theta - self.theta_min) * (self.n_angles - 1) / (
            self.theta_max - self.theta_min
        )


def interpolated_power(pattern_db, theta, grid):
    """Pattern dB value at an off-grid direction, linear in dB.

    Exact at grid points; between them the two neighbouring samples are
    blended by the fractional index.
    """
    pattern_db = np.asarray(pattern_db)
    if pattern_db.shape[-1] != grid.n_angles:
        raise ValueError("pattern length does not match the grid")
    i = grid.fractional_index(theta)
    i0 = int(i)
    if i0 >= grid.n_angles - 1:
        return float(pattern_db[..., -1])
    frac = i - i0
    return float((1.0 - frac) * pattern_db[..., i0] + frac * pattern_db[..., i0 + 1])


@dataclass(frozen=True)
class Objective:
    """Directions to serve and directions to keep dark."""

    beams: tuple
    nulls: tuple = ()
    noise_var: float = 1.0

    def __post_init__(self):
        beams = tuple(float(b) for b in self.beams)
        nulls = tuple(float(n) for n in self.nulls)
        object.__setattr__(self, "beams", beams)
        object.__setattr__(self, "nulls", nulls)
        if not beams:
            raise ValueError("objective needs at least one beam direction")
        if set(beams) & set(nulls):
            raise ValueError("a direction cannot be both beam and null")
        if self.noise_var <= 0:
            raise ValueError("noise variance must be positive")

    def validate_grid(self, grid):
        for theta in self.beams + self.nulls:
            grid.fractional_index(theta)


class ExactBackend:
    """Radiation patterns straight from the physics, no approximation."""

    requires_nonnegative = False

    def __init__(
        self,
        geom,
        cell,
        setup,
        offset=physics.BIAS_LO_V,
        bias_lo=physics.BIAS_LO_V,
        bias_hi=physics.BIAS_HI_V,
    ):
        self.geom = geom
        self.cell = cell
        self.setup = setup
        self.offset = offset
        self.bias_lo = bias_lo
        self.bias_hi = bias_hi
        self.grid = GridSpec.from_setup(setup)
        self.fingerprint = physics.fingerprint(geom, cell, setup)

    @property
    def n_modes(self):
        return self.geom.num_modes

    def pattern_db(self, w):
        bsw = physics.BswConfig(self.offset, w)
        return physics.radiation_pattern(
            self.geom, self.cell, bsw, self.setup, self.bias_lo, self.bias_hi
        )


def bias_guard(geom, offset, bias_lo=physics.BIAS_LO_V, bias_hi=physics.BIAS_HI_V):
    """Rejector for amplitude sets whose rectified bias leaves [lo, hi].

    The surrogate itself cannot tell a buildable amplitude set from an
    unbuildable one; without this it happily walks into regions it never
    saw in training and its predictions stop meaning anything.
    """

    def check(w):
        profile = physics.bias_profile(geom, physics.BswConfig(offset, w))
        if not physics.check_bias_bounds(profile, bias_lo, bias_hi):
            raise physics.BiasRangeError(
                f"bias profile spans [{profile.min():.4g}, {profile.max():.4g}] V, "
                f"outside [{bias_lo:.4g}, {bias_hi:.4g}] V"
            )

    return check


class SurrogateBackend:
    """Patterns predicted by a trained model; amplitudes must be >= 0.

    The network saw only non-negative training amplitudes, so signed
    search is meaningless here and is refused.  An optional guard
    (see bias_guard) rejects amplitude sets the hardware could not
    realize, keeping annealing inside the model's training domain.
    """

    requires_nonnegative = True

    def __init__(self, mlp, scaling, fingerprint, grid, guard=None):
        self.mlp = mlp
        self.scaling = scaling
        self.fingerprint = fingerprint
        self.grid = grid
        self.guard = guard

    @classmethod
    def from_file(cls, path, grid=None, guard=None):
        mlp, scaling, fingerprint, _ = load_model(path)
        if grid is None:
            # the reference grid; models trained on other grids carry theirs
            setup = physics.ChannelSetup()
            if mlp.n_out != setup.n_angles:
                raise ValueError(
                    f"{path}: model emits {mlp.n_out} angles; pass the grid it "
                    "was trained on"
                )
            grid = GridSpec.from_setup(setup)
        return cls(mlp, scaling, fingerprint, grid, guard=guard)

    @property
    def n_modes(self):
        return self.mlp.n_in

    def pattern_db(self, w):
        w = np.asarray(w, dtype=np.float64)
        if np.any(w < 0.0):
            raise ValueError("surrogate backend requires non-negative amplitudes")
        if self.guard is not None:
            self.guard(w)
        return self.scaling.unscale_p(self.mlp.forward(self.scaling.scale_w(w)))


def evaluate_slnr(backend, w, objective):
    """SLNR of one amplitude vector under the backend's physics.

    Pattern samples are normalized received powers (per unit noise), so
    they are un-normalized by noise_var before the leakage ratio.
    """
    objective.validate_grid(backend.grid)
    pattern = backend.pattern_db(w)
    sigma2 = objective.noise_var
    beams = [
        10.0 ** (interpolated_power(pattern, t, backend.grid) / 10.0) * sigma2
        for t in objective.beams
    ]
    nulls = [
        10.0 ** (interpolated_power(pattern, t, backend.grid) / 10.0) * sigma2
        for t in objective.nulls
    ]
    return physics.slnr_db(beams, nulls, sigma2)


@dataclass
class SaParams:
    iterations: int = 2000
    step_scale: float = 0.015      # proposal step, volts
    boltzmann: float = 0.002       # acceptance scale k_c
    t_scale: float = 100.0         # initial temperature
    restart_after: int = 200       # iterations without a new best
    sign_mode: str = "non-negative"  # or "signed"
    accept_db: bool = True         # acceptance differences on dB values
    seed: int = 0

    def __post_init__(self):
        if self.sign_mode not in ("non-negative", "signed"):
            raise ValueError("sign_mode must be 'non-negative' or 'signed'")
        if self.iterations < 1:
            raise ValueError("iterations must be positive")
        if self.step_scale < 0:
            raise ValueError("step_scale must be non-negative")
        if self.boltzmann <= 0 or self.t_scale <= 0:
            raise ValueError("boltzmann and t_scale must be positive")
        if not 0 < self.restart_after < self.iterations:
            raise ValueError("restart_after must lie in (0, iterations)")


def acceptance_probability(current, proposed, temperature, boltzmann):
    """Metropolis rule: certain on improvement, frozen at zero temperature."""
    if proposed > current:
        return 1.0
    if temperature <= 1e-12:
        return 0.0
    return math.exp(-(current - proposed) / (boltzmann * temperature))


@dataclass
class SaResult:
    w_best: np.ndarray
    slnr_best: float
    slnr_init: float
    rejected: int
    trace: dict  # per-iteration arrays: proposal, current, best, accepted


def sa_optimize(backend, objective, params, w_init=None, rng=None):
    """Annealed random search for amplitudes maximizing the SLNR.

    Proposals perturb every mode by N(0, step_scale^2); non-negative
    mode folds the result through abs().  Any proposal whose bias
    profile the backend rejects counts as an iteration but not a move.
    A new global best always resets both the current point and the
    restart clock; too long without one snaps the walk back to the best.
    """
    if backend.requires_nonnegative and params.sign_mode != "non-negative":
        raise ValueError("this backend only supports non-negative amplitudes")
    objective.validate_grid(backend.grid)
    if rng is None:
        rng = np.random.default_rng(params.seed)

    n = backend.n_modes
    if w_init is None:
        w = np.zeros(n)
    else:
        w = np.asarray(w_init, dtype=np.float64).copy()
        if w.shape != (n,):
            raise ValueError(f"w_init must have shape ({n},)")
        if params.sign_mode == "non-negative" and np.any(w < 0.0):
            raise ValueError("negative w_init in non-negative mode")

    slnr_cur = evaluate_slnr(backend, w, objective)
    slnr_best = slnr_cur
    slnr_init = slnr_cur
    w_best = w.copy()
    i_best = 0
    rejected = 0

    prop_tr = np.full(params.iterations, np.nan)
    cur_tr = np.empty(params.iterations)
    best_tr = np.empty(params.iterations)
    acc_tr = np.zeros(params.iterations, dtype=bool)

    for i in range(params.iterations):
        if i - i_best >= params.restart_after:
            w = w_best.copy()
            slnr_cur = slnr_best
            i_best = i
        temperature = params.t_scale * (1.0 - i / params.iterations)

        w_new = w + params.step_scale * rng.standard_normal(n)
        if params.sign_mode == "non-negative":
            w_new = np.abs(w_new)

        try:
            slnr_new = evaluate_slnr(backend, w_new, objective)
        except physics.BiasRangeError:
            rejected += 1
            cur_tr[i] = slnr_cur
            best_tr[i] = slnr_best
            continue

        prop_tr[i] = slnr_new
        if slnr_new > slnr_best:
            w = w_new
            w_best = w_new.copy()
            slnr_cur = slnr_new
            slnr_best = slnr_new
            i_best = i
            acc_tr[i] = True
        else:
            if params.accept_db:
                a_cur, a_new = slnr_cur, slnr_new
            else:
                a_cur, a_new = 10.0 ** (slnr_cur / 10.0), 10.0 ** (slnr_new / 10.0)
            p = acceptance_probability(a_cur, a_new, temperature, params.boltzmann)
            if p >= rng.random():
                w = w_new
                slnr_cur = slnr_new
                acc_tr[i] = True
        cur_tr[i] = slnr_cur
        best_tr[i] = slnr_best

    return SaResult(
        w_best=w_best,
        slnr_best=slnr_best,
        slnr_init=slnr_init,
        rejected=rejected,
        trace={
            "proposal": prop_tr,
            "current": cur_tr,
            "best": best_tr,
            "accepted": acc_tr,
        },
    )


# ---------------------------------------------------------------------------
# lookup table
# ---------------------------------------------------------------------------


@dataclass
class TableEntry:
    beams: tuple
    nulls: tuple
    slnr_db: float
    w: np.ndarray
    fingerprint: str

    @property
    def key(self):
        return (self.beams, self.nulls)


def _entry_key(beams, nulls):
    return (tuple(sorted(float(b) for b in beams)), tuple(sorted(float(n) for n in nulls)))


class LookupTable:
    """Solved objectives indexed by their sorted direction sets."""

    def __init__(self, entries=None):
        self.entries = {}
        for e in entries or []:
            self.insert(e)

    def __len__(self):
        return len(self.entries)

    def insert(self, entry):
        """Store an entry; an existing key only yields to a higher SLNR."""
        key = entry.key
        old = self.entries.get(key)
        if old is None or entry.slnr_db > old.slnr_db:
            self.entries[key] = entry
            return True
        return False

    def exact(self, beams, nulls):
        return self.entries.get(_entry_key(beams, nulls))

    def lookup(self, beams):
        """Best warm-start for a beam request.

        Among entries whose beam set is a subset of the request, prefer
        the largest beam set, then the highest SLNR.  None when nothing
        is contained in the request.
        """
        want = set(float(b) for b in beams)
        best = None
        for e in self.entries.values():
            if not set(e.beams) <= want:
                continue
            if best is None or (len(e.beams), e.slnr_db) > (len(best.beams), best.slnr_db):
                best = e
        return best

    def save(self, path):
        """One JSON object per line; floats keep full precision via repr."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps({"tag": TABLE_TAG, "version": TABLE_VERSION}) + "\n")
            for key in sorted(self.entries):
                e = self.entries[key]
                fh.write(
                    json.dumps(
                        {
                            "beams": list(e.beams),
                            "nulls": list(e.nulls),
                            "slnr_db": e.slnr_db,
                            "w": [float(v) for v in e.w],
                            "fingerprint": e.fingerprint,
                        }
                    )
                    + "\n"
                )

    @classmethod
    def load(cls, path, expect_fingerprint=None):
        """Returns (table, n_skipped); mismatched fingerprints are skipped."""
        table = cls()
        skipped = 0
        with open(path, "r", encoding="utf-8") as fh:
            head = fh.readline()
            try:
                meta = json.loads(head)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}: not a lookup table: {exc}") from exc
            if meta.get("tag") != TABLE_TAG or meta.get("version") != TABLE_VERSION:
                raise ValueError(f"{path}: not a {TABLE_TAG} v{TABLE_VERSION} file")
            for lineno, line in enumerate(fh, start=2):
                if not line.strip():
                    continue
                try:
                    d = json.loads(line)
                    entry = TableEntry(
                        beams=tuple(sorted(float(b) for b in d["beams"])),
                        nulls=tuple(sorted(float(n) for n in d["nulls"])),
                        slnr_db=float(d["slnr_db"]),
                        w=np.asarray(d["w"], dtype=np.float64),
                        fingerprint=str(d["fingerprint"]),
                    )
                except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                    raise ValueError(f"{path}:{lineno}: bad table entry: {exc}") from exc
                if expect_fingerprint is not None and entry.fingerprint != expect_fingerprint:
                    skipped += 1
                    continue
                table.insert(entry)
        return table, skipped


def scan_dataset_for_beams(ds, beams, grid):
    """Row of the dataset with the highest interpolated power at any
    requested beam; the cold-start seed for annealing."""
    if ds.n_angles != grid.n_angles:
        raise ValueError("dataset angle count does not match the grid")
    p = ds.p.astype(np.float64)
    best_val = -math.inf
    best_row = 0
    for theta in beams:
        i = grid.fractional_index(theta)
        i0 = int(i)
        if i0 >= grid.n_angles - 1:
            col = p[:, -1]
        else:
            frac = i - i0
            col = (1.0 - frac) * p[:, i0] + frac * p[:, i0 + 1]
        row = int(np.argmax(col))
        if col[row] > best_val:
            best_val = float(col[row])
            best_row = row
    return ds.w[best_row].astype(np.float64), best_val


@dataclass
class AdaptiveResult:
    w: np.ndarray
    slnr_db: float
    path: str                     # "exact", "warm" or "cold"
    entries_added: int
    sa_runs: list = field(default_factory=list)  # (beams, nulls, slnr) per stage


def adaptive_optimize(table, backend, objective, params, ds=None, rng=None, progress=None):
    """Build up the requested objective beam by beam, reusing the table.

    An exact hit returns the stored solution without annealing.  A
    partial hit (largest stored beam subset) seeds the walk and keeps
    the entry's null set.  With no hit at all the dataset supplies the
    strongest stored sample as the seed.  Every annealing stage inserts
    its solution back into the table.
    """
    objective.validate_grid(backend.grid)
    if rng is None:
        rng = np.random.default_rng(params.seed)

    hit = table.exact(objective.beams, objective.nulls)
    if hit is not None:
        if progress is not None:
            progress(f"exact table hit {hit.key}, no annealing")
        return AdaptiveResult(
            w=hit.w.copy(), slnr_db=hit.slnr_db, path="exact", entries_added=0
        )

    hit = table.lookup(objective.beams)
    if hit is not None:
        w = hit.w.copy()
        have_beams = list(hit.beams)
        have_nulls = list(hit.nulls)
        path = "warm"
        if progress is not None:
            progress(f"warm start from entry beams={hit.beams} nulls={hit.nulls}")
    else:
        if ds is None:
            raise ValueError("cold start requires a dataset to scan for a seed")
        if ds.fingerprint != backend.fingerprint:
            raise ValueError("dataset fingerprint does not match the backend")
        w, seed_power = scan_dataset_for_beams(ds, objective.beams, backend.grid)
        have_beams = []
        have_nulls = []
        path = "cold"
        if progress is not None:
            progress(f"cold start: dataset seed at {seed_power:.2f} dB")

    added = 0
    sa_runs = []
    result_slnr = None

    for theta in objective.beams:
        if theta in have_beams:
            continue
        have_beams.append(theta)
        stage = Objective(tuple(have_beams), tuple(have_nulls), objective.noise_var)
        res = sa_optimize(backend, stage, params, w_init=w, rng=rng)
        w = res.w_best
        result_slnr = res.slnr_best
        added += int(
            table.insert(
                TableEntry(
                    beams=_entry_key(have_beams, ())[0],
                    nulls=_entry_key((), have_nulls)[1],
                    slnr_db=res.slnr_best,
                    w=w.copy(),
                    fingerprint=backend.fingerprint,
                )
            )
        )
        sa_runs.append((tuple(have_beams), tuple(have_nulls), res.slnr_best))
        if progress is not None:
            progress(
                f"stage beams={have_beams} nulls={have_nulls}: "
                f"SLNR {res.slnr_best:.2f} dB ({res.rejected} rejected)"
            )

    new_nulls = [t for t in objective.nulls if t not in have_nulls]
    if new_nulls:
        have_nulls.extend(new_nulls)
        stage = Objective(tuple(have_beams), tuple(have_nulls), objective.noise_var)
        res = sa_optimize(backend, stage, params, w_init=w, rng=rng)
        w = res.w_best
        result_slnr = res.slnr_best
        added += int(
            table.insert(
                TableEntry(
                    beams=_entry_key(have_beams, ())[0],
                    nulls=_entry_key((), have_nulls)[1],
                    slnr_db=res.slnr_best,
                    w=w.copy(),
                    fingerprint=backend.fingerprint,
                )
            )
        )
        sa_runs.append((tuple(have_beams), tuple(have_nulls), res.slnr_best))
        if progress is not None:
            progress(
                f"stage beams={have_beams} nulls={have_nulls}: "
                f"SLNR {res.slnr_best:.2f} dB ({res.rejected} rejected)"
            )

    if result_slnr is None:
        # Warm entry already covered every requested direction; report the
        # stored amplitudes under the objective actually asked for.
        result_slnr = evaluate_slnr(backend, w, objective)

    return AdaptiveResult(
        w=w, slnr_db=result_slnr, path=path, entries_added=added, sa_runs=sa_runs
    )
