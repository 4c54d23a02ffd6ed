"""Training-set generation and storage for the pattern surrogate.

Candidate mode amplitudes follow a two-tier prior: every mode gets a
small magnitude from |N(0, sigma_floor^2)| and a random subset (size
uniform on 1..N) is overwritten with |N(0, sigma_boost^2)|.  Candidates
whose rectified bias profile leaves the admissible voltage window are
redrawn; survivors are paired with their exact radiation pattern.

Samples are stored as float32, and candidates are quantized to float32
before the bias check, so a stored sample re-checked after a round trip
can never flip the bound test.
"""

from dataclasses import dataclass

import numpy as np

from . import physics

FORMAT_TAG = "wcris-dataset"
FORMAT_VERSION = 1

# Abort threshold: if fewer than one in a thousand candidates survives
# the bias check over a full window, the prior and the bounds are
# incompatible and grinding on would take hours.
ABORT_WINDOW = 10_000
ABORT_RATE = 1e-3


@dataclass
class ScalingSpec:
    """Global normalization frozen at dataset-preparation time."""

    w_hi: float
    p_min: float
    p_max: float

    def scale_w(self, w):
        """Mode amplitudes (all >= 0) to [0, 1] by the global maximum."""
        return np.asarray(w, dtype=np.float64) / self.w_hi

    def unscale_w(self, w):
        return np.asarray(w, dtype=np.float64) * self.w_hi

    def scale_p(self, p):
        """Pattern dB values to [-1, 1] over the global range."""
        p = np.asarray(p, dtype=np.float64)
        return 2.0 * (p - self.p_min) / (self.p_max - self.p_min) - 1.0

    def unscale_p(self, p):
        p = np.asarray(p, dtype=np.float64)
        return (p + 1.0) * 0.5 * (self.p_max - self.p_min) + self.p_min


@dataclass
class Dataset:
    """Aligned amplitude/pattern sample matrices plus provenance."""

    w: np.ndarray            # (count, num_modes) float32, volts
    p: np.ndarray            # (count, n_angles) float32, dB
    fingerprint: str         # physics fingerprint the patterns came from
    seed: int
    sigma_floor: float
    sigma_boost: float
    offset: float            # DC bias offset used during generation, V
    rejections: int          # candidates redrawn due to the bias bound

    @property
    def count(self):
        return self.w.shape[0]

    @property
    def num_modes(self):
        return self.w.shape[1]

    @property
    def n_angles(self):
        return self.p.shape[1]


def draw_candidate(rng, num_modes, sigma_floor=0.008, sigma_boost=0.8):
    """One amplitude vector from the two-tier absolute-normal prior."""
    w = np.abs(rng.normal(0.0, sigma_floor, num_modes))
    k = int(rng.integers(1, num_modes + 1))
    boosted = rng.choice(num_modes, size=k, replace=False)
    w[boosted] = np.abs(rng.normal(0.0, sigma_boost, k))
    return w


def sample_rng(seed, index):
    """The independent RNG stream owned by sample `index`.

    Streams are keyed by (seed, index), so regenerating any single
    sample, in any order or in parallel, is bit-identical to the
    sequential run.
    """
    return np.random.default_rng([seed, index])


def generate_dataset(
    geom,
    cell,
    setup,
    count,
    seed,
    sigma_floor=0.008,
    sigma_boost=0.8,
    offset=physics.BIAS_LO_V,
    bias_lo=physics.BIAS_LO_V,
    bias_hi=physics.BIAS_HI_V,
    progress=None,
):
    """Draw `count` accepted samples and their exact patterns.

    progress, when given, is called as progress(done, total) roughly
    every percent of the way.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    w_rows = np.empty((count, geom.num_modes), dtype=np.float32)
    p_rows = np.empty((count, setup.n_angles), dtype=np.float32)
    rejections = 0
    window_draws = 0
    window_accepts = 0
    step = max(1, count // 100)

    for i in range(count):
        rng = sample_rng(seed, i)
        while True:
            cand = draw_candidate(rng, geom.num_modes, sigma_floor, sigma_boost)
            # Quantize to storage precision before the physics check.
            cand = cand.astype(np.float32).astype(np.float64)
            bsw = physics.BswConfig(offset, cand)
            profile = physics.bias_profile(geom, bsw)
            window_draws += 1
            if physics.check_bias_bounds(profile, bias_lo, bias_hi):
                window_accepts += 1
                break
            rejections += 1
            if window_draws >= ABORT_WINDOW:
                rate = window_accepts / window_draws
                if rate < ABORT_RATE:
                    raise RuntimeError(
                        f"dataset generation stalled: acceptance rate {rate:.2e} "
                        f"over the last {window_draws} draws (accepted {i} of "
                        f"{count}); the amplitude prior and the bias window "
                        f"[{bias_lo}, {bias_hi}] V are incompatible"
                    )
                window_draws = 0
                window_accepts = 0

        w_rows[i] = cand.astype(np.float32)
        p_rows[i] = physics.pattern_for_profile(geom, cell, profile, setup).astype(
            np.float32
        )
        if progress is not None and ((i + 1) % step == 0 or i + 1 == count):
            progress(i + 1, count)

    return Dataset(
        w=w_rows,
        p=p_rows,
        fingerprint=physics.fingerprint(geom, cell, setup),
        seed=seed,
        sigma_floor=sigma_floor,
        sigma_boost=sigma_boost,
        offset=offset,
        rejections=rejections,
    )


def normalize(ds):
    """Scaled training arrays plus the spec that undoes the scaling.

    Amplitudes map to [0, 1] by the global maximum, dB patterns to
    [-1, 1] over the global range; both are float64.
    """
    w = ds.w.astype(np.float64)
    p = ds.p.astype(np.float64)
    w_hi = float(w.max())
    p_min = float(p.min())
    p_max = float(p.max())
    if w_hi <= 0.0:
        raise ValueError("degenerate amplitude range: all samples are zero")
    if p_max <= p_min:
        raise ValueError("degenerate pattern range")
    spec = ScalingSpec(w_hi=w_hi, p_min=p_min, p_max=p_max)
    return spec.scale_w(w), spec.scale_p(p), spec


def save_dataset(ds, path):
    """Text header plus raw little-endian float32 W and P matrices."""
    header = [
        f"{FORMAT_TAG} {FORMAT_VERSION}",
        f"fingerprint {ds.fingerprint}",
        f"count {ds.count}",
        f"num_modes {ds.num_modes}",
        f"n_angles {ds.n_angles}",
        f"seed {ds.seed}",
        f"sigma_floor {ds.sigma_floor!r}",
        f"sigma_boost {ds.sigma_boost!r}",
        f"offset {ds.offset!r}",
        f"rejections {ds.rejections}",
        # scaling extremes double as an integrity check on the data block
        f"w_hi {float(ds.w.max())!r}",
        f"p_min {float(ds.p.min())!r}",
        f"p_max {float(ds.p.max())!r}",
        "data",
    ]
    with open(path, "wb") as fh:
        fh.write("\n".join(header).encode("ascii") + b"\n")
        fh.write(np.ascontiguousarray(ds.w, dtype="<f4").tobytes())
        fh.write(np.ascontiguousarray(ds.p, dtype="<f4").tobytes())


def load_dataset(path, expect_fingerprint=None):
    """Inverse of save_dataset, with format and size validation."""
    with open(path, "rb") as fh:
        blob = fh.read()
    nl = blob.find(b"\n")
    first = blob[:nl].decode("ascii", errors="replace") if nl > 0 else ""
    if first.split() != [FORMAT_TAG, str(FORMAT_VERSION)]:
        raise ValueError(f"{path}: not a {FORMAT_TAG} v{FORMAT_VERSION} file")

    fields = {}
    pos = nl + 1
    while True:
        nl = blob.find(b"\n", pos)
        if nl < 0:
            raise ValueError(f"{path}: truncated header")
        line = blob[pos:nl].decode("ascii")
        pos = nl + 1
        if line == "data":
            break
        key, _, value = line.partition(" ")
        if not value:
            raise ValueError(f"{path}: malformed header line {line!r}")
        fields[key] = value

    try:
        count = int(fields["count"])
        num_modes = int(fields["num_modes"])
        n_angles = int(fields["n_angles"])
        meta = dict(
            fingerprint=fields["fingerprint"],
            seed=int(fields["seed"]),
            sigma_floor=float(fields["sigma_floor"]),
            sigma_boost=float(fields["sigma_boost"]),
            offset=float(fields["offset"]),
            rejections=int(fields["rejections"]),
        )
    except KeyError as exc:
        raise ValueError(f"{path}: missing header field {exc}") from exc

    if expect_fingerprint is not None and meta["fingerprint"] != expect_fingerprint:
        raise ValueError(
            f"{path}: dataset fingerprint {meta['fingerprint']} does not match "
            f"the requested physics {expect_fingerprint}"
        )

    body = blob[pos:]
    n_w = count * num_modes
    n_p = count * n_angles
    if len(body) != 4 * (n_w + n_p):
        raise ValueError(
            f"{path}: expected {4 * (n_w + n_p)} data bytes, found {len(body)}"
        )
    w = np.frombuffer(body[: 4 * n_w], dtype="<f4").reshape(count, num_modes)
    p = np.frombuffer(body[4 * n_w :], dtype="<f4").reshape(count, n_angles)
    for key, arr_val in (
        ("w_hi", float(w.max())),
        ("p_min", float(p.min())),
        ("p_max", float(p.max())),
    ):
        if key in fields and float(fields[key]) != arr_val:
            raise ValueError(
                f"{path}: header {key} {fields[key]} disagrees with the data "
                f"block ({arr_val!r}); file is corrupt"
            )
    return Dataset(w=w.copy(), p=p.copy(), **meta)


def export_csv(ds, path):
    """Flat CSV export: one row per sample, amplitudes then pattern dB.

    %.9g keeps every float32 exactly; decimal separator is always a dot.
    """
    cols = [f"W_{i + 1}" for i in range(ds.num_modes)]
    cols += [f"P_{i + 1}" for i in range(ds.n_angles)]
    data = np.hstack([ds.w.astype(np.float64), ds.p.astype(np.float64)])
    np.savetxt(
        path,
        data,
        fmt="%.9g",
        delimiter=",",
        header=",".join(cols),
        comments="",
    )
