"""Causality fuzzing tools for the interleaved entropy model.

Two complementary probes:

* :func:`check_slice_wiring` spies on ``estimate_params`` during a forward
  pass and verifies the prior sets follow the interleaved schedule: slice
  ``n`` of a view sees exactly its own decoded slices ``0 .. n-1``, fused
  prior groups ``0 .. n``, and the other view's decoded slices up to index
  ``q`` with ``q = n - 1`` for the left view and ``q = n`` for the right.
* :func:`check_decode_prefix` decodes two scripted symbol streams that agree
  up to a cut position in the coding order and differ afterwards; every
  slice and every (mu, sigma) pair at or before the cut must come out
  bitwise identical.  A decoder that peeked past the cut would diverge.

Both return a list of violation strings; empty means causal.
"""

import numpy as np
import torch

from stereocodec.disparity import LEFT, RIGHT
from stereocodec.entropy import InterleavedEntropyModel, coding_order, slice_channels


def small_model(num_slices: int, seed: int) -> InterleavedEntropyModel:
    torch.manual_seed(seed)
    model = InterleavedEntropyModel(
        latent_channels=8, num_slices=num_slices, hyper_channels=4,
        phi_channels=8, align_channels=4, max_shift=2)
    model.eval()
    return model


def check_slice_wiring(model: InterleavedEntropyModel, latent_hw=(4, 4),
                       seed: int = 0) -> list[str]:
    rng = np.random.default_rng(seed)
    y = {v: torch.from_numpy(rng.standard_normal(
        (1, model.latent_channels, *latent_hw)).astype(np.float32))
        for v in (LEFT, RIGHT)}
    records = []
    original = model.estimate_params

    def spy(view, n, intra_slices, phi_slices, cross_slices, mode=None):
        records.append((view, n,
                        [t.detach().clone() for t in intra_slices],
                        len(phi_slices),
                        [t.detach().clone() for t in cross_slices]))
        return original(view, n, intra_slices, phi_slices, cross_slices, mode)

    model.estimate_params = spy
    try:
        with torch.no_grad():
            result = model(y)
    finally:
        del model.estimate_params  # restore the bound method

    violations = []
    if [(r[0], r[1]) for r in records] != coding_order(model.num_slices):
        violations.append("slices were not visited in the interleaved order")
    decoded = {v: slice_channels(result.y_hat[v], model.num_slices)
               for v in (LEFT, RIGHT)}
    for view, n, intra, phi_count, cross in records:
        other = RIGHT if view == LEFT else LEFT
        q = n - 1 if view == LEFT else n
        if len(intra) != n:
            violations.append(f"({view},{n}): {len(intra)} intra priors, want {n}")
        if phi_count != n + 1:
            violations.append(f"({view},{n}): {phi_count} prior groups, want {n + 1}")
        if len(cross) != q + 1:
            violations.append(f"({view},{n}): {len(cross)} cross priors, want {q + 1}")
        for k, t in enumerate(intra):
            if not torch.equal(t, decoded[view][k]):
                violations.append(f"({view},{n}): intra prior {k} is not decoded slice {k}")
        for k, t in enumerate(cross):
            if not torch.equal(t, decoded[other][k]):
                violations.append(f"({view},{n}): cross prior {k} is not the "
                                  f"other view's decoded slice {k}")
    return violations


class ScriptedCoder:
    """Stub stream reader returning pre-planned symbol arrays in order."""

    def __init__(self, plan: list[np.ndarray]):
        self.plan = [np.asarray(p, dtype=np.int32) for p in plan]
        self.cursor = 0

    def _next(self, count: int) -> np.ndarray:
        arr = self.plan[self.cursor]
        assert arr.size == count, f"plan step {self.cursor}: {arr.size} != {count}"
        self.cursor += 1
        return arr

    def read_indexed(self, count, pmf, indexes, lo):
        return self._next(count)

    def read_gaussian(self, count, sigma):
        return self._next(count)


def _capture_params(model):
    captured = {}
    handles = []
    for key, est in model.estimators.items():
        def hook(mod, args, out, key=key):
            captured[key] = (out[0].detach().clone(), out[1].detach().clone())
        handles.append(est.register_forward_hook(hook))
    return captured, handles


def check_decode_prefix(model: InterleavedEntropyModel, latent_hw=(4, 4),
                        seed: int = 0) -> list[str]:
    rng = np.random.default_rng(seed)
    h, w = latent_hw
    zh, zw = (h + 3) // 4, (w + 3) // 4
    z_count = model.hyper.analysis[-1].out_channels * zh * zw
    slice_count = model.slice_width * h * w
    order = coding_order(model.num_slices)
    cut = int(rng.integers(0, len(order)))

    z_plan = [rng.integers(-3, 4, z_count) for _ in (LEFT, RIGHT)]
    base_slices = [rng.integers(-5, 6, slice_count) for _ in order]
    variant_slices = [s.copy() for s in base_slices]
    for i in range(cut + 1, len(order)):
        variant_slices[i] = rng.integers(-5, 6, slice_count)

    outputs = []
    for plan in (base_slices, variant_slices):
        captured, handles = _capture_params(model)
        try:
            with torch.no_grad():
                y_hat = model.decode(ScriptedCoder(z_plan + plan), latent_hw)
        finally:
            for hd in handles:
                hd.remove()
        slices = {v: slice_channels(y_hat[v], model.num_slices)
                  for v in (LEFT, RIGHT)}
        outputs.append((captured, slices))

    violations = []
    (cap_a, sl_a), (cap_b, sl_b) = outputs
    for i, (view, n) in enumerate(order[: cut + 1]):
        key = f"{view}{n}"
        if not torch.equal(sl_a[view][n], sl_b[view][n]):
            violations.append(f"cut {cut}: decoded slice ({view},{n}) changed")
        for part, name in zip(range(2), ("mu", "sigma")):
            if not torch.equal(cap_a[key][part], cap_b[key][part]):
                violations.append(f"cut {cut}: {name} of ({view},{n}) changed")
    return violations
